"""
Torus Field Module
Spectral calculus for periodic fields on T^3 = [0,1)^3 with the flat metric
"""

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ConfigError, DomainError, NotMeanZero

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
MEAN_ZERO_TOLERANCE = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform N^3 grid on the unit torus"""

    n_per_axis: int

    def __post_init__(self):
        if self.n_per_axis < 4 or self.n_per_axis % 2:
            raise ConfigError(f"grid resolution must be even and at least 4, got {self.n_per_axis}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_per_axis

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n_per_axis,) * 3

    @property
    def n_points(self) -> int:
        return self.n_per_axis ** 3

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Grid coordinates x1, x2, x3 with ij indexing"""
        axis = np.arange(self.n_per_axis) * self.spacing
        return tuple(np.meshgrid(axis, axis, axis, indexing='ij'))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT order; the Nyquist entry is -N/2"""
        return np.fft.fftfreq(self.n_per_axis, d=1.0 / self.n_per_axis)

    @cached_property
    def first_derivative_multipliers(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.wavenumbers.copy()
        k[self.n_per_axis // 2] = 0.0
        multiplier = 1j * TWO_PI * k
        return (multiplier[:, None, None], multiplier[None, :, None], multiplier[None, None, :])

    @cached_property
    def second_derivative_multipliers(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        multiplier = -(TWO_PI * self.wavenumbers) ** 2
        return (multiplier[:, None, None], multiplier[None, :, None], multiplier[None, None, :])

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        """-4 pi^2 |k|^2 on the full spectral grid"""
        k1, k2, k3 = self.second_derivative_multipliers
        return k1 + k2 + k3

    def refined(self, factor: int = 2) -> 'GridSpec':
        return GridSpec(self.n_per_axis * factor)


def _freeze(values: np.ndarray) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.float64)
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"scalar field shape {self.values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, 'values', _freeze(self.values))

    @cached_property
    def spectral(self) -> np.ndarray:
        """Fourier coefficients normalized so that the zero mode is the mean"""
        return np.fft.fftn(self.values) / self.grid.n_points

    @classmethod
    def from_spectral(cls, grid: GridSpec, coefficients: np.ndarray) -> 'ScalarField':
        return cls(grid, np.real(np.fft.ifftn(coefficients * grid.n_points)))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> 'ScalarField':
        return cls(grid, np.full(grid.shape, float(value)))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __add__(self, other: Union['ScalarField', float]) -> 'ScalarField':
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values + other_values)

    def __sub__(self, other: Union['ScalarField', float]) -> 'ScalarField':
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values - other_values)

    def __mul__(self, other: Union['ScalarField', float]) -> 'ScalarField':
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values * other_values)

    __rmul__ = __mul__

    def __neg__(self) -> 'ScalarField':
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class OneFormField:
    """omega = sum_j omega_j dx_j, components stacked along axis 0"""

    grid: GridSpec
    components: np.ndarray

    def __post_init__(self):
        if self.components.shape != (3,) + self.grid.shape:
            raise ValueError(f"1-form shape {self.components.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, 'components', _freeze(self.components))

    @classmethod
    def coordinate(cls, grid: GridSpec, axis: int = 1) -> 'OneFormField':
        """The constant form dx_axis"""
        components = np.zeros((3,) + grid.shape)
        components[axis - 1] = 1.0
        return cls(grid, components)

    def component(self, index: int) -> ScalarField:
        return ScalarField(self.grid, self.components[index])

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.components ** 2, axis=0))

    def __add__(self, other: 'OneFormField') -> 'OneFormField':
        return OneFormField(self.grid, self.components + other.components)

    def __sub__(self, other: 'OneFormField') -> 'OneFormField':
        return OneFormField(self.grid, self.components - other.components)


@dataclass(frozen=True, eq=False)
class TwoTensorField:
    """T = sum T_ij dx_i (x) dx_j, components indexed [i, j]"""

    grid: GridSpec
    components: np.ndarray

    def __post_init__(self):
        if self.components.shape != (3, 3) + self.grid.shape:
            raise ValueError(f"2-tensor shape {self.components.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, 'components', _freeze(self.components))

    def pointwise_norm(self) -> np.ndarray:
        """Frobenius norm"""
        return np.sqrt(np.sum(self.components ** 2, axis=(0, 1)))

    def trace(self) -> ScalarField:
        return ScalarField(self.grid, np.einsum('ii...->...', self.components))

    def __sub__(self, other: 'TwoTensorField') -> 'TwoTensorField':
        return TwoTensorField(self.grid, self.components - other.components)


AnyField = Union[ScalarField, OneFormField, TwoTensorField]


# ----------------------------------------------------------------------
# derivatives
# ----------------------------------------------------------------------
def spectral_derivative(u: ScalarField, axis: int) -> ScalarField:
    """d u / d x_axis of the trigonometric interpolant, Nyquist derivative set to zero"""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    multiplier = u.grid.first_derivative_multipliers[axis - 1]
    return ScalarField.from_spectral(u.grid, u.spectral * multiplier)


def gradient(u: ScalarField) -> OneFormField:
    multipliers = u.grid.first_derivative_multipliers
    components = np.stack([np.real(np.fft.ifftn(u.spectral * m * u.grid.n_points)) for m in multipliers])
    return OneFormField(u.grid, components)


def hessian(u: ScalarField) -> TwoTensorField:
    """
    Flat Hessian d_i d_j u

    Mixed entries are products of first-derivative multipliers; diagonal entries use
    -(2 pi k_i)^2 so that their trace is exactly the flat Laplacian symbol.
    """
    grid = u.grid
    first = grid.first_derivative_multipliers
    second = grid.second_derivative_multipliers
    components = np.empty((3, 3) + grid.shape)
    for i in range(3):
        for j in range(i, 3):
            multiplier = second[i] if i == j else first[i] * first[j]
            components[i, j] = np.real(np.fft.ifftn(u.spectral * multiplier * grid.n_points))
            components[j, i] = components[i, j]
    return TwoTensorField(grid, components)


def laplacian_flat(u: ScalarField) -> ScalarField:
    return ScalarField.from_spectral(u.grid, u.spectral * u.grid.laplacian_symbol)


def exterior_derivative_one_form(omega: OneFormField) -> np.ndarray:
    """Components (d omega)_ij = d_i omega_j - d_j omega_i, shape (3, 3, N, N, N)"""
    derivatives = np.stack([gradient(omega.component(j)).components for j in range(3)])
    # derivatives[j, i] = d_i omega_j
    return np.transpose(derivatives, (1, 0, 2, 3, 4)) - derivatives


# ----------------------------------------------------------------------
# norms
# ----------------------------------------------------------------------
def pointwise_flat_norm(f: AnyField) -> np.ndarray:
    if isinstance(f, ScalarField):
        return np.abs(f.values)
    return f.pointwise_norm()


def lp_norm(f: AnyField, p: float, metric: str = 'flat') -> float:
    """
    (N^-3 sum |f(x)|^p)^(1/p) with Euclidean / Frobenius pointwise norms

    Args:
        f: scalar field, 1-form or 2-tensor
        p: exponent, at least 1
        metric: only 'flat'; weighted norms live in metric_field
    """
    if metric != 'flat':
        raise ValueError("lp_norm handles the flat metric only; use metric_field.lp_norm_g")
    if p < 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    pointwise = pointwise_flat_norm(f)
    return float(np.mean(pointwise ** p) ** (1.0 / p))


def sup_norm(f: AnyField) -> float:
    """Grid maximum; a lower bound of the true supremum"""
    return float(np.max(pointwise_flat_norm(f)))


def sobolev_norm_flat(u: ScalarField, k: int, p: float) -> float:
    """sum_{i <= k} ||nabla^i u||_{L^p}"""
    if k not in (0, 1, 2):
        raise ValueError(f"Sobolev order must be 0, 1 or 2, got {k}")
    total = lp_norm(u, p)
    if k >= 1:
        total += lp_norm(gradient(u), p)
    if k == 2:
        total += lp_norm(hessian(u), p)
    return total


# ----------------------------------------------------------------------
# mean-zero calculus
# ----------------------------------------------------------------------
def mean_zero_project(u: ScalarField) -> ScalarField:
    return ScalarField(u.grid, u.values - np.mean(u.values))


def inverse_laplacian_flat(u: ScalarField) -> ScalarField:
    """Divide every nonzero Fourier mode by -4 pi^2 |k|^2; the zero mode stays zero"""
    scale = lp_norm(u, 2)
    if abs(u.mean()) > MEAN_ZERO_TOLERANCE * max(scale, np.finfo(float).tiny):
        raise NotMeanZero(f"field mean {u.mean():.3e} exceeds tolerance relative to L2 norm {scale:.3e}")
    symbol = u.grid.laplacian_symbol.copy()
    symbol[0, 0, 0] = 1.0
    coefficients = u.spectral / symbol
    coefficients[0, 0, 0] = 0.0
    return ScalarField.from_spectral(u.grid, coefficients)


def smallest_flat_eigenvalue(grid: GridSpec) -> float:
    symbol = -grid.laplacian_symbol
    return float(np.min(symbol[symbol > 0]))


def refine_field(u: ScalarField, factor: int = 2) -> ScalarField:
    """Resample the trigonometric interpolant on a finer grid; the Nyquist mode is dropped"""
    fine = u.grid.refined(factor)
    n = u.grid.n_per_axis
    k = u.grid.wavenumbers.astype(int)
    keep = np.abs(k) < n // 2
    target = np.mod(k[keep], fine.n_per_axis)
    coefficients = np.zeros(fine.shape, dtype=complex)
    coefficients[np.ix_(target, target, target)] = u.spectral[np.ix_(keep, keep, keep)]
    return ScalarField.from_spectral(fine, coefficients)


# ----------------------------------------------------------------------
# test-function families
# ----------------------------------------------------------------------
def single_mode(grid: GridSpec, wavevector: Sequence[int] = (1, 0, 0), phase: float = 0.0,
                amplitude: float = 1.0) -> ScalarField:
    """amplitude * sin(2 pi k.x + phase)"""
    x1, x2, x3 = grid.coordinates
    k1, k2, k3 = wavevector
    return ScalarField(grid, amplitude * np.sin(TWO_PI * (k1 * x1 + k2 * x2 + k3 * x3) + phase))


def random_band_limited(grid: GridSpec, seed: int, top_frequency: Optional[int] = None,
                        mean_zero: bool = True, decay: float = 1.0) -> ScalarField:
    """
    Seeded random field supported on modes |k_i| <= top_frequency (default N/4), unit L2 norm

    Args:
        decay: coefficient amplitudes fall off like (1 + |k|^2)^(-decay)
    """
    top = grid.n_per_axis // 4 if top_frequency is None else int(top_frequency)
    if top >= grid.n_per_axis // 2:
        raise ValueError(f"top frequency {top} reaches the Nyquist mode of an N={grid.n_per_axis} grid")
    rng = np.random.default_rng(seed)
    k = grid.wavenumbers
    k1, k2, k3 = np.meshgrid(k, k, k, indexing='ij')
    support = (np.abs(k1) <= top) & (np.abs(k2) <= top) & (np.abs(k3) <= top)
    weights = (1.0 + k1 ** 2 + k2 ** 2 + k3 ** 2) ** (-decay)
    coefficients = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * weights * support
    if mean_zero:
        coefficients[0, 0, 0] = 0.0
    field = ScalarField.from_spectral(grid, coefficients)
    norm = lp_norm(field, 2)
    if norm == 0.0:
        return field
    return ScalarField(grid, field.values / norm)


def low_mode_product(grid: GridSpec, seed: int, max_mode: int = 2) -> ScalarField:
    """Product of three seeded one-dimensional trigonometric factors"""
    rng = np.random.default_rng(seed)
    values = np.ones(grid.shape)
    for axis, x in enumerate(grid.coordinates):
        mode = int(rng.integers(1, max_mode + 1))
        phase = float(rng.uniform(0.0, TWO_PI))
        values = values * (1.0 + 0.5 * np.cos(TWO_PI * mode * x + phase))
    return ScalarField(grid, values)


def family_case(grid: GridSpec, case_index: int, seed: int, mean_zero: bool = True) -> Tuple[str, ScalarField]:
    """
    Deterministic case generator cycling over single modes, random band-limited fields and
    low-mode products

    Returns:
        (case id, field)
    """
    family = case_index % 3
    case_seed = seed * 100003 + case_index
    if family == 0:
        rng = np.random.default_rng(case_seed)
        limit = min(3, grid.n_per_axis // 2 - 1)
        wavevector = tuple(int(v) for v in rng.integers(-limit, limit + 1, size=3))
        if wavevector == (0, 0, 0):
            wavevector = (1, 0, 0)
        phase = float(rng.uniform(0.0, TWO_PI))
        return f"mode{wavevector}-{case_index}", single_mode(grid, wavevector, phase)
    if family == 1:
        return f"random-{case_seed}", random_band_limited(grid, case_seed, mean_zero=mean_zero)
    field = low_mode_product(grid, case_seed)
    if mean_zero:
        field = mean_zero_project(field)
    return f"product-{case_seed}", field


# ----------------------------------------------------------------------
# snapshots
# ----------------------------------------------------------------------
def write_field_snapshot(path: Union[str, Path], f: AnyField, kind: str, seed: Optional[int] = None,
                         extra: Optional[Dict] = None) -> Tuple[Path, Path]:
    """
    Flat little-endian float64 dump in row-major order (x1 slowest, x3 fastest)
    plus a JSON header next to it
    """
    if isinstance(f, ScalarField):
        data = f.values
    else:
        data = f.components.reshape((-1,) + f.grid.shape)
    return write_raw_snapshot(path, data, f.grid, kind, seed, extra)


def write_raw_snapshot(path: Union[str, Path], data: np.ndarray, grid: GridSpec, kind: str,
                       seed: Optional[int] = None, extra: Optional[Dict] = None) -> Tuple[Path, Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    components = 1 if data.ndim == 3 else data.shape[0]
    path.write_bytes(np.ascontiguousarray(data, dtype='<f8').tobytes(order='C'))
    header = {
        'n_per_axis': grid.n_per_axis,
        'field_kind': kind,
        'components': components,
        'dtype': 'float64',
        'byte_order': 'little',
        'axis_order': ['component', 'x1', 'x2', 'x3'] if components > 1 else ['x1', 'x2', 'x3'],
        'seed': seed,
    }
    if extra:
        header.update(extra)
    header_path = path.with_suffix(path.suffix + '.json')
    header_path.write_text(json.dumps(header, indent=2, sort_keys=True))
    logger.info(f"Field snapshot written to {path}")
    return path, header_path


def read_field_snapshot(path: Union[str, Path]) -> Tuple[np.ndarray, Dict]:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + '.json').read_text())
    n = header['n_per_axis']
    shape = (n, n, n) if header['components'] == 1 else (header['components'], n, n, n)
    data = np.frombuffer(path.read_bytes(), dtype='<f8').reshape(shape)
    return data, header
