"""
Metric Field Module
Perturbed Riemannian metrics on T^3: pointwise algebra, Christoffel symbols, Laplace-Beltrami and weighted norms
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from core.errors import ConfigError, DeltaOutOfDomain, DomainError, SingularMetric
from core.torus_field import (TWO_PI, AnyField, GridSpec, OneFormField, ScalarField, TwoTensorField, gradient,
                              hessian, laplacian_flat, write_raw_snapshot)

logger = logging.getLogger(__name__)

FAMILY_KINDS = ('conformal', 'offdiag', 'random_seeded')
COMPONENT_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
COMPONENT_NAMES = ('g11', 'g12', 'g13', 'g22', 'g23', 'g33')
MAX_DELTA = 1.0 / 6.0
# constructed families land at this fraction of the requested C^1 distance
TARGET_FRACTION = 0.9
PROFILE_TOP_MODE = 2
PROFILE_TERMS = 4


def _to_matrix(components: np.ndarray) -> np.ndarray:
    matrix = np.empty((3, 3) + components.shape[1:])
    for index, (i, j) in enumerate(COMPONENT_INDEX):
        matrix[i, j] = components[index]
        matrix[j, i] = components[index]
    return matrix


def _to_components(matrix: np.ndarray) -> np.ndarray:
    return np.stack([matrix[i, j] for i, j in COMPONENT_INDEX])


def _identity_components(shape: Tuple[int, int, int]) -> np.ndarray:
    components = np.zeros((6,) + shape)
    components[0] = components[3] = components[5] = 1.0
    return components


@dataclass(frozen=True, eq=False)
class MetricField:
    """
    Symmetric metric g_ij stored as (g11, g12, g13, g22, g23, g33)

    Positive definiteness is checked on construction through the leading principal minors.
    Families built near the identity also carry the exact deviation g - I; below the float64
    spacing at 1 the stored components lose it, so distances and derivatives read the deviation.
    """

    grid: GridSpec
    components: np.ndarray
    delta_nominal: float = 0.0
    kind: str = 'custom'
    seed: Optional[int] = None
    deviation: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.components.shape != (6,) + self.grid.shape:
            raise ValueError(f"metric shape {self.components.shape} does not match grid {self.grid.shape}")
        components = np.ascontiguousarray(self.components, dtype=np.float64)
        components.flags.writeable = False
        object.__setattr__(self, 'components', components)
        if self.deviation is not None:
            if self.deviation.shape != self.components.shape:
                raise ValueError(f"deviation shape {self.deviation.shape} does not match {self.components.shape}")
            deviation = np.ascontiguousarray(self.deviation, dtype=np.float64)
            deviation.flags.writeable = False
            object.__setattr__(self, 'deviation', deviation)
        self._check_positive_definite()

    @classmethod
    def near_identity(cls, grid: GridSpec, deviation: np.ndarray, **kwargs) -> 'MetricField':
        """g = I + deviation, with the deviation kept at full relative precision"""
        return cls(grid, _identity_components(grid.shape) + deviation, deviation=deviation, **kwargs)

    def _check_positive_definite(self):
        g11, g12, g13, g22, g23, g33 = self.components
        minor2 = g11 * g22 - g12 * g12
        bad = (g11 <= 0) | (minor2 <= 0) | (self.det <= 0)
        if np.any(bad):
            raise SingularMetric(f"metric is not positive definite at {int(np.count_nonzero(bad))} grid points")

    @classmethod
    def flat(cls, grid: GridSpec) -> 'MetricField':
        return cls(grid, _identity_components(grid.shape), kind='flat')

    @classmethod
    def from_matrix(cls, grid: GridSpec, matrix: np.ndarray, **kwargs) -> 'MetricField':
        """Build from a (3, 3, N, N, N) array; only the upper triangle is read"""
        return cls(grid, _to_components(matrix), **kwargs)

    @cached_property
    def matrix(self) -> np.ndarray:
        return _to_matrix(self.components)

    @cached_property
    def det(self) -> np.ndarray:
        g11, g12, g13, g22, g23, g33 = self.components
        return (g11 * (g22 * g33 - g23 * g23) - g12 * (g12 * g33 - g23 * g13)
                + g13 * (g12 * g23 - g22 * g13))

    @cached_property
    def inverse_matrix(self) -> np.ndarray:
        """Pointwise g^ij, shape (3, 3, N, N, N)"""
        if self.is_flat:
            return _to_matrix(_identity_components(self.grid.shape))
        stacked = np.moveaxis(self.matrix, (0, 1), (-2, -1))
        inverse = np.linalg.inv(stacked)
        inverse = 0.5 * (inverse + np.swapaxes(inverse, -1, -2))
        return np.moveaxis(inverse, (-2, -1), (0, 1))

    @cached_property
    def inverse_deviation(self) -> np.ndarray:
        """g^ij - delta^ij as -g^ik (g_kj - delta_kj), shape (3, 3, N, N, N)"""
        return -np.einsum('ik...,kj...->ij...', self.inverse_matrix, _to_matrix(self.deviation_components))

    @cached_property
    def volume_density(self) -> np.ndarray:
        """sqrt(det g)"""
        return np.sqrt(self.det)

    @cached_property
    def deviation_components(self) -> np.ndarray:
        """g_ij - delta_ij in component order"""
        if self.deviation is not None:
            return self.deviation
        return self.components - _identity_components(self.grid.shape)

    @cached_property
    def derivatives(self) -> np.ndarray:
        """dg[a, i, j] = d_a g_ij, shape (3, 3, 3, N, N, N)"""
        if self.is_flat:
            return np.zeros((3, 3, 3) + self.grid.shape)
        per_component = np.stack([gradient(ScalarField(self.grid, c)).components
                                  for c in self.deviation_components])
        # per_component[c, a] = d_a g_c
        return np.moveaxis(_to_matrix(per_component), 2, 0)

    @cached_property
    def is_flat(self) -> bool:
        if self.deviation is not None:
            return not np.any(self.deviation)
        return bool(np.array_equal(self.components, _identity_components(self.grid.shape)))

    def volume(self) -> float:
        return float(np.mean(self.volume_density))


@dataclass(frozen=True, eq=False)
class ChristoffelField:
    """gamma[k, i, j] = Gamma^k_ij"""

    grid: GridSpec
    gamma: np.ndarray

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.gamma)))

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.gamma - np.swapaxes(self.gamma, 1, 2))))


# ----------------------------------------------------------------------
# families
# ----------------------------------------------------------------------
def _low_mode_profile(grid: GridSpec, rng: np.random.Generator) -> np.ndarray:
    """Sum of a few cosine modes with |k_i| <= 2; only the mode choices come from the generator"""
    x1, x2, x3 = grid.coordinates
    profile = np.zeros(grid.shape)
    for _ in range(PROFILE_TERMS):
        k = rng.integers(-PROFILE_TOP_MODE, PROFILE_TOP_MODE + 1, size=3)
        if not np.any(k):
            k[0] = 1
        amplitude = rng.uniform(0.5, 1.0)
        phase = rng.uniform(0.0, TWO_PI)
        profile += amplitude * np.cos(TWO_PI * (k[0] * x1 + k[1] * x2 + k[2] * x3) + phase)
    return profile


def _raw_perturbation(kind: str, grid: GridSpec, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    h = np.zeros((6,) + grid.shape)
    if kind == 'conformal':
        s = _low_mode_profile(grid, rng)
        h[0] = h[3] = h[5] = s
    elif kind == 'offdiag':
        for index in (1, 2, 4):
            h[index] = _low_mode_profile(grid, rng)
    else:
        for index in range(6):
            h[index] = _low_mode_profile(grid, rng)
    return h


def _c1_of_deviation(grid: GridSpec, deviation: np.ndarray) -> Tuple[float, float]:
    """(max |h_ij|, max |d_a h_ij|) over the grid"""
    c0 = float(np.max(np.abs(deviation)))
    c1 = 0.0
    for component in deviation:
        c1 = max(c1, float(np.max(np.abs(gradient(ScalarField(grid, component)).components))))
    return c0, c1


def perturbation_family(delta: float, kind: str, grid: GridSpec, seed: int = 0) -> MetricField:
    """
    Low-frequency metric g = I + s h with measured C^1 distance 0.9 delta

    Args:
        delta: target C^1 distance, 0 <= delta < 1/6
        kind: 'conformal' (h = profile * I), 'offdiag' (off-diagonal bumps) or 'random_seeded'
        grid: sampling grid
        seed: selects the low-mode profiles

    Returns:
        MetricField fully determined by (kind, delta, N, seed)
    """
    if kind not in FAMILY_KINDS:
        raise ConfigError(f"metric family must be one of {FAMILY_KINDS}, got {kind}")
    if not 0.0 <= delta < MAX_DELTA:
        raise DeltaOutOfDomain(f"metric families are defined for 0 <= delta < 1/6, got {delta}")
    identity = _identity_components(grid.shape)
    if delta == 0.0:
        return MetricField(grid, identity, delta_nominal=0.0, kind=kind, seed=seed)

    h = _raw_perturbation(kind, grid, seed)
    c0, c1 = _c1_of_deviation(grid, h)
    scale = TARGET_FRACTION * delta / (c0 + c1)
    metric = MetricField.near_identity(grid, scale * h, delta_nominal=delta, kind=kind, seed=seed)
    logger.debug(f"{kind} metric family at delta={delta:.3e}, seed {seed}: "
                 f"measured C1 distance {measured_c1_distance(metric):.3e}")
    return metric


# ----------------------------------------------------------------------
# distances
# ----------------------------------------------------------------------
def measured_c0_distance(g: MetricField) -> float:
    return float(np.max(np.abs(g.deviation_components)))


def measured_c1_distance(g: MetricField) -> float:
    """Grid proxy for ||g - g_flat||_C1: entrywise max deviation plus entrywise max first derivative"""
    if g.is_flat:
        return 0.0
    return measured_c0_distance(g) + float(np.max(np.abs(g.derivatives)))


def inverse_c0_distance(g: MetricField) -> float:
    return float(np.max(np.abs(g.inverse_deviation)))


def det_field(g: MetricField) -> ScalarField:
    return ScalarField(g.grid, g.det)


def inverse_field(g: MetricField) -> MetricField:
    return MetricField(g.grid, _to_components(g.inverse_matrix), delta_nominal=g.delta_nominal,
                       kind=f"{g.kind}-inverse", seed=g.seed)


# ----------------------------------------------------------------------
# connection and operators
# ----------------------------------------------------------------------
def christoffel_field(g: MetricField) -> ChristoffelField:
    """Gamma^k_ij = 1/2 g^kn (d_i g_jn + d_j g_in - d_n g_ij)"""
    if g.is_flat:
        return ChristoffelField(g.grid, np.zeros((3, 3, 3) + g.grid.shape))
    dg = g.derivatives
    # lowered[n, i, j] = d_i g_jn + d_j g_in - d_n g_ij
    lowered = np.einsum('ijn...->nij...', dg) + np.einsum('jin...->nij...', dg) - dg
    gamma = 0.5 * np.einsum('kn...,nij...->kij...', g.inverse_matrix, lowered)
    return ChristoffelField(g.grid, gamma)


def covariant_hessian(g: MetricField, u: ScalarField,
                      christoffel: Optional[ChristoffelField] = None) -> TwoTensorField:
    """nabla^g du with components d_i d_j u - Gamma^k_ij d_k u"""
    christoffel = christoffel if christoffel is not None else christoffel_field(g)
    du = gradient(u).components
    correction = np.einsum('kij...,k...->ij...', christoffel.gamma, du)
    return TwoTensorField(g.grid, hessian(u).components - correction)


def laplace_beltrami(g: MetricField, u: ScalarField,
                     christoffel: Optional[ChristoffelField] = None) -> ScalarField:
    """
    Delta^g u = g^ij (d_i d_j u - Gamma^k_ij d_k u)

    Negative spectrum: on the flat torus this is the sum of second derivatives.
    """
    if g.is_flat:
        return laplacian_flat(u)
    nabla_du = covariant_hessian(g, u, christoffel).components
    return ScalarField(g.grid, np.einsum('ij...,ij...->...', g.inverse_matrix, nabla_du))


def codifferential(g: MetricField, omega: OneFormField,
                   christoffel: Optional[ChristoffelField] = None) -> ScalarField:
    """d*_g omega = -g^ij d_i omega_j + g^ij Gamma^k_ij omega_k"""
    christoffel = christoffel if christoffel is not None else christoffel_field(g)
    ginv = g.inverse_matrix
    # dw[j, i] = d_i omega_j
    dw = np.stack([gradient(omega.component(j)).components for j in range(3)])
    divergence = np.einsum('ij...,ji...->...', ginv, dw)
    contracted = np.einsum('ij...,kij...->k...', ginv, christoffel.gamma)
    return ScalarField(g.grid, -divergence + np.einsum('k...,k...->...', contracted, omega.components))


# ----------------------------------------------------------------------
# weighted norms
# ----------------------------------------------------------------------
def pointwise_norm_g(f: Union[ScalarField, OneFormField, TwoTensorField], g: MetricField) -> ScalarField:
    """|f|_g through the induced inner product with both indices raised"""
    ginv = g.inverse_matrix
    if isinstance(f, ScalarField):
        return ScalarField(g.grid, np.abs(f.values))
    if isinstance(f, OneFormField):
        squared = np.einsum('ij...,i...,j...->...', ginv, f.components, f.components)
    else:
        squared = np.einsum('ia...,jb...,ij...,ab...->...', ginv, ginv, f.components, f.components)
    return ScalarField(g.grid, np.sqrt(np.maximum(squared, 0.0)))


def lp_norm_g(f: AnyField, p: float, g: MetricField) -> float:
    """(integral |f|_g^p sqrt(det g))^(1/p) by uniform-grid quadrature"""
    if p < 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    pointwise = pointwise_norm_g(f, g).values
    return float(np.mean(pointwise ** p * g.volume_density) ** (1.0 / p))


def sobolev_norm_g(u: ScalarField, k: int, p: float, g: MetricField,
                   christoffel: Optional[ChristoffelField] = None) -> float:
    """sum_{i <= k} ||(nabla^g)^i u||_{L^p_g}"""
    if k not in (0, 1, 2):
        raise ValueError(f"Sobolev order must be 0, 1 or 2, got {k}")
    total = lp_norm_g(u, p, g)
    if k >= 1:
        total += lp_norm_g(gradient(u), p, g)
    if k == 2:
        total += lp_norm_g(covariant_hessian(g, u, christoffel), p, g)
    return total


def mean_zero_project_g(u: ScalarField, g: MetricField) -> ScalarField:
    """Subtract the vol_g-weighted mean"""
    weighted_mean = float(np.mean(u.values * g.volume_density)) / g.volume()
    return ScalarField(u.grid, u.values - weighted_mean)


def inner_product_g(u: ScalarField, v: ScalarField, g: MetricField) -> float:
    return float(np.mean(u.values * v.values * g.volume_density))


def write_metric_snapshot(path: Union[str, Path], g: MetricField) -> Tuple[Path, Path]:
    return write_raw_snapshot(path, g.components, g.grid, 'metric', g.seed, extra={
        'component_order': list(COMPONENT_NAMES),
        'family_kind': g.kind,
        'delta_nominal': g.delta_nominal,
        'measured_c1_distance': measured_c1_distance(g),
    })
