"""
Constant Ledger Module
Named elliptic-estimate constants on T^3 evaluated as a dependency DAG of rigorous enclosures
"""

import hashlib
import logging
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

from mpmath import mp

from core.errors import (AbsorptionFailure, ConfigError, DeltaOutOfDomain, DomainError,
                         EstimateError, MissingDelta, UnknownConstant)
from core.interval import (ONE, ZERO, IntervalValue, gamma_at_half_integer, get_working_precision,
                           set_working_precision, unit_ball_volume, unit_sphere_measure)

logger = logging.getLogger(__name__)

RealLike = Union[int, float, Fraction, IntervalValue]

DELTA_DOMAIN_END = Fraction(1, 6)
CUBE_SOBOLEV_LITERAL = "13.25"
INVERSE_BOUND_VARIANTS = ('stated', 'derived')
CHRISTOFFEL_BOUND_VARIANTS = ('paper', 'derived')
CRITERIA = ('absorption', 'one_form')


def _exponent(value: Union[int, float, Fraction]) -> Fraction:
    """Read an exponent as an exact rational; decimals snap to the nearest simple fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(value).limit_denominator(10 ** 6)


# ----------------------------------------------------------------------
# generic constants
# ----------------------------------------------------------------------
def c_marcinkiewicz(p: Union[int, float, Fraction], q: Union[int, float, Fraction],
                    r: Union[int, float, Fraction]) -> IntervalValue:
    """
    Interpolation constant 2 (p (r - q) / ((p - q)(r - p)))^(1/p) for q < p < r

    Args:
        p: target exponent
        q: weak-type endpoint
        r: strong-type endpoint

    Returns:
        Enclosure of the closed form
    """
    p, q, r = _exponent(p), _exponent(q), _exponent(r)
    if not q < p < r:
        raise DomainError(f"Marcinkiewicz constant needs q < p < r, got p={p}, q={q}, r={r}")
    base = IntervalValue.coerce(p * (r - q) / ((p - q) * (r - p)))
    return 2 * base ** (1 / p)


def c_newton_second_derivative(n: int) -> IntervalValue:
    """Second-derivative bound of the Newtonian kernel, n(n+5)/omega_n"""
    return IntervalValue.coerce(n * (n + 5)) / unit_ball_volume(n)


def c_integral_bound_cz(n: int) -> IntervalValue:
    """2 * C_Newton * n * omega_n, which collapses to the integer 2 n^2 (n+5)"""
    return IntervalValue.coerce(2 * n * n * (n + 5))


def c_fstar_measure(n: int) -> IntervalValue:
    """omega_n * n^(n/2)"""
    return unit_ball_volume(n) * IntervalValue.coerce(n) ** Fraction(n, 2)


def t1_distribution_constant(n: int) -> IntervalValue:
    """Weak-(1,1) constant T1 = 2^(n+2) + 4 C7 + C8"""
    if n < 1:
        raise DomainError(f"dimension must be positive, got {n}")
    return IntervalValue.coerce(2 ** (n + 2)) + 4 * c_integral_bound_cz(n) + c_fstar_measure(n)


def c_calderon_zygmund(n: int, p: Union[int, float, Fraction],
                       t1: Optional[IntervalValue] = None,
                       t2: Optional[IntervalValue] = None) -> IntervalValue:
    """
    L^p bound of second derivatives of the Newtonian potential by the Laplacian

    Args:
        n: dimension
        p: Lebesgue exponent, 1 < p < infinity; p > 2 is handled through its conjugate
        t1: weak-(1,1) constant, defaults to t1_distribution_constant(n)
        t2: strong-(2,2) constant, defaults to 1

    Returns:
        [1, 1] at p = 2, otherwise C_Marc(p_eff, 1, 2) T1^alpha T2^(1 - alpha)
    """
    p = _exponent(p)
    if p <= 1:
        raise DomainError(f"Calderon-Zygmund constant needs p > 1, got {p}")
    if p == 2:
        return ONE
    p_eff = min(p, p / (p - 1))
    q, r = Fraction(1), Fraction(2)
    alpha = (1 / p_eff - 1 / r) / (1 / q - 1 / r)
    t1 = t1 if t1 is not None else t1_distribution_constant(n)
    t2 = t2 if t2 is not None else ONE
    return c_marcinkiewicz(p_eff, q, r) * t1 ** alpha * t2 ** (1 - alpha)


def c_poincare(n: int, volume: RealLike) -> IntervalValue:
    """(|Omega| / omega_n)^(1/n)"""
    volume = IntervalValue.coerce(volume)
    if volume.lo <= 0:
        raise DomainError(f"Poincare constant needs a positive volume, got {volume!r}")
    return (volume / unit_ball_volume(n)) ** Fraction(1, n)


def c_grad_plus_hessian(n: int, p: Union[int, float, Fraction], volume: RealLike,
                        calderon_zygmund: Optional[IntervalValue] = None) -> IntervalValue:
    """C3 = n^2 C_CZ(n, p) (n C_Poincare + 1)"""
    c_cz = calderon_zygmund if calderon_zygmund is not None else c_calderon_zygmund(n, p)
    return (n * n) * c_cz * (n * c_poincare(n, volume) + 1)


def k_sobolev(n: int, q: Union[int, float, Fraction], sphere_reading: bool = True) -> IntervalValue:
    """
    Sharp Sobolev embedding constant K(n, q) with Gamma factors at integers and half-integers

    Args:
        n: dimension
        q: exponent with 1 <= q < n
        sphere_reading: True reads omega_(n-1) as the surface measure of the unit
            (n-1)-sphere, False as the volume of the unit ball in R^(n-1)
    """
    q = _exponent(q)
    if not 1 <= q < n:
        raise DomainError(f"Sobolev constant needs 1 <= q < n, got q={q}, n={n}")
    omega = unit_sphere_measure(n - 1) if sphere_reading else unit_ball_volume(n - 1)
    if q == 1:
        # limit of the first two factors as q -> 1
        prefactor = IntervalValue.rational(1, n)
        gamma_ratio = IntervalValue.coerce(n) / omega
        return prefactor * gamma_ratio ** Fraction(1, n)
    twice_first = 2 * n / q
    twice_second = 2 * (n + 1 - n / q)
    if twice_first.denominator != 1 or twice_second.denominator != 1:
        raise DomainError(f"Gamma is only carried at integers and half-integers; n/q = {n / q}")
    prefactor = IntervalValue.coerce((q - 1) / (n - q)) * IntervalValue.coerce((n - q) / (n * (q - 1))) ** (1 / q)
    gamma_ratio = gamma_at_half_integer(2 * (n + 1)) / (
        gamma_at_half_integer(int(twice_first)) * gamma_at_half_integer(int(twice_second)) * omega)
    return prefactor * gamma_ratio ** Fraction(1, n)


def c_sobolev_cube() -> IntervalValue:
    """Cited literal 13.25 for W^{1,2} -> L^4 on the unit cube"""
    return IntervalValue.decimal(CUBE_SOBOLEV_LITERAL)


def morrey_branches() -> Tuple[IntervalValue, IntervalValue]:
    """(omega_3^(-1/4), (12 pi / 17)^(3/4)); the radial integral of |y|^(8/3) over B(0,1) is 12 pi / 17"""
    ball_branch = unit_ball_volume(3) ** Fraction(-1, 4)
    integral_branch = (12 * IntervalValue.pi() / 17) ** Fraction(3, 4)
    return ball_branch, integral_branch


def c_morrey() -> IntervalValue:
    ball_branch, integral_branch = morrey_branches()
    return ball_branch.maximum(integral_branch)


def cutoff_derivative_bounds() -> Tuple[IntervalValue, IntervalValue, IntervalValue]:
    """
    Printed closed forms (b1, b2, b3) bounding |d^2 chi/dx_i^2|, |d chi/dx_i| and |d^2 chi/dx_i dx_j|
    """
    root3 = IntervalValue.coerce(3).sqrt()
    s = 9 + root3
    b1 = -60 * (-6 + IntervalValue.rational(13, 6) * s - IntervalValue.rational(1, 4) * s ** 2
                + IntervalValue.rational(1, 108) * s ** 3)
    b2 = 60 * (2 * root3 - 3)
    b3 = 20 * (5 * root3 - 6)
    return b1, b2, b3


def cutoff_aggregate_bounds() -> Tuple[IntervalValue, IntervalValue, IntervalValue]:
    """(C_laplacian_chi, C_gradient_chi, C_hessian_chi) = (3 b1, sqrt(3) b2, 3 b3)"""
    b1, b2, b3 = cutoff_derivative_bounds()
    return 3 * b1, IntervalValue.coerce(3).sqrt() * b2, 3 * b3


def c_holder_q_qtilde() -> IntervalValue:
    """L^6 -> L^4 Holder constant on a domain of volume 27: 27^(1/4 - 1/6)"""
    return IntervalValue.coerce(27) ** Fraction(1, 12)


def c_schauder(grad_plus_hessian: Optional[IntervalValue] = None,
               cutoff_laplacian: Optional[IntervalValue] = None,
               holder: Optional[IntervalValue] = None,
               cutoff_hessian: Optional[IntervalValue] = None,
               sobolev_embedding: Optional[IntervalValue] = None) -> IntervalValue:
    """
    27 (1 + C3 C_laplacian_chi + (2 + 54 * 27 * sqrt(17)) C3 C_Holder C_hessian_chi K(3,2))

    Any dependency left as None is computed from its own closed form.
    """
    c3 = grad_plus_hessian if grad_plus_hessian is not None else c_grad_plus_hessian(3, 4, 27)
    aggregates = None
    if cutoff_laplacian is None or cutoff_hessian is None:
        aggregates = cutoff_aggregate_bounds()
    c_lap = cutoff_laplacian if cutoff_laplacian is not None else aggregates[0]
    c_hess = cutoff_hessian if cutoff_hessian is not None else aggregates[2]
    c_hold = holder if holder is not None else c_holder_q_qtilde()
    k = sobolev_embedding if sobolev_embedding is not None else k_sobolev(3, 2)
    coupling = 2 + 54 * 27 * IntervalValue.coerce(17).sqrt()
    return 27 * (1 + c3 * c_lap + coupling * c3 * c_hold * c_hess * k)


def c_flat_injectivity(schauder: Optional[IntervalValue] = None) -> IntervalValue:
    """C1 = C_S 13.25 (1 + 27 sqrt(17)) / (4 pi^2) + C_S (1 + 27 * 13.25)"""
    c_s = schauder if schauder is not None else c_schauder()
    cube = c_sobolev_cube()
    eigenvalue = 4 * IntervalValue.pi() ** 2
    return c_s * cube * (1 + 27 * IntervalValue.coerce(17).sqrt()) / eigenvalue + c_s * (1 + 27 * cube)


# ----------------------------------------------------------------------
# ledger data model
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class PaperValue:
    """A value printed in the source for a node, kept as an annotation"""

    source: str
    text: str
    value: Callable[[], IntervalValue]
    rounding: str = 'exact'  # exact | nearest | upper
    unit: str = '0'

    def consistent_with(self, enclosure: IntervalValue) -> bool:
        printed = self.value()
        if self.rounding == 'exact':
            return printed.lo <= enclosure.hi and enclosure.lo <= printed.hi
        unit = IntervalValue.decimal(self.unit)
        if self.rounding == 'nearest':
            half = unit / 2
            return (printed - half).lo <= enclosure.hi and enclosure.lo <= (printed + half).hi
        if self.rounding == 'upper':
            return enclosure.lo <= printed.hi and enclosure.hi > (printed - unit).lo
        raise ValueError(f"unknown rounding mode {self.rounding}")


Formula = Callable[[Dict[str, IntervalValue], Optional[IntervalValue]], IntervalValue]


@dataclass(frozen=True)
class ConstantNode:
    name: str
    formula: Formula
    deps: Tuple[str, ...] = ()
    delta_parametric: bool = False
    citation: str = 'plumbing'
    paper_values: Tuple[PaperValue, ...] = ()
    annotation: str = ''
    symbol: str = ''
    max_delta: Fraction = DELTA_DOMAIN_END


@dataclass(frozen=True)
class MetricComparisonConstants:
    delta: float
    det_lo: IntervalValue
    det_hi: IntervalValue
    cov_lo: IntervalValue
    cov_hi: IntervalValue
    two_tensor_lo: IntervalValue
    two_tensor_hi: IntervalValue
    christoffel: IntervalValue
    w1p_lo: IntervalValue
    w1p_hi: IntervalValue
    w2p_lo: IntervalValue
    w2p_hi: IntervalValue


@dataclass(frozen=True)
class DeltaCertificate:
    """Certified bracket around the largest admissible delta for one criterion"""

    criterion: str
    delta_star: float
    delta_below: float
    delta_above: float
    holds_below: bool
    fails_above: bool
    value_below: IntervalValue
    value_above: Optional[IntervalValue]
    reason_above: str
    bisection_steps: int

    @property
    def certified(self) -> bool:
        return self.holds_below and self.fails_above


def _sqrt3() -> IntervalValue:
    return IntervalValue.coerce(3).sqrt()


class ConstantLedger:
    """Registry and evaluator of every named constant"""

    def __init__(self, config_manager=None, inverse_bound: Optional[str] = None,
                 christoffel_bound: Optional[str] = None):
        self.logger = logging.getLogger(__name__)
        self.config_manager = config_manager

        self.precision_bits = get_working_precision()
        self.inverse_bound = 'stated'
        self.christoffel_bound = 'paper'
        self.bisection_rtol = 1e-3
        self.refine_rtol = 1e-15
        self.export_deltas: List[float] = [0.0, 1e-15]

        if config_manager:
            self.precision_bits = config_manager.get_precision_bits()
            self.inverse_bound = config_manager.get_inverse_bound()
            self.christoffel_bound = config_manager.get_christoffel_bound()
            self.bisection_rtol = config_manager.get_bisection_rtol()
            self.refine_rtol = config_manager.get_refine_rtol()
            self.export_deltas = config_manager.get_export_deltas()

        if inverse_bound is not None:
            self.inverse_bound = inverse_bound
        if christoffel_bound is not None:
            self.christoffel_bound = christoffel_bound
        if self.inverse_bound not in INVERSE_BOUND_VARIANTS:
            raise ConfigError(f"inverse_bound must be one of {INVERSE_BOUND_VARIANTS}, got {self.inverse_bound}")
        if self.christoffel_bound not in CHRISTOFFEL_BOUND_VARIANTS:
            raise ConfigError(f"christoffel_bound must be one of {CHRISTOFFEL_BOUND_VARIANTS}, "
                              f"got {self.christoffel_bound}")

        if self.precision_bits != get_working_precision():
            set_working_precision(self.precision_bits)

        self.nodes: Dict[str, ConstantNode] = {}
        self._cache: Dict[Tuple[str, Optional[Fraction]], IntervalValue] = {}
        self._cache_lock = threading.Lock()
        self._derived_ledger: Optional['ConstantLedger'] = None

        self._register_static_nodes()
        self._register_delta_nodes()
        self._check_acyclic()

        self.logger.info(f"ConstantLedger initialized with {len(self.nodes)} nodes "
                         f"(inverse bound: {self.inverse_bound}, Christoffel bound: {self.christoffel_bound})")

    # ------------------------------------------------------------------
    # registration
    # ------------------------------------------------------------------
    def register(self, node: ConstantNode):
        if node.name in self.nodes:
            raise ValueError(f"duplicate ledger node {node.name}")
        self.nodes[node.name] = node

    def _register_static_nodes(self):
        add = self.register
        add(ConstantNode('omega_3', lambda d, _: unit_ball_volume(3),
                         citation='plumbing: volume of the unit ball in R^3, 4 pi / 3'))
        add(ConstantNode('C_Newton_second_derivative', lambda d, _: c_newton_second_derivative(3),
                         citation='Calderon-Zygmund proof: second derivatives of the Newtonian kernel bounded by n(n+5)/omega_n'))
        add(ConstantNode('C_integral_bound_CZ', lambda d, _: c_integral_bound_cz(3), symbol='C7',
                         citation='Calderon-Zygmund proof: 2 C_Newton n omega_n = 2 n^2 (n+5)'))
        add(ConstantNode('C_Fstar_measure', lambda d, _: c_fstar_measure(3), symbol='C8',
                         citation='Calderon-Zygmund proof: measure of the enlarged bad set, omega_n n^(n/2)'))
        add(ConstantNode('C_mu_Tg', lambda d, _: IntervalValue.coerce(2 ** 5),
                         citation='Calderon-Zygmund proof: distribution bound of the good part, 2^(n+2)'))
        add(ConstantNode('C_mu_Tb', lambda d, _: 4 * d['C_integral_bound_CZ'] + d['C_Fstar_measure'],
                         deps=('C_integral_bound_CZ', 'C_Fstar_measure'),
                         citation='Calderon-Zygmund proof: distribution bound of the bad part, 4 C7 + C8'))
        add(ConstantNode('T1_distribution', lambda d, _: d['C_mu_Tg'] + d['C_mu_Tb'],
                         deps=('C_mu_Tg', 'C_mu_Tb'), symbol='T1',
                         citation='distribution function bounds: weak-(1,1) constant T1 = 2^(n+2) + 4 C7 + C8'))
        add(ConstantNode('T2_distribution', lambda d, _: ONE, symbol='T2',
                         citation='distribution function bounds: strong-(2,2) constant, Plancherel'))
        add(ConstantNode('C_Marcinkiewicz_4over3_1_2', lambda d, _: c_marcinkiewicz(Fraction(4, 3), 1, 2),
                         citation='Marcinkiewicz interpolation: 2 (p (r-q) / ((p-q)(r-p)))^(1/p) at p = 4/3, q = 1, r = 2'))
        add(ConstantNode('C_CalderonZygmund_3_2', lambda d, _: c_calderon_zygmund(3, 2),
                         citation='Calderon-Zygmund theorem: "C = 1 if p = 2"',
                         paper_values=(PaperValue('theorem statement', '1', lambda: ONE),)))
        add(ConstantNode('C_CalderonZygmund_3_4',
                         lambda d, _: c_calderon_zygmund(3, 4, t1=d['T1_distribution'], t2=d['T2_distribution']),
                         deps=('T1_distribution', 'T2_distribution'),
                         citation='Calderon-Zygmund theorem via the conjugate exponent 4/3: C_Marc(4/3,1,2) T1^(1/2) T2^(1/2)',
                         paper_values=(
                             PaperValue('remark after the Calderon-Zygmund corollary', '193',
                                        lambda: IntervalValue.coerce(193), rounding='upper', unit='1'),
                             PaperValue('index of constants', '293.519',
                                        lambda: IntervalValue.decimal('293.519'), rounding='nearest', unit='0.001'),
                         ),
                         annotation='two printed literals disagree; the enclosure is recomputed from the chain'))
        add(ConstantNode('C_Poincare_Qtilde', lambda d, _: c_poincare(3, 27),
                         citation='Poincare inequality with Omega = [-1,2]^3: (|Omega| / omega_3)^(1/3) = (81 / (4 pi))^(1/3)',
                         paper_values=(PaperValue('Poincare constant for the enlarged cube', '(81/(4 pi))^(1/3)',
                                                  lambda: (81 / (4 * IntervalValue.pi())) ** Fraction(1, 3)),)))
        add(ConstantNode('C_grad_plus_hessian',
                         lambda d, _: c_grad_plus_hessian(3, 4, 27, calderon_zygmund=d['C_CalderonZygmund_3_4']),
                         deps=('C_CalderonZygmund_3_4', 'C_Poincare_Qtilde'), symbol='C3',
                         citation='D + D^2 regularity corollary: n^2 C_CZ(n,p) (n C_Poincare + 1)'))
        add(ConstantNode('b_cutoff_second_pure', lambda d, _: cutoff_derivative_bounds()[0],
                         citation='cutoff estimates: -60(-6 + 13/6 s - s^2/4 + s^3/108), s = 9 + sqrt(3)'))
        add(ConstantNode('b_cutoff_first', lambda d, _: cutoff_derivative_bounds()[1],
                         citation='cutoff estimates: 60 (2 sqrt(3) - 3)'))
        add(ConstantNode('b_cutoff_second_mixed', lambda d, _: cutoff_derivative_bounds()[2],
                         citation='cutoff estimates: 20 (5 sqrt(3) - 6)'))
        add(ConstantNode('C_cutoff_laplacian', lambda d, _: 3 * d['b_cutoff_second_pure'],
                         deps=('b_cutoff_second_pure',), citation='cutoff estimates: sup |Laplacian chi| <= 3 b1'))
        add(ConstantNode('C_cutoff_gradient', lambda d, _: _sqrt3() * d['b_cutoff_first'],
                         deps=('b_cutoff_first',), citation='cutoff estimates: sup |D chi| <= sqrt(3) b2'))
        add(ConstantNode('C_cutoff_hessian', lambda d, _: 3 * d['b_cutoff_second_mixed'],
                         deps=('b_cutoff_second_mixed',), citation='cutoff estimates: sup |D^2 chi| <= 3 b3'))
        add(ConstantNode('C_Holder_Q_Qtilde', lambda d, _: c_holder_q_qtilde(),
                         citation='Holder on [-1,2]^3: |Omega|^(1/4 - 1/6) = 27^(1/12)',
                         paper_values=(PaperValue('index of constants', '27^(3/4)',
                                                  lambda: IntervalValue.coerce(27) ** Fraction(3, 4)),),
                         annotation='body text and index of constants disagree; direct Holder computation used'))
        add(ConstantNode('C_Holder_Q_Qtilde_index_literal', lambda d, _: IntervalValue.coerce(27) ** Fraction(3, 4),
                         citation='index of constants: printed 27^(3/4), carried for sensitivity only'))
        add(ConstantNode('C_Sobolev_embedding', lambda d, _: k_sobolev(3, 2, sphere_reading=True),
                         citation='Sobolev embedding K(3,2), omega_(n-1) read as surface measure of the unit sphere',
                         annotation='ball-volume reading carried as C_Sobolev_embedding_ball_reading'))
        add(ConstantNode('C_Sobolev_embedding_ball_reading', lambda d, _: k_sobolev(3, 2, sphere_reading=False),
                         citation='Sobolev embedding K(3,2), omega_(n-1) read as volume of the unit ball in R^(n-1)'))
        add(ConstantNode('C_Sobolev_cube', lambda d, _: c_sobolev_cube(),
                         citation='Sobolev embedding on [0,1]^3 imported from the verified-computation '
                                  'literature, page 15, table 6: "= 13.25"',
                         paper_values=(PaperValue('cube Sobolev theorem', '13.25',
                                                  lambda: IntervalValue.decimal('13.25')),)))
        add(ConstantNode('C_Jost_gradient', lambda d, _: IntervalValue.coerce(17).sqrt(),
                         citation='imported gradient estimate for weak solutions of Laplace u = f: sqrt(17)'))
        add(ConstantNode('eigenvalue_min_flat', lambda d, _: 4 * IntervalValue.pi() ** 2,
                         citation='eigenbasis lemma: smallest nonzero eigenvalue of the flat Laplacian is 4 pi^2'))
        add(ConstantNode('C_Schauder',
                         lambda d, _: c_schauder(d['C_grad_plus_hessian'], d['C_cutoff_laplacian'],
                                                 d['C_Holder_Q_Qtilde'], d['C_cutoff_hessian'],
                                                 d['C_Sobolev_embedding']),
                         deps=('C_grad_plus_hessian', 'C_cutoff_laplacian', 'C_Holder_Q_Qtilde',
                               'C_cutoff_hessian', 'C_Sobolev_embedding'),
                         citation='explicit Schauder constant: 27(1 + C3 C_lap_chi + (2 + 54(27) sqrt(17)) '
                                  'C3 C_Holder C_hess_chi K(3,2))'))
        add(ConstantNode('C_Schauder_laplacian_coefficient',
                         lambda d, _: 27 * (d['C_grad_plus_hessian'] + 2 + 54 * 27 * d['C_grad_plus_hessian']
                                            * d['C_Holder_Q_Qtilde'] * d['C_cutoff_hessian']
                                            * d['C_Sobolev_embedding']),
                         deps=('C_grad_plus_hessian', 'C_Holder_Q_Qtilde', 'C_cutoff_hessian', 'C_Sobolev_embedding'),
                         citation='Schauder proof: coefficient of ||Laplacian u|| before the constants are merged'))
        add(ConstantNode('C_flat_injectivity',
                         lambda d, _: (d['C_Schauder'] * d['C_Sobolev_cube'] * (1 + 27 * d['C_Jost_gradient'])
                                       / d['eigenvalue_min_flat']
                                       + d['C_Schauder'] * (1 + 27 * d['C_Sobolev_cube'])),
                         deps=('C_Schauder', 'C_Sobolev_cube', 'C_Jost_gradient', 'eigenvalue_min_flat'), symbol='C1',
                         citation='flat injectivity constant: (1/4 pi^2) C_S 13.25 (1 + 27 sqrt(17)) + C_S (1 + 27 * 13.25)'))
        add(ConstantNode('C_Morrey', lambda d, _: c_morrey(),
                         citation="Morrey's inequality on T^3: max(omega_3^(-1/4), (12 pi / 17)^(3/4))"))

    def _register_delta_nodes(self):
        add = self.register

        def dnode(name, formula, deps=(), citation='plumbing', **kwargs):
            add(ConstantNode(name, formula, deps=tuple(deps), delta_parametric=True, citation=citation, **kwargs))

        dnode('C_inv_stated', lambda d, x: 2 * x,
              citation='inverse metric lemma as stated: |g^ij - delta_ij| <= 2 delta')
        dnode('C_inv_derived', lambda d, x: 6 * x + 36 * x ** 3,
              citation='inverse metric lemma, series expansion of g^-1 for delta < 1/6: 6 delta + 36 delta^3')
        dnode('C_inverse_metric',
              lambda d, x: d['C_inv_stated'] if self.inverse_bound == 'stated' else d['C_inv_derived'],
              deps=('C_inv_stated', 'C_inv_derived'), citation='plumbing: inverse bound selected by configuration')
        dnode('C_det_lo', lambda d, x: (1 - x) ** 3 - 2 * x ** 3 - 3 * (1 + x) * x ** 2,
              citation='determinant lemma: (1 - delta)^3 - 2 delta^3 - 3 (1 + delta) delta^2')
        dnode('C_det_hi', lambda d, x: (1 + x) ** 3 + 2 * x ** 3 + 3 * (1 + x) * x ** 2,
              citation='determinant lemma: (1 + delta)^3 + 2 delta^3 + 3 (1 + delta) delta^2')
        dnode('C_cov_lo', lambda d, x: (1 - 3 * x).sqrt(),
              citation='covector comparison lemma: (1 - 3 delta)^(1/2)')
        dnode('C_cov_hi', lambda d, x: (1 + 3 * x).sqrt(),
              citation='covector comparison lemma: (1 + 3 delta)^(1/2)')
        dnode('C_2t_lo', lambda d, x: (1 - 9 * (2 + d['C_inverse_metric']) * d['C_inverse_metric']).sqrt(),
              deps=('C_inverse_metric',), citation='2-tensor comparison lemma: (1 - 9 (2 + 2 delta) 2 delta)^(1/2)')
        dnode('C_2t_hi', lambda d, x: (1 + 9 * (2 + d['C_inverse_metric']) * d['C_inverse_metric']).sqrt(),
              deps=('C_inverse_metric',), citation='2-tensor comparison lemma: (1 + 9 (2 + 2 delta) 2 delta)^(1/2)')
        dnode('C_Christoffel', lambda d, x: 9 * x ** 2,
              citation='Christoffel bound lemma: |Gamma^k_ij| <= 9 delta^2',
              annotation='the triangle-inequality chain gives O(delta); see C_Christoffel_derived')
        dnode('C_Christoffel_derived', lambda d, x: IntervalValue.rational(3, 2) * (1 + 2 * x) * (3 * x),
              citation='Christoffel symbol formula term count: (3/2)(1 + 2 delta)(3 delta)')
        dnode('C_Christoffel_active',
              lambda d, x: d['C_Christoffel'] if self.christoffel_bound == 'paper' else d['C_Christoffel_derived'],
              deps=('C_Christoffel', 'C_Christoffel_derived'),
              citation='plumbing: Christoffel bound selected by configuration')
        dnode('C_W1p_lo', lambda d, x: d['C_cov_lo'] * d['C_det_lo'] ** Fraction(1, 8),
              deps=('C_cov_lo', 'C_det_lo'), citation='W^{1,p} comparison, p = 4: C_cov_lo C_det_lo^(1/2p)')
        dnode('C_W1p_hi', lambda d, x: d['C_cov_hi'] * d['C_det_hi'] ** Fraction(1, 8),
              deps=('C_cov_hi', 'C_det_hi'), citation='W^{1,p} comparison, p = 4: C_cov_hi C_det_hi^(1/2p)')
        dnode('C_W2p_hi',
              lambda d, x: (d['C_W1p_hi'] * (1 + 3 * _sqrt3() * d['C_Christoffel_active'])
                            * d['C_2t_hi'] * d['C_det_hi'] ** Fraction(1, 8)),
              deps=('C_W1p_hi', 'C_Christoffel_active', 'C_2t_hi', 'C_det_hi'), symbol='C10',
              citation='W^{2,p} norm comparison theorem, upper: C_W1p_hi (1 + 3 sqrt(3) C_Gamma) C_2t_hi C_det_hi^(1/2p)')
        dnode('C_W2p_lo',
              lambda d, x: (d['C_W1p_lo'] * (1 - 3 * _sqrt3() * d['C_Christoffel_active'])
                            * d['C_2t_lo'] * d['C_det_lo'] ** Fraction(1, 8)),
              deps=('C_W1p_lo', 'C_Christoffel_active', 'C_2t_lo', 'C_det_lo'), symbol='C11',
              citation='W^{2,p} norm comparison theorem, lower: product mirror of the upper constant',
              annotation='the printed lower constant is a sum equal to 2 at delta = 0; see C_W2p_lo_sum_form')
        dnode('C_W2p_lo_sum_form',
              lambda d, x: (d['C_W1p_lo'] + (1 - 3 * _sqrt3() * d['C_Christoffel_active'])
                            * d['C_det_lo'] ** Fraction(1, 8) * d['C_2t_lo']),
              deps=('C_W1p_lo', 'C_Christoffel_active', 'C_det_lo', 'C_2t_lo'),
              citation='W^{2,p} norm comparison theorem, lower constant as printed (sum form)',
              annotation='equals 2 at delta = 0, so it cannot bound the W^{2,p} norm ratio from below')
        dnode('C_W2p_hi_proof_form',
              lambda d, x: (d['C_W1p_hi'] + (1 + 3 * _sqrt3() * d['C_Christoffel_active'])
                            * d['C_det_hi'] ** Fraction(1, 8) * d['C_2t_hi']),
              deps=('C_W1p_hi', 'C_Christoffel_active', 'C_det_hi', 'C_2t_hi'),
              citation='W^{2,p} comparison proof, upper constant as a termwise sum',
              annotation='equals 2 at delta = 0; the product form C10 is the one used downstream')
        dnode('C_laplacian_comparison',
              lambda d, x: (3 * ((d['C_det_hi'] ** Fraction(1, 8) - 1) * (1 + d['C_inverse_metric'])
                                 + d['C_inverse_metric'])
                            + 9 * _sqrt3() * (1 + d['C_inverse_metric']) * d['C_Christoffel_active']
                            * d['C_det_hi'] ** Fraction(1, 8)),
              deps=('C_det_hi', 'C_inverse_metric', 'C_Christoffel_active'), symbol='C14',
              citation='absorption of the Laplacian term: 3((C_det_hi^(1/2p) - 1)(1 + 2 delta) + 2 delta) '
                       '+ 9 sqrt(3) (1 + 2 delta) C_Gamma C_det_hi^(1/2p)')
        dnode('C_absorption_product', lambda d, x: d['C_flat_injectivity'] * d['C_laplacian_comparison'],
              deps=('C_flat_injectivity', 'C_laplacian_comparison'),
              citation='plumbing: C1 C14(delta), must stay below 1')
        dnode('C_nonflat_injectivity', self._nonflat_formula,
              deps=('C_W2p_hi', 'C_flat_injectivity', 'C_absorption_product'), symbol='C4',
              citation='non-flat injectivity constant: C10 C1 / (1 - C1 C14)')
        dnode('C_one_form_injectivity',
              lambda d, x: d['C_Morrey'] * d['C_cov_hi'] * d['C_nonflat_injectivity'] / d['C_W2p_lo'],
              deps=('C_Morrey', 'C_cov_hi', 'C_nonflat_injectivity', 'C_W2p_lo'),
              citation='1-form injectivity estimate: C_Morrey C_cov_hi C4 / C11')
        dnode('C_codifferential_dx1',
              lambda d, x: (3 + 9 * d['C_inverse_metric']) * d['C_Christoffel_active'],
              deps=('C_inverse_metric', 'C_Christoffel_active'),
              citation='codifferential of dx_1: sum_ij |g^ij| |Gamma^1_ij| <= (3 + 18 delta) C_Gamma')
        dnode('epsilon_one_form',
              lambda d, x: (d['C_cov_lo'] - d['C_one_form_injectivity'] * d['C_codifferential_dx1']
                            * d['C_det_hi'] ** Fraction(1, 8)),
              deps=('C_cov_lo', 'C_one_form_injectivity', 'C_codifferential_dx1', 'C_det_hi'),
              citation='end of the nowhere-vanishing proof: C_cov_lo - C_O (3 + 18 delta) C_Gamma C_det_hi^(1/2p)')

    @staticmethod
    def _nonflat_formula(d: Dict[str, IntervalValue], x: Optional[IntervalValue]) -> IntervalValue:
        product = d['C_absorption_product']
        if not product.hi < 1:
            raise AbsorptionFailure(f"C1 * C14(delta) = {product!r} is not certainly below 1")
        return d['C_W2p_hi'] * d['C_flat_injectivity'] / (1 - product)

    def _check_acyclic(self):
        state: Dict[str, int] = {}

        def visit(name: str, path: Tuple[str, ...]):
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                raise ValueError(f"ledger dependency cycle: {' -> '.join(path + (name,))}")
            if name not in self.nodes:
                raise UnknownConstant(f"{path[-1] if path else '?'} depends on unknown node {name}")
            state[name] = 1
            for dep in self.nodes[name].deps:
                visit(dep, path + (name,))
            state[name] = 2

        for name in self.nodes:
            visit(name, ())

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------
    def _delta_interval(self, node: ConstantNode, delta: Union[float, Fraction]) -> Tuple[Fraction, IntervalValue]:
        exact = Fraction(delta)
        if exact < 0 or exact >= node.max_delta:
            raise DeltaOutOfDomain(f"{node.name} is defined for 0 <= delta < {node.max_delta}, got {float(exact):.6g}")
        if isinstance(delta, Fraction):
            return exact, IntervalValue.rational(exact.numerator, exact.denominator)
        return exact, IntervalValue.point(float(delta))

    def eval_constant(self, name: str, delta: Optional[Union[float, Fraction]] = None) -> IntervalValue:
        """
        Evaluate a ledger node

        Args:
            name: registered node name
            delta: C^1 distance to the flat metric, required exactly for delta-parametric nodes

        Returns:
            Rigorous enclosure of the constant
        """
        node = self.nodes.get(name)
        if node is None:
            raise UnknownConstant(f"no ledger node named {name}")
        if node.delta_parametric and delta is None:
            raise MissingDelta(f"{name} depends on delta")
        if not node.delta_parametric and delta is not None:
            raise MissingDelta(f"{name} does not depend on delta")

        key_delta, delta_iv = (None, None)
        if node.delta_parametric:
            key_delta, delta_iv = self._delta_interval(node, delta)
        key = (name, key_delta)

        with self._cache_lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached

        deps = {}
        for dep in node.deps:
            dep_node = self.nodes[dep]
            deps[dep] = self.eval_constant(dep, delta if dep_node.delta_parametric else None)
        value = node.formula(deps, delta_iv)

        with self._cache_lock:
            value = self._cache.setdefault(key, value)
        self.logger.debug(f"{name}" + (f"(delta={float(key_delta):.6g})" if key_delta is not None else "")
                          + f" = {value!r}, width {value.width:.3e}")
        return value

    def discrepancy(self, name: str, value: IntervalValue) -> bool:
        """True when any printed value of the node is inconsistent with the enclosure"""
        return any(not paper.consistent_with(value) for paper in self.nodes[name].paper_values)

    def static_names(self) -> List[str]:
        return [name for name, node in self.nodes.items() if not node.delta_parametric]

    def delta_names(self) -> List[str]:
        return [name for name, node in self.nodes.items() if node.delta_parametric]

    # ------------------------------------------------------------------
    # delta-parametric groups
    # ------------------------------------------------------------------
    def metric_comparison_constants(self, delta: Union[float, Fraction]) -> MetricComparisonConstants:
        ev = lambda name: self.eval_constant(name, delta)
        return MetricComparisonConstants(
            delta=float(delta),
            det_lo=ev('C_det_lo'), det_hi=ev('C_det_hi'),
            cov_lo=ev('C_cov_lo'), cov_hi=ev('C_cov_hi'),
            two_tensor_lo=ev('C_2t_lo'), two_tensor_hi=ev('C_2t_hi'),
            christoffel=ev('C_Christoffel'),
            w1p_lo=ev('C_W1p_lo'), w1p_hi=ev('C_W1p_hi'),
            w2p_lo=ev('C_W2p_lo'), w2p_hi=ev('C_W2p_hi'),
        )

    def c_laplacian_comparison(self, delta: Union[float, Fraction]) -> IntervalValue:
        return self.eval_constant('C_laplacian_comparison', delta)

    def c_nonflat_injectivity(self, delta: Union[float, Fraction]) -> IntervalValue:
        return self.eval_constant('C_nonflat_injectivity', delta)

    def c_nonflat_injectivity_formal(self, delta: Union[float, Fraction]) -> IntervalValue:
        """C10 C1 / (1 - C1 C14) evaluated without the absorption precondition"""
        product = self.eval_constant('C_absorption_product', delta)
        return self.eval_constant('C_W2p_hi', delta) * self.eval_constant('C_flat_injectivity') / (1 - product)

    def epsilon_one_form(self, delta: Union[float, Fraction]) -> IntervalValue:
        return self.eval_constant('epsilon_one_form', delta)

    def epsilon_one_form_derived(self, delta: Union[float, Fraction]) -> IntervalValue:
        """epsilon(delta) recomputed with the O(delta) Christoffel bound"""
        if self.christoffel_bound == 'derived':
            return self.epsilon_one_form(delta)
        if self._derived_ledger is None:
            self._derived_ledger = ConstantLedger(self.config_manager, inverse_bound=self.inverse_bound,
                                                  christoffel_bound='derived')
        return self._derived_ledger.epsilon_one_form(delta)

    # ------------------------------------------------------------------
    # admissible delta
    # ------------------------------------------------------------------
    def _criterion_value(self, criterion: str, delta: float) -> Tuple[bool, Optional[IntervalValue], str]:
        try:
            product = self.eval_constant('C_absorption_product', delta)
        except DomainError as e:
            return False, None, f"domain error: {e}"
        if not product.hi < 1:
            return False, product, 'absorption product not below 1'
        if criterion == 'absorption':
            return True, product, 'absorption product below 1'
        try:
            epsilon = self.epsilon_one_form(delta)
        except (DomainError, AbsorptionFailure) as e:
            return False, product, f"epsilon undefined: {e}"
        if epsilon.lo > 0:
            return True, epsilon, 'epsilon certainly positive'
        return False, epsilon, 'epsilon not certainly positive'

    def max_admissible_delta(self, criterion: str) -> DeltaCertificate:
        """
        Largest delta for which the criterion holds, by bisection with interval certificates

        Args:
            criterion: 'absorption' (C1 C14 < 1) or 'one_form' (absorption and epsilon > 0)

        Returns:
            DeltaCertificate with enclosures evaluated at delta_star (1 -/+ bisection_rtol)
        """
        if criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}, got {criterion}")

        holds = lambda d: self._criterion_value(criterion, d)[0]
        hi = math.nextafter(float(DELTA_DOMAIN_END), 0.0)
        lo = 1e-30
        while not holds(lo):
            lo *= 1e-30
            if lo < 1e-290:
                raise EstimateError(f"criterion {criterion} fails for every representable delta")
        if holds(hi):
            raise EstimateError(f"criterion {criterion} holds on the whole delta domain")

        steps = 0
        # geometric phase spans the many decades between lo and hi
        while hi / lo > 1 + self.bisection_rtol:
            mid = math.sqrt(lo) * math.sqrt(hi)
            if holds(mid):
                lo = mid
            else:
                hi = mid
            steps += 1
        while hi - lo > self.refine_rtol * hi:
            mid = lo + (hi - lo) / 2
            if mid <= lo or mid >= hi:
                break
            if holds(mid):
                lo = mid
            else:
                hi = mid
            steps += 1

        delta_star = lo + (hi - lo) / 2
        below = delta_star * (1 - self.bisection_rtol)
        above = delta_star * (1 + self.bisection_rtol)
        holds_below, value_below, _ = self._criterion_value(criterion, below)
        holds_above, value_above, reason_above = self._criterion_value(criterion, above)
        certificate = DeltaCertificate(criterion=criterion, delta_star=delta_star, delta_below=below,
                                       delta_above=above, holds_below=holds_below, fails_above=not holds_above,
                                       value_below=value_below, value_above=value_above,
                                       reason_above=reason_above, bisection_steps=steps)
        if certificate.certified:
            self.logger.info(f"Admissible delta ({criterion}): {delta_star:.6e}, certified on "
                             f"[{below:.6e}, {above:.6e}] after {steps} steps")
        else:
            self.logger.warning(f"Admissible delta ({criterion}) bracket not certified: "
                                f"holds below={holds_below}, fails above={not holds_above}")
        return certificate

    # ------------------------------------------------------------------
    # table views
    # ------------------------------------------------------------------
    def table_rows(self, deltas: Optional[List[float]] = None) -> List[Dict]:
        """Rows for the exported constant table; delta-parametric nodes appear once per delta"""
        deltas = self.export_deltas if deltas is None else deltas
        rows = []
        for name in self.static_names():
            rows.append(self._row(name, None))
        for delta in deltas:
            for name in self.delta_names():
                rows.append(self._row(name, delta))
        return rows

    def _row(self, name: str, delta: Optional[float]) -> Dict:
        node = self.nodes[name]
        row = {
            'name': name,
            'symbol': node.symbol,
            'lo': '',
            'hi': '',
            'delta': '' if delta is None else repr(float(delta)),
            'citation': node.citation,
            'paper_value_if_any': '; '.join(f"{p.text} ({p.source})" for p in node.paper_values),
            'discrepancy_flag': False,
            'annotation': node.annotation,
            'error': '',
        }
        try:
            value = self.eval_constant(name, delta)
        except EstimateError as e:
            row['error'] = f"{type(e).__name__}: {e}"
            return row
        row['lo'], row['hi'] = value.endpoint_strings(20)
        row['width'] = value.width
        row['discrepancy_flag'] = self.discrepancy(name, value)
        row['paper_value_if_any'] = '; '.join(
            f"{p.text} ({p.source}; {'consistent' if p.consistent_with(value) else 'discrepant'})"
            for p in node.paper_values)
        return row

    def golden_snapshot(self) -> Dict[str, List[str]]:
        """Exact endpoint strings of every static node"""
        snapshot = {}
        for name in sorted(self.static_names()):
            lo, hi = self.eval_constant(name).endpoint_strings(40)
            snapshot[name] = [lo, hi]
        return snapshot

    def golden_references(self, digits: int = 45) -> Dict[str, str]:
        """Midpoint of every static node as a decimal string; the frozen table is checked by containment"""
        values = {name: self.eval_constant(name) for name in sorted(self.static_names())}
        references = {}
        with mp.workprec(self.precision_bits + 64):
            for name, value in values.items():
                references[name] = mp.nstr((value.lo + value.hi) / 2, digits, strip_zeros=True)
        return references

    def version_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(f"prec={self.precision_bits};inv={self.inverse_bound};"
                      f"chr={self.christoffel_bound}".encode())
        for name, (lo, hi) in self.golden_snapshot().items():
            digest.update(f"{name}:{lo}:{hi}\n".encode())
        return digest.hexdigest()
