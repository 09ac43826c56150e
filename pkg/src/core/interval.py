"""
Interval Arithmetic Module
Outward-rounded enclosures of real constants on top of mpmath's interval context
"""

import logging
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import numpy as np
from mpmath import iv, mp, mpf
from mpmath.libmp import round_ceiling, round_floor, to_float

from core.errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_PRECISION_BITS = 128

_precision_bits = DEFAULT_PRECISION_BITS
# iv.prec is process-global state inside mpmath
_IV_LOCK = threading.RLock()

Number = Union[int, float, Fraction, str, 'IntervalValue']


def set_working_precision(bits: int):
    """Set the binary precision used by every subsequent interval operation"""
    global _precision_bits
    if bits < 53:
        raise ValueError(f"working precision must be at least 53 bits, got {bits}")
    _precision_bits = int(bits)
    logger.info(f"Interval working precision set to {bits} bits")


def get_working_precision() -> int:
    return _precision_bits


@contextmanager
def _iv_context():
    with _IV_LOCK:
        saved = iv.prec
        iv.prec = _precision_bits
        try:
            yield
        finally:
            iv.prec = saved


@dataclass(frozen=True)
class IntervalValue:
    """Closed interval [lo, hi] with binary endpoints; every operation rounds outward"""

    lo: mpf
    hi: mpf

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    @classmethod
    def _from_iv(cls, value) -> 'IntervalValue':
        a, b = value._mpi_
        return cls(mp.make_mpf(a), mp.make_mpf(b))

    def _as_iv(self):
        return iv.mpf((self.lo, self.hi))

    @classmethod
    def point(cls, x: Union[int, float]) -> 'IntervalValue':
        """Enclosure of an int or float; exact whenever x fits the working precision"""
        if isinstance(x, float) and not np.isfinite(x):
            raise DomainError(f"cannot enclose non-finite value {x}")
        with _iv_context():
            return cls._from_iv(iv.mpf(x))

    @classmethod
    def rational(cls, numerator: int, denominator: int = 1) -> 'IntervalValue':
        if denominator == 0:
            raise DomainError("rational literal with zero denominator")
        with _iv_context():
            return cls._from_iv(iv.mpf(numerator) / iv.mpf(denominator))

    @classmethod
    def decimal(cls, text: str) -> 'IntervalValue':
        """Enclosure of a decimal literal such as "13.25" """
        with _iv_context():
            return cls._from_iv(iv.mpf(text))

    @classmethod
    def from_bounds(cls, lo: Union[float, mpf], hi: Union[float, mpf]) -> 'IntervalValue':
        return cls(mpf(lo), mpf(hi))

    @classmethod
    def pi(cls) -> 'IntervalValue':
        with _iv_context():
            return cls._from_iv(+iv.pi)

    @classmethod
    def coerce(cls, value: Number) -> 'IntervalValue':
        if isinstance(value, IntervalValue):
            return value
        if isinstance(value, Fraction):
            return cls.rational(value.numerator, value.denominator)
        if isinstance(value, str):
            return cls.decimal(value)
        if isinstance(value, (int, float, np.integer, np.floating)):
            return cls.point(value.item() if hasattr(value, 'item') else value)
        raise TypeError(f"cannot build an interval from {type(value).__name__}")

    # ------------------------------------------------------------------
    # inspection
    # ------------------------------------------------------------------
    @property
    def width(self) -> float:
        with mp.workprec(_precision_bits + 10):
            return to_float((self.hi - self.lo)._mpf_, rnd=round_ceiling)

    @property
    def midpoint(self) -> float:
        with mp.workprec(_precision_bits + 10):
            return float((self.lo + self.hi) / 2)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def lo_float(self) -> float:
        """Largest double not above lo"""
        return to_float(self.lo._mpf_, rnd=round_floor)

    def hi_float(self) -> float:
        """Smallest double not below hi"""
        return to_float(self.hi._mpf_, rnd=round_ceiling)

    def as_floats(self) -> Tuple[float, float]:
        return self.lo_float(), self.hi_float()

    def contains(self, x: Union[int, float, mpf]) -> bool:
        value = mpf(x) if not isinstance(x, mpf) else x
        return self.lo <= value <= self.hi

    def encloses(self, other: 'IntervalValue') -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def certainly_less_than(self, other: Number) -> bool:
        return self.hi < IntervalValue.coerce(other).lo

    def certainly_positive(self) -> bool:
        return self.lo > 0

    def excludes_zero(self) -> bool:
        return self.lo > 0 or self.hi < 0

    def endpoint_strings(self, digits: int = 40) -> Tuple[str, str]:
        """Decimal renderings used by exports and the golden table"""
        return mp.nstr(self.lo, digits, strip_zeros=False), mp.nstr(self.hi, digits, strip_zeros=False)

    def __repr__(self) -> str:
        lo, hi = self.endpoint_strings(17)
        return f"IntervalValue([{lo}, {hi}])"

    # ------------------------------------------------------------------
    # arithmetic
    # ------------------------------------------------------------------
    def _binary(self, other: Number, op) -> 'IntervalValue':
        other = IntervalValue.coerce(other)
        with _iv_context():
            return IntervalValue._from_iv(op(self._as_iv(), other._as_iv()))

    def __add__(self, other: Number) -> 'IntervalValue':
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other: Number) -> 'IntervalValue':
        return IntervalValue.coerce(other).__add__(self)

    def __sub__(self, other: Number) -> 'IntervalValue':
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other: Number) -> 'IntervalValue':
        return IntervalValue.coerce(other).__sub__(self)

    def __mul__(self, other: Number) -> 'IntervalValue':
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other: Number) -> 'IntervalValue':
        return IntervalValue.coerce(other).__mul__(self)

    def __truediv__(self, other: Number) -> 'IntervalValue':
        other = IntervalValue.coerce(other)
        if not other.excludes_zero():
            raise DomainError(f"division by an interval containing zero: {other!r}")
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other: Number) -> 'IntervalValue':
        return IntervalValue.coerce(other).__truediv__(self)

    def __neg__(self) -> 'IntervalValue':
        return IntervalValue(-self.hi, -self.lo)

    def __pow__(self, exponent: Union[int, Fraction, 'IntervalValue']) -> 'IntervalValue':
        if isinstance(exponent, (int, np.integer)):
            exponent = int(exponent)
            if exponent < 0 and not self.excludes_zero():
                raise DomainError(f"negative power of an interval containing zero: {self!r}")
            with _iv_context():
                return IntervalValue._from_iv(self._as_iv() ** exponent)
        if isinstance(exponent, Fraction) and exponent.denominator == 1:
            return self ** int(exponent.numerator)
        exponent = IntervalValue.coerce(exponent)
        if self.lo < 0:
            raise DomainError(f"fractional power of an interval with negative part: {self!r}")
        if self.lo == 0:
            if exponent.lo <= 0:
                raise DomainError("non-positive fractional power of an interval touching zero")
            upper = IntervalValue(self.hi, self.hi) ** exponent if self.hi > 0 else IntervalValue(mpf(0), mpf(0))
            return IntervalValue(mpf(0), upper.hi)
        with _iv_context():
            return IntervalValue._from_iv(self._as_iv() ** exponent._as_iv())

    def sqrt(self) -> 'IntervalValue':
        if self.lo < 0:
            raise DomainError(f"square root of an interval with negative part: {self!r}")
        with _iv_context():
            return IntervalValue._from_iv(iv.sqrt(self._as_iv()))

    def root(self, degree: int) -> 'IntervalValue':
        return self ** Fraction(1, degree)

    def maximum(self, other: Number) -> 'IntervalValue':
        other = IntervalValue.coerce(other)
        return IntervalValue(max(self.lo, other.lo), max(self.hi, other.hi))

    def minimum(self, other: Number) -> 'IntervalValue':
        other = IntervalValue.coerce(other)
        return IntervalValue(min(self.lo, other.lo), min(self.hi, other.hi))


ZERO = IntervalValue(mpf(0), mpf(0))
ONE = IntervalValue(mpf(1), mpf(1))


def gamma_at_half_integer(twice_argument: int) -> IntervalValue:
    """
    Rigorous Gamma(m/2) for a positive integer m

    Args:
        twice_argument: m, so that the argument is m/2

    Returns:
        Enclosure from the factorial identities; half-integers pick up sqrt(pi)
    """
    m = int(twice_argument)
    if m <= 0:
        raise DomainError(f"Gamma is only carried at positive integers and half-integers, got {m}/2")
    if m % 2 == 0:
        k = m // 2
        return IntervalValue.coerce(_factorial(k - 1))
    # Gamma(k + 1/2) = (2k)! / (4^k k!) * sqrt(pi)
    k = (m - 1) // 2
    return IntervalValue.rational(_factorial(2 * k), 4 ** k * _factorial(k)) * IntervalValue.pi().sqrt()


def _factorial(k: int) -> int:
    result = 1
    for i in range(2, k + 1):
        result *= i
    return result


def unit_ball_volume(n: int) -> IntervalValue:
    """omega_n = pi^(n/2) / Gamma(n/2 + 1)"""
    if n < 1:
        raise DomainError(f"dimension must be positive, got {n}")
    if n % 2 == 0:
        return IntervalValue.pi() ** (n // 2) / gamma_at_half_integer(n + 2)
    return IntervalValue.pi() ** Fraction(n, 2) / gamma_at_half_integer(n + 2)


def unit_sphere_measure(n: int) -> IntervalValue:
    """Surface measure of the unit sphere S^n in R^(n+1): (n+1) * omega_(n+1)"""
    return (n + 1) * unit_ball_volume(n + 1)


# ----------------------------------------------------------------------
# soundness fuzzing
# ----------------------------------------------------------------------
_FUZZ_OPS = ('add', 'sub', 'mul', 'div', 'sqrt', 'pow_int', 'pow_frac', 'max')
_FRACTIONAL_EXPONENTS = (Fraction(1, 2), Fraction(1, 3), Fraction(3, 4), Fraction(1, 8), Fraction(5, 2))


def _random_leaf(rng: np.random.Generator) -> Tuple[IntervalValue, mpf]:
    kind = rng.integers(0, 3)
    if kind == 0:
        numerator = int(rng.integers(-50, 51))
        denominator = int(rng.integers(1, 30))
        return IntervalValue.rational(numerator, denominator), mpf(numerator) / denominator
    if kind == 1:
        x = float(rng.uniform(-10.0, 10.0))
        return IntervalValue.point(x), mpf(x)
    # genuinely wide leaf; the reference picks an exact member
    lo = float(rng.uniform(-5.0, 5.0))
    hi = lo + float(rng.uniform(0.0, 1.0))
    member = mpf(lo) + (mpf(hi) - mpf(lo)) * mpf(float(rng.uniform()))
    return IntervalValue.from_bounds(lo, hi), member


def _random_tree(rng: np.random.Generator, depth: int) -> Tuple[IntervalValue, mpf]:
    if depth == 0 or rng.uniform() < 0.25:
        return _random_leaf(rng)
    op = _FUZZ_OPS[int(rng.integers(0, len(_FUZZ_OPS)))]
    left, left_ref = _random_tree(rng, depth - 1)
    if op in ('add', 'sub', 'mul', 'div', 'max'):
        right, right_ref = _random_tree(rng, depth - 1)
        if op == 'add':
            return left + right, left_ref + right_ref
        if op == 'sub':
            return left - right, left_ref - right_ref
        if op == 'mul':
            return left * right, left_ref * right_ref
        if op == 'div':
            return left / right, left_ref / right_ref
        return left.maximum(right), max(left_ref, right_ref)
    if op == 'sqrt':
        return left.sqrt(), mp.sqrt(left_ref)
    if op == 'pow_int':
        k = int(rng.integers(-3, 5))
        return left ** k, left_ref ** k
    exponent = _FRACTIONAL_EXPONENTS[int(rng.integers(0, len(_FRACTIONAL_EXPONENTS)))]
    reference = mp.root(left_ref, exponent.denominator) ** exponent.numerator
    return left ** exponent, reference


def interval_fuzz(n_trees: int, seed: int = 0, max_depth: int = 4, reference_digits: int = 80) -> Dict[str, int]:
    """
    Evaluate random expression trees in interval arithmetic and against a
    high-precision reference evaluated at a member of every leaf.

    Returns:
        Counts of checked trees, trees skipped on domain errors, and violations
    """
    rng = np.random.default_rng(seed)
    checked = skipped = violations = 0
    with mp.workdps(reference_digits):
        slack = mpf(10) ** (-(reference_digits - 10))
        for _ in range(n_trees):
            try:
                enclosure, reference = _random_tree(rng, max_depth)
            except (DomainError, ZeroDivisionError, ValueError):
                skipped += 1
                continue
            if mp.isnan(reference) or mp.isinf(reference) or isinstance(reference, type(mp.mpc(0))):
                skipped += 1
                continue
            tolerance = slack * max(abs(reference), mpf(1))
            if not (enclosure.lo - tolerance <= reference <= enclosure.hi + tolerance):
                violations += 1
                logger.error(f"Interval soundness violation: reference {reference} outside {enclosure!r}")
            checked += 1
    logger.info(f"Interval fuzz: {checked} checked, {skipped} skipped, {violations} violations")
    return {'checked': checked, 'skipped': skipped, 'violations': violations}
