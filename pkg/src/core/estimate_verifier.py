"""
Estimate Verifier Module
Empirical checks of every certified inequality on families of test functions and metrics
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from core.constant_ledger import ConstantLedger
from core.cutoff import CutoffFunction, profile
from core.errors import ConfigError, EstimateError
from core.interval import interval_fuzz
from core.metric_field import (ChristoffelField, MetricField, christoffel_field, inverse_c0_distance,
                               laplace_beltrami, lp_norm_g, mean_zero_project_g, measured_c0_distance,
                               measured_c1_distance, perturbation_family, pointwise_norm_g, sobolev_norm_g)
from core.torus_field import (GridSpec, OneFormField, ScalarField, TwoTensorField, gradient, hessian,
                              laplacian_flat, lp_norm, refine_field, sobolev_norm_flat, sup_norm, family_case)

SUITES = ('flat-injectivity', 'schauder', 'nonflat-injectivity', 'laplacian-comparison', 'norm-comparison',
          'auxiliary', 'cutoff', 'metric-lemmas', 'refinement', 'interval-fuzz')
REFINABLE_SUITES = ('flat-injectivity', 'schauder', 'nonflat-injectivity', 'laplacian-comparison',
                    'norm-comparison')
ZERO_FIELD_TOLERANCE = 1e-14
# inside the absorption regime of the default ledger
THEOREM_DELTA = 1e-15


@dataclass
class VerificationRecord:
    """One inequality check; passed iff lhs <= rhs_bound"""

    inequality_id: str
    test_case_id: str
    lhs: float
    rhs_bound: float
    ratio: float
    passed: bool
    grid: int
    seed: int
    gating: bool = True
    note: str = ''

    def to_dict(self) -> Dict:
        row = asdict(self)
        row['pass'] = row.pop('passed')
        return row


def make_record(inequality_id: str, test_case_id: str, lhs: float, bound: float, grid_n: int, seed: int,
                slack: float = 0.0, gating: bool = True, note: str = '') -> VerificationRecord:
    """
    Build a record; the bound is widened by the relative quadrature slack before comparison

    Args:
        lhs: measured left-hand side
        bound: ledger hi endpoint times measured right-hand-side norms
        slack: relative quadrature tolerance
    """
    rhs_bound = bound * (1.0 + slack) if bound > 0 else bound
    if rhs_bound > 0:
        ratio = lhs / rhs_bound
    else:
        ratio = 0.0 if lhs <= 0 else math.inf
    return VerificationRecord(inequality_id=inequality_id, test_case_id=test_case_id, lhs=float(lhs),
                              rhs_bound=float(rhs_bound), ratio=float(ratio), passed=bool(lhs <= rhs_bound),
                              grid=grid_n, seed=seed, gating=gating, note=note)


def summarize(records: List[VerificationRecord]) -> Dict:
    gating = [r for r in records if r.gating]
    ratios = np.array([r.ratio for r in gating if math.isfinite(r.ratio)])
    return {
        'n_records': len(records),
        'n_gating': len(gating),
        'n_informational': len(records) - len(gating),
        'n_failed': sum(1 for r in gating if not r.passed),
        'all_pass': all(r.passed for r in gating),
        'max_ratio': float(np.max(ratios)) if ratios.size else 0.0,
        'median_ratio': float(np.median(ratios)) if ratios.size else 0.0,
        'min_ratio': float(np.min(ratios)) if ratios.size else 0.0,
    }


class EnlargedCubeSample:
    """chi * v on [-1, 2]^3 sampled with the torus spacing, v tiled periodically"""

    def __init__(self, v: ScalarField, cutoff: CutoffFunction):
        n = v.grid.n_per_axis
        x = -1.0 + np.arange(3 * n) / n
        x1, x2, x3 = x[:, None, None], x[None, :, None], x[None, None, :]
        chi = cutoff.value(x1, x2, x3)
        dchi = cutoff.gradient(x1, x2, x3)
        d2chi = cutoff.hessian(x1, x2, x3)

        tile = lambda a: np.tile(a, (3, 3, 3))
        v_t = tile(v.values)
        dv = np.stack([tile(c) for c in gradient(v).components])
        d2v_flat = hessian(v).components
        d2v = np.empty((3, 3) + v_t.shape)
        for i in range(3):
            for j in range(3):
                d2v[i, j] = tile(d2v_flat[i, j])

        self.cell_volume = 1.0 / n ** 3
        self.values = chi * v_t
        self.gradient = dchi * v_t + chi * dv
        self.hessian = (d2chi * v_t + np.einsum('i...,j...->ij...', dchi, dv)
                        + np.einsum('j...,i...->ij...', dchi, dv) + chi * d2v)
        self.laplacian = np.einsum('ii...->...', self.hessian)

    def norm(self, pointwise: np.ndarray, p: float) -> float:
        return float((np.sum(np.abs(pointwise) ** p) * self.cell_volume) ** (1.0 / p))

    def gradient_norm(self, p: float) -> float:
        return self.norm(np.sqrt(np.sum(self.gradient ** 2, axis=0)), p)

    def hessian_norm(self, p: float) -> float:
        return self.norm(np.sqrt(np.sum(self.hessian ** 2, axis=(0, 1))), p)


class EstimateVerifier:
    """Runs the verification suites against a ConstantLedger"""

    def __init__(self, config_manager=None, ledger: Optional[ConstantLedger] = None):
        self.logger = logging.getLogger(__name__)
        self.config_manager = config_manager
        self.ledger = ledger if ledger is not None else ConstantLedger(config_manager)

        self.grid_n = 32
        self.seed = 0
        self.n_cases = 100
        self.inflation = 1.05
        self.quadrature_tolerance = 1e-8
        self.cutoff_samples = 301
        self.informational_delta = 0.01
        self.fuzz_trees = 1000000
        self.family_kind = 'conformal'

        if config_manager:
            self.grid_n = config_manager.get_grid_size()
            self.seed = config_manager.get_seed()
            self.n_cases = config_manager.get_n_cases()
            self.inflation = config_manager.get_sup_norm_inflation()
            self.quadrature_tolerance = config_manager.get_quadrature_tolerance()
            self.cutoff_samples = config_manager.get_cutoff_samples()
            self.informational_delta = config_manager.get_informational_delta()
            self.fuzz_trees = config_manager.get_fuzz_trees()
            self.family_kind = config_manager.get_family_kind()

        self.cutoff = CutoffFunction()
        self.logger.info(f"EstimateVerifier initialized (grid {self.grid_n}, seed {self.seed}, "
                         f"{self.n_cases} cases)")

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------
    def _grid(self, grid: Optional[GridSpec]) -> GridSpec:
        return grid if grid is not None else GridSpec(self.grid_n)

    def _cases(self, grid: GridSpec, n_cases: int, seed: int, mean_zero: bool) -> Iterator[Tuple[str, ScalarField]]:
        for index in range(n_cases):
            case_id, f = family_case(grid, index, seed, mean_zero=mean_zero)
            if lp_norm(f, 2) <= ZERO_FIELD_TOLERANCE:
                self.logger.debug(f"Skipping vanishing test function {case_id}")
                continue
            yield case_id, f

    def _record(self, inequality_id: str, case_id: str, lhs: float, bound: float, grid: GridSpec, seed: int,
                gating: bool = True, note: str = '') -> VerificationRecord:
        return make_record(inequality_id, case_id, lhs, bound, grid.n_per_axis, seed,
                           slack=self.quadrature_tolerance, gating=gating, note=note)

    def ledger_delta(self, g: MetricField) -> float:
        """Inflated measured C^1 distance used for ledger lookups"""
        return self.inflation * measured_c1_distance(g)

    def _hi(self, name: str, delta: Optional[float] = None) -> float:
        return self.ledger.eval_constant(name, delta).hi_float()

    # ------------------------------------------------------------------
    # per-case checks
    # ------------------------------------------------------------------
    def _check_flat_injectivity(self, f: ScalarField, case_id: str, seed: int) -> List[VerificationRecord]:
        lhs = sobolev_norm_flat(f, 2, 4)
        bound = self._hi('C_flat_injectivity') * lp_norm(laplacian_flat(f), 4)
        return [self._record('flat_injectivity', case_id, lhs, bound, f.grid, seed)]

    def _check_schauder(self, u: ScalarField, case_id: str, seed: int) -> List[VerificationRecord]:
        lhs = sobolev_norm_flat(u, 2, 4)
        bound = self._hi('C_Schauder') * (lp_norm(laplacian_flat(u), 4) + lp_norm(u, 4))
        return [self._record('schauder', case_id, lhs, bound, u.grid, seed)]

    def _check_nonflat_injectivity(self, f: ScalarField, case_id: str, seed: int, g: MetricField,
                                   christoffel: ChristoffelField, informational: bool = False
                                   ) -> List[VerificationRecord]:
        delta = self.ledger_delta(g)
        f = mean_zero_project_g(f, g)
        lhs = sobolev_norm_g(f, 2, 4, g, christoffel)
        laplacian_norm = lp_norm_g(laplace_beltrami(g, f, christoffel), 4, g)
        if not informational:
            bound = self._hi('C_nonflat_injectivity', delta) * laplacian_norm
            return [self._record('nonflat_injectivity', case_id, lhs, bound, g.grid, seed)]

        formal = self.ledger.c_nonflat_injectivity_formal(delta)
        empirical = lhs / laplacian_norm if laplacian_norm > 0 else math.inf
        note = f"formal C4 at delta'={delta:.3e} is {formal!r}; empirical constant {empirical:.4g}"
        if not formal.certainly_positive():
            note += '; absorption fails, formal constant not positive'
        return [self._record('nonflat_injectivity_formal', case_id, lhs, formal.hi_float() * laplacian_norm,
                             g.grid, seed, gating=False, note=note)]

    def _check_laplacian_comparison(self, u: ScalarField, case_id: str, seed: int, g: MetricField,
                                    christoffel: ChristoffelField) -> List[VerificationRecord]:
        delta = self.ledger_delta(g)
        weighted = laplace_beltrami(g, u, christoffel).values * g.det ** 0.125
        lhs = lp_norm(ScalarField(u.grid, laplacian_flat(u).values - weighted), 4)
        bound = self._hi('C_laplacian_comparison', delta) * sobolev_norm_flat(u, 2, 4)
        return [self._record('laplacian_comparison', case_id, lhs, bound, u.grid, seed)]

    def _check_norm_comparison(self, u: ScalarField, case_id: str, seed: int, g: MetricField,
                               christoffel: ChristoffelField) -> List[VerificationRecord]:
        delta = self.ledger_delta(g)
        flat = sobolev_norm_flat(u, 2, 4)
        curved = sobolev_norm_g(u, 2, 4, g, christoffel)
        return [
            self._record('norm_comparison_upper', case_id, curved, self._hi('C_W2p_hi', delta) * flat, u.grid, seed),
            self._record('norm_comparison_lower', case_id, self._hi('C_W2p_lo', delta) * flat, curved, u.grid, seed),
        ]

    # ------------------------------------------------------------------
    # suites
    # ------------------------------------------------------------------
    def verify_flat_injectivity(self, n_cases: Optional[int] = None, grid: Optional[GridSpec] = None,
                                seed: Optional[int] = None) -> List[VerificationRecord]:
        """||f||_{W^{2,4}} <= C1 ||Laplacian f||_{L^4} on mean-zero test functions"""
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        n_cases = self.n_cases if n_cases is None else n_cases
        records = []
        for case_id, f in self._cases(grid, n_cases, seed, mean_zero=True):
            records.extend(self._check_flat_injectivity(f, case_id, seed))
        return records

    def verify_schauder(self, n_cases: Optional[int] = None, grid: Optional[GridSpec] = None,
                        seed: Optional[int] = None) -> List[VerificationRecord]:
        """||u||_{W^{2,4}} <= C_S (||Laplacian u||_{L^4} + ||u||_{L^4}), constants included"""
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        n_cases = self.n_cases if n_cases is None else n_cases
        records = self._check_schauder(ScalarField.constant(grid, 1.0), 'constant', seed)
        for case_id, u in self._cases(grid, max(n_cases - 1, 0), seed, mean_zero=False):
            records.extend(self._check_schauder(u, case_id, seed))
        return records

    def verify_nonflat_injectivity(self, delta: float, kind: Optional[str] = None, n_cases: Optional[int] = None,
                                   grid: Optional[GridSpec] = None, seed: Optional[int] = None,
                                   informational: bool = False) -> List[VerificationRecord]:
        """
        ||f||_{g,W^{2,4}} <= C4(delta') ||Delta^g f||_{g,L^4} on vol_g mean-zero test functions

        Args:
            informational: evaluate C4 formally, ignoring the absorption precondition; records are non-gating
        """
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        kind = self.family_kind if kind is None else kind
        n_cases = self.n_cases if n_cases is None else n_cases
        g = perturbation_family(delta, kind, grid, seed)
        christoffel = christoffel_field(g)
        records = []
        try:
            for case_id, f in self._cases(grid, n_cases, seed, mean_zero=True):
                records.extend(self._check_nonflat_injectivity(f, case_id, seed, g, christoffel, informational))
        except EstimateError as e:
            self.logger.error(f"Error in non-flat injectivity suite at delta={delta:.3e}: {e}")
            raise
        return records

    def verify_laplacian_comparison(self, delta: float, kind: Optional[str] = None, n_cases: Optional[int] = None,
                                    grid: Optional[GridSpec] = None,
                                    seed: Optional[int] = None) -> List[VerificationRecord]:
        """||Laplacian u - Delta^g u (det g)^(1/8)||_{L^4} <= C14(delta') ||u||_{W^{2,4}}"""
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        kind = self.family_kind if kind is None else kind
        n_cases = self.n_cases if n_cases is None else n_cases
        g = perturbation_family(delta, kind, grid, seed)
        christoffel = christoffel_field(g)
        records = []
        for case_id, u in self._cases(grid, n_cases, seed, mean_zero=False):
            records.extend(self._check_laplacian_comparison(u, case_id, seed, g, christoffel))
        return records

    def verify_norm_comparison(self, delta: float, kind: Optional[str] = None, n_cases: Optional[int] = None,
                               grid: Optional[GridSpec] = None,
                               seed: Optional[int] = None) -> List[VerificationRecord]:
        """C11(delta') ||u||_{W^{2,4}} <= ||u||_{g,W^{2,4}} <= C10(delta') ||u||_{W^{2,4}}"""
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        kind = self.family_kind if kind is None else kind
        n_cases = self.n_cases if n_cases is None else n_cases
        g = perturbation_family(delta, kind, grid, seed)
        christoffel = christoffel_field(g)
        records = []
        for case_id, u in self._cases(grid, n_cases, seed, mean_zero=False):
            records.extend(self._check_norm_comparison(u, case_id, seed, g, christoffel))
        return records

    def verify_auxiliary_inequalities(self, n_cases: Optional[int] = None, grid: Optional[GridSpec] = None,
                                      seed: Optional[int] = None) -> List[VerificationRecord]:
        """
        Poincare, Sobolev embedding, Holder and D + D^2 regularity on chi * v over [-1, 2]^3;
        cube Sobolev, Morrey and the interior gradient estimate on periodic v
        """
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        n_cases = self.n_cases if n_cases is None else n_cases
        c_poincare = self._hi('C_Poincare_Qtilde')
        k_sobolev = self._hi('C_Sobolev_embedding')
        c_holder = self._hi('C_Holder_Q_Qtilde')
        c3 = self._hi('C_grad_plus_hessian')
        c_cube = self._hi('C_Sobolev_cube')
        c_morrey = self._hi('C_Morrey')
        c_jost = self._hi('C_Jost_gradient')
        root27 = math.sqrt(27.0)

        cases = [('constant', ScalarField.constant(grid, 1.0))]
        cases.extend(self._cases(grid, max(n_cases - 1, 0), seed, mean_zero=False))
        records = []
        for case_id, v in cases:
            w = EnlargedCubeSample(v, self.cutoff)
            record = lambda name, lhs, bound: records.append(self._record(name, case_id, lhs, bound, grid, seed))
            record('poincare_enlarged_cube', w.norm(w.values, 4), c_poincare * w.gradient_norm(4))
            record('sobolev_embedding_enlarged_cube', w.norm(w.values, 6), k_sobolev * w.gradient_norm(2))
            record('holder_enlarged_cube', w.norm(w.values, 4), c_holder * w.norm(w.values, 6))
            record('grad_plus_hessian_enlarged_cube', w.gradient_norm(4) + w.hessian_norm(4),
                   c3 * w.norm(w.laplacian, 4))

            dv = gradient(v)
            record('sobolev_cube', lp_norm(v, 4), c_cube * (lp_norm(v, 2) + lp_norm(dv, 2)))
            record('morrey', sup_norm(v), c_morrey * (lp_norm(v, 4) + lp_norm(dv, 4)))
            # L^2 norms over [-1,2]^3 of a periodic field are sqrt(27) times the torus norms
            record('interior_gradient_estimate', lp_norm(dv, 2),
                   root27 * (c_jost * lp_norm(v, 2) + lp_norm(laplacian_flat(v), 2)))
        return records

    def verify_cutoff_bounds(self, sample_n: Optional[int] = None) -> List[VerificationRecord]:
        """Sampled derivative maxima of chi against the printed bounds b1, b2, b3 and their aggregates"""
        sample_n = self.cutoff_samples if sample_n is None else sample_n
        if sample_n < 300:
            raise ConfigError(f"cutoff check needs at least 300 samples per axis, got {sample_n}")
        maxima = self.cutoff.sampled_maxima(sample_n)
        case_id = f"samples{sample_n}"
        checks = (
            ('cutoff_second_pure', maxima['second_pure'], 'b_cutoff_second_pure'),
            ('cutoff_first', maxima['first'], 'b_cutoff_first'),
            ('cutoff_second_mixed', maxima['second_mixed'], 'b_cutoff_second_mixed'),
            ('cutoff_laplacian', maxima['laplacian'], 'C_cutoff_laplacian'),
            ('cutoff_gradient', maxima['gradient_norm'], 'C_cutoff_gradient'),
            ('cutoff_hessian', maxima['hessian_norm'], 'C_cutoff_hessian'),
        )
        records = []
        for inequality_id, measured, node in checks:
            record = make_record(inequality_id, case_id, measured, self._hi(node), sample_n, 0)
            if not record.passed:
                record.note = f"measured maximum exceeds {node}; reported as a discrepancy"
                self.logger.warning(f"Cutoff bound {node} exceeded: {measured:.6g}")
            records.append(record)

        s1_closed, s2_closed = self.cutoff.smootherstep_extrema()
        t = np.linspace(-1.0, 2.0, sample_n)
        measured_first = float(np.max(np.abs(profile(t, 1))))
        records.append(make_record('smootherstep_first_derivative_max', case_id, measured_first, s1_closed,
                                   sample_n, 0, slack=1e-12,
                                   note=f"closed form 15/8; sampled {measured_first!r}"))
        records.append(make_record('smootherstep_second_derivative_max', case_id,
                                   float(np.max(np.abs(profile(t, 2)))), s2_closed, sample_n, 0, slack=1e-12,
                                   note='closed form 10/sqrt(3)'))
        return records

    def verify_metric_lemmas(self, delta: float, kind: Optional[str] = None, grid: Optional[GridSpec] = None,
                             seed: Optional[int] = None, n_cases: int = 4) -> List[VerificationRecord]:
        """Determinant, inverse, Christoffel, covector and 2-tensor lemmas on one metric family member"""
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        kind = self.family_kind if kind is None else kind
        g = perturbation_family(delta, kind, grid, seed)
        case_id = f"{kind}-delta{delta:.3e}"
        c0 = measured_c0_distance(g)
        c0_inverse = inverse_c0_distance(g)
        delta_c0 = self.inflation * c0
        delta_sandwich = self.inflation * max(c0, c0_inverse)
        delta_c1 = self.ledger_delta(g)
        gamma_max = christoffel_field(g).max_abs()
        det = g.det

        records = [
            self._record('det_lower', case_id, self._hi('C_det_lo', delta_c0), float(np.min(det)), grid, seed),
            self._record('det_upper', case_id, float(np.max(det)), self._hi('C_det_hi', delta_c0), grid, seed),
            self._record('inverse_distance_derived', case_id, c0_inverse, self._hi('C_inv_derived', delta_c0),
                         grid, seed),
            self._record('inverse_distance_stated', case_id, c0_inverse, self._hi('C_inv_stated', delta_c0),
                         grid, seed, gating=False, note='stated 2 delta bound, reported only'),
            self._record('christoffel_derived', case_id, gamma_max, self._hi('C_Christoffel_derived', delta_c1),
                         grid, seed),
            self._record('christoffel_paper', case_id, gamma_max, self._hi('C_Christoffel', delta_c1),
                         grid, seed, gating=False, note='9 delta^2 bound, reported only'),
        ]

        rng = np.random.default_rng(seed)
        cov_lo, cov_hi = self._hi('C_cov_lo', delta_sandwich), self._hi('C_cov_hi', delta_sandwich)
        two_lo, two_hi = self._hi('C_2t_lo', delta_c0), self._hi('C_2t_hi', delta_c0)
        for index in range(n_cases):
            omega = OneFormField(grid, rng.standard_normal((3,) + grid.shape))
            tensor = TwoTensorField(grid, rng.standard_normal((3, 3) + grid.shape))
            cov_ratio = pointwise_norm_g(omega, g).values / omega.pointwise_norm()
            two_ratio = pointwise_norm_g(tensor, g).values / tensor.pointwise_norm()
            sample = f"{case_id}-random{index}"
            records.extend([
                self._record('covector_lower', sample, cov_lo, float(np.min(cov_ratio)), grid, seed),
                self._record('covector_upper', sample, float(np.max(cov_ratio)), cov_hi, grid, seed),
                self._record('two_tensor_lower', sample, two_lo, float(np.min(two_ratio)), grid, seed),
                self._record('two_tensor_upper', sample, float(np.max(two_ratio)), two_hi, grid, seed),
            ])
        return records

    def verify_refinement_stability(self, suite: str, n_cases: int = 10, grid: Optional[GridSpec] = None,
                                    seed: Optional[int] = None, delta: float = THEOREM_DELTA,
                                    kind: Optional[str] = None) -> List[VerificationRecord]:
        """
        Rerun cases on the 2N grid; a case passing at N may not exceed ratio 1 at 2N beyond the quadrature tolerance
        """
        if suite not in REFINABLE_SUITES:
            raise ConfigError(f"refinement check supports {REFINABLE_SUITES}, got {suite}")
        grid, seed = self._grid(grid), self.seed if seed is None else seed
        kind = self.family_kind if kind is None else kind
        fine = grid.refined(2)
        check = self._case_checker(suite, grid, seed, delta, kind)
        check_fine = self._case_checker(suite, fine, seed, delta, kind)
        mean_zero = suite in ('flat-injectivity', 'nonflat-injectivity')

        records = []
        for case_id, f in self._cases(grid, n_cases, seed, mean_zero=mean_zero):
            coarse_records = check(f, case_id)
            fine_records = check_fine(refine_field(f), case_id)
            for coarse, refined in zip(coarse_records, fine_records):
                records.append(make_record(f"refinement:{coarse.inequality_id}", case_id, refined.ratio,
                                           1.0 + self.quadrature_tolerance, grid.n_per_axis, seed,
                                           gating=coarse.passed,
                                           note=f"ratio drift {refined.ratio - coarse.ratio:+.3e} at N={fine.n_per_axis}"))
        return records

    def _case_checker(self, suite: str, grid: GridSpec, seed: int, delta: float,
                      kind: str) -> Callable[[ScalarField, str], List[VerificationRecord]]:
        if suite == 'flat-injectivity':
            return lambda f, case_id: self._check_flat_injectivity(f, case_id, seed)
        if suite == 'schauder':
            return lambda f, case_id: self._check_schauder(f, case_id, seed)
        g = perturbation_family(delta, kind, grid, seed)
        christoffel = christoffel_field(g)
        checks = {
            'nonflat-injectivity': self._check_nonflat_injectivity,
            'laplacian-comparison': self._check_laplacian_comparison,
            'norm-comparison': self._check_norm_comparison,
        }
        return lambda f, case_id: checks[suite](f, case_id, seed, g, christoffel)

    def verify_interval_soundness(self, n_trees: Optional[int] = None,
                                  seed: Optional[int] = None) -> List[VerificationRecord]:
        """Random expression trees against an 80-digit reference; any violation fails"""
        n_trees = self.fuzz_trees if n_trees is None else n_trees
        seed = self.seed if seed is None else seed
        stats = interval_fuzz(n_trees, seed=seed)
        return [make_record('interval_soundness', f"trees{n_trees}", float(stats['violations']), 0.0, 0, seed,
                            note=f"{stats['checked']} checked, {stats['skipped']} skipped")]

    # ------------------------------------------------------------------
    # dispatch
    # ------------------------------------------------------------------
    def run_suite(self, suite: str, delta: Optional[float] = None, kind: Optional[str] = None,
                  n_cases: Optional[int] = None, grid: Optional[GridSpec] = None,
                  seed: Optional[int] = None) -> List[VerificationRecord]:
        """
        Run one named suite and return its records ordered by (inequality_id, test_case_id)

        The non-flat injectivity suite also appends its informational run at the configured moderate delta.
        """
        if suite not in SUITES:
            raise ConfigError(f"unknown suite {suite}; choose from {SUITES}")
        metric_delta = self.informational_delta if delta is None else delta
        kind = self.family_kind if kind is None else kind
        if suite == 'flat-injectivity':
            records = self.verify_flat_injectivity(n_cases, grid, seed)
        elif suite == 'schauder':
            records = self.verify_schauder(n_cases, grid, seed)
        elif suite == 'nonflat-injectivity':
            records = self.verify_nonflat_injectivity(THEOREM_DELTA if delta is None else delta, kind, n_cases,
                                                      grid, seed)
            records += self.verify_nonflat_injectivity(self.informational_delta, kind, n_cases, grid, seed,
                                                       informational=True)
        elif suite == 'laplacian-comparison':
            records = self.verify_laplacian_comparison(metric_delta, kind, n_cases, grid, seed)
        elif suite == 'norm-comparison':
            records = self.verify_norm_comparison(metric_delta, kind, n_cases, grid, seed)
        elif suite == 'auxiliary':
            records = self.verify_auxiliary_inequalities(n_cases, grid, seed)
        elif suite == 'cutoff':
            records = self.verify_cutoff_bounds()
        elif suite == 'metric-lemmas':
            records = self.verify_metric_lemmas(metric_delta, kind, grid, seed)
        elif suite == 'refinement':
            records = []
            for name in REFINABLE_SUITES:
                suite_delta = metric_delta
                if name == 'nonflat-injectivity':
                    suite_delta = THEOREM_DELTA if delta is None else delta
                records += self.verify_refinement_stability(name, min(n_cases or 10, 10), grid, seed,
                                                            suite_delta, kind)
        else:
            records = self.verify_interval_soundness(seed=seed)

        records.sort(key=lambda r: (r.inequality_id, r.test_case_id))
        summary = summarize(records)
        log = self.logger.info if summary['all_pass'] else self.logger.warning
        log(f"Suite {suite}: {summary['n_gating']} gating records, {summary['n_failed']} failed, "
            f"max ratio {summary['max_ratio']:.3e}")
        return records
