"""
Harmonic One-Form Module
Builds omega = dx_axis + sign * d xi with d*_g omega = 0 and certifies that it never vanishes
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.constant_ledger import ConstantLedger
from core.errors import (AbsorptionFailure, DegenerateRhs, DeltaOutOfDomain, DomainError, NoConvergence,
                         NotMeanZero)
from core.metric_field import (ChristoffelField, MetricField, christoffel_field, codifferential, laplace_beltrami,
                               lp_norm_g, mean_zero_project_g, measured_c1_distance, perturbation_family,
                               pointwise_norm_g)
from core.torus_field import (GridSpec, OneFormField, ScalarField, exterior_derivative_one_form, gradient,
                              inverse_laplacian_flat, lp_norm, mean_zero_project)

COMPATIBILITY_TOLERANCE = 1e-8
SIGNS = (1, -1)


@dataclass
class SolveResult:
    """Solution of Delta^g xi = rhs with its relative residual history"""

    xi: ScalarField
    iterations: int
    residuals: List[float] = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else 0.0


@dataclass
class OneFormCertificate:
    delta: float
    kind: str
    seed: Optional[int]
    grid_n: int
    axis: int
    sign: int
    measured_c1_distance: float
    ledger_delta: float
    min_norm: float
    epsilon: Optional[Tuple[float, float]]
    epsilon_derived: Optional[Tuple[float, float]]
    regime: str
    codifferential_residual: float
    relative_residual: float
    exterior_residual: float
    periods: Tuple[float, float, float]
    solver_iterations: int
    passed: bool
    notes: List[str] = field(default_factory=list)
    config: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['periods'] = list(self.periods)
        for key in ('epsilon', 'epsilon_derived'):
            data[key] = list(data[key]) if data[key] is not None else None
        return data


def codifferential_of_coordinate_form(g: MetricField, axis: int,
                                      christoffel: Optional[ChristoffelField] = None) -> ScalarField:
    """d*_g dx_axis = g^ij Gamma^axis_ij; the constant form contributes no derivative term"""
    christoffel = christoffel if christoffel is not None else christoffel_field(g)
    values = np.einsum('ij...,ij...->...', g.inverse_matrix, christoffel.gamma[axis - 1])
    return ScalarField(g.grid, values)


class HarmonicOneFormBuilder:
    """Solves for the harmonic representative of [dx_axis] and evaluates its non-vanishing certificate"""

    def __init__(self, config_manager=None, ledger: Optional[ConstantLedger] = None):
        self.logger = logging.getLogger(__name__)
        self.config_manager = config_manager
        self.ledger = ledger if ledger is not None else ConstantLedger(config_manager)

        self.tol = 1e-10
        self.max_iter = 200
        self.residual_tolerance = 1e-8
        self.quadrature_tolerance = 1e-8
        self.inflation = 1.05
        self.grid_n = 32
        self.seed = 0
        self.family_kind = 'conformal'

        if config_manager:
            self.tol = config_manager.get_solver_tol()
            self.max_iter = config_manager.get_solver_max_iter()
            self.residual_tolerance = config_manager.get_residual_tolerance()
            self.quadrature_tolerance = config_manager.get_quadrature_tolerance()
            self.inflation = config_manager.get_sup_norm_inflation()
            self.grid_n = config_manager.get_grid_size()
            self.seed = config_manager.get_seed()
            self.family_kind = config_manager.get_family_kind()

        self.logger.info("HarmonicOneFormBuilder initialized")

    def solve_laplace_beltrami(self, g: MetricField, rhs: ScalarField, tol: Optional[float] = None,
                               max_iter: Optional[int] = None,
                               christoffel: Optional[ChristoffelField] = None) -> SolveResult:
        """
        Solve Delta^g xi = rhs for vol_g mean-zero xi

        Fixed-point iteration preconditioned by the flat inverse Laplacian; it contracts while
        the metric stays close to the identity.

        Raises:
            NotMeanZero: rhs has nonzero vol_g mean
            NoConvergence: relative residual still above tol after max_iter steps
        """
        tol = self.tol if tol is None else tol
        max_iter = self.max_iter if max_iter is None else max_iter
        christoffel = christoffel if christoffel is not None else christoffel_field(g)

        rhs_norm = lp_norm(rhs, 2)
        weighted_mean = float(np.mean(rhs.values * g.volume_density))
        if abs(weighted_mean) > COMPATIBILITY_TOLERANCE * (rhs_norm + np.finfo(float).tiny):
            raise NotMeanZero(f"right-hand side has vol_g mean {weighted_mean:.3e}, no periodic solution")
        if rhs_norm == 0.0:
            return SolveResult(ScalarField.constant(g.grid, 0.0), 0, [0.0])

        xi = ScalarField.constant(g.grid, 0.0)
        residuals = []
        for iteration in range(max_iter + 1):
            residual = laplace_beltrami(g, xi, christoffel) - rhs
            relative = lp_norm(residual, 2) / rhs_norm
            residuals.append(relative)
            if relative <= tol:
                self.logger.debug(f"Laplace-Beltrami solve converged in {iteration} iterations ({relative:.3e})")
                return SolveResult(mean_zero_project_g(xi, g), iteration, residuals)
            if not math.isfinite(relative):
                break
            xi = xi - inverse_laplacian_flat(mean_zero_project(residual))

        raise NoConvergence(f"relative residual {residuals[-1]:.3e} above {tol:.1e} after {max_iter} iterations",
                            iterations=max_iter, residual=residuals[-1])

    def solve_xi(self, g: MetricField, axis: int = 1, tol: Optional[float] = None,
                 max_iter: Optional[int] = None, christoffel: Optional[ChristoffelField] = None,
                 allow_degenerate: bool = True) -> SolveResult:
        """
        Delta^g xi = d*_g dx_axis; xi = 0 when the right-hand side vanishes

        Raises:
            DegenerateRhs: the right-hand side vanishes and allow_degenerate is False
        """
        christoffel = christoffel if christoffel is not None else christoffel_field(g)
        rhs = codifferential_of_coordinate_form(g, axis, christoffel)
        if g.is_flat or not np.any(rhs.values):
            if not allow_degenerate:
                raise DegenerateRhs(f"d*_g dx_{axis} vanishes identically; xi = 0 is the only solution")
            return SolveResult(ScalarField.constant(g.grid, 0.0), 0, [0.0])
        return self.solve_laplace_beltrami(g, rhs, tol, max_iter, christoffel)

    def build_one_form(self, g: MetricField, xi: ScalarField, sign: int = 1, axis: int = 1) -> OneFormField:
        return OneFormField.coordinate(g.grid, axis) + OneFormField(g.grid, sign * gradient(xi).components)

    def one_form_codifferential(self, g: MetricField, xi: ScalarField, sign: int, axis: int,
                                christoffel: ChristoffelField) -> ScalarField:
        """d*_g (dx_axis + sign d xi) without differentiating the constant part"""
        exact_part = OneFormField(g.grid, sign * gradient(xi).components)
        return codifferential_of_coordinate_form(g, axis, christoffel) + codifferential(g, exact_part, christoffel)

    def select_sign(self, g: MetricField, xi: ScalarField, axis: int,
                    christoffel: ChristoffelField) -> Tuple[int, float]:
        """Pick the sign whose form has the smaller codifferential residual; ties keep +1"""
        residuals = {sign: lp_norm_g(self.one_form_codifferential(g, xi, sign, axis, christoffel), 2, g)
                     for sign in SIGNS}
        if residuals[-1] < residuals[1] - 1e-12 * max(residuals.values()):
            return -1, residuals[-1]
        return 1, residuals[1]

    def _epsilon(self, evaluate, delta: float, label: str, notes: List[str]) -> Optional[Tuple[float, float]]:
        try:
            return evaluate(delta).as_floats()
        except (AbsorptionFailure, DomainError, DeltaOutOfDomain) as e:
            notes.append(f"{label} undefined at ledger delta {delta:.3e}: {e}")
            return None

    def certify(self, g: MetricField, axis: int = 1, tol: Optional[float] = None,
                max_iter: Optional[int] = None) -> OneFormCertificate:
        """Solve, pick the sign, and compare min |omega|_g with the ledger's epsilon"""
        christoffel = christoffel_field(g)
        solve = self.solve_xi(g, axis, tol, max_iter, christoffel)
        sign, residual = self.select_sign(g, solve.xi, axis, christoffel)
        omega = self.build_one_form(g, solve.xi, sign, axis)

        reference = lp_norm_g(codifferential_of_coordinate_form(g, axis, christoffel), 2, g)
        relative = residual / reference if reference > 0 else 0.0
        min_norm = float(np.min(pointwise_norm_g(omega, g).values))
        exterior = float(np.max(np.abs(exterior_derivative_one_form(omega))))
        periods = tuple(float(np.mean(omega.components[i])) for i in range(3))

        measured = measured_c1_distance(g)
        ledger_delta = self.inflation * measured
        notes = []
        epsilon = self._epsilon(self.ledger.epsilon_one_form, ledger_delta, 'epsilon', notes)
        epsilon_derived = self._epsilon(self.ledger.epsilon_one_form_derived, ledger_delta,
                                        'epsilon with the derived Christoffel bound', notes)
        in_theorem = epsilon is not None and epsilon[0] > 0
        regime = 'theorem' if in_theorem else 'beyond-theorem'

        passed = min_norm > 0 and relative <= self.residual_tolerance
        if in_theorem and min_norm < epsilon[0] - self.quadrature_tolerance:
            notes.append(f"min |omega|_g = {min_norm:.12g} below certified epsilon {epsilon[0]:.12g}")
            passed = False
        if relative > self.residual_tolerance:
            notes.append(f"relative codifferential residual {relative:.3e} above {self.residual_tolerance:.1e}")

        certificate = OneFormCertificate(
            delta=g.delta_nominal, kind=g.kind, seed=g.seed, grid_n=g.grid.n_per_axis, axis=axis, sign=sign,
            measured_c1_distance=measured, ledger_delta=ledger_delta, min_norm=min_norm,
            epsilon=epsilon, epsilon_derived=epsilon_derived, regime=regime,
            codifferential_residual=residual, relative_residual=relative, exterior_residual=exterior,
            periods=periods, solver_iterations=solve.iterations, passed=passed, notes=notes,
            config={
                'tol': self.tol if tol is None else tol,
                'max_iter': self.max_iter if max_iter is None else max_iter,
                'residual_tolerance': self.residual_tolerance,
                'quadrature_tolerance': self.quadrature_tolerance,
                'sup_norm_inflation': self.inflation,
                'christoffel_bound': self.ledger.christoffel_bound,
                'inverse_bound': self.ledger.inverse_bound,
            },
        )
        log = self.logger.info if passed else self.logger.warning
        log(f"One-form certificate ({g.kind}, delta={g.delta_nominal:.3e}): min |omega|_g = {min_norm:.12g}, "
            f"regime {regime}, passed={passed}")
        return certificate

    def run(self, delta: float, kind: Optional[str] = None, seed: Optional[int] = None,
            grid: Optional[GridSpec] = None, axis: int = 1) -> OneFormCertificate:
        grid = grid if grid is not None else GridSpec(self.grid_n)
        seed = self.seed if seed is None else seed
        kind = self.family_kind if kind is None else kind
        return self.certify(perturbation_family(delta, kind, grid, seed), axis)

    def run_tolerance_sweep(self, g: MetricField, tols: Tuple[float, ...] = (1e-6, 1e-8, 1e-10),
                            axis: int = 1) -> List[Dict]:
        """Iterations and achieved residual per solver tolerance"""
        christoffel = christoffel_field(g)
        sweep = []
        for tol in tols:
            solve = self.solve_xi(g, axis, tol, None, christoffel)
            sweep.append({'tol': tol, 'iterations': solve.iterations, 'relative_residual': solve.final_residual})
        return sweep
