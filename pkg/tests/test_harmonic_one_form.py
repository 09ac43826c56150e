import numpy as np
import pytest

from core.errors import DegenerateRhs, NoConvergence, NotMeanZero
from core.harmonic_one_form import HarmonicOneFormBuilder, codifferential_of_coordinate_form
from core.metric_field import (MetricField, christoffel_field, laplace_beltrami, mean_zero_project_g,
                               perturbation_family)
from core.torus_field import GridSpec, ScalarField, random_band_limited


@pytest.fixture
def builder(ledger):
    return HarmonicOneFormBuilder(ledger=ledger)


def test_flat_metric_gives_the_coordinate_form(builder, grid):
    g = MetricField.flat(grid)
    solve = builder.solve_xi(g)
    assert solve.iterations == 0
    assert not np.any(solve.xi.values)
    omega = builder.build_one_form(g, solve.xi)
    assert np.array_equal(omega.components[0], np.ones(grid.shape))
    certificate = builder.certify(g)
    assert certificate.passed
    assert certificate.regime == 'theorem'
    assert certificate.min_norm == 1.0
    assert certificate.periods == (1.0, 0.0, 0.0)
    assert certificate.epsilon[0] <= 1.0 <= certificate.epsilon[1]


def test_degenerate_rhs_can_be_refused(builder, grid):
    with pytest.raises(DegenerateRhs):
        builder.solve_xi(MetricField.flat(grid), allow_degenerate=False)


def test_tiny_delta_lands_in_the_theorem_regime(builder, grid):
    certificate = builder.run(1e-15, 'offdiag', seed=0, grid=grid)
    assert certificate.regime == 'theorem'
    assert certificate.passed
    assert certificate.epsilon[0] > 0
    assert certificate.epsilon_derived is None
    assert any('derived Christoffel' in note for note in certificate.notes)
    assert certificate.min_norm >= certificate.epsilon[0] - 1e-8


def test_moderate_delta_is_reported_beyond_the_theorem(builder):
    certificate = builder.run(0.01, 'random_seeded', seed=3, grid=GridSpec(32))
    assert certificate.regime == 'beyond-theorem'
    assert certificate.epsilon is None
    assert certificate.sign == 1
    assert certificate.relative_residual <= 1e-8
    assert 0.9 < certificate.min_norm < 1.0
    assert certificate.exterior_residual < 1e-8
    assert certificate.periods[0] == pytest.approx(1.0, abs=1e-12)
    assert certificate.passed
    assert certificate.to_dict()['periods'][0] == certificate.periods[0]


def test_opposite_sign_is_worse(builder):
    fine = GridSpec(32)
    g = perturbation_family(0.01, 'conformal', fine, seed=1)
    christoffel = christoffel_field(g)
    xi = builder.solve_xi(g, christoffel=christoffel).xi
    sign, residual = builder.select_sign(g, xi, 1, christoffel)
    assert sign == 1
    rhs_norm = np.sqrt(np.mean(codifferential_of_coordinate_form(g, 1, christoffel).values ** 2))
    assert residual < 1e-6 * rhs_norm


def test_manufactured_solution(builder, grid):
    g = perturbation_family(0.01, 'offdiag', grid, seed=4)
    expected = mean_zero_project_g(random_band_limited(grid, seed=4), g)
    rhs = laplace_beltrami(g, expected)
    result = builder.solve_laplace_beltrami(g, rhs, tol=1e-12)
    assert result.final_residual <= 1e-12
    assert result.residuals[0] == pytest.approx(1.0)
    assert np.max(np.abs(result.xi.values - expected.values)) < 1e-9


def test_solver_rejects_incompatible_rhs(builder, grid):
    g = perturbation_family(0.01, 'conformal', grid, seed=0)
    with pytest.raises(NotMeanZero):
        builder.solve_laplace_beltrami(g, ScalarField.constant(grid, 1.0))


def test_zero_rhs_returns_zero(builder, grid):
    g = perturbation_family(0.01, 'conformal', grid, seed=0)
    result = builder.solve_laplace_beltrami(g, ScalarField.constant(grid, 0.0))
    assert result.iterations == 0
    assert not np.any(result.xi.values)


def test_iteration_budget_is_enforced(builder, grid):
    g = perturbation_family(0.01, 'conformal', grid, seed=0)
    with pytest.raises(NoConvergence) as info:
        builder.solve_xi(g, max_iter=0)
    assert info.value.iterations == 0


def test_tolerance_sweep(builder, grid):
    g = perturbation_family(0.01, 'random_seeded', grid, seed=2)
    sweep = builder.run_tolerance_sweep(g)
    assert [row['tol'] for row in sweep] == [1e-6, 1e-8, 1e-10]
    iterations = [row['iterations'] for row in sweep]
    assert iterations == sorted(iterations)
    assert all(row['relative_residual'] <= row['tol'] for row in sweep)


@pytest.mark.parametrize('axis', [2, 3])
def test_other_axes(builder, grid, axis):
    certificate = builder.run(0.005, 'conformal', seed=1, grid=grid, axis=axis)
    assert certificate.axis == axis
    assert certificate.periods[axis - 1] == pytest.approx(1.0, abs=1e-12)
    assert certificate.min_norm > 0


def test_config_drives_tolerances(config_manager, ledger):
    builder = HarmonicOneFormBuilder(config_manager, ledger)
    assert builder.grid_n == 16
    assert builder.tol == config_manager.get_solver_tol()
