import numpy as np
import pytest

from core.errors import ConfigError, DeltaOutOfDomain, SingularMetric
from core.metric_field import (FAMILY_KINDS, MetricField, christoffel_field, codifferential, covariant_hessian,
                               inner_product_g, inverse_c0_distance, laplace_beltrami, lp_norm_g,
                               mean_zero_project_g, measured_c0_distance, measured_c1_distance,
                               perturbation_family, pointwise_norm_g, sobolev_norm_g, write_metric_snapshot)
from core.torus_field import (GridSpec, ScalarField, gradient, hessian, laplacian_flat, lp_norm, random_band_limited,
                              read_field_snapshot, sobolev_norm_flat)


def test_flat_metric(grid):
    g = MetricField.flat(grid)
    u = random_band_limited(grid, seed=1)
    assert g.is_flat
    assert np.all(g.det == 1.0)
    assert christoffel_field(g).max_abs() == 0.0
    assert measured_c1_distance(g) == 0.0
    assert np.array_equal(laplace_beltrami(g, u).values, laplacian_flat(u).values)
    assert lp_norm_g(gradient(u), 4, g) == pytest.approx(lp_norm(gradient(u), 4), rel=1e-12)
    assert lp_norm_g(hessian(u), 2, g) == pytest.approx(lp_norm(hessian(u), 2), rel=1e-12)
    assert sobolev_norm_g(u, 2, 4, g) == pytest.approx(sobolev_norm_flat(u, 2, 4), rel=1e-12)


@pytest.mark.parametrize('kind', FAMILY_KINDS)
def test_family_lands_at_the_target_distance(grid, kind):
    g = perturbation_family(0.01, kind, grid, seed=3)
    assert g.kind == kind and g.delta_nominal == 0.01
    assert measured_c1_distance(g) == pytest.approx(0.009, rel=1e-6)
    assert measured_c0_distance(g) < measured_c1_distance(g)
    again = perturbation_family(0.01, kind, grid, seed=3)
    assert np.array_equal(g.components, again.components)
    assert not np.array_equal(g.components, perturbation_family(0.01, kind, grid, seed=4).components)


@pytest.mark.parametrize('kind', FAMILY_KINDS)
@pytest.mark.parametrize('n', [8, 16, 32])
def test_family_keeps_its_distance_below_float_spacing(kind, n):
    g = perturbation_family(1e-15, kind, GridSpec(n), seed=0)
    assert measured_c1_distance(g) == pytest.approx(0.9e-15, rel=0.02)
    assert measured_c0_distance(g) < measured_c1_distance(g)
    assert 0 < inverse_c0_distance(g) <= 6 * measured_c0_distance(g)
    assert not g.is_flat


@pytest.mark.parametrize('kind', FAMILY_KINDS)
def test_christoffel_symbols_scale_linearly_down_to_tiny_delta(grid, kind):
    tiny = christoffel_field(perturbation_family(1e-15, kind, grid, seed=2)).max_abs()
    moderate = christoffel_field(perturbation_family(1e-3, kind, grid, seed=2)).max_abs()
    assert tiny / 1e-15 == pytest.approx(moderate / 1e-3, rel=0.05)


def test_family_at_zero_is_flat(grid):
    assert perturbation_family(0.0, 'offdiag', grid).is_flat


def test_family_domain_errors(grid):
    with pytest.raises(DeltaOutOfDomain):
        perturbation_family(0.2, 'conformal', grid)
    with pytest.raises(DeltaOutOfDomain):
        perturbation_family(-0.01, 'conformal', grid)
    with pytest.raises(ConfigError):
        perturbation_family(0.01, 'diagonal', grid)


def test_singular_metric_is_rejected(grid):
    components = np.zeros((6,) + grid.shape)
    components[0] = components[3] = 1.0
    components[5] = -1.0
    with pytest.raises(SingularMetric):
        MetricField(grid, components)


def test_inverse_and_determinant_stay_near_identity(grid):
    g = perturbation_family(0.05, 'random_seeded', grid, seed=2)
    c0 = measured_c0_distance(g)
    assert inverse_c0_distance(g) <= 6 * c0 + 36 * c0 ** 3
    assert np.all(g.det >= (1 - c0) ** 3 - 2 * c0 ** 3 - 3 * (1 + c0) * c0 ** 2)
    assert np.all(g.det <= (1 + c0) ** 3 + 2 * c0 ** 3 + 3 * (1 + c0) * c0 ** 2)
    identity = np.einsum('ik...,kj...->ij...', g.matrix, g.inverse_matrix)
    assert np.allclose(identity, np.eye(3)[:, :, None, None, None], atol=1e-13)


def test_christoffel_symbols_are_symmetric_and_small(grid):
    g = perturbation_family(0.01, 'random_seeded', grid, seed=7)
    gamma = christoffel_field(g)
    assert gamma.symmetry_defect() < 1e-15
    assert 0 < gamma.max_abs() <= 1.5 * (1 + 2 * 0.01) * 3 * measured_c1_distance(g)


def test_constant_metric_scales_the_laplacian(grid):
    components = np.zeros((6,) + grid.shape)
    components[0] = components[3] = components[5] = 4.0
    g = MetricField(grid, components)
    u = random_band_limited(grid, seed=9)
    assert np.allclose(laplace_beltrami(g, u).values, laplacian_flat(u).values / 4.0, atol=1e-9)
    assert g.volume() == pytest.approx(8.0, rel=1e-14)


def test_laplace_beltrami_is_symmetric():
    fine = GridSpec(32)
    g = perturbation_family(0.01, 'random_seeded', fine, seed=1)
    u = random_band_limited(fine, seed=2, top_frequency=3)
    v = random_band_limited(fine, seed=3, top_frequency=3)
    christoffel = christoffel_field(g)
    left = inner_product_g(v, laplace_beltrami(g, u, christoffel), g)
    right = inner_product_g(u, laplace_beltrami(g, v, christoffel), g)
    assert left == pytest.approx(right, rel=1e-8, abs=1e-10)
    energy = np.mean(np.einsum('ij...,i...,j...->...', g.inverse_matrix, gradient(u).components,
                               gradient(u).components) * g.volume_density)
    assert inner_product_g(u, laplace_beltrami(g, u, christoffel), g) == pytest.approx(-energy, rel=1e-8)


def test_codifferential_of_a_gradient_is_minus_laplace_beltrami(grid):
    g = perturbation_family(0.01, 'conformal', grid, seed=5)
    u = random_band_limited(grid, seed=6)
    lhs = codifferential(g, gradient(u)).values
    rhs = -laplace_beltrami(g, u).values
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * np.max(np.abs(rhs))


def test_covariant_hessian_trace_against_inverse_metric(grid):
    g = perturbation_family(0.01, 'offdiag', grid, seed=4)
    u = random_band_limited(grid, seed=4)
    nabla_du = covariant_hessian(g, u).components
    trace = np.einsum('ij...,ij...->...', g.inverse_matrix, nabla_du)
    assert np.allclose(trace, laplace_beltrami(g, u).values, atol=1e-10)


def test_weighted_norms(grid):
    g = perturbation_family(0.01, 'conformal', grid, seed=8)
    u = random_band_limited(grid, seed=8)
    assert np.array_equal(pointwise_norm_g(u, g).values, np.abs(u.values))
    ratio = lp_norm_g(gradient(u), 4, g) / lp_norm(gradient(u), 4)
    assert (1 - 3 * 0.01) ** 0.5 * 0.99 < ratio < (1 + 3 * 0.01) ** 0.5 * 1.01


def test_mean_zero_projection_uses_volume_density(grid):
    g = perturbation_family(0.02, 'conformal', grid, seed=1)
    projected = mean_zero_project_g(ScalarField.constant(grid, 1.0) + random_band_limited(grid, seed=1), g)
    assert abs(inner_product_g(projected, ScalarField.constant(grid, 1.0), g)) < 1e-14


def test_metric_snapshot(tmp_path, grid):
    g = perturbation_family(0.01, 'offdiag', grid, seed=2)
    path, _ = write_metric_snapshot(tmp_path / 'metric.bin', g)
    data, header = read_field_snapshot(path)
    assert header['components'] == 6
    assert header['family_kind'] == 'offdiag'
    assert header['component_order'][1] == 'g12'
    assert np.array_equal(data, g.components)
