import math

import pytest

from core.errors import ConfigError
from core.estimate_verifier import (REFINABLE_SUITES, SUITES, EnlargedCubeSample, EstimateVerifier, make_record,
                                    summarize)
from core.cutoff import CutoffFunction
from core.torus_field import GridSpec, ScalarField, single_mode

N_CASES = 6


@pytest.fixture
def verifier(ledger):
    return EstimateVerifier(ledger=ledger)


def _assert_all_pass(records):
    failed = [r for r in records if r.gating and not r.passed]
    assert not failed, failed[:3]


def test_make_record_semantics():
    passing = make_record('x', 'case', 1.0, 2.0, 16, 0)
    assert passing.passed and passing.ratio == 0.5
    widened = make_record('x', 'case', 2.0 + 1e-9, 2.0, 16, 0, slack=1e-8)
    assert widened.passed and widened.rhs_bound == pytest.approx(2.0 * (1 + 1e-8))
    assert make_record('x', 'case', 0.0, 0.0, 16, 0).ratio == 0.0
    violated = make_record('x', 'case', 1e-3, 0.0, 16, 0)
    assert not violated.passed and violated.ratio == math.inf
    row = passing.to_dict()
    assert row['pass'] is True and 'passed' not in row


def test_summarize_counts_gating_records_only():
    records = [
        make_record('a', '1', 1.0, 2.0, 16, 0),
        make_record('a', '2', 3.0, 4.0, 16, 0),
        make_record('b', '1', 5.0, 1.0, 16, 0, gating=False),
    ]
    summary = summarize(records)
    assert summary['n_records'] == 3
    assert summary['n_gating'] == 2
    assert summary['n_informational'] == 1
    assert summary['all_pass'] and summary['n_failed'] == 0
    assert summary['max_ratio'] == 0.75
    assert summary['min_ratio'] == 0.5


def test_enlarged_cube_sample_of_constant_is_the_cutoff(grid):
    sample = EnlargedCubeSample(ScalarField.constant(grid, 1.0), CutoffFunction())
    assert sample.values.shape == (48, 48, 48)
    assert sample.values.max() == pytest.approx(1.0)
    assert sample.norm(sample.values, 2) ** 2 <= 27.0
    assert sample.norm(sample.values, 2) ** 2 >= 1.0


def test_flat_injectivity(verifier, grid):
    records = verifier.verify_flat_injectivity(N_CASES, grid, seed=7)
    assert len(records) == N_CASES
    _assert_all_pass(records)
    assert max(r.ratio for r in records) < 1e-6


def test_schauder_includes_constant(verifier, grid):
    records = verifier.verify_schauder(N_CASES, grid, seed=1)
    assert [r.test_case_id for r in records][0] == 'constant'
    assert len(records) == N_CASES
    _assert_all_pass(records)


def test_nonflat_injectivity_inside_the_absorption_regime(verifier, grid):
    records = verifier.verify_nonflat_injectivity(1e-15, 'random_seeded', N_CASES, grid, seed=2)
    assert {r.inequality_id for r in records} == {'nonflat_injectivity'}
    _assert_all_pass(records)


def test_nonflat_injectivity_informational_run(verifier, grid):
    records = verifier.verify_nonflat_injectivity(0.01, 'conformal', 3, grid, seed=2, informational=True)
    assert records and all(not r.gating for r in records)
    assert all('absorption fails' in r.note for r in records)
    assert summarize(records)['all_pass']


def test_flat_limit_matches_flat_injectivity(verifier, grid):
    flat = verifier.verify_flat_injectivity(3, grid, seed=4)
    curved = verifier.verify_nonflat_injectivity(0.0, 'conformal', 3, grid, seed=4)
    for a, b in zip(flat, curved):
        assert a.test_case_id == b.test_case_id
        assert b.lhs == pytest.approx(a.lhs, rel=1e-9)
        assert b.ratio == pytest.approx(a.ratio, rel=1e-9)


@pytest.mark.parametrize('kind', ['conformal', 'offdiag', 'random_seeded'])
def test_laplacian_and_norm_comparison(verifier, grid, kind):
    laplacian = verifier.verify_laplacian_comparison(0.01, kind, N_CASES, grid, seed=3)
    norms = verifier.verify_norm_comparison(0.01, kind, N_CASES, grid, seed=3)
    assert len(norms) == 2 * N_CASES
    _assert_all_pass(laplacian)
    _assert_all_pass(norms)


def test_laplacian_comparison_vanishes_on_the_flat_metric(verifier, grid):
    records = verifier.verify_laplacian_comparison(0.0, 'conformal', 3, grid, seed=0)
    assert all(r.lhs < 1e-9 for r in records)
    _assert_all_pass(records)


def test_auxiliary_inequalities(verifier, grid):
    records = verifier.verify_auxiliary_inequalities(4, grid, seed=5)
    ids = {r.inequality_id for r in records}
    assert ids == {'poincare_enlarged_cube', 'sobolev_embedding_enlarged_cube', 'holder_enlarged_cube',
                   'grad_plus_hessian_enlarged_cube', 'sobolev_cube', 'morrey', 'interior_gradient_estimate'}
    assert len(records) == 7 * 4
    _assert_all_pass(records)


def test_cutoff_bounds(verifier):
    records = verifier.verify_cutoff_bounds(301)
    assert len(records) == 8
    _assert_all_pass(records)
    with pytest.raises(ConfigError):
        verifier.verify_cutoff_bounds(100)


def test_metric_lemmas(verifier, grid):
    records = verifier.verify_metric_lemmas(0.01, 'random_seeded', grid, seed=6, n_cases=2)
    gating_ids = {r.inequality_id for r in records if r.gating}
    assert {'det_lower', 'det_upper', 'inverse_distance_derived', 'christoffel_derived', 'covector_lower',
            'covector_upper', 'two_tensor_lower', 'two_tensor_upper'} == gating_ids
    assert {'inverse_distance_stated', 'christoffel_paper'} <= {r.inequality_id for r in records if not r.gating}
    _assert_all_pass(records)


@pytest.mark.parametrize('suite', REFINABLE_SUITES)
def test_refinement_stability(verifier, suite):
    delta = 1e-15 if suite == 'nonflat-injectivity' else 0.01
    records = verifier.verify_refinement_stability(suite, n_cases=2, grid=GridSpec(8), seed=1, delta=delta)
    assert records and all(r.inequality_id.startswith('refinement:') for r in records)
    _assert_all_pass(records)


@pytest.mark.parametrize('kind', ['conformal', 'offdiag', 'random_seeded'])
def test_nonflat_injectivity_at_the_theorem_delta_for_every_family(verifier, kind):
    for n in (8, 16):
        records = verifier.verify_nonflat_injectivity(1e-15, kind, 2, GridSpec(n), seed=1)
        _assert_all_pass(records)


@pytest.mark.parametrize('kind', ['conformal', 'random_seeded'])
def test_nonflat_refinement_at_the_theorem_delta(verifier, kind):
    records = verifier.verify_refinement_stability('nonflat-injectivity', n_cases=2, grid=GridSpec(8), seed=1,
                                                   delta=1e-15, kind=kind)
    assert records
    _assert_all_pass(records)


def test_refinement_rejects_unknown_suite(verifier):
    with pytest.raises(ConfigError):
        verifier.verify_refinement_stability('cutoff')


def test_interval_soundness(verifier):
    records = verifier.verify_interval_soundness(n_trees=300, seed=1)
    assert len(records) == 1
    assert records[0].passed and records[0].lhs == 0.0


def test_run_suite_orders_records(verifier, grid):
    records = verifier.run_suite('nonflat-injectivity', n_cases=3, grid=grid, seed=0)
    keys = [(r.inequality_id, r.test_case_id) for r in records]
    assert keys == sorted(keys)
    assert {'nonflat_injectivity', 'nonflat_injectivity_formal'} == {r.inequality_id for r in records}
    assert summarize(records)['all_pass']
    with pytest.raises(ConfigError):
        verifier.run_suite('everything')


def test_runs_are_reproducible(verifier, grid):
    first = [r.to_dict() for r in verifier.run_suite('norm-comparison', delta=0.01, n_cases=3, grid=grid, seed=2)]
    second = [r.to_dict() for r in verifier.run_suite('norm-comparison', delta=0.01, n_cases=3, grid=grid, seed=2)]
    assert first == second


def test_config_drives_defaults(config_manager, ledger):
    verifier = EstimateVerifier(config_manager, ledger)
    assert verifier.grid_n == 16
    assert verifier.n_cases == 6
    assert verifier.family_kind == 'conformal'
    config_manager.set_family_kind('random_seeded')
    assert EstimateVerifier(config_manager, ledger).family_kind == 'random_seeded'
    assert len(verifier.run_suite('flat-injectivity')) == 6
    assert 'interval-fuzz' in SUITES


@pytest.mark.slow
@pytest.mark.parametrize('suite', ['flat-injectivity', 'schauder', 'auxiliary', 'norm-comparison',
                                   'laplacian-comparison', 'nonflat-injectivity'])
def test_full_acceptance_run(ledger, suite):
    verifier = EstimateVerifier(ledger=ledger)
    records = verifier.run_suite(suite, n_cases=100, grid=GridSpec(32), seed=0)
    assert summarize(records)['all_pass']


@pytest.mark.slow
def test_acceptance_on_the_other_seed(ledger):
    verifier = EstimateVerifier(ledger=ledger)
    records = verifier.run_suite('flat-injectivity', n_cases=100, grid=GridSpec(32), seed=7)
    assert summarize(records)['all_pass']
