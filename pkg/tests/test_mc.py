import math
from fractions import Fraction

import numpy as np
import pytest

from restime.core import DistributionSpec, DomainError
from restime.mc import (
    ExperimentConfig,
    _draw_array,
    exact_variance_small,
    replicate_stream,
    run_experiment,
    sample,
)
from restime.moments import exact_moments
from restime.taylor import evaluate_expression, generate_expression

from .oracles import enumeration_variance

GEOM_HALF = DistributionSpec.geometric(Fraction(1, 2))


class TestSampling:
    def test_degenerate_support(self):
        s = sample(DistributionSpec.uniform(5, 5), 40, replicate_stream(0, 0))
        assert s.steps == (5,) * 40

    def test_repeatable(self):
        a = sample(GEOM_HALF, 100, replicate_stream(9, 4))
        b = sample(GEOM_HALF, 100, replicate_stream(9, 4))
        assert a.steps == b.steps

    def test_streams_differ_by_index(self):
        a = sample(GEOM_HALF, 100, replicate_stream(9, 0))
        b = sample(GEOM_HALF, 100, replicate_stream(9, 1))
        assert a.steps != b.steps

    def test_geometric_mean_matches(self):
        p = Fraction(3, 10)
        x = _draw_array(DistributionSpec.geometric(p), 1_000_000, replicate_stream(5, 0))
        se = math.sqrt(float((1 - p) / p**2) / 1_000_000)
        assert abs(x.mean() - float(1 / p)) <= 5 * se

    def test_geometric_support_starts_at_one(self):
        x = _draw_array(DistributionSpec.geometric(Fraction(9, 10)), 10_000, replicate_stream(2, 0))
        assert x.min() >= 1.0
        assert x == pytest.approx(np.round(x))

    def test_uniform_hits_both_ends(self):
        x = _draw_array(DistributionSpec.uniform(3, 6), 5_000, replicate_stream(2, 1))
        assert set(np.unique(x)) == {3.0, 4.0, 5.0, 6.0}

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            sample(GEOM_HALF, 0, replicate_stream(0, 0))


class TestConfig:
    def test_validation(self):
        with pytest.raises(DomainError):
            ExperimentConfig(dist=GEOM_HALF, sizes=(), replicates=10, seed=0)
        with pytest.raises(DomainError):
            ExperimentConfig(dist=GEOM_HALF, sizes=(10,), replicates=1, seed=0)
        with pytest.raises(DomainError):
            ExperimentConfig(
                dist=GEOM_HALF, sizes=(10,), replicates=10, seed=0, estimators=("median",)
            )

    def test_taylor_labels(self):
        cfg = ExperimentConfig(
            dist=GEOM_HALF, sizes=(10,), replicates=10, seed=0, estimators=("taylor3",)
        )
        assert cfg.estimators == ("taylor3",)


class TestRunExperiment:
    def test_minimal_run(self):
        cfg = ExperimentConfig(dist=GEOM_HALF, sizes=(5,), replicates=2, seed=1)
        rows = run_experiment(cfg)
        assert len(rows) == 1
        assert rows[0].reference_var >= 0
        assert set(rows[0].means) == {"ratio", "taylor8"}

    def test_thread_count_never_changes_output(self):
        cfg = ExperimentConfig(
            dist=DistributionSpec.uniform(1, 100), sizes=(40, 70), replicates=500, seed=3
        )
        serial = run_experiment(cfg, threads=1)
        threaded = run_experiment(cfg, threads=4)
        assert serial == threaded

    def test_rerun_is_bit_identical(self):
        cfg = ExperimentConfig(dist=GEOM_HALF, sizes=(25,), replicates=400, seed=8)
        assert run_experiment(cfg) == run_experiment(cfg)

    def test_reference_matches_exact_enumeration(self):
        d = DistributionSpec.uniform(93, 100)
        exact = float(exact_variance_small(d, 10))
        cfg = ExperimentConfig(
            dist=d, sizes=(10,), replicates=200_000, seed=2, estimators=("ratio",)
        )
        row = run_experiment(cfg)[0]
        assert abs(row.reference_var - exact) <= 5 * row.reference_var_se

    def test_reference_matches_series_value_at_large_n(self):
        d = DistributionSpec.uniform(1, 100)
        cfg = ExperimentConfig(
            dist=d, sizes=(10_000,), replicates=20_000, seed=1, estimators=("ratio",)
        )
        row = run_experiment(cfg)[0]
        series = float(evaluate_expression(generate_expression(8), exact_moments(d, 16), 10_000))
        assert abs(row.reference_var / series - 1) < 0.05


class TestExactVariance:
    def test_single_draw_two_outcomes(self):
        assert exact_variance_small(DistributionSpec.uniform(1, 2), 1) == Fraction(1, 16)

    def test_degenerate_support_is_zero(self):
        for n in (1, 3, 10):
            assert exact_variance_small(DistributionSpec.uniform(4, 4), n) == 0

    def test_matches_full_enumeration(self):
        for a, b, n in ((1, 3, 2), (1, 3, 4), (2, 5, 3), (1, 4, 4)):
            got = exact_variance_small(DistributionSpec.uniform(a, b), n)
            assert got == enumeration_variance(a, b, n)

    def test_geometric_not_enumerable(self):
        with pytest.raises(DomainError):
            exact_variance_small(GEOM_HALF, 3)

    def test_state_guard(self):
        with pytest.raises(DomainError):
            exact_variance_small(DistributionSpec.uniform(1, 50), 40, state_limit=1000)

    def test_rejects_zero_draws(self):
        with pytest.raises(DomainError):
            exact_variance_small(DistributionSpec.uniform(1, 2), 0)
