"""Data generation, replication engine, and builtin experiments."""

import numpy as np
import pytest

from precshrink import (
    CovarianceModel,
    DistributionSpec,
    ExperimentConfig,
    TargetSpec,
    build_covariance,
    builtin_experiments,
    generate_data,
    replication_rng,
    run_experiment,
    run_grid_point,
)
from precshrink.linalg import matrix_norms
from precshrink.simulation import THREE_BLOCK, with_overrides


def small_config(**overrides):
    base = dict(
        name="unit",
        spectrum=THREE_BLOCK,
        targets=(TargetSpec.identity_over_p(),),
        ratio=1.0 / 3.0,
        p_grid=(15, 30),
        distribution=DistributionSpec("gaussian"),
        replications=4,
        seed=99,
        estimators=("sample_inv", "olse_precision", "olse_precision_oracle", "ev_oracle"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestDistributionSpec:
    def test_gaussian_takes_no_df(self):
        with pytest.raises(ValueError, match="degrees of freedom"):
            DistributionSpec("gaussian", degrees_of_freedom=5.0)

    def test_student_requires_df(self):
        with pytest.raises(ValueError, match="degrees_of_freedom"):
            DistributionSpec("student_t")

    def test_df_at_most_two_always_rejected(self):
        with pytest.raises(ValueError, match="df > 2"):
            DistributionSpec("student_t", degrees_of_freedom=2.0, allow_low_df=True)

    def test_df_at_most_four_needs_override(self):
        with pytest.raises(ValueError, match="fourth-moment"):
            DistributionSpec("student_t", degrees_of_freedom=3.0)
        spec = DistributionSpec("student_t", degrees_of_freedom=3.0, allow_low_df=True)
        assert spec.degrees_of_freedom == 3.0

    def test_labels(self):
        assert DistributionSpec("gaussian").label == "gaussian"
        assert DistributionSpec("student_t", degrees_of_freedom=10.0).label == "student_t(df=10)"

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown distribution"):
            DistributionSpec("laplace")


class TestGenerateData:
    def test_deterministic_for_fixed_stream(self):
        truth = build_covariance(THREE_BLOCK, 10)
        dist = DistributionSpec("gaussian")
        a = generate_data(truth, 30, dist, replication_rng(7, 10, 3)).values
        b = generate_data(truth, 30, dist, replication_rng(7, 10, 3)).values
        np.testing.assert_array_equal(a, b)

    def test_streams_differ_across_replications(self):
        truth = build_covariance(THREE_BLOCK, 10)
        dist = DistributionSpec("gaussian")
        a = generate_data(truth, 30, dist, replication_rng(7, 10, 0)).values
        b = generate_data(truth, 30, dist, replication_rng(7, 10, 1)).values
        assert not np.array_equal(a, b)

    def test_identity_covariance_concentrates(self):
        truth = CovarianceModel.isotropic(10, 1.0)
        data = generate_data(truth, 1000, DistributionSpec("gaussian"), replication_rng(1, 10, 0))
        s = (data.values @ data.values.T) / 1000.0
        assert matrix_norms(s - np.eye(10))[2] < 0.3

    def test_student_t_unit_variance(self):
        truth = CovarianceModel.isotropic(1, 1.0)
        dist = DistributionSpec("student_t", degrees_of_freedom=10.0)
        data = generate_data(truth, 1_000_000, dist, replication_rng(2, 1, 0))
        variance = float(np.var(data.values))
        assert 0.99 <= variance <= 1.01

    def test_shape(self):
        truth = build_covariance(THREE_BLOCK, 5)
        data = generate_data(truth, 12, DistributionSpec("gaussian"), replication_rng(3, 5, 0))
        assert data.values.shape == (5, 12)


class TestRunExperiment:
    def test_baseline_prial_is_exactly_zero(self):
        reports = run_experiment(small_config())
        for report in reports:
            assert report.summary("sample_inv").prial_percent == 0.0

    def test_true_precision_target_reaches_100(self):
        config = small_config(
            targets=(TargetSpec.true_precision(),),
            estimators=("sample_inv", "olse_precision_oracle"),
            p_grid=(12,),
        )
        report = run_experiment(config)[0]
        entry = report.summary("olse_precision_oracle[true_precision]")
        assert entry.prial_percent == 100.0
        assert entry.mean_loss == 0.0

    def test_threads_do_not_change_results(self):
        config = small_config(replications=8)
        serial = run_experiment(config, threads=1)
        parallel = run_experiment(config, threads=4)
        for a, b in zip(serial, parallel):
            for ea, eb in zip(a.summaries, b.summaries):
                assert ea == eb

    def test_replication_results_are_deterministic(self):
        config = small_config(p_grid=(15,))
        _, reps_a = run_grid_point(config, 15)
        _, reps_b = run_grid_point(config, 15, threads=3)
        for ra, rb in zip(reps_a, reps_b):
            assert ra.losses == rb.losses
            assert ra.weights == rb.weights

    def test_regime_routing_low_ratio(self):
        report = run_experiment(small_config(p_grid=(15,)))[0]
        assert report.baseline_id == "sample_inv"
        ids = [e.estimator_id for e in report.summaries]
        assert "sample_pinv" not in ids

    def test_regime_routing_high_ratio(self):
        config = small_config(
            ratio=1.5,
            p_grid=(15,),
            estimators=("sample_pinv", "olse_precision", "olse_precision_oracle", "ev_oracle"),
        )
        report = run_experiment(config)[0]
        assert report.baseline_id == "sample_pinv"
        skipped = report.summary("olse_precision[identity_over_p]")
        assert skipped.status == "skipped"
        assert "p >= n" in skipped.reason
        assert report.summary("olse_precision_oracle[identity_over_p]").status == "ok"

    def test_losses_finite_and_nonnegative(self):
        _, replications = run_grid_point(small_config(p_grid=(15,)), 15)
        for result in replications:
            for loss in result.losses.values():
                assert np.isfinite(loss) and loss >= 0.0

    def test_weights_recorded_for_shrinkage_estimators(self):
        _, replications = run_grid_point(small_config(p_grid=(15,)), 15)
        assert "olse_precision[identity_over_p]" in replications[0].weights
        assert "sample_inv" not in replications[0].weights

    def test_baseline_added_when_missing(self):
        config = small_config(estimators=("ev_oracle",), p_grid=(15,))
        report = run_experiment(config)[0]
        assert report.summary("sample_inv").prial_percent == 0.0


class TestConfigValidation:
    def test_sample_size_floor(self):
        with pytest.raises(ValueError, match="n < 2"):
            small_config(p_grid=(1,), ratio=1.0)

    def test_unknown_estimator(self):
        with pytest.raises(ValueError, match="unknown estimator"):
            small_config(estimators=("sample_inv", "magic"))

    def test_replication_floor(self):
        with pytest.raises(ValueError, match="replication"):
            small_config(replications=0)

    def test_negative_seed(self):
        with pytest.raises(ValueError, match="seed"):
            small_config(seed=-3)

    def test_targeted_estimators_need_targets(self):
        with pytest.raises(ValueError, match="target spec"):
            small_config(targets=(), estimators=("sample_inv", "olse_precision"))

    def test_with_overrides(self):
        config = with_overrides(small_config(), replications=9, seed=5, p_grid=(20,))
        assert config.replications == 9
        assert config.seed == 5
        assert config.p_grid == (20,)


class TestBuiltinExperiments:
    def test_names(self):
        configs = builtin_experiments()
        assert set(configs) == {"fig1", "fig2", "fig3a", "fig3b", "fig4", "fig5"}

    def test_fig1_spectrum(self):
        spectrum = builtin_experiments()["fig1"].spectrum
        assert spectrum.atoms == ((0.2, 1.0), (0.4, 3.0), (0.4, 10.0))

    def test_fig2_has_five_separation_priors(self):
        config = builtin_experiments()["fig2"]
        named = [t for t in config.targets if t.kind == "cov_spectrum"]
        assert [t.name for t in named] == ["prior1", "prior2", "prior3", "prior4", "prior5"]
        prior4 = named[3].cov_spectrum
        assert prior4.atoms == ((0.2, 0.1), (0.4, 1.0), (0.4, 1000.0))

    def test_fig4_is_student_t(self):
        config = builtin_experiments()["fig4"]
        assert config.distribution.kind == "student_t"
        assert config.distribution.degrees_of_freedom == 10.0

    def test_fig5_ratio_and_baseline(self):
        config = builtin_experiments()["fig5"]
        assert config.ratio == 1.5
        assert "sample_pinv" in config.estimators
