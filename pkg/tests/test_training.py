import math

import numpy as np
import pytest

from isoclust import (
    AdamState,
    DataError,
    LabelAssignment,
    MixtureSpec,
    PointCloud,
    TrainConfig,
    Trajectory,
    TrajectoryRecord,
    adam_step,
    generate_mixture,
    read_trajectory,
    run_experiment,
    write_trajectory,
)

CFG = TrainConfig(steps=1)


class TestTrainConfig:
    def test_defaults_follow_optimizer_convention(self):
        cfg = TrainConfig(steps=10)
        assert cfg.learning_rate == 0.001
        assert (cfg.beta1, cfg.beta2) == (0.9, 0.999)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"steps": 0},
            {"steps": 5, "learning_rate": 0.0},
            {"steps": 5, "beta1": 1.0},
            {"steps": 5, "metric_cadence": 0},
            {"steps": 5, "sample_cap": 0},
            {"steps": 5, "loss_kind": "hinge"},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(DataError):
            TrainConfig(**kwargs)


class TestAdamStep:
    def test_first_step_magnitude(self):
        params = np.array([1.0])
        grads = np.array([4.0])
        updated, state = adam_step(params, grads, AdamState.zeros(1), CFG)
        assert updated[0] == pytest.approx(1.0 - 0.001, abs=1e-6)
        assert state.t == 1

    def test_zero_gradient_leaves_params(self):
        params = np.array([2.0, -3.0])
        updated, _ = adam_step(params, np.zeros(2), AdamState.zeros(2), CFG)
        assert np.array_equal(updated, params)

    def test_repeated_gradient_non_increasing_updates(self):
        params = np.array([0.0])
        grads = np.array([2.5])
        state = AdamState.zeros(1)
        p1, state = adam_step(params, grads, state, CFG)
        first = abs(p1[0] - params[0])
        p2, state = adam_step(p1, grads, state, CFG)
        second = abs(p2[0] - p1[0])
        assert second <= first + 1e-9
        assert state.v[0] > 0 and state.t == 2

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        params = rng.standard_normal((4, 3))
        grads = rng.standard_normal((4, 3))
        a, _ = adam_step(params, grads, AdamState.zeros(params.shape), CFG)
        b, _ = adam_step(params, grads, AdamState.zeros(params.shape), CFG)
        assert np.array_equal(a, b)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            adam_step(np.zeros(2), np.zeros(3), AdamState.zeros(2), CFG)


class TestTrajectoryCsv:
    def test_round_trip(self, tmp_path):
        traj = Trajectory(
            records=(
                TrajectoryRecord(1, 0.5, 0.25, 0.75),
                TrajectoryRecord(2, 0.4, math.nan, 0.7),
                TrajectoryRecord(4, 0.3, 0.3, math.nan),
            )
        )
        path = tmp_path / "t.csv"
        write_trajectory(traj, path)
        text = path.read_text()
        assert text.splitlines()[0] == "step,loss,silhouette,isoscore"
        assert ",," in text  # NaN became an empty field
        back = read_trajectory(path)
        assert len(back) == 3
        assert back.records[0] == traj.records[0]
        assert math.isnan(back.records[1].silhouette)
        assert math.isnan(back.records[2].isoscore)

    def test_rewrite_is_byte_identical(self, tmp_path):
        traj = Trajectory(records=(TrajectoryRecord(1, 1 / 3, 0.1234567890123456, 0.9),))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trajectory(traj, a)
        write_trajectory(read_trajectory(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n1,2,3,4\n")
        with pytest.raises(DataError, match="header"):
            read_trajectory(path)

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("step,loss,silhouette,isoscore\n1,0.5,0.2\n")
        with pytest.raises(DataError, match="line 2"):
            read_trajectory(path)

    def test_steps_must_increase(self):
        with pytest.raises(DataError):
            Trajectory(records=(TrajectoryRecord(2, 0, 0, 0), TrajectoryRecord(2, 0, 0, 0)))


def small_mixture(seed=5, multilabel=None, **kwargs):
    defaults = dict(num_classes=2, dim=16, points_per_class=200, seed=seed)
    defaults.update(kwargs)
    spec = MixtureSpec(multilabel=multilabel, **defaults)
    return generate_mixture(spec)


class TestRunExperiment:
    def test_classification_improves_clusters_and_erodes_isotropy(self):
        cloud, labels = small_mixture()
        cfg = TrainConfig(steps=200, seed=5)
        traj = run_experiment(cloud, labels, cfg)
        assert len(traj) == 200
        sil = traj.column("silhouette")
        iso = traj.column("isoscore")
        assert sil[-1] > sil[0]
        assert iso[-1] < iso[0]

    def test_bit_exact_determinism(self):
        cloud, labels = small_mixture(seed=6)
        cfg = TrainConfig(steps=20, seed=123, sample_cap=100)
        a = run_experiment(cloud, labels, cfg)
        b = run_experiment(cloud, labels, cfg)
        assert a.records == b.records

    def test_cadence_controls_rows(self):
        cloud, labels = small_mixture(points_per_class=20)
        cfg = TrainConfig(steps=10, metric_cadence=3, seed=0)
        traj = run_experiment(cloud, labels, cfg)
        assert [r.step for r in traj.records] == [3, 6, 9]

    def test_loss_label_compatibility(self):
        cloud, labels = small_mixture(points_per_class=10)
        with pytest.raises(DataError):
            run_experiment(cloud, labels, TrainConfig(steps=1, loss_kind="binary_cross_entropy_multilabel"))

    def test_multilabel_path(self):
        from isoclust import MultilabelSpec

        cloud, labels = small_mixture(
            multilabel=MultilabelSpec(num_symbols=2, probability=0.4), points_per_class=50
        )
        assert labels.is_multilabel
        cfg = TrainConfig(steps=30, loss_kind="binary_cross_entropy_multilabel", seed=2)
        traj = run_experiment(cloud, labels, cfg)
        assert len(traj) == 30
        assert np.isfinite(traj.column("loss")).all()

    def test_metric_failure_records_sentinel_and_continues(self):
        # identical points with identical labels per class: triplet gradients
        # vanish, the cloud never moves, and isotropy stays undefined
        pts = np.zeros((8, 4))
        labels = LabelAssignment.single(["a"] * 4 + ["b"] * 4)
        cfg = TrainConfig(steps=3, loss_kind="triplet", seed=1)
        traj = run_experiment(PointCloud(pts), labels, cfg)
        assert len(traj) == 3
        assert np.isnan(traj.column("isoscore")).all()
        assert np.array_equal(traj.column("silhouette"), np.zeros(3))

    def test_triplet_training_runs_and_is_deterministic(self):
        cloud, labels = small_mixture(points_per_class=15, dim=4)
        cfg = TrainConfig(steps=15, loss_kind="triplet", seed=9)
        a = run_experiment(cloud, labels, cfg)
        b = run_experiment(cloud, labels, cfg)
        assert a.records == b.records
        assert np.isfinite(a.column("loss")).all()

    def test_triplet_sampled_mode(self):
        # above the enumeration cap the harness samples triples each step
        cloud, labels = small_mixture(points_per_class=40, dim=4, seed=8)
        assert cloud.n > 64
        cfg = TrainConfig(steps=5, loss_kind="triplet", seed=3, triplet_cap=64, triplet_samples=256)
        a = run_experiment(cloud, labels, cfg)
        b = run_experiment(cloud, labels, cfg)
        assert a.records == b.records

    def test_sample_cap_draws_fresh_subsets(self):
        cloud, labels = small_mixture(points_per_class=100, dim=8, seed=4)
        cfg = TrainConfig(steps=8, seed=11, sample_cap=50)
        traj = run_experiment(cloud, labels, cfg)
        assert len(traj) == 8
        assert np.isfinite(traj.column("silhouette")).all()
