"""Experiment drivers: seed curation, dispatch, tables, determinism."""

import numpy as np
import pytest

import vqa_lab as v
from vqa_lab.errors import ConfigError, DomainError
from vqa_lab.experiments import (ESCAPE_MARGIN, STREAM_SEARCH, SUMMARY_COLUMNS,
                                 TRAJECTORY_COLUMNS, _format_rows, _Task)


def make_config(**kwargs):
    raw = {"experiment": "trajectories", "n_qubits": 2, "n_layers": 1}
    raw.update(kwargs)
    return v.parse_config(raw)


class TestFindTrappedSeeds:
    def test_search_yields_verified_saddles(self, layout42, sumz4):
        opt = v.OptimizerConfig(method="gd", eta=0.05, max_steps=400)
        seeds = v.find_trapped_seeds(layout42, sumz4, opt, 60, master_seed=3)
        assert len(seeds) >= 3
        for s in seeds:
            assert s.lambda_min < -1e-6
            assert s.grad_norm <= 1e-2
            assert s.saddle_loss > -4.0 + ESCAPE_MARGIN
            assert s.theta0.shape == s.saddle_theta.shape == (24,)

    def test_deterministic(self, layout42, sumz4):
        opt = v.OptimizerConfig(method="gd", eta=0.05, max_steps=150)
        a = v.find_trapped_seeds(layout42, sumz4, opt, 25, master_seed=3)
        b = v.find_trapped_seeds(layout42, sumz4, opt, 25, master_seed=3)
        assert len(a) == len(b)
        for sa, sb in zip(a, b):
            np.testing.assert_array_equal(sa.theta0, sb.theta0)
            assert sa.saddle_loss == sb.saddle_loss

    def test_candidate_pool_grows_monotonically(self, layout42, sumz4):
        # extending the pool keeps the seeds already found, in order
        opt = v.OptimizerConfig(method="gd", eta=0.05, max_steps=150)
        small = v.find_trapped_seeds(layout42, sumz4, opt, 15, master_seed=3)
        large = v.find_trapped_seeds(layout42, sumz4, opt, 30, master_seed=3)
        assert len(large) >= len(small)
        for sa, sb in zip(small, large):
            np.testing.assert_array_equal(sa.theta0, sb.theta0)

    def test_requires_noiseless_gd(self, layout42, sumz4):
        with pytest.raises(DomainError):
            v.find_trapped_seeds(
                layout42, sumz4,
                v.OptimizerConfig(method="pgd", r=0.1), 10, 0)
        with pytest.raises(DomainError):
            v.find_trapped_seeds(
                layout42, sumz4,
                v.OptimizerConfig(method="gd", q=0.1), 10, 0)
        with pytest.raises(DomainError):
            v.find_trapped_seeds(
                layout42, sumz4, v.OptimizerConfig(method="gd"), 0, 0)


class TestBuildLayoutAndObservable:
    def test_builtin_observable(self):
        cfg = make_config(n_qubits=3, n_layers=2)
        layout, h = v.build_layout_and_observable(cfg)
        assert layout.n_params == 18
        assert [t.axes for t in h.terms] == ["ZII", "IZI", "IIZ"]

    def test_observable_from_file(self, tmp_path):
        (tmp_path / "obs.txt").write_text("0.5 ZI\n0.5 IZ\n")
        cfg = v.parse_config(
            {"experiment": "trajectories", "n_qubits": 2, "n_layers": 1,
             "hamiltonian": "obs.txt"}, base_dir=str(tmp_path))
        _layout, h = v.build_layout_and_observable(cfg)
        assert h.one_norm == 1.0

    def test_missing_file(self, tmp_path):
        cfg = v.parse_config(
            {"experiment": "trajectories", "hamiltonian": "gone.txt"},
            base_dir=str(tmp_path))
        with pytest.raises(ConfigError, match="cannot read"):
            v.build_layout_and_observable(cfg)


class TestDispatchValidation:
    @pytest.mark.parametrize("raw", [
        dict(experiment="perf_vs_r"),
        dict(experiment="perf_vs_r",
             optimizer={"method": "pgd", "r": 0.1},
             sweep={"parameter": "eta", "values": [0.1]}),
        dict(experiment="t_vs_eps"),
        dict(experiment="escape_vs_shots"),
        dict(experiment="escape_vs_shots",
             sweep={"parameter": "n_shots", "values": [8]}),
        dict(experiment="depolarizing_sweep"),
        dict(experiment="critical_noise_sweep",
             optimizer={"method": "pgd", "r": 0.1},
             sweep={"parameter": "eta", "values": [0.1]}),
        dict(experiment="saddle_census", theta0={"mode": "explicit",
                                                 "values": [0.0] * 6}),
        dict(experiment="saddle_census", optimizer={"method": "pgd",
                                                    "r": 0.1}),
        dict(experiment="linear_model",
             sweep={"parameter": "eta", "values": [0.1]}),
    ])
    def test_malformed_experiments_rejected(self, raw):
        base = {"n_qubits": 2, "n_layers": 1}
        base.update(raw)
        with pytest.raises(ConfigError):
            v.run_experiment(v.parse_config(base))

    def test_invalid_sweep_value_rejected(self):
        cfg = make_config(experiment="perf_vs_r",
                          optimizer={"method": "pgd", "r": 0.1},
                          sweep={"parameter": "r", "values": [0.1, -0.2]})
        with pytest.raises(ConfigError, match="sweep value"):
            v.run_experiment(cfg)

    def test_explicit_theta0_length_checked(self):
        cfg = make_config(theta0={"mode": "explicit", "values": [0.1, 0.2]})
        with pytest.raises(ConfigError, match="length"):
            v.run_experiment(cfg)


class TestTrajectories:
    def test_baseline_only_for_plain_gd(self):
        cfg = make_config(n_runs=2,
                          optimizer={"method": "gd", "max_steps": 30})
        res = v.run_experiment(cfg)
        assert res.n_runs == 2
        assert res.n_failed == 0
        assert len(res.summary_rows) == 2
        assert len(res.trajectory_rows) == 2 * 31
        assert res.notes["l_opt"] == -2.0
        assert len(res.notes["reference_levels"]) == 2
        assert res.notes["arms"] == []

    def test_noisy_method_adds_arm_runs(self):
        cfg = make_config(n_runs=2,
                          optimizer={"method": "pgd", "r": 0.1,
                                     "max_steps": 30})
        res = v.run_experiment(cfg)
        # two baselines plus one pgd arm over both initial points
        assert res.n_runs == 4
        assert [row[0] for row in res.summary_rows] == [0, 1, 2, 3]
        assert [row[1] for row in res.summary_rows] == \
            ["gd", "gd", "pgd", "pgd"]
        (arm,) = res.notes["arms"]
        assert arm["method"] == "pgd"
        assert arm["r"] == 0.1
        assert arm["n_runs"] == 2

    def test_initial_points_shared_across_arms(self):
        cfg = make_config(n_runs=2,
                          optimizer={"method": "pgd", "r": 0.1,
                                     "max_steps": 10})
        res = v.run_experiment(cfg)
        step0 = {row[0]: row[2] for row in res.trajectory_rows
                 if row[1] == 0}
        # run 2 repeats initial point 0, run 3 repeats initial point 1
        assert step0[2] == step0[0]
        assert step0[3] == step0[1]
        assert step0[0] != step0[1]

    def test_row_shapes_match_headers(self):
        cfg = make_config(n_runs=1, optimizer={"method": "gd",
                                               "max_steps": 5})
        res = v.run_experiment(cfg)
        assert all(len(row) == len(TRAJECTORY_COLUMNS)
                   for row in res.trajectory_rows)
        assert all(len(row) == len(SUMMARY_COLUMNS)
                   for row in res.summary_rows)


class TestPerfVsR:
    def test_sweep_structure(self):
        cfg = make_config(experiment="perf_vs_r", n_runs=2,
                          optimizer={"method": "pgd", "r": 0.1,
                                     "max_steps": 40, "eta": 0.1},
                          sweep={"parameter": "r", "values": [0.05, 0.2]})
        res = v.run_experiment(cfg)
        assert res.n_runs == 2 + 2 * 2
        arms = res.notes["arms"]
        assert [a["r"] for a in arms] == [0.05, 0.2]
        for a in arms:
            assert a["n_runs"] == 2
            assert 0.0 <= a["p_escape"] <= 1.0
            assert a["escape_ci"][0] <= a["p_escape"] <= a["escape_ci"][1]
            assert a["median_performance"] > 0
        for row in res.summary_rows:
            assert row[8] in (0, 1)
            assert isinstance(row[9], int)


class TestEscapeVsShots:
    def test_shot_counts_are_rounded_ints(self):
        cfg = make_config(experiment="escape_vs_shots", n_runs=1,
                          optimizer={"method": "shot_gd", "n_shots": 8,
                                     "max_steps": 8},
                          sweep={"parameter": "n_shots",
                                 "values": [16.4, 64.0]})
        res = v.run_experiment(cfg)
        arms = res.notes["arms"]
        assert [a["n_shots"] for a in arms] == [16, 64]
        shot_rows = [row for row in res.summary_rows if row[1] == "shot_gd"]
        assert sorted({row[3] for row in shot_rows}) == [16, 64]
        baseline_rows = [row for row in res.summary_rows if row[1] == "gd"]
        assert all(row[3] is None for row in baseline_rows)


class TestSaddleCensus:
    def test_census_counts_and_interval(self, layout42):
        cfg = v.parse_config({
            "experiment": "saddle_census", "n_qubits": 4, "n_layers": 2,
            "n_runs": 40, "master_seed": 1,
            "optimizer": {"method": "gd", "eta": 0.05, "max_steps": 400}})
        res = v.run_experiment(cfg)
        counts = res.notes["class_counts"]
        assert sum(counts.values()) == 40
        frac = res.notes["trapped_fraction"]
        assert frac == counts.get("strict_saddle", 0) / 40
        lo, hi = res.notes["trapped_ci"]
        assert lo <= frac <= hi
        assert 0.05 < frac < 0.6
        assert set(counts) <= {"not_stationary", "minimum", "strict_saddle",
                               "flat"}


class TestDepolarizingSweep:
    def test_stronger_channel_flattens_losses(self):
        cfg = make_config(
            experiment="depolarizing_sweep", n_runs=3,
            optimizer={"method": "gd", "eta": 0.1, "max_steps": 200},
            sweep={"parameter": "q", "values": [0.0, 0.5, 1.0]})
        res = v.run_experiment(cfg)
        arms = res.notes["arms"]
        assert [a["q"] for a in arms] == [0.0, 0.5, 1.0]
        assert res.notes["trace_mean"] == 0.0
        # at full strength the landscape is constant at the trace mean
        assert arms[2]["mean_terminal_loss"] == pytest.approx(0.0, abs=1e-12)
        # the clean landscape descends well below the flattened ones
        assert arms[0]["mean_terminal_loss"] < arms[2]["mean_terminal_loss"]
        assert arms[0]["mean_terminal_loss"] < -1.0


class TestCriticalNoiseSweep:
    def test_grid_per_learning_rate(self, layout42, sumz4):
        seeds = v.find_trapped_seeds(
            layout42, sumz4,
            v.OptimizerConfig(method="gd", eta=0.4, max_steps=300),
            30, master_seed=5)
        assert seeds, "search produced no curated starts"
        cfg = v.parse_config({
            "experiment": "critical_noise_sweep", "n_qubits": 4,
            "n_layers": 2, "n_runs": 2, "master_seed": 5,
            "optimizer": {"method": "pgd", "r": 0.1, "eta": 0.4,
                          "max_steps": 250},
            "theta0": {"mode": "explicit",
                       "values": list(seeds[0].theta0)},
            "sweep": {"parameter": "eta", "values": [0.3, 0.5]}})
        res = v.run_experiment(cfg)
        curve = res.notes["curve"]
        assert [c["eta"] for c in curve] == [0.3, 0.5]
        for c in curve:
            assert len(c["grid"]) == 8
            rs = [cell["r"] for cell in c["grid"]]
            assert rs == sorted(rs)
            for cell in c["grid"]:
                assert 0.0 <= cell["p_escape"] <= 1.0
            if c["eps_cri"] is not None:
                first = next(cell["r"] for cell in c["grid"]
                             if cell["p_escape"] >= 0.5)
                assert c["eps_cri"] == first
        assert res.notes["delta_bar"] > 0
        assert res.n_runs == 1 + 2 * 8 * 2


class TestLinearModel:
    def test_exact_noiseless_arm(self):
        cfg = v.parse_config({
            "experiment": "linear_model", "n_runs": 3,
            "optimizer": {"method": "gd", "eta": 0.1, "max_steps": 50},
            "linear_model": {"c": [1.0, 1.0], "loss0": 5.0},
            "sweep": {"parameter": "r", "values": [0.0, 0.3]}})
        res = v.run_experiment(cfg)
        assert res.n_runs == 6
        assert len(res.trajectory_rows) == 6 * 51
        assert res.notes["sum_c_sq"] == 2.0
        assert res.notes["predicted_steps_to_zero"] == pytest.approx(25.0)
        assert res.notes["eps_cri"] == pytest.approx(np.sqrt(0.5))
        clean = [row for row in res.summary_rows if row[2] == 0.0]
        assert len(clean) == 3
        for row in clean:
            assert row[1] == "linear"
            assert row[6] == pytest.approx(5.0 - 0.1 * 50 * 2.0, abs=1e-12)
            # reaches 5% of loss0 when 5 - 0.2 t <= 0.25
            assert row[9] == 24

    def test_noise_does_not_shift_mean_much(self):
        cfg = v.parse_config({
            "experiment": "linear_model", "n_runs": 40,
            "optimizer": {"method": "gd", "eta": 0.1, "max_steps": 50},
            "linear_model": {"c": [1.0, 1.0], "loss0": 5.0},
            "sweep": {"parameter": "r", "values": [0.2]}})
        res = v.run_experiment(cfg)
        finals = [row[6] for row in res.summary_rows]
        assert np.mean(finals) == pytest.approx(-5.0, abs=1.0)

    def test_negative_sigma_rejected(self):
        cfg = v.parse_config({
            "experiment": "linear_model",
            "sweep": {"parameter": "r", "values": [-0.1]}})
        with pytest.raises(ConfigError):
            v.run_experiment(cfg)


class TestDeterminismAndJobs:
    def make(self):
        return make_config(
            experiment="perf_vs_r", n_runs=2, master_seed=9,
            optimizer={"method": "pgd", "r": 0.1, "max_steps": 25,
                       "eta": 0.1},
            sweep={"parameter": "r", "values": [0.05, 0.15]})

    def test_reruns_are_identical(self):
        a = v.run_experiment(self.make())
        b = v.run_experiment(self.make())
        assert a.summary_rows == b.summary_rows
        assert a.trajectory_rows == b.trajectory_rows

    def test_thread_pool_matches_serial(self):
        a = v.run_experiment(self.make(), jobs=1)
        b = v.run_experiment(self.make(), jobs=3)
        assert a.summary_rows == b.summary_rows
        assert a.trajectory_rows == b.trajectory_rows

    def test_master_seed_changes_runs(self):
        a = v.run_experiment(self.make())
        cfg = make_config(
            experiment="perf_vs_r", n_runs=2, master_seed=10,
            optimizer={"method": "pgd", "r": 0.1, "max_steps": 25,
                       "eta": 0.1},
            sweep={"parameter": "r", "values": [0.05, 0.15]})
        b = v.run_experiment(cfg)
        assert a.summary_rows != b.summary_rows


class TestFormatRows:
    def test_diverged_outcome_row(self):
        task = _Task(run_id=4, cfg=v.OptimizerConfig(method="gd", eta=0.3),
                     theta0=np.zeros(6))
        traj, summary, records, n_failed = _format_rows([(task, None, 7)],
                                                        l_opt=-2.0)
        assert traj == []
        assert n_failed == 1
        assert records == [None]
        (row,) = summary
        assert row[0] == 4
        assert row[7] == "diverged"
        assert np.isnan(row[6])
        assert row[8] is None
        assert row[9] == -1


class TestSeedStreams:
    def test_search_stream_constant(self):
        # candidate i draws from the dedicated search stream
        rng = v.run_rng(3, STREAM_SEARCH, 0)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=24)
        opt = v.OptimizerConfig(method="gd", eta=0.05, max_steps=150)
        lay, h = v.strongly_entangling_layout(4, 2), v.sum_z(4)
        rec = v.run(lay, h, theta, opt)
        seeds = v.find_trapped_seeds(lay, h, opt, 1, master_seed=3)
        if rec.terminal_classification == "strict_saddle":
            assert len(seeds) == 1
            np.testing.assert_array_equal(seeds[0].theta0, theta)
        else:
            assert seeds == []
