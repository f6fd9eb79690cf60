"""Descent loop, noise models, classification, and smoothness constants."""

import numpy as np
import pytest

import vqa_lab as v
from vqa_lab.errors import DimensionError, DomainError
from vqa_lab.optimizer import CLASSIFY_TAU, DEFAULT_STATIONARY_EPS

from _oracles import depolarized_loss_density_matrix

THETA0 = np.random.default_rng(5).uniform(-np.pi, np.pi, 24)


class TestOptimizerConfig:
    def test_defaults(self):
        cfg = v.OptimizerConfig(method="gd")
        assert (cfg.eta, cfg.max_steps, cfg.r, cfg.n_shots, cfg.q,
                cfg.seed, cfg.grad_floor, cfg.snapshot_every) == \
            (0.05, 400, 0.0, None, 0.0, 0, 0.0, None)

    @pytest.mark.parametrize("kwargs", [
        dict(method="adam"),
        dict(method="gd", eta=-0.1),
        dict(method="gd", eta=float("nan")),
        dict(method="gd", max_steps=0),
        dict(method="pgd"),
        dict(method="pgd", r=-0.1),
        dict(method="gd", r=-0.5),
        dict(method="shot_gd"),
        dict(method="shot_gd", n_shots=0),
        dict(method="gd", q=-0.01),
        dict(method="gd", q=1.01),
        dict(method="gd", grad_floor=-1.0),
        dict(method="gd", snapshot_every=0),
    ])
    def test_rejects_bad_settings(self, kwargs):
        with pytest.raises(DomainError):
            v.OptimizerConfig(**kwargs)


class TestSteps:
    def test_gd_update(self):
        theta = np.array([1.0, -2.0, 0.5])
        grad = np.array([0.5, 0.5, -1.0])
        np.testing.assert_array_equal(v.step_gd(theta, grad, 0.1),
                                      theta - 0.1 * grad)

    def test_gd_shape_mismatch(self):
        with pytest.raises(DimensionError):
            v.step_gd(np.zeros(3), np.zeros(4), 0.1)

    def test_pgd_zero_noise_reduces_to_gd(self):
        theta, grad = np.arange(4.0), np.ones(4)
        got = v.step_pgd(theta, grad, 0.2, 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(got, v.step_gd(theta, grad, 0.2))

    def test_pgd_noise_moments(self):
        # the Gaussian rides inside the learning rate: recovering it as
        # (gd - pgd) / eta exposes per-coordinate standard deviation r
        theta, grad = np.zeros(1000), np.zeros(1000)
        eta, r = 0.4, 0.2
        rng = np.random.default_rng(42)
        kicks = np.concatenate([
            (v.step_gd(theta, grad, eta)
             - v.step_pgd(theta, grad, eta, r, rng)) / eta
            for _ in range(200)])
        assert kicks.mean() == pytest.approx(0.0, abs=0.002)
        assert kicks.std() == pytest.approx(r, abs=0.002)

    def test_pgd_mean_drift_is_gradient_step(self):
        theta = np.full(20000, 0.5)
        grad = np.full(20000, 1.5)
        rng = np.random.default_rng(7)
        out = v.step_pgd(theta, grad, 0.1, 0.3, rng)
        assert out.mean() == pytest.approx(0.5 - 0.1 * 1.5, abs=0.002)

    def test_pgd_rejects_negative_r(self):
        with pytest.raises(DomainError):
            v.step_pgd(np.zeros(2), np.zeros(2), 0.1, -0.1,
                       np.random.default_rng(0))


class TestStoppingRule:
    def test_lambda_floor(self):
        rule = v.StoppingRule(epsilon=0.01, rho=470.0)
        assert rule.lambda_floor == -np.sqrt(470.0 * 0.01)

    @pytest.mark.parametrize("kwargs", [
        dict(epsilon=0.0, rho=1.0),
        dict(epsilon=-1.0, rho=1.0),
        dict(epsilon=0.1, rho=-1.0),
    ])
    def test_validation(self, kwargs):
        with pytest.raises(DomainError):
            v.StoppingRule(**kwargs)


class TestSmoothnessBounds:
    def test_four_qubit_two_layer(self, layout42, sumz4):
        b = v.smoothness_bounds(layout42, sumz4)
        assert b.beta == 96.0
        assert b.rho == pytest.approx(470.3020306143702, abs=1e-10)
        assert b.eta_recommended == pytest.approx(1.0 / 96.0, abs=1e-15)

    def test_two_qubit_one_layer(self, layout21, sumz2):
        b = v.smoothness_bounds(layout21, sumz2)
        assert b.beta == 12.0
        assert b.rho == pytest.approx(6.0 ** 1.5 * 2.0, abs=1e-12)
        assert b.eta_recommended == pytest.approx(1.0 / 12.0, abs=1e-15)

    def test_qubit_mismatch(self, layout42, sumz2):
        with pytest.raises(DimensionError):
            v.smoothness_bounds(layout42, sumz2)


class TestDepolarizedLoss:
    def test_identity_at_zero_strength(self, sumz4):
        assert v.depolarized_loss(-3.7, sumz4, 0.0, 2) == -3.7

    def test_full_strength_gives_trace_mean(self, sumz4):
        assert v.depolarized_loss(-3.7, sumz4, 1.0, 2) == sumz4.trace_mean

    def test_contraction_factor(self, sumz4):
        # two layers at strength 0.1 keep a factor 0.81 of the signal
        assert v.depolarized_loss(-4.0, sumz4, 0.1, 2) == \
            pytest.approx(-3.24, abs=1e-14)

    @pytest.mark.parametrize("q", [0.05, 0.3])
    def test_matches_density_matrix_oracle(self, layout42, sumz4, q, rng):
        theta = rng.uniform(-np.pi, np.pi, 24)
        clean = v.loss(layout42, sumz4, theta)
        got = v.depolarized_loss(clean, sumz4, q, layout42.n_layers)
        want = depolarized_loss_density_matrix(layout42, sumz4, theta, q)
        assert got == pytest.approx(want, abs=1e-12)

    def test_validation(self, sumz4):
        with pytest.raises(DomainError):
            v.depolarized_loss(0.0, sumz4, 1.5, 2)
        with pytest.raises(DomainError):
            v.depolarized_loss(0.0, sumz4, 0.5, -1)


class TestClassifyTerminal:
    def test_loss_maximum_is_strict_saddle(self, layout42, sumz4):
        # the zero state maximizes the Z sum; curvature is negative there
        rep = v.classify_terminal(layout42, sumz4, np.zeros(24))
        assert rep.label == "strict_saddle"
        assert rep.grad_norm == pytest.approx(0.0, abs=1e-14)
        assert rep.lambda_min == pytest.approx(-4.0, abs=1e-12)

    def test_generic_point_not_stationary(self, layout42, sumz4):
        rep = v.classify_terminal(layout42, sumz4, THETA0)
        assert rep.label == "not_stationary"
        assert rep.grad_norm > DEFAULT_STATIONARY_EPS
        assert np.isnan(rep.lambda_min)

    def test_global_minimum_plateau_is_flat(self, layout42, sumz4):
        # some derivative slots are identically dead, so even the global
        # minimum has a degenerate Hessian direction
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=2000)
        rec = v.run(layout42, sumz4, THETA0, cfg)
        assert rec.terminal_loss == pytest.approx(-2.0, abs=1e-9)
        assert rec.terminal_classification == "flat"
        assert abs(rec.terminal_lambda_min) <= CLASSIFY_TAU

    def test_epsilon_gate(self, layout42, sumz4):
        rep = v.classify_terminal(layout42, sumz4, THETA0, epsilon=1e9)
        assert rep.label in ("minimum", "strict_saddle", "flat")


class TestRun:
    def test_kernel_and_python_paths_agree_bitwise(self, layout42, sumz4):
        for method, r in (("gd", 0.0), ("pgd", 0.15)):
            fast = v.OptimizerConfig(method=method, eta=0.05, max_steps=60,
                                     r=r, seed=3)
            slow = v.OptimizerConfig(method=method, eta=0.05, max_steps=60,
                                     r=r, seed=3, snapshot_every=1000)
            a = v.run(layout42, sumz4, THETA0, fast)
            b = v.run(layout42, sumz4, THETA0, slow)
            np.testing.assert_array_equal(a.losses, b.losses)
            np.testing.assert_array_equal(a.terminal_theta, b.terminal_theta)

    def test_record_shapes(self, layout42, sumz4):
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=25)
        rec = v.run(layout42, sumz4, THETA0, cfg)
        assert rec.steps_done == 25
        assert len(rec.losses) == len(rec.grad_norms) == 26
        assert rec.terminal_loss == rec.losses[-1]
        assert rec.min_loss == np.min(rec.losses)
        assert rec.seed == cfg.seed
        assert not rec.stopped_early
        assert rec.theta_snapshots == ()

    def test_trajectory_starts_at_initial_loss(self, layout42, sumz4):
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=5)
        rec = v.run(layout42, sumz4, THETA0, cfg)
        assert rec.losses[0] == pytest.approx(
            v.loss(layout42, sumz4, THETA0), abs=1e-13)

    def test_monotone_descent_at_recommended_eta(self, layout42, sumz4):
        eta = v.smoothness_bounds(layout42, sumz4).eta_recommended
        cfg = v.OptimizerConfig(method="gd", eta=eta, max_steps=200)
        rec = v.run(layout42, sumz4, THETA0, cfg)
        assert np.all(np.diff(rec.losses) <= 1e-12)

    def test_pgd_deterministic_per_seed(self, layout42, sumz4):
        cfg = v.OptimizerConfig(method="pgd", eta=0.05, max_steps=40,
                                r=0.2, seed=11)
        a = v.run(layout42, sumz4, THETA0, cfg)
        b = v.run(layout42, sumz4, THETA0, cfg)
        np.testing.assert_array_equal(a.losses, b.losses)
        other = v.OptimizerConfig(method="pgd", eta=0.05, max_steps=40,
                                  r=0.2, seed=12)
        c = v.run(layout42, sumz4, THETA0, other)
        assert not np.array_equal(a.losses, c.losses)

    def test_grad_floor_stops_early(self, layout42, sumz4):
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=400,
                                grad_floor=0.5)
        rec = v.run(layout42, sumz4, THETA0, cfg)
        assert rec.stopped_early
        assert rec.steps_done < 400
        assert rec.grad_norms[-1] <= 0.5
        assert np.all(rec.grad_norms[:-1] > 0.5)

    def test_stopping_rule_accepts_immediately_when_loose(self, layout42,
                                                          sumz4):
        stop = v.StoppingRule(epsilon=1e6, rho=1e12)
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=50)
        rec = v.run(layout42, sumz4, THETA0, cfg, stop=stop)
        assert rec.stopped_early
        assert rec.steps_done == 0

    def test_shot_gd_runs_and_is_deterministic(self, layout21, sumz2):
        theta0 = np.full(6, 0.8)
        cfg = v.OptimizerConfig(method="shot_gd", eta=0.05, max_steps=15,
                                n_shots=64, seed=4)
        a = v.run(layout21, sumz2, theta0, cfg)
        b = v.run(layout21, sumz2, theta0, cfg)
        np.testing.assert_array_equal(a.losses, b.losses)
        assert a.losses[-1] < a.losses[0]

    def test_depolarizing_transforms_recorded_losses(self, layout42, sumz4):
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=5, q=0.3)
        rec = v.run(layout42, sumz4, THETA0, cfg)
        want = v.depolarized_loss(v.loss(layout42, sumz4, THETA0),
                                  sumz4, 0.3, layout42.n_layers)
        assert rec.losses[0] == pytest.approx(want, abs=1e-13)

    def test_depolarizing_needs_layer_metadata(self, sumz2):
        gates = (v.GateSpec("RY", (0,), (0,)), v.GateSpec("CNOT", (0, 1)))
        bare = v.AnsatzLayout(2, gates, 1)
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=3, q=0.1)
        with pytest.raises(DomainError):
            v.run(bare, sumz2, [0.2], cfg)

    def test_snapshots(self, layout42, sumz4):
        cfg = v.OptimizerConfig(method="gd", eta=0.05, max_steps=100,
                                snapshot_every=50)
        rec = v.run(layout42, sumz4, THETA0, cfg)
        assert [s for s, _ in rec.theta_snapshots] == [0, 50, 100]
        np.testing.assert_array_equal(rec.theta_snapshots[0][1], THETA0)
        np.testing.assert_array_equal(rec.theta_snapshots[-1][1],
                                      rec.terminal_theta)

    def test_qubit_mismatch(self, layout42, sumz2):
        cfg = v.OptimizerConfig(method="gd")
        with pytest.raises(DimensionError):
            v.run(layout42, sumz2, np.zeros(24), cfg)

    def test_non_finite_start_rejected(self, layout42, sumz4):
        cfg = v.OptimizerConfig(method="gd")
        with pytest.raises(DomainError):
            v.run(layout42, sumz4, [np.inf] * 24, cfg)
