"""Fail-closed JSON config parsing."""

import json

import pytest

import vqa_lab as v
from vqa_lab.config import EXPERIMENTS, SWEEPABLE, THETA0_MODES
from vqa_lab.errors import ConfigError


def minimal(**extra):
    raw = {"experiment": "trajectories"}
    raw.update(extra)
    return raw


class TestParseDefaults:
    def test_minimal_config(self):
        cfg = v.parse_config(minimal())
        assert cfg.experiment == "trajectories"
        assert cfg.n_qubits == 4
        assert cfg.n_layers == 2
        assert cfg.hamiltonian == "sum_z"
        assert cfg.optimizer == v.OptimizerConfig(method="gd")
        assert cfg.sweep is None
        assert cfg.n_runs == 1
        assert cfg.master_seed == 0
        assert cfg.theta0 == v.Theta0Spec()
        assert cfg.linear_model is None
        assert cfg.output_dir is None

    def test_full_round_trip(self):
        raw = minimal(
            n_qubits=3, n_layers=1, n_runs=7, master_seed=9,
            optimizer={"method": "pgd", "eta": 0.4, "max_steps": 100,
                       "r": 0.1},
            sweep={"parameter": "r", "values": [0.05, 0.1]},
            theta0={"mode": "random"},
            output_dir="out")
        cfg = v.parse_config(raw)
        assert cfg.optimizer.method == "pgd"
        assert cfg.optimizer.eta == 0.4
        assert cfg.sweep == v.SweepSpec("r", (0.05, 0.1))
        assert cfg.output_dir == "out"

    def test_experiment_required(self):
        with pytest.raises(ConfigError, match="experiment"):
            v.parse_config({"n_qubits": 4})

    def test_root_must_be_object(self):
        with pytest.raises(ConfigError):
            v.parse_config(["experiment"])

    def test_known_experiment_names_accepted(self):
        for name in EXPERIMENTS:
            raw = minimal(experiment=name)
            if name == "linear_model":
                raw["sweep"] = {"parameter": "r", "values": [0.1]}
            v.parse_config(raw)


class TestFailClosed:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="banana"):
            v.parse_config(minimal(banana=1))

    def test_unknown_optimizer_key(self):
        with pytest.raises(ConfigError, match="momentum"):
            v.parse_config(minimal(optimizer={"momentum": 0.9}))

    def test_unknown_sweep_key(self):
        with pytest.raises(ConfigError, match="step"):
            v.parse_config(minimal(
                sweep={"parameter": "r", "values": [0.1], "step": 2}))

    def test_unknown_theta0_key(self):
        with pytest.raises(ConfigError, match="shape"):
            v.parse_config(minimal(theta0={"mode": "random", "shape": 3}))

    def test_unknown_linear_model_key(self):
        with pytest.raises(ConfigError, match="slope"):
            v.parse_config(minimal(linear_model={"slope": 1.0}))

    def test_bad_value_type(self):
        with pytest.raises(ConfigError, match="n_qubits"):
            v.parse_config(minimal(n_qubits="four"))

    def test_optimizer_domain_errors_become_config_errors(self):
        with pytest.raises(ConfigError):
            v.parse_config(minimal(optimizer={"method": "pgd"}))


class TestSweepSpec:
    def test_parameter_whitelist(self):
        for name in SWEEPABLE:
            v.SweepSpec(name, (1.0,))
        with pytest.raises(ConfigError):
            v.SweepSpec("eta2", (1.0,))

    def test_needs_values(self):
        with pytest.raises(ConfigError):
            v.SweepSpec("r", ())
        with pytest.raises(ConfigError, match="values"):
            v.parse_config(minimal(sweep={"parameter": "r"}))

    def test_values_must_be_array(self):
        with pytest.raises(ConfigError):
            v.parse_config(minimal(sweep={"parameter": "r", "values": 0.1}))


class TestTheta0Spec:
    def test_modes(self):
        for mode in THETA0_MODES:
            if mode == "explicit":
                v.Theta0Spec(mode=mode, values=(0.1,))
            else:
                v.Theta0Spec(mode=mode)
        with pytest.raises(ConfigError):
            v.Theta0Spec(mode="warm")

    def test_explicit_needs_values(self):
        with pytest.raises(ConfigError):
            v.Theta0Spec(mode="explicit")

    def test_non_explicit_rejects_values(self):
        with pytest.raises(ConfigError):
            v.Theta0Spec(mode="random", values=(0.1,))
        with pytest.raises(ConfigError):
            v.Theta0Spec(mode="trapped", values=(0.1,))

    def test_candidate_counts(self):
        with pytest.raises(ConfigError):
            v.Theta0Spec(n_candidates=0)
        with pytest.raises(ConfigError):
            v.Theta0Spec(max_seeds=0)


class TestLinearModelSpec:
    def test_defaults(self):
        spec = v.LinearModelSpec()
        assert spec.c == (1.0, 1.0, 1.0, 1.0)
        assert spec.loss0 == 10.0

    def test_validation(self):
        with pytest.raises(ConfigError):
            v.LinearModelSpec(c=())
        with pytest.raises(ConfigError):
            v.LinearModelSpec(loss0=0.0)


class TestEchoDict:
    def test_json_serializable_and_complete(self):
        cfg = v.parse_config(minimal(
            optimizer={"method": "pgd", "r": 0.2},
            sweep={"parameter": "eta", "values": [0.05]}))
        echo = cfg.echo_dict()
        parsed = json.loads(json.dumps(echo, sort_keys=True))
        assert "base_dir" not in echo
        assert parsed["experiment"] == "trajectories"
        assert parsed["optimizer"]["r"] == 0.2
        assert parsed["sweep"]["values"] == [0.05]
        assert parsed["theta0"]["mode"] == "random"

    def test_base_dir_kept_on_config(self):
        cfg = v.parse_config(minimal(), base_dir="/somewhere")
        assert cfg.base_dir == "/somewhere"


class TestHamiltonianPath:
    def test_builtin_has_no_path(self):
        assert v.parse_config(minimal()).hamiltonian_path() is None

    def test_file_resolved_against_base_dir(self, tmp_path):
        cfg = v.parse_config(minimal(hamiltonian="obs.txt"),
                             base_dir=str(tmp_path))
        assert cfg.hamiltonian_path() == str(tmp_path / "obs.txt")


class TestLoadConfig:
    def test_loads_and_anchors_base_dir(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(minimal()))
        cfg = v.load_config(str(path))
        assert cfg.experiment == "trajectories"
        assert cfg.base_dir == str(tmp_path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            v.load_config(str(tmp_path / "none.json"))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="valid JSON"):
            v.load_config(str(path))
