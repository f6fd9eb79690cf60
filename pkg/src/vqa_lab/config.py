"""Experiment configuration: JSON in, validated dataclasses out.

Parsing is fail-closed: any key the schema does not know, at any nesting
level, raises :class:`ConfigError` instead of being ignored.  Silent typos
in experiment configs otherwise produce plausible-looking but wrong
studies, which is far more expensive than a hard error.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from .errors import ConfigError, DomainError
from .optimizer import OptimizerConfig

EXPERIMENTS = (
    "trajectories",
    "perf_vs_r",
    "escape_vs_shots",
    "t_vs_eps",
    "critical_noise_sweep",
    "saddle_census",
    "depolarizing_sweep",
    "linear_model",
)

SWEEPABLE = ("r", "n_shots", "eta", "q")

THETA0_MODES = ("random", "explicit", "trapped")


@dataclass(frozen=True)
class SweepSpec:
    """One swept optimizer parameter and the values each arm takes."""

    parameter: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ConfigError(
                f"sweep parameter must be one of {SWEEPABLE}, got {self.parameter!r}")
        if len(self.values) < 1:
            raise ConfigError("sweep needs at least one value")


@dataclass(frozen=True)
class Theta0Spec:
    """Where initial parameter vectors come from.

    ``random`` draws fresh uniform [0, 2pi) vectors per repeat (shared
    across sweep arms so arms are comparable), ``explicit`` uses one given
    vector, ``trapped`` searches for gradient-descent runs that end at
    strict saddles and starts from those points.
    """

    mode: str = "random"
    values: tuple[float, ...] | None = None
    n_candidates: int = 200
    max_seeds: int | None = None

    def __post_init__(self):
        if self.mode not in THETA0_MODES:
            raise ConfigError(
                f"theta0 mode must be one of {THETA0_MODES}, got {self.mode!r}")
        if self.mode == "explicit" and not self.values:
            raise ConfigError("explicit theta0 needs a 'values' array")
        if self.mode != "explicit" and self.values is not None:
            raise ConfigError(f"theta0 mode {self.mode!r} does not take 'values'")
        if self.n_candidates < 1:
            raise ConfigError(
                f"n_candidates must be >= 1, got {self.n_candidates}")
        if self.max_seeds is not None and self.max_seeds < 1:
            raise ConfigError(f"max_seeds must be >= 1, got {self.max_seeds}")


@dataclass(frozen=True)
class LinearModelSpec:
    """Coefficients and starting loss for the linear toy loss."""

    c: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    loss0: float = 10.0

    def __post_init__(self):
        if len(self.c) < 1:
            raise ConfigError("linear model needs at least one coefficient")
        if not self.loss0 > 0:
            raise ConfigError(f"loss0 must be > 0, got {self.loss0}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one experiment invocation."""

    experiment: str
    n_qubits: int = 4
    n_layers: int = 2
    hamiltonian: str = "sum_z"
    optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(method="gd"))
    sweep: SweepSpec | None = None
    n_runs: int = 1
    master_seed: int = 0
    theta0: Theta0Spec = field(default_factory=Theta0Spec)
    linear_model: LinearModelSpec | None = None
    output_dir: str | None = None
    base_dir: str = "."

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; known: {EXPERIMENTS}")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be >= 1, got {self.n_runs}")
        if self.master_seed < 0:
            raise ConfigError(f"master_seed must be >= 0, got {self.master_seed}")

    def hamiltonian_path(self) -> str | None:
        """Path of the term file, or None for the built-in observable."""
        if self.hamiltonian == "sum_z":
            return None
        return os.path.join(self.base_dir, self.hamiltonian)

    def echo_dict(self) -> dict:
        """JSON-ready dict of the resolved configuration."""
        out = asdict(self)
        out.pop("base_dir")
        return out


def _take(table: dict, known: dict, where: str) -> dict:
    unknown = set(table) - set(known)
    if unknown:
        raise ConfigError(
            f"unknown {where} field(s): {sorted(unknown)}; "
            f"known: {sorted(known)}")
    out = {}
    for key, caster in known.items():
        if key in table and table[key] is not None:
            try:
                out[key] = caster(table[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {where} field {key!r}: {exc}")
    return out


def _float_tuple(values) -> tuple[float, ...]:
    if not isinstance(values, (list, tuple)):
        raise ConfigError(f"expected an array, got {type(values).__name__}")
    return tuple(float(v) for v in values)


def parse_config(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    """Validate a decoded JSON object into an :class:`ExperimentConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    top = _take(raw, {
        "experiment": str,
        "n_qubits": int,
        "n_layers": int,
        "hamiltonian": str,
        "optimizer": dict,
        "sweep": dict,
        "n_runs": int,
        "master_seed": int,
        "theta0": dict,
        "linear_model": dict,
        "output_dir": str,
    }, "top-level")
    if "experiment" not in top:
        raise ConfigError("config needs an 'experiment' field")

    opt_raw = top.pop("optimizer", {})
    opt_fields = _take(opt_raw, {
        "method": str,
        "eta": float,
        "max_steps": int,
        "r": float,
        "n_shots": int,
        "q": float,
        "grad_floor": float,
        "snapshot_every": int,
    }, "optimizer")
    opt_fields.setdefault("method", "gd")
    try:
        optimizer = OptimizerConfig(**opt_fields)
    except DomainError as exc:
        raise ConfigError(str(exc))

    sweep = None
    if "sweep" in top:
        sweep_fields = _take(top.pop("sweep"), {
            "parameter": str,
            "values": _float_tuple,
        }, "sweep")
        if "parameter" not in sweep_fields or "values" not in sweep_fields:
            raise ConfigError("sweep needs 'parameter' and 'values'")
        sweep = SweepSpec(**sweep_fields)

    theta0 = Theta0Spec()
    if "theta0" in top:
        t_fields = _take(top.pop("theta0"), {
            "mode": str,
            "values": _float_tuple,
            "n_candidates": int,
            "max_seeds": int,
        }, "theta0")
        theta0 = Theta0Spec(**t_fields)

    linear = None
    if "linear_model" in top:
        l_fields = _take(top.pop("linear_model"), {
            "c": _float_tuple,
            "loss0": float,
        }, "linear_model")
        linear = LinearModelSpec(**l_fields)

    return ExperimentConfig(optimizer=optimizer, sweep=sweep, theta0=theta0,
                            linear_model=linear, base_dir=base_dir, **top)


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON experiment config from disk."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))
