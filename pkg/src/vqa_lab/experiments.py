"""Named experiment drivers producing trajectory and summary tables.

Every experiment resolves to a deterministic set of runs.  A run is
addressed by three stable coordinates: the sweep arm, the initial-point
index, and the repeat index; its private RNG seed mixes those with the
master seed (see :mod:`vqa_lab.rng`), so editing a config to add arms,
initial points, or repeats never changes the runs that already existed.
Initial points in ``random`` mode come from their own stream keyed by
repeat only, which keeps them identical across sweep arms for
comparability.

Escape bookkeeping: a run escapes when its lowest recorded loss beats a
threshold placed half a loss unit below the reference stuck level (the
curated saddle loss, or the terminal loss of the noiseless baseline from
the same initial point).  The margin suits landscapes whose stationary
levels sit on an integer grid; the baseline arm the escape-style drivers
always run makes the reference available for arbitrary starts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .analysis import (convergence_time, critical_noise, fit_power_law,
                       linear_model_critical_noise, performance_metric,
                       simulate_linear_sgd, wilson_interval)
from .circuit import AnsatzLayout, strongly_entangling_layout
from .config import ExperimentConfig, LinearModelSpec
from .errors import ConfigError, DivergedError, DomainError
from .hamiltonian import PauliSum, load_pauli_sum, min_eigenvalue, sum_z
from .optimizer import OptimizerConfig, run
from .rng import mix_seed, run_rng

# stream tags separating independent uses of the master seed
STREAM_SEARCH = 0
STREAM_THETA0 = 1
STREAM_RUNS = 2

ESCAPE_MARGIN = 0.5

TRAJECTORY_COLUMNS = ("run_id", "step", "loss", "grad_norm")
SUMMARY_COLUMNS = ("run_id", "method", "r", "n_shots", "eta", "q",
                   "terminal_loss", "terminal_class", "escaped",
                   "steps_to_converge")


@dataclass(frozen=True)
class TrappedSeed:
    """An initialization whose noiseless descent ends on a strict saddle."""

    theta0: np.ndarray
    saddle_theta: np.ndarray
    saddle_loss: float
    lambda_min: float
    grad_norm: float


@dataclass
class ExperimentResult:
    """Tables plus JSON-ready notes from one experiment."""

    config: ExperimentConfig
    trajectory_rows: list[tuple]
    summary_rows: list[tuple]
    notes: dict
    n_runs: int = 0
    n_failed: int = 0


def find_trapped_seeds(layout: AnsatzLayout, h: PauliSum,
                       opt: OptimizerConfig, n_candidates: int,
                       master_seed: int) -> list[TrappedSeed]:
    """Search uniform initializations for ones that descend into saddles.

    Runs noiseless gradient descent from ``n_candidates`` uniform [0, 2pi)
    starts for the full step budget and keeps those classified as strict
    saddles at termination (stalled gradient with a Hessian eigenvalue
    below -1e-6).  No gradient floor is used: the plateau attractors are
    degenerate, and stopping only once the gradient is deep below the
    stationarity gate would sample points where the negative curvature has
    already collapsed to numerical zero.
    """
    if opt.method != "gd" or opt.q != 0.0:
        raise DomainError("trapped-seed search needs a noiseless gd config")
    if n_candidates < 1:
        raise DomainError(f"n_candidates must be >= 1, got {n_candidates}")
    search_cfg = replace(opt, grad_floor=0.0, seed=0)
    seeds: list[TrappedSeed] = []
    for i in range(n_candidates):
        rng = run_rng(master_seed, STREAM_SEARCH, i)
        theta0 = rng.uniform(0.0, 2.0 * np.pi, size=layout.n_params)
        rec = run(layout, h, theta0, search_cfg)
        if rec.terminal_classification == "strict_saddle":
            seeds.append(TrappedSeed(
                theta0=theta0, saddle_theta=rec.terminal_theta,
                saddle_loss=rec.terminal_loss,
                lambda_min=rec.terminal_lambda_min,
                grad_norm=float(rec.grad_norms[-1])))
    return seeds


def build_layout_and_observable(config: ExperimentConfig) -> tuple[AnsatzLayout, PauliSum]:
    """Materialize the circuit layout and observable a config describes."""
    layout = strongly_entangling_layout(config.n_qubits, config.n_layers)
    path = config.hamiltonian_path()
    if path is None:
        h = sum_z(config.n_qubits)
    else:
        try:
            h = load_pauli_sum(path, config.n_qubits)
        except OSError as exc:
            raise ConfigError(f"cannot read hamiltonian file {path}: {exc}")
    return layout, h


@dataclass
class _Task:
    """One run: seeded optimizer config plus row-building context.

    ``delta_l`` feeds the convergence-time column; when ``auto_delta`` is
    set it is taken per run as the initial distance from the optimum.
    """

    run_id: int
    cfg: OptimizerConfig
    theta0: np.ndarray
    threshold: float | None = None
    delta_l: float | None = None
    auto_delta: bool = False


def _seeded(opt: OptimizerConfig, master_seed: int, arm: int, t_idx: int,
            rep: int) -> OptimizerConfig:
    return replace(opt, seed=mix_seed(master_seed, STREAM_RUNS, arm, t_idx, rep))


def _sweep_arm_configs(config: ExperimentConfig) -> list[OptimizerConfig]:
    """Optimizer configs per sweep arm (a single arm without a sweep)."""
    opt = config.optimizer
    if config.sweep is None:
        return [opt]
    arms = []
    for value in config.sweep.values:
        fields = {config.sweep.parameter: value}
        if config.sweep.parameter == "n_shots":
            fields["n_shots"] = int(round(value))
        try:
            arms.append(replace(opt, **fields))
        except DomainError as exc:
            raise ConfigError(
                f"sweep value {value!r} for {config.sweep.parameter!r} "
                f"is invalid: {exc}")
    return arms


def _resolve_theta0(config: ExperimentConfig, layout: AnsatzLayout,
                    h: PauliSum) -> tuple[list[np.ndarray], int, list[TrappedSeed] | None]:
    """Initial points plus repeats per point; seed info in trapped mode."""
    spec = config.theta0
    if spec.mode == "explicit":
        theta = np.asarray(spec.values, dtype=np.float64)
        if theta.shape != (layout.n_params,):
            raise ConfigError(
                f"explicit theta0 has length {theta.size}, layout needs "
                f"{layout.n_params}")
        return [theta], config.n_runs, None
    if spec.mode == "trapped":
        base = replace(config.optimizer, method="gd", r=0.0, n_shots=None, q=0.0)
        seeds = find_trapped_seeds(layout, h, base, spec.n_candidates,
                                   config.master_seed)
        if not seeds:
            raise DomainError(
                f"no trapped seeds found among {spec.n_candidates} candidates")
        if spec.max_seeds is not None:
            seeds = seeds[:spec.max_seeds]
        return [s.theta0 for s in seeds], config.n_runs, seeds
    thetas = [run_rng(config.master_seed, STREAM_THETA0, rep)
              .uniform(0.0, 2.0 * np.pi, size=layout.n_params)
              for rep in range(config.n_runs)]
    return thetas, 1, None


def _execute(layout, h, tasks: list[_Task], jobs: int = 1) -> list[tuple]:
    """Run tasks, preserving order; outcome is (task, record_or_None, step)."""

    def do(task: _Task):
        try:
            return task, run(layout, h, task.theta0, task.cfg), None
        except DivergedError as exc:
            return task, None, exc.step

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(do, tasks))
    return [do(task) for task in tasks]


def _format_rows(outcomes, l_opt: float) -> tuple[list[tuple], list[tuple], list, int]:
    traj_rows: list[tuple] = []
    summary_rows: list[tuple] = []
    records = []
    n_failed = 0
    for task, rec, _diverged_step in outcomes:
        cfg = task.cfg
        n_shots = cfg.n_shots if cfg.method == "shot_gd" else None
        if rec is None:
            n_failed += 1
            records.append(None)
            summary_rows.append((task.run_id, cfg.method, cfg.r, n_shots,
                                 cfg.eta, cfg.q, float("nan"), "diverged",
                                 None, -1))
            continue
        for step in range(len(rec.losses)):
            traj_rows.append((task.run_id, step, float(rec.losses[step]),
                              float(rec.grad_norms[step])))
        escaped = None
        if task.threshold is not None:
            escaped = int(rec.min_loss < task.threshold)
        delta_l = task.delta_l
        if task.auto_delta:
            delta_l = float(rec.losses[0]) - l_opt
        steps = -1
        if delta_l is not None and delta_l > 0:
            hit = convergence_time(rec.losses, l_opt, delta_l)
            steps = -1 if hit is None else hit
        summary_rows.append((task.run_id, cfg.method, cfg.r, n_shots,
                             cfg.eta, cfg.q, rec.terminal_loss,
                             rec.terminal_classification, escaped, steps))
        records.append(rec)
    return traj_rows, summary_rows, records, n_failed


def _require(config: ExperimentConfig, parameter: str | None,
             method: str | None) -> None:
    name = config.experiment
    if parameter is not None:
        if config.sweep is None or config.sweep.parameter != parameter:
            raise ConfigError(
                f"experiment {name!r} needs a sweep over {parameter!r}")
    if method is not None and config.optimizer.method != method:
        raise ConfigError(
            f"experiment {name!r} needs optimizer method {method!r}, "
            f"got {config.optimizer.method!r}")


def _escape_family(config: ExperimentConfig, layout, h, l_opt: float,
                   jobs: int) -> ExperimentResult:
    """trajectories / perf_vs_r / escape_vs_shots / t_vs_eps.

    Arm 0 is always the noiseless gd baseline, run once per initial point;
    it pins the stuck reference level when seeds are not curated.  The
    configured (possibly swept) optimizer supplies arms 1..K.
    """
    name = config.experiment
    if name == "perf_vs_r":
        _require(config, "r", "pgd")
    elif name == "t_vs_eps":
        _require(config, "r", "pgd")
    elif name == "escape_vs_shots":
        _require(config, "n_shots", "shot_gd")

    thetas, reps, seeds = _resolve_theta0(config, layout, h)
    opt = config.optimizer
    baseline = replace(opt, method="gd", r=0.0, n_shots=None)
    master = config.master_seed

    base_tasks = [
        _Task(run_id=i, cfg=_seeded(baseline, master, 0, i, 0), theta0=th)
        for i, th in enumerate(thetas)]
    base_outcomes = _execute(layout, h, base_tasks, jobs)
    refs: list[float] = []
    for t_idx, (_task, rec, _step) in enumerate(base_outcomes):
        if seeds is not None:
            refs.append(seeds[t_idx].saddle_loss)
        elif rec is not None:
            refs.append(rec.terminal_loss)
        else:
            refs.append(float("nan"))
    for t_idx, task in enumerate(base_tasks):
        task.threshold = refs[t_idx] - ESCAPE_MARGIN
        task.delta_l = refs[t_idx] - l_opt

    noisy_arms: list[OptimizerConfig] = []
    if not (opt.method == "gd" and config.sweep is None):
        noisy_arms = _sweep_arm_configs(config)

    next_id = len(base_tasks)
    tasks: list[_Task] = []
    for arm_idx, arm_cfg in enumerate(noisy_arms, start=1):
        for t_idx in range(len(thetas)):
            for rep in range(reps):
                tasks.append(_Task(
                    run_id=next_id, theta0=thetas[t_idx],
                    cfg=_seeded(arm_cfg, master, arm_idx, t_idx, rep),
                    threshold=refs[t_idx] - ESCAPE_MARGIN,
                    delta_l=refs[t_idx] - l_opt))
                next_id += 1
    outcomes = base_outcomes + _execute(layout, h, tasks, jobs)
    traj, summary, records, n_failed = _format_rows(outcomes, l_opt)

    notes: dict = {
        "l_opt": l_opt,
        "reference_levels": refs,
        "n_baseline_runs": len(base_tasks),
    }
    if seeds is not None:
        notes["saddle_lambda_min"] = [s.lambda_min for s in seeds]
    per_arm = []
    offset = len(base_tasks)
    runs_per_arm = len(thetas) * reps
    for arm_idx, arm_cfg in enumerate(noisy_arms, start=1):
        arm_records = [r for r in records[offset:offset + runs_per_arm]
                       if r is not None]
        arm_summary = summary[offset:offset + runs_per_arm]
        offset += runs_per_arm
        entry: dict = {
            "method": arm_cfg.method,
            "r": arm_cfg.r,
            "n_shots": arm_cfg.n_shots,
            "eta": arm_cfg.eta,
            "q": arm_cfg.q,
            "n_runs": len(arm_records),
        }
        if arm_records:
            escapes = [row[8] for row in arm_summary if row[8] is not None]
            if escapes:
                lo, hi = wilson_interval(sum(escapes), len(escapes))
                entry["p_escape"] = sum(escapes) / len(escapes)
                entry["escape_ci"] = [lo, hi]
            perfs = sorted(performance_metric(r.terminal_loss, l_opt)
                           for r in arm_records)
            entry["median_performance"] = perfs[len(perfs) // 2]
            t_vals = [row[9] for row in arm_summary if row[9] >= 0]
            if t_vals:
                entry["mean_steps_to_converge"] = float(np.mean(t_vals))
                entry["n_converged"] = len(t_vals)
        per_arm.append(entry)
    notes["arms"] = per_arm

    if name == "t_vs_eps":
        pts = [(e["r"], e["mean_steps_to_converge"]) for e in per_arm
               if e.get("mean_steps_to_converge", 0) > 0]
        if len(pts) >= 3:
            fit = fit_power_law([p[0] for p in pts], [p[1] for p in pts])
            notes["power_law"] = {"exponent": fit.exponent,
                                  "prefactor": fit.prefactor,
                                  "r_squared": fit.r_squared}

    return ExperimentResult(config=config, trajectory_rows=traj,
                            summary_rows=summary, notes=notes,
                            n_runs=len(outcomes), n_failed=n_failed)


def _saddle_census(config: ExperimentConfig, layout, h, l_opt: float,
                   jobs: int) -> ExperimentResult:
    """Classify noiseless descent endpoints from many random starts."""
    _require(config, None, "gd")
    if config.theta0.mode != "random":
        raise ConfigError("saddle_census needs theta0 mode 'random'")
    thetas, _reps, _ = _resolve_theta0(config, layout, h)
    opt = replace(config.optimizer, grad_floor=0.0)
    tasks = [
        _Task(run_id=i, cfg=_seeded(opt, config.master_seed, 0, i, 0),
              theta0=th, auto_delta=True)
        for i, th in enumerate(thetas)]
    outcomes = _execute(layout, h, tasks, jobs)
    traj, summary, records, n_failed = _format_rows(outcomes, l_opt)
    counts: dict[str, int] = {}
    for row in summary:
        counts[row[7]] = counts.get(row[7], 0) + 1
    n_saddle = counts.get("strict_saddle", 0)
    lo, hi = wilson_interval(n_saddle, len(summary))
    notes = {
        "l_opt": l_opt,
        "class_counts": counts,
        "trapped_fraction": n_saddle / len(summary),
        "trapped_ci": [lo, hi],
    }
    return ExperimentResult(config=config, trajectory_rows=traj,
                            summary_rows=summary, notes=notes,
                            n_runs=len(outcomes), n_failed=n_failed)


def _depolarizing_sweep(config: ExperimentConfig, layout, h, l_opt: float,
                        jobs: int) -> ExperimentResult:
    """Noiseless descent on landscapes contracted by layer depolarizing."""
    _require(config, "q", "gd")
    thetas, reps, _ = _resolve_theta0(config, layout, h)
    arms = _sweep_arm_configs(config)
    tasks: list[_Task] = []
    next_id = 0
    for arm_idx, arm_cfg in enumerate(arms):
        for t_idx in range(len(thetas)):
            for rep in range(reps):
                tasks.append(_Task(
                    run_id=next_id, theta0=thetas[t_idx],
                    cfg=_seeded(arm_cfg, config.master_seed, arm_idx, t_idx, rep),
                    auto_delta=True))
                next_id += 1
    outcomes = _execute(layout, h, tasks, jobs)
    traj, summary, records, n_failed = _format_rows(outcomes, l_opt)
    runs_per_arm = len(thetas) * reps
    arm_means = []
    for arm_idx, arm_cfg in enumerate(arms):
        vals = [r.terminal_loss
                for r in records[arm_idx * runs_per_arm:(arm_idx + 1) * runs_per_arm]
                if r is not None]
        arm_means.append({"q": arm_cfg.q,
                          "mean_terminal_loss": float(np.mean(vals)) if vals else None})
    notes = {"l_opt": l_opt, "trace_mean": h.trace_mean, "arms": arm_means}
    return ExperimentResult(config=config, trajectory_rows=traj,
                            summary_rows=summary, notes=notes,
                            n_runs=len(outcomes), n_failed=n_failed)


def _critical_noise_sweep(config: ExperimentConfig, layout, h, l_opt: float,
                          jobs: int) -> ExperimentResult:
    """Locate, for each learning rate, the noise scale where escape turns on.

    For every eta arm an internal grid of noise scales (log-spaced around
    the random-walk estimate) is probed with repeated perturbed runs; the
    critical scale is the smallest grid point whose escape frequency
    reaches one half.
    """
    _require(config, "eta", "pgd")
    if config.theta0.mode == "random":
        raise ConfigError(
            "critical_noise_sweep needs curated (trapped) or explicit theta0")
    thetas, reps, seeds = _resolve_theta0(config, layout, h)
    opt = config.optimizer
    master = config.master_seed
    baseline = replace(opt, method="gd", r=0.0, n_shots=None)

    base_tasks = [
        _Task(run_id=i, cfg=_seeded(baseline, master, 0, i, 0), theta0=th)
        for i, th in enumerate(thetas)]
    base_outcomes = _execute(layout, h, base_tasks, jobs)
    refs = []
    for t_idx, (_t, rec, _s) in enumerate(base_outcomes):
        if seeds is not None:
            refs.append(seeds[t_idx].saddle_loss)
        else:
            refs.append(rec.terminal_loss if rec is not None else float("nan"))
    for t_idx, task in enumerate(base_tasks):
        task.threshold = refs[t_idx] - ESCAPE_MARGIN
        task.delta_l = refs[t_idx] - l_opt
    delta_bar = float(np.mean([ref - l_opt for ref in refs]))
    if not delta_bar > 0:
        raise DomainError("reference levels sit at the optimum; nothing to escape")

    etas = [cfg.eta for cfg in _sweep_arm_configs(config)]
    n_grid = 8
    grid_factors = np.logspace(-1.0, 0.8, n_grid)
    tasks: list[_Task] = []
    next_id = len(base_tasks)
    grids: list[list[float]] = []
    for e_idx, eta in enumerate(etas):
        # the fitted critical scale is a parameter-space displacement; the
        # update multiplies gradient noise by eta, so divide it back out
        center = critical_noise(eta, delta_bar, "fitted") / eta
        grid = [float(center * f) for f in grid_factors]
        grids.append(grid)
        for r_idx, r_val in enumerate(grid):
            arm_idx = 1 + e_idx * 64 + r_idx
            try:
                arm_cfg = replace(opt, eta=eta, r=r_val)
            except DomainError as exc:
                raise ConfigError(f"derived noise grid value invalid: {exc}")
            for t_idx in range(len(thetas)):
                for rep in range(reps):
                    tasks.append(_Task(
                        run_id=next_id, theta0=thetas[t_idx],
                        cfg=_seeded(arm_cfg, master, arm_idx, t_idx, rep),
                        threshold=refs[t_idx] - ESCAPE_MARGIN,
                        delta_l=refs[t_idx] - l_opt))
                    next_id += 1
    outcomes = base_outcomes + _execute(layout, h, tasks, jobs)
    traj, summary, records, n_failed = _format_rows(outcomes, l_opt)

    runs_per_cell = len(thetas) * reps
    offset = len(base_tasks)
    curve = []
    for e_idx, eta in enumerate(etas):
        eps_cri = None
        cell_stats = []
        for r_idx, r_val in enumerate(grids[e_idx]):
            cell = [r for r in records[offset:offset + runs_per_cell]
                    if r is not None]
            cell_rows = summary[offset:offset + runs_per_cell]
            offset += runs_per_cell
            escapes = [row[8] for row in cell_rows if row[8] is not None]
            p_esc = sum(escapes) / len(escapes) if escapes else 0.0
            cell_stats.append({"r": r_val, "p_escape": p_esc})
            if eps_cri is None and p_esc >= 0.5:
                eps_cri = r_val
        curve.append({"eta": eta, "eps_cri": eps_cri, "grid": cell_stats})
    notes = {"l_opt": l_opt, "delta_bar": delta_bar, "curve": curve}
    pts = [(c["eta"] * delta_bar, c["eps_cri"]) for c in curve
           if c["eps_cri"] is not None]
    if len(pts) >= 3:
        fit = fit_power_law([p[0] for p in pts], [p[1] for p in pts])
        notes["power_law"] = {"exponent": fit.exponent,
                              "prefactor": fit.prefactor,
                              "r_squared": fit.r_squared}
    return ExperimentResult(config=config, trajectory_rows=traj,
                            summary_rows=summary, notes=notes,
                            n_runs=len(outcomes), n_failed=n_failed)


def _linear_model(config: ExperimentConfig) -> ExperimentResult:
    """Noisy descent on the exactly solvable linear loss."""
    spec = config.linear_model or LinearModelSpec()
    if config.sweep is not None and config.sweep.parameter != "r":
        raise ConfigError("linear_model sweeps only the noise scale 'r'")
    sigmas = (list(config.sweep.values) if config.sweep is not None
              else [config.optimizer.r])
    opt = config.optimizer
    c = np.asarray(spec.c, dtype=np.float64)
    sum_c_sq = float(c @ c)
    traj: list[tuple] = []
    summary: list[tuple] = []
    next_id = 0
    for arm_idx, sigma in enumerate(sigmas):
        if sigma < 0:
            raise ConfigError(f"noise scale must be >= 0, got {sigma}")
        for rep in range(config.n_runs):
            rng = run_rng(config.master_seed, STREAM_RUNS, arm_idx, 0, rep)
            loss_mat, gnorm_mat = simulate_linear_sgd(
                c, spec.loss0, opt.eta, sigma, opt.max_steps, 1, rng)
            losses, gnorms = loss_mat[0], gnorm_mat[0]
            for step in range(losses.shape[0]):
                traj.append((next_id, step, float(losses[step]),
                             float(gnorms[step])))
            hit = convergence_time(losses, 0.0, spec.loss0)
            summary.append((next_id, "linear", float(sigma), None, opt.eta,
                            0.0, float(losses[-1]), "", None,
                            -1 if hit is None else hit))
            next_id += 1
    notes = {
        "loss0": spec.loss0,
        "sum_c_sq": sum_c_sq,
        "predicted_steps_to_zero": spec.loss0 / (opt.eta * sum_c_sq),
        "eps_cri": linear_model_critical_noise(opt.eta, spec.loss0),
    }
    return ExperimentResult(config=config, trajectory_rows=traj,
                            summary_rows=summary, notes=notes,
                            n_runs=next_id, n_failed=0)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Execute a named experiment and return its tables and notes."""
    if config.experiment == "linear_model":
        return _linear_model(config)
    layout, h = build_layout_and_observable(config)
    l_opt = min_eigenvalue(h)
    if config.experiment == "saddle_census":
        return _saddle_census(config, layout, h, l_opt, jobs)
    if config.experiment == "depolarizing_sweep":
        return _depolarizing_sweep(config, layout, h, l_opt, jobs)
    if config.experiment == "critical_noise_sweep":
        return _critical_noise_sweep(config, layout, h, l_opt, jobs)
    return _escape_family(config, layout, h, l_opt, jobs)
