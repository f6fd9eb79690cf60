"""Gradient-descent optimization of circuit losses.

Three update methods share one loop:

* ``gd``: plain descent with the exact shift-rule gradient.
* ``pgd``: exact gradient plus fresh Gaussian noise of per-coordinate
  standard deviation ``r`` added inside the learning rate, so each
  parameter is kicked by about ``eta * r`` per step.
* ``shot_gd``: the gradient is replaced by an unbiased finite-shot estimate;
  no artificial noise is added because sampling supplies its own.

Global depolarizing noise of strength ``q`` per layer never needs density
matrices here: it contracts the loss toward the observable's mean,
``L_q = (1-q)**layers * L + (1 - (1-q)**layers) * Tr(H)/2**n``, so runs
apply the matching affine transform to every loss and gradient.

The recorded trajectory always stores the exact (noise-model-transformed)
loss of the visited iterates, even when the update itself is noisy, plus
the norm of the gradient the update actually used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .circuit import AnsatzLayout, as_theta
from .errors import DimensionError, DivergedError, DomainError
from .gradient import _kernel_args, gradient_shots, hessian_exact
from .hamiltonian import PauliSum, operator_norm, MAX_EXACT_NORM_QUBITS

METHODS = ("gd", "pgd", "shot_gd")

CLASSIFY_TAU = 1e-6
# Stationarity gate for terminal classification.  Plateau attractors on
# these landscapes are degenerate: descending until the gradient reaches
# 1e-4 or lower lands at points whose smallest Hessian eigenvalue has
# already collapsed toward zero, hiding the strict-saddle signature.  At
# the 1e-2 scale a stalled 400-step run is still on the plateau approach,
# where the negative curvature is visible.
DEFAULT_STATIONARY_EPS = 1e-2


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for one optimization run.

    ``grad_floor`` stops a run early once the used gradient norm falls to
    or below it (0 disables).  ``snapshot_every`` stores the full parameter
    vector every so many steps; the terminal vector is always kept.
    """

    method: str
    eta: float = 0.05
    max_steps: int = 400
    r: float = 0.0
    n_shots: int | None = None
    q: float = 0.0
    seed: int = 0
    grad_floor: float = 0.0
    snapshot_every: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (np.isfinite(self.eta) and self.eta >= 0):
            raise DomainError(f"eta must be finite and >= 0, got {self.eta}")
        if self.max_steps < 1:
            raise DomainError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.method == "pgd" and not self.r > 0:
            raise DomainError(f"pgd requires noise scale r > 0, got {self.r}")
        if self.r < 0:
            raise DomainError(f"r must be >= 0, got {self.r}")
        if self.method == "shot_gd" and (self.n_shots is None or self.n_shots < 1):
            raise DomainError(
                f"shot_gd requires n_shots >= 1, got {self.n_shots}")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must be in [0, 1], got {self.q}")
        if self.grad_floor < 0:
            raise DomainError(f"grad_floor must be >= 0, got {self.grad_floor}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise DomainError(
                f"snapshot_every must be >= 1, got {self.snapshot_every}")


@dataclass(frozen=True)
class StoppingRule:
    """Second-order stationarity test: stop when the gradient norm is at
    most ``epsilon`` and the smallest Hessian eigenvalue is at least
    ``-sqrt(rho * epsilon)``."""

    epsilon: float
    rho: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if self.rho < 0:
            raise DomainError(f"rho must be >= 0, got {self.rho}")

    @property
    def lambda_floor(self) -> float:
        return -float(np.sqrt(self.rho * self.epsilon))


@dataclass(frozen=True)
class SmoothnessBounds:
    """Gradient-Lipschitz and Hessian-Lipschitz constants with the matching
    recommended learning rate ``1 / beta``."""

    beta: float
    rho: float
    eta_recommended: float


@dataclass(frozen=True)
class TerminalReport:
    """Classification of a parameter point by gradient norm and curvature."""

    label: str
    grad_norm: float
    lambda_min: float


@dataclass
class RunRecord:
    """Everything recorded about one optimization run.

    ``losses[t]`` and ``grad_norms[t]`` describe the iterate before step
    ``t``; both include the terminal iterate, so their length is
    ``steps_done + 1``.
    """

    config: OptimizerConfig
    losses: np.ndarray
    grad_norms: np.ndarray
    terminal_theta: np.ndarray
    terminal_classification: str
    terminal_lambda_min: float
    stopped_early: bool
    theta_snapshots: tuple = ()

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def steps_done(self) -> int:
        return len(self.losses) - 1

    @property
    def terminal_loss(self) -> float:
        return float(self.losses[-1])

    @property
    def min_loss(self) -> float:
        return float(np.min(self.losses))


def step_gd(theta, grad, eta: float) -> np.ndarray:
    """One plain descent step ``theta - eta * grad``."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise DimensionError(
            f"theta shape {theta.shape} != grad shape {grad.shape}")
    return theta - eta * grad


def step_pgd(theta, grad, eta: float, r: float,
             rng: np.random.Generator) -> np.ndarray:
    """One perturbed step: Gaussian noise is added to the gradient.

    Each coordinate of the gradient is perturbed by independent noise of
    standard deviation ``r``, so the parameter kick per step has
    per-coordinate scale ``eta * r``.  ``r = 0`` reduces to
    :func:`step_gd` exactly.
    """
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise DimensionError(
            f"theta shape {theta.shape} != grad shape {grad.shape}")
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")
    noise = rng.normal(0.0, r, size=theta.shape) if r > 0 else 0.0
    return theta - eta * (grad + noise)


def depolarized_loss(loss_value: float, h: PauliSum, q: float,
                     n_layers: int) -> float:
    """Loss under a global depolarizing channel applied after each layer."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must be in [0, 1], got {q}")
    if n_layers < 0:
        raise DomainError(f"n_layers must be >= 0, got {n_layers}")
    keep = (1.0 - q) ** n_layers
    return keep * loss_value + (1.0 - keep) * h.trace_mean


def _depol_transform(h: PauliSum, q: float, n_layers: int | None) -> tuple[float, float]:
    """(scale, offset) such that the noisy loss is scale * L + offset."""
    if q == 0.0:
        return 1.0, 0.0
    if n_layers is None:
        raise DomainError(
            "depolarizing strength q > 0 needs a layout with layer metadata")
    keep = (1.0 - q) ** n_layers
    return keep, (1.0 - keep) * h.trace_mean


def smoothness_bounds(layout: AnsatzLayout, h: PauliSum) -> SmoothnessBounds:
    """Loss smoothness constants from the shift-rule derivative bounds.

    Every k-th partial derivative of the loss is bounded by
    ``2**k * norm(O) * max_gate_generator_norm**k``; with all rotation
    generators being half Paulis (norm 1/2) this collapses to
    ``beta = p * norm(O)`` and ``rho = p**1.5 * norm(O)``.  The observable
    norm is exact when small enough to diagonalize, else its one-norm bound.
    """
    if layout.n_qubits != h.n_qubits:
        raise DimensionError(
            f"layout has {layout.n_qubits} qubits, observable has {h.n_qubits}")
    norm = operator_norm(h, exact=h.n_qubits <= MAX_EXACT_NORM_QUBITS)
    p = layout.n_params
    beta = p * norm
    rho = p ** 1.5 * norm
    eta = 1.0 / beta if beta > 0 else np.inf
    return SmoothnessBounds(beta=beta, rho=rho, eta_recommended=eta)


def classify_terminal(layout: AnsatzLayout, h: PauliSum, theta,
                      epsilon: float = DEFAULT_STATIONARY_EPS,
                      scale: float = 1.0, offset: float = 0.0) -> TerminalReport:
    """Classify a point as not_stationary, minimum, strict_saddle, or flat.

    A point is stationary when the gradient norm is at most ``epsilon``.
    Stationary points split by the smallest Hessian eigenvalue against the
    curvature tolerance 1e-6: above it a minimum, below its negative a
    strict saddle, inside the band flat (degenerate at this resolution).
    """
    theta = as_theta(theta, layout.n_params)
    args = _kernel_args(layout, h, scale, offset)
    grad = np.empty(layout.n_params, dtype=np.float64)
    kernels.grad_eval(theta, *args, grad)
    gnorm = float(np.linalg.norm(grad))
    if gnorm > epsilon:
        return TerminalReport("not_stationary", gnorm, np.nan)
    hess = np.empty((layout.n_params, layout.n_params), dtype=np.float64)
    kernels.hess_eval(theta, *args, hess)
    lam = float(np.linalg.eigvalsh(0.5 * (hess + hess.T))[0])
    if lam > CLASSIFY_TAU:
        label = "minimum"
    elif lam < -CLASSIFY_TAU:
        label = "strict_saddle"
    else:
        label = "flat"
    return TerminalReport(label, gnorm, lam)


def _run_kernel_path(layout, h, theta, cfg, scale, offset):
    """gd/pgd without stopping rule or snapshots: one kernel call."""
    p = layout.n_params
    if cfg.method == "pgd":
        rng = np.random.default_rng(cfg.seed)
        noise = rng.normal(0.0, cfg.r, size=(cfg.max_steps, p))
    else:
        noise = np.zeros((0, p), dtype=np.float64)
    losses = np.empty(cfg.max_steps + 1, dtype=np.float64)
    gnorms = np.empty(cfg.max_steps + 1, dtype=np.float64)
    args = _kernel_args(layout, h, scale, offset)
    ret = kernels.run_gd(theta, cfg.max_steps, cfg.eta, noise, cfg.grad_floor,
                         *args, losses, gnorms)
    if ret < 0:
        raise DivergedError(-ret - 1)
    stopped = ret < cfg.max_steps
    return losses[:ret + 1].copy(), gnorms[:ret + 1].copy(), stopped


def _run_python_path(layout, h, theta, cfg, stop, scale, offset):
    """Per-step loop for shot_gd, stopping rules, or snapshot recording."""
    p = layout.n_params
    rng = np.random.default_rng(cfg.seed)
    args = _kernel_args(layout, h, scale, offset)
    losses: list[float] = []
    gnorms: list[float] = []
    snapshots: list[tuple[int, np.ndarray]] = []
    grad = np.empty(p, dtype=np.float64)
    stopped = False
    t = 0
    while True:
        lt = float(kernels.loss_eval(theta, *args))
        losses.append(lt)
        if not np.isfinite(lt):
            raise DivergedError(t)
        if cfg.method == "shot_gd":
            est = gradient_shots(layout, h, theta, cfg.n_shots, rng)
            grad = scale * est.values
        else:
            kernels.grad_eval(theta, *args, grad)
        gnorm = float(np.linalg.norm(grad))
        gnorms.append(gnorm)
        if cfg.snapshot_every is not None and t % cfg.snapshot_every == 0:
            snapshots.append((t, theta.copy()))
        if stop is not None and gnorm <= stop.epsilon:
            lam = hessian_exact(layout, h, theta).min_eigenvalue * scale
            if lam >= stop.lambda_floor:
                stopped = True
                break
        if gnorm <= cfg.grad_floor:
            stopped = True
            break
        if t >= cfg.max_steps:
            break
        if cfg.method == "pgd":
            theta -= cfg.eta * (grad + rng.normal(0.0, cfg.r, size=p))
        else:
            theta -= cfg.eta * grad
        t += 1
    return (np.asarray(losses), np.asarray(gnorms), stopped,
            tuple(snapshots))


def run(layout: AnsatzLayout, h: PauliSum, theta0,
        config: OptimizerConfig, stop: StoppingRule | None = None) -> RunRecord:
    """Optimize from ``theta0`` and record the trajectory.

    Raises :class:`DivergedError` if the loss becomes non-finite.  The
    terminal point is classified on the same (possibly depolarized)
    landscape the optimizer saw, using the stopping rule's epsilon when one
    is given and the default stationarity gate otherwise.
    """
    if layout.n_qubits != h.n_qubits:
        raise DimensionError(
            f"layout has {layout.n_qubits} qubits, observable has {h.n_qubits}")
    theta = as_theta(theta0, layout.n_params).copy()
    scale, offset = _depol_transform(h, config.q, layout.n_layers)
    use_kernel = (config.method in ("gd", "pgd") and stop is None
                  and config.snapshot_every is None)
    if use_kernel:
        losses, gnorms, stopped = _run_kernel_path(
            layout, h, theta, config, scale, offset)
        snapshots: tuple = ()
    else:
        losses, gnorms, stopped, snapshots = _run_python_path(
            layout, h, theta, config, stop, scale, offset)
    eps = stop.epsilon if stop is not None else DEFAULT_STATIONARY_EPS
    report = classify_terminal(layout, h, theta, eps, scale, offset)
    if config.snapshot_every is not None:
        last = len(losses) - 1
        if not snapshots or snapshots[-1][0] != last:
            snapshots = snapshots + ((last, theta.copy()),)
    return RunRecord(config=config, losses=losses, grad_norms=gnorms,
                     terminal_theta=theta, terminal_classification=report.label,
                     terminal_lambda_min=report.lambda_min,
                     stopped_early=stopped, theta_snapshots=snapshots)
