"""Statistics and analytic heuristics for saddle-escape experiments.

Grouped here are the quantities computed *about* optimization runs rather
than during them: escape-probability estimates with Wilson confidence
intervals, log-log power-law fits, convergence-time predictors derived
from the frozen-tangent-kernel picture of late training, critical noise
scales, the d-dimensional random-walk return probability, and the exactly
solvable linear loss model used to study the noise crossover in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, RegimeError
from .gradient import gradient_exact, loss as circuit_loss

# calibration constants for the critical-noise fit and the shot heuristic
FITTED_C_EPS = 0.0521404
FITTED_DELTA_CRI = 0.8722
FITTED_C_ETA = 1.19733

_WILSON_Z = 1.96


@dataclass(frozen=True)
class EscapeStats:
    """Escape frequency over a batch of runs with a 95% Wilson interval."""

    n_total: int
    n_escaped: int
    threshold: float
    p_escape: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of ``y = prefactor * x**exponent`` on log-log axes."""

    exponent: float
    prefactor: float
    r_squared: float


def wilson_interval(n_hits: int, n_total: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n_total < 1:
        raise DomainError(f"n_total must be >= 1, got {n_total}")
    if not 0 <= n_hits <= n_total:
        raise DomainError(f"n_hits must be in 0..{n_total}, got {n_hits}")
    z = _WILSON_Z
    phat = n_hits / n_total
    denom = 1.0 + z * z / n_total
    center = (phat + z * z / (2 * n_total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n_total
                         + z * z / (4 * n_total * n_total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def escape_probability(records: Sequence, threshold: float) -> EscapeStats:
    """Fraction of runs whose recorded loss ever dropped below ``threshold``.

    A run escapes when the minimum over its whole recorded trajectory beats
    the threshold, so escapes that are later undone by noise still count.
    """
    if len(records) == 0:
        raise DomainError("need at least one run record")
    n_escaped = sum(1 for rec in records if rec.min_loss < threshold)
    lo, hi = wilson_interval(n_escaped, len(records))
    return EscapeStats(n_total=len(records), n_escaped=n_escaped,
                       threshold=threshold, p_escape=n_escaped / len(records),
                       ci_low=lo, ci_high=hi)


def performance_metric(terminal_loss: float, l_opt: float) -> float:
    """Inverse distance of the terminal loss from the optimum.

    Values below the optimum by more than 1e-9 are rejected; smaller
    excursions (roundoff) clamp to 1e-12 so the metric stays finite.
    """
    diff = terminal_loss - l_opt
    if diff < -1e-9:
        raise DomainError(
            f"terminal loss {terminal_loss} is below the optimum {l_opt}")
    return 1.0 / max(diff, 1e-12)


def convergence_time(losses: np.ndarray, l_opt: float,
                     delta_loss: float, frac: float = 0.05) -> int | None:
    """First step at which the loss is within ``frac * delta_loss`` of the
    optimum, or None if the trajectory never gets there."""
    if delta_loss <= 0:
        raise DomainError(f"delta_loss must be > 0, got {delta_loss}")
    target = l_opt + frac * delta_loss
    hits = np.nonzero(np.asarray(losses) <= target)[0]
    return int(hits[0]) if hits.size else None


def fit_power_law(x, y) -> PowerLawFit:
    """Fit ``y = a * x**b`` by least squares on log-log axes."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-d arrays of equal length")
    if x.size < 3:
        raise DomainError(f"need at least 3 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power-law fit needs strictly positive data")
    if np.unique(x).size != x.size:
        raise DomainError("x values must be distinct")
    lx = np.log(x)
    ly = np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    residuals = ly - (slope * lx + intercept)
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot < 1e-30:
        r_sq = 1.0 if ss_res < 1e-30 else 0.0
    else:
        r_sq = 1.0 - ss_res / ss_tot
    return PowerLawFit(exponent=float(slope), prefactor=float(np.exp(intercept)),
                       r_squared=r_sq)


def _check_qntk_args(eps0_sq, k, eta, noise_eps):
    if eps0_sq < 0:
        raise DomainError(f"eps0_sq must be >= 0, got {eps0_sq}")
    if k <= 0:
        raise DomainError(f"k must be > 0, got {k}")
    if eta <= 0:
        raise DomainError(f"eta must be > 0, got {eta}")
    if noise_eps <= 0:
        raise DomainError(f"noise_eps must be > 0, got {noise_eps}")
    if eta * k >= 1:
        raise RegimeError(
            f"frozen-kernel prediction needs eta * k < 1, got {eta * k}")


def qntk_convergence_time(eps0_sq: float, k: float, eta: float,
                          noise_eps: float) -> float:
    """Steps until the mean squared residual meets the sampling-noise floor.

    Under a frozen tangent kernel the residual contracts by ``(1 - eta*k)``
    per step while per-step noise of scale ``noise_eps`` pumps it back up;
    this returns the crossing time of the two effects.  In the small-eta
    limit it tends to ``eps0_sq / (noise_eps**2 * k)``.
    """
    _check_qntk_args(eps0_sq, k, eta, noise_eps)
    floor_sq = 2.0 * eps0_sq * eta - eps0_sq * eta * eta * k + noise_eps ** 2
    return math.log(noise_eps / math.sqrt(floor_sq)) / math.log(1.0 - eta * k)


def qntk_convergence_time_small_eta(eps0_sq: float, k: float,
                                    noise_eps: float) -> float:
    """Small-learning-rate limit of :func:`qntk_convergence_time`."""
    if eps0_sq < 0:
        raise DomainError(f"eps0_sq must be >= 0, got {eps0_sq}")
    if k <= 0:
        raise DomainError(f"k must be > 0, got {k}")
    if noise_eps <= 0:
        raise DomainError(f"noise_eps must be > 0, got {noise_eps}")
    return eps0_sq / (noise_eps ** 2 * k)


def qntk_residual_variance(eps0_sq: float, k: float, eta: float,
                           noise_eps: float, t: int) -> float:
    """Mean squared residual after ``t`` noisy contraction steps.

    The underlying process is ``eps(t+1) = (1 - eta*k) eps(t) + zeta`` with
    ``zeta ~ N(0, noise_eps**2 * k)``; its second moment relaxes toward the
    fixed point ``noise_eps**2 / (eta * (2 - eta*k))`` geometrically.
    """
    _check_qntk_args(eps0_sq, k, eta, noise_eps)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    fixed = noise_eps ** 2 / (eta * (2.0 - eta * k))
    contraction = (1.0 - eta * k) ** (2 * t)
    return contraction * (eps0_sq - fixed) + fixed


def estimate_qntk_k(layout, h, l_opt: float, n_samples: int,
                    rng: np.random.Generator) -> float:
    """Monte-Carlo estimate of the tangent-kernel scale K.

    Averages ``|grad L|^2 / (2 (L - l_opt))`` over uniform random parameter
    points, which equals twice the squared gradient of the residual
    ``sqrt(L - l_opt)``.  Points numerically at the optimum are skipped.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples}")
    total = 0.0
    used = 0
    for _ in range(n_samples):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=layout.n_params)
        shifted = circuit_loss(layout, h, theta) - l_opt
        if shifted <= 1e-12:
            continue
        grad = gradient_exact(layout, h, theta).values
        total += float(grad @ grad) / (2.0 * shifted)
        used += 1
    if used == 0:
        raise DomainError("all sampled points sat at the optimum")
    return total / used


def critical_noise(eta: float, delta_loss: float,
                   mode: str = "random_walk") -> float:
    """Noise scale at which added noise stops helping and starts hurting.

    ``random_walk`` treats escape as a noise-driven walk that must cover
    the loss gap within its own descent budget, giving
    ``sqrt(4 * eta * delta_loss)``.  ``fitted`` uses the empirically
    calibrated power law ``c_eps * (eta * delta_loss)**delta_cri``.
    """
    if eta <= 0:
        raise DomainError(f"eta must be > 0, got {eta}")
    if delta_loss <= 0:
        raise DomainError(f"delta_loss must be > 0, got {delta_loss}")
    if mode == "random_walk":
        return math.sqrt(4.0 * eta * delta_loss)
    if mode == "fitted":
        return FITTED_C_EPS * (eta * delta_loss) ** FITTED_DELTA_CRI
    raise DomainError(f"mode must be 'random_walk' or 'fitted', got {mode!r}")


def optimal_shots(eta: float, delta_loss: float,
                  delta_cri: float = 1.0,
                  c_eta: float = FITTED_C_ETA,
                  c_eps: float = FITTED_C_EPS) -> float:
    """Shot budget at which sampling noise sits at the critical scale.

    Matches the per-step parameter kick from sampling,
    ``c_eta * eta / sqrt(N)``, against the critical noise scale
    ``c_eps * (eta**2 * delta_loss)**(delta_cri / 2)`` and solves for N,
    giving ``(c_eta/c_eps)**2 * eta**(2 - 2*delta_cri) *
    delta_loss**(-delta_cri)``.  With the default ``delta_cri = 1`` the
    learning rate drops out.
    """
    if eta <= 0:
        raise DomainError(f"eta must be > 0, got {eta}")
    if delta_loss <= 0:
        raise DomainError(f"delta_loss must be > 0, got {delta_loss}")
    return ((c_eta / c_eps) ** 2 * eta ** (2.0 - 2.0 * delta_cri)
            * delta_loss ** (-delta_cri))


def _scaled_i0(x: float) -> float:
    """exp(-x) * I0(x) for x >= 0, accurate to ~1e-10."""
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x <= 40.0:
        term = 1.0
        total = 1.0
        quarter = 0.25 * x * x
        k = 1
        while True:
            term *= quarter / (k * k)
            total += term
            if term < total * 1e-17:
                break
            k += 1
        return math.exp(-x) * total
    # asymptotic expansion, six correction terms
    inv8x = 1.0 / (8.0 * x)
    series = 1.0
    num = 1.0
    power = 1.0
    fact = 1.0
    for k in range(1, 7):
        num *= (2 * k - 1) ** 2
        fact *= k
        power *= inv8x
        series += num * power / fact
    return series / math.sqrt(2.0 * math.pi * x)


def _adaptive_simpson(f, a, b, tol, max_depth=60):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0

    def recurse(a, fa, b, fb, fm, whole, tol, depth):
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, fa, m, fm, flm, left, 0.5 * tol, depth + 1)
                + recurse(m, fm, b, fb, frm, right, 0.5 * tol, depth + 1))

    return recurse(a, fa, b, fb, fm, whole, tol, 0)


def polya_constant(d: int) -> float:
    """Return probability of the symmetric random walk on Z^d, d >= 3.

    Computed from the Watson integral ``I(d) = integral of
    [I0(t/d)]**d * exp(-t) over t >= 0`` as ``1 - 1/I(d)``.  The integrand
    equals ``scaled_i0(t/d)**d`` exactly, the integral is mapped to [0, 1)
    by ``t = u/(1-u)`` for adaptive Simpson quadrature, and the residual
    algebraic tail is added in closed form.
    """
    if d < 3:
        raise DomainError(
            f"the walk is recurrent for d < 3 (see return_probability), got {d}")
    d = int(d)

    def integrand(u: float) -> float:
        onemu = 1.0 - u
        t = u / onemu
        return _scaled_i0(t / d) ** d / (onemu * onemu)

    u_max = 1.0 - 1e-6
    t_max = u_max / (1.0 - u_max)
    integral = _adaptive_simpson(integrand, 0.0, u_max, 1e-10)
    # beyond t_max the integrand is (2 pi t / d)^(-d/2) to relative O(1/t)
    tail = ((d / (2.0 * math.pi)) ** (d / 2.0)
            * t_max ** (1.0 - 0.5 * d) / (0.5 * d - 1.0))
    return 1.0 - 1.0 / (integral + tail)


def return_probability(d: int) -> float:
    """Return probability for any d >= 1; the walk is certain to return in
    one and two dimensions."""
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if d <= 2:
        return 1.0
    return polya_constant(d)


def linear_model_mean_loss(l0: float, eta: float, sum_c_sq: float,
                           t: int) -> float:
    """Expected loss of the noisy linear model after ``t`` steps."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if sum_c_sq < 0:
        raise DomainError(f"sum_c_sq must be >= 0, got {sum_c_sq}")
    return l0 - eta * t * sum_c_sq


def linear_model_loss_variance(sigma: float, sum_c_sq: float, t: int) -> float:
    """Loss variance of the noisy linear model after ``t`` steps."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if sum_c_sq < 0:
        raise DomainError(f"sum_c_sq must be >= 0, got {sum_c_sq}")
    return t * sigma ** 2 * sum_c_sq


def linear_model_critical_noise(eta: float, l0: float) -> float:
    """Noise scale where the linear model's end-state spread matches l0.

    The mean loss reaches zero after T = l0 / (eta * sum(c**2)) steps, at
    which point the accumulated standard deviation is
    sigma * sqrt(T * sum(c**2)) = sigma * sqrt(l0 / eta); setting that
    equal to l0 gives sqrt(eta * l0).
    """
    if eta <= 0:
        raise DomainError(f"eta must be > 0, got {eta}")
    if l0 <= 0:
        raise DomainError(f"l0 must be > 0, got {l0}")
    return float(np.sqrt(eta * l0))


def simulate_linear_sgd(c, l0: float, eta: float, sigma: float,
                        n_steps: int, n_runs: int,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Simulate noisy descent on the linear loss ``L = l0 + c . theta``.

    Starting from theta = 0, each step moves ``theta -= eta * c`` and then
    adds per-coordinate update noise ``xi ~ N(0, sigma**2)`` directly to
    theta, which is what makes the accumulated loss variance
    ``t * sigma**2 * sum(c**2)`` with no learning-rate factor.  Returns
    (losses, grad_norms) of shape ``(n_runs, n_steps + 1)``; the gradient
    of this loss is the constant ``c``, so the recorded norm is flat.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 1 or c.size < 1:
        raise DomainError("c must be a nonempty 1-d vector")
    if n_steps < 0 or n_runs < 1:
        raise DomainError("need n_steps >= 0 and n_runs >= 1")
    p = c.size
    theta = np.zeros((n_runs, p))
    losses = np.empty((n_runs, n_steps + 1))
    losses[:, 0] = l0
    for t in range(n_steps):
        theta = theta - eta * c[None, :]
        if sigma > 0:
            theta = theta + rng.normal(0.0, sigma, size=(n_runs, p))
        losses[:, t + 1] = l0 + theta @ c
    gnorms = np.full((n_runs, n_steps + 1), float(np.linalg.norm(c)))
    return losses, gnorms
