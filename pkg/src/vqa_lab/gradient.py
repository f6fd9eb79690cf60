"""Loss evaluation and shift-rule derivatives.

The loss is the expectation of an observable in the circuit output state,
as a function of the parameter vector.  Because every rotation generator
is half a Pauli word, first derivatives obey the two-point shift rule with
shift pi/2 exactly, and second derivatives follow from shifting twice:

* gradient:  d_i L = (L(theta + pi/2 e_i) - L(theta - pi/2 e_i)) / 2
* Hessian off-diagonal: four pi/2 double shifts, divided by 4
* Hessian diagonal: (L(theta + pi e_i) - 2 L(theta) + L(theta - pi e_i)) / 4

These are exact identities of the trigonometric loss, not finite-difference
approximations, so they hold to machine precision at any shift-free point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .circuit import AnsatzLayout, as_theta
from .errors import CapacityError, DimensionError, DomainError
from .hamiltonian import PauliSum, measurement_groups, sample_expectation
from . import circuit as _circuit

MAX_HESSIAN_PARAMS = 200


@dataclass(frozen=True)
class GradientEstimate:
    """Gradient values plus how they were obtained.

    ``n_shots`` is None for exact evaluation.  ``shots_used`` counts every
    shot spent across all shifted-circuit evaluations and measurement
    groups; it is 0 in exact mode.
    """

    values: np.ndarray
    n_shots: int | None = None
    shots_used: int = 0

    @property
    def mode(self) -> str:
        return "exact" if self.n_shots is None else f"shots({self.n_shots})"

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class HessianMatrix:
    """Symmetrized second-derivative matrix."""

    entries: np.ndarray
    symmetrized: bool = True

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def _check_pair(layout: AnsatzLayout, h: PauliSum) -> None:
    if layout.n_qubits != h.n_qubits:
        raise DimensionError(
            f"layout has {layout.n_qubits} qubits, observable has {h.n_qubits}")


def _kernel_args(layout: AnsatzLayout, h: PauliSum, scale: float = 1.0,
                 offset: float = 0.0) -> tuple:
    lc = layout._compiled
    hc = h._compiled
    return (layout.n_qubits, lc.kinds, lc.q0, lc.q1, lc.slot_off, lc.slots,
            hc.ztable, hc.gcoeffs, hc.gx, hc.gzy, hc.gphase, scale, offset)


def loss(layout: AnsatzLayout, h: PauliSum, theta) -> float:
    """Expectation of ``h`` after running the layout on the zero state."""
    _check_pair(layout, h)
    theta = as_theta(theta, layout.n_params)
    return float(kernels.loss_eval(theta, *_kernel_args(layout, h)))


def gradient_exact(layout: AnsatzLayout, h: PauliSum, theta) -> GradientEstimate:
    """Shift-rule gradient from exact expectations."""
    _check_pair(layout, h)
    theta = as_theta(theta, layout.n_params)
    out = np.empty(layout.n_params, dtype=np.float64)
    kernels.grad_eval(theta, *_kernel_args(layout, h), out)
    return GradientEstimate(values=out)


def gradient_shots(layout: AnsatzLayout, h: PauliSum, theta, n_shots: int,
                   rng: np.random.Generator) -> GradientEstimate:
    """Shift-rule gradient from finite-shot expectation estimates.

    Each of the 2p shifted circuits is sampled independently with the full
    ``n_shots`` budget per measurement group, so the estimate is unbiased
    for the exact gradient.
    """
    _check_pair(layout, h)
    if n_shots < 1:
        raise DomainError(f"n_shots must be >= 1, got {n_shots}")
    theta = as_theta(theta, layout.n_params)
    p = layout.n_params
    zero = _circuit.zero_state(layout.n_qubits)
    values = np.empty(p, dtype=np.float64)
    work = theta.copy()
    for i in range(p):
        work[i] = theta[i] + 0.5 * np.pi
        plus = sample_expectation(h, _circuit.apply_circuit(layout, work, zero),
                                  n_shots, rng)
        work[i] = theta[i] - 0.5 * np.pi
        minus = sample_expectation(h, _circuit.apply_circuit(layout, work, zero),
                                   n_shots, rng)
        work[i] = theta[i]
        values[i] = 0.5 * (plus - minus)
    shots_used = 2 * p * n_shots * measurement_groups(h)
    return GradientEstimate(values=values, n_shots=n_shots, shots_used=shots_used)


def hessian_exact(layout: AnsatzLayout, h: PauliSum, theta) -> HessianMatrix:
    """Double-shift Hessian from exact expectations."""
    _check_pair(layout, h)
    if layout.n_params > MAX_HESSIAN_PARAMS:
        raise CapacityError(
            f"Hessian is capped at {MAX_HESSIAN_PARAMS} parameters, layout "
            f"has {layout.n_params}")
    theta = as_theta(theta, layout.n_params)
    p = layout.n_params
    out = np.empty((p, p), dtype=np.float64)
    kernels.hess_eval(theta, *_kernel_args(layout, h), out)
    return HessianMatrix(entries=0.5 * (out + out.T), symmetrized=True)
