"""Vectorized numpy implementations of the hot numeric kernels.

This module is the fallback backend used when JIT compilation is disabled
(see :mod:`vqa_lab.backend`).  Function signatures and semantics match
:mod:`vqa_lab._kernels_numba` exactly; the two backends agree to floating
point roundoff (reduction order differs, so results may differ in the last
few ulps).

Conventions shared by both backends:

* States are little-endian: qubit ``q`` is bit ``q`` of the basis index.
* Gate kind codes: 0=RX, 1=RY, 2=RZ, 3=ROT (RZ, RY, RZ with the first
  listed angle applied first), 4=CNOT.
* A Pauli word is encoded by two bit masks: ``x_mask`` has a 1 where the
  word has X or Y, ``zy_mask`` where it has Z or Y.  The word's action is
  ``P|b> = phase * (-1)^parity(b & zy_mask) * |b XOR x_mask>`` with
  ``phase = i**(number of Y positions)`` folded in by the caller.
* ``run_gd`` returns ``steps_done >= 0`` on completion (arrays are valid
  for indices ``0..steps_done``) or ``-(t+1)`` if the loss became
  non-finite at step ``t``.
"""

from __future__ import annotations

import numpy as np

HAS_NUMBA = False


def _apply_1q(psi: np.ndarray, n_qubits: int, q: int, u00, u01, u10, u11) -> None:
    stride = 1 << q
    view = psi.reshape(-1, 2, stride)
    a0 = view[:, 0, :]
    a1 = view[:, 1, :]
    n0 = u00 * a0 + u01 * a1
    n1 = u10 * a0 + u11 * a1
    view[:, 0, :] = n0
    view[:, 1, :] = n1


def _apply_cnot(psi: np.ndarray, n_qubits: int, control: int, target: int) -> None:
    arr = psi.reshape([2] * n_qubits)
    ax_c = n_qubits - 1 - control
    ax_t = n_qubits - 1 - target
    idx = [slice(None)] * n_qubits
    idx[ax_c] = 1
    sub = arr[tuple(idx)]
    # target axis shifts down by one inside the control=1 slice
    sub_ax_t = ax_t if ax_t < ax_c else ax_t - 1
    arr[tuple(idx)] = np.flip(sub, axis=sub_ax_t).copy()


def apply_gates(psi, n_qubits, kinds, q0, q1, slot_off, slots, theta) -> None:
    """Apply the compiled gate sequence to ``psi`` in place."""
    for g in range(kinds.shape[0]):
        kind = kinds[g]
        if kind == 4:
            _apply_cnot(psi, n_qubits, q0[g], q1[g])
            continue
        off = slot_off[g]
        if kind == 3:
            alpha = theta[slots[off]]
            beta = theta[slots[off + 1]]
            gamma = theta[slots[off + 2]]
            c = np.cos(0.5 * beta)
            s = np.sin(0.5 * beta)
            ep = np.exp(-0.5j * (alpha + gamma))
            em = np.exp(0.5j * (alpha - gamma))
            _apply_1q(psi, n_qubits, q0[g], ep * c, -em * s,
                      np.conj(em) * s, np.conj(ep) * c)
        else:
            angle = theta[slots[off]]
            c = np.cos(0.5 * angle)
            s = np.sin(0.5 * angle)
            if kind == 0:
                _apply_1q(psi, n_qubits, q0[g], c, -1j * s, -1j * s, c)
            elif kind == 1:
                _apply_1q(psi, n_qubits, q0[g], c, -s, s, c)
            else:
                e = np.exp(-0.5j * angle)
                _apply_1q(psi, n_qubits, q0[g], e, 0.0, 0.0, np.conj(e))


def pauli_expval_complex(psi, x_mask, zy_mask) -> complex:
    """Raw ``<psi| P |psi>`` for one Pauli word, without the Y phase factor."""
    size = psi.shape[0]
    b = np.arange(size, dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(b & np.int64(zy_mask)) & 1)
    return complex(np.sum(np.conj(psi[b ^ np.int64(x_mask)]) * signs * psi))


def expval_state(psi, ztable, gcoeffs, gx, gzy, gphase) -> float:
    """Expectation of the compiled Pauli sum in state ``psi``."""
    val = 0.0
    if ztable.shape[0] > 0:
        probs = psi.real * psi.real + psi.imag * psi.imag
        val += float(probs @ ztable)
    for t in range(gcoeffs.shape[0]):
        raw = pauli_expval_complex(psi, gx[t], gzy[t])
        val += gcoeffs[t] * (raw * gphase[t]).real
    return val


def loss_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
              ztable, gcoeffs, gx, gzy, gphase, scale, offset) -> float:
    """Loss at ``theta``: prepare |0..0>, run the circuit, measure, affine-map."""
    psi = np.zeros(1 << n_qubits, dtype=np.complex128)
    psi[0] = 1.0
    apply_gates(psi, n_qubits, kinds, q0, q1, slot_off, slots, theta)
    return scale * expval_state(psi, ztable, gcoeffs, gx, gzy, gphase) + offset


def grad_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
              ztable, gcoeffs, gx, gzy, gphase, scale, offset, out) -> None:
    """Parameter-shift gradient of the affine-mapped loss, written to ``out``."""
    work = theta.copy()
    half_pi = 0.5 * np.pi
    for i in range(theta.shape[0]):
        work[i] = theta[i] + half_pi
        lp = loss_eval(work, n_qubits, kinds, q0, q1, slot_off, slots,
                       ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        work[i] = theta[i] - half_pi
        lm = loss_eval(work, n_qubits, kinds, q0, q1, slot_off, slots,
                       ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        work[i] = theta[i]
        out[i] = 0.5 * (lp - lm)


def hess_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
              ztable, gcoeffs, gx, gzy, gphase, scale, offset, out) -> None:
    """Double-shift Hessian of the affine-mapped loss, written to ``out``."""

    def f(work):
        return loss_eval(work, n_qubits, kinds, q0, q1, slot_off, slots,
                         ztable, gcoeffs, gx, gzy, gphase, scale, offset)

    p = theta.shape[0]
    half_pi = 0.5 * np.pi
    work = theta.copy()
    l0 = f(work)
    for i in range(p):
        work[i] = theta[i] + np.pi
        lp = f(work)
        work[i] = theta[i] - np.pi
        lm = f(work)
        work[i] = theta[i]
        out[i, i] = 0.25 * (lp - 2.0 * l0 + lm)
        for j in range(i + 1, p):
            work[i] = theta[i] + half_pi
            work[j] = theta[j] + half_pi
            lpp = f(work)
            work[j] = theta[j] - half_pi
            lpm = f(work)
            work[i] = theta[i] - half_pi
            lmm = f(work)
            work[j] = theta[j] + half_pi
            lmp = f(work)
            work[i] = theta[i]
            work[j] = theta[j]
            val = 0.25 * (lpp - lpm - lmp + lmm)
            out[i, j] = val
            out[j, i] = val


def run_gd(theta, n_steps, eta, noise, grad_floor, n_qubits,
           kinds, q0, q1, slot_off, slots,
           ztable, gcoeffs, gx, gzy, gphase, scale, offset,
           losses, gnorms) -> int:
    """Gradient-descent loop; ``theta`` is updated in place.

    ``noise`` has shape (n_steps, p) and is added to the gradient before the
    step (pass a (0, p) array for plain descent).  Recording: ``losses[t]``
    and ``gnorms[t]`` describe the state before step ``t``; the terminal
    state is recorded too, so both arrays need ``n_steps + 1`` entries.
    """
    p = theta.shape[0]
    grad = np.empty(p, dtype=np.float64)
    use_noise = noise.shape[0] > 0
    for t in range(n_steps):
        lt = loss_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
                       ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        losses[t] = lt
        if not np.isfinite(lt):
            gnorms[t] = np.nan
            return -(t + 1)
        grad_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
                  ztable, gcoeffs, gx, gzy, gphase, scale, offset, grad)
        gn = float(np.sqrt(np.sum(grad * grad)))
        gnorms[t] = gn
        if gn <= grad_floor:
            return t
        if use_noise:
            theta -= eta * (grad + noise[t])
        else:
            theta -= eta * grad
    lt = loss_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
                   ztable, gcoeffs, gx, gzy, gphase, scale, offset)
    losses[n_steps] = lt
    if not np.isfinite(lt):
        gnorms[n_steps] = np.nan
        return -(n_steps + 1)
    grad_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
              ztable, gcoeffs, gx, gzy, gphase, scale, offset, grad)
    gnorms[n_steps] = float(np.sqrt(np.sum(grad * grad)))
    return n_steps
