"""JIT-compiled implementations of the hot numeric kernels.

Default backend (see :mod:`vqa_lab.backend`).  Signatures and semantics
match :mod:`vqa_lab._kernels_numpy`; see that module's docstring for the
shared encoding conventions.  Loops are written scalar-style for numba;
compiled artifacts are cached on disk, so the first call in a fresh
environment pays a one-off compilation cost.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

HAS_NUMBA = True

_jit = njit(cache=True, nogil=True)


@_jit
def _parity(x: np.int64) -> np.int64:
    x ^= x >> 32
    x ^= x >> 16
    x ^= x >> 8
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


@_jit
def _apply_1q(psi, n_qubits, q, u00, u01, u10, u11):
    stride = 1 << q
    size = psi.shape[0]
    step = stride << 1
    for base in range(0, size, step):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            a0 = psi[i0]
            a1 = psi[i1]
            psi[i0] = u00 * a0 + u01 * a1
            psi[i1] = u10 * a0 + u11 * a1


@_jit
def _apply_cnot(psi, n_qubits, control, target):
    size = psi.shape[0]
    cb = 1 << control
    tb = 1 << target
    for i in range(size):
        if (i & cb) != 0 and (i & tb) == 0:
            j = i | tb
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@_jit
def apply_gates(psi, n_qubits, kinds, q0, q1, slot_off, slots, theta):
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
            c = math.cos(0.5 * beta)
            s = math.sin(0.5 * beta)
            ep = complex(math.cos(0.5 * (alpha + gamma)), -math.sin(0.5 * (alpha + gamma)))
            em = complex(math.cos(0.5 * (alpha - gamma)), math.sin(0.5 * (alpha - gamma)))
            _apply_1q(psi, n_qubits, q0[g], ep * c, -em * s,
                      em.conjugate() * s, ep.conjugate() * c)
        else:
            angle = theta[slots[off]]
            c = math.cos(0.5 * angle)
            s = math.sin(0.5 * angle)
            if kind == 0:
                _apply_1q(psi, n_qubits, q0[g], c + 0j, -1j * s, -1j * s, c + 0j)
            elif kind == 1:
                _apply_1q(psi, n_qubits, q0[g], c + 0j, -s + 0j, s + 0j, c + 0j)
            else:
                e = complex(math.cos(0.5 * angle), -math.sin(0.5 * angle))
                _apply_1q(psi, n_qubits, q0[g], e, 0j, 0j, e.conjugate())


@_jit
def pauli_expval_complex(psi, x_mask, zy_mask):
    size = psi.shape[0]
    acc = 0j
    for b in range(size):
        sign = 1.0 - 2.0 * _parity(np.int64(b) & zy_mask)
        acc += np.conj(psi[b ^ x_mask]) * sign * psi[b]
    return acc


@_jit
def expval_state(psi, ztable, gcoeffs, gx, gzy, gphase):
    val = 0.0
    if ztable.shape[0] > 0:
        for b in range(psi.shape[0]):
            a = psi[b]
            val += (a.real * a.real + a.imag * a.imag) * ztable[b]
    for t in range(gcoeffs.shape[0]):
        raw = pauli_expval_complex(psi, gx[t], gzy[t])
        val += gcoeffs[t] * (raw * gphase[t]).real
    return val


@_jit
def _loss_into(psi, theta, n_qubits, kinds, q0, q1, slot_off, slots,
               ztable, gcoeffs, gx, gzy, gphase, scale, offset):
    for i in range(psi.shape[0]):
        psi[i] = 0j
    psi[0] = 1.0 + 0j
    apply_gates(psi, n_qubits, kinds, q0, q1, slot_off, slots, theta)
    return scale * expval_state(psi, ztable, gcoeffs, gx, gzy, gphase) + offset


@_jit
def loss_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
              ztable, gcoeffs, gx, gzy, gphase, scale, offset):
    psi = np.empty(1 << n_qubits, dtype=np.complex128)
    return _loss_into(psi, theta, n_qubits, kinds, q0, q1, slot_off, slots,
                      ztable, gcoeffs, gx, gzy, gphase, scale, offset)


@_jit
def _grad_into(psi, work, theta, n_qubits, kinds, q0, q1, slot_off, slots,
               ztable, gcoeffs, gx, gzy, gphase, scale, offset, out):
    half_pi = 0.5 * math.pi
    for i in range(theta.shape[0]):
        work[i] = theta[i] + half_pi
        lp = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                        ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        work[i] = theta[i] - half_pi
        lm = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                        ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        work[i] = theta[i]
        out[i] = 0.5 * (lp - lm)


@_jit
def grad_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
              ztable, gcoeffs, gx, gzy, gphase, scale, offset, out):
    psi = np.empty(1 << n_qubits, dtype=np.complex128)
    work = theta.copy()
    _grad_into(psi, work, theta, n_qubits, kinds, q0, q1, slot_off, slots,
               ztable, gcoeffs, gx, gzy, gphase, scale, offset, out)


@_jit
def hess_eval(theta, n_qubits, kinds, q0, q1, slot_off, slots,
              ztable, gcoeffs, gx, gzy, gphase, scale, offset, out):
    p = theta.shape[0]
    half_pi = 0.5 * math.pi
    psi = np.empty(1 << n_qubits, dtype=np.complex128)
    work = theta.copy()
    l0 = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                    ztable, gcoeffs, gx, gzy, gphase, scale, offset)
    for i in range(p):
        work[i] = theta[i] + math.pi
        lp = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                        ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        work[i] = theta[i] - math.pi
        lm = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                        ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        work[i] = theta[i]
        out[i, i] = 0.25 * (lp - 2.0 * l0 + lm)
        for j in range(i + 1, p):
            work[i] = theta[i] + half_pi
            work[j] = theta[j] + half_pi
            lpp = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                             ztable, gcoeffs, gx, gzy, gphase, scale, offset)
            work[j] = theta[j] - half_pi
            lpm = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                             ztable, gcoeffs, gx, gzy, gphase, scale, offset)
            work[i] = theta[i] - half_pi
            lmm = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                             ztable, gcoeffs, gx, gzy, gphase, scale, offset)
            work[j] = theta[j] + half_pi
            lmp = _loss_into(psi, work, n_qubits, kinds, q0, q1, slot_off, slots,
                             ztable, gcoeffs, gx, gzy, gphase, scale, offset)
            work[i] = theta[i]
            work[j] = theta[j]
            val = 0.25 * (lpp - lpm - lmp + lmm)
            out[i, j] = val
            out[j, i] = val


@_jit
def run_gd(theta, n_steps, eta, noise, grad_floor, n_qubits,
           kinds, q0, q1, slot_off, slots,
           ztable, gcoeffs, gx, gzy, gphase, scale, offset,
           losses, gnorms):
    p = theta.shape[0]
    psi = np.empty(1 << n_qubits, dtype=np.complex128)
    work = theta.copy()
    grad = np.empty(p, dtype=np.float64)
    use_noise = noise.shape[0] > 0
    for t in range(n_steps):
        lt = _loss_into(psi, theta, n_qubits, kinds, q0, q1, slot_off, slots,
                        ztable, gcoeffs, gx, gzy, gphase, scale, offset)
        losses[t] = lt
        if not math.isfinite(lt):
            gnorms[t] = np.nan
            return -(t + 1)
        for i in range(p):
            work[i] = theta[i]
        _grad_into(psi, work, theta, n_qubits, kinds, q0, q1, slot_off, slots,
                   ztable, gcoeffs, gx, gzy, gphase, scale, offset, grad)
        acc = 0.0
        for i in range(p):
            acc += grad[i] * grad[i]
        gn = math.sqrt(acc)
        gnorms[t] = gn
        if gn <= grad_floor:
            return t
        if use_noise:
            for i in range(p):
                theta[i] -= eta * (grad[i] + noise[t, i])
        else:
            for i in range(p):
                theta[i] -= eta * grad[i]
    lt = _loss_into(psi, theta, n_qubits, kinds, q0, q1, slot_off, slots,
                    ztable, gcoeffs, gx, gzy, gphase, scale, offset)
    losses[n_steps] = lt
    if not math.isfinite(lt):
        gnorms[n_steps] = np.nan
        return -(n_steps + 1)
    for i in range(p):
        work[i] = theta[i]
    _grad_into(psi, work, theta, n_qubits, kinds, q0, q1, slot_off, slots,
               ztable, gcoeffs, gx, gzy, gphase, scale, offset, grad)
    acc = 0.0
    for i in range(p):
        acc += grad[i] * grad[i]
    gnorms[n_steps] = math.sqrt(acc)
    return n_steps
