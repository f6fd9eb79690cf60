"""Dense statevector simulation of parameterized circuits.

States are little-endian: qubit ``q`` is bit ``q`` of the basis index, so
``|q1 q0> = |01>`` means qubit 0 is excited.  Supported gates are the
single-qubit rotations RX, RY, RZ (half-angle convention, generator is half
the Pauli), the composite ROT(alpha, beta, gamma) = RZ(gamma) RY(beta)
RZ(alpha) with alpha applied first, and CNOT.

The qubit count is capped at 14: dense amplitude vectors double per qubit,
and this package targets small-instance landscape studies, not large-scale
simulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from types import SimpleNamespace

import numpy as np

from .backend import kernels
from .errors import CapacityError, DimensionError, DomainError

MAX_QUBITS = 14

_GATE_CODES = {"RX": 0, "RY": 1, "RZ": 2, "ROT": 3, "CNOT": 4}
_N_SLOTS = {"RX": 1, "RY": 1, "RZ": 1, "ROT": 3, "CNOT": 0}
_N_QUBITS = {"RX": 1, "RY": 1, "RZ": 1, "ROT": 1, "CNOT": 2}


@dataclass(frozen=True)
class Statevector:
    """Normalized dense amplitude vector over ``2**n_qubits`` basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise CapacityError(
                f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_qubits,):
            raise DimensionError(
                f"amplitude vector has shape {amps.shape}, expected "
                f"({1 << self.n_qubits},)")
        norm_sq = float(np.sum(amps.real ** 2 + amps.imag ** 2))
        if abs(norm_sq - 1.0) > 1e-10:
            raise DomainError(f"state norm^2 is {norm_sq!r}, expected 1")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def probability(self, basis_index: int) -> float:
        a = self.amplitudes[basis_index]
        return float(a.real ** 2 + a.imag ** 2)


def zero_state(n_qubits: int) -> Statevector:
    """The all-zeros computational basis state."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


@dataclass(frozen=True)
class GateSpec:
    """One gate: kind, acted-on qubits, and parameter slot indices."""

    kind: str
    qubits: tuple[int, ...]
    slots: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in _GATE_CODES:
            raise DomainError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != _N_QUBITS[self.kind]:
            raise DimensionError(
                f"{self.kind} acts on {_N_QUBITS[self.kind]} qubit(s), "
                f"got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise DomainError(f"{self.kind} qubits must be distinct: {self.qubits}")
        if len(self.slots) != _N_SLOTS[self.kind]:
            raise DimensionError(
                f"{self.kind} takes {_N_SLOTS[self.kind]} parameter slot(s), "
                f"got {self.slots}")


@dataclass(frozen=True)
class AnsatzLayout:
    """Gate sequence with a fixed parameter count.

    ``n_layers`` is metadata recorded by layout builders; it drives the
    per-layer depolarizing transform and stays ``None`` for hand-assembled
    layouts.
    """

    n_qubits: int
    gates: tuple[GateSpec, ...]
    n_params: int
    n_layers: int | None = None

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise CapacityError(
                f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        if self.n_params < 1:
            raise DomainError(f"n_params must be >= 1, got {self.n_params}")
        for gate in self.gates:
            for q in gate.qubits:
                if not 0 <= q < self.n_qubits:
                    raise DimensionError(
                        f"gate {gate.kind} addresses qubit {q}, "
                        f"layout has {self.n_qubits}")
            for s in gate.slots:
                if not 0 <= s < self.n_params:
                    raise DimensionError(
                        f"gate {gate.kind} uses slot {s}, layout has "
                        f"{self.n_params} parameters")

    @cached_property
    def _compiled(self) -> SimpleNamespace:
        n = len(self.gates)
        kinds = np.zeros(n, dtype=np.int8)
        q0 = np.zeros(n, dtype=np.int32)
        q1 = np.zeros(n, dtype=np.int32)
        slot_off = np.zeros(n, dtype=np.int32)
        slots: list[int] = []
        for i, gate in enumerate(self.gates):
            kinds[i] = _GATE_CODES[gate.kind]
            q0[i] = gate.qubits[0]
            q1[i] = gate.qubits[1] if len(gate.qubits) > 1 else -1
            slot_off[i] = len(slots)
            slots.extend(gate.slots)
        return SimpleNamespace(kinds=kinds, q0=q0, q1=q1, slot_off=slot_off,
                               slots=np.asarray(slots, dtype=np.int32))


def strongly_entangling_layout(n_qubits: int, n_layers: int) -> AnsatzLayout:
    """Layers of per-qubit ROT gates followed by a CNOT ring.

    Layer ``l`` gives qubit ``q`` the three consecutive parameter slots
    starting at ``3 * (l * n_qubits + q)``, then entangles with CNOTs
    ``q -> (q+1) mod n_qubits`` for every qubit in order.  Total parameter
    count is ``3 * n_qubits * n_layers``.
    """
    if n_qubits < 2:
        raise DomainError(
            f"entangling layout needs n_qubits >= 2, got {n_qubits}")
    if n_qubits > MAX_QUBITS:
        raise CapacityError(
            f"n_qubits must be <= {MAX_QUBITS}, got {n_qubits}")
    if n_layers < 1:
        raise DomainError(f"n_layers must be >= 1, got {n_layers}")
    gates: list[GateSpec] = []
    for layer in range(n_layers):
        for q in range(n_qubits):
            base = 3 * (layer * n_qubits + q)
            gates.append(GateSpec("ROT", (q,), (base, base + 1, base + 2)))
        for q in range(n_qubits):
            gates.append(GateSpec("CNOT", (q, (q + 1) % n_qubits)))
    return AnsatzLayout(n_qubits, tuple(gates), 3 * n_qubits * n_layers,
                        n_layers=n_layers)


def as_theta(values, n_params: int) -> np.ndarray:
    """Validate and convert a parameter vector to a float64 array."""
    theta = np.asarray(values, dtype=np.float64)
    if theta.shape != (n_params,):
        raise DimensionError(
            f"parameter vector has shape {theta.shape}, expected ({n_params},)")
    if not np.all(np.isfinite(theta)):
        raise DomainError("parameter vector has non-finite entries")
    return theta


def apply_circuit(layout: AnsatzLayout, theta, state: Statevector) -> Statevector:
    """Run the layout on ``state`` and return the output state."""
    if state.n_qubits != layout.n_qubits:
        raise DimensionError(
            f"state has {state.n_qubits} qubits, layout has {layout.n_qubits}")
    theta = as_theta(theta, layout.n_params)
    comp = layout._compiled
    amps = state.amplitudes.copy()
    kernels.apply_gates(amps, layout.n_qubits, comp.kinds, comp.q0, comp.q1,
                        comp.slot_off, comp.slots, theta)
    return Statevector(layout.n_qubits, amps)
