"""Observables as real-weighted sums of Pauli words.

A :class:`PauliSum` stores terms as (coefficient, axes-word) pairs, e.g.
``1.0 * "ZIII"``.  Axes words are little-endian with respect to position:
character ``i`` of the word acts on qubit ``i``.  Terms compile lazily to
bit-mask arrays consumed by the numeric kernels:

* terms whose word contains only I and Z are diagonal in the computational
  basis and collapse into one eigenvalue table ``E(b)`` indexed by basis
  state, so they can be evaluated (and sampled) jointly;
* every other term keeps its own masks and is evaluated separately.

Shot sampling mirrors how the observable would be measured on hardware:
one multinomial draw over basis outcomes covers the whole diagonal group,
and each remaining term is measured alone with a binomial draw over its
two eigenvalue outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from types import SimpleNamespace
from typing import Iterable

import numpy as np

from .backend import kernels
from .errors import CapacityError, DimensionError, DomainError, ParseError, VqaLabError

MAX_QUBITS = 14
MAX_EXACT_NORM_QUBITS = 12

_AXES = frozenset("IXYZ")


@dataclass(frozen=True)
class PauliTerm:
    """One real-weighted Pauli word."""

    coefficient: float
    axes: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ParseError(f"coefficient {self.coefficient!r} is not finite")
        if not self.axes or not set(self.axes) <= _AXES:
            raise ParseError(f"axes word {self.axes!r} must be nonempty over I, X, Y, Z")

    @property
    def is_diagonal(self) -> bool:
        """True when the word contains only I and Z."""
        return not (set(self.axes) & {"X", "Y"})

    def masks(self) -> tuple[int, int, complex]:
        """(x_mask, zy_mask, phase) encoding for the kernels.

        ``x_mask`` marks X and Y positions (bit flips), ``zy_mask`` marks Z
        and Y positions (sign flips), ``phase`` is i**(count of Y).
        """
        x_mask = 0
        zy_mask = 0
        y_count = 0
        for q, ax in enumerate(self.axes):
            if ax in ("X", "Y"):
                x_mask |= 1 << q
            if ax in ("Z", "Y"):
                zy_mask |= 1 << q
            if ax == "Y":
                y_count += 1
        return x_mask, zy_mask, 1j ** (y_count % 4)


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of distinct Pauli words on a fixed qubit count."""

    n_qubits: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise CapacityError(
                f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        seen = set()
        for term in self.terms:
            if len(term.axes) != self.n_qubits:
                raise DimensionError(
                    f"axes word {term.axes!r} has length {len(term.axes)}, "
                    f"expected {self.n_qubits}")
            if term.axes in seen:
                raise DomainError(f"duplicate axes word {term.axes!r}")
            seen.add(term.axes)

    @property
    def one_norm(self) -> float:
        """Sum of absolute coefficients; upper-bounds the operator norm."""
        return float(sum(abs(t.coefficient) for t in self.terms))

    @cached_property
    def _compiled(self) -> SimpleNamespace:
        """Kernel-ready arrays; diagonal terms folded into one table."""
        diag = [t for t in self.terms if t.is_diagonal]
        general = [t for t in self.terms if not t.is_diagonal]
        size = 1 << self.n_qubits
        if diag:
            b = np.arange(size, dtype=np.int64)
            ztable = np.zeros(size, dtype=np.float64)
            for term in diag:
                _, zy_mask, _ = term.masks()
                signs = 1.0 - 2.0 * (np.bitwise_count(b & np.int64(zy_mask)) & 1)
                ztable += term.coefficient * signs
        else:
            ztable = np.zeros(0, dtype=np.float64)
        gcoeffs = np.array([t.coefficient for t in general], dtype=np.float64)
        gx = np.zeros(len(general), dtype=np.int64)
        gzy = np.zeros(len(general), dtype=np.int64)
        gphase = np.zeros(len(general), dtype=np.complex128)
        for i, term in enumerate(general):
            x_mask, zy_mask, phase = term.masks()
            gx[i] = x_mask
            gzy[i] = zy_mask
            gphase[i] = phase
        return SimpleNamespace(ztable=ztable, gcoeffs=gcoeffs, gx=gx, gzy=gzy,
                               gphase=gphase, diag_terms=tuple(diag),
                               general_terms=tuple(general))

    @property
    def trace_mean(self) -> float:
        """Tr(H) / 2**n_qubits: the coefficient sum of all-identity words."""
        return float(sum(t.coefficient for t in self.terms
                         if set(t.axes) == {"I"}))


def pauli_sum(n_qubits: int, terms: Iterable[tuple[float, str]]) -> PauliSum:
    """Build a :class:`PauliSum`, merging repeated axes words by summing."""
    order: list[str] = []
    merged: dict[str, float] = {}
    for coeff, axes in terms:
        if axes not in merged:
            merged[axes] = 0.0
            order.append(axes)
        merged[axes] += float(coeff)
    return PauliSum(n_qubits, tuple(PauliTerm(merged[a], a) for a in order))


def sum_z(n_qubits: int) -> PauliSum:
    """The built-in observable: sum of single-qubit Z over all qubits."""
    terms = []
    for q in range(n_qubits):
        axes = "".join("Z" if i == q else "I" for i in range(n_qubits))
        terms.append((1.0, axes))
    return pauli_sum(n_qubits, terms)


def parse_pauli_sum(text: str, n_qubits: int) -> PauliSum:
    """Parse ``<coefficient> <axes-word>`` lines into a :class:`PauliSum`.

    Blank lines are skipped and ``#`` starts a comment anywhere on a line.
    Repeated axes words merge by summing coefficients, keeping the position
    of first occurrence.  Errors carry 1-based line numbers.
    """
    entries: list[tuple[float, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(
                f"line {lineno}: expected '<coefficient> <axes-word>', got {raw!r}")
        try:
            coeff = float(fields[0])
        except ValueError:
            raise ParseError(
                f"line {lineno}: cannot parse coefficient {fields[0]!r}") from None
        if not np.isfinite(coeff):
            raise ParseError(f"line {lineno}: coefficient must be finite")
        axes = fields[1].upper()
        if not set(axes) <= _AXES:
            raise ParseError(
                f"line {lineno}: axes word {fields[1]!r} has characters outside I, X, Y, Z")
        if len(axes) != n_qubits:
            raise ParseError(
                f"line {lineno}: axes word length {len(axes)} does not match "
                f"n_qubits={n_qubits}")
        entries.append((coeff, axes))
    if not entries:
        raise ParseError("no terms found")
    return pauli_sum(n_qubits, entries)


def load_pauli_sum(path, n_qubits: int) -> PauliSum:
    """Read a term file (see :func:`parse_pauli_sum`) from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_pauli_sum(fh.read(), n_qubits)


def _dense_matrix(h: PauliSum) -> np.ndarray:
    """Dense 2**n x 2**n matrix of the observable (test/oracle scale only)."""
    size = 1 << h.n_qubits
    b = np.arange(size, dtype=np.int64)
    mat = np.zeros((size, size), dtype=np.complex128)
    for term in h.terms:
        x_mask, zy_mask, phase = term.masks()
        signs = 1.0 - 2.0 * (np.bitwise_count(b & np.int64(zy_mask)) & 1)
        mat[b ^ np.int64(x_mask), b] += term.coefficient * phase * signs
    return mat


def _eigenvalue_range(h: PauliSum) -> tuple[float, float]:
    comp = h._compiled
    if comp.gcoeffs.shape[0] == 0:
        # diagonal observable, spectrum is the eigenvalue table itself
        table = comp.ztable if comp.ztable.shape[0] else np.zeros(1)
        return float(table.min()), float(table.max())
    eigs = np.linalg.eigvalsh(_dense_matrix(h))
    return float(eigs[0]), float(eigs[-1])


def operator_norm(h: PauliSum, exact: bool) -> float:
    """Largest absolute eigenvalue (exact) or its one-norm upper bound.

    The exact route diagonalizes the observable (dense for non-diagonal
    sums) and is capped at 12 qubits.
    """
    if not exact:
        return h.one_norm
    if h.n_qubits > MAX_EXACT_NORM_QUBITS:
        raise CapacityError(
            f"exact operator norm is capped at {MAX_EXACT_NORM_QUBITS} qubits, "
            f"got {h.n_qubits}")
    lo, hi = _eigenvalue_range(h)
    return max(abs(lo), abs(hi))


def min_eigenvalue(h: PauliSum) -> float:
    """Smallest eigenvalue of the observable (the optimal loss value)."""
    if h.n_qubits > MAX_EXACT_NORM_QUBITS:
        raise CapacityError(
            f"exact eigenvalues are capped at {MAX_EXACT_NORM_QUBITS} qubits, "
            f"got {h.n_qubits}")
    return _eigenvalue_range(h)[0]


def _expectation_raw(h: PauliSum, amplitudes: np.ndarray) -> float:
    """Expectation with the imaginary-part sanity check."""
    comp = h._compiled
    val = 0.0
    if comp.ztable.shape[0] > 0:
        probs = amplitudes.real ** 2 + amplitudes.imag ** 2
        val += float(probs @ comp.ztable)
    imag = 0.0
    for i in range(comp.gcoeffs.shape[0]):
        raw = kernels.pauli_expval_complex(amplitudes, comp.gx[i], comp.gzy[i])
        contrib = comp.gcoeffs[i] * (raw * comp.gphase[i])
        val += contrib.real
        imag += contrib.imag
    if abs(imag) >= 1e-10:
        raise VqaLabError(
            f"expectation developed imaginary part {imag:.3e}; "
            "state or observable is corrupted")
    return val


def expectation(h: PauliSum, state) -> float:
    """Exact expectation of ``h`` in the given state."""
    if state.n_qubits != h.n_qubits:
        raise DimensionError(
            f"state has {state.n_qubits} qubits, observable has {h.n_qubits}")
    return _expectation_raw(h, state.amplitudes)


def _sample_raw(h: PauliSum, amplitudes: np.ndarray, n_shots: int,
                rng: np.random.Generator) -> float:
    comp = h._compiled
    val = 0.0
    if comp.ztable.shape[0] > 0:
        probs = amplitudes.real ** 2 + amplitudes.imag ** 2
        probs = probs / probs.sum()
        counts = rng.multinomial(n_shots, probs)
        val += float(counts @ comp.ztable) / n_shots
    for i in range(comp.gcoeffs.shape[0]):
        raw = kernels.pauli_expval_complex(amplitudes, comp.gx[i], comp.gzy[i])
        mean = (raw * comp.gphase[i]).real
        # single Pauli word: eigenvalues +-1, P(+1) = (1 + <P>) / 2
        p_plus = min(1.0, max(0.0, 0.5 * (1.0 + mean)))
        k = rng.binomial(n_shots, p_plus)
        val += comp.gcoeffs[i] * (2.0 * k / n_shots - 1.0)
    return val


def sample_expectation(h: PauliSum, state, n_shots: int,
                       rng: np.random.Generator) -> float:
    """Unbiased finite-shot estimate of the expectation.

    The diagonal group is measured jointly: one multinomial draw of
    ``n_shots`` basis outcomes scores against the group's eigenvalue table.
    Every non-diagonal term is measured alone with its own ``n_shots``
    budget, as two-outcome (+1/-1) sampling of that word.
    """
    if state.n_qubits != h.n_qubits:
        raise DimensionError(
            f"state has {state.n_qubits} qubits, observable has {h.n_qubits}")
    if n_shots < 1:
        raise DomainError(f"n_shots must be >= 1, got {n_shots}")
    return _sample_raw(h, state.amplitudes, n_shots, rng)


def measurement_groups(h: PauliSum) -> int:
    """Number of separately-measured groups used by shot sampling."""
    comp = h._compiled
    return (1 if comp.ztable.shape[0] > 0 else 0) + comp.gcoeffs.shape[0]
