"""Deterministic seed derivation for experiment runs.

Every run in an experiment owns a private ``numpy.random.Generator`` whose
seed is a pure function of the experiment's ``master_seed`` and the run's
stable coordinates (sweep arm, initial-point index, repeat index).  Seeds are
produced with the splitmix64 finalizer, so appending sweep values, initial
points, or repeats never perturbs the seeds of runs that already existed.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One splitmix64 output step for a 64-bit ``state``."""
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(master_seed: int, *indices: int) -> int:
    """Fold ``indices`` into ``master_seed``, one splitmix64 round each.

    The fold is order-sensitive: ``mix_seed(m, a, b) != mix_seed(m, b, a)``
    in general.  All values are taken modulo 2**64.
    """
    state = master_seed & _MASK64
    for index in indices:
        state = splitmix64(state ^ ((index + 1) & _MASK64))
    return state


def run_rng(master_seed: int, *indices: int) -> np.random.Generator:
    """Private generator for the run at the given stable coordinates."""
    return np.random.default_rng(mix_seed(master_seed, *indices))
