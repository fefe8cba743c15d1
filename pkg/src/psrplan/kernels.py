"""Hot numeric kernels: Bellman sweeps over a flat CSR transition table.

The jitted path is used unless numba is unavailable or the environment
variable ``PSRPLAN_NO_NUMBA`` is set to a truthy value, in which case a
vectorized pure-numpy fallback runs instead.  Both paths compute identical
results; ``benchmarks/bench_value_iteration.py`` compares their speed.

Layout: a finite MDP with S states and A actions is stored as
``rewards[s * A + a]`` plus CSR successor arrays ``indptr``, ``succ``,
``prob`` indexed by the same flattened (state, action) row.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    HAVE_NUMBA = False

_DISABLED = os.environ.get("PSRPLAN_NO_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"


def bellman_sweep_numpy(indptr, succ, prob, nnz_row, rewards, gamma, values, n_actions):
    """One Jacobi Bellman sweep, vectorized with bincount segment sums.

    Returns (new value vector, greedy action per state) where the greedy
    action is taken against the *input* values.
    """
    n_rows = rewards.shape[0]
    contrib = prob * values[succ]
    future = np.bincount(nnz_row, weights=contrib, minlength=n_rows)
    q = (rewards + gamma * future).reshape(-1, n_actions)
    return q.max(axis=1), q.argmax(axis=1).astype(np.int32)


if HAVE_NUMBA:

    @njit(cache=False)
    def _bellman_sweep_jit(indptr, succ, prob, rewards, gamma, values, n_actions):
        n_states = rewards.shape[0] // n_actions
        out = np.empty(n_states, dtype=np.float64)
        policy = np.empty(n_states, dtype=np.int32)
        for s in range(n_states):
            best = -np.inf
            best_a = 0
            base = s * n_actions
            for a in range(n_actions):
                row = base + a
                acc = rewards[row]
                for k in range(indptr[row], indptr[row + 1]):
                    acc += gamma * prob[k] * values[succ[k]]
                if acc > best:
                    best = acc
                    best_a = a
            out[s] = best
            policy[s] = best_a
        return out, policy

    def bellman_sweep_numba(indptr, succ, prob, nnz_row, rewards, gamma, values, n_actions):
        return _bellman_sweep_jit(indptr, succ, prob, rewards, gamma, values, n_actions)

else:  # pragma: no cover
    bellman_sweep_numba = bellman_sweep_numpy


bellman_sweep = bellman_sweep_numba if USE_NUMBA else bellman_sweep_numpy


def nnz_rows(indptr):
    """Flat (state, action) row id for every CSR entry (numpy path only)."""
    return np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))
