"""Benchmark the Bellman-sweep kernel: numba JIT vs pure-numpy fallback.

Builds synthetic sparse MDPs in the flat CSR layout used by the planner and
times full value-iteration sweeps through both backends.  Run directly:

    python3 benchmarks/bench_value_iteration.py --states 2000 20000 200000

The jitted path is warmed up once before timing so compilation cost is
reported separately and excluded from the per-sweep numbers.
"""

import argparse
import time

import numpy as np

from psrplan.kernels import (
    HAVE_NUMBA,
    bellman_sweep_numba,
    bellman_sweep_numpy,
    nnz_rows,
)


def synthetic_mdp(n_states, n_actions, n_succ, gamma, seed):
    """Random CSR MDP: every (state, action) row has n_succ successors."""
    rng = np.random.default_rng(seed)
    n_rows = n_states * n_actions
    succ = rng.integers(0, n_states, size=n_rows * n_succ).astype(np.int64)
    prob = rng.random(n_rows * n_succ)
    prob = prob.reshape(n_rows, n_succ)
    prob /= prob.sum(axis=1, keepdims=True)
    prob = prob.ravel()
    indptr = np.arange(0, n_rows * n_succ + 1, n_succ, dtype=np.int64)
    rewards = rng.random(n_rows)
    return indptr, succ, prob, nnz_rows(indptr), rewards, gamma


def time_sweeps(fn, mdp, n_actions, sweeps):
    indptr, succ, prob, nnz_row, rewards, gamma = mdp
    values = np.zeros(rewards.shape[0] // n_actions)
    t0 = time.perf_counter()
    for _ in range(sweeps):
        values, policy = fn(
            indptr, succ, prob, nnz_row, rewards, gamma, values, n_actions
        )
    elapsed = time.perf_counter() - t0
    return elapsed / sweeps, values


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, nargs="+",
                    default=[2_000, 20_000, 200_000])
    ap.add_argument("--actions", type=int, default=4)
    ap.add_argument("--succ", type=int, default=8,
                    help="successors per (state, action) row")
    ap.add_argument("--sweeps", type=int, default=50)
    ap.add_argument("--gamma", type=float, default=0.95)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not HAVE_NUMBA:
        print("numba unavailable: only the numpy backend will be timed")

    # warm up / compile the jitted kernel on a tiny instance
    tiny = synthetic_mdp(16, args.actions, 2, args.gamma, args.seed)
    t0 = time.perf_counter()
    time_sweeps(bellman_sweep_numba, tiny, args.actions, 1)
    print(f"jit warmup: {time.perf_counter() - t0:.2f}s\n")

    header = (
        f"{'states':>9} {'rows':>10} {'nnz':>11} "
        f"{'numpy ms':>10} {'numba ms':>10} {'speedup':>8}"
    )
    print(header)
    print("-" * len(header))
    for n_states in args.states:
        mdp = synthetic_mdp(
            n_states, args.actions, args.succ, args.gamma, args.seed
        )
        t_np, v_np = time_sweeps(
            bellman_sweep_numpy, mdp, args.actions, args.sweeps
        )
        t_nb, v_nb = time_sweeps(
            bellman_sweep_numba, mdp, args.actions, args.sweeps
        )
        if not np.allclose(v_np, v_nb, atol=1e-12):
            raise AssertionError("backends disagree on sweep results")
        n_rows = n_states * args.actions
        print(
            f"{n_states:>9,} {n_rows:>10,} {n_rows * args.succ:>11,} "
            f"{t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} "
            f"{t_np / t_nb:>7.1f}x"
        )


if __name__ == "__main__":
    main()
