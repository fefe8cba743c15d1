"""Finite grid MDP over lattice points, plus the shared value-iteration solver.

Both planners (coefficient-lattice and belief-simplex) reduce to this
structure: integer lattice coordinates per state, per-(state, action)
successor distributions in CSR form, and expected immediate rewards.
The Bellman sweeps run through the kernels module, which picks the
compiled or pure-numpy backend.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .kernels import backend, bellman_sweep, nnz_rows

MAX_VI_ITERATIONS = 1_000_000


@dataclass
class GridMdp:
    mesh: float
    coords: np.ndarray  # (N, dim) integer lattice coordinates
    n_actions: int
    rewards: np.ndarray  # (N * n_actions,) row index s * n_actions + a
    indptr: np.ndarray  # CSR over the same flat rows
    succ: np.ndarray
    prob: np.ndarray
    discount: float
    initial_state: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_states(self):
        return self.coords.shape[0]

    def state_index(self):
        """Map lattice coordinate tuple -> state id (built once, cached)."""
        cached = getattr(self, "_index", None)
        if cached is None:
            cached = {tuple(row): i for i, row in enumerate(self.coords)}
            self._index = cached
        return cached


@dataclass
class PlanResult:
    values: np.ndarray
    policy: np.ndarray
    residual: float
    iterations: int
    metadata: dict = field(default_factory=dict)
    # attached by the planning pipelines for policy execution / serialization
    grid: object = None
    spanner: object = None
    dynamics: object = None


def grid_from_tables(
    mesh,
    coords,
    transitions,
    rewards,
    discount,
    initial_state,
    diagnostics=None,
):
    """Assemble a GridMdp from per-state tables.

    transitions[s][a] is a list of (successor id, probability) pairs;
    rewards is an (N, n_actions) array.
    """
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim == 1:
        coords = coords[:, None]
    rewards = np.asarray(rewards, dtype=np.float64)
    n, n_actions = rewards.shape
    indptr = np.zeros(n * n_actions + 1, dtype=np.int64)
    succ_parts, prob_parts = [], []
    row = 0
    for s in range(n):
        for a in range(n_actions):
            pairs = transitions[s][a]
            indptr[row + 1] = indptr[row] + len(pairs)
            if pairs:
                succ_parts.append(np.fromiter((p[0] for p in pairs), dtype=np.int64))
                prob_parts.append(np.fromiter((p[1] for p in pairs), dtype=np.float64))
            row += 1
    succ = np.concatenate(succ_parts) if succ_parts else np.zeros(0, dtype=np.int64)
    prob = np.concatenate(prob_parts) if prob_parts else np.zeros(0, dtype=np.float64)
    return GridMdp(
        mesh=float(mesh),
        coords=coords,
        n_actions=n_actions,
        rewards=rewards.reshape(-1),
        indptr=indptr,
        succ=succ,
        prob=prob,
        discount=float(discount),
        initial_state=int(initial_state),
        diagnostics=dict(diagnostics or {}),
    )


def solve(grid: GridMdp, vi_tol: float = 1e-4) -> PlanResult:
    """Value-iterate until the greedy policy is vi_tol-optimal in the grid MDP.

    Stops when the sweep residual drops below vi_tol * (1 - gamma) / (2 gamma),
    the standard greedy-loss threshold.
    """
    gamma = grid.discount
    threshold = vi_tol * (1.0 - gamma) / (2.0 * gamma)
    values = np.zeros(grid.n_states)
    rows = nnz_rows(grid.indptr)
    policy = np.zeros(grid.n_states, dtype=np.int32)
    residual = np.inf
    for iteration in range(1, MAX_VI_ITERATIONS + 1):
        new_values, policy = bellman_sweep(
            grid.indptr,
            grid.succ,
            grid.prob,
            rows,
            grid.rewards,
            gamma,
            values,
            grid.n_actions,
        )
        residual = float(np.max(np.abs(new_values - values))) if values.size else 0.0
        values = new_values
        if residual <= threshold:
            break
    else:
        raise ConvergenceError(
            f"value iteration still above residual {threshold:.3e} after "
            f"{MAX_VI_ITERATIONS} sweeps"
        )
    return PlanResult(
        values=values,
        policy=policy,
        residual=residual,
        iterations=iteration,
        metadata={
            "gridStates": grid.n_states,
            "mesh": grid.mesh,
            "viThreshold": threshold,
            "backend": backend(),
        },
    )


def plan_to_json_dict(grid: GridMdp, plan: PlanResult) -> dict:
    """Policy/value dump with integer lattice coordinates."""
    return {
        "mesh": grid.mesh,
        "states": grid.coords.tolist(),
        "values": plan.values.tolist(),
        "policy": plan.policy.tolist(),
        "initialState": grid.initial_state,
        "residual": plan.residual,
        "iterations": plan.iterations,
        "metadata": _json_safe(plan.metadata),
    }


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
