"""Classical delta-discretized belief-simplex planner.

Grid states are lattice beliefs (m_1 δ, …, m_n δ) with Σ m_i = 1/δ.  One
step applies the exact Bayes filter per signal and rounds the posterior
back onto the lattice; the induced finite MDP is solved with the shared
value-iteration engine.  This is the guarantee-checking baseline the
rank-r planner is compared against.
"""

import logging
import time
from collections import deque

import numpy as np

from . import grid as gridmod
from .errors import StateCapExceededError, ValidationError
from .model import PomdpModel, belief_update, expected_reward_matrix

logger = logging.getLogger("psrplan")

P_MIN = 1e-9
DEFAULT_STATE_CAP = 2_000_000


def resolution(delta: float) -> int:
    """1/delta as an exact integer; rejects meshes that do not divide 1."""
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"delta {delta} outside (0, 1]")
    k = round(1.0 / delta)
    if abs(k * delta - 1.0) > 1e-9:
        raise ValidationError(f"1/delta must be an integer, got 1/{delta}")
    return int(k)


def simplex_round(b: np.ndarray, delta: float) -> np.ndarray:
    """Nearest lattice belief by the largest-remainder method (deterministic).

    Floors every scaled coordinate, then hands the leftover lattice units
    to the coordinates with the largest remainders (lowest index first on
    ties), so the result stays a probability vector on the lattice.
    """
    k = resolution(delta)
    scaled = np.asarray(b, dtype=np.float64) * k
    floors = np.floor(scaled + 1e-12).astype(np.int64)
    leftover = k - int(floors.sum())
    if leftover > 0:
        remainders = scaled - floors
        order = np.argsort(-remainders, kind="stable")
        floors[order[:leftover]] += 1
    return floors


def build_delta_grid(
    model: PomdpModel, delta: float, state_cap: int = DEFAULT_STATE_CAP
) -> gridmod.GridMdp:
    """Reachable closure of the rounded belief walk from the initial belief."""
    k = resolution(delta)
    r_sa = expected_reward_matrix(model)
    index = {}
    coords_list = []

    def intern(coords):
        sid = index.get(coords)
        if sid is None:
            sid = len(coords_list)
            if sid >= state_cap:
                raise StateCapExceededError(
                    f"simplex grid exceeded the state cap of {state_cap}; "
                    "raise --state-cap or use a larger delta"
                )
            index[coords] = sid
            coords_list.append(coords)
        return sid

    g0 = intern(tuple(int(c) for c in simplex_round(model.initial_belief, delta)))
    queue = deque([g0])
    transitions = []
    rewards = []
    processed = 0
    while queue:
        sid = queue.popleft()
        assert sid == processed
        processed += 1
        belief = np.array(coords_list[sid], dtype=np.float64) * delta
        row_t = []
        before = len(coords_list)
        for a in range(model.n_actions):
            acc = {}
            for z in range(model.n_signals):
                p, post = belief_update(model, belief, a, z)
                if p <= P_MIN or post is None:
                    continue
                succ = intern(tuple(int(c) for c in simplex_round(post, delta)))
                acc[succ] = acc.get(succ, 0.0) + p
            total = sum(acc.values())
            if total <= P_MIN:
                acc = {sid: 1.0}
            else:
                acc = {s: p / total for s, p in acc.items()}
            row_t.append(sorted(acc.items()))
        transitions.append(row_t)
        rewards.append(belief @ r_sa)
        for new_sid in range(before, len(coords_list)):
            queue.append(new_sid)

    return gridmod.grid_from_tables(
        mesh=delta,
        coords=coords_list,
        transitions=transitions,
        rewards=np.array(rewards),
        discount=model.discount,
        initial_state=g0,
        diagnostics={"mode": "simplex", "resolution": k},
    )


def solve_baseline(grid: gridmod.GridMdp, vi_tol: float = 1e-4) -> gridmod.PlanResult:
    """Value-iterate the simplex grid (shared engine and result shape)."""
    result = gridmod.solve(grid, vi_tol)
    result.grid = grid
    return result


def plan_baseline(
    model: PomdpModel,
    delta: float = 0.05,
    vi_tol: float = 1e-4,
    state_cap: int = DEFAULT_STATE_CAP,
) -> gridmod.PlanResult:
    timings = {}
    t0 = time.perf_counter()
    grid = build_delta_grid(model, delta, state_cap=state_cap)
    timings["buildGrid"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    result = solve_baseline(grid, vi_tol)
    timings["solve"] = time.perf_counter() - t0
    result.metadata.update(
        {
            "delta": delta,
            "viTol": vi_tol,
            "stageSeconds": timings,
            "diagnostics": grid.diagnostics,
        }
    )
    return result


def act_baseline(plan_result: gridmod.PlanResult, b) -> int:
    """Planned action for a live belief via simplex rounding."""
    from .planner import _log_fallback

    grid = plan_result.grid
    coords = tuple(int(c) for c in simplex_round(np.asarray(b), grid.mesh))
    sid = grid.state_index().get(coords)
    if sid is None:
        deltas = np.abs(grid.coords - np.array(coords)).sum(axis=1)
        sid = int(np.argmin(deltas))
        _log_fallback(grid, coords, tuple(int(c) for c in grid.coords[sid]))
    return int(plan_result.policy[sid])
