"""Planning in the modified belief MDP over basis-coefficient vectors.

A belief b is represented by the r coefficients expressing its test-
probability row in the spanner basis.  One (action, signal) step maps
coefficients to coefficients linearly (up to a probability rescale), so
the planner discretizes the coefficient cube [-2, 2]^r with mesh
eps_tilde = epsilon / r, builds the induced finite MDP, and value-iterates.
"""

import hashlib
import json
import logging
import math
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import grid as gridmod
from .decomposition import SpannerBasis, discover_basis, improve_to_spanner, solve_coefficients
from .errors import StateCapExceededError, ValidationError
from .model import PomdpModel, Signal, to_json
from .automaton import from_pomdp

logger = logging.getLogger("psrplan")

P_MIN = 1e-9
COEFF_BOUND = 2.0
DEFAULT_STATE_CAP = 2_000_000
# absorbs float noise around exact half-cells so ties still go toward -inf
TIE_NUDGE = 1e-9


@dataclass
class SignalDynamics:
    v: np.ndarray  # (A, Z, r): P(z | basis state i, a)
    W: np.ndarray  # (A, Z, r, r): P((a,z) followed by core test j | basis state i)
    rho: np.ndarray  # (A, r): expected one-step reward from basis state i
    n_rewards: int = 1  # reward values per observation, for Signal -> z index


def precompute_dynamics(model: PomdpModel, spanner: SpannerBasis) -> SignalDynamics:
    """One-step signal probabilities, test extensions and rewards per basis state."""
    dec = spanner.decomposition
    r = dec.rank
    basis = dec.basis_states
    U = dec.state_test_matrix
    ma = from_pomdp(model)
    na, nz = model.n_actions, model.n_signals
    v = np.zeros((na, nz, r))
    W = np.zeros((na, nz, r, r))
    nr = model.n_rewards
    for a in range(na):
        for o in range(model.n_observations):
            for rr in range(nr):
                z = o * nr + rr
                ext = ma.mu[(a, o, rr)] @ U  # (n, r): P((a,z)∘t_j | s)
                W[a, z] = ext[basis, :]
                v[a, z] = ext[basis, 0]  # extension of the empty test
    signal_rewards = np.tile(model.reward_values, model.n_observations)
    rho = np.einsum("azi,z->ai", v, signal_rewards)
    return SignalDynamics(v=v, W=W, rho=rho, n_rewards=nr)


def step_coefficients(dyn: SignalDynamics, spanner: SpannerBasis, alpha, a, sig):
    """One (action, signal) step on a coefficient vector.

    Returns (p, beta): the signal probability under the linear belief
    extension (clipped to [0,1]) and the clamped successor coefficients,
    or (p, None) when the branch carries no usable probability.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if isinstance(sig, Signal):
        z = sig.observation * dyn.n_rewards + sig.reward
    else:
        z = int(sig)
    p = float(np.clip(alpha @ dyn.v[a, z], 0.0, 1.0))
    if p <= P_MIN:
        return p, None
    q = (alpha @ dyn.W[a, z]) / p
    beta, _ = solve_coefficients(spanner.decomposition, q)
    return p, np.clip(beta, -COEFF_BOUND, COEFF_BOUND)


def round_to_grid(alpha, mesh: float) -> np.ndarray:
    """Nearest lattice multiple of mesh, ties toward -inf, clamped to [-2, 2]."""
    alpha = np.asarray(alpha, dtype=np.float64)
    m_max = lattice_radius(mesh)
    m = np.ceil(alpha / mesh - 0.5 - TIE_NUDGE).astype(np.int64)
    return np.clip(m, -m_max, m_max)


def lattice_radius(mesh: float) -> int:
    """Largest integer m with m * mesh <= 2, robust to float division."""
    return int(math.floor(2.0 / mesh + 1e-9))


def belief_coefficients(spanner: SpannerBasis, b: np.ndarray) -> np.ndarray:
    """Coefficients of an arbitrary belief in the spanner basis (clamped)."""
    dec = spanner.decomposition
    target = np.asarray(b, dtype=np.float64) @ dec.state_test_matrix
    alpha, _ = solve_coefficients(dec, target)
    return np.clip(alpha, -COEFF_BOUND, COEFF_BOUND)


def build_grid(
    model: PomdpModel,
    spanner: SpannerBasis,
    dyn: SignalDynamics,
    epsilon: float,
    mode: str = "reachable",
    state_cap: int = DEFAULT_STATE_CAP,
) -> gridmod.GridMdp:
    """Discretize the coefficient space with mesh epsilon / r.

    "reachable" grows the closure from the initial belief's grid state;
    "full" materializes every lattice point in [-2, 2]^r.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError(f"epsilon {epsilon} outside (0, 1]")
    if mode not in ("reachable", "full"):
        raise ValidationError(f"unknown grid mode '{mode}'")
    dec = spanner.decomposition
    r = dec.rank
    mesh = epsilon / r
    m_max = lattice_radius(mesh)
    side = 2 * m_max + 1

    alpha0 = belief_coefficients(spanner, model.initial_belief)
    g0 = tuple(round_to_grid(alpha0, mesh))

    diagnostics = {
        "mode": mode,
        "mMax": m_max,
        "clampEvents": 0,
        "maxClampDrift": 0.0,
        "rewardClamps": 0,
        "deadEnds": 0,
    }

    index = {}
    coords_list = []

    def intern(coords):
        sid = index.get(coords)
        if sid is None:
            sid = len(coords_list)
            if sid >= state_cap:
                raise StateCapExceededError(
                    f"grid exceeded the state cap of {state_cap}; "
                    "raise --state-cap or use a larger epsilon"
                )
            index[coords] = sid
            coords_list.append(coords)
        return sid

    if mode == "full":
        if side**r > state_cap:
            raise StateCapExceededError(
                f"full lattice has {side}^{r} states, above the cap of "
                f"{state_cap}; raise --state-cap or use a larger epsilon"
            )
        for coords in np.ndindex(*([side] * r)):
            intern(tuple(int(c) - m_max for c in coords))

    intern(g0)
    queue = deque(range(len(coords_list)))
    transitions = []
    rewards = []
    na, nz = model.n_actions, model.n_signals
    MT = dec.M.T

    processed = 0
    while queue:
        sid = queue.popleft()
        if sid != processed:
            raise RuntimeError("expansion order lost")  # queue is FIFO over new ids
        processed += 1
        alpha = np.array(coords_list[sid], dtype=np.float64) * mesh
        row_t = []
        row_r = []
        before = len(coords_list)
        for a in range(na):
            p_vec = np.clip(dyn.v[a] @ alpha, 0.0, 1.0)  # (Z,)
            keep = np.nonzero(p_vec > P_MIN)[0]
            acc = {}
            if keep.size:
                q = np.einsum("i,zij->zj", alpha, dyn.W[a][keep]) / p_vec[keep, None]
                betas = np.linalg.solve(MT, q.T).T
                drift = float(np.max(np.abs(betas))) - COEFF_BOUND
                if drift > 1e-12:
                    diagnostics["clampEvents"] += 1
                    diagnostics["maxClampDrift"] = max(
                        diagnostics["maxClampDrift"], drift
                    )
                    betas = np.clip(betas, -COEFF_BOUND, COEFF_BOUND)
                coords = np.ceil(betas / mesh - 0.5 - TIE_NUDGE).astype(np.int64)
                np.clip(coords, -m_max, m_max, out=coords)
                for k, z in enumerate(keep):
                    succ = intern(tuple(int(c) for c in coords[k]))
                    acc[succ] = acc.get(succ, 0.0) + float(p_vec[z])
            total = sum(acc.values())
            if total <= P_MIN:
                acc = {sid: 1.0}
                diagnostics["deadEnds"] += 1
            else:
                acc = {k: p / total for k, p in acc.items()}
            row_t.append(sorted(acc.items()))
            rew = float(alpha @ dyn.rho[a])
            if rew < 0.0 or rew > 1.0:
                diagnostics["rewardClamps"] += 1
                rew = min(max(rew, 0.0), 1.0)
            row_r.append(rew)
        transitions.append(row_t)
        rewards.append(row_r)
        for sid_new in range(before, len(coords_list)):
            queue.append(sid_new)

    return gridmod.grid_from_tables(
        mesh=mesh,
        coords=coords_list,
        transitions=transitions,
        rewards=np.array(rewards),
        discount=model.discount,
        initial_state=index[g0],
        diagnostics=diagnostics,
    )


def plan(
    model: PomdpModel,
    epsilon: float = 0.1,
    vi_tol: float = 1e-4,
    mode: str = "reachable",
    state_cap: int = DEFAULT_STATE_CAP,
    dyn: SignalDynamics = None,
    spanner: SpannerBasis = None,
) -> gridmod.PlanResult:
    """Full pipeline: basis discovery, spanner, dynamics, grid, value iteration."""
    timings = {}
    t0 = time.perf_counter()
    if spanner is None:
        dec = discover_basis(model)
        timings["discoverBasis"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        spanner = improve_to_spanner(model, dec)
        timings["improveToSpanner"] = time.perf_counter() - t0
        t0 = time.perf_counter()
    if dyn is None:
        dyn = precompute_dynamics(model, spanner)
        timings["precomputeDynamics"] = time.perf_counter() - t0
        t0 = time.perf_counter()
    grid = build_grid(model, spanner, dyn, epsilon, mode=mode, state_cap=state_cap)
    timings["buildGrid"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    result = gridmod.solve(grid, vi_tol)
    timings["solve"] = time.perf_counter() - t0

    dec = spanner.decomposition
    result.metadata.update(
        {
            "rank": dec.rank,
            "epsilon": epsilon,
            "viTol": vi_tol,
            "gridMode": mode,
            "stageSeconds": timings,
            "diagnostics": grid.diagnostics,
            "swapCount": spanner.swap_count,
        }
    )
    result.grid = grid
    result.spanner = spanner
    result.dynamics = dyn
    return result


def act(spanner: SpannerBasis, plan_result: gridmod.PlanResult, b) -> int:
    """Map a live belief to the planned action via its rounded coefficients."""
    grid = plan_result.grid
    alpha = belief_coefficients(spanner, b)
    coords = tuple(int(c) for c in round_to_grid(alpha, grid.mesh))
    sid = grid.state_index().get(coords)
    if sid is None:
        deltas = np.abs(grid.coords - np.array(coords)).sum(axis=1)
        sid = int(np.argmin(deltas))
        _log_fallback(grid, coords, tuple(int(c) for c in grid.coords[sid]))
    return int(plan_result.policy[sid])


def _log_fallback(grid, coords, nearest):
    """First off-grid fallback warns; later ones only count (expected when
    evaluating the policy on beliefs outside the expanded closure)."""
    count = grid.diagnostics.get("actFallbacks", 0)
    grid.diagnostics["actFallbacks"] = count + 1
    log = logger.warning if count == 0 else logger.debug
    log(
        "belief rounds to unexpanded grid point %s; using nearest expanded "
        "state %s",
        coords,
        nearest,
    )


def dynamics_cache_key(model: PomdpModel, spanner: SpannerBasis) -> str:
    """Content hash tying a dynamics cache file to its model and spanner."""
    from .decomposition import to_json_dict as span_json

    payload = to_json(model) + json.dumps(span_json(spanner), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def save_dynamics(path, model, spanner, dyn: SignalDynamics):
    np.savez_compressed(
        path,
        key=np.frombuffer(
            dynamics_cache_key(model, spanner).encode(), dtype=np.uint8
        ),
        v=dyn.v,
        W=dyn.W,
        rho=dyn.rho,
    )


def load_dynamics(path, model, spanner) -> SignalDynamics:
    """Load cached dynamics; returns None when the key does not match."""
    try:
        data = np.load(path)
    except (OSError, ValueError):
        return None
    key = bytes(data["key"]).decode()
    if key != dynamics_cache_key(model, spanner):
        return None
    return SignalDynamics(
        v=data["v"], W=data["W"], rho=data["rho"], n_rewards=model.n_rewards
    )
