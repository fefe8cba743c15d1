"""Exact finite-horizon expectimax on the true belief MDP.

Brute-force ground truth for tiny models: V_H*(b) maximizes expected
immediate reward plus discounted continuation over every signal branch,
with V_0*(b) the best immediate reward.  Values are exact up to the
truncation slack gamma^(H+1) / (1 - gamma), which callers must account
for when comparing against infinite-horizon quantities.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import OracleBudgetError
from .model import PomdpModel, belief_update, expected_reward_matrix

MEMO_PRECISION = 1e-9
DEFAULT_NODE_BUDGET = 10_000_000


@dataclass
class OracleConfig:
    horizon: int
    memo_precision: float = MEMO_PRECISION
    node_budget: int = DEFAULT_NODE_BUDGET
    use_memo: bool = True


def truncation_slack(gamma: float, horizon: int) -> float:
    """Largest possible discounted reward beyond the horizon ([0,1] rewards)."""
    return gamma ** (horizon + 1) / (1.0 - gamma)


def horizon_for_slack(gamma: float, slack: float) -> int:
    """Smallest H with truncation slack at most the requested amount."""
    h = 0
    while truncation_slack(gamma, h) > slack:
        h += 1
    return h


class _Expectimax:
    def __init__(self, model: PomdpModel, config: OracleConfig):
        self.model = model
        self.config = config
        self.r_sa = expected_reward_matrix(model)
        self.memo = {}
        self.policy_memo = {}
        self.nodes = 0

    def _key(self, b, depth):
        q = np.round(b / self.config.memo_precision).astype(np.int64)
        return (depth, q.tobytes())

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.config.node_budget:
            raise OracleBudgetError(
                f"expectimax expanded more than {self.config.node_budget} nodes; "
                "shrink the horizon or the model"
            )

    def q_value(self, b, a, depth):
        m = self.model
        total = float(b @ self.r_sa[:, a])
        if depth == 0:
            return total
        for z in range(m.n_signals):
            p, post = belief_update(m, b, a, z)
            if p <= 0.0 or post is None:
                continue
            total += m.discount * p * self.value(post, depth - 1)[0]
        return total

    def value(self, b, depth):
        key = self._key(b, depth) if self.config.use_memo else None
        if key is not None:
            hit = self.memo.get(key)
            if hit is not None:
                return hit
        self._tick()
        best, best_a = -math.inf, 0
        for a in range(self.model.n_actions):
            q = self.q_value(b, a, depth)
            if q > best:
                best, best_a = q, a
        out = (best, best_a)
        if key is not None:
            self.memo[key] = out
        return out

    def policy_value(self, b, depth, policy):
        key = self._key(b, depth) if self.config.use_memo else None
        if key is not None:
            hit = self.policy_memo.get(key)
            if hit is not None:
                return hit
        self._tick()
        m = self.model
        a = int(policy(b))
        total = float(b @ self.r_sa[:, a])
        if depth > 0:
            for z in range(m.n_signals):
                p, post = belief_update(m, b, a, z)
                if p <= 0.0 or post is None:
                    continue
                total += m.discount * p * self.policy_value(post, depth - 1, policy)
        if key is not None:
            self.policy_memo[key] = total
        return total


def _config(model, horizon, config):
    if config is None:
        return OracleConfig(horizon=horizon)
    return config


def exact_value(model: PomdpModel, b, horizon: int, config: OracleConfig = None):
    """(V_H*(b), optimal first action); exact up to truncation slack."""
    solver = _Expectimax(model, _config(model, horizon, config))
    return solver.value(np.asarray(b, dtype=np.float64), horizon)


def exact_q(model: PomdpModel, b, a: int, horizon: int, config: OracleConfig = None):
    """Q_H*(b, a): fix the first action, then act optimally."""
    solver = _Expectimax(model, _config(model, horizon, config))
    return solver.q_value(np.asarray(b, dtype=np.float64), a, horizon)


def evaluate_policy(
    model: PomdpModel, policy, b, horizon: int, config: OracleConfig = None
):
    """Truncated discounted value of following the belief -> action map."""
    solver = _Expectimax(model, _config(model, horizon, config))
    return solver.policy_value(np.asarray(b, dtype=np.float64), horizon, policy)
