"""Parser for Cassandra-format ``.POMDP`` model files.

Supported grammar: ``discount``/``values``/``states``/``actions``/
``observations`` preamble (counts or name lists), ``start`` belief
(vector, ``uniform``, single state, ``include``/``exclude`` lists), and
``T:``/``O:``/``R:`` entries with ``*`` wildcards, row/matrix
continuation lines and the ``identity``/``uniform`` keyword matrices.
``values: cost`` is rejected.

Rewards become part of the observable signal: each raw value
R(s, a, s', o) is binned into a finite set, affinely normalized into
[0, 1], and attached to the observation. Because the signal kernel
conditions on the arriving state only, a file whose reward varies with
the departing state (on reachable triples) is rejected.
"""

import re

import numpy as np

from .errors import ParseError, UnsupportedConstructError, ValidationError
from .model import PomdpModel

_KEYWORDS = {"discount", "values", "states", "actions", "observations", "start", "T", "O", "R"}
_MATRIX_WORDS = {"identity", "uniform"}

DEFAULT_REWARD_CAP = 64


class _Stmt:
    __slots__ = ("keyword", "mode", "slots", "tokens", "line")

    def __init__(self, keyword, mode, slots, tokens, line):
        self.keyword = keyword
        self.mode = mode  # include/exclude for start, else None
        self.slots = slots  # colon-separated header fields
        self.tokens = tokens  # value tokens (numbers or a matrix keyword)
        self.line = line


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0]


def _split_statements(text: str):
    """Group physical lines into statements with their 1-based line numbers."""
    stmts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = re.match(r"^([A-Za-z]+)\s*(:?)\s*(.*)$", line)
        word = m.group(1) if m else None
        if word in _KEYWORDS:
            rest = m.group(3)
            mode = None
            if word == "start":
                m2 = re.match(r"^(include|exclude)\s*:?\s*(.*)$", rest)
                if m2:
                    mode, rest = m2.group(1), m2.group(2)
            if word in ("T", "O", "R"):
                if not m.group(2):
                    raise ParseError(f"expected ':' after {word}", lineno)
                parts = rest.split(":")
                slots, tokens = [], []
                for k, part in enumerate(parts):
                    fields = part.split()
                    last = k == len(parts) - 1
                    if not fields:
                        raise ParseError(f"empty field in {word} entry", lineno)
                    if not last and len(fields) != 1:
                        raise ParseError(
                            f"unexpected token '{fields[1]}' in {word} entry", lineno
                        )
                    slots.append(fields[0])
                    if last:
                        tokens.extend(fields[1:])
                stmts.append(_Stmt(word, None, slots, tokens, lineno))
            else:
                stmts.append(_Stmt(word, mode, [], rest.split(), lineno))
        else:
            if not stmts:
                raise ParseError(f"unrecognized directive '{line.split()[0]}'", lineno)
            stmts[-1].tokens.extend(line.split())
    return stmts


class _NameSpace:
    """Resolve a state/action/observation token to an index (None = '*')."""

    def __init__(self, kind, names):
        self.kind = kind
        self.names = names
        self.index = {name: i for i, name in enumerate(names)}

    def resolve(self, token, line):
        if token == "*":
            return None
        if token in self.index:
            return self.index[token]
        if re.fullmatch(r"\d+", token):
            i = int(token)
            if 0 <= i < len(self.names):
                return i
        raise ParseError(f"unknown {self.kind} '{token}'", line)

    def expand(self, idx):
        return range(len(self.names)) if idx is None else (idx,)


def _names_from_tokens(tokens, prefix, line):
    if not tokens:
        raise ParseError(f"empty {prefix} declaration", line)
    if len(tokens) == 1 and re.fullmatch(r"\d+", tokens[0]):
        count = int(tokens[0])
        if count < 1:
            raise ParseError(f"{prefix} count must be positive", line)
        return [f"{prefix}{i}" for i in range(count)]
    if len(set(tokens)) != len(tokens):
        raise ParseError(f"duplicate {prefix} name", line)
    return list(tokens)


def _floats(tokens, expected, line, what):
    if len(tokens) != expected:
        raise ParseError(
            f"{what}: expected {expected} numbers, found {len(tokens)}", line
        )
    try:
        return [float(tok) for tok in tokens]
    except ValueError as exc:
        raise ParseError(f"{what}: {exc}", line) from None


def parse_pomdp(text: str, reward_cap: int = DEFAULT_REWARD_CAP) -> PomdpModel:
    """Parse file contents into a validated PomdpModel."""
    stmts = _split_statements(text)

    discount = None
    states = actions = observations = None
    start_stmt = None
    kernel_stmts = []
    for st in stmts:
        if st.keyword == "discount":
            discount = _floats(st.tokens, 1, st.line, "discount")[0]
        elif st.keyword == "values":
            if st.tokens == ["cost"]:
                raise UnsupportedConstructError(
                    "'values: cost' is not supported; express the model with rewards",
                    st.line,
                )
            if st.tokens != ["reward"]:
                raise ParseError(f"bad values declaration {st.tokens}", st.line)
        elif st.keyword == "states":
            states = _names_from_tokens(st.tokens, "s", st.line)
        elif st.keyword == "actions":
            actions = _names_from_tokens(st.tokens, "a", st.line)
        elif st.keyword == "observations":
            observations = _names_from_tokens(st.tokens, "o", st.line)
        else:
            if states is None or actions is None or observations is None:
                raise ParseError(
                    f"'{st.keyword}' entry before states/actions/observations "
                    "are declared",
                    st.line,
                )
            if st.keyword == "start":
                start_stmt = st
            else:
                kernel_stmts.append(st)

    if discount is None:
        raise ParseError("missing discount declaration")
    if states is None or actions is None or observations is None:
        raise ParseError("missing states/actions/observations declaration")

    sn = _NameSpace("state", states)
    an = _NameSpace("action", actions)
    on = _NameSpace("observation", observations)
    n, na, no = len(states), len(actions), len(observations)

    transition = np.zeros((n, na, n))
    obs_kernel = np.zeros((n, na, no))  # [arriving state, action, observation]
    reward_raw = np.zeros((na, n, n, no))  # [action, s, s', o]

    for st in kernel_stmts:
        if st.keyword == "T":
            _apply_transition(st, transition, sn, an)
        elif st.keyword == "O":
            _apply_observation(st, obs_kernel, sn, an, on)
        else:
            _apply_reward(st, reward_raw, sn, an, on)

    initial_belief = _parse_start(start_stmt, sn, n)

    _check_rows(
        transition.sum(axis=2), "transition", states, actions
    )
    transition /= transition.sum(axis=2, keepdims=True)
    _check_rows(
        obs_kernel.sum(axis=2), "observation", states, actions, arriving=True
    )
    obs_kernel /= obs_kernel.sum(axis=2, keepdims=True)

    reward_values, reward_index, scale, offset = _collect_rewards(
        transition, obs_kernel, reward_raw, states, actions, observations, reward_cap
    )

    nr = len(reward_values)
    signal_kernel = np.zeros((n, na, no * nr))
    for a in range(na):
        for s2 in range(n):
            for o in range(no):
                signal_kernel[s2, a, o * nr + reward_index[a, s2, o]] = obs_kernel[
                    s2, a, o
                ]

    model = PomdpModel(
        states=states,
        actions=actions,
        observations=observations,
        reward_values=reward_values,
        transition=transition,
        signal_kernel=signal_kernel,
        discount=discount,
        initial_belief=initial_belief,
        reward_scale=scale,
        reward_offset=offset,
    )
    model.validate()
    return model


def load_pomdp(path, reward_cap: int = DEFAULT_REWARD_CAP) -> PomdpModel:
    """Load and validate a ``.POMDP`` file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_pomdp(fh.read(), reward_cap=reward_cap)


def _keyword_matrix(word, rows, cols, line):
    if word == "identity":
        if rows != cols:
            raise ParseError(
                f"identity matrix needs square shape, have {rows}x{cols}", line
            )
        return np.eye(rows)
    if word == "uniform":
        return np.full((rows, cols), 1.0 / cols)
    raise ParseError(f"unknown matrix keyword '{word}'", line)


def _matrix_tokens(st, rows, cols, what):
    """Body of a 1-slot T/O entry: keyword matrix or rows*cols numbers."""
    if len(st.tokens) == 1 and st.tokens[0] in _MATRIX_WORDS:
        return _keyword_matrix(st.tokens[0], rows, cols, st.line)
    vals = _floats(st.tokens, rows * cols, st.line, what)
    return np.array(vals).reshape(rows, cols)


def _row_tokens(st, cols, what):
    if len(st.tokens) == 1 and st.tokens[0] == "uniform":
        return np.full(cols, 1.0 / cols)
    return np.array(_floats(st.tokens, cols, st.line, what))


def _apply_transition(st, transition, sn, an):
    n = len(sn.names)
    a_idx = an.resolve(st.slots[0], st.line)
    if len(st.slots) == 1:
        mat = _matrix_tokens(st, n, n, "transition matrix")
        for a in an.expand(a_idx):
            transition[:, a, :] = mat
    elif len(st.slots) == 2:
        s_idx = sn.resolve(st.slots[1], st.line)
        row = _row_tokens(st, n, "transition row")
        for a in an.expand(a_idx):
            for s in sn.expand(s_idx):
                transition[s, a, :] = row
    elif len(st.slots) == 3:
        s_idx = sn.resolve(st.slots[1], st.line)
        s2_idx = sn.resolve(st.slots[2], st.line)
        val = _floats(st.tokens, 1, st.line, "transition entry")[0]
        for a in an.expand(a_idx):
            for s in sn.expand(s_idx):
                for s2 in sn.expand(s2_idx):
                    transition[s, a, s2] = val
    else:
        raise ParseError("T entry takes 1-3 ':' fields", st.line)


def _apply_observation(st, obs_kernel, sn, an, on):
    n, no = len(sn.names), len(on.names)
    a_idx = an.resolve(st.slots[0], st.line)
    if len(st.slots) == 1:
        mat = _matrix_tokens(st, n, no, "observation matrix")
        for a in an.expand(a_idx):
            obs_kernel[:, a, :] = mat
    elif len(st.slots) == 2:
        s2_idx = sn.resolve(st.slots[1], st.line)
        row = _row_tokens(st, no, "observation row")
        for a in an.expand(a_idx):
            for s2 in sn.expand(s2_idx):
                obs_kernel[s2, a, :] = row
    elif len(st.slots) == 3:
        s2_idx = sn.resolve(st.slots[1], st.line)
        o_idx = on.resolve(st.slots[2], st.line)
        val = _floats(st.tokens, 1, st.line, "observation entry")[0]
        for a in an.expand(a_idx):
            for s2 in sn.expand(s2_idx):
                for o in on.expand(o_idx):
                    obs_kernel[s2, a, o] = val
    else:
        raise ParseError("O entry takes 1-3 ':' fields", st.line)


def _apply_reward(st, reward_raw, sn, an, on):
    n, no = len(sn.names), len(on.names)
    a_idx = an.resolve(st.slots[0], st.line)
    if len(st.slots) == 4:
        s_idx = sn.resolve(st.slots[1], st.line)
        s2_idx = sn.resolve(st.slots[2], st.line)
        o_idx = on.resolve(st.slots[3], st.line)
        val = _floats(st.tokens, 1, st.line, "reward entry")[0]
        for a in an.expand(a_idx):
            for s in sn.expand(s_idx):
                for s2 in sn.expand(s2_idx):
                    for o in on.expand(o_idx):
                        reward_raw[a, s, s2, o] = val
    elif len(st.slots) == 3:
        s_idx = sn.resolve(st.slots[1], st.line)
        s2_idx = sn.resolve(st.slots[2], st.line)
        row = np.array(_floats(st.tokens, no, st.line, "reward row"))
        for a in an.expand(a_idx):
            for s in sn.expand(s_idx):
                for s2 in sn.expand(s2_idx):
                    reward_raw[a, s, s2, :] = row
    elif len(st.slots) == 2:
        s_idx = sn.resolve(st.slots[1], st.line)
        vals = _floats(st.tokens, n * no, st.line, "reward matrix")
        mat = np.array(vals).reshape(n, no)
        for a in an.expand(a_idx):
            for s in sn.expand(s_idx):
                reward_raw[a, s, :, :] = mat
    else:
        raise ParseError("R entry takes 2-4 ':' fields", st.line)


def _parse_start(st, sn, n):
    if st is None:
        return np.full(n, 1.0 / n)
    if st.mode is not None:
        chosen = np.zeros(n, dtype=bool)
        for tok in st.tokens:
            chosen[sn.resolve(tok, st.line)] = True
        if st.mode == "exclude":
            chosen = ~chosen
        if not chosen.any():
            raise ParseError("start set is empty", st.line)
        return chosen / chosen.sum()
    if len(st.tokens) == 1:
        tok = st.tokens[0]
        if tok == "uniform":
            return np.full(n, 1.0 / n)
        if tok in sn.index or (re.fullmatch(r"\d+", tok) and n > 1):
            belief = np.zeros(n)
            belief[sn.resolve(tok, st.line)] = 1.0
            return belief
    vals = np.array(_floats(st.tokens, n, st.line, "start belief"))
    if np.any(vals < 0) or abs(vals.sum() - 1.0) > 1e-9:
        raise ParseError("start belief is not a probability vector", st.line)
    return vals / vals.sum()


def _check_rows(sums, kind, states, actions, arriving=False):
    bad = np.argwhere(np.abs(sums - 1.0) > 1e-9)
    if bad.size:
        s, a = bad[0]
        role = "arriving state" if arriving else "state"
        raise ValidationError(
            f"{kind} row ({role}={states[s]}, action={actions[a]}) sums to "
            f"{sums[s, a]:.12g}, not 1"
        )


def _collect_rewards(
    transition, obs_kernel, reward_raw, states, actions, observations, reward_cap
):
    """Bin rewards on reachable (s,a,s',o) triples and normalize into [0,1].

    Emission is tied to (action, arriving state, observation); a reward that
    differs across departing states on reachable triples cannot be expressed
    that way and is rejected.
    """
    n, na, no = len(states), len(actions), len(observations)
    # value per (a, s', o), taken from any reachable departing state
    value = np.zeros((na, n, no))
    defined = np.zeros((na, n, no), dtype=bool)
    for a in range(na):
        for s2 in range(n):
            support_s = np.nonzero(transition[:, a, s2] > 0)[0]
            if support_s.size == 0:
                continue
            for o in range(no):
                if obs_kernel[s2, a, o] <= 0:
                    continue
                vals = reward_raw[a, support_s, s2, o]
                if np.ptp(vals) > 1e-12:
                    raise ValidationError(
                        f"reward for (action={actions[a]}, arriving state="
                        f"{states[s2]}, observation={observations[o]}) varies "
                        "with the departing state; signals condition on the "
                        "arriving state only, so this model is not expressible"
                    )
                value[a, s2, o] = vals[0]
                defined[a, s2, o] = True

    reachable_vals = value[defined]
    if reachable_vals.size == 0:
        reachable_vals = np.array([0.0])
    distinct = np.unique(reachable_vals)
    if distinct.size > reward_cap:
        raise ValidationError(
            f"model uses {distinct.size} distinct reward values, above the "
            f"cap of {reward_cap}; outside the finite-reward-set assumption"
        )

    lo, hi = distinct[0], distinct[-1]
    if lo >= 0.0 and hi <= 1.0:
        scale, offset = 1.0, 0.0
    else:
        scale = (hi - lo) if hi > lo else 1.0
        offset = lo
    reward_values = (distinct - offset) / scale

    lookup = {v: i for i, v in enumerate(distinct)}
    reward_index = np.zeros((na, n, no), dtype=np.int64)
    for a in range(na):
        for s2 in range(n):
            for o in range(no):
                if defined[a, s2, o]:
                    reward_index[a, s2, o] = lookup[value[a, s2, o]]
    return reward_values, reward_index, float(scale), float(offset)
