import numpy as np
import pytest

from psrplan.cassandra import parse_pomdp
from psrplan.errors import ParseError, UnsupportedConstructError, ValidationError
from psrplan.model import from_json, to_json


def test_fair_coin_file(fair_coin):
    m = fair_coin
    assert m.n == 1
    assert m.actions == ["flip"]
    assert m.observations == ["heads", "tails"]
    np.testing.assert_allclose(m.signal_kernel.sum(axis=2), 1.0)
    # single reward value 0.5 already sits in [0,1]: no rescaling
    np.testing.assert_allclose(m.reward_values, [0.5])
    assert m.reward_scale == 1.0 and m.reward_offset == 0.0


def test_tiger_shape_and_normalization(tiger):
    m = tiger
    assert m.n == 2 and m.n_actions == 3 and m.n_observations == 2
    # raw rewards {-100, -1, 10} map affinely onto [0, 1]
    assert m.reward_scale == pytest.approx(110.0)
    assert m.reward_offset == pytest.approx(-100.0)
    np.testing.assert_allclose(m.reward_values, [0.0, 0.9, 1.0])
    raw = m.reward_values * m.reward_scale + m.reward_offset
    np.testing.assert_allclose(np.sort(raw), [-100.0, -1.0, 10.0])
    np.testing.assert_allclose(m.initial_belief, [0.5, 0.5])


def test_tiger_round_trip_through_json(tiger):
    again = from_json(to_json(tiger))
    np.testing.assert_array_equal(again.transition, tiger.transition)
    np.testing.assert_array_equal(again.signal_kernel, tiger.signal_kernel)
    assert to_json(again) == to_json(tiger)


BAD_ROW = """
discount: 0.9
values: reward
states: s0 s1
actions: go
observations: o0
T: go : s0 : s1 0.9
T: go : s1 : s1 1.0
O: go uniform
"""


def test_substochastic_row_names_state_and_action():
    with pytest.raises(ValidationError) as err:
        parse_pomdp(BAD_ROW)
    assert "s0" in str(err.value) and "go" in str(err.value)


def test_cost_files_rejected():
    text = BAD_ROW.replace("values: reward", "values: cost")
    with pytest.raises(UnsupportedConstructError, match="cost"):
        parse_pomdp(text)


MATRIX_FORMS = """
discount: 0.5
values: reward
states: 3
actions: fwd spin
observations: low high
start exclude: s1

T: fwd
0.1 0.2 0.7
0.3 0.3 0.4
0.0 0.5 0.5
T: spin uniform
O: fwd
0.9 0.1
0.2 0.8
0.5 0.5
O: spin : * uniform
R: fwd : * : s2 : * 1.0
"""


def test_matrix_row_and_keyword_forms():
    m = parse_pomdp(MATRIX_FORMS)
    np.testing.assert_allclose(m.transition[:, 0, :],
                               [[0.1, 0.2, 0.7], [0.3, 0.3, 0.4], [0.0, 0.5, 0.5]])
    np.testing.assert_allclose(m.transition[:, 1, :], np.full((3, 3), 1 / 3))
    # start exclude drops s1, leaving uniform mass on s0 and s2
    np.testing.assert_allclose(m.initial_belief, [0.5, 0.0, 0.5])
    # spin's observation kernel is uniform over two observations
    np.testing.assert_allclose(m.signal_kernel[:, 1, :].sum(axis=1), 1.0)


def test_start_single_state_and_vector():
    base = MATRIX_FORMS.replace("start exclude: s1", "start: s2")
    m = parse_pomdp(base)
    np.testing.assert_allclose(m.initial_belief, [0.0, 0.0, 1.0])
    base = MATRIX_FORMS.replace("start exclude: s1", "start: 0.2 0.3 0.5")
    m = parse_pomdp(base)
    np.testing.assert_allclose(m.initial_belief, [0.2, 0.3, 0.5])


def test_parse_error_carries_line_number():
    text = "discount: 0.9\nvalues: reward\nstates: 2\nactions: 1\nobservations: 1\nT: a0 : s0 : s9 1.0\n"
    with pytest.raises(ParseError) as err:
        parse_pomdp(text)
    assert err.value.line == 6
    assert "s9" in str(err.value)


def test_unknown_directive_rejected():
    with pytest.raises(ParseError):
        parse_pomdp("nonsense: 1\n" + BAD_ROW)


def test_entries_before_declarations_rejected():
    text = "discount: 0.9\nT: 0 : 0 : 0 1.0\nstates: 1\nactions: 1\nobservations: 1\n"
    with pytest.raises(ParseError, match="before"):
        parse_pomdp(text)


DEPARTURE_REWARD = """
discount: 0.9
values: reward
states: s0 s1
actions: go
observations: o0
T: go uniform
O: go uniform
R: go : s0 : * : * 1.0
R: go : s1 : * : * 5.0
"""


def test_departing_state_rewards_rejected():
    with pytest.raises(ValidationError, match="departing"):
        parse_pomdp(DEPARTURE_REWARD)


def test_reward_cap_enforced(tiger):
    text = (
        "discount: 0.9\nvalues: reward\nstates: 2\nactions: 1\nobservations: 2\n"
        "T: * uniform\nO: * uniform\n"
        "R: * : * : s0 : o0 1.0\nR: * : * : s0 : o1 2.0\n"
        "R: * : * : s1 : o0 3.0\nR: * : * : s1 : o1 4.0\n"
    )
    with pytest.raises(ValidationError, match="cap"):
        parse_pomdp(text, reward_cap=3)


def test_rewards_already_normalized_keep_identity_map():
    text = (
        "discount: 0.9\nvalues: reward\nstates: 2\nactions: 1\nobservations: 2\n"
        "T: * uniform\nO: * uniform\n"
        "R: * : * : s0 : * 0.25\nR: * : * : s1 : * 0.75\n"
    )
    m = parse_pomdp(text)
    np.testing.assert_allclose(m.reward_values, [0.25, 0.75])
    assert m.reward_scale == 1.0 and m.reward_offset == 0.0


def test_missing_discount_rejected():
    with pytest.raises(ParseError, match="discount"):
        parse_pomdp("values: reward\nstates: 1\nactions: 1\nobservations: 1\nT: * uniform\nO: * uniform\n")
