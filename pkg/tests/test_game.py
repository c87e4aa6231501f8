from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from wsngame.game import (
    ActionPair,
    ChAction,
    CmAction,
    GameWeights,
    WindowOutcome,
    best_response_cm,
    data_trustworthiness,
    is_nash,
    is_pareto_optimal_dt,
    profile_deviations,
    punishment,
    punishment_terms,
    reliability,
    stage_utility,
    utility,
)

W = GameWeights()
X1_FULL = 100 * 1024 * 50e-9


def test_reliability_examples():
    assert reliability(WindowOutcome(100, 100)) == 1.0
    assert reliability(WindowOutcome(60, 100)) == 0.6
    over = WindowOutcome(110, 100)
    assert reliability(over) == pytest.approx(1.1)
    assert over.over_transmitted and not over.dropped


def test_negative_forwarded_rejected():
    with pytest.raises(ValueError):
        WindowOutcome(-1, 100)


@given(st.integers(0, 1000), st.integers(1, 1000))
def test_benevolent_pair_is_never_punished(fwd, tp):
    assert punishment(ActionPair("B", "ND"), WindowOutcome(fwd, tp), W) == 0.0


def test_punishment_examples():
    assert punishment(ActionPair("NB", "ND"), WindowOutcome(100, 100), W) == pytest.approx(5.12e-3)
    x3 = punishment(ActionPair("NB", "D"), WindowOutcome(60, 100), W)
    assert x3 == pytest.approx(3.072e-3 + 2.048e-3)
    assert x3 == pytest.approx(X1_FULL)
    assert punishment(ActionPair("B", "D"), WindowOutcome(60, 100), W) == pytest.approx(2.048e-3)


@given(st.integers(0, 1000), st.integers(1, 1000), st.integers(1, 4096),
       st.floats(1e-12, 1e-6))
def test_exact_identity(fwd, tp, bits, eb):
    fwd = min(fwd, tp)
    x1, x2, x3 = punishment_terms(WindowOutcome(fwd, tp), bits, eb)
    assert x3 == x1 + x2
    assert x1 + x2 == tp * bits * Fraction(eb)


def test_over_transmission_gives_no_reward():
    x1, x2, _ = punishment_terms(WindowOutcome(110, 100), 1024, 50e-9)
    assert x2 == 0 and x1 > 0


def test_utility_examples():
    assert utility(0.0, 1.0, 0.0, W).u == pytest.approx(0.4)
    assert utility(4.75, 1.0, 0.0, W).u == pytest.approx(3.25)
    punished = utility(4.75, 0.0, X1_FULL, W).u
    assert punished < utility(4.75, 1.0, 0.0, W).u


@given(st.floats(-20, 20), st.integers(0, 100))
def test_complying_dominates_punished_pairs(rssi, fwd):
    best = stage_utility(ActionPair("B", "ND"), rssi, WindowOutcome(100, 100), W).u
    for pair in (("B", "D"), ("NB", "D"), ("NB", "ND")):
        assert stage_utility(ActionPair(*pair), rssi, WindowOutcome(fwd, 100), W).u <= best


@pytest.mark.parametrize("alpha,beta", [(0.7, 0.4), (-0.1, 1.1)])
def test_weights_must_sum_to_one(alpha, beta):
    with pytest.raises(ValueError):
        GameWeights(alpha=alpha, beta=beta)


def test_dt_examples():
    assert data_trustworthiness([[0.0, 0.0], [0.0, 0.0]]) == 0
    assert data_trustworthiness([[1.0, 2.0], [2.5, 2.5]], 2) == 4.0
    assert data_trustworthiness([[7.0]]) == 7


def test_dt_rejects_empty_and_bad_round_count():
    with pytest.raises(ValueError):
        data_trustworthiness([])
    with pytest.raises(ValueError):
        data_trustworthiness([[1.0]], 2)


@given(st.lists(st.lists(st.floats(-50, 50), min_size=3, max_size=3), min_size=1, max_size=30))
def test_dt_is_mean_of_round_sums(history):
    expected = sum(sum(r) for r in history) / len(history)
    assert data_trustworthiness(history) == pytest.approx(expected, abs=1e-9)


def test_best_response_examples():
    assert best_response_cm({CmAction.ND: 3.25, CmAction.D: 1.1}) is CmAction.ND
    assert best_response_cm({CmAction.ND: 2.0, CmAction.D: 2.0}) is CmAction.ND
    assert best_response_cm({CmAction.ND: 0.2, CmAction.D: 0.3}) is CmAction.D


def test_nash_at_benevolent_profile():
    rssi = [14.0, 5.0, -7.0]
    cur, dev = profile_deviations([ChAction.B] * 3, [CmAction.ND] * 3, rssi, W)
    assert is_nash(cur, dev)


def test_nash_fails_at_punished_dropping_profile():
    rssi = [14.0, 5.0, -7.0]
    cur, dev = profile_deviations([ChAction.NB] * 3, [CmAction.D] * 3, rssi, W)
    assert not is_nash(cur, dev)


def test_single_cm_tie_is_nash():
    assert is_nash({"cm1": 1.0}, {"cm1": [1.0]})


def test_pareto_examples():
    assert is_pareto_optimal_dt(5.0, [1.0, 4.9, 5.0])
    assert not is_pareto_optimal_dt(1.0, [1.0, 2.0])
    assert is_pareto_optimal_dt(3.0, [3.0, 3.0])
