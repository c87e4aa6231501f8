"""Stage-game payoffs between the cluster head and one cluster member.

A CM earns ``alpha*RSSI + beta*RL - gain*xi`` per round, where ``xi`` is the
energy-denominated punishment picked by the (CH action, CM action) pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence


class ChAction(str, enum.Enum):
    B = "B"
    NB = "NB"


class CmAction(str, enum.Enum):
    D = "D"
    ND = "ND"


@dataclass(frozen=True)
class ActionPair:
    ch_action: ChAction
    cm_action: CmAction

    def __post_init__(self):
        # accept plain strings ("B", "ND") as well as enum members
        object.__setattr__(self, "ch_action", ChAction(self.ch_action))
        object.__setattr__(self, "cm_action", CmAction(self.cm_action))


@dataclass(frozen=True)
class GameWeights:
    alpha: float = 0.6
    beta: float = 0.4
    eb_joules_per_bit: float = 50e-9
    tp: int = 100
    packet_len_bits: int = 1024
    punishment_gain: float = 1000.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")
        if self.tp < 1:
            raise ValueError(f"tp must be >= 1, got {self.tp}")
        if not self.eb_joules_per_bit > 0:
            raise ValueError("eb must be > 0")
        if self.punishment_gain < 0:
            raise ValueError("punishment_gain must be >= 0")


@dataclass(frozen=True)
class WindowOutcome:
    forwarded: int
    tp: int

    def __post_init__(self):
        if self.forwarded < 0:
            raise ValueError(f"forwarded must be >= 0, got {self.forwarded}")
        if self.tp < 1:
            raise ValueError(f"tp must be >= 1, got {self.tp}")

    @property
    def over_transmitted(self) -> bool:
        return self.forwarded > self.tp

    @property
    def dropped(self) -> bool:
        return self.forwarded < self.tp


@dataclass(frozen=True)
class UtilityBreakdown:
    rssi_term: float
    rl_term: float
    xi: float  # joules, before the gain is applied
    u: float


class PunishmentTerms(NamedTuple):
    """Exact punishment components in joules."""
    x1: Fraction
    x2: Fraction
    x3: Fraction


def reliability(outcome: WindowOutcome) -> float:
    """Fraction of the window delivered; above 1 means over-transmission."""
    return outcome.forwarded / outcome.tp


def _bits(outcome: WindowOutcome, packet_len_bits: int) -> tuple[int, int]:
    sent_bits = outcome.forwarded * packet_len_bits
    # over-transmission must not turn the missing-packet term into a reward
    missing_bits = max(outcome.tp - outcome.forwarded, 0) * packet_len_bits
    return sent_bits, missing_bits


def punishment_terms(outcome: WindowOutcome, packet_len_bits: int,
                     eb_joules_per_bit: float) -> PunishmentTerms:
    sent_bits, missing_bits = _bits(outcome, packet_len_bits)
    eb = Fraction(eb_joules_per_bit)
    x1 = sent_bits * eb
    x2 = missing_bits * eb
    return PunishmentTerms(x1, x2, x1 + x2)


def punishment(pair: ActionPair, outcome: WindowOutcome, weights: GameWeights) -> float:
    sent_bits, missing_bits = _bits(outcome, weights.packet_len_bits)
    x1 = sent_bits * weights.eb_joules_per_bit
    x2 = missing_bits * weights.eb_joules_per_bit
    if pair.ch_action is ChAction.B:
        return x2 if pair.cm_action is CmAction.D else 0.0
    if pair.cm_action is CmAction.ND:
        return x1
    return x1 + x2


def utility(rssi: float, rl: float, xi: float, weights: GameWeights) -> UtilityBreakdown:
    rssi_term = weights.alpha * rssi
    rl_term = weights.beta * rl
    u = rssi_term + rl_term - weights.punishment_gain * xi
    return UtilityBreakdown(rssi_term, rl_term, xi, u)


def stage_utility(pair: ActionPair, rssi: float, outcome: WindowOutcome,
                  weights: GameWeights) -> UtilityBreakdown:
    xi = punishment(pair, outcome, weights)
    return utility(rssi, reliability(outcome), xi, weights)


def data_trustworthiness(history: Sequence[Sequence[float]], n_rounds: int | None = None) -> float:
    """Average over rounds of the summed CM utilities.

    ``history[r]`` holds the utilities of every CM in round ``r``.
    """
    if not history:
        raise ValueError("DT is undefined for an empty history")
    if n_rounds is None:
        n_rounds = len(history)
    if n_rounds != len(history):
        raise ValueError(f"n_rounds={n_rounds} does not match history length {len(history)}")
    return sum(sum(row) for row in history) / n_rounds


def best_response_cm(expected_utilities: Mapping[CmAction, float]) -> CmAction:
    """Action with the highest expected utility; ties go to ND."""
    u_nd = expected_utilities[CmAction.ND]
    u_d = expected_utilities[CmAction.D]
    return CmAction.D if u_d > u_nd else CmAction.ND


def is_nash(current: Mapping[str, float], deviations: Mapping[str, Iterable[float]]) -> bool:
    """True when no player gains strictly from any unilateral deviation.

    ``current[p]`` is player p's utility at the profile and
    ``deviations[p]`` the utilities p would get after each of its
    unilateral deviations.
    """
    for player, u in current.items():
        if any(alt > u for alt in deviations.get(player, ())):
            return False
    return True


def is_pareto_optimal_dt(dt_candidate: float, dt_alternatives: Iterable[float]) -> bool:
    return all(dt_candidate >= alt for alt in dt_alternatives)


def _policy_response(cm_action: CmAction) -> ChAction:
    # forgiving CH: beacon for compliance, none for dropping
    return ChAction.B if cm_action is CmAction.ND else ChAction.NB


def _full_window(cm_action: CmAction, tp: int) -> WindowOutcome:
    return WindowOutcome(tp if cm_action is CmAction.ND else 0, tp)


def profile_deviations(ch_actions: Sequence[ChAction], cm_actions: Sequence[CmAction],
                       rssi: Sequence[float], weights: GameWeights,
                       ch_responds: bool = True):
    """Current and unilateral-deviation utilities for a whole cluster profile.

    Players are the CH (utility: summed CM utilities for the round) and
    each CM (keys ``"cm1"``, ``"cm2"``, ...). A CM deviation flips its
    action; when ``ch_responds`` the CH answers with its repeated-game
    policy (beacon for ND, none for D), otherwise the CH action is held
    fixed as in a one-shot stage game. A CH deviation flips its action
    toward one CM at a time.

    Returns ``(current, deviations)`` suitable for :func:`is_nash`.
    """
    tp = weights.tp
    pairs = [ActionPair(a, c) for a, c in zip(ch_actions, cm_actions)]

    def u_of(pair: ActionPair, r: float) -> float:
        return stage_utility(pair, r, _full_window(pair.cm_action, tp), weights).u

    cm_utils = [u_of(p, r) for p, r in zip(pairs, rssi)]
    current = {"CH": sum(cm_utils)}
    deviations: dict[str, list[float]] = {"CH": []}
    for i, (pair, r) in enumerate(zip(pairs, rssi), start=1):
        key = f"cm{i}"
        current[key] = cm_utils[i - 1]
        flipped = CmAction.D if pair.cm_action is CmAction.ND else CmAction.ND
        ch = _policy_response(flipped) if ch_responds else pair.ch_action
        deviations[key] = [u_of(ActionPair(ch, flipped), r)]

        other_ch = ChAction.NB if pair.ch_action is ChAction.B else ChAction.B
        alt = u_of(ActionPair(other_ch, pair.cm_action), r)
        deviations["CH"].append(current["CH"] - cm_utils[i - 1] + alt)
    return current, deviations
