"""Round-based TDMA simulation of one cluster under a selective-forwarding attack.

Every round each CM sends a window of ``tp`` packets in its own TDMA slot.
The CH scores the window, decides whether to grant the beacon, and keeps the
designation table (benevolent / malicious / hardware-failure list) that
drives the punish-and-forgive policy.

Energy accounting, per CM and round:

* every packet put on air costs one transmission cost ``TC``;
* a window that is not fully acknowledged is re-sent once (``retx``): under
  NB nothing is acknowledged, under B only the missing packets are NACKed;
* a CM with unacknowledged packets cannot sleep and keeps its radio on for
  the rest of the TDMA frame (``awake``);
* packets beyond ``tp`` sent by an over-transmitting CM are ``excess``.

``retx + awake + excess`` is the wasted ("lost") energy.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import SimConfig, fault_count
from .game import (
    ActionPair,
    ChAction,
    CmAction,
    GameWeights,
    WindowOutcome,
    best_response_cm,
    data_trustworthiness,
    punishment,
    reliability,
    stage_utility,
    utility,
)
from .radio import (
    ENVIRONMENTS,
    LinkGeometry,
    direction_coefficient,
    path_loss,
    rssi_score,
    transmission_cost,
)


class Scenario(str, enum.Enum):
    ONE_SHOT_NB_ND = "OneShot_NB_ND"
    ONE_SHOT_B_D = "OneShot_B_D"
    ONE_SHOT_NB_D = "OneShot_NB_D"
    REPEATED = "Repeated"
    NO_DEFENSE = "NoDefense"


ONE_SHOT_ACTIONS = {
    # scenario -> (CH action toward every CM, action of attacker CMs)
    Scenario.ONE_SHOT_NB_ND: (ChAction.NB, CmAction.ND),
    Scenario.ONE_SHOT_B_D: (ChAction.B, CmAction.D),
    Scenario.ONE_SHOT_NB_D: (ChAction.NB, CmAction.D),
}


class BehaviorKind(str, enum.Enum):
    BENEVOLENT = "Benevolent"
    RATIONAL_MALICIOUS = "RationalMalicious"
    HW_FAULTY = "HwFaulty"


class FaultMode(str, enum.Enum):
    DROP = "DropFault"
    OVER = "OverTransmit"


class Designation(str, enum.Enum):
    BENEVOLENT = "Benevolent"
    MALICIOUS = "Malicious"
    HWL = "HWL"


class Classification(str, enum.Enum):
    BENEVOLENT = "Benevolent"
    MALICIOUS = "Malicious"
    HW_FAILURE = "HwFailure"


@dataclass(frozen=True)
class CmBehavior:
    kind: BehaviorKind = BehaviorKind.BENEVOLENT
    fault_mode: Optional[FaultMode] = None
    p_drop: float = 0.5
    gamma: float = 0.1

    def __post_init__(self):
        if self.kind is BehaviorKind.HW_FAULTY:
            if self.fault_mode is None:
                raise ValueError("a faulty CM needs a fault mode")
            if not 0.0 < self.p_drop <= 1.0:
                raise ValueError(f"p_drop must be in (0, 1], got {self.p_drop}")
            if not self.gamma > 0:
                raise ValueError(f"gamma must be > 0, got {self.gamma}")


@dataclass
class CmState:
    id: int
    behavior: CmBehavior
    theta_deg: float = 0.0
    current_action: CmAction = CmAction.ND
    designation: Designation = Designation.BENEVOLENT
    energy_spent_joules: float = 0.0
    pending_retransmissions: int = 0
    attacking: bool = False
    forgiven_round: Optional[int] = None
    listed_round: Optional[int] = None

    def __post_init__(self):
        self.attacking = self.behavior.kind is BehaviorKind.RATIONAL_MALICIOUS


@dataclass
class ChState:
    beacon_grants: Dict[int, ChAction] = field(default_factory=dict)
    hwl: List[int] = field(default_factory=list)
    forgiveness_schedule: Dict[int, int] = field(default_factory=dict)
    equilibrium_round: Optional[int] = None


@dataclass(frozen=True)
class CmRound:
    rd: int
    cm_id: int
    ch_action: ChAction
    cm_action: CmAction
    forwarded: int
    rl: float
    rssi: float
    xi_joules: float
    utility: float
    u_opt: float  # utility at (B, ND) with the same link draw
    u_floor: float  # utility of a fully dropped, doubly punished window
    u_ref: float  # (B, ND) utility on the best catalogue link, same draws
    energy_j: float
    tx_j: float
    retx_j: float
    awake_j: float
    excess_j: float
    acked_packets: int

    @property
    def lost_j(self) -> float:
        return self.retx_j + self.awake_j + self.excess_j

    @property
    def norm_utility(self) -> Optional[float]:
        return self.utility / self.u_ref if self.u_ref > 0 else None


@dataclass(frozen=True)
class RoundRecord:
    rd: int
    cms: Tuple[CmRound, ...]
    dt_running: float

    @property
    def utility_sum(self) -> float:
        return sum(c.utility for c in self.cms)


@dataclass
class SimResult:
    config: SimConfig
    scenario: Scenario
    records: List[RoundRecord]
    malicious_ids: Tuple[int, ...]
    faults: Dict[int, FaultMode]
    hwl: Tuple[int, ...]
    classifications: Dict[int, Classification]
    designations: Dict[int, Designation]
    equilibrium_round: Optional[int]
    ch_equilibrium_round: Optional[int]
    wall_clock_seconds: float = field(default=0.0, compare=False)

    @property
    def n_rounds(self) -> int:
        return len(self.records)

    def dt(self) -> float:
        """Average summed utility per round over the whole run."""
        return data_trustworthiness([[c.utility for c in r.cms] for r in self.records])

    def cm_history(self, cm_id: int) -> List[CmRound]:
        return [r.cms[cm_id - 1] for r in self.records]


# ---------------------------------------------------------------------------
# per-step operations


def tdma_schedule(n_cms: int, rd: int) -> List[int]:
    """Slot order for round ``rd``: CM ``k`` owns slot ``k``."""
    if n_cms < 1:
        raise ValueError(f"n_cms must be >= 1, got {n_cms}")
    return list(range(1, n_cms + 1))


def forgiveness_round(cm_id: int, n_cms: int) -> int:
    return cm_id + cm_id * n_cms


def beacon_policy(cm: CmState, rd: int, n_cms: int, equilibrium_reached: bool = False) -> ChAction:
    """CH action toward ``cm`` in round ``rd`` given the action it just played.

    A CM that drops before the equilibrium is denied the beacon. A CM
    already designated malicious gets the beacon back only once it behaves
    (ND) at or after its forgiveness round ``i + i*|N|``.
    """
    if rd < 1:
        raise ValueError(f"rounds start at 1, got {rd}")
    if cm.designation is Designation.HWL or equilibrium_reached and cm.designation is Designation.BENEVOLENT:
        return ChAction.B
    if cm.designation is Designation.BENEVOLENT:
        return ChAction.NB if cm.current_action is CmAction.D else ChAction.B
    if cm.current_action is CmAction.ND and rd >= forgiveness_round(cm.id, n_cms):
        return ChAction.B
    return ChAction.NB


def cm_transmit(cm: CmState, intended: CmAction, tp: int,
                drop_draw: Optional[int] = None) -> Tuple[WindowOutcome, int]:
    """Deliver one window; returns the outcome and the number of packets on air.

    ``drop_draw`` is the pre-drawn Binomial(tp, 1 - p_drop) delivery count
    used when the CM has a drop fault. Hardware faults override strategy.
    """
    b = cm.behavior
    if b.kind is BehaviorKind.HW_FAULTY:
        if b.fault_mode is FaultMode.DROP:
            if drop_draw is None:
                raise ValueError("a drop-faulty CM needs a binomial draw")
            return WindowOutcome(int(drop_draw), tp), tp
        sent = int(round(tp * (1.0 + b.gamma)))
        return WindowOutcome(sent, tp), sent
    if intended is CmAction.D:
        return WindowOutcome(0, tp), 0
    return WindowOutcome(tp, tp), tp


def window_energy(sent: int, outcome: WindowOutcome, ch_action: ChAction,
                  tc_joules: float, awake_joules: float) -> dict:
    tp = outcome.tp
    if ch_action is ChAction.NB:
        unacked = tp
    else:
        unacked = max(tp - outcome.forwarded, 0)
    tx = sent * tc_joules
    retx = unacked * tc_joules
    awake = awake_joules if unacked > 0 else 0.0
    excess = max(sent - tp, 0) * tc_joules
    return {
        "tx_j": tx,
        "retx_j": retx,
        "awake_j": awake,
        "excess_j": excess,
        "energy_j": tx + retx + awake,
        "unacked": unacked,
    }


def classify_cm(history: Sequence[CmRound], equilibrium_round: Optional[int], tp: int) -> Classification:
    """Cause of a CM's packet loss given the CH's equilibrium round.

    Loss or over-transmission at or after the equilibrium can only be a
    hardware fault; dropping only before it marks a rational attacker.
    """
    if not history:
        raise ValueError("classification needs at least one window")
    if equilibrium_round is not None:
        for entry in history:
            if entry.rd >= equilibrium_round and entry.forwarded != tp:
                return Classification.HW_FAILURE
    if any(entry.forwarded < tp for entry in history
           if equilibrium_round is None or entry.rd < equilibrium_round):
        return Classification.MALICIOUS
    return Classification.BENEVOLENT


# ---------------------------------------------------------------------------
# run orchestration


def _streams(config: SimConfig):
    root = np.random.SeedSequence([config.seed, config.run_index])
    return [np.random.default_rng(s) for s in root.spawn(5)]


def _assign_roles(config: SimConfig, rng: np.random.Generator):
    n = config.n_cms
    ids = np.arange(1, n + 1)
    if isinstance(config.malicious, tuple):
        malicious = tuple(sorted(config.malicious))
    else:
        malicious = tuple(sorted(int(i) for i in rng.choice(ids, size=config.malicious, replace=False)))
    if config.fault_ids is not None:
        faulty_order = list(config.fault_ids)
    else:
        pool = np.array([i for i in ids if i not in malicious])
        k = fault_count(n, config.hw_fault_fraction)
        faulty_order = [int(i) for i in rng.choice(pool, size=k, replace=False)] if k else []
    faults = {}
    for pos, cm_id in enumerate(faulty_order):
        if config.fault_mode == "drop":
            mode = FaultMode.DROP
        elif config.fault_mode == "over":
            mode = FaultMode.OVER
        else:
            mode = FaultMode.DROP if pos % 2 == 0 else FaultMode.OVER
        faults[cm_id] = mode
    return malicious, dict(sorted(faults.items()))


class _LinkModel:
    """Precomputed per-run radio quantities."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.profile = config.profile
        self.env = config.environment
        self.tc = transmission_cost(self.profile, config.power_level, config.packet_len_bits)
        self.tc_db = 10.0 * math.log10(self.tc / 1e-3)
        self.geom_cache: Dict[float, LinkGeometry] = {}
        catalogue = dict(ENVIRONMENTS)
        catalogue[self.env.name] = self.env
        log_ratio = math.log10(config.d_ich_m / config.d0_m)
        # (mean loss before eta, sigma, noise) for every reference environment
        self.reference = [
            (config.pl_f_db + 10.0 * e.n * log_ratio, e.sigma_db, e.pn_dbm)
            for e in catalogue.values()
        ]

    def shadow(self, sigma: float, z: float) -> float:
        if self.config.shadowing_mode == "fixed":
            return sigma
        return sigma * z

    def rssi(self, theta: float, eta: float, z: float) -> float:
        geom = LinkGeometry(self.config.d_ich_m, theta, self.config.doi, self.config.isotropic)
        pl = path_loss(self.env, geom, self.profile, self.shadow(self.env.sigma_db, z), eta)
        return rssi_score(self.tc, pl, self.env.pn_dbm)

    def best_reference_rssi(self, eta: float, z: float) -> float:
        return max(self.tc_db - (mean * eta + self.shadow(sigma, z)) - pn
                   for mean, sigma, pn in self.reference)


def _awake_joules(config: SimConfig) -> float:
    profile = config.profile
    idle = (config.n_cms - 1) * profile.slot_seconds(config.tp, config.packet_len_bits)
    return profile.v_volts * profile.i0_amps * idle


def simulate(config: SimConfig, scenario: Scenario = Scenario.REPEATED) -> SimResult:
    """Run ``config.n_rounds`` rounds of ``scenario``.

    All scenarios built from the same config share identical role
    assignments and per-round random draws, so they can be compared
    pairwise.
    """
    started = time.perf_counter()
    scenario = Scenario(scenario)
    setup_rng, shadow_rng, direction_rng, theta_rng, fault_rng = _streams(config)
    malicious, faults = _assign_roles(config, setup_rng)

    n, tp = config.n_cms, config.tp
    weights: GameWeights = config.weights
    link = _LinkModel(config)
    awake_cost = _awake_joules(config)
    full_bits_cost = tp * config.packet_len_bits * config.eb_joules

    thetas = theta_rng.uniform(0.0, 360.0, size=n)
    cms = []
    for i in range(1, n + 1):
        if i in faults:
            behavior = CmBehavior(BehaviorKind.HW_FAULTY, faults[i], config.p_drop, config.gamma)
        elif i in malicious:
            behavior = CmBehavior(BehaviorKind.RATIONAL_MALICIOUS)
        else:
            behavior = CmBehavior()
        cms.append(CmState(i, behavior, theta_deg=float(thetas[i - 1])))
    ch = ChState(beacon_grants={i: ChAction.B for i in range(1, n + 1)})
    repeated = scenario is Scenario.REPEATED

    records: List[RoundRecord] = []
    total_u = 0.0
    tiny = np.nextafter(0.0, 1.0)
    for rd in range(1, config.n_rounds + 1):
        z = shadow_rng.standard_normal(n)
        r_draws = direction_rng.uniform(tiny, 1.0, size=n)
        new_thetas = theta_rng.uniform(0.0, 360.0, size=n)
        drop_draws = fault_rng.binomial(tp, 1.0 - config.p_drop, size=n)
        if config.redraw_theta:
            for cm in cms:
                cm.theta_deg = float(new_thetas[cm.id - 1])

        entries = []
        for slot in tdma_schedule(n, rd):
            cm = cms[slot - 1]
            k = slot - 1
            if scenario in ONE_SHOT_ACTIONS:
                pinned_ch, attacker_action = ONE_SHOT_ACTIONS[scenario]
                intended = attacker_action if cm.attacking else CmAction.ND
            else:
                intended = CmAction.D if cm.attacking else CmAction.ND
            outcome, sent = cm_transmit(cm, intended, tp, int(drop_draws[k]))
            cm.current_action = CmAction.D if outcome.dropped else CmAction.ND

            if repeated:
                grant = _repeated_game_step(cm, ch, rd, n)
            elif scenario in ONE_SHOT_ACTIONS:
                grant = pinned_ch
            else:
                grant = ChAction.B
            ch.beacon_grants[cm.id] = grant

            eta = direction_coefficient(cm.theta_deg, config.doi, float(r_draws[k]), config.isotropic)
            rssi = link.rssi(cm.theta_deg, eta, float(z[k]))
            pair = ActionPair(grant, cm.current_action)
            xi = punishment(pair, outcome, weights)
            rl = reliability(outcome)
            u = utility(rssi, rl, xi, weights).u
            u_opt = utility(rssi, 1.0, 0.0, weights).u
            u_floor = utility(rssi, 0.0, full_bits_cost, weights).u
            u_ref = utility(link.best_reference_rssi(eta, float(z[k])), 1.0, 0.0, weights).u

            energy = window_energy(sent, outcome, grant, link.tc, awake_cost)
            cm.energy_spent_joules += energy["energy_j"]
            cm.pending_retransmissions = energy["unacked"]
            acked = min(outcome.forwarded, tp) if grant is ChAction.B else 0

            entries.append(CmRound(
                rd=rd, cm_id=cm.id, ch_action=grant, cm_action=cm.current_action,
                forwarded=outcome.forwarded, rl=rl, rssi=rssi, xi_joules=xi, utility=u,
                u_opt=u_opt, u_floor=u_floor, u_ref=u_ref,
                energy_j=energy["energy_j"], tx_j=energy["tx_j"], retx_j=energy["retx_j"],
                awake_j=energy["awake_j"], excess_j=energy["excess_j"], acked_packets=acked,
            ))

            if repeated and cm.attacking and grant is ChAction.NB:
                _reconsider_attack(cm, rssi, weights)

        if repeated:
            _update_equilibrium(cms, ch, entries, rd, tp)

        total_u += sum(e.utility for e in entries)
        records.append(RoundRecord(rd=rd, cms=tuple(entries), dt_running=total_u / rd))

    hwl = tuple(ch.hwl)
    # the CH only knows its own HWL; baselines have none, so use ground truth there
    excluded = set(hwl) if repeated else set(faults)
    if repeated:
        classifications = {
            cm.id: classify_cm([r.cms[cm.id - 1] for r in records], ch.equilibrium_round, tp)
            for cm in cms
        }
    else:
        classifications = {}
    result = SimResult(
        config=config,
        scenario=scenario,
        records=records,
        malicious_ids=malicious,
        faults=faults,
        hwl=hwl,
        classifications=classifications,
        designations={cm.id: cm.designation for cm in cms},
        equilibrium_round=_settled_round(records, excluded),
        ch_equilibrium_round=ch.equilibrium_round,
    )
    result.wall_clock_seconds = time.perf_counter() - started
    return result


def _repeated_game_step(cm: CmState, ch: ChState, rd: int, n: int) -> ChAction:
    """Punish-and-forgive decision for one slot; updates designations."""
    reached = ch.equilibrium_round is not None
    if not reached and cm.designation is Designation.BENEVOLENT and cm.current_action is CmAction.D:
        cm.designation = Designation.MALICIOUS
        ch.forgiveness_schedule[cm.id] = forgiveness_round(cm.id, n)
    grant = beacon_policy(cm, rd, n, equilibrium_reached=reached)
    if cm.designation is Designation.MALICIOUS:
        if grant is ChAction.B:
            cm.designation = Designation.BENEVOLENT
            cm.forgiven_round = rd
        elif rd >= forgiveness_round(cm.id, n):
            # still dropping when its forgiveness round came: not a rational attacker
            _list_hw(cm, ch, rd)
    elif reached and cm.designation is Designation.BENEVOLENT and cm.current_action is CmAction.D:
        _list_hw(cm, ch, rd)
    return grant


def _list_hw(cm: CmState, ch: ChState, rd: int) -> None:
    cm.designation = Designation.HWL
    cm.listed_round = rd
    ch.hwl.append(cm.id)
    ch.hwl.sort()


def _reconsider_attack(cm: CmState, rssi: float, weights: GameWeights) -> None:
    # after one punished window the attacker compares compliance (beacon
    # restored) with continued dropping (beacon withheld)
    tp = weights.tp
    expected = {
        CmAction.ND: stage_utility(ActionPair(ChAction.B, CmAction.ND), rssi,
                                   WindowOutcome(tp, tp), weights).u,
        CmAction.D: stage_utility(ActionPair(ChAction.NB, CmAction.D), rssi,
                                  WindowOutcome(0, tp), weights).u,
    }
    if best_response_cm(expected) is CmAction.ND:
        cm.attacking = False


def _update_equilibrium(cms: Sequence[CmState], ch: ChState, entries: Sequence[CmRound],
                        rd: int, tp: int) -> None:
    if ch.equilibrium_round is None:
        if any(cm.designation is Designation.MALICIOUS for cm in cms):
            return
        ch.equilibrium_round = rd
    # from the equilibrium on, any loss or over-transmission is a hardware fault
    for cm, entry in zip(cms, entries):
        if cm.designation is Designation.BENEVOLENT and entry.forwarded != tp:
            _list_hw(cm, ch, rd)


def _settled_round(records: Sequence[RoundRecord], excluded: set) -> Optional[int]:
    """First round from which every CM outside ``excluded`` holds (B, ND) to the end."""
    settled = None
    for record in reversed(records):
        ok = all(c.ch_action is ChAction.B and c.cm_action is CmAction.ND
                 for c in record.cms if c.cm_id not in excluded)
        if not ok:
            break
        settled = record.rd
    return settled


def run_simulation(config: SimConfig) -> SimResult:
    """Repeated punish-and-forgive game for ``config``."""
    return simulate(config, Scenario.REPEATED)
