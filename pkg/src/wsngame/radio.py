"""Radio model for a Tmote Sky class cluster member.

Transmission cost, log-distance path loss with a direction coefficient and
log-normal shadowing, and the RSSI score used by the utility function.
All functions are pure; random draws are passed in by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError

#: Measured degree-of-irregularity values, labelled DOI1..DOI6 in this order.
DOI_VALUES = (0.0055, 0.0035, 0.004, 0.0045, 0.006, 0.0085)

# Reference energy for the dB scale of the transmission cost.
_TC_REF_JOULES = 1e-3


@dataclass(frozen=True)
class EnvironmentParams:
    name: str
    n: float  # path-loss exponent
    sigma_db: float  # shadowing standard deviation
    pn_dbm: float  # noise power

    def __post_init__(self):
        if not self.n > 0:
            raise ConfigError([("n", f"path-loss exponent must be > 0, got {self.n}")])
        if not self.sigma_db >= 0:
            raise ConfigError([("sigma_db", f"must be >= 0, got {self.sigma_db}")])


ENVIRONMENTS = {
    "OL": EnvironmentParams("OL", 2.42, 3.12, -93.0),
    "ON": EnvironmentParams("ON", 3.51, 2.95, -93.0),
    "UL": EnvironmentParams("UL", 1.45, 2.45, -92.0),
    "UN": EnvironmentParams("UN", 3.15, 3.19, -92.0),
    "IL": EnvironmentParams("IL", 1.64, 3.29, -88.0),
    "IN": EnvironmentParams("IN", 2.38, 2.25, -88.0),
}

# Tmote Sky output power level -> radio current (mA).
TMOTE_CURRENTS_MA = {
    3: 8.5,
    7: 9.9,
    11: 11.2,
    15: 12.5,
    19: 13.9,
    23: 15.2,
    27: 16.5,
    31: 17.4,
}


@dataclass(frozen=True)
class RadioProfile:
    v_volts: float = 3.0
    currents_ma: dict = field(default_factory=lambda: dict(TMOTE_CURRENTS_MA))
    i0_amps: float = 20e-6
    t0_seconds: float = 580e-6
    dr_bps: float = 250_000.0
    pl_f_db: float = 55.0
    d0_m: float = 10.0

    def __post_init__(self):
        problems = []
        levels = sorted(self.currents_ma)
        currents = [self.currents_ma[h] for h in levels]
        if any(b <= a for a, b in zip(currents, currents[1:])):
            problems.append(("currents_ma", "current must increase strictly with power level"))
        if not self.dr_bps > 0:
            problems.append(("dr_bps", f"must be > 0, got {self.dr_bps}"))
        if not self.t0_seconds >= 0:
            problems.append(("t0_seconds", f"must be >= 0, got {self.t0_seconds}"))
        if not self.d0_m > 0:
            problems.append(("d0_m", f"must be > 0, got {self.d0_m}"))
        if problems:
            raise ConfigError(problems)

    def slot_seconds(self, packets: int, packet_len_bits: int) -> float:
        """Air time of ``packets`` packets at the profile data rate."""
        return packets * packet_len_bits / self.dr_bps


@dataclass(frozen=True)
class LinkGeometry:
    d_ich_m: float
    theta_deg: float = 0.0
    doi: float = DOI_VALUES[0]
    isotropic: bool = True

    def __post_init__(self):
        if not self.d_ich_m > 0:
            raise ConfigError([("d_ich_m", f"must be > 0, got {self.d_ich_m}")])
        if not self.doi > 0:
            raise ConfigError([("doi", f"must be > 0, got {self.doi}")])


def transmission_cost(profile: RadioProfile, level: int, packet_len_bits: int) -> float:
    """Energy in joules to start the radio and send one packet at ``level``.

    The startup term is ``V * I0 * T0``; the amplifier term is
    ``V * I_level * L / DR``.
    """
    if level not in profile.currents_ma:
        raise ConfigError([("power_level", f"unknown power level {level!r}; "
                            f"expected one of {sorted(profile.currents_ma)}")])
    if packet_len_bits < 0:
        raise ValueError(f"packet length must be >= 0, got {packet_len_bits}")
    tc0 = profile.v_volts * profile.i0_amps * profile.t0_seconds
    current_a = profile.currents_ma[level] * 1e-3
    tca = profile.v_volts * current_a * (packet_len_bits / profile.dr_bps)
    return tc0 + tca


def direction_coefficient(theta_deg: float, doi: float, random_draw: float,
                          isotropic: bool = False) -> float:
    if not 0.0 < random_draw < 1.0:
        raise ValueError(f"random draw must lie in the open interval (0, 1), got {random_draw}")
    if isotropic or theta_deg == 0:
        return 1.0
    if not 0.0 <= theta_deg < 360.0:
        raise ValueError(f"theta must lie in [0, 360), got {theta_deg}")
    eta = random_draw * doi
    # DOI values above 1 would push eta out of (0, 1].
    return min(eta, 1.0)


def path_loss(env: EnvironmentParams, geom: LinkGeometry, profile: RadioProfile,
              shadow_draw_db: float, eta: float = 1.0) -> float:
    """Path loss in dB between a CM and its CH.

    The whole log-distance term is scaled by the direction coefficient
    ``eta`` and the shadowing draw is added afterwards.
    """
    if geom.d_ich_m < profile.d0_m:
        raise ValueError(f"distance {geom.d_ich_m} m is inside the far-field "
                         f"reference distance {profile.d0_m} m")
    mean_loss = profile.pl_f_db + 10.0 * env.n * math.log10(geom.d_ich_m / profile.d0_m)
    return mean_loss * eta + shadow_draw_db


def rssi_score(tc_joules: float, pl_db: float, pn_dbm: float) -> float:
    """Dimensionless link score: transmission cost in dB re 1 mJ, minus PL and Pn."""
    if not tc_joules > 0:
        raise ValueError(f"transmission cost must be > 0, got {tc_joules}")
    tc_db = 10.0 * math.log10(tc_joules / _TC_REF_JOULES)
    return tc_db - pl_db - pn_dbm


def doi_label(doi: float) -> str:
    for k, value in enumerate(DOI_VALUES, start=1):
        if value == doi:
            return f"DOI{k}"
    return f"doi{doi:g}"
