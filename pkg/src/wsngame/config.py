"""Simulation configuration: defaults, validation and loading.

Config files are flat YAML mappings (``key: value`` per line). Unknown keys
are rejected so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass, field, fields
from typing import Any, Mapping, Optional, Sequence, Union

import yaml

from .errors import ConfigError
from .game import GameWeights
from .radio import DOI_VALUES, ENVIRONMENTS, EnvironmentParams, RadioProfile, doi_label

SHADOWING_MODES = ("sampled", "fixed")
FAULT_MODES = ("mixed", "drop", "over")


@dataclass(frozen=True)
class SimConfig:
    n_cms: int = 10
    c_factor: float = 11.0
    tp: int = 100
    packet_len_bits: int = 1024
    eb_joules: float = 50e-9
    alpha: float = 0.6
    beta: float = 0.4
    env_name: str = "UL"
    # optional override of the environment table row: {"n", "sigma_db", "pn_dbm"}
    env_params: Optional[Mapping[str, float]] = None
    doi_index: int = 1
    doi_value: Optional[float] = None
    isotropic: bool = True
    redraw_theta: bool = False
    d_ich_m: float = 125.0
    d0_m: float = 10.0
    pl_f_db: float = 55.0
    power_level: int = 31
    v_volts: float = 3.0
    i0_amps: float = 20e-6
    t0_seconds: float = 580e-6
    dr_bps: float = 250_000.0
    # a count drawn by seed, or explicit 1-based CM ids
    malicious: Union[int, tuple] = 2
    hw_fault_fraction: float = 0.0
    fault_ids: Optional[tuple] = None
    fault_mode: str = "mixed"
    p_drop: float = 0.5
    gamma: float = 0.1
    shadowing_mode: str = "sampled"
    punishment_gain: float = 1000.0
    seed: int = 0
    run_index: int = 0

    def __post_init__(self):
        if isinstance(self.malicious, list):
            object.__setattr__(self, "malicious", tuple(self.malicious))
        if isinstance(self.fault_ids, list):
            object.__setattr__(self, "fault_ids", tuple(self.fault_ids))
        if self.env_params is not None and not isinstance(self.env_params, _FrozenDict):
            object.__setattr__(self, "env_params", _FrozenDict(self.env_params))
        problems = _validate(self)
        if problems:
            raise ConfigError(problems)

    # derived views -----------------------------------------------------

    @property
    def n_rounds(self) -> int:
        return int(round(self.c_factor * self.n_cms))

    @property
    def environment(self) -> EnvironmentParams:
        base = ENVIRONMENTS.get(self.env_name)
        if self.env_params is None:
            return base
        values = {"n": base.n, "sigma_db": base.sigma_db, "pn_dbm": base.pn_dbm} if base else {}
        values.update(self.env_params)
        return EnvironmentParams(self.env_name, values["n"], values["sigma_db"], values["pn_dbm"])

    @property
    def doi(self) -> float:
        return self.doi_value if self.doi_value is not None else DOI_VALUES[self.doi_index - 1]

    @property
    def doi_label(self) -> str:
        return "iso" if self.isotropic else doi_label(self.doi)

    @property
    def profile(self) -> RadioProfile:
        return RadioProfile(v_volts=self.v_volts, i0_amps=self.i0_amps,
                            t0_seconds=self.t0_seconds, dr_bps=self.dr_bps,
                            pl_f_db=self.pl_f_db, d0_m=self.d0_m)

    @property
    def weights(self) -> GameWeights:
        return GameWeights(alpha=self.alpha, beta=self.beta, eb_joules_per_bit=self.eb_joules,
                           tp=self.tp, packet_len_bits=self.packet_len_bits,
                           punishment_gain=self.punishment_gain)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, _FrozenDict):
                value = dict(value)
            out[f.name] = value
        return out


class _FrozenDict(dict):
    """Hashable read-only dict so SimConfig stays hashable."""

    def __hash__(self):
        return hash(tuple(sorted(self.items())))

    def _readonly(self, *args, **kwargs):
        raise TypeError("env_params is read-only")

    __setitem__ = __delitem__ = update = pop = clear = setdefault = _readonly


def _validate(cfg: SimConfig) -> list:
    p = []

    def bad(name, msg):
        p.append((name, msg))

    if not isinstance(cfg.n_cms, int) or cfg.n_cms < 1:
        bad("n_cms", f"must be an integer >= 1, got {cfg.n_cms!r}")
    elif not cfg.c_factor > cfg.n_cms:
        bad("c_factor", f"constraint c > |N| violated: c={cfg.c_factor}, |N|={cfg.n_cms}")
    if not isinstance(cfg.tp, int) or cfg.tp < 1:
        bad("tp", f"must be an integer >= 1, got {cfg.tp!r}")
    if not isinstance(cfg.packet_len_bits, int) or cfg.packet_len_bits < 0:
        bad("packet_len_bits", f"must be an integer >= 0, got {cfg.packet_len_bits!r}")
    if not cfg.eb_joules > 0:
        bad("eb_joules", f"must be > 0, got {cfg.eb_joules}")
    if cfg.alpha < 0 or cfg.beta < 0:
        bad("alpha", "alpha and beta must be >= 0")
    if not math.isclose(cfg.alpha + cfg.beta, 1.0, rel_tol=0, abs_tol=1e-9):
        bad("alpha", f"constraint alpha + beta = 1 violated: {cfg.alpha} + {cfg.beta}")
    if cfg.env_name not in ENVIRONMENTS:
        keys = set(cfg.env_params or ())
        if not {"n", "sigma_db", "pn_dbm"} <= keys:
            bad("env_name", f"unknown environment {cfg.env_name!r}; expected one of "
                            f"{sorted(ENVIRONMENTS)} or full env_params")
    if cfg.env_params is not None:
        extra = set(cfg.env_params) - {"n", "sigma_db", "pn_dbm"}
        if extra:
            bad("env_params", f"unknown keys {sorted(extra)}")
        if cfg.env_params.get("n", 1.0) <= 0:
            bad("env_params", "n must be > 0")
        if cfg.env_params.get("sigma_db", 0.0) < 0:
            bad("env_params", "sigma_db must be >= 0")
    if cfg.doi_value is not None:
        if not cfg.doi_value > 0:
            bad("doi_value", f"must be > 0, got {cfg.doi_value}")
    elif cfg.doi_index not in range(1, len(DOI_VALUES) + 1):
        bad("doi_index", f"must be in 1..{len(DOI_VALUES)}, got {cfg.doi_index!r}")
    if not cfg.d0_m > 0:
        bad("d0_m", f"must be > 0, got {cfg.d0_m}")
    elif not cfg.d_ich_m >= cfg.d0_m:
        bad("d_ich_m", f"must be >= d0_m ({cfg.d0_m}), got {cfg.d_ich_m}")
    if cfg.power_level not in RadioProfile().currents_ma:
        bad("power_level", f"unknown power level {cfg.power_level!r}; expected one of "
                           f"{sorted(RadioProfile().currents_ma)}")
    if not cfg.dr_bps > 0:
        bad("dr_bps", f"must be > 0, got {cfg.dr_bps}")
    if cfg.t0_seconds < 0:
        bad("t0_seconds", f"must be >= 0, got {cfg.t0_seconds}")
    if cfg.v_volts <= 0:
        bad("v_volts", f"must be > 0, got {cfg.v_volts}")
    if cfg.i0_amps < 0:
        bad("i0_amps", f"must be >= 0, got {cfg.i0_amps}")

    n = cfg.n_cms if isinstance(cfg.n_cms, int) and cfg.n_cms >= 1 else None
    n_mal = 0
    if isinstance(cfg.malicious, bool):
        bad("malicious", "must be a count or a list of CM ids")
    elif isinstance(cfg.malicious, int):
        n_mal = cfg.malicious
        if cfg.malicious < 0 or (n is not None and cfg.malicious > n):
            bad("malicious", f"count must be in 0..|N|, got {cfg.malicious}")
    elif isinstance(cfg.malicious, tuple):
        n_mal = len(cfg.malicious)
        if len(set(cfg.malicious)) != len(cfg.malicious):
            bad("malicious", "duplicate CM ids")
        if n is not None and any(not isinstance(i, int) or not 1 <= i <= n for i in cfg.malicious):
            bad("malicious", f"ids must be integers in 1..{n}")
    else:
        bad("malicious", "must be a count or a list of CM ids")

    if not 0.0 <= cfg.hw_fault_fraction <= 1.0:
        bad("hw_fault_fraction", f"must be in [0, 1], got {cfg.hw_fault_fraction}")
    n_faulty = 0
    if cfg.fault_ids is not None:
        n_faulty = len(cfg.fault_ids)
        if len(set(cfg.fault_ids)) != n_faulty:
            bad("fault_ids", "duplicate CM ids")
        if n is not None and any(not isinstance(i, int) or not 1 <= i <= n for i in cfg.fault_ids):
            bad("fault_ids", f"ids must be integers in 1..{n}")
        if isinstance(cfg.malicious, tuple) and set(cfg.malicious) & set(cfg.fault_ids):
            bad("fault_ids", "a CM cannot be both malicious and faulty")
    elif n is not None:
        n_faulty = fault_count(n, cfg.hw_fault_fraction)
    if n is not None and n_mal + n_faulty > n:
        bad("malicious", f"{n_mal} malicious + {n_faulty} faulty CMs exceed |N|={n}")
    if cfg.fault_mode not in FAULT_MODES:
        bad("fault_mode", f"must be one of {FAULT_MODES}, got {cfg.fault_mode!r}")
    if not 0.0 < cfg.p_drop <= 1.0:
        bad("p_drop", f"must be in (0, 1], got {cfg.p_drop}")
    if not cfg.gamma > 0:
        bad("gamma", f"must be > 0, got {cfg.gamma}")
    if cfg.shadowing_mode not in SHADOWING_MODES:
        bad("shadowing_mode", f"must be one of {SHADOWING_MODES}, got {cfg.shadowing_mode!r}")
    if cfg.punishment_gain < 0:
        bad("punishment_gain", f"must be >= 0, got {cfg.punishment_gain}")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or not 0 <= cfg.seed < 2**64:
        bad("seed", f"must be an unsigned 64-bit integer, got {cfg.seed!r}")
    if not isinstance(cfg.run_index, int) or cfg.run_index < 0:
        bad("run_index", f"must be an integer >= 0, got {cfg.run_index!r}")
    return p


def fault_count(n_cms: int, fraction: float) -> int:
    # round half up: 0.2 * 10 -> 2, 0.25 * 10 -> 3
    return max(0, int(math.floor(fraction * n_cms + 0.5)))


_FIELD_NAMES = {f.name for f in fields(SimConfig)}


class _Loader(yaml.SafeLoader):
    """Safe loader where only true/false are booleans, so ``env_name: ON`` stays a string."""


_Loader.yaml_implicit_resolvers = {
    key: [(tag, rx) for tag, rx in resolvers if tag != "tag:yaml.org,2002:bool"]
    for key, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver("tag:yaml.org,2002:bool", re.compile(r"^(?:true|True|TRUE|false|False|FALSE)$"),
                              list("tTfF"))


def parse_malicious(text: str):
    """``"2"`` -> 2, ``"3,7"`` -> (3, 7)."""
    text = text.strip()
    if "," in text or text.startswith("["):
        return tuple(int(t) for t in text.strip("[]").split(",") if t.strip())
    return int(text)


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> SimConfig:
    """Build a validated config from an optional file plus overrides.

    Overrides win over file values, which win over defaults.
    """
    values: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.load(fh, Loader=_Loader)
        except OSError as exc:
            raise ConfigError([("config", f"cannot read {path}: {exc.strerror}")]) from exc
        except yaml.YAMLError as exc:
            raise ConfigError([("config", f"cannot parse {path}: {exc}")]) from exc
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError([("config", f"{path} must contain a flat key-value mapping")])
        values.update(data)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})

    unknown = sorted(set(values) - _FIELD_NAMES)
    if unknown:
        raise ConfigError([(k, "unknown configuration key") for k in unknown])
    nested = [k for k, v in values.items() if isinstance(v, dict) and k != "env_params"]
    if nested:
        raise ConfigError([(k, "nested values are not allowed") for k in nested])
    if isinstance(values.get("malicious"), str):
        try:
            values["malicious"] = parse_malicious(values["malicious"])
        except ValueError:
            raise ConfigError([("malicious", f"cannot parse {values['malicious']!r}")])
    for key in ("c_factor", "eb_joules", "alpha", "beta", "d_ich_m", "d0_m", "pl_f_db",
                "hw_fault_fraction", "p_drop", "gamma", "punishment_gain", "i0_amps",
                "t0_seconds", "dr_bps", "v_volts"):
        if isinstance(values.get(key), int) and not isinstance(values.get(key), bool):
            values[key] = float(values[key])
    return SimConfig(**values)


def seed_from_env(default: int = 0) -> int:
    raw = os.environ.get("SIM_SEED")
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError([("SIM_SEED", f"not an integer: {raw!r}")])
