"""Derived metrics and file export/import of simulation results."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .config import SimConfig
from .engine import (
    Classification,
    CmRound,
    Designation,
    FaultMode,
    RoundRecord,
    Scenario,
    SimResult,
)
from .errors import UsageError
from .game import ChAction, CmAction

CSV_COLUMNS = ("rd", "cm_id", "ch_action", "cm_action", "forwarded", "rl", "xi_joules",
               "utility", "norm_utility", "energy_j")
FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class MetricsBundle:
    dt_series: Tuple[float, ...]
    per_cm_norm_utils: Dict[int, Optional[float]]  # percent
    pkt_counts: Dict[str, int]
    lost_power_joules: float
    equilibrium_round: Optional[int]
    wall_clock_seconds: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "dt_series": list(self.dt_series),
            "per_cm_norm_utils": {str(k): v for k, v in self.per_cm_norm_utils.items()},
            "pkt_counts": dict(self.pkt_counts),
            "lost_power_joules": self.lost_power_joules,
            "equilibrium_round": self.equilibrium_round,
            "wall_clock_seconds": self.wall_clock_seconds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsBundle":
        return cls(
            dt_series=tuple(data["dt_series"]),
            per_cm_norm_utils={int(k): v for k, v in data["per_cm_norm_utils"].items()},
            pkt_counts=dict(data["pkt_counts"]),
            lost_power_joules=data["lost_power_joules"],
            equilibrium_round=data["equilibrium_round"],
            wall_clock_seconds=data["wall_clock_seconds"],
        )


def normalize_dt(raw, optimum, floor=0.0) -> np.ndarray:
    """Map per-round DT onto [0, 1] between ``floor`` (0) and ``optimum`` (1).

    With the default floor this is the plain ratio ``raw / optimum``.
    """
    raw = np.asarray(raw, dtype=float)
    optimum = np.broadcast_to(np.asarray(optimum, dtype=float), raw.shape)
    floor = np.broadcast_to(np.asarray(floor, dtype=float), raw.shape)
    span = optimum - floor
    if np.any(span <= 0):
        raise ValueError("optimum DT must exceed the floor (and be > 0 for a plain ratio)")
    return np.clip((raw - floor) / span, 0.0, 1.0)


def dt_series(result: SimResult) -> np.ndarray:
    raw = [r.utility_sum for r in result.records]
    opt = [sum(c.u_opt for c in r.cms) for r in result.records]
    floor = [sum(c.u_floor for c in r.cms) for r in result.records]
    if not raw:
        return np.zeros(0)
    return normalize_dt(raw, opt, floor)


def equilibrium_start(result: SimResult) -> int:
    return result.equilibrium_round or result.ch_equilibrium_round or 1


def per_cm_norm_utils(result: SimResult, start: Optional[int] = None) -> Dict[int, Optional[float]]:
    """Per-CM utility over rounds ``start..end`` as a percentage of the
    best-catalogue-link optimum with the same draws."""
    if start is None:
        start = equilibrium_start(result)
    out: Dict[int, Optional[float]] = {}
    for cm_id in range(1, result.config.n_cms + 1):
        window = [r.cms[cm_id - 1] for r in result.records if r.rd >= start]
        ref = sum(c.u_ref for c in window)
        out[cm_id] = 100.0 * sum(c.utility for c in window) / ref if window and ref > 0 else None
    return out


def cluster_norm_utility(result: SimResult, start: Optional[int] = None) -> Optional[float]:
    """Mean per-CM normalized utility (percent), leaving out hardware-faulty CMs."""
    values = [v for cm_id, v in per_cm_norm_utils(result, start).items()
              if cm_id not in result.faults and v is not None]
    return sum(values) / len(values) if values else None


def wasted_energy(result: SimResult) -> float:
    """Energy spent on retransmissions, forced wake time and surplus packets."""
    return sum(c.lost_j for r in result.records for c in r.cms)


def delivered_packets(result: SimResult) -> int:
    """Packets delivered and acknowledged (granted the beacon) over the run."""
    return sum(c.acked_packets for r in result.records for c in r.cms)


def lost_power(result: SimResult, reference: SimResult) -> float:
    """Extra wasted energy of ``result`` over ``reference`` on the same config."""
    if result.config != reference.config:
        raise UsageError("lost_power needs two results from the same configuration and seed")
    return wasted_energy(result) - wasted_energy(reference)


def compute_metrics(result: SimResult) -> MetricsBundle:
    return MetricsBundle(
        dt_series=tuple(float(x) for x in dt_series(result)),
        per_cm_norm_utils=per_cm_norm_utils(result),
        pkt_counts={result.scenario.value: delivered_packets(result)},
        lost_power_joules=wasted_energy(result),
        equilibrium_round=result.equilibrium_round,
        wall_clock_seconds=result.wall_clock_seconds,
    )


# ---------------------------------------------------------------------------
# files


def result_filename(result_or_config, scenario: Union[Scenario, str] = Scenario.REPEATED,
                    fmt: str = "csv") -> str:
    if isinstance(result_or_config, SimResult):
        cfg, scenario = result_or_config.config, result_or_config.scenario
    else:
        cfg = result_or_config
    name = Scenario(scenario).value
    return f"{name}_{cfg.env_name}_{cfg.doi_label}_{cfg.seed}.{fmt}"


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def _pct(x: Optional[float]) -> str:
    return "" if x is None else f"{100.0 * x:.4f}"


def _csv_text(result: SimResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for record in result.records:
        for c in record.cms:
            w.writerow([c.rd, c.cm_id, c.ch_action.value, c.cm_action.value, c.forwarded,
                        _fmt(c.rl), _fmt(c.xi_joules), _fmt(c.utility), _pct(c.norm_utility),
                        _fmt(c.energy_j)])
    return buf.getvalue()


def _bundle_csv_text(bundle: MetricsBundle) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("rd", "dt_norm"))
    for rd, value in enumerate(bundle.dt_series, start=1):
        w.writerow((rd, _fmt(value)))
    return buf.getvalue()


def _cm_to_dict(c: CmRound) -> dict:
    return {
        "rd": c.rd, "cm_id": c.cm_id, "ch_action": c.ch_action.value,
        "cm_action": c.cm_action.value, "forwarded": c.forwarded, "rl": c.rl,
        "rssi": c.rssi, "xi_joules": c.xi_joules, "utility": c.utility, "u_opt": c.u_opt,
        "u_floor": c.u_floor, "u_ref": c.u_ref, "energy_j": c.energy_j, "tx_j": c.tx_j,
        "retx_j": c.retx_j, "awake_j": c.awake_j, "excess_j": c.excess_j,
        "acked_packets": c.acked_packets,
    }


def _cm_from_dict(d: dict) -> CmRound:
    d = dict(d)
    d["ch_action"] = ChAction(d["ch_action"])
    d["cm_action"] = CmAction(d["cm_action"])
    return CmRound(**d)


def _jsonl_text(result: SimResult) -> str:
    header = {
        "type": "run",
        "scenario": result.scenario.value,
        "config": result.config.to_dict(),
        "malicious_ids": list(result.malicious_ids),
        "faults": {str(k): v.value for k, v in result.faults.items()},
        "hwl": list(result.hwl),
        "classifications": {str(k): v.value for k, v in result.classifications.items()},
        "designations": {str(k): v.value for k, v in result.designations.items()},
        "equilibrium_round": result.equilibrium_round,
        "ch_equilibrium_round": result.ch_equilibrium_round,
        "wall_clock_seconds": result.wall_clock_seconds,
    }
    lines = [json.dumps(header, allow_nan=False)]
    for record in result.records:
        lines.append(json.dumps({
            "type": "round",
            "rd": record.rd,
            "dt_running": record.dt_running,
            "cms": [_cm_to_dict(c) for c in record.cms],
        }, allow_nan=False))
    return "\n".join(lines) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def export(obj: Union[SimResult, MetricsBundle], fmt: str, path) -> Path:
    """Write a result or metrics bundle as CSV or JSON lines; returns the path."""
    if fmt not in FORMATS:
        raise UsageError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if isinstance(obj, SimResult):
        text = _csv_text(obj) if fmt == "csv" else _jsonl_text(obj)
    elif isinstance(obj, MetricsBundle):
        if fmt == "csv":
            text = _bundle_csv_text(obj)
        else:
            text = json.dumps({"type": "metrics", **obj.to_dict()}, allow_nan=False) + "\n"
    else:
        raise UsageError(f"cannot export {type(obj).__name__}")
    _write_atomic(path, text)
    return path


def read_jsonl(path) -> Union[SimResult, MetricsBundle]:
    """Load a file written by :func:`export` in ``jsonl`` format."""
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    head = lines[0]
    if head.get("type") == "metrics":
        return MetricsBundle.from_dict(head)
    if head.get("type") != "run":
        raise ValueError(f"{path} does not start with a run header")
    cfg = dict(head["config"])
    for key in ("malicious", "fault_ids"):
        if isinstance(cfg.get(key), list):
            cfg[key] = tuple(cfg[key])
    config = SimConfig(**cfg)
    records = [
        RoundRecord(rd=line["rd"], cms=tuple(_cm_from_dict(c) for c in line["cms"]),
                    dt_running=line["dt_running"])
        for line in lines[1:]
    ]
    return SimResult(
        config=config,
        scenario=Scenario(head["scenario"]),
        records=records,
        malicious_ids=tuple(head["malicious_ids"]),
        faults={int(k): FaultMode(v) for k, v in head["faults"].items()},
        hwl=tuple(head["hwl"]),
        classifications={int(k): Classification(v) for k, v in head["classifications"].items()},
        designations={int(k): Designation(v) for k, v in head["designations"].items()},
        equilibrium_round=head["equilibrium_round"],
        ch_equilibrium_round=head["ch_equilibrium_round"],
        wall_clock_seconds=head["wall_clock_seconds"],
    )


def empty_result(config: SimConfig, scenario: Scenario = Scenario.REPEATED) -> SimResult:
    return SimResult(config=config, scenario=Scenario(scenario), records=[], malicious_ids=(),
                     faults={}, hwl=(), classifications={}, designations={},
                     equilibrium_round=None, ch_equilibrium_round=None)
