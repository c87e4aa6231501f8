"""Command-line entry point: ``wsngame run | compare | sweep``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .config import SimConfig, load_config, parse_malicious, seed_from_env
from .engine import Scenario, SimResult, simulate
from .errors import ConfigError, UsageError
from .metrics import (
    FORMATS,
    _write_atomic,
    cluster_norm_utility,
    compute_metrics,
    export,
    result_filename,
)
from .radio import DOI_VALUES, ENVIRONMENTS

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

SWEEP_AXES = ("env", "doi", "n_cms", "isotropy")
N_CMS_SWEEP = (10, 15, 20)

SUMMARY_COLUMNS = ("point", "scenario", "env", "doi_label", "n_cms", "seed", "equilibrium_round",
                   "final_dt_norm", "mean_dt_norm", "dt", "norm_utility_pct", "pkt_count",
                   "lost_power_joules", "file")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat YAML key: value file")
    p.add_argument("--seed", type=int, help="master seed (falls back to $SIM_SEED)")
    p.add_argument("--env", dest="env_name", metavar="NAME",
                   help=f"environment, one of {', '.join(ENVIRONMENTS)}")
    p.add_argument("--doi-index", type=int, metavar="1..6")
    iso = p.add_mutually_exclusive_group()
    iso.add_argument("--isotropic", dest="isotropic", action="store_true", default=None)
    iso.add_argument("--non-isotropic", dest="isotropic", action="store_false")
    p.add_argument("--malicious", metavar="N|id,id", help="attacker count or explicit ids")
    p.add_argument("--hw-fault-fraction", type=float, metavar="F")
    p.add_argument("--out", default="out", metavar="DIR")
    p.add_argument("--format", default="csv", choices=FORMATS)
    p.add_argument("--jobs", type=int, default=None, metavar="N",
                   help="worker processes (default: logical cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsngame",
        description="Repeated-game defense against selective forwarding in a WSN cluster",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="one repeated-game run"))
    _add_common(sub.add_parser("compare", help="repeated game vs one-shot games and no defense"))
    sweep = sub.add_parser("sweep", help="run a grid of configurations")
    _add_common(sweep)
    sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--scenarios", default=Scenario.REPEATED.value,
                       help="comma-separated scenario names")
    return parser


def config_from_args(args: argparse.Namespace) -> SimConfig:
    overrides = {
        "env_name": args.env_name,
        "doi_index": args.doi_index,
        "isotropic": args.isotropic,
        "hw_fault_fraction": args.hw_fault_fraction,
    }
    if args.malicious is not None:
        try:
            overrides["malicious"] = parse_malicious(args.malicious)
        except ValueError:
            raise ConfigError([("malicious", f"cannot parse {args.malicious!r}")]) from None
    if args.seed is not None:
        overrides["seed"] = args.seed
    elif os.environ.get("SIM_SEED"):
        overrides["seed"] = seed_from_env()
    return load_config(args.config, overrides)


def _scenarios(text: str) -> List[Scenario]:
    out = []
    for name in (t.strip() for t in text.split(",")):
        if not name:
            continue
        try:
            out.append(Scenario(name))
        except ValueError:
            raise UsageError(f"unknown scenario {name!r}; expected one of "
                             f"{[s.value for s in Scenario]}") from None
    if not out:
        raise UsageError("no scenarios given")
    return out


def sweep_points(config: SimConfig, axis: str) -> List[Tuple[str, SimConfig]]:
    if axis == "env":
        return [(name, config.replace(env_name=name, env_params=None)) for name in ENVIRONMENTS]
    if axis == "doi":
        points = [("iso", config.replace(isotropic=True))]
        points += [(f"doi{k}", config.replace(isotropic=False, doi_index=k, doi_value=None))
                   for k in range(1, len(DOI_VALUES) + 1)]
        return points
    if axis == "isotropy":
        return [("iso", config.replace(isotropic=True)),
                ("non-iso", config.replace(isotropic=False))]
    if axis == "n_cms":
        # keep c just above |N| so every forgiveness round fits in the run
        return [(f"n{n}", config.replace(n_cms=n, c_factor=float(n + 1))) for n in N_CMS_SWEEP]
    raise UsageError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def _summary_row(point: str, result: SimResult, file_label: str) -> dict:
    bundle = compute_metrics(result)
    cfg = result.config
    series = bundle.dt_series
    util = cluster_norm_utility(result)
    return {
        "point": point,
        "scenario": result.scenario.value,
        "env": cfg.env_name,
        "doi_label": cfg.doi_label,
        "n_cms": cfg.n_cms,
        "seed": cfg.seed,
        "equilibrium_round": "" if result.equilibrium_round is None else result.equilibrium_round,
        "final_dt_norm": repr(series[-1]) if series else "",
        "mean_dt_norm": repr(sum(series) / len(series)) if series else "",
        "dt": repr(result.dt()) if result.records else "",
        "norm_utility_pct": "" if util is None else f"{util:.4f}",
        "pkt_count": sum(bundle.pkt_counts.values()),
        "lost_power_joules": repr(bundle.lost_power_joules),
        "file": file_label,
    }


def _table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def run_point(point: str, config: SimConfig, scenario: Scenario, fmt: str, out_dir: str) -> dict:
    """Simulate and export one point; reuse it if a previous sweep finished it."""
    # one directory per point keeps the per-run file names collision free
    out = Path(out_dir) / point
    os.makedirs(out, exist_ok=True)
    path = out / result_filename(config, scenario, fmt)
    done = path.with_name(path.name + ".summary.json")
    if path.exists() and done.exists():
        with open(done, encoding="utf-8") as fh:
            return json.load(fh)
    result = simulate(config, scenario)
    export(result, fmt, path)
    row = _summary_row(point, result, f"{point}/{path.name}")
    _write_atomic(done, json.dumps(row) + "\n")
    return row


def _print_summary(result: SimResult, path: Path) -> None:
    eq = result.equilibrium_round
    print(f"scenario          {result.scenario.value}")
    print(f"equilibrium round {eq if eq is not None else 'not reached'}")
    print(f"final DT          {result.records[-1].dt_running:.6f}" if result.records else "final DT -")
    print(f"HWL               {list(result.hwl)}")
    print(f"wrote             {path}")


def cmd_run(config: SimConfig, fmt: str, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    result = simulate(config, Scenario.REPEATED)
    path = export(result, fmt, Path(out_dir) / result_filename(result, fmt=fmt))
    _print_summary(result, path)
    return EXIT_OK


def cmd_compare(config: SimConfig, fmt: str, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    results = {}
    rows = []
    for scenario in Scenario:
        result = simulate(config, scenario)
        path = export(result, fmt, Path(out_dir) / result_filename(result, fmt=fmt))
        results[scenario] = result
        rows.append(_summary_row(scenario.value, result, path.name))
    stem = f"compare_{config.env_name}_{config.doi_label}_{config.seed}"
    _write_atomic(Path(out_dir) / f"{stem}.csv", _table(rows, SUMMARY_COLUMNS))

    series = {s: compute_metrics(r).dt_series for s, r in results.items()}
    joined = [{"rd": rd, **{s.value: repr(series[s][rd - 1]) for s in Scenario}}
              for rd in range(1, config.n_rounds + 1)]
    _write_atomic(Path(out_dir) / f"{stem}_dt.csv",
                  _table(joined, ["rd"] + [s.value for s in Scenario]))

    width = max(len(s.value) for s in Scenario)
    print(f"{'scenario':<{width}}  {'final DT':>9}  {'mean DT':>9}  {'packets':>8}  {'lost J':>10}")
    for row in rows:
        print(f"{row['scenario']:<{width}}  {float(row['final_dt_norm']):9.4f}  "
              f"{float(row['mean_dt_norm']):9.4f}  {row['pkt_count']:8d}  "
              f"{float(row['lost_power_joules']):10.4e}")
    return EXIT_OK


def cmd_sweep(config: SimConfig, axis: str, scenarios: Sequence[Scenario], fmt: str,
              out_dir: str, jobs: Optional[int] = None) -> int:
    points = sweep_points(config, axis)
    os.makedirs(out_dir, exist_ok=True)
    tasks = [(name, cfg, s, fmt, out_dir) for name, cfg in points for s in scenarios]
    jobs = jobs or os.cpu_count() or 1
    rows: List[Optional[dict]] = [None] * len(tasks)
    failures = 0
    if jobs == 1:
        for k, task in enumerate(tasks):
            try:
                rows[k] = run_point(*task)
            except (OSError, ValueError) as exc:
                failures += 1
                print(f"error: point {task[0]}/{task[2].value}: {exc}", file=sys.stderr)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_point, *task) for task in tasks]
            for k, fut in enumerate(futures):
                try:
                    rows[k] = fut.result()
                except Exception as exc:  # worker failures are reported, not fatal
                    failures += 1
                    print(f"error: point {tasks[k][0]}/{tasks[k][2].value}: {exc}", file=sys.stderr)
    done = [r for r in rows if r is not None]
    _write_atomic(Path(out_dir) / f"sweep_{axis}_{config.seed}.csv", _table(done, SUMMARY_COLUMNS))
    for row in done:
        print(f"{row['point']:<8} {row['scenario']:<14} DT {float(row['final_dt_norm']):.4f}  "
              f"utility {row['norm_utility_pct'] or '-':>9}%  lost {float(row['lost_power_joules']):.4e} J")
    return EXIT_OK if failures == 0 else EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs is not None and args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        config = config_from_args(args)
        if args.command == "run":
            return cmd_run(config, args.format, args.out)
        if args.command == "compare":
            return cmd_compare(config, args.format, args.out)
        return cmd_sweep(config, args.axis, _scenarios(args.scenarios), args.format,
                         args.out, args.jobs)
    except ConfigError as exc:
        for name, msg in exc.violations:
            print(f"config error: {name}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
