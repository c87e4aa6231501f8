import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsngame.config import SimConfig
from wsngame.engine import Scenario, run_simulation, simulate
from wsngame.errors import UsageError
from wsngame.metrics import (
    CSV_COLUMNS,
    MetricsBundle,
    compute_metrics,
    empty_result,
    export,
    lost_power,
    normalize_dt,
    read_jsonl,
    result_filename,
)
from wsngame.baselines import run_no_defense


def test_normalize_dt_examples():
    opt = np.array([4.0, 5.0, 6.0])
    assert list(normalize_dt(opt, opt)) == [1.0, 1.0, 1.0]
    assert list(normalize_dt(np.zeros(3), opt)) == [0.0, 0.0, 0.0]
    assert list(normalize_dt(opt / 2, opt)) == [0.5, 0.5, 0.5]


def test_normalize_dt_domain_error():
    with pytest.raises(ValueError):
        normalize_dt([1.0], [0.0])
    with pytest.raises(ValueError):
        normalize_dt([1.0], [2.0], floor=[3.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20), st.floats(0.1, 1e3),
       st.floats(-1e3, 0))
def test_normalized_values_in_unit_interval(raw, opt, floor):
    out = normalize_dt(raw, opt, floor)
    assert np.all((out >= 0) & (out <= 1))


def test_bundle_shape():
    r = run_simulation(SimConfig(hw_fault_fraction=0.2, seed=2))
    b = compute_metrics(r)
    assert len(b.dt_series) == 110
    assert all(0 <= x <= 1 for x in b.dt_series)
    over = [i for i, m in r.faults.items() if m.value == "OverTransmit"][0]
    for cm_id, value in b.per_cm_norm_utils.items():
        if cm_id == over:
            assert value > 100
        elif cm_id not in r.faults:
            assert value <= 100 + 1e-9


def test_exported_utilities_reproduce_dt(tmp_path):
    r = run_simulation(SimConfig(seed=4))
    path = export(r, "csv", tmp_path / "r.csv")
    rows = path.read_text().splitlines()[1:]
    total = sum(float(line.split(",")[7]) for line in rows)
    assert total / r.n_rounds == pytest.approx(r.dt(), rel=1e-9)


def test_lost_power_examples():
    cfg = SimConfig()
    assert lost_power(run_no_defense(cfg), run_simulation(cfg)) > 0
    zero = SimConfig(malicious=0)
    assert lost_power(run_no_defense(zero), run_simulation(zero)) == 0
    with pytest.raises(UsageError):
        lost_power(run_no_defense(cfg), run_simulation(SimConfig(seed=1)))


def test_lost_power_grows_with_cluster_size():
    values = [lost_power(run_no_defense(c), run_simulation(c))
              for c in (SimConfig(n_cms=n, c_factor=n + 1.0) for n in (10, 15, 20))]
    assert values[0] < values[1] < values[2]


def test_empty_result_csv_is_header_only(tmp_path):
    path = export(empty_result(SimConfig()), "csv", tmp_path / "e.csv")
    assert path.read_bytes() == (",".join(CSV_COLUMNS) + "\n").encode()


def test_default_csv_rows_and_line_endings(tmp_path):
    path = export(run_simulation(SimConfig()), "csv", tmp_path / "d.csv")
    data = path.read_bytes()
    assert b"\r" not in data
    lines = data.decode("utf-8").splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) - 1 == 1100
    # percentages carry 4 decimals
    assert len(lines[1].split(",")[8].split(".")[1]) == 4


@settings(max_examples=8)
@given(st.integers(0, 2**40), st.sampled_from(list(Scenario)), st.sampled_from([0.0, 0.2]))
def test_jsonl_round_trip(tmp_path_factory, seed, scenario, frac):
    r = simulate(SimConfig(seed=seed, hw_fault_fraction=frac, isotropic=False), scenario)
    path = export(r, "jsonl", tmp_path_factory.mktemp("rt") / "r.jsonl")
    back = read_jsonl(path)
    assert back == r
    assert compute_metrics(back) == compute_metrics(r)
    assert back.wall_clock_seconds == r.wall_clock_seconds


def test_bundle_round_trip(tmp_path):
    b = compute_metrics(run_simulation(SimConfig(seed=8)))
    back = read_jsonl(export(b, "jsonl", tmp_path / "b.jsonl"))
    assert isinstance(back, MetricsBundle) and back == b
    assert (tmp_path / "b.jsonl").read_text().count("\n") == 1
    csv_text = export(b, "csv", tmp_path / "b.csv").read_text()
    assert csv_text.splitlines()[0] == "rd,dt_norm"


def test_jsonl_one_record_per_round(tmp_path):
    r = run_simulation(SimConfig())
    lines = export(r, "jsonl", tmp_path / "r.jsonl").read_text().splitlines()
    assert len(lines) == 1 + 110
    assert json.loads(lines[1])["rd"] == 1


def test_unwritable_path_names_the_path(tmp_path):
    target = tmp_path / "missing" / "r.csv"
    with pytest.raises(OSError, match="missing"):
        export(run_simulation(SimConfig()), "csv", target)
    assert not list(tmp_path.iterdir())


def test_unknown_format(tmp_path):
    with pytest.raises(UsageError):
        export(run_simulation(SimConfig()), "xml", tmp_path / "r.xml")


def test_file_naming():
    cfg = SimConfig(seed=42, env_name="IN", isotropic=False, doi_index=2)
    assert result_filename(cfg, Scenario.NO_DEFENSE) == "NoDefense_IN_DOI2_42.csv"
    assert result_filename(run_simulation(SimConfig()), fmt="jsonl") == "Repeated_UL_iso_0.jsonl"
