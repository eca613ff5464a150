import csv
import json

import pytest

from swiftcontract import bench, cli


@pytest.fixture(scope="module")
def set1_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("bench")
    code = cli.main([
        "bench", "--suite", "set1", "--samples", "1", "--workers", "2", "--levels", "050",
        "--out-csv", str(d / "r.csv"), "--out-json", str(d / "r.json"),
    ])
    assert code == 0
    with open(d / "r.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows, json.loads((d / "r.json").read_text())


def test_one_row_per_engine_and_pairing(set1_run):
    rows, _ = set1_run
    assert len(rows) == 2 * 3
    assert list(rows[0]) == bench.CSV_COLUMNS
    assert {r["engine"] for r in rows} == {"baseline", "swift"}
    assert {(r["input_x"], r["input_y"]) for r in rows} == {
        ("set1/A050", "set1/B050"), ("set1/B050", "set1/B050"), ("set1/A050", "set1/A050"),
    }
    assert {r["cmodes"] for r in rows} == {"1,2/0,1"}
    assert {r["workers"] for r in rows} == {"2"}


def test_csv_and_json_agree(set1_run):
    rows, doc = set1_run
    assert len(doc["rows"]) == len(rows)
    for c, j in zip(rows, doc["rows"]):
        assert list(j) == bench.CSV_COLUMNS
        for col in bench.CSV_COLUMNS:
            assert c[col] == str(j[col])


def test_stage_times_cover_total(set1_run):
    rows, _ = set1_run
    for r in rows:
        stages = float(r["processing_s"]) + float(r["contraction_s"]) + float(r["writeback_s"])
        assert stages <= float(r["total_s"])
        assert stages >= 0.9 * float(r["total_s"])


def test_aggregate_block(set1_run):
    rows, doc = set1_run
    agg = doc["aggregate"]
    assert set(agg) == {"set1/AxB050", "set1/BxB050", "set1/AxA050"}
    for label, block in agg.items():
        assert block["speedup"]["samples"] == 1
        assert block["swift_growth_events"] == 0
        assert block["swift_max_load_factor"] <= 1.0
    r = {(x["engine"], x["input_x"], x["input_y"]): float(x["total_s"]) for x in rows}
    want = r[("baseline", "set1/A050", "set1/B050")] / r[("swift", "set1/A050", "set1/B050")]
    assert agg["set1/AxB050"]["speedup"]["mean"] == pytest.approx(want)


def test_engines_agree_on_output_size(set1_run):
    rows, _ = set1_run
    by_pair = {}
    for r in rows:
        by_pair.setdefault((r["input_x"], r["input_y"]), set()).add(r["nnz_z"])
    assert all(len(v) == 1 for v in by_pair.values())


def test_pairings():
    ps = bench.set_pairings("set2", ("100",))
    assert [p.label for p in ps] == ["set2/AxB100", "set2/BxB100", "set2/AxA100"]
    p = bench.imbalance_pairings(["2190"])[0]
    s = p.swapped()
    assert (s.x, s.y, s.cmodes_x, s.cmodes_y) == (p.y, p.x, p.cmodes_y, p.cmodes_x)
    for tag in bench.IMBALANCE_PAIRS:
        p = bench.imbalance_pairings([tag])[0]
        for a, b in zip(p.cmodes_x, p.cmodes_y):
            assert p.x.shape[a] == p.y.shape[b]


def test_imbalance_smoke():
    report = bench.bench_imbalance(samples=1, workers=2, tags=["2163"])
    assert len(report.rows) == 4
    block = report.aggregate["set3/AxB2163"]
    assert set(block) == {"baseline", "swift"}
    assert block["swift"]["swap_ratio"] > 0


def test_grouping_scaling_smoke():
    out = bench.grouping_scaling((2000, 4000), samples=1)
    assert set(out) == {2000, 4000}
    assert all(v["group_s"] > 0 and v["sort_s"] > 0 for v in out.values())
