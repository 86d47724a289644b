import json

import pytest

from spotindex.cli import main

from conftest import MARKET_ROWS

CATALOG_CSV = (
    "id,instance_type,zone,region,family,cpu_capacity,mem_capacity,on_demand_price\n"
    + "".join(
        f"{vm},{vm},us-east-1a,us-east-1,{family},{cpu},{mem},{od}\n"
        for vm, family, cpu, mem, od, _, _ in MARKET_ROWS
    )
)

MARKETS_JSON = {
    "markets": [
        {"vm_id": vm, "mean": mean, "stddev": std, "duration": 3600}
        for vm, _, _, _, _, mean, std in MARKET_ROWS
    ]
}

JOB_JSON = {
    "name": "cli-job",
    "phases": [[600, 4.0, 16.0]],
    "mem_footprint": 4.0,
    "reference_capacity": [8.0, 32.0],
}


@pytest.fixture()
def workspace(tmp_path):
    (tmp_path / "catalog.csv").write_text(CATALOG_CSV)
    (tmp_path / "markets.json").write_text(json.dumps(MARKETS_JSON))
    (tmp_path / "job.json").write_text(json.dumps(JOB_JSON))
    return tmp_path


def run(argv):
    return main([str(a) for a in argv])


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as err:
        run(["--version"])
    assert err.value.code == 0
    assert "spotindex" in capsys.readouterr().out


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        run(["simulate", "--policy", "greedy"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        run(["synth"])  # --spec and --out missing
    assert err.value.code == 2


def test_synth_deterministic_and_manifested(workspace):
    out1 = workspace / "t1"
    out2 = workspace / "t2"
    for out in (out1, out2):
        assert run(
            ["synth", "--spec", workspace / "markets.json", "--seed", 7, "--out", out]
        ) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert names == sorted(p.name for p in out2.iterdir())
    for name in names:
        if name == "manifest.json":
            continue
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["version"]
    assert manifest["config"]["spec"].endswith("markets.json")
    assert set(manifest["traces"]) == {row[0] for row in MARKET_ROWS}


def test_ingest_round_trip(workspace):
    raw = workspace / "raw"
    raw.mkdir()
    (raw / "feed.csv").write_text(
        "timestamp,vm_id,price\n0,m4.large,4.5\n60,m4.large,4.5\n120,m4.large,5.0\n"
    )
    out = workspace / "canon"
    assert run(
        ["ingest", "--in", raw, "--catalog", workspace / "catalog.csv", "--out", out]
    ) == 0
    lines = (out / "m4.large.jsonl").read_text().splitlines()
    # unchanged consecutive price collapsed
    assert len(lines) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["traces"]["m4.large"]["points"] == 2


def test_index_csv_output(workspace):
    traces = workspace / "traces"
    run(["synth", "--spec", workspace / "markets.json", "--seed", 1, "--out", traces])
    out = workspace / "index.csv"
    code = run(
        [
            "index",
            "--traces", traces,
            "--catalog", workspace / "catalog.csv",
            "--start", 0,
            "--end", 3600,
            "--period", 300,
            "--out", out,
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# spotindex")
    assert lines[1].startswith("# config:")
    assert lines[2] == "timestamp,value,min,max,n_effective"
    rows = [line.split(",") for line in lines[3:]]
    assert len(rows) == 12
    assert [r[0] for r in rows] == [str(t) for t in range(0, 3600, 300)]
    for r in rows:
        value, low, high, n = float(r[1]), float(r[2]), float(r[3]), int(r[4])
        assert low <= value <= high
        assert n == 4


def test_config_file_mirrors_flags(workspace):
    traces = workspace / "traces"
    run(["synth", "--spec", workspace / "markets.json", "--seed", 1, "--out", traces])
    by_flags = workspace / "flags.csv"
    run(
        [
            "index",
            "--traces", traces,
            "--catalog", workspace / "catalog.csv",
            "--start", 0,
            "--end", 1800,
            "--period", 600,
            "--out", by_flags,
        ]
    )
    config = workspace / "index.json"
    config.write_text(
        json.dumps(
            {
                "traces": str(traces),
                "catalog": str(workspace / "catalog.csv"),
                "start": 0,
                "end": 1800,
                "period": 600,
            }
        )
    )
    by_config = workspace / "config.csv"
    assert run(["index", "--config", config, "--out", by_config]) == 0
    strip = lambda p: [
        line for line in p.read_text().splitlines() if not line.startswith("#")
    ]
    assert strip(by_config) == strip(by_flags)
    # explicit flag wins over the config value
    override = workspace / "override.csv"
    assert run(["index", "--config", config, "--period", 900, "--out", override]) == 0
    assert len(strip(override)) < len(strip(by_config))


def test_config_unknown_key_is_usage_error(workspace):
    config = workspace / "bad.json"
    config.write_text(json.dumps({"tracez": "x"}))
    with pytest.raises(SystemExit) as err:
        run(["index", "--config", config])
    assert err.value.code == 2


def test_simulate_and_report(workspace):
    traces = workspace / "traces"
    run(["synth", "--spec", workspace / "markets.json", "--seed", 5, "--out", traces])
    reports = []
    for policy in ("static", "cost"):
        out = workspace / f"{policy}.json"
        events = workspace / f"{policy}-events.jsonl"
        code = run(
            [
                "simulate",
                "--job", workspace / "job.json",
                "--policy", policy,
                "--traces", traces,
                "--catalog", workspace / "catalog.csv",
                "--epoch", 60,
                "--horizon", 60,
                "--seed", 5,
                "--out", out,
                "--events", events,
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["seed"] == 5
        assert doc["version"]
        assert doc["config"]["policy"] == policy
        body = doc["report"]
        assert body["job"] == "cli-job"
        assert body["cost_vs_on_demand"] is not None
        assert body["total_cost"] > 0
        event_lines = events.read_text().splitlines()
        assert event_lines
        assert all(json.loads(line) for line in event_lines)
        assert len(event_lines) == len(body["events"])
        reports.append(out)

    summary = workspace / "summary.csv"
    assert run(["report", "--in", *reports, "--out", summary]) == 0
    lines = summary.read_text().splitlines()
    header = lines[2].split(",")
    assert header[:3] == ["policy", "job", "total_cost"]
    rows = [line.split(",") for line in lines[3:]]
    assert [r[0] for r in rows] == ["cost", "static"]
    assert all(r[1] == "cli-job" for r in rows)


def test_simulate_rejects_balanced_flags_elsewhere(workspace):
    with pytest.raises(SystemExit) as err:
        run(
            [
                "simulate",
                "--job", workspace / "job.json",
                "--policy", "static",
                "--traces", workspace,
                "--catalog", workspace / "catalog.csv",
                "--sufficiency", "off",
            ]
        )
    assert err.value.code == 2


def test_report_conflicting_jobs(workspace):
    a = workspace / "a.json"
    b = workspace / "b.json"
    a.write_text(json.dumps({"report": {"job": "one", "policy": "static"}}))
    b.write_text(json.dumps({"report": {"job": "two", "policy": "static"}}))
    assert run(["report", "--in", a, b, "--out", workspace / "s.csv"]) == 1
    assert run(["report", "--in", a, b, "--force", "--out", workspace / "s.csv"]) == 0


def test_domain_error_exit_code(workspace):
    empty = workspace / "empty"
    empty.mkdir()
    code = run(
        [
            "simulate",
            "--job", workspace / "job.json",
            "--policy", "static",
            "--traces", empty,
            "--catalog", workspace / "catalog.csv",
        ]
    )
    assert code == 1
