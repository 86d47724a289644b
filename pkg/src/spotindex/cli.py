"""Command line interface.

Subcommands: ingest raw traces to canonical JSONL, sample an index to CSV,
synthesize market traces, simulate a job under a policy, and tabulate
reports. Every flag can also come from a --config JSON file whose keys are
the flag names with dashes as underscores; explicit flags win. Outputs embed
the tool version, the seed, and the effective config. Exit status is 0 on
success, 1 on a domain error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .catalog import Scope, load_catalog
from .errors import ConflictError, SpotIndexError
from .index import index_series
from .policies import POLICIES, build_policy
from .prices import ingest_traces, load_trace_dir, read_trace_records, write_trace_jsonl
from .simulator import (
    JobSpec,
    MigrationModel,
    RunParams,
    normalize_report,
    on_demand_baseline,
    run_simulation,
)
from .synth import SynthMarketSpec, generate_market_suite

log = logging.getLogger(__name__)


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return config


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Fill unset options from the config file, then report the result.

    Every option defaults to None so a config value is distinguishable from
    an explicit flag; built-in defaults are applied by the handlers after
    this merge.
    """
    config = _load_config(args.config)
    known = set(vars(args))
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest == "in":
            dest = "inputs"
        if dest not in known or dest in ("command", "config"):
            parser.error(f"config key {key!r} does not match any {args.command} option")
        if getattr(args, dest) is None:
            setattr(args, dest, value)
    return args


def _effective_config(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "verbose"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or callable(value):
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _require(args, parser, *names):
    for name in names:
        if getattr(args, name) is None:
            parser.error(f"--{name.replace('_', '-')} is required")


def _comma_list(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [part.strip() for part in str(value).split(",") if part.strip()]


def _provenance(args, seed=None) -> dict:
    return {"version": __version__, "seed": seed, "config": _effective_config(args)}


def _write_json(doc: dict, path) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _open_out(path):
    return open(path, "w", newline="") if path is not None else sys.stdout


def _scope_from_args(args) -> Scope | None:
    if args.region is None and args.zone is None and args.family is None:
        return None
    return Scope(region=args.region, zone=args.zone, family=args.family)


def _safe_name(vm_id: str) -> str:
    return vm_id.replace("/", "_")


# command handlers


def cmd_ingest(args, parser) -> int:
    _require(args, parser, "inputs", "catalog", "out")
    catalog = load_catalog(args.catalog)
    paths = []
    for raw in args.inputs:
        p = Path(raw)
        if p.is_dir():
            paths.extend(
                sorted(
                    q
                    for q in p.iterdir()
                    if q.is_file()
                    and q.suffix.lower() in (".csv", ".jsonl", ".json")
                    and q.name != "manifest.json"
                )
            )
        else:
            paths.append(p)
    records = (record for path in paths for record in read_trace_records(path))
    traces = ingest_traces(records, catalog, on_unknown=args.unknown or "warn")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for vm_id, trace in traces.items():
        name = f"{_safe_name(vm_id)}.jsonl"
        write_trace_jsonl(trace, out_dir / name)
        written[vm_id] = {"file": name, "points": len(trace)}
    manifest = _provenance(args)
    manifest["traces"] = written
    _write_json(manifest, out_dir / "manifest.json")
    log.info("ingested %d traces into %s", len(written), out_dir)
    return 0


def cmd_index(args, parser) -> int:
    _require(args, parser, "traces", "catalog", "start", "end")
    catalog = load_catalog(args.catalog)
    traces = load_trace_dir(args.traces, catalog, on_unknown=args.unknown or "warn")
    composition = _comma_list(args.composition) or sorted(traces)
    period = int(args.period) if args.period is not None else 300
    series = index_series(
        traces, catalog, composition, int(args.start), int(args.end), period
    )
    if series.gaps:
        log.warning("index has %d gap samples (first at %d)", len(series.gaps), series.gaps[0])
    fh = _open_out(args.out)
    try:
        fh.write(f"# spotindex {__version__}\n")
        fh.write(f"# config: {json.dumps(_effective_config(args), sort_keys=True)}\n")
        fh.write("timestamp,value,min,max,n_effective\n")
        for s in series.samples:
            fh.write(f"{s.timestamp},{s.value!r},{s.low!r},{s.high!r},{s.n_effective}\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_synth(args, parser) -> int:
    _require(args, parser, "spec", "out")
    with open(args.spec) as fh:
        raw = json.load(fh)
    if isinstance(raw, dict):
        raw = raw.get("markets", raw)
    if not isinstance(raw, list):
        raise ValueError(f"market spec {args.spec} must hold a list of markets")
    specs = [
        SynthMarketSpec(
            vm_id=str(m["vm_id"]),
            mean=float(m["mean"]),
            stddev=float(m["stddev"]),
            change_period=int(m.get("change_period", 60)),
            duration=int(m.get("duration", 3600)),
            volatility_scale=float(m.get("volatility_scale", 1.0)),
            enforce_sample_moments=bool(m.get("enforce_sample_moments", True)),
        )
        for m in raw
    ]
    seed = int(args.seed) if args.seed is not None else 0
    start = int(args.start) if args.start is not None else 0
    warmup = int(args.warmup) if args.warmup is not None else 0
    traces = generate_market_suite(specs, seed=seed, start=start, warmup=warmup)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for vm_id, trace in traces.items():
        name = f"{_safe_name(vm_id)}.jsonl"
        write_trace_jsonl(trace, out_dir / name)
        written[vm_id] = {"file": name, "points": len(trace)}
    manifest = _provenance(args, seed=seed)
    manifest["traces"] = written
    _write_json(manifest, out_dir / "manifest.json")
    log.info("wrote %d synthetic traces into %s", len(written), out_dir)
    return 0


def cmd_simulate(args, parser) -> int:
    _require(args, parser, "job", "policy", "traces", "catalog")
    options = {}
    if args.policy == "balanced":
        if args.sufficiency is not None:
            options["sufficiency"] = args.sufficiency
        if args.target_rule is not None:
            options["target_rule"] = args.target_rule
    elif args.sufficiency is not None or args.target_rule is not None:
        parser.error("--sufficiency and --target-rule only apply to --policy balanced")
    policy = build_policy(args.policy, **options)
    catalog = load_catalog(args.catalog)
    traces = load_trace_dir(args.traces, catalog, on_unknown=args.unknown or "warn")
    with open(args.job) as fh:
        job = JobSpec.from_dict(json.load(fh))
    composition = _comma_list(args.composition) or sorted(traces)
    migration = MigrationModel(
        rate=float(args.migration_rate) if args.migration_rate is not None else 1.0,
        fixed_floor=float(args.migration_floor) if args.migration_floor is not None else 0.0,
        revocation_restart=int(args.restart) if args.restart is not None else 90,
        pin_seconds=float(args.pin_migration) if args.pin_migration is not None else None,
    )
    params = RunParams(
        epoch=int(args.epoch) if args.epoch is not None else 300,
        horizon=int(args.horizon) if args.horizon is not None else 3600,
        sigma_window=int(args.sigma_window) if args.sigma_window is not None else 3600,
        index_reference=args.index_reference or "window",
        bsp_superstep=int(args.bsp_superstep) if args.bsp_superstep is not None else 300,
        treat_cap_as_revocation=bool(args.cap_as_revocation),
        migration=migration,
        max_wallclock=int(args.max_wallclock) if args.max_wallclock is not None else None,
    )
    seed = int(args.seed) if args.seed is not None else None
    report = run_simulation(
        job,
        policy,
        traces,
        catalog,
        composition,
        params=params,
        scope=_scope_from_args(args),
        seed=seed,
    )
    normalize_report(report, on_demand_baseline(job, catalog, _scope_from_args(args)))
    if args.events is not None:
        with open(args.events, "w") as fh:
            for event in report.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
    doc = _provenance(args, seed=seed)
    doc["report"] = report.to_dict()
    _write_json(doc, args.out)
    log.info(
        "policy=%s cost=%.6f availability=%.6f migrations=%d",
        report.policy,
        report.total_cost,
        report.availability,
        report.migrations,
    )
    return 0


def cmd_report(args, parser) -> int:
    _require(args, parser, "inputs")
    rows = []
    jobs = set()
    for raw in args.inputs:
        with open(raw) as fh:
            doc = json.load(fh)
        body = doc.get("report", doc)
        jobs.add(body.get("job"))
        rows.append(body)
    if len(jobs) > 1 and not args.force:
        raise ConflictError(
            f"reports cover different jobs {sorted(jobs)}; pass --force to tabulate anyway"
        )
    rows.sort(key=lambda r: (str(r.get("policy")), str(r.get("job"))))
    columns = (
        "policy",
        "job",
        "total_cost",
        "cost_vs_on_demand",
        "cost_vs_index",
        "availability",
        "migrations",
        "revocations",
        "net",
    )
    fh = _open_out(args.out)
    try:
        fh.write(f"# spotindex {__version__}\n")
        fh.write(f"# config: {json.dumps(_effective_config(args), sort_keys=True)}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for col in columns:
                value = row.get(col)
                cells.append("" if value is None else (f"{value!r}" if isinstance(value, float) else str(value)))
            fh.write(",".join(cells) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spotindex",
        description="Spot-price indices and VM selection policy simulation.",
    )
    parser.add_argument("--version", action="version", version=f"spotindex {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize raw price traces to JSONL")
    p.add_argument("--in", dest="inputs", nargs="+", help="trace files or directories")
    p.add_argument("--catalog", help="VM catalog CSV or JSONL")
    p.add_argument("--out", help="output directory")
    p.add_argument("--unknown", choices=("warn", "error"), help="unknown-VM handling")
    p.add_argument("--config", help="JSON file of option defaults")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="sample an aggregate index to CSV")
    p.add_argument("--traces", help="directory of canonical traces")
    p.add_argument("--catalog", help="VM catalog CSV or JSONL")
    p.add_argument("--composition", help="comma-separated member vm ids")
    p.add_argument("--start", type=int, help="first sample timestamp")
    p.add_argument("--end", type=int, help="end of the sample range (exclusive)")
    p.add_argument("--period", type=int, help="sample period in seconds")
    p.add_argument("--unknown", choices=("warn", "error"), help="unknown-VM handling")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--config", help="JSON file of option defaults")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("synth", help="generate synthetic market traces")
    p.add_argument("--spec", help="JSON file listing market specs")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--start", type=int, help="first run timestamp")
    p.add_argument("--warmup", type=int, help="warmup seconds before start")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON file of option defaults")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run one job under one policy")
    p.add_argument("--job", help="job spec JSON file")
    p.add_argument("--policy", choices=sorted(POLICIES), help="selection policy")
    p.add_argument("--traces", help="directory of canonical traces")
    p.add_argument("--catalog", help="VM catalog CSV or JSONL")
    p.add_argument("--composition", help="comma-separated index members")
    p.add_argument("--epoch", type=int, help="decision period in seconds")
    p.add_argument("--horizon", type=int, help="cost policy payback horizon")
    p.add_argument("--sigma-window", type=int, help="volatility window in seconds")
    p.add_argument("--index-reference", choices=("window", "instant"), help="index reference mode")
    p.add_argument("--bsp-superstep", type=int, help="BSP superstep length in work seconds")
    p.add_argument("--migration-rate", type=float, help="seconds per GB migrated")
    p.add_argument("--migration-floor", type=float, help="minimum migration seconds")
    p.add_argument("--pin-migration", type=float, help="override migration seconds exactly")
    p.add_argument("--restart", type=int, help="revocation restart seconds")
    p.add_argument(
        "--cap-as-revocation",
        action="store_true",
        default=None,
        help="treat provider-capped prices as revocations",
    )
    p.add_argument("--max-wallclock", type=int, help="simulated-seconds safety limit")
    p.add_argument("--sufficiency", choices=("eq5", "off"), help="balanced migration guard")
    p.add_argument(
        "--target-rule", choices=("sharpe", "first_feasible"), help="balanced target choice"
    )
    p.add_argument("--region", help="restrict candidates to a region")
    p.add_argument("--zone", help="restrict candidates to a zone")
    p.add_argument("--family", help="restrict candidates to a family")
    p.add_argument("--unknown", choices=("warn", "error"), help="unknown-VM handling")
    p.add_argument("--seed", type=int, help="seed recorded in the report")
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.add_argument("--events", help="also write the event log as JSONL")
    p.add_argument("--config", help="JSON file of option defaults")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="tabulate simulation reports to CSV")
    p.add_argument("--in", dest="inputs", nargs="+", help="report JSON files")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument(
        "--force",
        action="store_true",
        default=None,
        help="tabulate reports of different jobs",
    )
    p.add_argument("--config", help="JSON file of option defaults")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _merge_config(args, parser)
        return args.func(args, parser)
    except SpotIndexError as exc:
        log.error("%s", exc)
        return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
