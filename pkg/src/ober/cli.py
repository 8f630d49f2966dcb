"""Operator command line: ``ober serve | simulate | report | audit | mastery``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import AppConfig, load_config
from .errors import OberError
from .events import EventLog
from .experiment import report
from .mastery import mastery_report
from .outcomes import audit_coverage
from .recommenders import RecommendationEngine
from .simulator import simulate

DEFAULT_LOG = "events.jsonl"


def _log_path(args, cfg: AppConfig) -> Path:
    if args.log is not None:
        return Path(args.log)
    return cfg.log_path or Path(DEFAULT_LOG)


def cmd_serve(args, cfg: AppConfig) -> int:
    import uvicorn

    from .service import ServiceState, create_app

    log = EventLog(_log_path(args, cfg), fsync=True)
    app = create_app(ServiceState.from_config(cfg, log))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_simulate(args, cfg: AppConfig) -> int:
    sim = cfg.simulation
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    if args.learners is not None:
        sim = replace(sim, learners=args.learners)
    out = Path(args.out) if args.out else _log_path(args, cfg)
    if out.exists():
        out.unlink()
    log = EventLog(out)
    simulate(sim, RecommendationEngine(cfg.model, cfg.recommenders), log, cfg.simulation_experiment())
    print(f"wrote {len(log)} events for {len(log.learners())} learners to {out}")
    return 0


def cmd_report(args, cfg: AppConfig) -> int:
    path = _log_path(args, cfg)
    if not path.exists():
        raise OberError(f"event log not found: {path}")
    exp = cfg.experiment(args.experiment)
    rep = report(exp, EventLog(path).snapshot(), cfg.model, sessions=args.sessions, cohort=args.cohort)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.csv").write_text(rep.to_csv(), encoding="utf-8")
    (out_dir / "report.json").write_text(rep.to_json() + "\n", encoding="utf-8")
    (out_dir / "growth.csv").write_text(rep.growth_csv(), encoding="utf-8")
    sys.stdout.write(rep.to_csv())
    return 0


def cmd_audit(args, cfg: AppConfig) -> int:
    cov = audit_coverage(cfg.model.forest, cfg.model.alignments)
    if args.json:
        print(json.dumps(cov.to_dict(), indent=2))
        return 0
    if cov.unverified_outcomes:
        print("under-assessed outcomes (no verifying item):")
        for oid in cov.unverified_outcomes:
            print(f"  {oid}")
    else:
        print("every outcome has at least one verifying item")
    return 0


def cmd_mastery(args, cfg: AppConfig) -> int:
    path = _log_path(args, cfg)
    events = EventLog(path).events_for(args.learner) if path.exists() else []
    rep = mastery_report(args.learner, events, cfg.model, rollup=args.rollup)
    print(json.dumps(rep.to_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (JSON or TOML); defaults to $OBER_CONFIG, then the bundled demo")
    common.add_argument("--log", help=f"event log path (default: config 'log' or ./{DEFAULT_LOG})")

    parser = argparse.ArgumentParser(prog="ober", description="Outcome-based educational recommender")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic event log")
    p.add_argument("--seed", type=int)
    p.add_argument("--learners", type=int)
    p.add_argument("--out", help="output event file (overwritten)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common], help="compute experiment metrics")
    p.add_argument("--experiment", help="experiment id (default: first configured)")
    p.add_argument("--out-dir", default=".", help="where report.csv, report.json and growth.csv go")
    p.add_argument("--sessions", type=int, default=10, help="length of the growth series")
    p.add_argument("--cohort", choices=("survivors", "full"), default="survivors")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("audit", parents=[common], help="list outcomes without verifying items")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("mastery", parents=[common], help="print one learner's mastery report")
    p.add_argument("learner")
    p.add_argument("--rollup", choices=("mean",), help="fill unverified parents from their children")
    p.set_defaults(func=cmd_mastery)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except OberError as exc:
        print(f"ober: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
