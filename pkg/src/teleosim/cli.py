"""Command-line entry points.

Exit codes: 0 ok, 2 verification failure, 3 controller fault, 4 config error.
The default output directory comes from $TELEOSIM_OUT (falls back to ./runs).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .episodes import EpisodeLog, MODE_PROPOSED, MODE_SIMPLE, run_episode
from .metrics import aggregate, compare, compute_metrics, verify
from .scenario import SCRIPTS, ConfigError, ScenarioConfig, default_scenario

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_FAULT = 3
EXIT_CONFIG = 4


def _out_dir(value) -> str:
    return value or os.environ.get("TELEOSIM_OUT", "runs")


def _load_scenario(spec: str) -> ScenarioConfig:
    if spec in (None, "default"):
        return default_scenario()
    return ScenarioConfig.load(spec)


def _episode_name(cfg: ScenarioConfig, mode: str, operator: str, seed: int) -> str:
    op = operator.replace(":", "_").replace("/", "_")
    return f"{cfg.name}_{mode}_{op}_seed{seed}"


def cmd_run(args) -> int:
    cfg = _load_scenario(args.scenario)
    log = run_episode(cfg, mode=args.mode, operator=args.operator,
                      seed=args.seed)
    out = _out_dir(args.out)
    base = os.path.join(out, _episode_name(cfg, args.mode, args.operator,
                                           args.seed))
    csv_path, json_path = log.save(base)
    m = compute_metrics(log)
    print(f"episode: {base}")
    print(f"  steps={log.steps} completed={log.footer['completed']} "
          f"collisions={log.footer['collision_count']}")
    print(f"  rmse_m={json.dumps(m.to_dict()['rmse_m'])}")
    print(f"  required_time_s={json.dumps(m.to_dict()['required_time_s'])}")
    print(f"  wrote {csv_path} and {json_path}")
    if log.footer["fault"] is not None:
        print(f"controller fault: {log.footer['fault']}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_compare(args) -> int:
    a = EpisodeLog.load(args.log_a)
    b = EpisodeLog.load(args.log_b)
    result = compare(a, b)
    print(result.table)
    if args.json:
        print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    log = EpisodeLog.load(args.log)
    report = verify(log)
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_VERIFY


def _sweep_worker(job):
    cfg_dict, mode, operator, seed, out = job
    cfg = ScenarioConfig.from_dict(cfg_dict)
    log = run_episode(cfg, mode=mode, operator=operator, seed=seed)
    log.save(os.path.join(out, _episode_name(cfg, mode, operator, seed)))
    return (mode, seed, compute_metrics(log), log.footer["fault"] is not None,
            log.steps, log.footer["completed"])


def cmd_sweep(args) -> int:
    cfg = _load_scenario(args.scenario)
    lo, _, hi = args.seeds.partition("..")
    seeds = range(int(lo), int(hi) + 1) if hi else [int(lo)]
    out = _out_dir(args.out)
    jobs = [(cfg.to_dict(), mode, args.operator, seed, out)
            for mode in (MODE_PROPOSED, MODE_SIMPLE) for seed in seeds]
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]
    reports = {MODE_PROPOSED: [], MODE_SIMPLE: []}
    fault = False
    for mode, seed, metrics, had_fault, steps, completed in results:
        reports[mode].append(metrics)
        fault = fault or had_fault
        print(f"  {mode} seed {seed}: steps={steps} completed={completed}")
    agg_a = aggregate(reports[MODE_PROPOSED])
    agg_b = aggregate(reports[MODE_SIMPLE])
    from .metrics import render_comparison
    print(render_comparison(agg_a, agg_b))
    return EXIT_FAULT if fault else EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve
    serve(host=args.host, port=args.port, scenario=args.scenario,
          static_dir=args.static_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teleosim")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scripted or replayed episode")
    run_p.add_argument("--scenario", default="default",
                       help="scenario JSON file or 'default'")
    run_p.add_argument("--mode", choices=[MODE_PROPOSED, MODE_SIMPLE],
                       default=MODE_PROPOSED)
    run_p.add_argument("--operator", default="passive",
                       help=f"{'|'.join(SCRIPTS)} or replay:<input.jsonl>")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", default=None, help="output dir ($TELEOSIM_OUT)")
    run_p.set_defaults(fn=cmd_run)

    cmp_p = sub.add_parser("compare", help="side-by-side metrics of two logs")
    cmp_p.add_argument("log_a")
    cmp_p.add_argument("log_b")
    cmp_p.add_argument("--json", action="store_true")
    cmp_p.set_defaults(fn=cmd_compare)

    ver_p = sub.add_parser("verify", help="check a log against the guarantees")
    ver_p.add_argument("log")
    ver_p.set_defaults(fn=cmd_verify)

    sweep_p = sub.add_parser("sweep", help="run both modes over a seed range")
    sweep_p.add_argument("--scenario", default="default")
    sweep_p.add_argument("--operator", default="cooperative")
    sweep_p.add_argument("--seeds", default="0..3", help="e.g. 0..3")
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--workers", type=int,
                         default=min(4, os.cpu_count() or 1),
                         help="parallel episode workers (1 = serial)")
    sweep_p.set_defaults(fn=cmd_sweep)

    serve_p = sub.add_parser("serve", help="start the live session server")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8700)
    serve_p.add_argument("--scenario", default="default")
    serve_p.add_argument("--static-dir", default=None,
                         help="operator console assets to serve at /")
    serve_p.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
