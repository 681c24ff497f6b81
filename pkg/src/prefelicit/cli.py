"""Operator command line: simulate, benchmark, serve, replay.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 replay
divergence. Every subcommand is deterministic under --seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import socket
import sys

import numpy as np

from .acquisition import MiConfig
from .errors import DomainError, PrefElicitError
from .inference import MhConfig
from .model import UserParams
from .records import write_aggregate_csv, write_run_csv, write_run_ndjson
from .session import SessionConfig, StoppingRule, benchmark, run_simulation, sample_truth

log = logging.getLogger("prefelicit")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dims", type=int, default=2, help="parameter dimensions D")
    p.add_argument("--steps", type=int, default=30, help="max interactions per session")
    p.add_argument("--seed", type=int, default=0, help="root seed")
    p.add_argument("--delta", type=float, default=0.0, help="MI stopping threshold (0 disables)")
    p.add_argument("--mh-samples", type=int, default=MhConfig().m_samples, help="retained MH draws")
    p.add_argument("--mh-burn-in", type=int, default=MhConfig().burn_in)
    p.add_argument("--mh-thin", type=int, default=MhConfig().thin)
    p.add_argument("--mh-step-scale", type=float, default=MhConfig().step_scale)
    p.add_argument("--mi-outer", type=int, default=MiConfig().m_outer, help="outer MI samples M")
    p.add_argument("--mi-inner", type=int, default=MiConfig().m_inner, help="nested MI samples M'")
    p.add_argument("--candidates", type=int, default=MiConfig().n_candidates, help="alternatives scored per trial N")
    p.add_argument("--weighting", choices=("uniform", "paper_density"), default="uniform")
    p.add_argument("--out-dir", default="out", help="directory for CSV/NDJSON artifacts")


def _session_config(args) -> SessionConfig:
    return SessionConfig(
        dims=args.dims,
        mh=MhConfig(
            m_samples=args.mh_samples,
            burn_in=args.mh_burn_in,
            thin=args.mh_thin,
            step_scale=args.mh_step_scale,
        ),
        mi=MiConfig(
            m_outer=args.mi_outer,
            m_inner=args.mi_inner,
            n_candidates=args.candidates,
            weighting_mode=args.weighting,
        ),
        stop=StoppingRule(delta=args.delta, max_steps=args.steps),
    )


def _parse_truth(args, config: SessionConfig) -> UserParams:
    if args.theta is not None:
        theta = [float(v) for v in args.theta.split(",")]
        lam = [float(v) for v in args.lam.split(",")] if args.lam else [1.0] * len(theta)
        return UserParams(theta=theta, lam=lam)
    truth_rng = np.random.default_rng(np.random.SeedSequence([args.seed, 1]))
    return sample_truth(config.dims, truth_rng)


def cmd_simulate(args) -> int:
    config = _session_config(args)
    truth = _parse_truth(args, config)
    os.makedirs(args.out_dir, exist_ok=True)
    times = []

    def on_step(step, seconds):
        times.append(seconds)
        log.info("step %d took %.3fs", step, seconds)

    record = run_simulation(truth, config, args.seed, on_step=on_step)
    csv_path = os.path.join(args.out_dir, "run.csv")
    ndjson_path = os.path.join(args.out_dir, "run.ndjson")
    write_run_csv(record, csv_path)
    write_run_ndjson(record, ndjson_path)
    last = record.rows[-1]
    print(f"status: {record.status} after {len(record.rows)} steps")
    print(f"theta_true:     {[round(float(v), 4) for v in record.theta_true]}")
    print(f"theta_estimate: {[round(float(v), 4) for v in last.theta_post]}")
    print(f"rmse: {last.rmse_post:.4f}")
    print(f"rsu: {record.final_rsu:.4f}")
    print(f"median step time: {np.median(times):.3f}s")
    print(f"wrote {csv_path} and {ndjson_path}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    config = _session_config(args)
    os.makedirs(args.out_dir, exist_ok=True)
    result = benchmark(args.runs, config, args.seed)
    csv_path = os.path.join(args.out_dir, "benchmark.csv")
    write_aggregate_csv(result.rows, csv_path)
    first, final = result.rows[0], result.rows[-1]
    print(f"runs: {args.runs}, steps: {len(result.rows)}")
    print(f"rmse median step 1: {first['rmse_median']:.4f}  step {final['step']}: {final['rmse_median']:.4f}")
    print(f"mi   median step 1: {first['mi_median']:.4f}  step {final['step']}: {final['mi_median']:.4f}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def _load_service_config(path):
    if path is None:
        return {}
    if path.endswith(".toml"):
        import tomli

        with open(path, "rb") as fh:
            return tomli.load(fh)
    with open(path) as fh:
        return json.load(fh)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionStore, create_app

    doc = _load_service_config(args.config)
    host = args.host or doc.get("host", "127.0.0.1")
    port = args.port or int(os.environ.get("PREFELICIT_PORT", doc.get("port", 8075)))
    log_path = args.log or os.environ.get(
        "PREFELICIT_LOG_PATH", doc.get("log_path", "sessions.ndjson")
    )

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        print(f"cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        probe.close()

    store = SessionStore(log_path)
    app = create_app(store)

    def _flush_and_exit(signum, frame):
        store.close()
        raise SystemExit(EXIT_OK)

    signal.signal(signal.SIGTERM, _flush_and_exit)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        store.close()
    return EXIT_OK


def cmd_replay(args) -> int:
    from .service import verify_log

    if not os.path.exists(args.log):
        print(f"log not found: {args.log}", file=sys.stderr)
        return EXIT_USAGE
    problems = verify_log(args.log)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        print(f"replay diverged: {len(problems)} problem(s)", file=sys.stderr)
        return EXIT_DIVERGENCE
    print("replay ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefelicit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one seeded simulated session")
    _add_model_flags(p_sim)
    p_sim.add_argument("--theta", help="comma-separated true optimum (default: sampled)")
    p_sim.add_argument("--lam", help="comma-separated true sensitivities")
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("benchmark", help="aggregate T seeded runs")
    _add_model_flags(p_bench)
    p_bench.add_argument("--runs", type=int, default=10, help="number of runs T")
    p_bench.set_defaults(func=cmd_benchmark)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--config", help="JSON or TOML service config file")
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--log", default=None, help="write-ahead log path")
    p_serve.set_defaults(func=cmd_serve)

    p_replay = sub.add_parser("replay", help="verify a write-ahead log")
    p_replay.add_argument("--log", required=True)
    p_replay.set_defaults(func=cmd_replay)
    return parser


def _validate(args) -> str | None:
    for name in ("dims", "steps", "mh_samples", "mi_outer", "mi_inner", "candidates"):
        if hasattr(args, name) and getattr(args, name) < 1:
            return f"--{name.replace('_', '-')} must be >= 1"
    if hasattr(args, "runs") and args.runs < 1:
        return "--runs must be >= 1"
    if hasattr(args, "delta") and args.delta < 0:
        return "--delta must be >= 0"
    return None


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PREFELICIT_LOG_LEVEL", "INFO"), stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    problem = _validate(args)
    if problem:
        print(problem, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (DomainError, PrefElicitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
