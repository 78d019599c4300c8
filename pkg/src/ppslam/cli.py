"""Command-line entry point.

Exit codes: 0 pass, 2 envelope violation, 3 configuration error, 4 IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid
from .harness import (BACKENDS, ExperimentConfig, compare_backends, compute_metrics, load_config,
                      paper_config, read_csv, save_config, simulate, write_outputs)
from .world import paper_scenario

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_CONFIG = 3
EXIT_IO = 4


def _add_common(p: argparse.ArgumentParser, out_default: str | None = None) -> None:
    p.add_argument("--config", help="JSON experiment configuration (default: reference scenario)")
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--backend", choices=BACKENDS, help="attitude representation")
    p.add_argument("--noise", choices=("on", "off"),
                   help="velocity noise; 'on' uses the configured std (0.2 if it is zero)")
    p.add_argument("--duration", type=float, help="simulated time in seconds")
    p.add_argument("--dt", type=float, help="integration step in seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppslam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one experiment and write CSV log + JSON metrics")
    _add_common(p)
    p.add_argument("--seeds", type=int, nargs="+", help="batch over several seeds")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for --seeds")

    p = sub.add_parser("compare-backends", help="matrix vs quaternion observer on one stream")
    _add_common(p)

    p = sub.add_parser("paper-scenario", help="write the reference experiment configuration")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--noise", choices=("on", "off"), default="on")

    p = sub.add_parser("metrics", help="recompute metrics from an existing CSV log")
    p.add_argument("log", help="run CSV produced by 'run'")
    p.add_argument("--config", help="experiment config (default: config.json next to the log)")
    p.add_argument("--out", help="write metrics JSON here instead of stdout")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = paper_config(noise=True)
    noise = None
    if args.noise == "off":
        noise = False
    elif args.noise == "on" and cfg.scenario.noise_std == 0.0:
        cfg = replace(cfg, scenario=replace(cfg.scenario, noise_std=paper_scenario().noise_std))
    return cfg.with_overrides(seed=args.seed, backend=args.backend, noise=noise,
                              duration=args.duration, dt=args.dt,
                              output_dir=getattr(args, "out", None))


def _run_one(cfg: ExperimentConfig, out_dir: str) -> tuple[int, dict]:
    res = simulate(cfg)
    write_outputs(res, cfg, out_dir)
    code = EXIT_OK if res.metrics.passed else EXIT_VIOLATION
    return code, res.metrics.to_dict()


def _cmd_run(args) -> int:
    cfg = _resolve_config(args)
    out = Path(cfg.output_dir)
    if not args.seeds:
        code, metrics = _run_one(cfg, str(out))
        print(json.dumps(metrics, indent=2))
        return code
    jobs = [(cfg.with_overrides(seed=s), str(out / f"seed_{s}")) for s in args.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(c, o) for c, o in jobs]
    summary = {str(s): m for s, (_, m) in zip(args.seeds, results)}
    out.mkdir(parents=True, exist_ok=True)
    (out / "batch.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary, indent=2))
    return max(code for code, _ in results)


def _cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    report = compare_backends(cfg)
    text = json.dumps(report, indent=2)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_VIOLATION if report["failed"] else EXIT_OK


def _cmd_paper(args) -> int:
    cfg = paper_config(noise=args.noise == "on")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = "paper_noisy.json" if args.noise == "on" else "paper_noise_free.json"
    save_config(replace(cfg, output_dir=f"out/{name.removesuffix('.json')}"), out / name)
    print(out / name)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    log_path = Path(args.log)
    cfg_path = Path(args.config) if args.config else log_path.with_name("config.json")
    cfg = load_config(cfg_path)
    log = read_csv(log_path)
    if log.n != cfg.scenario.n:
        raise ConfigInvalid("log and config disagree on the number of landmarks")
    violations = int(np.sum(~(np.abs(log.e) < log.bound)))
    expected = cfg.n_steps // cfg.stride + 1
    truncated = len(log) < expected
    failure_time = None
    if truncated:
        violations = max(violations, 1)
        failure_time = float(log.t[-1]) if len(log) else 0.0
    m = compute_metrics(log, cfg.scenario, cfg.metrics, violations=violations,
                        failure_time=failure_time, expected_rows=expected,
                        integrator=cfg.integrator)
    text = json.dumps(m.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK if m.passed else EXIT_VIOLATION


_COMMANDS = {"run": _cmd_run, "compare-backends": _cmd_compare,
             "paper-scenario": _cmd_paper, "metrics": _cmd_metrics}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        # ValueError here comes from unreadable or malformed log files
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
