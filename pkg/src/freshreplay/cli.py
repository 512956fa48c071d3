"""Command-line entry point.

Subcommands
-----------
run             train per a config file plus --set overrides; writes
                metrics.jsonl, summary.csv, and a final checkpoint
sweep           run a one-axis sweep spec; one run directory per
                (value, seed) cell plus an aggregate CSV
staleness-demo  scripted workload contrasting mean sampled age with and
                without decay; exit 3 if the separation property fails
ess-report      CSV of divergence/ESS rows along a drifting policy path
bench-refresh   wall-time of the full-buffer priority refresh at size N

Config file keys (flat ``key = value``, '#' comments, unknown keys fail):
  env, method, buffer_capacity, replay_ratio_K, batch_size_B,
  rollout_batch, clip_epsilon, advantage_clip, learning_rate,
  max_iterations, seed, eviction_policy, sync_refresh,
  priority.alpha, priority.beta_start, priority.beta_end,
  priority.beta_anneal_steps, priority.tau, priority.epsilon,
  priority.base_kind

Exit codes: 0 success, 1 parse/validation failure, 2 runtime failure,
3 staleness property failure.  ``FRESHREPLAY_THREADS`` caps background
refresh parallelism.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace

from .config import ConfigError, RunConfig, load_config, parse_config, set_key, validate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_PROPERTY = 3


def _load_run_config(args) -> RunConfig:
    config = RunConfig()
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        config = load_config(args.config)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        config = set_key(config, key.strip(), value)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    errors = validate(config)
    if errors:
        raise ConfigError("; ".join(errors))
    return config


def _write_metrics(out_dir: str, config: RunConfig) -> float:
    """Run training, stream metrics.jsonl, write summary.csv; returns final return."""
    from .trainer import Trainer, save_checkpoint

    os.makedirs(out_dir, exist_ok=True)
    trainer = Trainer(config)
    history = []
    with open(os.path.join(out_dir, "metrics.jsonl"), "w", encoding="utf-8") as fh:
        for _ in range(config.max_iterations):
            metrics = trainer.run_iteration()
            fh.write(metrics.to_json() + "\n")
            history.append(metrics)
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", f"mean_return_{config.method}"])
        for m in history:
            writer.writerow([m.iteration, repr(m.mean_return)])
    save_checkpoint(os.path.join(out_dir, "policy_final.npz"), trainer.policy)
    return history[-1].mean_return


def cmd_run(args) -> int:
    config = _load_run_config(args)
    final_return = _write_metrics(args.out, config)
    print(f"run complete: {config.max_iterations} iterations, final mean_return {final_return}")
    return EXIT_OK


def _parse_sweep_file(path: str) -> tuple[RunConfig, str, list[str], int]:
    if not os.path.exists(path):
        raise ConfigError(f"sweep spec not found: {path}")
    axis = None
    values: list[str] = []
    seeds = 1
    base_lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key == "sweep.axis":
                axis = raw
            elif key == "sweep.values":
                values = [v.strip() for v in raw.split(",") if v.strip()]
            elif key == "sweep.seeds":
                seeds = int(raw)
            else:
                base_lines.append(stripped)
    if axis is None:
        raise ConfigError("sweep spec missing sweep.axis")
    if not values:
        raise ConfigError("sweep spec has empty sweep.values")
    if seeds < 1:
        raise ConfigError("sweep.seeds must be >= 1")
    base = parse_config("\n".join(base_lines))
    set_key(base, axis, values[0])  # fail fast if the axis key is invalid
    return base, axis, values, seeds


def cmd_sweep(args) -> int:
    import numpy as np

    base, axis, values, seeds = _parse_sweep_file(args.spec)
    rows = []
    for value in values:
        finals, peaks = [], []
        for j in range(seeds):
            config = set_key(base, axis, value)
            config = replace(config, seed=base.seed + j)
            errors = validate(config)
            if errors:
                raise ConfigError("; ".join(errors))
            cell_dir = os.path.join(args.out, f"{axis.replace('.', '_')}={value}", f"seed={config.seed}")
            from .trainer import Trainer

            os.makedirs(cell_dir, exist_ok=True)
            trainer = Trainer(config)
            returns = []
            with open(os.path.join(cell_dir, "metrics.jsonl"), "w", encoding="utf-8") as fh:
                for _ in range(config.max_iterations):
                    metrics = trainer.run_iteration()
                    fh.write(metrics.to_json() + "\n")
                    returns.append(metrics.mean_return)
            finals.append(returns[-1])
            peaks.append(max(returns))
        rows.append(
            [
                value,
                seeds,
                repr(float(np.mean(finals))),
                repr(float(np.std(finals))),
                repr(float(np.mean(peaks))),
                repr(float(np.std(peaks))),
            ]
        )
    os.makedirs(args.out, exist_ok=True)
    aggregate = os.path.join(args.out, "aggregate.csv")
    with open(aggregate, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([axis, "seeds", "final_mean", "final_std", "peak_mean", "peak_std"])
        writer.writerows(rows)
    print(f"sweep complete: {len(values)} values x {seeds} seeds; aggregate at {aggregate}")
    return EXIT_OK


def cmd_staleness_demo(args) -> int:
    from .staleness import run_staleness_workload

    result = run_staleness_workload(
        tau=args.tau,
        control_tau=args.control_tau,
        steps=args.steps,
        early=args.early,
    )
    print(f"mean sampled age, tau={args.tau:g}: {result.mean_age_decay:.3f}")
    print(f"mean sampled age, tau={args.control_tau:g}: {result.mean_age_control:.3f}")
    print(f"age gap: {100.0 * result.gap:.2f}% (required >= 25%)")
    csv_path = args.csv or os.path.join(args.out, "staleness.csv")
    os.makedirs(os.path.dirname(csv_path) or ".", exist_ok=True)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mean_age_decay", "mean_age_control"])
        for step, a, b in result.per_step:
            writer.writerow([step, repr(a), repr(b)])
    print(f"per-step CSV written to {csv_path}")
    return EXIT_OK if result.gap >= 0.25 else EXIT_PROPERTY


def cmd_ess_report(args) -> int:
    from .divergence import DiscreteDist, divergence_report

    rows = []
    behavior = DiscreteDist.softmax([0.0, 0.0])
    for delta in range(args.steps):
        target = DiscreteDist.softmax([0.0, args.gap * delta])
        r = divergence_report(target, behavior, args.n)
        rows.append([delta, r.var_rho, r.chi2, r.kl, r.renyi2, r.ess, r.ess_kl_bound])
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["delta", "var_rho", "chi2", "kl", "renyi2", "ess", "ess_kl_bound"])
        for row in rows:
            writer.writerow([row[0]] + [repr(v) for v in row[1:]])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_bench_refresh(args) -> int:
    from . import _kernels
    from .bench import run_refresh_bench

    backends = (
        _kernels.available_backends() if args.backend == "both" else [args.backend or None]
    )
    for name in backends:
        bench = run_refresh_bench(args.n, runs=args.runs, backend_name=name)
        times_ms = sorted(1000.0 * t for t in bench.times)
        print(
            f"backend={bench.backend} n={bench.n} runs={len(bench.times)} "
            f"median_ms={1000.0 * bench.median:.3f} "
            f"min_ms={times_ms[0]:.3f} max_ms={times_ms[-1]:.3f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freshreplay", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train with a config file")
    run_p.add_argument("--config", help="path to a flat key=value config file")
    run_p.add_argument("--set", action="append", metavar="KEY=VALUE")
    run_p.add_argument("--out", default="out", help="output directory")
    run_p.add_argument("--seed", type=int)
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a one-axis sweep")
    sweep_p.add_argument("spec", help="sweep spec file (config keys + sweep.*)")
    sweep_p.add_argument("--out", default="sweep_out")
    sweep_p.set_defaults(func=cmd_sweep)

    demo_p = sub.add_parser("staleness-demo", help="mean sampled age with vs without decay")
    demo_p.add_argument("--tau", type=float, default=500.0)
    demo_p.add_argument("--control-tau", type=float, default=math.inf)
    demo_p.add_argument("--steps", type=int, default=2000)
    demo_p.add_argument("--early", type=int, default=100)
    demo_p.add_argument("--out", default="out")
    demo_p.add_argument("--csv", help="per-step CSV path (default <out>/staleness.csv)")
    demo_p.set_defaults(func=cmd_staleness_demo)

    ess_p = sub.add_parser("ess-report", help="divergence/ESS CSV along a drift path")
    ess_p.add_argument("--steps", type=int, default=50)
    ess_p.add_argument("--gap", type=float, default=0.1, help="logit drift per step")
    ess_p.add_argument("--n", type=int, default=100, help="nominal sample count")
    ess_p.add_argument("--out", help="CSV path (default stdout)")
    ess_p.set_defaults(func=cmd_ess_report)

    bench_p = sub.add_parser("bench-refresh", help="time the full-buffer priority refresh")
    bench_p.add_argument("--n", type=int, default=100_000)
    bench_p.add_argument("--runs", type=int, default=20)
    bench_p.add_argument("--backend", choices=["python", "compiled", "both"])
    bench_p.set_defaults(func=cmd_bench_refresh)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
