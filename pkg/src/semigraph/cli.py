"""Command-line entry point.

Subcommands: example-a, example-b (stopping-time experiments), ergodicity,
renewal-check, ml-check, interbank.  Every run writes its data as RFC-4180
CSV files plus a JSON manifest, and renders figures from those CSVs unless
--no-figures is given.  Exit codes: 0 success, 1 runtime failure or failed
check, 2 bad flags or invalid configuration.

For a fixed (command, configuration, seed) the data outputs are
byte-identical across runs and across --threads values; the manifest's
timestamps and the figure files are outside that guarantee.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import report
from .experiments import (
    EXAMPLE_INFO_SPREAD,
    EXAMPLE_TRIANGLE,
    ExperimentConfig,
    ergodicity_experiment,
    run_experiment,
)
from .interbank import ConfigError, market_config_from_dict, micro_to_str, run_market
from .mittag import MLParams, ml_sample_n, ml_survival_vec
from .renewal import Exponential, MittagLeffler, estimate_renewal_function
from .runio import RunManifest, fmt_real, resolve_out_dir, write_csv
from .streams import substream

__all__ = ["main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semigraph",
        description="graph-state Markov chains subordinated to renewal processes",
    )
    parser.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    parser.add_argument(
        "--threads",
        type=int,
        default=max(1, os.cpu_count() or 1),
        help="worker processes for replications (output is identical for any value)",
    )
    parser.add_argument("--out-dir", default=None, help="output directory (default $SEMIGRAPH_OUT_DIR or .)")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, example in (("example-a", EXAMPLE_TRIANGLE), ("example-b", EXAMPLE_INFO_SPREAD)):
        p = sub.add_parser(name, help=f"{example} stopping-time experiment")
        p.add_argument("--m", type=int, default=10, help="vertex count")
        p.add_argument("--beta", type=float, default=0.99, help="Mittag-Leffler tail exponent")
        p.add_argument("--scale", type=float, default=1.0, help="sojourn time scale")
        p.add_argument("--rate", type=float, default=None,
                       help="use exponential sojourns with this rate instead of --beta")
        p.add_argument("--reps", type=int, default=10_000, help="replications")
        p.add_argument("--max-transitions", type=int, default=1_000_000)
        p.add_argument("--out", default=None, help="raw-samples CSV name")
        p.add_argument("--emit-quantiles", action="store_true",
                       help="write a p=0.01..0.99 quantile grid CSV")
        p.set_defaults(func=lambda args, nm=name, ex=example: cmd_example(args, nm, ex))

    p = sub.add_parser("ergodicity", help="two-state time average vs ensemble measure")
    p.add_argument("--lambda-a", type=float, default=1.0)
    p.add_argument("--lambda-b", type=float, default=2.0)
    p.add_argument("--horizon", type=float, default=10_000.0)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--observe-transition", type=int, default=50,
                   help="event index at which the ensemble is sampled")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ergodicity)

    p = sub.add_parser("renewal-check", help="renewal-function estimate against theory")
    p.add_argument("--rate", type=float, default=None, help="exponential sojourn rate")
    p.add_argument("--beta", type=float, default=None, help="Mittag-Leffler exponent")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--t", type=float, default=100.0, help="largest grid time")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--grid-points", type=int, default=21)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_renewal_check)

    p = sub.add_parser("ml-check", help="Kolmogorov-Smirnov test of the sojourn sampler")
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ml_check)

    p = sub.add_parser("interbank", help="interbank market simulation")
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.set_defaults(func=cmd_interbank)

    return parser


def _target(out_dir: Path, out_flag, default_name: str) -> Path:
    if out_flag:
        path = Path(out_flag)
        return path if path.is_absolute() else out_dir / path
    return out_dir / default_name


def cmd_example(args, name: str, example: str) -> int:
    if args.rate is not None:
        law = Exponential(args.rate)
        law_cfg = {"law": "exponential", "rate": args.rate}
    else:
        law = MittagLeffler(MLParams(beta=args.beta, scale=args.scale))
        law_cfg = {"law": "mittag-leffler", "beta": args.beta, "scale": args.scale}
    cfg = ExperimentConfig(
        example=example,
        m=args.m,
        law=law,
        reps=args.reps,
        master_seed=args.seed,
        max_transitions=args.max_transitions,
    )
    out_dir = resolve_out_dir(args.out_dir)
    prefix = name.replace("-", "_")
    manifest = RunManifest(
        command=sys.argv[1:],
        config={"example": example, "m": args.m, "law": law_cfg, "reps": args.reps,
                "max_transitions": args.max_transitions, "seed": args.seed},
        master_seed=args.seed,
    )
    result = run_experiment(cfg, threads=args.threads)

    raw_path = _target(out_dir, args.out, f"{prefix}_raw.csv")
    rows = (
        (
            rep,
            "" if result.censored[rep] else fmt_real(result.stopping_times[rep]),
            int(result.transitions[rep]),
            int(result.censored[rep]),
        )
        for rep in range(cfg.reps)
    )
    manifest.add(write_csv(raw_path, ["rep", "stopping_time", "transitions", "censored"], rows))

    print(f"{example}  m={args.m} law={law_cfg} reps={args.reps} seed={args.seed}")
    if result.summary is None:
        print("all replications censored; no summary")
    else:
        print(result.summary.format_line())
        print(f"censored: {result.summary.censored_count}")

    if args.emit_quantiles and result.summary is not None:
        q_path = raw_path.with_name(raw_path.stem + "_quantiles.csv")
        clean = result.stopping_times[~result.censored]
        ps = np.arange(1, 100)
        qs = np.percentile(clean, ps)
        manifest.add(
            write_csv(q_path, ["p", "quantile"],
                      ((fmt_real(p / 100.0), fmt_real(q)) for p, q in zip(ps, qs)))
        )

    if not args.no_figures and result.summary is not None:
        fig_path = raw_path.with_suffix(".png")
        label = f"{example} m={args.m}"
        manifest.add(report.boxplot_from_raw(raw_path, fig_path, label))

    manifest.write(raw_path.with_name(raw_path.stem + "_manifest.json"))
    return 0


def cmd_ergodicity(args) -> int:
    res = ergodicity_experiment(
        args.lambda_a,
        args.lambda_b,
        horizon=args.horizon,
        reps=args.reps,
        master_seed=args.seed,
        ensemble_transition=args.observe_transition,
    )
    out_dir = resolve_out_dir(args.out_dir)
    manifest = RunManifest(
        command=sys.argv[1:],
        config={"lambda_a": args.lambda_a, "lambda_b": args.lambda_b,
                "horizon": args.horizon, "reps": args.reps,
                "observe_transition": args.observe_transition, "seed": args.seed},
        master_seed=args.seed,
    )
    path = _target(out_dir, args.out, "ergodicity.csv")
    rows = [
        ("time_fraction_a", fmt_real(res.time_fraction_a)),
        ("ensemble_a", fmt_real(res.ensemble[0])),
        ("ensemble_b", fmt_real(res.ensemble[1])),
        ("marginal_a", fmt_real(res.marginal[0])),
        ("marginal_b", fmt_real(res.marginal[1])),
        ("occupation_at_a", fmt_real(res.occupation_at[0])),
        ("occupation_horizon", fmt_real(res.occupation_horizon)),
        ("ensemble_transition", str(res.ensemble_transition)),
        ("long_path_transitions", str(res.long_path_transitions)),
    ]
    manifest.add(write_csv(path, ["quantity", "value"], rows))
    print(f"single-path fraction of time in A : {res.time_fraction_a:.4f}")
    print(f"ensemble P(A) at event {res.ensemble_transition:<4d}      : {res.ensemble[0]:.4f}")
    print(f"chain marginal P(A) (analytic)    : {res.marginal[0]:.6f}")
    print(f"Y at fixed time t={res.occupation_horizon:g}: P(A)      : {res.occupation_at[0]:.4f}")
    if abs(res.time_fraction_a - res.ensemble[0]) > 0.05:
        print("time average and ensemble measure disagree: the state-dependent")
        print("clock makes occupation fractions deviate from the invariant measure")
    if not args.no_figures:
        manifest.add(report.ergodicity_plot(path, path.with_suffix(".png")))
    manifest.write(path.with_name(path.stem + "_manifest.json"))
    return 0


def cmd_renewal_check(args) -> int:
    if (args.rate is None) == (args.beta is None):
        raise ValueError("give exactly one of --rate or --beta")
    if args.rate is not None:
        law = Exponential(args.rate)
        law_cfg = {"law": "exponential", "rate": args.rate}
    else:
        law = MittagLeffler(MLParams(beta=args.beta, scale=args.scale))
        law_cfg = {"law": "mittag-leffler", "beta": args.beta, "scale": args.scale}
    if args.grid_points < 2 or args.t <= 0:
        raise ValueError("need a positive horizon and at least two grid points")

    grid = np.linspace(0.0, args.t, args.grid_points)
    est = estimate_renewal_function(law, grid, reps=args.reps, master_seed=args.seed)

    out_dir = resolve_out_dir(args.out_dir)
    manifest = RunManifest(
        command=sys.argv[1:],
        config={"law": law_cfg, "t": args.t, "reps": args.reps,
                "grid_points": args.grid_points, "seed": args.seed},
        master_seed=args.seed,
    )
    path = _target(out_dir, args.out, "renewal_check.csv")
    manifest.add(
        write_csv(path, ["t", "h_hat", "stderr"],
                  ((fmt_real(t), fmt_real(h), fmt_real(s))
                   for t, h, s in zip(est.t, est.h_hat, est.stderr)))
    )

    mean = law.mean
    status = 0
    if mean is not None:
        print(f"{'t':>10}{'H_hat':>14}{'H_hat/t':>12}")
        for t, h in zip(est.t, est.h_hat):
            if t > 0:
                print(f"{t:>10.3f}{h:>14.4f}{h / t:>12.4f}")
        ratio = est.h_hat[-1] / est.t[-1]
        target = 1.0 / mean
        ok = abs(ratio - target) <= 0.02 * target
        print(f"H(t)/t at t={est.t[-1]:g}: {ratio:.4f} vs 1/mean = {target:.4f} -> "
              + ("PASS" if ok else "FAIL"))
        status = 0 if ok else 1
    else:
        beta = law.params.beta
        print("infinite-mean law: no Poisson limit (H(t)/t does not converge")
        print("to a positive constant; the scaled count H(t)/t^beta stays bounded)")
        print(f"{'t':>10}{'H_hat':>14}{'H_hat/t':>12}{'H_hat/t^beta':>15}")
        for t, h in zip(est.t, est.h_hat):
            if t > 0:
                print(f"{t:>10.3f}{h:>14.4f}{h / t:>12.4f}{h / t**beta:>15.4f}")
    if not args.no_figures:
        manifest.add(report.renewal_plot(path, path.with_suffix(".png"),
                                         f"renewal function, {law_cfg['law']}"))
    manifest.write(path.with_name(path.stem + "_manifest.json"))
    return status


def cmd_ml_check(args) -> int:
    params = MLParams(beta=args.beta, scale=args.scale)
    if args.samples < 100:
        raise ValueError("need at least 100 samples")
    rng = substream(args.seed, 0)
    x = np.sort(ml_sample_n(params, rng, args.samples))
    model_cdf = 1.0 - ml_survival_vec(params, x)
    n = args.samples
    i = np.arange(1, n + 1)
    ks = max(np.max(np.abs(i / n - model_cdf)), np.max(np.abs((i - 1) / n - model_cdf)))
    critical = 1.63 / math.sqrt(n)

    out_dir = resolve_out_dir(args.out_dir)
    manifest = RunManifest(
        command=sys.argv[1:],
        config={"beta": args.beta, "scale": args.scale, "samples": args.samples,
                "seed": args.seed},
        master_seed=args.seed,
    )
    path = _target(out_dir, args.out, "ml_check.csv")
    stride = max(1, n // 2000)
    rows = (
        (fmt_real(x[k]), fmt_real((k + 1) / n), fmt_real(model_cdf[k]))
        for k in range(0, n, stride)
    )
    manifest.add(write_csv(path, ["t", "empirical_cdf", "model_cdf"], rows))

    ok = ks < critical
    print(f"ml-check beta={args.beta} scale={args.scale} n={n}")
    print(f"KS distance {ks:.6f} vs 1% critical value {critical:.6f} -> "
          + ("PASS" if ok else "FAIL"))
    if args.beta == 1.0:
        print(f"sample mean {x.mean():.4f} (exponential target {args.scale:.4f})")
    if not args.no_figures:
        manifest.add(report.ml_check_plot(path, path.with_suffix(".png"),
                                          f"sojourn sampler vs survival, beta={args.beta}"))
    manifest.write(path.with_name(path.stem + "_manifest.json"))
    return 0 if ok else 1


def cmd_interbank(args) -> int:
    config_path = Path(args.config)
    if not config_path.exists():
        raise ConfigError(f"config: no such file {config_path}")
    try:
        obj = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from exc
    cfg = market_config_from_dict(obj)

    out_dir = resolve_out_dir(args.out_dir)
    manifest = RunManifest(command=sys.argv[1:], config=obj, master_seed=cfg.seed)
    run = run_market(cfg)

    events_path = out_dir / "events.csv"
    manifest.add(
        write_csv(events_path, ["time", "type", "bank_i", "bank_j", "amount"],
                  ((fmt_real(e.time), e.kind, e.bank_i, e.bank_j, micro_to_str(e.amount))
                   for e in run.events))
    )
    sheets_path = out_dir / "sheets.csv"
    manifest.add(
        write_csv(sheets_path, ["time", "bank", "c", "l", "ll", "d", "b", "e"],
                  ((fmt_real(t), bank) + tuple(micro_to_str(v) for v in vals)
                   for t, bank, *vals in run.sheet_rows))
    )
    graph_path = out_dir / "graph.csv"
    manifest.add(
        write_csv(graph_path, ["time", "lender", "borrower", "outstanding"],
                  ((fmt_real(t), j, i, micro_to_str(w)) for t, j, i, w in run.graph_rows))
    )
    print(f"interbank m={cfg.m} horizon={cfg.horizon:g} seed={cfg.seed}")
    print(f"events={run.total_events} grants={run.grants} repayments={run.repayments} "
          f"rejected={run.rejected_illiquid} clipped={run.clipped_banks}")
    total_e = sum(s.e for s in run.final_sheets)
    print(f"final total equity: {micro_to_str(total_e)}")
    if not args.no_figures:
        manifest.add(report.interbank_plot(sheets_path, graph_path, out_dir / "interbank.png"))
    manifest.write(out_dir / "interbank_manifest.json")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
