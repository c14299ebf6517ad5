"""Command-line front end.

Subcommands: gen-wind, synth-gains, train-svr, simulate, benchmark,
report.  Exit codes: 0 success, 2 configuration/validation failure,
1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dac, harness, svr
from .config import ExperimentConfig, parse_config, validate_config
from .wind import gen_wind_profile, save_wind_csv

SCHEME_ARG = {"baseline": "Baseline", "life1": "Life1", "life2": "Life2"}


def _load_config(path) -> ExperimentConfig:
    if path is None or path == "default":
        return ExperimentConfig()
    if not Path(path).exists():
        raise harness.ConfigValidationError(f"config file not found: {path}")
    return parse_config(path)


def _validated(cfg: ExperimentConfig) -> ExperimentConfig:
    errors = validate_config(cfg)
    if errors:
        raise harness.ConfigValidationError("invalid config:\n  "
                                            + "\n  ".join(errors))
    return cfg


def cmd_gen_wind(args) -> int:
    profile = gen_wind_profile(args.mean, args.ti, args.duration, args.dt,
                               args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_wind_csv(profile, out)
    print(f"wrote {out} ({len(profile.samples)} samples, "
          f"mean {profile.samples.mean():.3f} m/s, "
          f"std/mean {profile.samples.std() / profile.samples.mean():.4f})")
    return 0


def cmd_synth_gains(args) -> int:
    cfg = _validated(_load_config(args.config))
    design = harness.build_design(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = ("speed_biased", "balanced", "load_biased")
    for g in design.gains:
        name = names[g.aggressiveness_index] \
            if g.aggressiveness_index < len(names) \
            else f"rung{g.aggressiveness_index}"
        path = out / f"gains_{g.aggressiveness_index}_{name}.csv"
        dac.save_gains_csv(g, path)
        eig = np.linalg.eigvals(dac.closed_loop_matrix(design.aug, g))
        zeta = dac.tower_mode_damping(design.aug, g)
        print(f"{path.name}: tower damping {zeta:.3f}, "
              f"max Re(eig) {eig.real.max():.4f}")
    return 0


def cmd_train_svr(args) -> int:
    cfg = _validated(_load_config(args.config))
    model, acc, _ = harness.train_pipeline(cfg, args.out)
    print(f"model written to {Path(args.out) / 'model.txt'}; "
          f"held-out normalized accuracy {acc:.4f}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _validated(_load_config(args.config))
    scheme = SCHEME_ARG[args.scheme]
    mean = cfg.bench_means[0]
    seed = args.seed if args.seed is not None else cfg.bench_seeds[0]
    model = None
    if scheme == "Life2":
        if not Path(cfg.svr_model_path).exists():
            raise harness.ConfigValidationError(
                f"Life2 needs a trained model at '{cfg.svr_model_path}'")
        model = svr.load_model(cfg.svr_model_path)
    trace = harness.run_scenario(cfg, scheme, mean, cfg.bench_ti, seed,
                                 svr_model=model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"trace_{args.scheme}_w{mean:g}.csv"
    trace.save_csv(path)
    trace.save_adaptation_csv(out / f"adaptation_{args.scheme}_w{mean:g}.csv",
                              cfg.tick_every)
    row = harness.compute_metrics(cfg, trace)
    print(f"wrote {path}")
    print(f"tower std {row.tower_fa_std:.4e} N·m, pitch rate RMS "
          f"{np.degrees(row.pitch_rate_rms):.3f} deg/s, damage ratio "
          f"{row.final_damage_ratio:.3f}, L_e {row.lifetime_estimate:.1f} s")
    return 0


def cmd_benchmark(args) -> int:
    cfg = _validated(_load_config(args.config))
    rows, _ = harness.benchmark(cfg, args.out)
    print(f"benchmark artifacts in {args.out}")
    for r in rows:
        print(f"  {r.scheme:<9} {r.wind_mean:g} m/s: damage ratio "
              f"{r.final_damage_ratio:.3f}, L_e {r.lifetime_estimate:.1f} s")
    return 0


def cmd_report(args) -> int:
    cfg = _validated(_load_config(args.config))
    out = Path(args.out)
    metrics_path = out / "metrics.csv"
    if not metrics_path.exists():
        raise harness.ConfigValidationError(
            f"no metrics.csv in {out}; run benchmark first")
    rows = harness.load_metrics_csv(metrics_path)
    traces = {}
    for r in rows:
        stem = f"trace_{r.scheme.lower()}_w{r.wind_mean:g}.csv"
        path = out / stem
        if path.exists():
            traces[(r.scheme, r.wind_mean)] = harness.SimulationTrace.load_csv(
                path, scheme=r.scheme, wind_mean=r.wind_mean)
    harness.export_report(cfg, rows, traces, out)
    print(f"report regenerated in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="windlife",
        description="Wind-turbine lifetime-control laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None,
                        help="config file path (omit for defaults)")
        sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("gen-wind", help="generate a turbulent wind CSV")
    sp.add_argument("--mean", type=float, required=True)
    sp.add_argument("--ti", type=float, required=True)
    sp.add_argument("--duration", type=float, default=600.0)
    sp.add_argument("--dt", type=float, default=0.0125)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.set_defaults(func=cmd_gen_wind)

    sp = sub.add_parser("synth-gains",
                        help="synthesize and export the gain ladder")
    common(sp)
    sp.set_defaults(func=cmd_synth_gains)

    sp = sub.add_parser("train-svr",
                        help="run the load-prediction training pipeline")
    common(sp)
    sp.set_defaults(func=cmd_train_svr)

    sp = sub.add_parser("simulate", help="run one closed-loop scenario")
    common(sp)
    sp.add_argument("--scheme", choices=sorted(SCHEME_ARG), required=True)
    sp.add_argument("--seed", type=int, default=None,
                    help="wind seed override")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("benchmark",
                        help="run the full three-scheme benchmark")
    common(sp)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("report",
                        help="re-render report artifacts from a benchmark "
                             "output directory")
    common(sp)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
