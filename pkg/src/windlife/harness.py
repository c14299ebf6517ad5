"""Closed-loop experiment orchestration: scenario runs, the SVR training
pipeline, and the three-scheme benchmark with its metric tables.

A scenario couples the nonlinear plant, the observer-based pitch
controller, and the prognosis scheduler in a fixed interleaved order per
sample: measure, (tick: prognose and possibly switch gains), control,
integrate.  Everything is seeded and single-threaded; identical configs
produce identical traces byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dac, rainflow, svr
from .config import ExperimentConfig, validate_config
from .lifetime import (LifetimeConfig, new_prognosis_state, prognosis_tick,
                       select_moment_source)
from .turbine import (StateSpaceModel, TurbineParams, generator_torque,
                      linearize, plant_outputs, plant_step, trim)
from .wind import WindProfile, gen_wind_profile

SCHEMES = ("Baseline", "Life1", "Life2")

TRACE_COLUMNS = (
    "time_s", "wind_ms", "rotor_speed_rads", "tower_disp_m", "tower_vel_ms",
    "pitch_rad", "pitch_rate_rads", "gen_speed_rads", "tower_accel_ms2",
    "tower_moment_Nm", "rotor_power_W", "gen_power_W", "pitch_cmd_rad",
    "damage", "lifetime_s", "gain_index", "predicted_moment_Nm",
)

METRICS_COLUMNS = ("scheme", "wind_mean_ms", "tower_fa_std_Nm",
                   "pitch_rate_rms_rads", "gen_speed_rmse_rads",
                   "gen_power_rmse_W", "final_damage_ratio",
                   "lifetime_estimate_s")


class ConfigValidationError(ValueError):
    """Raised with the exhaustive list of config problems."""


@dataclass
class SimulationTrace:
    """Time-indexed closed-loop record, one row per plant step."""

    scheme: str
    wind_mean: float
    columns: dict            # name -> np.ndarray

    def __len__(self) -> int:
        return len(self.columns["time_s"])

    def save_csv(self, path) -> None:
        names = TRACE_COLUMNS
        cols = [self.columns[n] for n in names]
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for i in range(len(self)):
                fh.write(",".join(f"{c[i]:.12g}" for c in cols) + "\n")

    @classmethod
    def load_csv(cls, path, scheme: str = "", wind_mean: float = 0.0):
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        cols = {n: data[:, i] for i, n in enumerate(TRACE_COLUMNS)}
        return cls(scheme=scheme, wind_mean=wind_mean, columns=cols)

    def save_adaptation_csv(self, path, tick_every: int) -> None:
        """Adaptation log at the prognosis cadence:
        time_s,L_e_s,D_k,active_gain_index,switch_flag."""
        t = self.columns["time_s"]
        le = self.columns["lifetime_s"]
        dk = self.columns["damage"]
        gi = self.columns["gain_index"]
        with open(path, "w") as fh:
            fh.write("time_s,L_e_s,D_k,active_gain_index,switch_flag\n")
            prev = None
            for i in range(tick_every, len(t), tick_every):
                idx = int(gi[i])
                flag = int(prev is not None and idx != prev)
                prev = idx
                fh.write(f"{t[i]:.12g},{le[i]:.12g},{dk[i]:.12g},"
                         f"{idx},{flag}\n")


@dataclass(frozen=True)
class MetricsRow:
    scheme: str
    wind_mean: float
    tower_fa_std: float        # N·m
    pitch_rate_rms: float      # rad/s
    gen_speed_rmse: float      # rad/s
    gen_power_rmse: float      # W
    final_damage_ratio: float
    lifetime_estimate: float   # s

    def values(self):
        return (self.tower_fa_std, self.pitch_rate_rms, self.gen_speed_rmse,
                self.gen_power_rmse, self.final_damage_ratio,
                self.lifetime_estimate)


@dataclass
class ControlDesign:
    """Everything derived from the design operating point, shared by all
    runs of one experiment."""

    model: StateSpaceModel
    aug: dac.AugmentedModel
    gains: list
    params: TurbineParams


def build_design(cfg: ExperimentConfig) -> ControlDesign:
    model = linearize(cfg.turbine, cfg.design_op_wind)
    aug = dac.augment_disturbance(model)
    base = dac.WeightProfile(tuple(cfg.weights_state), cfg.weight_control,
                             cfg.weight_integral)
    gains = dac.synthesize_ladder(aug, base, cfg.tower_weight_scales)
    return ControlDesign(model=model, aug=aug, gains=gains,
                         params=cfg.turbine)


def lifetime_config(cfg: ExperimentConfig, scheme: str,
                    adaptation_enabled: bool = True) -> LifetimeConfig:
    return LifetimeConfig(
        desired_lifetime=cfg.lifetime_desired_s,
        damage_limit=cfg.damage_limit,
        band_fraction=cfg.band_fraction,
        dwell_min=cfg.dwell_s,
        prognosis_period=cfg.prognosis_period_s,
        mode=scheme,
        n_gains=len(cfg.tower_weight_scales),
        adaptation_enabled=adaptation_enabled,
    )


def simulate_closed_loop(cfg: ExperimentConfig, design: ControlDesign,
                         wind: WindProfile, scheme: str,
                         svr_model=None,
                         adaptation_enabled: bool = True) -> SimulationTrace:
    """Run one closed-loop scenario and return the full trace."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme}")
    if scheme == "Life2" and svr_model is None:
        raise ValueError("Life2 requires a trained load-prediction model")
    params = design.params
    dt = cfg.dt
    n_steps = cfg.steps
    if len(wind.samples) < n_steps + 1:
        raise ValueError("wind profile shorter than the run duration")
    tick = cfg.tick_every

    sn = rainflow.SnCurve(cfg.sn_exponent_m, cfg.sn_constant_k)
    lt_cfg = lifetime_config(cfg, scheme, adaptation_enabled)
    state = trim(params, wind.mean)
    gate = cfg.rainflow_gate_fraction * abs(
        plant_outputs(state, wind.mean, params).tower_fa_moment)
    ps = new_prognosis_state(lt_cfg, hysteresis_gate=gate)
    ctrl = dac.ControllerState.zero(design.aug.n_aug)
    trim_pitch = design.model.op_pitch
    rated_gen = params.rated_gen_speed
    limits = (params.pitch_min, params.pitch_max)

    n_rows = n_steps + 1
    col = {name: np.empty(n_rows) for name in TRACE_COLUMNS}
    gain = design.gains[ps.active_gain_index]
    wind_samples = wind.samples

    for k in range(n_rows):
        w_k = float(wind_samples[k])
        t_k = k * dt
        out = plant_outputs(state, w_k, params)
        moment = out.tower_fa_moment
        predicted = math.nan
        if scheme == "Life2":
            if k % tick == 0 and k > 0:
                predicted = svr.predict(
                    svr_model, (w_k, state.tower_fa_displacement,
                                out.rotor_power, out.tower_fa_accel))
        if k % tick == 0 and k > 0:
            source = select_moment_source(
                scheme, predicted if scheme == "Life2" else moment, moment)
            ps, idx = prognosis_tick(ps, lt_cfg, source, t_k, sn)
            gain = design.gains[idx]
        meas = (out.gen_speed - rated_gen, out.tower_fa_accel)
        ctrl, u_cmd = dac.controller_step(ctrl, gain, design.aug, meas, dt,
                                          trim_pitch=trim_pitch,
                                          pitch_limits=limits)
        col["time_s"][k] = t_k
        col["wind_ms"][k] = w_k
        col["rotor_speed_rads"][k] = state.rotor_speed
        col["tower_disp_m"][k] = state.tower_fa_displacement
        col["tower_vel_ms"][k] = state.tower_fa_velocity
        col["pitch_rad"][k] = state.pitch_angle
        col["pitch_rate_rads"][k] = state.pitch_rate
        col["gen_speed_rads"][k] = out.gen_speed
        col["tower_accel_ms2"][k] = out.tower_fa_accel
        col["tower_moment_Nm"][k] = moment
        col["rotor_power_W"][k] = out.rotor_power
        col["gen_power_W"][k] = (generator_torque(state.rotor_speed, params)
                                 * state.rotor_speed)
        col["pitch_cmd_rad"][k] = u_cmd
        col["damage"][k] = ps.rainflow.damage_D_k
        col["lifetime_s"][k] = ps.L_e_latest
        col["gain_index"][k] = ps.active_gain_index
        col["predicted_moment_Nm"][k] = predicted
        if k < n_steps:
            state, _ = plant_step(state, u_cmd, w_k, dt, params)

    return SimulationTrace(scheme=scheme, wind_mean=wind.mean, columns=col)


def run_scenario(cfg: ExperimentConfig, scheme: str, wind_mean: float,
                 wind_ti: float, wind_seed: int,
                 design: ControlDesign = None,
                 svr_model=None,
                 adaptation_enabled: bool = True) -> SimulationTrace:
    """Validate, build the design if needed, and run one scenario."""
    errors = validate_config(cfg)
    if errors:
        raise ConfigValidationError("invalid config:\n  "
                                    + "\n  ".join(errors))
    if design is None:
        design = build_design(cfg)
    wind = gen_wind_profile(wind_mean, wind_ti, cfg.duration, cfg.dt,
                            wind_seed)
    return simulate_closed_loop(cfg, design, wind, scheme, svr_model,
                                adaptation_enabled)


def compute_metrics(cfg: ExperimentConfig, trace: SimulationTrace) -> MetricsRow:
    c = trace.columns
    rated_gen = cfg.turbine.rated_gen_speed
    rated_power = cfg.turbine.rated_power
    return MetricsRow(
        scheme=trace.scheme,
        wind_mean=trace.wind_mean,
        tower_fa_std=float(np.std(c["tower_moment_Nm"])),
        pitch_rate_rms=float(np.sqrt(np.mean(c["pitch_rate_rads"]**2))),
        gen_speed_rmse=float(np.sqrt(np.mean(
            (c["gen_speed_rads"] - rated_gen)**2))),
        gen_power_rmse=float(np.sqrt(np.mean(
            (c["gen_power_W"] - rated_power)**2))),
        final_damage_ratio=float(c["damage"][-1] / cfg.damage_limit),
        lifetime_estimate=float(c["lifetime_s"][-1]),
    )


def audit_damage(cfg: ExperimentConfig, trace: SimulationTrace) -> float:
    """Recompute total damage from the trace's moment column at the
    prognosis cadence with the offline oracle (closed cycles only are
    compared against the online value; residue is the tolerance)."""
    tick = cfg.tick_every
    moments = trace.columns["tower_moment_Nm"][tick::tick]
    sn = rainflow.SnCurve(cfg.sn_exponent_m, cfg.sn_constant_k)
    cycles = rainflow.offline_rainflow_oracle(moments)
    return rainflow.total_damage(
        [c for c in cycles if c.weight == 1.0], sn)


def dataset_from_trace(cfg: ExperimentConfig, trace: SimulationTrace,
                       tags=()) -> tuple[np.ndarray, svr.Dataset]:
    """Sample (features, moment) rows at the prognosis cadence."""
    tick = cfg.tick_every
    c = trace.columns
    sl = slice(tick, None, tick)
    X = np.column_stack([c["wind_ms"][sl], c["tower_disp_m"][sl],
                         c["rotor_power_W"][sl], c["tower_accel_ms2"][sl]])
    return c["time_s"][sl], svr.Dataset(X, c["tower_moment_Nm"][sl], tags)


def save_metrics_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for r in rows:
            vals = ",".join(f"{v:.12g}" for v in r.values())
            fh.write(f"{r.scheme},{r.wind_mean:.12g},{vals}\n")


def load_metrics_csv(path) -> list:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != METRICS_COLUMNS:
            raise ValueError(f"unexpected metrics header in {path}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != len(METRICS_COLUMNS):
                raise ValueError(f"malformed metrics row in {path}")
            rows.append(MetricsRow(parts[0], *[float(v) for v in parts[1:]]))
    return rows


def comparison_table(rows) -> list:
    """Cross-scheme summary in the benchmark-table layout: one entry per
    (metric, scheme) with per-wind values, their plain mean, and the
    percentage change of that mean against Baseline."""
    metric_names = ("tower_fa_std_Nm", "pitch_rate_rms_rads",
                    "gen_speed_rmse_rads", "gen_power_rmse_W")
    getters = (lambda r: r.tower_fa_std, lambda r: r.pitch_rate_rms,
               lambda r: r.gen_speed_rmse, lambda r: r.gen_power_rmse)
    winds = []
    for r in rows:
        if r.wind_mean not in winds:
            winds.append(r.wind_mean)
    table = []
    for name, get in zip(metric_names, getters):
        base_avg = None
        for scheme in SCHEMES:
            vals = [get(r) for w in winds for r in rows
                    if r.scheme == scheme and r.wind_mean == w]
            if len(vals) != len(winds):
                continue
            avg = sum(vals) / len(vals)
            if scheme == "Baseline":
                base_avg = avg
                pct = 0.0
            else:
                pct = 100.0 * (avg - base_avg) / base_avg
            table.append((name, scheme, tuple(vals), avg, pct))
    return table


def save_comparison_csv(table, winds, path) -> None:
    with open(path, "w") as fh:
        wind_cols = ",".join(f"w{w:g}" for w in winds)
        fh.write(f"metric,scheme,{wind_cols},avg,pct_vs_baseline\n")
        for name, scheme, vals, avg, pct in table:
            vv = ",".join(f"{v:.12g}" for v in vals)
            fh.write(f"{name},{scheme},{vv},{avg:.12g},{pct:.12g}\n")


METRIC_DEFINITIONS_FOOTER = """\
Metric definitions:
  tower_fa_std        standard deviation of the tower fore-aft base moment
                      over the full run (N·m)
  pitch_rate_rms      root mean square of the pitch rate (rad/s)
  gen_speed_rmse      RMS generator speed deviation from rated (rad/s)
  gen_power_rmse      RMS generator power deviation from rated (W)
  final_damage_ratio  online Miner damage at end of run / damage budget
  normalized accuracy 1 - RMSE / (max(actual) - min(actual))
Averages over winds are plain (unweighted) means.
"""


def train_pipeline(cfg: ExperimentConfig, out_dir) -> tuple:
    """Run the training/test scenario battery, grid-search and fit the
    load-prediction model, and persist datasets, model, and report.

    Returns (model, held-out normalized accuracy, report text).
    """
    errors = validate_config(cfg)
    if errors:
        raise ConfigValidationError("invalid config:\n  "
                                    + "\n  ".join(errors))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    design = build_design(cfg)

    train_sets = []
    seed_iter = iter(cfg.train_seeds)
    for ti in cfg.train_tis:
        for mean in cfg.train_means:
            seed = next(seed_iter)
            trace = simulate_closed_loop(
                cfg, design,
                gen_wind_profile(mean, ti, cfg.duration, cfg.dt, seed),
                "Baseline")
            times, ds = dataset_from_trace(cfg, trace, tags=(mean, ti, seed))
            svr.save_dataset_csv(
                times, ds, out / f"train_m{mean:g}_ti{ti:g}_s{seed}.csv")
            train_sets.append(ds)
    test_sets = []
    for mean, seed in zip(cfg.test_means, cfg.test_seeds):
        trace = simulate_closed_loop(
            cfg, design,
            gen_wind_profile(mean, cfg.test_ti, cfg.duration, cfg.dt, seed),
            "Baseline")
        times, ds = dataset_from_trace(cfg, trace,
                                       tags=(mean, cfg.test_ti, seed))
        svr.save_dataset_csv(
            times, ds, out / f"test_m{mean:g}_ti{cfg.test_ti:g}_s{seed}.csv")
        test_sets.append(ds)

    X_all = np.vstack([ds.X for ds in train_sets])
    y_all = np.concatenate([ds.y for ds in train_sets])
    rng = np.random.Generator(np.random.PCG64(cfg.svr_seed))
    order = rng.permutation(len(y_all))
    n_val = int(round(cfg.svr_val_fraction * len(y_all)))
    val_idx, tr_idx = order[:n_val], order[n_val:]
    ds_tr = svr.Dataset(X_all[tr_idx], y_all[tr_idx])
    ds_val = svr.Dataset(X_all[val_idx], y_all[val_idx])

    eps_list = tuple(f * float(y_all[tr_idx].std())
                     for f in cfg.svr_grid_eps_frac)
    best, table = svr.grid_search(ds_tr, ds_val,
                                  (cfg.svr_grid_c, eps_list),
                                  seed=cfg.svr_seed,
                                  max_passes=cfg.svr_max_passes)

    ds_full = svr.Dataset(X_all, y_all)
    ds_std, scaler = svr.standardize(ds_full)
    model = svr.train_svr(ds_std, best, scaler, seed=cfg.svr_seed,
                          max_passes=cfg.svr_max_passes)
    svr.save_model(model, out / "model.txt")

    lines = ["Load prediction training report", ""]
    lines.append(f"training rows: {len(ds_full)}  "
                 f"validation rows: {len(ds_val)}")
    lines.append(f"selected: C = {best.cost_c:g}, epsilon = "
                 f"{best.epsilon:.6g} N·m")
    lines.append(f"solver: passes = {model.passes}, converged = "
                 f"{model.converged}, train RMSE = {model.train_rmse:.6g} N·m")
    lines.append("")
    lines.append("grid (C, epsilon_Nm, validation RMSE_Nm):")
    for c, e, r in table:
        lines.append(f"  {c:<8g} {e:<14.6g} {r:.6g}")
    lines.append("")
    pooled_pred, pooled_act = [], []
    for ds, mean, seed in zip(test_sets, cfg.test_means, cfg.test_seeds):
        pred = svr.predict_batch(model, ds.X)
        rmse, acc = svr.accuracy(pred, ds.y)
        pooled_pred.append(pred)
        pooled_act.append(ds.y)
        lines.append(f"test mean {mean:g} m/s (seed {seed}): "
                     f"RMSE {rmse:.6g} N·m, accuracy {acc:.4f}")
    rmse, acc = svr.accuracy(np.concatenate(pooled_pred),
                             np.concatenate(pooled_act))
    lines.append(f"held-out pooled: RMSE {rmse:.6g} N·m, "
                 f"normalized accuracy {acc:.4f}")
    lines.append("")
    lines.append(METRIC_DEFINITIONS_FOOTER)
    report = "\n".join(lines)
    (out / "report.txt").write_text(report)
    return model, acc, report


def benchmark(cfg: ExperimentConfig, out_dir, svr_model=None,
              make_plots: bool = True) -> tuple:
    """Run the 3 schemes x benchmark winds matrix and export artifacts.

    Returns (metrics rows, traces dict keyed by (scheme, wind mean)).
    """
    errors = validate_config(cfg)
    if svr_model is None and not Path(cfg.svr_model_path).exists():
        errors.append(
            f"Life2 needs a trained model: '{cfg.svr_model_path}' not found "
            "(run train-svr first or set svr_model_path)")
    if errors:
        raise ConfigValidationError("invalid config:\n  "
                                    + "\n  ".join(errors))
    if svr_model is None:
        svr_model = svr.load_model(cfg.svr_model_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    design = build_design(cfg)

    rows, traces = [], {}
    for mean, seed in zip(cfg.bench_means, cfg.bench_seeds):
        wind = gen_wind_profile(mean, cfg.bench_ti, cfg.duration, cfg.dt,
                                seed)
        for scheme in SCHEMES:
            trace = simulate_closed_loop(cfg, design, wind, scheme,
                                         svr_model)
            rows.append(compute_metrics(cfg, trace))
            traces[(scheme, mean)] = trace
            stem = f"trace_{scheme.lower()}_w{mean:g}"
            trace.save_csv(out / f"{stem}.csv")
            trace.save_adaptation_csv(out / f"adaptation_{scheme.lower()}"
                                      f"_w{mean:g}.csv", cfg.tick_every)
    export_report(cfg, rows, traces, out, make_plots=make_plots)
    return rows, traces


def export_report(cfg: ExperimentConfig, rows, traces, out_dir,
                  make_plots: bool = True) -> None:
    """Write the metrics CSV, the cross-scheme comparison, the text
    report, and the per-wind figures."""
    if not rows:
        raise ValueError("no metric rows to export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_metrics_csv(rows, out / "metrics.csv")
    winds = []
    for r in rows:
        if r.wind_mean not in winds:
            winds.append(r.wind_mean)
    table = comparison_table(rows)
    save_comparison_csv(table, winds, out / "comparison.csv")

    lines = ["Benchmark report", ""]
    lines.append(f"{'scheme':<10}{'wind':>6}{'tower std':>14}"
                 f"{'pitch rms':>11}{'speed rmse':>12}{'power rmse':>12}"
                 f"{'D/D_d':>8}{'L_e':>10}")
    for r in rows:
        lines.append(f"{r.scheme:<10}{r.wind_mean:>6g}"
                     f"{r.tower_fa_std:>14.4e}{r.pitch_rate_rms:>11.4f}"
                     f"{r.gen_speed_rmse:>12.4f}{r.gen_power_rmse:>12.4e}"
                     f"{r.final_damage_ratio:>8.3f}"
                     f"{r.lifetime_estimate:>10.1f}")
    lines.append("")
    lines.append(f"{'metric':<22}{'scheme':<10}"
                 + "".join(f"{('w%g' % w):>12}" for w in winds)
                 + f"{'avg':>12}{'%':>9}")
    for name, scheme, vals, avg, pct in table:
        lines.append(f"{name:<22}{scheme:<10}"
                     + "".join(f"{v:>12.4e}" for v in vals)
                     + f"{avg:>12.4e}{pct:>9.2f}")
    lines.append("")
    lines.append(METRIC_DEFINITIONS_FOOTER)
    (out / "report.txt").write_text("\n".join(lines))

    if make_plots and traces:
        from .reporting import render_benchmark_figures
        render_benchmark_figures(cfg, traces, out)

