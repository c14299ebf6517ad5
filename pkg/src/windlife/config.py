"""Plain-text key=value experiment configuration.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored.  Values are scalars or comma-separated lists.  Unknown
keys are validation errors, as are missing files and inconsistent
settings; validation collects every problem before reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .turbine import TurbineParams

# Frozen S-N constant: calibrated so the Baseline scheme consumes about
# 1.2x the unit damage budget over 600 s at 17 m/s mean / 10% TI with the
# default seeds (see README, "Damage calibration").
DEFAULT_SN_CONSTANT_K = 1.555355e31


@dataclass
class ExperimentConfig:
    dt: float = 0.0125
    duration: float = 600.0
    design_op_wind: float = 18.0

    sn_exponent_m: float = 4.0
    sn_constant_k: float = DEFAULT_SN_CONSTANT_K
    rainflow_gate_fraction: float = 0.005

    lifetime_desired_s: float = 600.0
    damage_limit: float = 1.0
    band_fraction: float = 0.08
    dwell_s: float = 20.0
    prognosis_period_s: float = 0.1

    tower_weight_scales: tuple = (0.3, 1.0, 5.0)
    weights_state: tuple = (1800.0, 6.0, 4900.0, 3.8, 1.8)
    weight_control: float = 19000.0
    weight_integral: float = 34.0

    svr_grid_c: tuple = (0.1, 1.0, 10.0, 100.0)
    svr_grid_eps_frac: tuple = (0.001, 0.01, 0.05)
    svr_seed: int = 20
    svr_val_fraction: float = 0.2
    svr_max_passes: int = 400
    svr_model_path: str = "svr_model.txt"

    train_means: tuple = (15.0, 17.0, 19.0)
    train_tis: tuple = (0.05, 0.15)
    train_seeds: tuple = (101, 102, 103, 104, 105, 106)
    test_means: tuple = (15.0, 17.0, 19.0)
    test_ti: float = 0.10
    test_seeds: tuple = (201, 202, 203)
    bench_means: tuple = (19.0, 17.0, 15.0)
    bench_ti: float = 0.10
    bench_seeds: tuple = (301, 302, 303)

    turbine: TurbineParams = field(default_factory=TurbineParams)

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def tick_every(self) -> int:
        return int(round(self.prognosis_period_s / self.dt))


_INT_KEYS = {"svr_seed", "svr_max_passes"}
_INT_TUPLE_KEYS = {"train_seeds", "test_seeds", "bench_seeds"}
_STR_KEYS = {"svr_model_path"}
_TUPLE_KEYS = {"tower_weight_scales", "weights_state", "svr_grid_c",
               "svr_grid_eps_frac", "train_means", "train_tis",
               "test_means", "bench_means"} | _INT_TUPLE_KEYS


def _known_keys() -> set:
    keys = {f.name for f in fields(ExperimentConfig)} - {"turbine"}
    keys |= {f"turbine_{f.name}" for f in fields(TurbineParams)}
    return keys


def parse_config(path) -> ExperimentConfig:
    """Read a config file over the defaults.  Raises ValueError listing
    every malformed line or unknown key."""
    text = Path(path).read_text()
    errors = []
    values = {}
    turbine_values = {}
    known = _known_keys()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            errors.append(f"line {lineno}: unknown key '{key}'")
            continue
        try:
            if key in _STR_KEYS:
                parsed = val
            elif key in _TUPLE_KEYS:
                conv = int if key in _INT_TUPLE_KEYS else float
                parsed = tuple(conv(v.strip()) for v in val.split(","))
            elif key in _INT_KEYS:
                parsed = int(val)
            else:
                parsed = float(val)
        except ValueError:
            errors.append(f"line {lineno}: cannot parse value '{val}'")
            continue
        if key.startswith("turbine_"):
            turbine_values[key[len("turbine_"):]] = parsed
        else:
            values[key] = parsed
    if errors:
        raise ValueError("config errors:\n  " + "\n  ".join(errors))
    cfg = ExperimentConfig(**values)
    if turbine_values:
        cfg = replace(cfg, turbine=replace(cfg.turbine, **turbine_values))
    return cfg


def validate_config(cfg: ExperimentConfig) -> list:
    """Collect every validation failure; empty list means valid."""
    errors = []
    if cfg.dt <= 0.0:
        errors.append("dt must be positive")
    if cfg.duration <= 0.0:
        errors.append("duration must be positive")
    elif cfg.dt > 0.0 and abs(cfg.duration / cfg.dt
                              - round(cfg.duration / cfg.dt)) > 1e-9:
        errors.append("duration must be an integer number of dt steps")
    if cfg.dt > 0.0 and cfg.prognosis_period_s > 0.0:
        ratio = cfg.prognosis_period_s / cfg.dt
        if abs(ratio - round(ratio)) > 1e-9:
            errors.append("prognosis period must be a multiple of dt")
    if cfg.prognosis_period_s <= 0.0:
        errors.append("prognosis period must be positive")
    if cfg.dwell_s < cfg.prognosis_period_s:
        errors.append("dwell must be at least one prognosis period")
    if not 0.0 < cfg.band_fraction < 1.0:
        errors.append("band fraction must lie in (0, 1)")
    if cfg.lifetime_desired_s <= 0.0:
        errors.append("desired lifetime must be positive")
    if cfg.damage_limit <= 0.0:
        errors.append("damage limit must be positive")
    if cfg.sn_exponent_m <= 0.0 or cfg.sn_constant_k <= 0.0:
        errors.append("S-N parameters must be positive")
    if cfg.rainflow_gate_fraction < 0.0:
        errors.append("rainflow gate fraction must be non-negative")
    if len(cfg.weights_state) != 5:
        errors.append("weights_state needs 5 entries")
    if any(w <= 0.0 for w in cfg.weights_state) or cfg.weight_control <= 0.0 \
            or cfg.weight_integral <= 0.0:
        errors.append("regulator weights must be positive")
    if len(cfg.tower_weight_scales) < 2:
        errors.append("gain ladder needs at least 2 rungs")
    elif list(cfg.tower_weight_scales) != sorted(cfg.tower_weight_scales):
        errors.append("tower weight scales must be non-decreasing")
    if not cfg.turbine.rated_wind <= cfg.design_op_wind <= cfg.turbine.cutout_wind:
        errors.append("design operating wind must be in the above-rated region")
    if len(cfg.train_seeds) != len(cfg.train_means) * len(cfg.train_tis):
        errors.append("need one train seed per (mean, TI) pair")
    if len(cfg.test_seeds) != len(cfg.test_means):
        errors.append("need one test seed per test mean")
    if len(cfg.bench_seeds) != len(cfg.bench_means):
        errors.append("need one benchmark seed per benchmark mean")
    if not 0.0 < cfg.svr_val_fraction < 0.5:
        errors.append("svr_val_fraction must lie in (0, 0.5)")
    if len(cfg.svr_grid_c) == 0 or len(cfg.svr_grid_eps_frac) == 0:
        errors.append("SVR grid must be non-empty")
    if cfg.svr_max_passes < 1:
        errors.append("svr_max_passes must be at least 1")
    for mean in (*cfg.train_means, *cfg.test_means, *cfg.bench_means):
        if not cfg.turbine.rated_wind <= mean <= cfg.turbine.cutout_wind:
            errors.append(f"wind mean {mean} outside the above-rated region")
    for ti in (*cfg.train_tis, cfg.test_ti, cfg.bench_ti):
        if not 0.0 <= ti < 0.5:
            errors.append(f"turbulence intensity {ti} outside [0, 0.5)")
    return errors


def write_config(cfg: ExperimentConfig, path) -> None:
    """Serialize a config in the same key=value format."""
    lines = []
    for f in fields(ExperimentConfig):
        if f.name == "turbine":
            continue
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            lines.append(f"{f.name} = " + ",".join(str(x) for x in v))
        else:
            lines.append(f"{f.name} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")
