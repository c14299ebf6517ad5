"""Prognosis-to-control glue: damage-driven lifetime estimation with
threshold-based selection of the active controller gain set.

Per prognosis tick the tower-moment source (measured or predicted) feeds
the streaming rainflow counter; the lifetime estimate is compared with a
band around the desired lifetime, stepping one rung along the gain ladder
toward load-biased when life is being consumed too fast and toward
speed-biased when the budget is underused.  Switches respect a minimum
dwell time; Baseline mode never adapts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rainflow import RainflowState, SnCurve, estimate_lifetime, push_sample

MODES = ("Baseline", "Life1", "Life2")


@dataclass(frozen=True)
class LifetimeConfig:
    desired_lifetime: float          # s
    damage_limit: float              # Miner budget D_d
    band_fraction: float = 0.05
    dwell_min: float = 10.0          # s
    prognosis_period: float = 0.1    # s
    mode: str = "Baseline"
    n_gains: int = 3
    adaptation_enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.band_fraction < 1.0:
            raise ValueError("band fraction must lie in (0, 1)")
        if not self.dwell_min >= self.prognosis_period > 0.0:
            raise ValueError("dwell must be >= prognosis period > 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.desired_lifetime <= 0.0 or self.damage_limit <= 0.0:
            raise ValueError("lifetime and damage limit must be positive")

    @property
    def balanced_index(self) -> int:
        return (self.n_gains - 1) // 2


@dataclass
class PrognosisState:
    """Per-run adaptation state; owns the rainflow stream."""

    rainflow: RainflowState
    active_gain_index: int
    last_switch_time: float = 0.0
    L_e_latest: float = math.inf
    switched_last_tick: bool = False


def new_prognosis_state(cfg: LifetimeConfig,
                        hysteresis_gate: float = 0.0) -> PrognosisState:
    """Fresh state at the balanced rung.  Run start counts as a switch
    event, so the first adaptation can happen at t = dwell_min at the
    earliest (the lifetime estimate needs damage history to mean
    anything)."""
    return PrognosisState(
        rainflow=RainflowState(hysteresis_gate=hysteresis_gate),
        active_gain_index=cfg.balanced_index,
    )


def select_moment_source(mode: str, predicted: float,
                         measured: float) -> float:
    """Moment fed to the damage stream: predicted for Life2, measured for
    Life1 and for Baseline (audit-only in the latter)."""
    if not (math.isfinite(predicted) and math.isfinite(measured)):
        raise ValueError("non-finite moment")
    if mode == "Life2":
        return predicted
    if mode in ("Life1", "Baseline"):
        return measured
    raise ValueError(f"unknown mode {mode}")


def prognosis_tick(ps: PrognosisState, cfg: LifetimeConfig,
                   moment: float, time: float,
                   sn: SnCurve) -> tuple[PrognosisState, int]:
    """Ingest one moment sample, refresh the lifetime estimate, and apply
    the threshold logic to the active gain index."""
    push_sample(ps.rainflow, moment, time, sn)
    ps.L_e_latest = estimate_lifetime(ps.rainflow.damage_D_k, time,
                                      cfg.damage_limit)
    ps.switched_last_tick = False
    if cfg.mode == "Baseline" or not cfg.adaptation_enabled:
        ps.active_gain_index = cfg.balanced_index
        return ps, ps.active_gain_index

    if time - ps.last_switch_time >= cfg.dwell_min:
        lower = cfg.desired_lifetime * (1.0 - cfg.band_fraction)
        upper = cfg.desired_lifetime * (1.0 + cfg.band_fraction)
        step = 0
        if ps.L_e_latest < lower:
            step = 1      # consuming life too fast: toward load-biased
        elif ps.L_e_latest > upper:
            step = -1     # budget underused: toward speed-biased
        if step != 0:
            new_index = min(max(ps.active_gain_index + step, 0),
                            cfg.n_gains - 1)
            if new_index != ps.active_gain_index:
                ps.active_gain_index = new_index
                ps.last_switch_time = time
                ps.switched_last_tick = True
    return ps, ps.active_gain_index
