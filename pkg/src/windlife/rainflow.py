"""Online three-point rainflow cycle counting with streaming Miner's-rule
damage accumulation, plus an independent offline oracle for testing.

Counting convention used by both paths: whenever the three most recent
turning points X, Y, Z satisfy |X-Y| <= |Y-Z|, the pair (X, Y) closes a
full cycle of range |X-Y| and is removed; the check repeats recursively.
Whatever remains unresolved at the end of a stream is drained as
consecutive half cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Cycle:
    """One counted load cycle (weight 1.0) or residue half cycle (0.5)."""

    range_s: float      # N·m
    mean: float         # N·m
    weight: float       # 1.0 or 0.5
    closed_at: float    # s

    def damage(self, sn: "SnCurve") -> float:
        return self.weight * self.range_s**sn.exponent_m / sn.constant_k


@dataclass(frozen=True)
class SnCurve:
    """Material fatigue law: allowable cycles N = K / s^m."""

    exponent_m: float
    constant_k: float

    def __post_init__(self):
        if self.exponent_m <= 0.0 or self.constant_k <= 0.0:
            raise ValueError("S-N exponent and constant must be positive")


@dataclass
class RainflowState:
    """Streaming counter state for one load channel.

    ``hysteresis_gate`` is an absolute load threshold: a direction
    reversal smaller than the gate is treated as noise and does not
    produce a turning point.
    """

    hysteresis_gate: float = 0.0
    extrema_stack: list = field(default_factory=list)   # (value, time)
    cycles: list = field(default_factory=list)
    damage_D_k: float = 0.0
    elapsed_T_k: float = 0.0
    last_sample: float = math.nan
    # pending extremum candidate and current direction (+1 rising, -1
    # falling, 0 undetermined)
    _cand: float = math.nan
    _cand_time: float = 0.0
    _dir: int = 0
    _last_time: float = -math.inf


def _close_cycles(rf: RainflowState, sn: SnCurve, now: float) -> list:
    """Apply the three-point rule to the stack until it no longer fires."""
    closed = []
    stack = rf.extrema_stack
    while len(stack) >= 3:
        x, y, z = stack[-3][0], stack[-2][0], stack[-1][0]
        if abs(x - y) > abs(y - z):
            break
        cyc = Cycle(range_s=abs(x - y), mean=0.5 * (x + y), weight=1.0,
                    closed_at=now)
        del stack[-3:-1]
        rf.cycles.append(cyc)
        rf.damage_D_k += cyc.damage(sn)
        closed.append(cyc)
    return closed


def push_sample(rf: RainflowState, load: float, time: float,
                sn: SnCurve) -> tuple[RainflowState, list]:
    """Feed one load sample into the stream.

    Returns the (mutated) state and any cycles closed by this sample.
    Time must be strictly increasing across calls.
    """
    if not (math.isfinite(load) and math.isfinite(time)):
        raise ValueError("non-finite rainflow sample")
    if time <= rf._last_time:
        raise ValueError(f"non-monotone time: {time} after {rf._last_time}")
    rf._last_time = time
    rf.elapsed_T_k = time
    rf.last_sample = load

    closed: list = []
    if math.isnan(rf._cand):
        rf._cand, rf._cand_time = load, time
        return rf, closed

    gate = rf.hysteresis_gate
    if rf._dir == 0:
        if load > rf._cand + gate:
            rf.extrema_stack.append((rf._cand, rf._cand_time))
            rf._dir, rf._cand, rf._cand_time = 1, load, time
        elif load < rf._cand - gate:
            rf.extrema_stack.append((rf._cand, rf._cand_time))
            rf._dir, rf._cand, rf._cand_time = -1, load, time
    elif rf._dir == 1:
        if load >= rf._cand:
            rf._cand, rf._cand_time = load, time
        elif rf._cand - load > gate:
            rf.extrema_stack.append((rf._cand, rf._cand_time))
            closed = _close_cycles(rf, sn, time)
            rf._dir, rf._cand, rf._cand_time = -1, load, time
    else:
        if load <= rf._cand:
            rf._cand, rf._cand_time = load, time
        elif load - rf._cand > gate:
            rf.extrema_stack.append((rf._cand, rf._cand_time))
            closed = _close_cycles(rf, sn, time)
            rf._dir, rf._cand, rf._cand_time = 1, load, time
    return rf, closed


def finalize(rf: RainflowState, sn: SnCurve) -> tuple[RainflowState, list]:
    """Commit the pending extremum, close what the three-point rule still
    allows, and drain the residue as consecutive half cycles."""
    residual: list = []
    now = rf.elapsed_T_k
    if not math.isnan(rf._cand) and rf._dir != 0:
        rf.extrema_stack.append((rf._cand, rf._cand_time))
        rf._cand = math.nan
        rf._dir = 0
        _close_cycles(rf, sn, now)
    stack = rf.extrema_stack
    for (a, _), (b, _) in zip(stack, stack[1:]):
        cyc = Cycle(range_s=abs(a - b), mean=0.5 * (a + b), weight=0.5,
                    closed_at=now)
        rf.cycles.append(cyc)
        rf.damage_D_k += cyc.damage(sn)
        residual.append(cyc)
    stack.clear()
    return rf, residual


def estimate_lifetime(damage_D_k: float, elapsed_T_k: float,
                      damage_limit_D_d: float) -> float:
    """Projected time to consume the damage budget at the observed rate:
    L_e = (T_k / D_k) * D_d, with +inf when no damage has accrued yet."""
    if damage_D_k < 0.0 or damage_limit_D_d < 0.0:
        raise ValueError("damage values must be non-negative")
    if elapsed_T_k <= 0.0:
        raise ValueError("elapsed time must be positive")
    if damage_D_k == 0.0:
        return math.inf
    return elapsed_T_k / damage_D_k * damage_limit_D_d


def offline_rainflow_oracle(series) -> list:
    """Batch three-point rainflow count of a complete series.

    Independent of the streaming implementation (shares no code with
    :func:`push_sample`): extracts all turning points of the finished
    series first, then applies the counting rule in one pass and emits
    the residue as half cycles.  ``closed_at`` carries the sample index.
    """
    vals = [float(v) for v in series]
    if len(vals) < 2:
        raise ValueError("series must have at least 2 samples")

    turning: list = []   # (value, index)
    i = 0
    n = len(vals)
    while i + 1 < n and vals[i + 1] == vals[i]:
        i += 1
    if i + 1 < n:
        turning.append((vals[i], i))
        direction = 1 if vals[i + 1] > vals[i] else -1
        prev = vals[i + 1]
        prev_idx = i + 1
        for j in range(i + 2, n):
            v = vals[j]
            if v == prev:
                continue
            d = 1 if v > prev else -1
            if d != direction:
                turning.append((prev, prev_idx))
                direction = d
            prev, prev_idx = v, j
        turning.append((prev, prev_idx))

    full: list = []
    stack: list = []
    for point in turning:
        stack.append(point)
        while len(stack) >= 3:
            r_inner = abs(stack[-3][0] - stack[-2][0])
            r_outer = abs(stack[-2][0] - stack[-1][0])
            if r_inner > r_outer:
                break
            a, b = stack[-3], stack[-2]
            full.append(Cycle(range_s=abs(a[0] - b[0]),
                              mean=0.5 * (a[0] + b[0]), weight=1.0,
                              closed_at=float(point[1])))
            stack[-3:] = [stack[-1]]
    last_idx = float(turning[-1][1]) if turning else float(n - 1)
    halves = [Cycle(range_s=abs(a[0] - b[0]), mean=0.5 * (a[0] + b[0]),
                    weight=0.5, closed_at=last_idx)
              for a, b in zip(stack, stack[1:])]
    return full + halves


def total_damage(cycles, sn: SnCurve) -> float:
    return sum(c.damage(sn) for c in cycles)
