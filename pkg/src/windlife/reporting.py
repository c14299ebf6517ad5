"""Static benchmark figures: tower load / damage accumulation and the
speed / power / pitch-activity channels, one pair of files per wind."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy.signal import welch

SCHEME_STYLES = {
    "Baseline": dict(color="tab:red", lw=0.9),
    "Life1": dict(color="tab:blue", lw=0.9),
    "Life2": dict(color="tab:green", lw=0.9, ls="--"),
}
RPM = 60.0 / (2.0 * math.pi)


def _per_wind(traces, mean):
    return {s: tr for (s, w), tr in traces.items() if w == mean}


def render_benchmark_figures(cfg, traces, out_dir) -> list:
    """Write two PNGs per benchmark wind; returns the file list."""
    out = Path(out_dir)
    written = []
    winds = []
    for (_, w) in traces:
        if w not in winds:
            winds.append(w)
    for mean in winds:
        group = _per_wind(traces, mean)
        written.append(_load_damage_figure(cfg, group, mean, out))
        written.append(_regulation_figure(cfg, group, mean, out))
    return written


def _load_damage_figure(cfg, group, mean, out: Path) -> Path:
    fig, axes = plt.subplots(3, 1, figsize=(9, 8.5))
    ax = axes[0]
    for scheme, tr in group.items():
        c = tr.columns
        ax.plot(c["time_s"], c["tower_moment_Nm"] / 1e6,
                label=scheme, **SCHEME_STYLES[scheme])
    ax.set_ylabel("tower F-A moment [MN·m]")
    ax.set_xlabel("time [s]")
    ax.legend(loc="upper right", ncol=3, fontsize=8)
    ax.set_title(f"{mean:g} m/s mean wind")

    ax = axes[1]
    for scheme, tr in group.items():
        c = tr.columns
        ax.plot(c["time_s"], c["damage"] / cfg.damage_limit,
                label=scheme, **SCHEME_STYLES[scheme])
    ax.axhline(1.0, color="k", lw=0.8, ls=":")
    ax.axvline(cfg.lifetime_desired_s, color="k", lw=0.8, ls=":")
    ax.set_ylabel("damage D / D_d")
    ax.set_xlabel("time [s]")
    ax.legend(loc="upper left", ncol=3, fontsize=8)

    ax = axes[2]
    for scheme, tr in group.items():
        c = tr.columns
        fs = 1.0 / cfg.dt
        f, pxx = welch(c["tower_moment_Nm"], fs=fs, nperseg=4096)
        sel = (f > 0) & (f < 1.5)
        ax.semilogy(2 * np.pi * f[sel], pxx[sel], label=scheme,
                    **SCHEME_STYLES[scheme])
    ax.axvline(cfg.turbine.tower_modal_freq, color="k", lw=0.8, ls=":")
    ax.set_xlabel("frequency [rad/s]")
    ax.set_ylabel("moment PSD [(N·m)$^2$/Hz]")
    ax.legend(loc="upper right", ncol=3, fontsize=8)

    fig.tight_layout()
    path = out / f"load_damage_w{mean:g}.png"
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path


def _regulation_figure(cfg, group, mean, out: Path) -> Path:
    fig, axes = plt.subplots(3, 1, figsize=(9, 8.5), sharex=True)
    rated_rpm = cfg.turbine.rated_gen_speed * RPM
    ax = axes[0]
    for scheme, tr in group.items():
        c = tr.columns
        ax.plot(c["time_s"], c["gen_speed_rads"] * RPM,
                label=scheme, **SCHEME_STYLES[scheme])
    ax.axhline(rated_rpm, color="k", lw=0.8, ls=":")
    ax.set_ylabel("generator speed [rpm]")
    ax.legend(loc="upper right", ncol=3, fontsize=8)
    ax.set_title(f"{mean:g} m/s mean wind")

    ax = axes[1]
    for scheme, tr in group.items():
        c = tr.columns
        ax.plot(c["time_s"], c["gen_power_W"] / 1e6,
                label=scheme, **SCHEME_STYLES[scheme])
    ax.axhline(cfg.turbine.rated_power / 1e6, color="k", lw=0.8, ls=":")
    ax.set_ylabel("generator power [MW]")

    ax = axes[2]
    for scheme, tr in group.items():
        c = tr.columns
        ax.plot(c["time_s"], np.degrees(c["pitch_rate_rads"]),
                label=scheme, **SCHEME_STYLES[scheme])
    limit = math.degrees(cfg.turbine.pitch_rate_limit)
    ax.axhline(limit, color="k", lw=0.8, ls=":")
    ax.axhline(-limit, color="k", lw=0.8, ls=":")
    ax.set_ylabel("pitch rate [deg/s]")
    ax.set_xlabel("time [s]")

    fig.tight_layout()
    path = out / f"regulation_w{mean:g}.png"
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path
