"""Reduced-order 5 MW turbine surrogate: aerodynamics, plant dynamics,
pitch actuator, trim search and numerical linearization.

The plant is a five-state physical surrogate for the above-rated operating
region: rotor speed, first tower fore-aft mode (displacement + velocity)
and a second-order pitch actuator (angle + rate).  Generator torque is held
at its rated value, so speed regulation is done entirely by collective
pitch.  All integration is fixed-step RK4 and fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

RPM_TO_RADS = 2.0 * math.pi / 60.0
BETZ_LIMIT = 16.0 / 27.0

# Heier/Slootweg power-coefficient base form, pitch in degrees.
_CP_C1 = 0.5176
_CP_C2 = 116.0
_CP_C3 = 0.4
_CP_C4 = 5.0
_CP_C5 = 21.0
_CP_C6 = 0.0068


class TrimError(RuntimeError):
    """No above-rated equilibrium found; carries the torque residual."""


class PlantDivergedError(RuntimeError):
    """A plant state went non-finite during integration."""


@dataclass(frozen=True)
class TurbineParams:
    """Reference 5 MW turbine configuration (SI units, angles in rad)."""

    rated_power: float = 5.0e6
    hub_height: float = 90.0
    rotor_radius: float = 63.0
    hub_radius: float = 1.5
    rated_rotor_speed: float = 12.1 * RPM_TO_RADS
    cutin_wind: float = 3.0
    rated_wind: float = 11.4
    cutout_wind: float = 25.0
    gearbox_ratio: float = 90.0
    pitch_min: float = 0.0
    pitch_max: float = math.pi / 2.0
    pitch_rate_limit: float = math.radians(8.0)
    lambda_opt: float = 7.55
    beta_opt: float = 0.0
    cp_max: float = 0.482
    rotor_inertia: float = 4.31e7
    tower_modal_mass: float = 4.0e5
    tower_modal_freq: float = 2.08
    tower_damping_ratio: float = 0.01
    air_density: float = 1.225
    actuator_damping: float = 0.8

    def __post_init__(self):
        if self.rated_rotor_speed <= 0 or self.gearbox_ratio <= 0:
            raise ValueError("rated rotor speed and gearbox ratio must be positive")
        if not 0.0 < self.cp_max < 0.593:
            raise ValueError("cp_max must lie in (0, 0.593)")
        if not self.cutin_wind < self.rated_wind < self.cutout_wind:
            raise ValueError("wind speeds must satisfy cutin < rated < cutout")

    @property
    def rotor_area(self) -> float:
        return math.pi * self.rotor_radius**2

    @property
    def rated_gen_speed(self) -> float:
        """Rated generator speed, high-speed shaft (rad/s)."""
        return self.rated_rotor_speed * self.gearbox_ratio

    @property
    def rated_torque(self) -> float:
        """Rated generator torque referred to the low-speed shaft (N·m)."""
        return self.rated_power / self.rated_rotor_speed

    @property
    def actuator_freq(self) -> float:
        """Pitch actuator natural frequency: 4x rated rotor speed (rad/s)."""
        return 4.0 * self.rated_rotor_speed

    @property
    def tower_stiffness(self) -> float:
        return self.tower_modal_mass * self.tower_modal_freq**2

    @property
    def tower_damping(self) -> float:
        return (2.0 * self.tower_damping_ratio * self.tower_modal_mass
                * self.tower_modal_freq)


@dataclass
class PlantState:
    """Plant state vector (rotor, tower fore-aft mode, pitch actuator)."""

    rotor_speed: float
    tower_fa_displacement: float
    tower_fa_velocity: float
    pitch_angle: float
    pitch_rate: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rotor_speed, self.tower_fa_displacement,
                         self.tower_fa_velocity, self.pitch_angle,
                         self.pitch_rate])

    @classmethod
    def from_array(cls, x) -> "PlantState":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]),
                   float(x[4]))


@dataclass
class PlantOutputs:
    """Measurements plus the two prognosis signals, evaluated at a state."""

    gen_speed: float          # rad/s, high-speed shaft
    tower_fa_accel: float     # m/s^2
    tower_fa_moment: float    # N·m at tower base
    rotor_power: float        # W, aerodynamic


@dataclass(frozen=True)
class StateSpaceModel:
    """Continuous-time LTI quadruple at one above-rated operating point.

    Outputs are generator speed (rad/s, HSS) and tower fore-aft
    acceleration (m/s^2).  ``d_wind`` is the direct wind-to-output
    feedthrough of the acceleration channel; it is kept for fidelity
    checks only and is not part of the controller design model.
    """

    A: np.ndarray
    B: np.ndarray
    B_d: np.ndarray
    C: np.ndarray
    op_wind: float
    op_pitch: float
    trim_state: PlantState = None
    trim_outputs: PlantOutputs = None
    d_wind: np.ndarray = None

    @property
    def n(self) -> int:
        return self.A.shape[0]


def _cp_base(lam: float, beta_deg: float) -> float:
    """Exponential-in-1/lambda_i power coefficient, pitch in degrees."""
    lam_i_inv = 1.0 / (lam + 0.08 * beta_deg) - 0.035 / (beta_deg**3 + 1.0)
    return (_CP_C1 * (_CP_C2 * lam_i_inv - _CP_C3 * beta_deg - _CP_C4)
            * math.exp(-_CP_C5 * lam_i_inv) + _CP_C6 * lam)


def _cp_calibration() -> tuple[float, float]:
    """(lambda scale, gain) moving the base-form optimum to the reference
    (lambda_opt, cp_max) anchor.  Computed once, cached on the module."""
    global _CP_CAL
    if _CP_CAL is None:
        lams = np.linspace(2.0, 14.0, 2401)
        vals = [_cp_base(l, 0.0) for l in lams]
        i = int(np.argmax(vals))
        lo, hi = lams[max(i - 1, 0)], lams[min(i + 1, len(lams) - 1)]
        # golden-section refine of the base-form optimum
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c, d = b - invphi * (b - a), a + invphi * (b - a)
        for _ in range(80):
            if _cp_base(c, 0.0) > _cp_base(d, 0.0):
                b, d = d, c
                c = b - invphi * (b - a)
            else:
                a, c = c, d
                d = a + invphi * (b - a)
        lam_star = 0.5 * (a + b)
        _CP_CAL = (lam_star, _cp_base(lam_star, 0.0))
    return _CP_CAL


_CP_CAL = None


def _axial_induction(cp: float) -> float:
    """Smallest axial induction factor a in [0, 1/3] with 4a(1-a)^2 = cp.

    Closed-form (trigonometric) root of the depressed cubic; branch chosen
    so that a is monotone in cp with a(0) = 0 and a(16/27) = 1/3.
    """
    cp = min(max(cp, 0.0), BETZ_LIMIT - 1e-12)
    phi = math.acos(min(max(3.375 * cp - 1.0, -1.0), 1.0))
    a = 2.0 / 3.0 + (2.0 / 3.0) * math.cos(phi / 3.0 - 4.0 * math.pi / 3.0)
    return min(max(a, 0.0), 1.0 / 3.0)


def aero_coefficients(tip_speed_ratio: float, pitch: float,
                      params: TurbineParams) -> tuple[float, float]:
    """Power and thrust coefficients (cp, ct) at a tip-speed ratio and
    pitch angle (rad).

    The analytic form is calibrated so that cp peaks at
    (lambda_opt, cp_max) for pitch = beta_opt; ct follows from cp through
    the actuator-disc induction relation ct = 4a(1-a).
    """
    if not (math.isfinite(tip_speed_ratio) and math.isfinite(pitch)):
        raise ValueError("non-finite aero inputs")
    if tip_speed_ratio <= 0.0:
        raise ValueError("tip_speed_ratio must be positive")
    lam_star, cp_star = _cp_calibration()
    scale = lam_star / params.lambda_opt
    gain = params.cp_max / cp_star
    beta_deg = math.degrees(pitch - params.beta_opt)
    beta_deg = max(beta_deg, 0.0)
    cp = gain * _cp_base(tip_speed_ratio * scale, beta_deg)
    cp = min(max(cp, 0.0), 0.5925)
    a = _axial_induction(cp)
    ct = 4.0 * a * (1.0 - a)
    return cp, ct


def _aero_forces(omega: float, v_rel: float, pitch: float,
                 params: TurbineParams) -> tuple[float, float, float]:
    """(torque, thrust, power) of the rotor at relative wind v_rel."""
    v_rel = max(v_rel, 0.1)
    omega_g = max(omega, 1e-3)
    lam = omega_g * params.rotor_radius / v_rel
    cp, ct = aero_coefficients(lam, pitch, params)
    q = 0.5 * params.air_density * params.rotor_area
    power = q * v_rel**3 * cp
    torque = power / omega_g
    thrust = q * v_rel**2 * ct
    return torque, thrust, power


def generator_torque(omega: float, params: TurbineParams) -> float:
    """Rated low-speed-shaft torque, tapered to zero below half the rated
    rotor speed.  The taper never activates in regulated above-rated
    operation; it keeps deep off-design excursions physical (a generator
    cannot extract rated torque from a near-stalled rotor)."""
    w_hi = 0.5 * params.rated_rotor_speed
    w_lo = 0.1 * params.rated_rotor_speed
    if omega >= w_hi:
        return params.rated_torque
    if omega <= w_lo:
        return 0.0
    return params.rated_torque * (omega - w_lo) / (w_hi - w_lo)


def _actuator_accel(pitch: float, pitch_rate: float, command: float,
                    params: TurbineParams) -> float:
    """Second-order actuator: unity static gain, damping ratio 0.8."""
    w = params.actuator_freq
    return w * w * (command - pitch) - 2.0 * params.actuator_damping * w * pitch_rate


def _rhs(x: tuple, command: float, wind: float, params: TurbineParams) -> tuple:
    omega, xt, vt, beta, beta_rate = x
    torque, thrust, _ = _aero_forces(omega, wind - vt, beta, params)
    d_omega = (torque - generator_torque(omega, params)) / params.rotor_inertia
    d_vt = (thrust - params.tower_damping * vt
            - params.tower_stiffness * xt) / params.tower_modal_mass
    rate = min(max(beta_rate, -params.pitch_rate_limit), params.pitch_rate_limit)
    d_rate = _actuator_accel(beta, beta_rate, command, params)
    return (d_omega, vt, d_vt, rate, d_rate)


def _project(x: tuple, params: TurbineParams) -> tuple:
    """Clamp pitch angle and rate to their hardware limits."""
    omega, xt, vt, beta, rate = x
    rate = min(max(rate, -params.pitch_rate_limit), params.pitch_rate_limit)
    if beta <= params.pitch_min:
        beta = params.pitch_min
        rate = max(rate, 0.0)
    elif beta >= params.pitch_max:
        beta = params.pitch_max
        rate = min(rate, 0.0)
    return (omega, xt, vt, beta, rate)


def _rk4(x: tuple, command: float, wind: float, dt: float,
         params: TurbineParams) -> tuple:
    k1 = _rhs(x, command, wind, params)
    x2 = tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k1))
    k2 = _rhs(x2, command, wind, params)
    x3 = tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k2))
    k3 = _rhs(x3, command, wind, params)
    x4 = tuple(xi + dt * ki for xi, ki in zip(x, k3))
    k4 = _rhs(x4, command, wind, params)
    return tuple(xi + dt / 6.0 * (a + 2 * b + 2 * c + d)
                 for xi, a, b, c, d in zip(x, k1, k2, k3, k4))


def plant_outputs(state: PlantState, wind: float,
                  params: TurbineParams) -> PlantOutputs:
    """Measurements at a state: generator speed, tower acceleration,
    tower-base fore-aft moment and aerodynamic rotor power.

    The base moment is thrust x hub height minus the inertial reaction of
    the modal mass, which by the modal equation equals
    hub_height x (k_t x_t + c_t v_t).
    """
    _, thrust, power = _aero_forces(state.rotor_speed,
                                    wind - state.tower_fa_velocity,
                                    state.pitch_angle, params)
    accel = (thrust - params.tower_damping * state.tower_fa_velocity
             - params.tower_stiffness * state.tower_fa_displacement) \
        / params.tower_modal_mass
    moment = params.hub_height * (thrust - params.tower_modal_mass * accel)
    return PlantOutputs(
        gen_speed=state.rotor_speed * params.gearbox_ratio,
        tower_fa_accel=accel,
        tower_fa_moment=moment,
        rotor_power=power,
    )


def plant_step(state: PlantState, pitch_command: float, wind: float,
               dt: float, params: TurbineParams) -> tuple[PlantState, PlantOutputs]:
    """Advance the plant one RK4 step under a held pitch command and wind.

    Returns the new state together with the outputs evaluated at it.
    Raises :class:`PlantDivergedError` if any state goes non-finite.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not (wind > 0.0):
        raise ValueError("wind must be positive")
    if not math.isfinite(pitch_command):
        raise ValueError("non-finite pitch command")
    command = min(max(pitch_command, params.pitch_min), params.pitch_max)
    x = (state.rotor_speed, state.tower_fa_displacement,
         state.tower_fa_velocity, state.pitch_angle, state.pitch_rate)
    x = _project(_rk4(x, command, wind, dt, params), params)
    if not all(math.isfinite(v) for v in x):
        raise PlantDivergedError(
            f"plant state diverged: {x} (wind={wind}, command={command})")
    new = PlantState(*x)
    return new, plant_outputs(new, wind, params)


@dataclass
class ActuatorState:
    """Pitch actuator state (angle rad, rate rad/s)."""

    pitch: float = 0.0
    rate: float = 0.0


def pitch_actuator_step(act: ActuatorState, commanded_pitch: float, dt: float,
                        params: TurbineParams) -> tuple[ActuatorState, float]:
    """One RK4 step of the second-order pitch actuator alone.

    The output angle is saturated to the pitch range and the rate to the
    hardware rate limit.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not math.isfinite(commanded_pitch):
        raise ValueError("non-finite pitch command")
    u = min(max(commanded_pitch, params.pitch_min), params.pitch_max)
    rlim = params.pitch_rate_limit

    def f(y):
        rate = min(max(y[1], -rlim), rlim)
        return (rate, _actuator_accel(y[0], y[1], u, params))

    y = (act.pitch, act.rate)
    k1 = f(y)
    k2 = f((y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]))
    k3 = f((y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]))
    k4 = f((y[0] + dt * k3[0], y[1] + dt * k3[1]))
    beta = y[0] + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    rate = y[1] + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    rate = min(max(rate, -rlim), rlim)
    if beta <= params.pitch_min:
        beta, rate = params.pitch_min, max(rate, 0.0)
    elif beta >= params.pitch_max:
        beta, rate = params.pitch_max, min(rate, 0.0)
    new = ActuatorState(beta, rate)
    return new, new.pitch


def trim(params: TurbineParams, op_wind: float) -> PlantState:
    """Above-rated equilibrium: rated rotor speed, pitch balancing the
    rated torque, tower deflected statically by the thrust."""
    if not params.rated_wind <= op_wind <= params.cutout_wind:
        raise ValueError(f"op_wind {op_wind} outside above-rated region "
                         f"[{params.rated_wind}, {params.cutout_wind}]")
    omega = params.rated_rotor_speed

    def residual(beta):
        torque, _, _ = _aero_forces(omega, op_wind, beta, params)
        return torque - params.rated_torque

    lo, hi = params.pitch_min, math.radians(45.0)
    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo * r_hi > 0.0:
        raise TrimError(f"no equilibrium pitch at {op_wind} m/s: "
                        f"residuals ({r_lo:.3e}, {r_hi:.3e}) N·m")
    beta0 = brentq(residual, lo, hi, xtol=1e-13, rtol=1e-15)
    _, thrust, _ = _aero_forces(omega, op_wind, beta0, params)
    return PlantState(
        rotor_speed=omega,
        tower_fa_displacement=thrust / params.tower_stiffness,
        tower_fa_velocity=0.0,
        pitch_angle=beta0,
        pitch_rate=0.0,
    )


def linearize(params: TurbineParams, op_wind: float) -> StateSpaceModel:
    """Central finite-difference LTI model of the plant around the trimmed
    equilibrium at op_wind.

    C maps the state to (generator speed, tower F-A acceleration); the
    wind feedthrough of the acceleration is returned separately in
    ``d_wind`` and excluded from the design quadruple.
    """
    st = trim(params, op_wind)
    x0 = np.array([st.rotor_speed, st.tower_fa_displacement,
                   st.tower_fa_velocity, st.pitch_angle, st.pitch_rate])
    u0 = st.pitch_angle
    n = 5
    scales = np.array([0.1, 0.05, 0.05, 0.02, 0.02])
    steps = 1e-5 * scales

    def f(x, u, d):
        return np.array(_rhs(tuple(x), u, d, params))

    def g(x, d):
        s = PlantState.from_array(x)
        out = plant_outputs(s, d, params)
        return np.array([out.gen_speed, out.tower_fa_accel])

    A = np.zeros((n, n))
    C = np.zeros((2, n))
    for i in range(n):
        h = steps[i]
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        A[:, i] = (f(xp, u0, op_wind) - f(xm, u0, op_wind)) / (2 * h)
        C[:, i] = (g(xp, op_wind) - g(xm, op_wind)) / (2 * h)
    hu = 1e-5 * 0.02
    B = ((f(x0, u0 + hu, op_wind) - f(x0, u0 - hu, op_wind)) / (2 * hu)).reshape(n, 1)
    hd = 1e-5 * op_wind
    B_d = ((f(x0, u0, op_wind + hd) - f(x0, u0, op_wind - hd)) / (2 * hd)).reshape(n, 1)
    d_wind = ((g(x0, op_wind + hd) - g(x0, op_wind - hd)) / (2 * hd)).reshape(2, 1)
    return StateSpaceModel(A=A, B=B, B_d=B_d, C=C, op_wind=op_wind,
                           op_pitch=u0, trim_state=st,
                           trim_outputs=plant_outputs(st, op_wind, params),
                           d_wind=d_wind)
