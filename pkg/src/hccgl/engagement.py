"""Planar missile/target kinematics, relative geometry and intercept detection.

The scalar kernels (``*_core`` and friends) are numba-compiled so that the
batched rollout kernel in :mod:`hccgl._kernel` runs the exact same physics as
the dataclass-level API used by tests and scripts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from numba import njit

G0 = 9.81
TWO_PI = 2.0 * math.pi


class DegenerateGeometryError(ValueError):
    """Missile and target positions coincide; LOS is undefined."""


@njit(cache=True)
def wrap_angle(a):
    """Wrap an angle to (-pi, pi].

    In-range angles are returned untouched, and the reduction is odd
    (``wrap(-a) == -wrap(a)`` away from the cut) so pairwise differences stay
    exactly antisymmetric.
    """
    if -math.pi < a <= math.pi:
        return a
    w = a - TWO_PI * round(a / TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    elif w > math.pi:
        w -= TWO_PI
    return w


@njit(cache=True)
def geometry_core(x, y, v, alpha, xt, yt, vt, alpha_t):
    dx = xt - x
    dy = yt - y
    r = math.hypot(dx, dy)
    los = math.atan2(dy, dx)
    delta_m = wrap_angle(alpha - los)
    delta_t = wrap_angle(alpha_t - los)
    r_dot = -v * math.cos(delta_m) + vt * math.cos(delta_t)
    los_rate = (-v * math.sin(delta_m) + vt * math.sin(delta_t)) / r
    return r, r_dot, los, los_rate, delta_m, delta_t


@njit(cache=True)
def time_to_go_core(r, r_dot):
    if r_dot < 0.0:
        return -r / r_dot
    return math.inf


@njit(cache=True)
def missile_step_core(x, y, v, alpha, a_l, a_v, tau, v_min, v_max):
    x_new = x + v * math.cos(alpha) * tau
    y_new = y + v * math.sin(alpha) * tau
    alpha_new = wrap_angle(alpha + a_l / v * tau)
    v_new = min(max(v + a_v * tau, v_min), v_max)
    return x_new, y_new, v_new, alpha_new


@njit(cache=True)
def target_step_core(xt, yt, vt, alpha_t, a_t, tau):
    xt_new = xt + vt * math.cos(alpha_t) * tau
    yt_new = yt + vt * math.sin(alpha_t) * tau
    if vt > 0.0:
        alpha_t = wrap_angle(alpha_t + a_t / vt * tau)
    return xt_new, yt_new, alpha_t


@njit(cache=True)
def maneuver_core(bias, amplitude, omega, t):
    return bias + amplitude * math.sin(omega * t)


@njit(cache=True)
def closest_approach(px0, py0, px1, py1):
    """Minimum distance to the origin along the segment p0 -> p1.

    Returns ``(distance, s)`` with ``s`` in [0, 1] the segment fraction at
    which it is attained.
    """
    dx = px1 - px0
    dy = py1 - py0
    dd = dx * dx + dy * dy
    if dd == 0.0:
        return math.hypot(px0, py0), 0.0
    s = -(px0 * dx + py0 * dy) / dd
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    return math.hypot(px0 + s * dx, py0 + s * dy), s


@njit(cache=True)
def terminal_core(px0, py0, r_dot0, px1, py1, r_dot1, hit_threshold, window):
    """Decide whether the step p0 -> p1 (relative position, target minus
    missile) ends the engagement.

    Returns ``(terminal, miss_distance, fraction)``.
    """
    r1 = math.hypot(px1, py1)
    crossed = r_dot0 < 0.0 and r_dot1 >= 0.0
    if r1 >= hit_threshold and not crossed:
        return False, r1, 1.0
    miss, s = closest_approach(px0, py0, px1, py1)
    if r1 < hit_threshold or miss < window:
        return True, miss, s
    return False, r1, 1.0


@dataclass(frozen=True)
class Constraints:
    a_lmax: float = 50 * G0
    a_vmax: float = 5 * G0
    v_max: float = 900.0
    v_min: float = 350.0
    g: float = G0

    def __post_init__(self):
        if not (self.a_lmax > 0 and self.a_vmax > 0):
            raise ValueError("acceleration limits must be positive")
        if not (self.v_max > self.v_min > 0):
            raise ValueError("need v_max > v_min > 0")


@dataclass(frozen=True)
class Maneuver:
    """Target lateral acceleration program ``bias + amplitude*sin(omega*t)``."""

    amplitude: float = 0.0
    omega: float = 0.0
    bias: float = 0.0

    def __call__(self, t: float) -> float:
        return maneuver_core(self.bias, self.amplitude, self.omega, t)


@dataclass(frozen=True)
class MissileState:
    x: float
    y: float
    v: float
    alpha: float
    terminated_at: Optional[float] = None

    @property
    def active(self) -> bool:
        return self.terminated_at is None


@dataclass(frozen=True)
class TargetState:
    x: float
    y: float
    v: float = 0.0
    alpha: float = 0.0
    maneuver: Maneuver = field(default_factory=Maneuver)


@dataclass(frozen=True)
class RelativeGeometry:
    r: float
    r_dot: float
    los: float
    los_rate: float
    delta_m: float
    delta_t: float


def relative_geometry(missile: MissileState, target: TargetState) -> RelativeGeometry:
    if missile.x == target.x and missile.y == target.y:
        raise DegenerateGeometryError("missile and target positions coincide")
    return RelativeGeometry(
        *geometry_core(
            missile.x, missile.y, missile.v, missile.alpha,
            target.x, target.y, target.v, target.alpha,
        )
    )


def time_to_go(geom: RelativeGeometry) -> float:
    """Range over closing speed; +inf when the range is opening."""
    return time_to_go_core(geom.r, geom.r_dot)


def step_dynamics(
    missile: MissileState,
    target: TargetState,
    command: tuple[float, float],
    tau: float,
    constraints: Constraints = Constraints(),
    t: float = 0.0,
) -> tuple[MissileState, TargetState]:
    """Advance one missile and the target by one explicit Euler step.

    Both bodies are advanced from the pre-step snapshot; ``t`` is the time at
    the start of the step and only feeds the target maneuver.
    """
    a_l, a_v = command
    if not (math.isfinite(a_l) and math.isfinite(a_v)):
        raise ValueError(f"non-finite command {command!r}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    x, y, v, alpha = missile_step_core(
        missile.x, missile.y, missile.v, missile.alpha,
        a_l, a_v, tau, constraints.v_min, constraints.v_max,
    )
    xt, yt, alpha_t = target_step_core(
        target.x, target.y, target.v, target.alpha, target.maneuver(t), tau
    )
    return (
        replace(missile, x=x, y=y, v=v, alpha=alpha),
        replace(target, x=xt, y=yt, alpha=alpha_t),
    )


@dataclass(frozen=True)
class Snapshot:
    """Relative position (target minus missile) and range rate at time ``t``."""

    t: float
    dx: float
    dy: float
    r_dot: float

    @classmethod
    def of(cls, t: float, missile: MissileState, target: TargetState) -> "Snapshot":
        geom = relative_geometry(missile, target)
        return cls(t, target.x - missile.x, target.y - missile.y, geom.r_dot)


@dataclass(frozen=True)
class Terminal:
    miss_distance: float
    impact_time: float


def detect_terminal(
    history: "list[Snapshot]",
    hit_threshold: float = 0.5,
    near_miss_window: float = 5.0,
) -> Optional[Terminal]:
    """Check the latest step of ``history`` for an intercept.

    Returns ``None`` while the engagement is ongoing.
    """
    if len(history) < 2:
        return None
    a, b = history[-2], history[-1]
    done, miss, s = terminal_core(
        a.dx, a.dy, a.r_dot, b.dx, b.dy, b.r_dot, hit_threshold, near_miss_window
    )
    if not done:
        return None
    return Terminal(miss, a.t + s * (b.t - a.t))
