"""Hybrid guidance: proportional navigation blended with the learned command."""

from __future__ import annotations

from dataclasses import dataclass

from numba import njit

from .engagement import Constraints, RelativeGeometry


@dataclass(frozen=True)
class GuidanceParams:
    nav_constant: float = 4.0
    eta: float = 0.3

    def __post_init__(self):
        if not self.nav_constant > 0:
            raise ValueError("navigation constant must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("guidance gain must lie in [0, 1]")


@njit(cache=True)
def blend_core(up_l, up_v, ue_l, ue_v, eta, a_lmax, a_vmax):
    a_l = (1.0 - eta) * up_l + eta * ue_l
    a_v = (1.0 - eta) * up_v + eta * ue_v
    return min(max(a_l, -a_lmax), a_lmax), min(max(a_v, -a_vmax), a_vmax)


def png_command(geom: RelativeGeometry, v: float, nav_constant: float) -> tuple[float, float]:
    # PN only shapes the lateral channel
    return nav_constant * geom.los_rate * v, 0.0


def blend_and_clamp(u_p, u_e, eta: float, constraints: Constraints) -> tuple[float, float]:
    if not 0.0 <= eta <= 1.0:
        raise ValueError("guidance gain must lie in [0, 1]")
    return blend_core(
        float(u_p[0]), float(u_p[1]), float(u_e[0]), float(u_e[1]),
        eta, constraints.a_lmax, constraints.a_vmax,
    )
