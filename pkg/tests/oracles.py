"""Independent reference computations for the numeric examples in the tests.

Nothing here imports the package. Each oracle uses a different formulation
from the implementation it checks (vector projections instead of heading
angles, adaptive quadrature instead of the trapezoid rule, and so on), so an
agreement between the two is evidence rather than tautology.
"""

import math

import numpy as np
from scipy import integrate, optimize, stats


def relative_motion(missile_xy, missile_v, missile_alpha, target_xy, target_v=0.0, target_alpha=0.0):
    """Range, range rate and LOS rate from relative position/velocity vectors."""
    dp = np.subtract(target_xy, missile_xy, dtype=float)
    vm = missile_v * np.array([math.cos(missile_alpha), math.sin(missile_alpha)])
    vt = target_v * np.array([math.cos(target_alpha), math.sin(target_alpha)])
    dv = vt - vm
    r = float(np.linalg.norm(dp))
    r_dot = float(dp @ dv) / r
    los_rate = float(dp[0] * dv[1] - dp[1] * dv[0]) / r**2
    return r, r_dot, math.atan2(dp[1], dp[0]), los_rate


def euler_speed(v0, a_v, tau, steps, v_min=350.0, v_max=900.0):
    v = v0
    for _ in range(steps):
        v = min(max(v + a_v * tau, v_min), v_max)
    return v


def segment_miss(p0, p1):
    """Closest distance to the origin on a segment, by bounded scalar minimisation."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    out = optimize.minimize_scalar(
        lambda s: float(np.linalg.norm(p0 + s * (p1 - p0))),
        bounds=(0, 1), method="bounded", options={"xatol": 1e-12},
    )
    return out.fun


def rank_utilities(m):
    """Utility table written out term by term."""
    num = [max(0.0, math.log(m / 2 + 1) - math.log(k)) for k in range(1, m + 1)]
    tot = sum(num)
    return [u / tot - 1.0 / m for u in num]


def shaped(raw):
    util = rank_utilities(len(raw))
    # rank 1 = largest raw; no ties in the oracle's inputs
    ranks = sorted(range(len(raw)), key=lambda k: -raw[k])
    out = [0.0] * len(raw)
    for pos, k in enumerate(ranks):
        out[k] = util[pos]
    return out


def gaussian_ratio(eps, sigma):
    """Density ratio N(eps; 0, sigma^2) / N(0; 0, sigma^2)."""
    return stats.norm.pdf(eps, scale=sigma) / stats.norm.pdf(0.0, scale=sigma)


def terminal_reward(e_xi, e_t, gamma_a, gamma_t, xi_a, xi_t):
    return gamma_a * math.exp(-xi_a * abs(e_xi)) + gamma_t * math.exp(-xi_t * abs(e_t))


def flight_reward(e_a, e_t, beta_a, beta_t, k_a, k_t):
    return beta_a * (math.exp(-k_a * abs(e_a)) - 1) + beta_t * (math.exp(-k_t * abs(e_t)) - 1)


def unit_network_lateral_fraction():
    """q1 = q2 = 1, all weights 1, zero input: tanh of the second layer value."""
    sig = lambda z: 1 / (1 + math.exp(-z))
    z1 = 3 * sig(0.0)
    z2 = sig(z1)
    return math.tanh(z2), z1, z2


def eggholder(ti, tc):
    a = 30 * tc + 47
    return (a * math.sin(math.sqrt(abs(a + 15 * ti))) - 30 * ti * math.sin(math.sqrt(abs(30 * ti - a)))) / 200 - 0.2


def marginal(ti, sigma, mu_c=0.0, lo=-2.0, hi=2.0):
    """Truncated Gaussian expectation by adaptive quadrature, told where the
    integrand's square-root cusps sit."""
    w = lambda c: math.exp(-0.5 * ((c - mu_c) / sigma) ** 2)
    cusps = [p for p in ((-47 - 15 * ti) / 30, (30 * ti - 47) / 30) if lo < p < hi] or None
    num = integrate.quad(lambda c: eggholder(ti, c) * w(c), lo, hi, points=cusps, limit=400,
                         epsabs=1e-14, epsrel=1e-13)[0]
    den = integrate.quad(w, lo, hi, limit=400, epsabs=1e-15, epsrel=1e-13)[0]
    return num / den


def marginal_slope(ti, sigma, mu_c=0.0, h=1e-4):
    return (marginal(ti + h, sigma, mu_c) - marginal(ti - h, sigma, mu_c)) / (2 * h)


def pn_miss(missile, target_xy, nav=4.0, tau=0.005, t_max=60.0, a_lmax=50 * 9.81):
    """Straightforward pure-PN simulation in vector form for a stationary target."""
    x, y, v, alpha = missile
    best = math.inf
    for _ in range(int(t_max / tau)):
        dx, dy = target_xy[0] - x, target_xy[1] - y
        r = math.hypot(dx, dy)
        vx, vy = v * math.cos(alpha), v * math.sin(alpha)
        los_rate = (dx * (-vy) - dy * (-vx)) / r**2
        a = max(-a_lmax, min(a_lmax, nav * v * los_rate))
        nx, ny = x + vx * tau, y + vy * tau
        # distance to target along this step
        px0, py0 = dx, dy
        px1, py1 = target_xy[0] - nx, target_xy[1] - ny
        ddx, ddy = px1 - px0, py1 - py0
        s = min(1.0, max(0.0, -(px0 * ddx + py0 * ddy) / (ddx * ddx + ddy * ddy)))
        best = min(best, math.hypot(px0 + s * ddx, py0 + s * ddy))
        if math.hypot(px1, py1) > r and r < 50:
            break
        x, y, alpha = nx, ny, alpha + a / v * tau
    return best
