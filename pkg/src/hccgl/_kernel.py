"""Compiled closed-loop engagement rollout.

Everything physical is delegated to the scalar cores of the engagement,
topology, reward, policy and guidance modules; this file only sequences them.
"""

import math

import numpy as np
from numba import njit

from .engagement import (
    geometry_core,
    maneuver_core,
    missile_step_core,
    target_step_core,
    terminal_core,
    time_to_go_core,
    wrap_angle,
)
from .guidance import blend_core
from .policy import forward_core
from .reward import flight_reward_core, terminal_reward_core
from .topology import angle_errors_core, time_errors_core

TRAJ_COLUMNS = ("t", "missile", "x", "y", "v", "alpha", "los", "a_l", "a_v", "range", "x_t", "y_t")
ERROR_COLUMNS = ("t", "missile", "e_t", "e_a", "e_xi", "t_go", "r_flight", "u_p_l", "u_e_l", "u_e_v")
DIAG_COLUMNS = ("e_t", "e_a", "e_xi", "zem", "impact_time", "intercepted")


@njit(cache=True)
def _snapshot(t, active, r_now, rdot_now, los_now, impact, exi_frozen, desired,
              adjacency, tgo_sat, tgo, exi, et, ea):
    n = active.shape[0]
    for j in range(n):
        if active[j]:
            tgo[j] = time_to_go_core(r_now[j], rdot_now[j])
            exi[j] = wrap_angle(los_now[j] - desired[j])
        else:
            # time since impact keeps counting so impact-time differences persist
            tgo[j] = impact[j] - t
            exi[j] = exi_frozen[j]
    time_errors_core(tgo, adjacency, tgo_sat, et)
    angle_errors_core(exi, adjacency, ea)


@njit(cache=True, nogil=True)
def rollout_kernel(m0, tgt0, maneuver, adjacency, desired, theta, q1, q2,
                   limits, rew, nav, eta, tau, frameskip, time_limit,
                   hit_threshold, window, tgo_sat, fitness_floor, record):
    n = m0.shape[0]
    a_lmax, a_vmax, v_min, v_max = limits[0], limits[1], limits[2], limits[3]
    g_a, g_t, xi_a, xi_t = rew[0], rew[1], rew[2], rew[3]
    k_a, k_t, b_a, b_t = rew[4], rew[5], rew[6], rew[7]
    dt_eval = frameskip * tau
    max_steps = int(math.ceil(time_limit / tau - 1e-9))

    x = m0[:, 0].copy()
    y = m0[:, 1].copy()
    v = m0[:, 2].copy()
    al = m0[:, 3].copy()
    xt, yt, vt, at = tgt0[0], tgt0[1], tgt0[2], tgt0[3]

    active = np.ones(n, dtype=np.bool_)
    fitness = np.zeros(n)
    impact = np.full(n, np.nan)
    exi_frozen = np.zeros(n)
    diag = np.full((n, 6), np.nan)
    cmd_l = np.zeros(n)
    cmd_v = np.zeros(n)
    tgo = np.empty(n)
    exi = np.empty(n)
    et = np.empty(n)
    ea = np.empty(n)
    r_now = np.empty(n)
    rdot_now = np.empty(n)
    los_now = np.empty(n)
    losrate = np.empty(n)
    prev_dx = np.empty(n)
    prev_dy = np.empty(n)
    prev_rdot = np.empty(n)
    prev_los = np.empty(n)
    newly = np.zeros(n, dtype=np.bool_)
    miss = np.zeros(n)

    if record:
        traj = np.full((max_steps * n, 12), np.nan)
        errs = np.full(((max_steps // frameskip + 1) * n, 10), np.nan)
    else:
        traj = np.empty((0, 12))
        errs = np.empty((0, 10))
    n_traj = 0
    n_errs = 0

    for i in range(n):
        r_now[i], rdot_now[i], los_now[i], losrate[i], _, _ = geometry_core(
            x[i], y[i], v[i], al[i], xt, yt, vt, at)

    aborted = False
    n_active = n
    step = 0
    t = 0.0
    while step < max_steps and n_active > 0:
        if step % frameskip == 0:
            _snapshot(t, active, r_now, rdot_now, los_now, impact, exi_frozen,
                      desired, adjacency, tgo_sat, tgo, exi, et, ea)
            for i in range(n):
                if not active[i]:
                    continue
                rf = flight_reward_core(ea[i], et[i], b_a, b_t, k_a, k_t)
                fitness[i] += rf * dt_eval
                ue_l, ue_v = forward_core(theta[i], q1, q2, ea[i], et[i], exi[i], a_lmax, a_vmax)
                up_l = nav * losrate[i] * v[i]
                cmd_l[i], cmd_v[i] = blend_core(up_l, 0.0, ue_l, ue_v, eta, a_lmax, a_vmax)
                if record:
                    row = errs[n_errs]
                    row[0] = t
                    row[1] = i
                    row[2] = et[i]
                    row[3] = ea[i]
                    row[4] = exi[i]
                    row[5] = tgo[i]
                    row[6] = rf
                    row[7] = up_l
                    row[8] = ue_l
                    row[9] = ue_v
                    n_errs += 1

        if record:
            for i in range(n):
                if active[i]:
                    row = traj[n_traj]
                    row[0] = t
                    row[1] = i
                    row[2] = x[i]
                    row[3] = y[i]
                    row[4] = v[i]
                    row[5] = al[i]
                    row[6] = los_now[i]
                    row[7] = cmd_l[i]
                    row[8] = cmd_v[i]
                    row[9] = r_now[i]
                    row[10] = xt
                    row[11] = yt
                    n_traj += 1

        a_t = maneuver_core(maneuver[0], maneuver[1], maneuver[2], t)
        for i in range(n):
            if active[i]:
                prev_dx[i] = xt - x[i]
                prev_dy[i] = yt - y[i]
                prev_rdot[i] = rdot_now[i]
                prev_los[i] = los_now[i]
                x[i], y[i], v[i], al[i] = missile_step_core(
                    x[i], y[i], v[i], al[i], cmd_l[i], cmd_v[i], tau, v_min, v_max)
        xt, yt, at = target_step_core(xt, yt, vt, at, a_t, tau)
        step += 1
        t = step * tau

        any_new = False
        for i in range(n):
            newly[i] = False
            if not active[i]:
                continue
            if not (math.isfinite(x[i]) and math.isfinite(y[i])
                    and math.isfinite(v[i]) and math.isfinite(al[i])):
                aborted = True
                break
            dx = xt - x[i]
            dy = yt - y[i]
            if dx == 0.0 and dy == 0.0:
                r_now[i] = 0.0
                rdot_now[i] = 0.0
            else:
                r_now[i], rdot_now[i], los_now[i], losrate[i], _, _ = geometry_core(
                    x[i], y[i], v[i], al[i], xt, yt, vt, at)
            done, md, s = terminal_core(prev_dx[i], prev_dy[i], prev_rdot[i],
                                        dx, dy, rdot_now[i], hit_threshold, window)
            if done:
                newly[i] = True
                miss[i] = md
                impact[i] = (step - 1 + s) * tau
                exi_frozen[i] = wrap_angle(prev_los[i] - desired[i])
                any_new = True
        if aborted or not (math.isfinite(xt) and math.isfinite(yt)):
            aborted = True
            break

        if any_new:
            for i in range(n):
                if newly[i]:
                    active[i] = False
                    n_active -= 1
            _snapshot(t, active, r_now, rdot_now, los_now, impact, exi_frozen,
                      desired, adjacency, tgo_sat, tgo, exi, et, ea)
            for i in range(n):
                if newly[i]:
                    fitness[i] += terminal_reward_core(exi[i], et[i], g_a, g_t, xi_a, xi_t)
                    diag[i, 0] = et[i]
                    diag[i, 1] = ea[i]
                    diag[i, 2] = exi[i]
                    diag[i, 3] = miss[i]
                    diag[i, 4] = impact[i]
                    diag[i, 5] = 1.0

    if aborted:
        for i in range(n):
            fitness[i] = fitness_floor
    elif n_active > 0:
        _snapshot(t, active, r_now, rdot_now, los_now, impact, exi_frozen,
                  desired, adjacency, tgo_sat, tgo, exi, et, ea)
        for i in range(n):
            if active[i]:
                diag[i, 0] = et[i]
                diag[i, 1] = ea[i]
                diag[i, 2] = exi[i]
                diag[i, 3] = r_now[i]
                diag[i, 4] = np.nan
                diag[i, 5] = 0.0

    return fitness, diag, aborted, t, traj[:n_traj], errs[:n_errs]
