"""Pure-Python reference implementation of the hot loops.

These loops are the behavioral reference: the compiled backend must
reproduce them tick for tick. They run on plain floats to stay usable
when the extension is unavailable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRAVITY = 9.81

STATUS_RUNNING = 0
STATUS_SUCCESS = 1
STATUS_FELL_OFF = 2
STATUS_STUCK = 3
STATUS_FORCE_VIOLATION = 4

POLICY_STIFF = 0
POLICY_UNIFORM = 1
POLICY_ADAPTIVE = 2


def run_admittance_loop(x0, v0, targets, stiffness, forces, mass, damping, dt, force_limit):
    """Sequential semi-implicit Euler fold with implicit damping.

    Returns (xs, vs, fail_index); fail_index is the first step whose
    |f_ext| exceeds force_limit, or -1. States at and after a failing step
    are left zeroed.
    """
    targets = np.asarray(targets, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    forces = np.asarray(forces, dtype=float)
    n = targets.shape[0]
    xs = np.zeros((n, 3))
    vs = np.zeros((n, 3))
    m_inv = np.linalg.inv(np.asarray(mass, dtype=float))
    a_mat = np.linalg.inv(np.eye(3) + dt * (m_inv @ np.asarray(damping, dtype=float)))
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    limit_sq = force_limit * force_limit
    for i in range(n):
        f = forces[i]
        if f @ f > limit_sq:
            return xs, vs, i
        v = a_mat @ (v + dt * (m_inv @ (f - stiffness[i] @ (x - targets[i]))))
        x = x + dt * v
        xs[i] = x
        vs[i] = v
    return xs, vs, -1


@dataclass
class FlipTrialInputs:
    """Precomputed per-tick commands and scalar parameters for one flipping trial.

    Geometry lives in the x-z plane (y is carried but inert): the item is a
    w x h rectangle pivoting about its wall-side bottom corner at
    (-fixture_offset, 0); positive angle tips the top toward the wall.
    """

    # per-tick command tracks, shape (n, 3) / (n,)
    ref: np.ndarray            # reference finger positions (pressed into the nominal face)
    f_ref: np.ndarray          # commanded contact force magnitude [N]
    d_in: np.ndarray           # nominal inward face normal (unit, points into the item)
    theta_cmd: np.ndarray      # nominal item angle [rad]
    jitter: np.ndarray         # per-tick target jitter [m]
    noise: np.ndarray          # constant per-trial target offset [m], shape (3,)
    # policy
    policy_kind: int = POLICY_ADAPTIVE
    k_stiff: float = 2000.0
    k_uniform: float = 500.0
    k_high: float = 2000.0
    sched_k_max: float = 2000.0
    sched_k_min: float = 50.0
    sched_f_min: float = 1.0
    sched_f_max: float = 8.0
    lp_tau: float = 0.05       # force feedback low-pass [s]
    # item / fixture
    pivot_x: float = 0.0
    pivot_z: float = 0.0
    item_w: float = 0.06
    item_h: float = 0.24
    item_mass: float = 0.1
    finger_friction: float = 0.8
    fixture_slide_threshold: float = 18.0
    fixture_slide_rate: float = 0.004  # m per (N s) of excess normal force
    fixture_edge_limit: float = 0.015  # pivot travel before it walks off the corner
    # finger admittance (isotropic virtual mass/damping)
    finger_mass: float = 2.0
    finger_damping: float = 126.49110640673517  # 2 sqrt(2000 * 2)
    dt: float = 2e-3
    force_limit: float = 30.0
    # termination
    success_angle: float = math.radians(70.0)
    midflip_angle: float = math.radians(5.0)
    contact_loss_max: float = 0.5
    stall_time_max: float = 3.0
    stall_eps: float = 0.005
    theta_dot_max: float = 1.0
    gamma_slip: float = 15.0
    gamma_free: float = 15.0


def run_flip_trial(inp: FlipTrialInputs, record: bool = False):
    """Run one flipping trial tick by tick.

    Returns (status, ticks, max_force, logs); logs is None unless record,
    otherwise a dict of per-tick arrays truncated to the ticks actually run.
    """
    ref = np.asarray(inp.ref, dtype=float)
    n = ref.shape[0]
    ref_l = ref.tolist()
    f_ref = np.asarray(inp.f_ref, dtype=float).tolist()
    d_in = np.asarray(inp.d_in, dtype=float).tolist()
    theta_cmd = np.asarray(inp.theta_cmd, dtype=float).tolist()
    jitter = np.asarray(inp.jitter, dtype=float).tolist()
    nzx, nzy, nzz = (float(c) for c in np.asarray(inp.noise, dtype=float))

    kind = inp.policy_kind
    w, h = inp.item_w, inp.item_h
    mu = inp.finger_friction
    mg = inp.item_mass * GRAVITY
    dt = inp.dt
    alpha = dt / (inp.lp_tau + dt)
    vel_div = 1.0 + dt * inp.finger_damping / inp.finger_mass
    dt_over_m = dt / inp.finger_mass
    limit_sq = inp.force_limit * inp.force_limit

    # finger starts on the (noise-free) approach point
    x0, y0, z0 = ref_l[0]
    fx_, fy_, fz_ = x0, y0, z0
    vx = vy = vz = 0.0
    theta = 0.0
    offset = 0.0
    lpx = lpy = lpz = 0.0
    ever_contact = False
    loss_time = 0.0
    prog_theta = 0.0
    prog_t = 0.0
    max_force = 0.0
    status = STATUS_RUNNING
    ticks = n

    if record:
        log_pos = np.zeros((n, 3))
        log_force = np.zeros((n, 3))
        log_theta = np.zeros(n)
        log_phi = np.zeros(n)
        log_normal = np.zeros((n, 3))

    for i in range(n):
        t = i * dt
        ji = jitter[i]
        tbx = ref_l[i][0] + nzx + ji[0]
        tby = ref_l[i][1] + nzy + ji[1]
        tbz = ref_l[i][2] + nzz + ji[2]

        # --- policy: stiffness decomposition (k_low along dlow) and target
        if kind == POLICY_STIFF:
            k_low = k_hi = inp.k_stiff
            dlx, dly, dlz = 1.0, 0.0, 0.0
            xtx, xty, xtz = tbx, tby, tbz
        elif kind == POLICY_UNIFORM:
            k_low = k_hi = inp.k_uniform
            dlx, dly, dlz = 1.0, 0.0, 0.0
            xtx, xty, xtz = tbx, tby, tbz
        else:
            fm = math.sqrt(lpx * lpx + lpy * lpy + lpz * lpz)
            if fm >= inp.sched_f_min:
                dlx, dly, dlz = lpx / fm, lpy / fm, lpz / fm
                if fm > inp.sched_f_max:
                    k_low = inp.sched_k_min
                else:
                    k_low = inp.sched_k_max - (inp.sched_k_max - inp.sched_k_min) * (
                        fm - inp.sched_f_min
                    ) / (inp.sched_f_max - inp.sched_f_min)
            else:
                di = d_in[i]
                dlx, dly, dlz = di[0], di[1], di[2]
                k_low = inp.sched_k_max
            k_hi = inp.k_high
            # virtual target: press f_ref along the compliant direction
            off = f_ref[i] / k_low
            xtx = tbx + off * dlx
            xty = tby + off * dly
            xtz = tbz + off * dlz

        # --- face geometry at current angle / fixture offset
        ct = math.cos(theta)
        st = math.sin(theta)
        nx_, nz_ = -st, ct          # outward face normal
        tx_, tz_ = ct, st           # along face, away from the pivot
        ax = inp.pivot_x - offset - st * h  # wall-side top corner
        az = inp.pivot_z + ct * h

        # --- quasi-static contact force of the commanded spring against the face
        depth = nx_ * (xtx - ax) + nz_ * (xtz - az)
        phi = 0.0
        ft = 0.0
        s = 0.0
        contact = False
        if depth < 0.0:
            dn = dlx * nx_ + dlz * nz_   # low-direction component along the normal
            n_kinv_n = 1.0 / k_hi + (1.0 / k_low - 1.0 / k_hi) * dn * dn
            phi = -depth / n_kinv_n
            # equilibrium contact point c = x_target + phi * K^-1 n
            coef = phi * (1.0 / k_low - 1.0 / k_hi) * dn
            cx = xtx + phi * nx_ / k_hi + coef * dlx
            cz = xtz + phi * nz_ / k_hi + coef * dlz
            s = tx_ * (cx - ax) + tz_ * (cz - az)
            if 0.0 <= s <= w:
                contact = True
            else:
                phi = 0.0

        # --- item rotation: stick-follow or slip, quasi-static
        tau_g = mg * (0.5 * w * ct - 0.5 * h * st)  # gravity torque resisting the flip
        if contact:
            ft_needed = (s * phi + tau_g) / h
            if abs(ft_needed) <= mu * phi:
                ft = ft_needed
                dth = theta_cmd[i] - theta
                if dth < 0.0:
                    dth = 0.0
                cap = inp.theta_dot_max * dt
                if dth > cap:
                    dth = cap
                theta += dth
            else:
                ft = mu * phi if ft_needed > 0.0 else -mu * phi
                theta += inp.gamma_slip * (h * ft - s * phi - tau_g) * dt
        else:
            theta += inp.gamma_free * (-tau_g) * dt
        if theta < 0.0:
            theta = 0.0
        elif theta > math.pi:
            theta = math.pi

        # --- reaction wrench on the finger
        fcx = phi * nx_ + ft * tx_
        fcz = phi * nz_ + ft * tz_
        fmag_sq = fcx * fcx + fcz * fcz
        fmag = math.sqrt(fmag_sq)
        if fmag > max_force:
            max_force = fmag
        lpx += alpha * (fcx - lpx)
        lpz += alpha * (fcz - lpz)

        if record:
            log_pos[i] = (fx_, fy_, fz_)
            log_force[i] = (fcx, 0.0, fcz)
            log_theta[i] = theta
            log_phi[i] = phi
            log_normal[i] = (nx_, 0.0, nz_)

        # --- terminal conditions
        if fmag_sq > limit_sq:
            status = STATUS_FORCE_VIOLATION
            ticks = i + 1
            break
        if theta > inp.success_angle:
            status = STATUS_SUCCESS
            ticks = i + 1
            break
        if contact:
            ever_contact = True
        if ever_contact and not contact and theta > inp.midflip_angle:
            loss_time += dt
            if loss_time > inp.contact_loss_max:
                status = STATUS_FELL_OFF
                ticks = i + 1
                break
        else:
            loss_time = 0.0
        if theta - prog_theta > inp.stall_eps:
            prog_theta = theta
            prog_t = t
        elif t - prog_t > inp.stall_time_max:
            status = STATUS_STUCK
            ticks = i + 1
            break
        if phi > inp.fixture_slide_threshold:
            offset += inp.fixture_slide_rate * (phi - inp.fixture_slide_threshold) * dt
            if offset > inp.fixture_edge_limit:
                status = STATUS_FELL_OFF
                ticks = i + 1
                break

        # --- finger admittance step (isotropic M, D; K as rank-1 update)
        exx = fx_ - xtx
        exy = fy_ - xty
        exz = fz_ - xtz
        de = dlx * exx + dly * exy + dlz * exz
        kcoef = (k_low - k_hi) * de
        sfx = k_hi * exx + kcoef * dlx
        sfy = k_hi * exy + kcoef * dly
        sfz = k_hi * exz + kcoef * dlz
        vx = (vx + dt_over_m * (fcx - sfx)) / vel_div
        vy = (vy + dt_over_m * (0.0 - sfy)) / vel_div
        vz = (vz + dt_over_m * (fcz - sfz)) / vel_div
        fx_ += dt * vx
        fy_ += dt * vy
        fz_ += dt * vz

    if status == STATUS_RUNNING:
        status = STATUS_STUCK

    logs = None
    if record:
        logs = {
            "finger_pos": log_pos[:ticks],
            "force_on_finger": log_force[:ticks],
            "theta": log_theta[:ticks],
            "phi": log_phi[:ticks],
            "face_normal": log_normal[:ticks],
        }
    return status, ticks, max_force, logs
