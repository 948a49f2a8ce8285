# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mirror of the pure-Python hot loops in _pyloops.

Tick-for-tick identical to the reference implementation; the parity test
suite asserts this on random inputs.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs, M_PI

cnp.import_array()

STATUS_RUNNING = 0
STATUS_SUCCESS = 1
STATUS_FELL_OFF = 2
STATUS_STUCK = 3
STATUS_FORCE_VIOLATION = 4

POLICY_STIFF = 0
POLICY_UNIFORM = 1
POLICY_ADAPTIVE = 2


def run_admittance_loop(x0, v0, targets, stiffness, forces, mass, damping,
                        double dt, double force_limit):
    targets_a = np.ascontiguousarray(targets, dtype=np.float64)
    stiff_a = np.ascontiguousarray(stiffness, dtype=np.float64)
    forces_a = np.ascontiguousarray(forces, dtype=np.float64)
    cdef Py_ssize_t n = targets_a.shape[0]
    xs_a = np.zeros((n, 3))
    vs_a = np.zeros((n, 3))
    m_inv_a = np.ascontiguousarray(np.linalg.inv(np.asarray(mass, dtype=np.float64)))
    a_mat_a = np.ascontiguousarray(np.linalg.inv(
        np.eye(3) + dt * (m_inv_a @ np.asarray(damping, dtype=np.float64))))

    cdef double[:, ::1] tg = targets_a
    cdef double[:, :, ::1] st = stiff_a
    cdef double[:, ::1] fo = forces_a
    cdef double[:, ::1] xs = xs_a
    cdef double[:, ::1] vs = vs_a
    cdef double[:, ::1] mi = m_inv_a
    cdef double[:, ::1] am = a_mat_a

    cdef double x[3]
    cdef double v[3]
    cdef double acc[3]
    cdef double tmp[3]
    cdef Py_ssize_t i, r, c
    cdef double limit_sq = force_limit * force_limit
    cdef double fsq

    x0_a = np.asarray(x0, dtype=np.float64)
    v0_a = np.asarray(v0, dtype=np.float64)
    for r in range(3):
        x[r] = x0_a[r]
        v[r] = v0_a[r]

    for i in range(n):
        fsq = fo[i, 0] * fo[i, 0] + fo[i, 1] * fo[i, 1] + fo[i, 2] * fo[i, 2]
        if fsq > limit_sq:
            return xs_a, vs_a, i
        # acc = f - K (x - target)
        for r in range(3):
            acc[r] = fo[i, r]
            for c in range(3):
                acc[r] -= st[i, r, c] * (x[c] - tg[i, c])
        # tmp = v + dt * M^-1 acc
        for r in range(3):
            tmp[r] = v[r]
            for c in range(3):
                tmp[r] += dt * mi[r, c] * acc[c]
        # v = A tmp  (A = (I + dt M^-1 D)^-1)
        for r in range(3):
            v[r] = 0.0
            for c in range(3):
                v[r] += am[r, c] * tmp[c]
        for r in range(3):
            x[r] += dt * v[r]
            xs[i, r] = x[r]
            vs[i, r] = v[r]
    return xs_a, vs_a, -1


def run_flip_trial(inp, bint record=False):
    ref_a = np.ascontiguousarray(inp.ref, dtype=np.float64)
    f_ref_a = np.ascontiguousarray(inp.f_ref, dtype=np.float64)
    d_in_a = np.ascontiguousarray(inp.d_in, dtype=np.float64)
    theta_cmd_a = np.ascontiguousarray(inp.theta_cmd, dtype=np.float64)
    jitter_a = np.ascontiguousarray(inp.jitter, dtype=np.float64)
    noise_a = np.asarray(inp.noise, dtype=np.float64)

    cdef double[:, ::1] ref = ref_a
    cdef double[::1] f_ref = f_ref_a
    cdef double[:, ::1] d_in = d_in_a
    cdef double[::1] theta_cmd = theta_cmd_a
    cdef double[:, ::1] jitter = jitter_a
    cdef Py_ssize_t n = ref_a.shape[0]

    cdef double nzx = noise_a[0], nzy = noise_a[1], nzz = noise_a[2]
    cdef int kind = inp.policy_kind
    cdef double k_stiff = inp.k_stiff, k_uniform = inp.k_uniform, k_high = inp.k_high
    cdef double sk_max = inp.sched_k_max, sk_min = inp.sched_k_min
    cdef double sf_min = inp.sched_f_min, sf_max = inp.sched_f_max
    cdef double pivot_x = inp.pivot_x, pivot_z = inp.pivot_z
    cdef double w = inp.item_w, h = inp.item_h
    cdef double mu = inp.finger_friction
    cdef double mg = inp.item_mass * 9.81
    cdef double f_slide = inp.fixture_slide_threshold
    cdef double slide_rate = inp.fixture_slide_rate
    cdef double edge_limit = inp.fixture_edge_limit
    cdef double dt = inp.dt
    cdef double alpha = dt / (inp.lp_tau + dt)
    cdef double vel_div = 1.0 + dt * inp.finger_damping / inp.finger_mass
    cdef double dt_over_m = dt / inp.finger_mass
    cdef double limit_sq = inp.force_limit * inp.force_limit
    cdef double success_angle = inp.success_angle
    cdef double midflip_angle = inp.midflip_angle
    cdef double contact_loss_max = inp.contact_loss_max
    cdef double stall_time_max = inp.stall_time_max
    cdef double stall_eps = inp.stall_eps
    cdef double theta_dot_max = inp.theta_dot_max
    cdef double gamma_slip = inp.gamma_slip
    cdef double gamma_free = inp.gamma_free

    cdef double fx_ = ref[0, 0], fy_ = ref[0, 1], fz_ = ref[0, 2]
    cdef double vx = 0.0, vy = 0.0, vz = 0.0
    cdef double theta = 0.0, offset = 0.0
    cdef double lpx = 0.0, lpy = 0.0, lpz = 0.0
    cdef bint ever_contact = False, contact
    cdef double loss_time = 0.0, prog_theta = 0.0, prog_t = 0.0, max_force = 0.0
    cdef int status = 0
    cdef Py_ssize_t ticks = n, i
    cdef double t, tbx, tby, tbz, k_low, k_hi, dlx, dly, dlz, xtx, xty, xtz
    cdef double fm, off, ct, st_, nx_, nz_, tx_, tz_, ax, az, depth, phi, ft, s
    cdef double dn, n_kinv_n, coef, cx, cz, tau_g, ft_needed, dth, cap
    cdef double fcx, fcz, fmag_sq, fmag, exx, exy, exz, de, kcoef, sfx, sfy, sfz

    log_pos_a = log_force_a = log_theta_a = log_phi_a = log_normal_a = None
    cdef double[:, ::1] log_pos = None
    cdef double[:, ::1] log_force = None
    cdef double[::1] log_theta = None
    cdef double[::1] log_phi = None
    cdef double[:, ::1] log_normal = None
    if record:
        log_pos_a = np.zeros((n, 3))
        log_force_a = np.zeros((n, 3))
        log_theta_a = np.zeros(n)
        log_phi_a = np.zeros(n)
        log_normal_a = np.zeros((n, 3))
        log_pos = log_pos_a
        log_force = log_force_a
        log_theta = log_theta_a
        log_phi = log_phi_a
        log_normal = log_normal_a

    for i in range(n):
        t = i * dt
        tbx = ref[i, 0] + nzx + jitter[i, 0]
        tby = ref[i, 1] + nzy + jitter[i, 1]
        tbz = ref[i, 2] + nzz + jitter[i, 2]

        if kind == 0:
            k_low = k_stiff
            k_hi = k_stiff
            dlx = 1.0; dly = 0.0; dlz = 0.0
            xtx = tbx; xty = tby; xtz = tbz
        elif kind == 1:
            k_low = k_uniform
            k_hi = k_uniform
            dlx = 1.0; dly = 0.0; dlz = 0.0
            xtx = tbx; xty = tby; xtz = tbz
        else:
            fm = sqrt(lpx * lpx + lpy * lpy + lpz * lpz)
            if fm >= sf_min:
                dlx = lpx / fm; dly = lpy / fm; dlz = lpz / fm
                if fm > sf_max:
                    k_low = sk_min
                else:
                    k_low = sk_max - (sk_max - sk_min) * (fm - sf_min) / (sf_max - sf_min)
            else:
                dlx = d_in[i, 0]; dly = d_in[i, 1]; dlz = d_in[i, 2]
                k_low = sk_max
            k_hi = k_high
            off = f_ref[i] / k_low
            xtx = tbx + off * dlx
            xty = tby + off * dly
            xtz = tbz + off * dlz

        ct = cos(theta)
        st_ = sin(theta)
        nx_ = -st_; nz_ = ct
        tx_ = ct; tz_ = st_
        ax = pivot_x - offset - st_ * h
        az = pivot_z + ct * h

        depth = nx_ * (xtx - ax) + nz_ * (xtz - az)
        phi = 0.0
        ft = 0.0
        s = 0.0
        contact = False
        if depth < 0.0:
            dn = dlx * nx_ + dlz * nz_
            n_kinv_n = 1.0 / k_hi + (1.0 / k_low - 1.0 / k_hi) * dn * dn
            phi = -depth / n_kinv_n
            coef = phi * (1.0 / k_low - 1.0 / k_hi) * dn
            cx = xtx + phi * nx_ / k_hi + coef * dlx
            cz = xtz + phi * nz_ / k_hi + coef * dlz
            s = tx_ * (cx - ax) + tz_ * (cz - az)
            if 0.0 <= s <= w:
                contact = True
            else:
                phi = 0.0

        tau_g = mg * (0.5 * w * ct - 0.5 * h * st_)
        if contact:
            ft_needed = (s * phi + tau_g) / h
            if fabs(ft_needed) <= mu * phi:
                ft = ft_needed
                dth = theta_cmd[i] - theta
                if dth < 0.0:
                    dth = 0.0
                cap = theta_dot_max * dt
                if dth > cap:
                    dth = cap
                theta += dth
            else:
                ft = mu * phi if ft_needed > 0.0 else -mu * phi
                theta += gamma_slip * (h * ft - s * phi - tau_g) * dt
        else:
            theta += gamma_free * (-tau_g) * dt
        if theta < 0.0:
            theta = 0.0
        elif theta > M_PI:
            theta = M_PI

        fcx = phi * nx_ + ft * tx_
        fcz = phi * nz_ + ft * tz_
        fmag_sq = fcx * fcx + fcz * fcz
        fmag = sqrt(fmag_sq)
        if fmag > max_force:
            max_force = fmag
        lpx += alpha * (fcx - lpx)
        lpz += alpha * (fcz - lpz)

        if record:
            log_pos[i, 0] = fx_; log_pos[i, 1] = fy_; log_pos[i, 2] = fz_
            log_force[i, 0] = fcx; log_force[i, 1] = 0.0; log_force[i, 2] = fcz
            log_theta[i] = theta
            log_phi[i] = phi
            log_normal[i, 0] = nx_; log_normal[i, 1] = 0.0; log_normal[i, 2] = nz_

        if fmag_sq > limit_sq:
            status = 4
            ticks = i + 1
            break
        if theta > success_angle:
            status = 1
            ticks = i + 1
            break
        if contact:
            ever_contact = True
        if ever_contact and (not contact) and theta > midflip_angle:
            loss_time += dt
            if loss_time > contact_loss_max:
                status = 2
                ticks = i + 1
                break
        else:
            loss_time = 0.0
        if theta - prog_theta > stall_eps:
            prog_theta = theta
            prog_t = t
        elif t - prog_t > stall_time_max:
            status = 3
            ticks = i + 1
            break
        if phi > f_slide:
            offset += slide_rate * (phi - f_slide) * dt
            if offset > edge_limit:
                status = 2
                ticks = i + 1
                break

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

    if status == 0:
        status = 3

    logs = None
    if record:
        logs = {
            "finger_pos": log_pos_a[:ticks],
            "force_on_finger": log_force_a[:ticks],
            "theta": log_theta_a[:ticks],
            "phi": log_phi_a[:ticks],
            "face_normal": log_normal_a[:ticks],
        }
    return status, int(ticks), max_force, logs
