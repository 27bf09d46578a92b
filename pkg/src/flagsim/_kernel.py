"""Jitted numerical core: chain state, drag-matrix assembly, implicit stepping.

Everything here operates on flat float64/int64 arrays precompiled from the
config (see dynamics.CompiledModel).  Functions return status codes instead of
raising; the Python wrappers translate codes into exceptions.

Status codes: 0 ok, 1 Newton failed to converge, 2 matrix not positive
definite, 3 condition estimate above the configured limit.
"""

import numpy as np
from numba import njit

# gait mode / ramp / scheme codes shared with the Python layer
MODE_CONTROLLED = 0
MODE_FLEXIBLE = 1
MODE_RIGID = 2
RAMP_COSINE = 0
RAMP_LINEAR_SMOOTHED = 1
SCHEME_MIDPOINT = 0
SCHEME_BACKWARD_EULER = 1


@njit(cache=True)
def chain_state(q, flag_id, sign, base_angle, seg_length, attach_offset):
    """Orientation, hinge and center positions of every flagellum link."""
    n = flag_id.shape[0]
    psi = np.empty(n)
    hx = np.empty(n)
    hy = np.empty(n)
    cx = np.empty(n)
    cy = np.empty(n)
    x, y, phi = q[0], q[1], q[2]
    cphi, sphi = np.cos(phi), np.sin(phi)
    cur = -1
    ang = 0.0
    px = 0.0
    py = 0.0
    for j in range(n):
        f = flag_id[j]
        if f != cur:
            cur = f
            off = attach_offset[f]
            px = x + cphi * off
            py = y + sphi * off
            ang = phi + sign[j] * base_angle[j]
        ang = ang + sign[j] * q[3 + j]
        psi[j] = ang
        dx = seg_length[j] * np.cos(ang)
        dy = seg_length[j] * np.sin(ang)
        hx[j] = px
        hy[j] = py
        cx[j] = px + 0.5 * dx
        cy[j] = py + 0.5 * dy
        px += dx
        py += dy
    return psi, hx, hy, cx, cy


@njit(cache=True)
def assemble_resistance(q, flag_start, flag_id, sign, base_angle, seg_length,
                        attach_offset, ct_l, cn_l, cn_l3, body_ct_l, body_cn_l,
                        body_cn_l3):
    """Grand resistance matrix R(q) = sum over links of J^T D J.

    D couples translation through the anisotropic rod drag of each link and
    rotation through the c_n L^3 / 12 spin coefficient; the accumulation fills
    both triangles symmetrically so R is exactly symmetric.
    """
    n = flag_id.shape[0]
    dim = 3 + n
    R = np.zeros((dim, dim))

    # body link: center coincides with (x, y), so J = [I3 | 0]
    tx = np.cos(q[2])
    ty = np.sin(q[2])
    a11 = body_ct_l * tx * tx + body_cn_l * ty * ty
    a12 = (body_ct_l - body_cn_l) * tx * ty
    a22 = body_ct_l * ty * ty + body_cn_l * tx * tx
    R[0, 0] += a11
    R[0, 1] += a12
    R[1, 0] += a12
    R[1, 1] += a22
    R[2, 2] += body_cn_l3

    psi, hx, hy, cx, cy = chain_state(q, flag_id, sign, base_angle, seg_length,
                                      attach_offset)

    jvx = np.empty(3 + n)
    jvy = np.empty(3 + n)
    jw = np.empty(3 + n)
    cols = np.empty(3 + n, dtype=np.int64)
    for l in range(n):
        f = flag_id[l]
        j0 = flag_start[f]
        m = l - j0 + 1
        ncol = 3 + m
        tx = np.cos(psi[l])
        ty = np.sin(psi[l])
        a11 = ct_l[l] * tx * tx + cn_l[l] * ty * ty
        a12 = (ct_l[l] - cn_l[l]) * tx * ty
        a22 = ct_l[l] * ty * ty + cn_l[l] * tx * tx
        d = cn_l3[l]
        jvx[0] = 1.0
        jvy[0] = 0.0
        jw[0] = 0.0
        cols[0] = 0
        jvx[1] = 0.0
        jvy[1] = 1.0
        jw[1] = 0.0
        cols[1] = 1
        jvx[2] = -(cy[l] - q[1])
        jvy[2] = cx[l] - q[0]
        jw[2] = 1.0
        cols[2] = 2
        for a in range(m):
            j = j0 + a
            s = sign[j]
            jvx[3 + a] = -s * (cy[l] - hy[j])
            jvy[3 + a] = s * (cx[l] - hx[j])
            jw[3 + a] = s
            cols[3 + a] = 3 + j
        for a in range(ncol):
            ux = a11 * jvx[a] + a12 * jvy[a]
            uy = a12 * jvx[a] + a22 * jvy[a]
            wa = d * jw[a]
            ca = cols[a]
            for b in range(a, ncol):
                val = ux * jvx[b] + uy * jvy[b] + wa * jw[b]
                cb = cols[b]
                R[ca, cb] += val
                if ca != cb:
                    R[cb, ca] += val
    return R


@njit(cache=True)
def cholesky_factor(A):
    """Lower Cholesky factor; ok=False when A is not positive definite."""
    n = A.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return L, False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return L, True


@njit(cache=True)
def cholesky_solve(L, b):
    """Solve (L L^T) x = b for one right-hand side."""
    n = L.shape[0]
    x = b.copy()
    for i in range(n):
        s = x[i]
        for j in range(i):
            s -= L[i, j] * x[j]
        x[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s -= L[j, i] * x[j]
        x[i] = s / L[i, i]
    return x


@njit(cache=True)
def condition_proxy(L):
    """Cheap lower bound on cond(A) from the Cholesky pivots."""
    n = L.shape[0]
    lo = L[0, 0]
    hi = L[0, 0]
    for i in range(1, n):
        v = L[i, i]
        if v < lo:
            lo = v
        if v > hi:
            hi = v
    return (hi / lo) * (hi / lo)


@njit(cache=True)
def ramp_shape(ramp, u):
    """Flex fraction in [0, 1] over one warped cycle; 0 = rigid/straight."""
    if ramp == RAMP_COSINE:
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * u))
    # linear ramp with smoothstep corners (C1 like the cosine)
    tri = 1.0 - np.abs(2.0 * u - 1.0)
    return tri * tri * (3.0 - 2.0 * tri)


@njit(cache=True)
def phase_warp(phase, duty):
    """Monotone piecewise-linear warp putting the flexible turning point at duty."""
    p = phase % 1.0
    if p < duty:
        return 0.5 * p / duty
    return 0.5 + 0.5 * (p - duty) / (1.0 - duty)


@njit(cache=True)
def gait_eval(mode, ramp, phase, k_min, k_max, beta, duty, phase_offset):
    """Shared joint stiffness and rest angle at a cycle phase.

    Only the stiffness ramp is warped by duty and shifted by phase_offset;
    the rest-angle schedule always follows the plain ramp of the cycle, so
    duty = 0.5 and phase_offset = 0 reduce to the symmetric in-phase form.
    """
    lam_k = ramp_shape(ramp, phase_warp(phase - phase_offset, duty))
    lam_r = ramp_shape(ramp, phase % 1.0)
    if mode == MODE_FLEXIBLE:
        k = k_min
    elif mode == MODE_RIGID:
        k = k_max
    else:
        k = k_max + (k_min - k_max) * lam_k
    return k, beta * lam_r


@njit(cache=True)
def velocity(q, k, rest, flag_start, flag_id, sign, base_angle, seg_length,
             attach_offset, ct_l, cn_l, cn_l3, body_ct_l, body_cn_l, body_cn_l3,
             cond_limit):
    """Solve R(q) qdot = Q for the instantaneous generalized velocity."""
    n = flag_id.shape[0]
    dim = 3 + n
    Q = np.zeros(dim)
    for j in range(n):
        Q[3 + j] = -k * (q[3 + j] - rest)
    R = assemble_resistance(q, flag_start, flag_id, sign, base_angle, seg_length,
                            attach_offset, ct_l, cn_l, cn_l3, body_ct_l,
                            body_cn_l, body_cn_l3)
    L, ok = cholesky_factor(R)
    if not ok:
        return np.zeros(dim), 2
    if condition_proxy(L) > cond_limit:
        return np.zeros(dim), 3
    v = cholesky_solve(L, Q)
    # one refinement pass keeps the residual near machine precision
    r = Q - R @ v
    v += cholesky_solve(L, r)
    return v, 0


@njit(cache=True)
def newton_step(q0, t0, dt, v_pred, scheme, mode, ramp, period, k_min, k_max,
                beta, duty, phase_offset, newton_tol, max_iter, cond_limit,
                flag_start, flag_id, sign, base_angle, seg_length, attach_offset,
                ct_l, cn_l, cn_l3, body_ct_l, body_cn_l, body_cn_l3):
    """One implicit step of size dt from (t0, q0).

    Quasi-Newton iteration on G(y) = R(qe) (y - q0) - dt Q(qe, te) where the
    evaluation point qe is the midpoint (implicit midpoint) or the endpoint
    (backward Euler).  The iteration matrix R + w dt K captures the stiff
    elastic part exactly; the residual reported against newton_tol is the
    displacement-form error |R^-1 G|.
    """
    n = flag_id.shape[0]
    dim = 3 + n
    y = q0 + dt * v_pred
    if scheme == SCHEME_MIDPOINT:
        w = 0.5
        te = t0 + 0.5 * dt
    else:
        w = 1.0
        te = t0 + dt
    k, rest = gait_eval(mode, ramp, (te / period) % 1.0, k_min, k_max, beta,
                        duty, phase_offset)
    for _ in range(max_iter):
        if scheme == SCHEME_MIDPOINT:
            qe = 0.5 * (q0 + y)
        else:
            qe = y
        R = assemble_resistance(qe, flag_start, flag_id, sign, base_angle,
                                seg_length, attach_offset, ct_l, cn_l, cn_l3,
                                body_ct_l, body_cn_l, body_cn_l3)
        G = R @ (y - q0)
        for j in range(n):
            G[3 + j] += dt * k * (qe[3 + j] - rest)
        LR, ok = cholesky_factor(R)
        if not ok:
            return y, 2
        if condition_proxy(LR) > cond_limit:
            return y, 3
        g = cholesky_solve(LR, G)
        res = 0.0
        for i in range(dim):
            res += g[i] * g[i]
        if np.sqrt(res) <= newton_tol:
            return y, 0
        M = R.copy()
        wk = w * dt * k
        for j in range(n):
            M[3 + j, 3 + j] += wk
        LM, ok = cholesky_factor(M)
        if not ok:
            return y, 2
        delta = cholesky_solve(LM, G)
        y = y - delta
    return y, 1


@njit(cache=True)
def advance(q0, t0, dt, v_pred, max_halvings, scheme, mode, ramp, period, k_min,
            k_max, beta, duty, phase_offset, newton_tol, max_iter, cond_limit,
            flag_start, flag_id, sign, base_angle, seg_length, attach_offset,
            ct_l, cn_l, cn_l3, body_ct_l, body_cn_l, body_cn_l3):
    """Step dt with internal halving retries on Newton failure."""
    status = 1
    for h in range(max_halvings + 1):
        nsub = 2 ** h
        sub = dt / nsub
        q = q0.copy()
        t = t0
        vp = v_pred.copy()
        ok = True
        for _ in range(nsub):
            qn, status = newton_step(q, t, sub, vp, scheme, mode, ramp, period,
                                     k_min, k_max, beta, duty, phase_offset,
                                     newton_tol, max_iter, cond_limit,
                                     flag_start, flag_id, sign, base_angle,
                                     seg_length, attach_offset, ct_l, cn_l,
                                     cn_l3, body_ct_l, body_cn_l, body_cn_l3)
            if status == 2 or status == 3:
                return q0, status
            if status != 0:
                ok = False
                break
            vp = (qn - q) / sub
            q = qn
            t += sub
        if ok:
            return q, 0
    return q0, status


@njit(cache=True)
def simulate_loop(q0, n_steps, dt, out_q, max_halvings, scheme, mode, ramp,
                  period, k_min, k_max, beta, duty, phase_offset, newton_tol,
                  max_iter, cond_limit, flag_start, flag_id, sign, base_angle,
                  seg_length, attach_offset, ct_l, cn_l, cn_l3, body_ct_l,
                  body_cn_l, body_cn_l3):
    """March n_steps of size dt recording every state into out_q."""
    q = q0.copy()
    out_q[0] = q
    k0, rest0 = gait_eval(mode, ramp, 0.0, k_min, k_max, beta, duty,
                          phase_offset)
    v_pred, status = velocity(q, k0, rest0, flag_start, flag_id, sign,
                              base_angle, seg_length, attach_offset, ct_l,
                              cn_l, cn_l3, body_ct_l, body_cn_l, body_cn_l3,
                              cond_limit)
    if status != 0:
        return 0, status
    for i in range(n_steps):
        t = i * dt
        qn, status = advance(q, t, dt, v_pred, max_halvings, scheme, mode, ramp,
                             period, k_min, k_max, beta, duty, phase_offset,
                             newton_tol, max_iter, cond_limit, flag_start,
                             flag_id, sign, base_angle, seg_length,
                             attach_offset, ct_l, cn_l, cn_l3, body_ct_l,
                             body_cn_l, body_cn_l3)
        if status != 0:
            return i, status
        v_pred = (qn - q) / dt
        q = qn
        out_q[i + 1] = q
    return n_steps, 0
