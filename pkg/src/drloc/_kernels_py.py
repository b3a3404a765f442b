"""Pure-Python versions of the per-step kernels.

Same signatures and semantics as the compiled ``_ckernels`` extension; used
when the extension is not built.
"""
import math

import numpy as np

# must match grid.ACTION_OFFSETS
_DR = (0, 1, -1, 0, 0, 1, 1, -1, -1)
_DC = (0, 0, 0, -1, 1, -1, 1, -1, 1)

GN_OK = 0
GN_DEGENERATE = 1


def near_field(rss, beta_r):
    """Index of the strongest entry above ``beta_r`` (lowest index on ties), or -1."""
    best = -1
    best_val = beta_r
    for i in range(len(rss)):
        v = rss[i]
        # NaN (missing) compares False
        if v > best_val:
            best = i
            best_val = v
    return best


def reward(est_x, est_y, rss, gw_xy, beta_r, beta_d, d_min):
    i = near_field(rss, beta_r)
    if i < 0:
        return 0.0
    d = math.sqrt((est_x - gw_xy[i, 0]) ** 2 + (est_y - gw_xy[i, 1]) ** 2)
    if d < d_min:
        d = d_min
    if d <= beta_d:
        return 1.0 / d
    return -d


def masked_argmax(q, mask):
    """Argmax of ``q`` over entries where ``mask`` is true; first index on ties."""
    best = -1
    best_val = -math.inf
    for a in range(len(q)):
        if mask[a] and (best < 0 or q[a] > best_val):
            best = a
            best_val = q[a]
    if best < 0:
        raise ValueError("no available action")
    return best


def random_walk(rows, cols, start_row, start_col, uniforms):
    """Walk of ``len(uniforms) + 1`` cells; step k takes available action floor(u_k * n_avail)."""
    n = len(uniforms) + 1
    out = np.empty((n, 2), dtype=np.int64)
    r, c = start_row, start_col
    out[0, 0], out[0, 1] = r, c
    avail = [0] * 9
    for k in range(1, n):
        m = 0
        for a in range(9):
            rr, cc = r + _DR[a], c + _DC[a]
            if 0 <= rr < rows and 0 <= cc < cols:
                avail[m] = a
                m += 1
        a = avail[min(int(uniforms[k - 1] * m), m - 1)]
        r += _DR[a]
        c += _DC[a]
        out[k, 0], out[k, 1] = r, c
    return out


def _cost(x, y, gw_xy, dists, d_min):
    s = 0.0
    for i in range(len(dists)):
        rng = math.sqrt((x - gw_xy[i, 0]) ** 2 + (y - gw_xy[i, 1]) ** 2)
        if rng < d_min:
            rng = d_min
        e = rng - dists[i]
        s += e * e
    return s


def gauss_newton(gw_xy, dists, x0, y0, max_iter, tol, damping, d_min):
    """Levenberg-damped Gauss-Newton for min sum (max(d_min, |p - g_i|) - d_i)^2.

    Returns (x, y, iterations, status); status GN_DEGENERATE when damping
    escalates past its limit or the final normal matrix is singular.
    """
    x, y = x0, y0
    lam = damping
    cost = _cost(x, y, gw_xy, dists, d_min)
    it = 0
    while it < max_iter:
        it += 1
        a11 = a12 = a22 = g1 = g2 = 0.0
        for i in range(len(dists)):
            ex = x - gw_xy[i, 0]
            ey = y - gw_xy[i, 1]
            rng = math.sqrt(ex * ex + ey * ey)
            if rng < d_min:
                # flat region of the clamped range model
                continue
            jx, jy = ex / rng, ey / rng
            e = rng - dists[i]
            a11 += jx * jx
            a12 += jx * jy
            a22 += jy * jy
            g1 += jx * e
            g2 += jy * e
        scale = max(a11, a22, 1e-300)
        while True:
            m11 = a11 + lam * scale
            m22 = a22 + lam * scale
            det = m11 * m22 - a12 * a12
            if det <= 0.0 or lam > 1e10:
                return x, y, it, GN_DEGENERATE
            sx = -(m22 * g1 - a12 * g2) / det
            sy = -(m11 * g2 - a12 * g1) / det
            step = math.sqrt(sx * sx + sy * sy)
            new_cost = _cost(x + sx, y + sy, gw_xy, dists, d_min)
            if new_cost <= cost:
                x += sx
                y += sy
                cost = new_cost
                lam = lam / 10.0
                break
            if step < tol:
                break
            lam = lam * 10.0
        if step < tol:
            break
    # rank check on the undamped normal matrix at the solution
    a11 = a12 = a22 = 0.0
    for i in range(len(dists)):
        ex = x - gw_xy[i, 0]
        ey = y - gw_xy[i, 1]
        rng = math.sqrt(ex * ex + ey * ey)
        if rng < d_min:
            continue
        a11 += ex * ex / (rng * rng)
        a12 += ex * ey / (rng * rng)
        a22 += ey * ey / (rng * rng)
    tr = a11 + a22
    if tr <= 0.0 or (a11 * a22 - a12 * a12) <= 1e-10 * tr * tr:
        return x, y, it, GN_DEGENERATE
    return x, y, it, GN_OK
