# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels. Mirrors ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

cdef int[9] _DR = [0, 1, -1, 0, 0, 1, 1, -1, -1]
cdef int[9] _DC = [0, 0, 0, -1, 1, -1, 1, -1, 1]

GN_OK = 0
GN_DEGENERATE = 1


cdef inline Py_ssize_t _near_field(const double[:] rss, double beta_r) noexcept nogil:
    cdef Py_ssize_t i, best = -1
    cdef double best_val = beta_r
    for i in range(rss.shape[0]):
        if rss[i] > best_val:
            best = i
            best_val = rss[i]
    return best


def near_field(const double[:] rss, double beta_r):
    return _near_field(rss, beta_r)


def reward(double est_x, double est_y, const double[:] rss, const double[:, :] gw_xy,
           double beta_r, double beta_d, double d_min):
    cdef Py_ssize_t i = _near_field(rss, beta_r)
    cdef double d
    if i < 0:
        return 0.0
    d = sqrt((est_x - gw_xy[i, 0]) ** 2 + (est_y - gw_xy[i, 1]) ** 2)
    if d < d_min:
        d = d_min
    if d <= beta_d:
        return 1.0 / d
    return -d


def masked_argmax(const double[:] q, mask):
    cdef const cnp.npy_bool[:] m = np.ascontiguousarray(mask, dtype=np.bool_)
    cdef Py_ssize_t a, best = -1
    cdef double best_val = -INFINITY
    for a in range(q.shape[0]):
        if m[a] and (best < 0 or q[a] > best_val):
            best = a
            best_val = q[a]
    if best < 0:
        raise ValueError("no available action")
    return best


def random_walk(long rows, long cols, long start_row, long start_col, const double[:] uniforms):
    cdef Py_ssize_t n = uniforms.shape[0] + 1
    out_arr = np.empty((n, 2), dtype=np.int64)
    cdef cnp.int64_t[:, :] out = out_arr
    cdef long r = start_row, c = start_col, rr, cc
    cdef int[9] avail
    cdef int a, m, pick
    cdef Py_ssize_t k
    out[0, 0] = r
    out[0, 1] = c
    for k in range(1, n):
        m = 0
        for a in range(9):
            rr = r + _DR[a]
            cc = c + _DC[a]
            if 0 <= rr < rows and 0 <= cc < cols:
                avail[m] = a
                m += 1
        pick = <int>(uniforms[k - 1] * m)
        if pick > m - 1:
            pick = m - 1
        a = avail[pick]
        r += _DR[a]
        c += _DC[a]
        out[k, 0] = r
        out[k, 1] = c
    return out_arr


cdef double _cost(double x, double y, const double[:, :] gw_xy, const double[:] dists,
                  double d_min) noexcept nogil:
    cdef double s = 0.0, rng, e
    cdef Py_ssize_t i
    for i in range(dists.shape[0]):
        rng = sqrt((x - gw_xy[i, 0]) ** 2 + (y - gw_xy[i, 1]) ** 2)
        if rng < d_min:
            rng = d_min
        e = rng - dists[i]
        s += e * e
    return s


def gauss_newton(const double[:, :] gw_xy, const double[:] dists, double x0, double y0,
                 int max_iter, double tol, double damping, double d_min):
    cdef double x = x0, y = y0, lam = damping
    cdef double cost = _cost(x, y, gw_xy, dists, d_min)
    cdef double a11, a12, a22, g1, g2, ex, ey, rng, jx, jy, e
    cdef double scale, m11, m22, det, sx, sy, step = 0.0, new_cost, tr
    cdef int it = 0
    cdef Py_ssize_t i
    while it < max_iter:
        it += 1
        a11 = 0.0; a12 = 0.0; a22 = 0.0; g1 = 0.0; g2 = 0.0
        for i in range(dists.shape[0]):
            ex = x - gw_xy[i, 0]
            ey = y - gw_xy[i, 1]
            rng = sqrt(ex * ex + ey * ey)
            if rng < d_min:
                continue
            jx = ex / rng
            jy = ey / rng
            e = rng - dists[i]
            a11 += jx * jx
            a12 += jx * jy
            a22 += jy * jy
            g1 += jx * e
            g2 += jy * e
        scale = a11 if a11 > a22 else a22
        if scale < 1e-300:
            scale = 1e-300
        while True:
            m11 = a11 + lam * scale
            m22 = a22 + lam * scale
            det = m11 * m22 - a12 * a12
            if det <= 0.0 or lam > 1e10:
                return x, y, it, GN_DEGENERATE
            sx = -(m22 * g1 - a12 * g2) / det
            sy = -(m11 * g2 - a12 * g1) / det
            step = sqrt(sx * sx + sy * sy)
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
    a11 = 0.0; a12 = 0.0; a22 = 0.0
    for i in range(dists.shape[0]):
        ex = x - gw_xy[i, 0]
        ey = y - gw_xy[i, 1]
        rng = sqrt(ex * ex + ey * ey)
        if rng < d_min:
            continue
        a11 += ex * ex / (rng * rng)
        a12 += ex * ey / (rng * rng)
        a22 += ey * ey / (rng * rng)
    tr = a11 + a22
    if tr <= 0.0 or (a11 * a22 - a12 * a12) <= 1e-10 * tr * tr:
        return x, y, it, GN_DEGENERATE
    return x, y, it, GN_OK
