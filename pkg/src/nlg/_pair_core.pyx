# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pair-sweep primitives.

Mirrors nlg._pair_numpy exactly (same functions, same semantics); the
pure-python module is the fallback when this extension is not built.
Energy sums use Kahan compensation so results are stable under pair order.
"""

from libc.math cimport sqrt, atan

import numpy as np
cimport numpy as cnp

cnp.import_array()

PHI_GEPS = 0
PHI_SURR = 1
PHI_ABS = 2
PHI_CONST = 3
PHI_ATAN = 4

BACKEND = "compiled"

DEF _GEPS = 0
DEF _SURR = 1
DEF _ABS = 2
DEF _CONST = 3
DEF _ATAN = 4


cdef inline double _phi1(double s, int phi, double pa, double pb) nogil:
    cdef double q
    if phi == _GEPS:
        return s if s < pa else pa
    elif phi == _SURR:
        q = pb * s
        return pa * q / (1.0 + q)
    elif phi == _ABS:
        return sqrt(s)
    elif phi == _CONST:
        return 1.0
    else:
        return pa * atan(pb * s)


cdef inline double _dphi1(double s, int phi, double pa, double pb) nogil:
    cdef double q
    if phi == _GEPS:
        return 1.0 if s < pa else 0.0
    elif phi == _SURR:
        q = 1.0 + pb * s
        return pa * pb / (q * q)
    elif phi == _ABS:
        return 0.5 / sqrt(s) if s > 0.0 else 0.0
    elif phi == _CONST:
        return 0.0
    else:
        q = pb * s
        return pa * pb / (1.0 + q * q)


def pair_sum(double[:, ::1] u, Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t m,
             Py_ssize_t ax0, Py_ssize_t ax1, Py_ssize_t ay0, Py_ssize_t ay1,
             Py_ssize_t kx, Py_ssize_t ky, double inv_eps,
             int phi, double pa, double pb, coeff):
    """Sum of coeff(x_i) * phi(s_ij) over the base rectangle."""
    if ax1 <= ax0 or ay1 <= ay0:
        return 0.0
    cdef double[::1] cv
    cdef bint has_c = coeff is not None and getattr(coeff, "size", 0)
    if has_c:
        cv = coeff
    else:
        cv = np.empty(0)
    cdef double total = 0.0, comp = 0.0, s, d, val, y, t
    cdef Py_ssize_t ix, iy, c, i, j
    with nogil:
        for ix in range(ax0, ax1):
            for iy in range(ay0, ay1):
                i = ix * ny + iy
                j = (ix + kx) * ny + (iy + ky)
                s = 0.0
                for c in range(m):
                    d = (u[j, c] - u[i, c]) * inv_eps
                    s += d * d
                val = _phi1(s, phi, pa, pb)
                if has_c:
                    val *= cv[i]
                y = val - comp
                t = total + y
                comp = (t - total) - y
                total = t
    return total


def pair_sum_grad(double[:, ::1] u, double[:, ::1] grad,
                  Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t m,
                  Py_ssize_t ax0, Py_ssize_t ax1, Py_ssize_t ay0, Py_ssize_t ay1,
                  Py_ssize_t kx, Py_ssize_t ky, double inv_eps,
                  int phi, double pa, double pb, coeff, double scale):
    """pair_sum that also accumulates scale * d(sum)/du into grad; returns
    the (unscaled) sum."""
    if ax1 <= ax0 or ay1 <= ay0:
        return 0.0
    cdef double[::1] cv
    cdef bint has_c = coeff is not None and getattr(coeff, "size", 0)
    if has_c:
        cv = coeff
    else:
        cv = np.empty(0)
    cdef double total = 0.0, comp = 0.0, s, d, val, w, g, y, t, ci
    cdef Py_ssize_t ix, iy, c, i, j
    with nogil:
        for ix in range(ax0, ax1):
            for iy in range(ay0, ay1):
                i = ix * ny + iy
                j = (ix + kx) * ny + (iy + ky)
                s = 0.0
                for c in range(m):
                    d = (u[j, c] - u[i, c]) * inv_eps
                    s += d * d
                ci = cv[i] if has_c else 1.0
                val = _phi1(s, phi, pa, pb) * ci
                w = 2.0 * scale * inv_eps * _dphi1(s, phi, pa, pb) * ci
                for c in range(m):
                    g = w * (u[j, c] - u[i, c]) * inv_eps
                    grad[j, c] += g
                    grad[i, c] -= g
                y = val - comp
                t = total + y
                comp = (t - total) - y
                total = t
    return total


def pair_sum_ref(double[:, ::1] u, Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t m,
                 Py_ssize_t ax0, Py_ssize_t ax1, Py_ssize_t ay0, Py_ssize_t ay1,
                 Py_ssize_t kx, Py_ssize_t ky, double inv_eps, double cap):
    """One sweep returning (sum of min(s, cap), sum of sqrt(s), pair count)."""
    if ax1 <= ax0 or ay1 <= ay0:
        return 0.0, 0.0, 0
    cdef double tg = 0.0, cg = 0.0, tp = 0.0, cp = 0.0
    cdef double s, d, val, y, t
    cdef Py_ssize_t ix, iy, c, i, j, n = 0
    with nogil:
        for ix in range(ax0, ax1):
            for iy in range(ay0, ay1):
                i = ix * ny + iy
                j = (ix + kx) * ny + (iy + ky)
                s = 0.0
                for c in range(m):
                    d = (u[j, c] - u[i, c]) * inv_eps
                    s += d * d
                val = s if s < cap else cap
                y = val - cg
                t = tg + y
                cg = (t - tg) - y
                tg = t
                val = sqrt(s)
                y = val - cp
                t = tp + y
                cp = (t - tp) - y
                tp = t
                n += 1
    return tg, tp, n


def brute_force_scan(double[::1] levels, double[::1] values,
                     long long[::1] free_idx,
                     long long[::1] pair_i, long long[::1] pair_j,
                     double[::1] pair_w, long long[::1] pair_phi,
                     double[::1] pair_pa, double[::1] pair_pb,
                     double inv_eps):
    """Exact minimum of sum_p w_p phi_p(s_p) over all |levels|^|free| nodal
    assignments; returns (best energy, best level-index per free node)."""
    cdef Py_ssize_t Q = levels.shape[0]
    cdef Py_ssize_t F = free_idx.shape[0]
    cdef Py_ssize_t P = pair_i.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] digits_arr = np.zeros(F, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_arr = np.zeros(F, dtype=np.int64)
    cdef long long[::1] digits = digits_arr
    cdef long long[::1] best_digits = best_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_arr = np.asarray(values).copy()
    cdef double[::1] v = v_arr
    cdef double best_val = np.inf
    cdef double inv2 = inv_eps * inv_eps
    cdef double energy, comp, d, s, val, y, t
    cdef Py_ssize_t p, f, pos
    cdef bint done = F == 0
    with nogil:
        for f in range(F):
            v[free_idx[f]] = levels[0]
        while True:
            energy = 0.0
            comp = 0.0
            for p in range(P):
                d = v[pair_j[p]] - v[pair_i[p]]
                s = d * d * inv2
                val = pair_w[p] * _phi1(s, <int> pair_phi[p], pair_pa[p], pair_pb[p])
                y = val - comp
                t = energy + y
                comp = (t - energy) - y
                energy = t
            if energy < best_val:
                best_val = energy
                for f in range(F):
                    best_digits[f] = digits[f]
            if done:
                break
            # odometer: last free node runs fastest
            pos = F - 1
            while pos >= 0:
                digits[pos] += 1
                if digits[pos] < Q:
                    v[free_idx[pos]] = levels[digits[pos]]
                    break
                digits[pos] = 0
                v[free_idx[pos]] = levels[0]
                pos -= 1
            if pos < 0:
                break
    return best_val, best_arr
