"""Pure-numpy implementation of the pair-sweep primitives.

Drop-in fallback for the compiled extension `nlg._pair_core`; same function
signatures, selected by `nlg.backend` when the extension is unavailable or
NLG_BACKEND=python.  Arrays are float64 and C-contiguous: nodal values have
shape (nx*ny, m) with flat index ix*ny + iy (d=1 uses ny=1).

Pair densities are radial profiles phi of the squared increment
s = |u(x+eps*xi) - u(x)|^2 / eps^2, selected by an integer code:

  PHI_GEPS   min(s, pa)                      pa = 1/eps
  PHI_SURR   pa * q/(1+q), q = pb*s          pa = 1/eps, pb = gamma*eps
  PHI_ABS    sqrt(s)
  PHI_CONST  1
  PHI_ATAN   pa * arctan(pb*s)               pa = 1/eps, pb = eps
"""

import numpy as np

PHI_GEPS = 0
PHI_SURR = 1
PHI_ABS = 2
PHI_CONST = 3
PHI_ATAN = 4

BACKEND = "python"


def _squared_increment(u, nx, ny, m, ax0, ax1, ay0, ay1, kx, ky, inv_eps):
    v = u.reshape(nx, ny, m)
    base = v[ax0:ax1, ay0:ay1]
    shifted = v[ax0 + kx:ax1 + kx, ay0 + ky:ay1 + ky]
    diff = (shifted - base) * inv_eps
    return np.einsum("xyc,xyc->xy", diff, diff)


def _phi(s, phi, pa, pb):
    if phi == PHI_GEPS:
        return np.minimum(s, pa)
    if phi == PHI_SURR:
        q = pb * s
        return pa * q / (1.0 + q)
    if phi == PHI_ABS:
        return np.sqrt(s)
    if phi == PHI_CONST:
        return np.ones_like(s)
    if phi == PHI_ATAN:
        return pa * np.arctan(pb * s)
    raise ValueError("unknown phi code %r" % (phi,))


def _phi_prime(s, phi, pa, pb):
    if phi == PHI_GEPS:
        return (s < pa).astype(float)
    if phi == PHI_SURR:
        q = pb * s
        return pa * pb / (1.0 + q) ** 2
    if phi == PHI_ABS:
        out = np.zeros_like(s)
        nz = s > 0.0
        out[nz] = 0.5 / np.sqrt(s[nz])
        return out
    if phi == PHI_CONST:
        return np.zeros_like(s)
    if phi == PHI_ATAN:
        return pa * pb / (1.0 + (pb * s) ** 2)
    raise ValueError("unknown phi code %r" % (phi,))


def pair_sum(u, nx, ny, m, ax0, ax1, ay0, ay1, kx, ky, inv_eps, phi, pa, pb, coeff):
    """Sum of coeff(x_i) * phi(s_ij) over the base rectangle."""
    if ax1 <= ax0 or ay1 <= ay0:
        return 0.0
    s = _squared_increment(u, nx, ny, m, ax0, ax1, ay0, ay1, kx, ky, inv_eps)
    vals = _phi(s, phi, pa, pb)
    if coeff is not None and coeff.size:
        c = coeff.reshape(nx, ny)[ax0:ax1, ay0:ay1]
        return float(np.sum(vals * c))
    return float(np.sum(vals))


def pair_sum_grad(u, grad, nx, ny, m, ax0, ax1, ay0, ay1, kx, ky, inv_eps,
                  phi, pa, pb, coeff, scale):
    """pair_sum that also accumulates scale * d(sum)/du into grad (same shape
    as u); returns the (unscaled) sum."""
    if ax1 <= ax0 or ay1 <= ay0:
        return 0.0
    v = u.reshape(nx, ny, m)
    g = grad.reshape(nx, ny, m)
    base = v[ax0:ax1, ay0:ay1]
    shifted = v[ax0 + kx:ax1 + kx, ay0 + ky:ay1 + ky]
    diff = (shifted - base) * inv_eps
    s = np.einsum("xyc,xyc->xy", diff, diff)
    vals = _phi(s, phi, pa, pb)
    dphi = _phi_prime(s, phi, pa, pb)
    if coeff is not None and coeff.size:
        c = coeff.reshape(nx, ny)[ax0:ax1, ay0:ay1]
        total = float(np.sum(vals * c))
        w = (dphi * c)[:, :, None]
    else:
        total = float(np.sum(vals))
        w = dphi[:, :, None]
    contrib = (2.0 * scale * inv_eps) * w * diff
    np.add.at(g, (slice(ax0 + kx, ax1 + kx), slice(ay0 + ky, ay1 + ky)), contrib)
    np.add.at(g, (slice(ax0, ax1), slice(ay0, ay1)), -contrib)
    return total


def pair_sum_ref(u, nx, ny, m, ax0, ax1, ay0, ay1, kx, ky, inv_eps, cap):
    """One sweep returning (sum of min(s, cap), sum of sqrt(s), pair count)."""
    if ax1 <= ax0 or ay1 <= ay0:
        return 0.0, 0.0, 0
    s = _squared_increment(u, nx, ny, m, ax0, ax1, ay0, ay1, kx, ky, inv_eps)
    return (float(np.sum(np.minimum(s, cap))), float(np.sum(np.sqrt(s))),
            int(s.size))


def brute_force_scan(levels, values, free_idx, pair_i, pair_j, pair_w,
                     pair_phi, pair_pa, pair_pb, inv_eps):
    """Exact minimum of sum_p w_p phi_p(s_p) over all |levels|^|free| nodal
    assignments; returns (best energy, best level-index per free node).

    Vectorized over chunks of configurations (mixed-radix decoded).
    """
    Q = len(levels)
    F = len(free_idx)
    n_cfg = Q ** F
    chunk = max(1, min(n_cfg, 1 << 14))
    best_val = np.inf
    best_digits = np.zeros(F, dtype=np.int64)
    radices = Q ** np.arange(F - 1, -1, -1, dtype=np.int64)
    inv2 = inv_eps * inv_eps
    for start in range(0, n_cfg, chunk):
        idx = np.arange(start, min(start + chunk, n_cfg), dtype=np.int64)
        digits = (idx[:, None] // radices[None, :]) % Q
        cfg = np.tile(values, (len(idx), 1))
        cfg[:, free_idx] = levels[digits]
        energy = np.zeros(len(idx))
        for p in range(len(pair_i)):
            d = cfg[:, pair_j[p]] - cfg[:, pair_i[p]]
            s = d * d * inv2
            energy += pair_w[p] * _phi(s, int(pair_phi[p]), pair_pa[p], pair_pb[p])
        k = int(np.argmin(energy))
        if energy[k] < best_val:
            best_val = float(energy[k])
            best_digits = digits[k].copy()
    return best_val, best_digits
