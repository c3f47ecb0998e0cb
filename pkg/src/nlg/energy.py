"""Assembly of the non-local energies on grids.

The double integral over (x, xi) becomes a sum over lattice offsets k of
per-offset pair sweeps:

    total = sum_k w_k * sum_terms rho_term(|xi_k|) * h^d * pair_sum(...)

Offsets are visited in sorted order (|k|, then lex) and per-offset partial
sums are combined with math.fsum, so totals are reproducible bit-for-bit
regardless of worker count.  The pair sweeps themselves run through
nlg.backend (compiled core if built, numpy otherwise).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from nlg import backend
from nlg import grid as G
from nlg import kernels as K
from nlg.grid import glue_fields  # noqa: F401  (part of this module's API)


@dataclass
class EnergyBreakdown:
    total: float
    eps: float
    h: float
    T: float
    per_offset: dict = field(default_factory=dict)   # k tuple -> partial sum
    components: dict = field(default_factory=dict)   # term label -> value

    def __float__(self):
        return self.total


def _validate(f, u, eps):
    dom = u.domain
    if f is not None:
        if f.d != dom.d:
            raise ValueError("family dimension %d != grid dimension %d"
                             % (f.d, dom.d))
        if f.m != u.m:
            raise ValueError("family has m=%d but field has m=%d" % (f.m, u.m))
    dom.check_eps(eps)
    return dom


def _offset_jobs(offsets, worker, n_workers):
    if n_workers <= 1:
        return [worker(o) for o in offsets]
    with ThreadPoolExecutor(max_workers=n_workers) as ex:
        return list(ex.map(worker, offsets))


def energy_total(f, u, mask="all", eps=None, T=None, n_workers=1):
    """F_eps(u, U) truncated to |xi| <= T, with per-offset partial sums."""
    if eps is None or T is None:
        raise ValueError("eps and T are required")
    dom = _validate(f, u, eps)
    offs = G.offset_set(eps, dom.h, T, dom.d)
    terms = f.terms(eps)
    pts = dom.nodes("all")
    coeffs = [None if t.coeff is None
              else np.ascontiguousarray(t.coeff(pts), dtype=float)
              for t in terms]
    hd = dom.h ** dom.d
    inv_eps = 1.0 / eps
    vals = u.values
    nx, ny, m = dom.nx, dom.ny, u.m

    def worker(off):
        ax0, ax1, ay0, ay1 = G.pair_rect(dom, mask, off.k)
        if ax1 <= ax0 or ay1 <= ay0:
            return []
        kx = off.k[0]
        ky = off.k[1] if dom.d == 2 else 0
        r = float(np.linalg.norm(off.xi))
        parts = []
        for t, c in zip(terms, coeffs):
            wt = float(t.kernel(r))
            if wt == 0.0:
                continue
            s = backend.pair_sum(vals, nx, ny, m, ax0, ax1, ay0, ay1,
                                 kx, ky, inv_eps, t.phi, t.pa, t.pb, c)
            parts.append((t.label, off.w * wt * hd * s))
        return parts

    results = _offset_jobs(list(offs), worker, n_workers)
    per_offset = {}
    comp_lists = {}
    for off, parts in zip(offs, results):
        if not parts:
            continue
        per_offset[off.k] = math.fsum(v for _, v in parts)
        for label, v in parts:
            comp_lists.setdefault(label, []).append(v)
    total = math.fsum(per_offset[off.k] for off in offs if off.k in per_offset)
    components = {lbl: math.fsum(vs) for lbl, vs in comp_lists.items()}
    return EnergyBreakdown(total, eps, dom.h, T, per_offset, components)


def reference_energies(setup, u, mask="all", eps=None, T=None, n_workers=1):
    """G1, G2, P and the eta term in one pair sweep per offset.

    Returns an EnergyBreakdown whose total is G1 and whose components carry
    G1, G2, P, eta_term and H = G2 + P + eta_term."""
    if eps is None or T is None:
        raise ValueError("eps and T are required")
    dom = _validate(None, u, eps)
    offs = G.offset_set(eps, dom.h, T, dom.d)
    psi = setup.psi(eps)
    eta = setup.eta(eps)
    hd = dom.h ** dom.d
    inv_eps = 1.0 / eps
    cap = 1.0 / eps
    vals = u.values
    nx, ny, m = dom.nx, dom.ny, u.m

    def worker(off):
        ax0, ax1, ay0, ay1 = G.pair_rect(dom, mask, off.k)
        if ax1 <= ax0 or ay1 <= ay0:
            return None
        kx = off.k[0]
        ky = off.k[1] if dom.d == 2 else 0
        r = float(np.linalg.norm(off.xi))
        sg, sa, n = backend.pair_sum_ref(vals, nx, ny, m, ax0, ax1, ay0, ay1,
                                         kx, ky, inv_eps, cap)
        base = off.w * hd
        return (base * float(setup.rho1(r)) * sg,
                base * float(setup.rho2(r)) * sg,
                base * float(psi(r)) * sa,
                base * float(eta(r)) * n)

    results = [r for r in _offset_jobs(list(offs), worker, n_workers)
               if r is not None]
    g1 = math.fsum(r[0] for r in results)
    g2 = math.fsum(r[1] for r in results)
    p = math.fsum(r[2] for r in results)
    et = math.fsum(r[3] for r in results)
    comps = {"G1": g1, "G2": g2, "P": p, "eta_term": et, "H": g2 + p + et}
    return EnergyBreakdown(g1, eps, dom.h, T, {}, comps)


class TailGap:
    """(gap, moment_bound) with every factor of the bound kept around."""

    def __init__(self, gap, moment_bound, u_inf, measure, scale, tail_integral):
        self.gap = gap
        self.moment_bound = moment_bound
        self.u_inf = u_inf
        self.measure = measure
        self.scale = scale
        self.tail_integral = tail_integral

    def __iter__(self):
        return iter((self.gap, self.moment_bound))

    def __repr__(self):
        return ("TailGap(gap=%r, moment_bound=%r, u_inf=%r, measure=%r, "
                "scale=%r, tail_integral=%r)"
                % (self.gap, self.moment_bound, self.u_inf, self.measure,
                   self.scale, self.tail_integral))


def tail_gap(f, u, mask="all", eps=None, T=None, T_max=None, scale=1.0,
             n_workers=1):
    """Energy mass beyond the cutoff T, against the comparison-kernel tail.

    gap = F^{T_max} - F^T >= 0;  the reported bound is
    (|u|_inf^2 * scale + |U|) * int_{T<|xi|<T_max} (rho2 xi^2 + psi_eps xi
    + eta_eps) dxi, an a-priori envelope rather than a sharp constant."""
    if T_max is None or T is None or T_max <= T:
        raise ValueError("need T_max > T")
    big = energy_total(f, u, mask, eps, T_max, n_workers)
    small = energy_total(f, u, mask, eps, T, n_workers)
    gap = big.total - small.total
    if gap < -1e-12 * max(1.0, abs(big.total)):
        raise AssertionError("truncation gap negative: %r" % gap)
    setup = f.declared_bounds
    if setup is None:
        raise ValueError("family %r declares no comparison kernels" % f.name)
    psi = setup.psi(eps)
    eta = setup.eta(eps)
    tail = ((setup.rho2.moment(2, T_max) - setup.rho2.moment(2, T))
            + (psi.moment(1, T_max) - psi.moment(1, T))
            + (eta.moment(0, T_max) - eta.moment(0, T)))
    u_inf = u.sup_norm()
    measure = u.domain.mask_measure(mask)
    bound = (u_inf ** 2 * scale + measure) * tail
    return TailGap(gap, bound, u_inf, measure, scale, tail)


@dataclass
class ContinuumValues:
    MS1: float
    MS2: float
    TV: float
    H_limit: float
    derived_surface: float
    derived_surface2: float


def _jump_measure_in_box(jump, box, d):
    """Interface measure inside an axis-aligned box (axis-aligned normals)."""
    axis = int(np.argmax(np.abs(jump.nu)))
    x0 = float(jump.x0[axis])
    a, b = box[axis]
    if not (a < x0 < b):
        return 0.0
    meas = 1.0
    for ax in range(d):
        if ax != axis:
            meas *= box[ax][1] - box[ax][0]
    return meas


def continuum_limit_value(setup, tf, box):
    """Limit energies of a piecewise-affine test function on the box U.

    MS_i uses the second-moment diffuse constant and the angular-average
    surface constant mu_i; derived_surface swaps mu_i for the direct
    interface integral int rho_i(xi) |xi . nu| dxi (see the kernels module
    docstring for why the two differ by a fixed dimensional factor)."""
    box = tuple(box) if not np.isscalar(box[0]) else (tuple(box),)
    d = tf.d
    rep1 = K.limit_constants(setup.rho1)
    rep2 = K.limit_constants(setup.rho2)
    measures = tf.piece_measures(box)
    grad2 = math.fsum(float(np.sum(p.L ** 2)) * mv
                      for p, mv in zip(tf.pieces, measures))
    grad1 = math.fsum(math.sqrt(float(np.sum(p.L ** 2))) * mv
                      for p, mv in zip(tf.pieces, measures))
    jump_meas = 0.0
    jump_tv = 0.0
    surf1 = 0.0
    surf2 = 0.0
    for j in tf.jumps:
        mv = _jump_measure_in_box(j, box, d)
        if mv == 0.0:
            continue
        jump_meas += mv
        jump_tv += float(np.linalg.norm(j.zeta)) * mv
        surf1 += rep1.surface_const(j.nu) * mv
        surf2 += rep2.surface_const(j.nu) * mv
    ms1 = rep1.lam * grad2 + rep1.mu * jump_meas
    ms2 = rep2.lam * grad2 + rep2.mu * jump_meas
    tv = rep1.kappa * (grad1 + jump_tv)
    return ContinuumValues(ms1, ms2, tv, ms2 + tv,
                           rep1.lam * grad2 + surf1,
                           rep2.lam * grad2 + surf2)


@dataclass
class InterpolationReport:
    H: float
    G: float
    P: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.H

    @property
    def passed(self):
        return self.slack >= -1e-12 * max(1.0, self.rhs)


def characteristic_energies(u, mask="all", eps=None, r=None, n_workers=1):
    """G^r, P^r with the unit kernel on B_r (plus the discrete weight mass),
    the building blocks of the interpolation bound."""
    dom = _validate(None, u, eps)
    offs = G.offset_set(eps, dom.h, r, dom.d)
    hd = dom.h ** dom.d
    inv_eps = 1.0 / eps
    vals = u.values
    nx, ny, m = dom.nx, dom.ny, u.m

    def worker(off):
        ax0, ax1, ay0, ay1 = G.pair_rect(dom, mask, off.k)
        if ax1 <= ax0 or ay1 <= ay0:
            return (0.0, 0.0)
        kx = off.k[0]
        ky = off.k[1] if dom.d == 2 else 0
        sg, sa, _ = backend.pair_sum_ref(vals, nx, ny, m, ax0, ax1, ay0, ay1,
                                         kx, ky, inv_eps, inv_eps)
        return (off.w * hd * sg, off.w * hd * sa)

    results = _offset_jobs(list(offs), worker, n_workers)
    g = math.fsum(r_[0] for r_ in results)
    p = math.fsum(r_[1] for r_ in results)
    return g, p, offs.total_weight()


def interpolation_check(u, mask="all", eps=None, r=None, n_workers=1):
    """H^r <= (1 + 2|u|_inf) G^r + sqrt(W |U| G^r) with the discrete offset
    mass W; at grid level this is an exact Cauchy-Schwarz consequence, so
    the slack must be nonnegative to rounding."""
    g, p, w = characteristic_energies(u, mask, eps, r, n_workers)
    u_inf = u.sup_norm()
    measure = u.domain.mask_measure(mask)
    h_val = g + p
    rhs = (1.0 + 2.0 * u_inf) * g + math.sqrt(w * measure * g)
    return InterpolationReport(h_val, g, p, rhs)


def single_offset_energy(u, mask, eps, k, require_shift_inside=False):
    """h^d * sum of g_eps over pairs (i, i+k) with i in the mask; the shifted
    node only needs to stay inside the grid unless require_shift_inside."""
    dom = u.domain
    x0, x1, y0, y1 = dom.mask_rect(mask if require_shift_inside else "all")
    vx0, vx1, vy0, vy1 = dom.mask_rect(mask)
    kx = k[0]
    ky = k[1] if dom.d == 2 else 0
    ax0, ax1 = max(vx0, x0 - kx), min(vx1, x1 - kx)
    ay0, ay1 = max(vy0, y0 - ky), min(vy1, y1 - ky)
    if ax1 <= ax0 or ay1 <= ay0:
        return 0.0
    sg, _, _ = backend.pair_sum_ref(u.values, dom.nx, dom.ny, u.m,
                                    ax0, ax1, ay0, ay1, kx, ky,
                                    1.0 / eps, 1.0 / eps)
    return dom.h ** dom.d * sg


def enlarged_mask(dom, mask, eps, k, r, name=None):
    """Register the cell-aligned hull of  V + (0, eps*xi) + B_{eps*r}
    (clipped to the domain) and return its name; xi = k*h/eps, so the sweep
    displacement eps*xi is k*h exactly."""
    box = dom.mask_box(mask)
    shift = [k[ax] * dom.h if ax < len(k) else 0.0 for ax in range(dom.d)]
    pad = eps * r
    grown = []
    for ax, (a, b) in enumerate(box):
        a2 = a + min(0.0, shift[ax]) - pad
        b2 = b + max(0.0, shift[ax]) + pad
        a0, b0 = dom.box[ax]
        a2 = a0 + math.floor((a2 - a0) / dom.h - 1e-9) * dom.h
        b2 = a0 + math.ceil((b2 - a0) / dom.h + 1e-9) * dom.h
        grown.append((max(a0, a2), min(b0, b2)))
    name = name or ("_grown_%s_%s" % (mask, "_".join(map(str, k))))
    dom.add_box_mask(name, tuple(grown))
    return name


def local_nonlocal_ratio(u, mask, eps, k, r0):
    """Single-offset energy over V against (|xi|^2 + 1) * A^{r0}(u, V_{eps,xi}),
    the quantity whose boundedness the short-range comparison asserts."""
    dom = u.domain
    num = single_offset_energy(u, mask, eps, k)
    xi = np.array(k, dtype=float) * dom.h / eps
    big = enlarged_mask(dom, mask, eps, k, r0)
    a_val, _, _ = characteristic_energies(u, big, eps=eps, r=r0)
    denom = (float(xi @ xi) + 1.0) * a_val
    if denom == 0.0:
        return math.inf if num > 0 else 0.0
    return num / denom
