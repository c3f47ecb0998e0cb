"""Minimization of the assembled non-local energies.

Two engines:

* minimize_gnc -- graduated non-convexity.  Each capped-quadratic density is
  replaced by the saturating rational surrogate (1/eps) q/(1+q) with
  q = gamma * eps * |z|^2, and gamma is driven up the ladder
  {1/16, 1/4, 1, 4} before a final stage with the true capped density (its
  subgradient is 2z below the cap and 0 at or above it).  Every stage runs
  gradient descent with Armijo backtracking on the free nodes; constrained
  nodes never move.
* brute_force_tiny -- exact enumeration over quantized nodal values on tiny
  1-D instances; the independent oracle the descent engine is held against.

A Dirichlet pair (datum w, layer s) pins every mask node lying within eps*s
of the mask's complement to w; outside-mask nodes are frozen too (no pair
reaches them), so only the interior of the mask is optimized.

Values reported in MinResult.history are the best true-density energies seen
after each stage (a running minimum, hence nonincreasing by construction);
stage_histories carries the per-stage objective after every accepted step,
which Armijo keeps monotone within each stage.
"""

import math
from dataclasses import dataclass

import numpy as np

from nlg import backend
from nlg import grid as G
from nlg.energy import energy_total
from nlg.grid import Field, TestFunction, sample_testfn
from nlg.integrands import DEFAULT_SEED, rng_for

DEFAULT_SCHEDULE = (1.0 / 16.0, 0.25, 1.0, 4.0, math.inf)
ARMIJO_FACTOR = 0.5
ARMIJO_SLOPE = 1e-4
REL_TOL = 1e-8
MAX_INNER = 500
MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class DirichletSpec:
    """Dirichlet datum w imposed on a boundary layer of width layer * eps
    (measured from the complement of the mask box)."""
    datum: TestFunction
    layer: float
    mask: str = "all"

    def __post_init__(self):
        if not self.layer > 0:
            raise ValueError("layer width must be positive")


@dataclass
class MinResult:
    minimizer: Field
    value: float
    history: list           # best true energy after each stage, nonincreasing
    stage_histories: list   # per stage: objective after every accepted step
    status: str             # converged | max-iters | oracle-exact

    def __float__(self):
        return self.value


def free_node_mask(dom, spec, eps):
    """Boolean arrays (free, pinned) over all nodes for a Dirichlet spec."""
    in_mask = np.zeros(dom.n_nodes, dtype=bool)
    idx = dom.mask_flat_indices(spec.mask)
    in_mask[idx] = True
    dist = dom.boundary_distance(spec.mask)
    width = eps * spec.layer
    layer = idx[dist < width - 1e-12 * max(1.0, width)]
    if layer.size == 0:
        raise ValueError("Dirichlet layer of width eps*s = %g contains no "
                         "nodes (grid step %g)" % (width, dom.h))
    free = in_mask.copy()
    free[layer] = False
    if not free.any():
        raise ValueError("no free nodes: the boundary layer covers the mask")
    return free, ~free


def _assemble(terms, dom, mask, eps, T):
    """Precompute per-offset/per-term sweep arguments: list of
    (rect, kx, ky, [(phi, pa, pb, coeff, scale), ...])."""
    pts = dom.nodes("all")
    coeffs = [None if t.coeff is None
              else np.ascontiguousarray(t.coeff(pts), dtype=float)
              for t in terms]
    hd = dom.h ** dom.d
    jobs = []
    for off in G.offset_set(eps, dom.h, T, dom.d):
        ax0, ax1, ay0, ay1 = G.pair_rect(dom, mask, off.k)
        if ax1 <= ax0 or ay1 <= ay0:
            continue
        kx = off.k[0]
        ky = off.k[1] if dom.d == 2 else 0
        r = float(np.linalg.norm(off.xi))
        tlist = []
        for t, c in zip(terms, coeffs):
            wt = float(t.kernel(r))
            if wt != 0.0:
                tlist.append((t.phi, t.pa, t.pb, c, off.w * wt * hd))
        if tlist:
            jobs.append(((ax0, ax1, ay0, ay1), kx, ky, tlist))
    return jobs


class _Objective:
    """Energy and gradient of one assembled term list plus optional
    L2 fidelity tau * h^d * sum |u - g|^2."""

    def __init__(self, jobs, dom, m, inv_eps, fidelity):
        self.jobs = jobs
        self.nx, self.ny, self.m = dom.nx, dom.ny, m
        self.hd = dom.h ** dom.d
        self.inv_eps = inv_eps
        self.fidelity = fidelity

    def _fid(self, vals, grad=None):
        if self.fidelity is None:
            return 0.0
        g, tau = self.fidelity
        with np.errstate(over="ignore"):   # overflow -> inf, caught by caller
            diff = vals - g.values
            if grad is not None:
                grad += (2.0 * tau * self.hd) * diff
            return tau * self.hd * float(np.sum(diff * diff))

    def energy(self, vals):
        per = []
        for rect, kx, ky, tlist in self.jobs:
            ax0, ax1, ay0, ay1 = rect
            parts = [scale * backend.pair_sum(
                vals, self.nx, self.ny, self.m, ax0, ax1, ay0, ay1,
                kx, ky, self.inv_eps, phi, pa, pb, c)
                for phi, pa, pb, c, scale in tlist]
            per.append(math.fsum(parts))
        return math.fsum(per) + self._fid(vals)

    def energy_grad(self, vals, grad):
        grad[:] = 0.0
        per = []
        for rect, kx, ky, tlist in self.jobs:
            ax0, ax1, ay0, ay1 = rect
            parts = [scale * backend.pair_sum_grad(
                vals, grad, self.nx, self.ny, self.m, ax0, ax1, ay0, ay1,
                kx, ky, self.inv_eps, phi, pa, pb, c, scale)
                for phi, pa, pb, c, scale in tlist]
            per.append(math.fsum(parts))
        return math.fsum(per) + self._fid(vals, grad)


def _descend(obj, vals, free_rows):
    """Armijo-backtracked gradient descent on the free rows; returns
    (values, final energy, accepted-step energies, converged flag)."""
    grad = np.zeros_like(vals)
    energy = obj.energy_grad(vals, grad)
    if not math.isfinite(energy):
        raise RuntimeError("energy is not finite at the initial iterate "
                           "(overflow in the pair terms or fidelity)")
    grad[~free_rows] = 0.0
    trace = [energy]
    step = 1.0
    converged = False
    for _ in range(MAX_INNER):
        slope = float(np.sum(grad * grad))
        if slope == 0.0:
            converged = True
            break
        alpha = step * 2.0
        accepted = None
        for _ in range(MAX_BACKTRACKS):
            trial = vals - alpha * grad
            e_t = obj.energy(trial)
            if not math.isfinite(e_t):
                raise RuntimeError("energy is not finite during line search")
            if e_t <= energy - ARMIJO_SLOPE * alpha * slope:
                accepted = (trial, e_t)
                break
            alpha *= ARMIJO_FACTOR
        if accepted is None:
            converged = True   # no Armijo step: stationary to line-search depth
            break
        vals, e_new = accepted
        step = alpha
        rel = (energy - e_new) / max(abs(energy), 1e-300)
        energy = e_new
        trace.append(energy)
        obj.energy_grad(vals, grad)
        grad[~free_rows] = 0.0
        if rel < REL_TOL:
            converged = True
            break
    return vals, energy, trace, converged


def _initial_values(dom, m, spec, fidelity, init):
    if init is not None:
        if init.domain.shape != dom.shape or init.m != m:
            raise ValueError("initial guess does not match the grid/field")
        return init.values.copy()
    if spec is not None:
        return sample_testfn(spec.datum, dom).values.copy()
    if fidelity is not None:
        return fidelity[0].values.copy()
    return np.zeros((dom.n_nodes, m))


def minimize_gnc(f, dom, eps, T, spec=None, fidelity=None, schedule=None,
                 init=None):
    """Graduated non-convexity descent of F_eps(u, mask) (+ optional L2
    fidelity) over the free nodes.  Returns a MinResult whose value is the
    true-density energy of the best iterate seen across stages."""
    if fidelity is not None:
        g, tau = fidelity
        if tau < 0:
            raise ValueError("fidelity weight must be nonnegative")
        if g.domain.shape != dom.shape or g.m != f.m:
            raise ValueError("fidelity field does not match the grid/family")
    if f.d != dom.d:
        raise ValueError("family dimension %d != grid dimension %d"
                         % (f.d, dom.d))
    dom.check_eps(eps)
    mask = spec.mask if spec is not None else "all"
    m = f.m

    vals = _initial_values(dom, m, spec, fidelity, init)
    if spec is not None:
        free, pinned = free_node_mask(dom, spec, eps)
        datum_vals = sample_testfn(spec.datum, dom).values
        vals[pinned] = datum_vals[pinned]
    else:
        free = np.zeros(dom.n_nodes, dtype=bool)
        free[dom.mask_flat_indices(mask)] = True
        if not free.any():
            raise ValueError("no free nodes in mask %r" % mask)

    schedule = DEFAULT_SCHEDULE if schedule is None else tuple(schedule)
    if not schedule:
        raise ValueError("empty stage schedule")
    inv_eps = 1.0 / eps
    true_obj = _Objective(_assemble(f.terms(eps), dom, mask, eps, T),
                          dom, m, inv_eps, fidelity)

    history = []
    stage_histories = []
    # the initial iterate is itself feasible: seed the best-so-far with it so
    # the returned value never exceeds the true energy of the init
    best_energy = true_obj.energy(vals)
    if not math.isfinite(best_energy):
        raise RuntimeError("energy is not finite at the initial iterate "
                           "(overflow in the pair terms or fidelity)")
    best_vals = vals.copy()
    final_converged = False
    for gamma in schedule:
        if math.isinf(gamma):
            obj = true_obj
        else:
            obj = _Objective(
                _assemble(f.surrogate_terms(eps, gamma), dom, mask, eps, T),
                dom, m, inv_eps, fidelity)
        vals, _, trace, converged = _descend(obj, vals, free)
        stage_histories.append(trace)
        true_e = obj.energy(vals) if obj is true_obj else true_obj.energy(vals)
        if true_e < best_energy:
            best_energy, best_vals = true_e, vals.copy()
        history.append(best_energy)
        final_converged = converged
    status = "converged" if final_converged else "max-iters"
    return MinResult(Field(dom, best_vals), best_energy, history,
                     stage_histories, status)


# ---------------------------------------------------------------------------
# exact enumeration oracle

def _pair_arrays(f, dom, mask, eps, T):
    """Flattened (i, j, w, phi, pa, pb) pair arrays equivalent to one full
    energy sweep (weights carry offset weight, kernel value, h^d and any
    per-node coefficient at the base node)."""
    terms = f.terms(eps)
    pts = dom.nodes("all")
    coeffs = [None if t.coeff is None else np.asarray(t.coeff(pts), float)
              for t in terms]
    hd = dom.h ** dom.d
    ii, jj, ww, pphi, ppa, ppb = [], [], [], [], [], []
    for off in G.offset_set(eps, dom.h, T, dom.d):
        base, shifted = G.shifted_pairs(dom, mask, off.k)
        if base.size == 0:
            continue
        r = float(np.linalg.norm(off.xi))
        for t, c in zip(terms, coeffs):
            wt = float(t.kernel(r))
            if wt == 0.0:
                continue
            w = np.full(base.size, off.w * wt * hd)
            if c is not None:
                w *= c[base]
            ii.append(base)
            jj.append(shifted)
            ww.append(w)
            pphi.append(np.full(base.size, t.phi, dtype=np.int64))
            ppa.append(np.full(base.size, t.pa))
            ppb.append(np.full(base.size, t.pb))
    if not ii:
        raise ValueError("no interacting pairs in mask %r" % mask)
    cat = np.concatenate
    return (cat(ii), cat(jj), cat(ww), cat(pphi), cat(ppa), cat(ppb))


def brute_force_tiny(f, dom, eps, T, spec, q_levels=9, q_range=(0.0, 1.0)):
    """Exact minimum over all assignments of q_levels quantized values to the
    free nodes (<= 8 free nodes, d=1, m=1, q_levels <= 9); pinned nodes hold
    the exact datum.  status is oracle-exact."""
    if dom.d != 1 or f.m != 1:
        raise ValueError("the enumeration oracle is limited to d=1, m=1")
    if q_levels > 9 or q_levels < 2:
        raise ValueError("quantization must use 2..9 levels")
    free, pinned = free_node_mask(dom, spec, eps)
    n_free = int(free.sum())
    if n_free > 8:
        raise ValueError("instance too large: %d free nodes (limit 8)"
                         % n_free)
    datum_vals = sample_testfn(spec.datum, dom).values
    values = datum_vals[:, 0].copy()
    free_idx = np.flatnonzero(free).astype(np.int64)
    levels = np.linspace(q_range[0], q_range[1], q_levels)
    pi, pj, pw, pphi, ppa, ppb = _pair_arrays(f, dom, spec.mask, eps, T)
    best, digits = backend.brute_force_scan(
        levels, values, free_idx, pi, pj, pw, pphi, ppa, ppb, 1.0 / eps)
    out = values.copy()
    out[free_idx] = levels[digits]
    field = Field(dom, out.reshape(-1, 1))
    value = energy_total(f, field, spec.mask, eps=eps, T=T).total
    return MinResult(field, value, [value], [[value]], "oracle-exact")


def quantization_gap(f, dom, eps, T, spec, result, q_levels=9,
                     q_range=(0.0, 1.0)):
    """Energy resolution of one quantization step around an oracle optimum:
    the largest energy change produced by moving a single free node one
    level up or down.  Descent values are compared against the oracle within
    this gap."""
    free, _ = free_node_mask(dom, spec, eps)
    levels = np.linspace(q_range[0], q_range[1], q_levels)
    step = levels[1] - levels[0]
    base = result.minimizer.values
    e0 = energy_total(f, result.minimizer, spec.mask, eps=eps, T=T).total
    gap = 0.0
    for i in np.flatnonzero(free):
        for delta in (-step, step):
            v = base[i, 0] + delta
            if v < q_range[0] - 1e-12 or v > q_range[1] + 1e-12:
                continue
            trial = base.copy()
            trial[i, 0] = v
            e = energy_total(f, Field(dom, trial), spec.mask,
                             eps=eps, T=T).total
            gap = max(gap, abs(e - e0))
    return gap


# ---------------------------------------------------------------------------
# multi-start Dirichlet minimization

def _dyadic_fractions():
    yield 0.5
    level = 4
    while True:
        for num in range(1, level, 2):
            yield num / level
        level *= 2


def _jump_init(dom, datum_field, spec, frac, axis=0):
    """Two-plateau ansatz: datum trace from the near face on either side of
    an interior interface at the given fraction of the mask box."""
    box = dom.mask_box(spec.mask)
    a, b = box[axis]
    cut = a + frac * (b - a)
    pts = dom.nodes("all")
    idx = dom.mask_flat_indices(spec.mask)
    lo_node = idx[np.argmin(pts[idx, axis])]
    hi_node = idx[np.argmax(pts[idx, axis])]
    vals = np.where((pts[:, axis] < cut)[:, None],
                    datum_field.values[lo_node][None, :],
                    datum_field.values[hi_node][None, :])
    return Field(dom, np.ascontiguousarray(vals))


def _restart_inits(dom, spec, restarts, seed):
    datum_field = sample_testfn(spec.datum, dom)
    inits = [("datum", datum_field)]
    if dom.d == 1:
        jump_fracs = _dyadic_fractions()
        jumps = (("jump@%g" % f_, _jump_init(dom, datum_field, spec, f_))
                 for f_ in jump_fracs)
    else:
        jumps = iter([("jump@x-mid", _jump_init(dom, datum_field, spec, 0.5, 0)),
                      ("jump@y-mid", _jump_init(dom, datum_field, spec, 0.5, 1))])
    spread = float(np.ptp(datum_field.values)) + 1.0
    n_noisy = 0
    while len(inits) < restarts:
        nxt = next(jumps, None)
        if nxt is not None:
            inits.append(nxt)
            if len(inits) >= restarts:
                break
        n_noisy += 1
        rng = rng_for(seed, "dirichlet-restart-%d" % n_noisy)
        noisy = datum_field.values + 0.25 * spread * rng.standard_normal(
            datum_field.values.shape)
        inits.append(("noisy-%d" % n_noisy, Field(dom, noisy)))
    return inits[:restarts]


def dirichlet_minimum(f, dom, eps, T, w, U="all", s=1.0, restarts=5,
                      schedule=None, seed=DEFAULT_SEED, full=False):
    """Best minimize_gnc value over deterministic restarts (datum, two-plateau
    interface ansatz at dyadic interior positions, noisy datum).  The result
    is an upper bound for the true infimum -- descent certifies feasibility,
    not global optimality.  With full=True returns the best MinResult."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    spec = DirichletSpec(w, s, U)
    try:
        free_node_mask(dom, spec, eps)
    except ValueError as err:
        if "no free nodes" not in str(err):
            raise
        # the layer pins every node: the constraint set is {w} and the
        # infimum is attained at the datum itself
        datum_field = sample_testfn(w, dom)
        value = energy_total(f, datum_field, U, eps=eps, T=T).total
        best = MinResult(datum_field, value, [value], [[value]], "converged")
        return best if full else best.value
    best = None
    for _, init in _restart_inits(dom, spec, restarts, seed):
        res = minimize_gnc(f, dom, eps, T, spec=spec, schedule=schedule,
                           init=init)
        if best is None or res.value < best.value:
            best = res
    return best if full else best.value
