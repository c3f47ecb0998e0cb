"""Increment densities f_eps(x, xi, z) and their validity checks.

A family bundles a dense evaluator (used by property checks and as the
slow reference route) with a list of structured terms (used by the energy
assembler, which only ever sees radial weights, an optional x-coefficient
and a phi code acting on s = |z|^2).  Built-in families:

  reference   rho1(xi) * g_eps(z)
  composite   rho2(xi) * g_eps(z) + psi_eps(xi) |z| + eta_eps(xi)
  arctan      rho(xi) * (1/eps) * arctan(eps |z|^2)
  periodic    a(x_1/eps - phase) * rho(xi) * g_eps(z), a two-valued 1-periodic

plus two deliberately broken families (prefixed `_bad_`) used to exercise
the failure paths of the checks.  Every built-in family declares the
comparison kernels it is sandwiched by:

  rho1(xi) g_eps(z)  <=  f_eps(x, xi, z)  <=  rho2(xi) g_eps(z)
                                             + psi_eps(xi) |z| + eta_eps(xi)
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from nlg import backend
from nlg import kernels as _k

NOISE_TOL = 1e-12
DEFAULT_SEED = 0x5EED


def g_eps(eps, z):
    """min{|z|^2, 1/eps} for z in R^m (last axis = components)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = np.asarray(z, dtype=float)
    s = z * z if z.ndim == 0 else np.sum(z * z, axis=-1)
    return np.minimum(s, 1.0 / eps)


def surrogate_g(eps, gamma, z):
    """Smooth saturating stand-in for g_eps: (1/eps) q/(q+1), q = gamma*eps*|z|^2."""
    z = np.asarray(z, dtype=float)
    s = z * z if z.ndim == 0 else np.sum(z * z, axis=-1)
    q = gamma * eps * s
    return (1.0 / eps) * q / (q + 1.0)


@dataclass
class EnergyTerm:
    """One additive piece of f_eps as the assembler consumes it.

    weight(|xi|) * coeff(x) * phi(s), with s = |z|^2 and phi selected by an
    integer code from nlg.backend (pa, pb are the code's two parameters).
    """
    kernel: object          # RadialKernel giving the xi-weight
    phi: int
    pa: float = 0.0
    pb: float = 0.0
    coeff: object = None    # None, or callable mapping points (n, d) -> (n,)
    label: str = "f"


@dataclass
class IntegrandFamily:
    name: str
    d: int
    m: int
    eval_fn: object                  # (eps, x, xi, z) -> values, vectorized
    terms_fn: object                 # eps -> [EnergyTerm]
    declared_bounds: object = None   # KernelSetup or None (eval-only family)

    def eval(self, eps, x, xi, z):
        return self.eval_fn(eps, x, xi, z)

    def terms(self, eps):
        if self.terms_fn is None:
            raise ValueError("family %r is evaluation-only" % self.name)
        return self.terms_fn(eps)

    def surrogate_terms(self, eps, gamma):
        """terms(eps) with every capped-quadratic piece replaced by the
        smooth gamma-surrogate; smooth pieces pass through unchanged."""
        out = []
        for t in self.terms(eps):
            if t.phi == backend.PHI_GEPS:
                out.append(EnergyTerm(t.kernel, backend.PHI_SURR, 1.0 / eps,
                                      gamma * eps, t.coeff, t.label))
            else:
                out.append(t)
        return out


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if d != 1:
            raise ValueError("scalar x but d=%d" % d)
        return x.reshape(1, 1)
    if x.ndim == 1:
        if x.shape[0] == d:
            return x.reshape(1, d)
        if d == 1:
            return x.reshape(-1, 1)
        raise ValueError("x shape %s does not match d=%d" % (x.shape, d))
    if x.shape[1] != d:
        raise ValueError("x shape %s does not match d=%d" % (x.shape, d))
    return x


def eval_integrand(f, eps, x, xi, z):
    """Dimension-checked dense evaluation of f_eps(x, xi, z)."""
    x = _as_points(x, f.d)
    xi = _as_points(xi, f.d)
    z = _as_points(z, f.m)
    n = max(x.shape[0], xi.shape[0], z.shape[0])
    for arr, nm in ((x, "x"), (xi, "xi"), (z, "z")):
        if arr.shape[0] not in (1, n):
            raise ValueError("inconsistent %s batch length" % nm)
    vals = np.asarray(f.eval(eps, x, xi, z), dtype=float)
    return float(vals[0]) if vals.size == 1 else vals


def _norm(a):
    return np.sqrt(np.sum(np.asarray(a, dtype=float) ** 2, axis=-1))


def reference_family(setup=None, d=1, m=1):
    setup = setup or _k.default_setup(d)
    rho1 = setup.rho1

    def _eval(eps, x, xi, z):
        return rho1(_norm(xi)) * g_eps(eps, z)

    def _terms(eps):
        return [EnergyTerm(rho1, backend.PHI_GEPS, 1.0 / eps, 0.0, None, "G1")]

    return IntegrandFamily("reference", d, m, _eval, _terms, setup)


def composite_family(setup=None, d=1, m=1):
    """The upper comparison functional H_eps as a family of its own:
    rho2 g_eps + psi_eps |z| + eta_eps."""
    setup = setup or _k.default_setup(d)

    def _eval(eps, x, xi, z):
        r = _norm(xi)
        z = np.asarray(z, dtype=float)
        az = np.abs(z) if z.ndim == 0 else _norm(z)
        return (setup.rho2(r) * g_eps(eps, z) + setup.psi(eps)(r) * az
                + setup.eta(eps)(r))

    def _terms(eps):
        return [
            EnergyTerm(setup.rho2, backend.PHI_GEPS, 1.0 / eps, 0.0, None, "G2"),
            EnergyTerm(setup.psi(eps), backend.PHI_ABS, 0.0, 0.0, None, "P"),
            EnergyTerm(setup.eta(eps), backend.PHI_CONST, 0.0, 0.0, None, "eta"),
        ]

    return IntegrandFamily("composite", d, m, _eval, _terms, setup)


def arctan_family(rho=None, d=1, m=1):
    """rho(xi) * (1/eps) arctan(eps |z|^2).

    Since (pi/4) min(t,1) <= arctan(t) <= (pi/2) min(t,1) for t >= 0, the
    family is sandwiched with rho1 = (pi/4) rho and rho2 = (pi/2) rho.
    """
    if rho is None:
        rho = _k.make_kernel(("gaussian", 1.0, 1.0), d)

    def _eval(eps, x, xi, z):
        z = np.asarray(z, dtype=float)
        s = z * z if z.ndim == 0 else np.sum(z * z, axis=-1)
        return rho(_norm(xi)) * (1.0 / eps) * np.arctan(eps * s)

    def _terms(eps):
        return [EnergyTerm(rho, backend.PHI_ATAN, 1.0 / eps, eps, None, "atan")]

    setup = _k.KernelSetup(
        rho1=_k.scale_kernel(rho, math.pi / 4.0),
        rho2=_k.scale_kernel(rho, math.pi / 2.0),
        psi_family=lambda eps: _k.make_kernel(("zero",), d),
        eta_family=lambda eps: _k.make_kernel(("zero",), d),
    )
    return IntegrandFamily("arctan", d, m, _eval, _terms, setup)


def periodic_coefficient(levels=(1.0, 2.0)):
    """1-periodic step coefficient a(t): levels[0] on [0, 1/2), levels[1] on
    [1/2, 1); callers evaluate it at t = x_1/eps - phase."""
    lo, hi = float(levels[0]), float(levels[1])

    def a(t):
        frac = np.mod(np.asarray(t, dtype=float), 1.0)
        return np.where(frac < 0.5, lo, hi)

    return a


def periodic_family(setup=None, levels=(1.0, 2.0), phase=0.0, d=1, m=1):
    """a(x_1/eps - phase) * rho(xi) * g_eps(z) with a two-valued periodic a."""
    setup = setup or _k.default_setup(d)
    if min(levels) <= 0:
        raise ValueError("coefficient levels must be positive")
    a = periodic_coefficient(levels)
    rho = setup.rho1

    def _eval(eps, x, xi, z):
        x = np.asarray(x, dtype=float)
        x1 = x if x.ndim == 0 else x[..., 0]
        return a(x1 / eps - phase) * rho(_norm(xi)) * g_eps(eps, z)

    def _terms(eps):
        def coeff(pts):
            return a(np.asarray(pts, dtype=float)[:, 0] / eps - phase)
        return [EnergyTerm(rho, backend.PHI_GEPS, 1.0 / eps, 0.0, coeff, "aG")]

    bounds = _k.KernelSetup(
        rho1=_k.scale_kernel(rho, min(levels)),
        rho2=_k.scale_kernel(rho, max(levels)),
        psi_family=setup.psi_family,
        eta_family=setup.eta_family,
    )
    fam = IntegrandFamily("periodic", d, m, _eval, _terms, bounds)
    fam.coefficient = a
    fam.phase = phase
    fam.levels = tuple(float(v) for v in levels)
    return fam


def _bad_sandwich_family(setup=None, d=1, m=1):
    """Deliberately violates its own declared upper bound (f = 2 rho2 g)."""
    setup = setup or _k.default_setup(d)
    bounds = _k.KernelSetup(rho1=setup.rho1, rho2=setup.rho2,
                            psi_family=lambda eps: _k.make_kernel(("zero",), d),
                            eta_family=lambda eps: _k.make_kernel(("zero",), d))

    def _eval(eps, x, xi, z):
        return 2.0 * setup.rho2(_norm(xi)) * g_eps(eps, z)

    return IntegrandFamily("_bad_sandwich", d, m, _eval, None, bounds)


def _bad_monotone_family(rho=None, d=1, m=1):
    """Deliberately breaks radial monotonicity (f = rho |sin|z||^2)."""
    rho = rho or _k.make_kernel(("box", 0.5, 1.0), d)

    def _eval(eps, x, xi, z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z) if z.ndim == 0 else _norm(z)
        return rho(_norm(xi)) * np.sin(az) ** 2

    return IntegrandFamily("_bad_monotone", d, m, _eval, None, None)


def make_family(name, setup=None, d=1, m=1, **kw):
    table = {
        "reference": reference_family,
        "composite": composite_family,
        "arctan": lambda setup=None, d=1, m=1, **kw2: arctan_family(d=d, m=m, **kw2),
        "periodic": periodic_family,
        "_bad_sandwich": _bad_sandwich_family,
        "_bad_monotone": lambda setup=None, d=1, m=1, **kw2: _bad_monotone_family(d=d, m=m, **kw2),
    }
    if name not in table:
        raise ValueError("unknown integrand family %r" % name)
    return table[name](setup=setup, d=d, m=m, **kw)


# ---------------------------------------------------------------------------
# sampling and checks

@dataclass
class SampleSpec:
    """How the checks draw (eps, x, xi, z) tuples."""
    eps_list: tuple = tuple(0.5 ** j for j in range(11))
    n_per_eps: int = 256
    xi_max: float = 4.0
    z_scale: float = 10.0     # |z| up to z_scale / sqrt(eps)
    omega: tuple = ((0.0, 1.0),)
    seed: int = DEFAULT_SEED
    suite: str = "integrand-checks"

    def batches(self, d, m):
        rng = rng_for(self.seed, self.suite)
        lo = np.array([ab[0] for ab in self.omega], dtype=float)
        hi = np.array([ab[1] for ab in self.omega], dtype=float)
        if lo.size != d:
            lo = np.zeros(d)
            hi = np.ones(d)
        for eps in self.eps_list:
            n = self.n_per_eps
            x = lo + (hi - lo) * rng.random((n, d))
            xi = rng.uniform(-self.xi_max, self.xi_max, (n, d))
            zdir = rng.standard_normal((n, m))
            zdir /= np.maximum(_norm(zdir), 1e-30)[:, None]
            zmag = rng.uniform(0.0, self.z_scale / math.sqrt(eps), n)
            z = zdir * zmag[:, None]
            yield eps, x, xi, z


def rng_for(seed, suite):
    """Independent substream per named suite (stable across runs)."""
    import zlib
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(suite.encode())]))


@dataclass
class SandwichReport:
    check: str
    samples: int
    max_lower_violation: float
    max_upper_violation: float

    @property
    def passed(self):
        return (self.max_lower_violation <= NOISE_TOL
                and self.max_upper_violation <= NOISE_TOL)

    def row(self):
        return [self.check, str(self.samples),
                repr(self.max_lower_violation), repr(self.max_upper_violation),
                "1" if self.passed else "0"]

    def __str__(self):
        return "%-24s samples=%-6d lower=%.3e upper=%.3e %s" % (
            self.check, self.samples, self.max_lower_violation,
            self.max_upper_violation, "pass" if self.passed else "FAIL")


def _reduce_max(chunks, worker, n_workers):
    if n_workers <= 1:
        parts = [worker(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            parts = list(ex.map(worker, chunks))
    lo = max((p[0] for p in parts), default=0.0)
    hi = max((p[1] for p in parts), default=0.0)
    n = sum(p[2] for p in parts)
    return lo, hi, n


def sandwich_check(f, setup=None, sampler=None, n_workers=1):
    """Empirically verify the two-sided comparison bound on random samples."""
    setup = setup or f.declared_bounds
    if setup is None:
        raise ValueError("family %r declares no comparison kernels" % f.name)
    sampler = sampler or SampleSpec(suite="sandwich:" + f.name)
    chunks = list(sampler.batches(f.d, f.m))

    def worker(batch):
        eps, x, xi, z = batch
        r = _norm(xi)
        az = _norm(z)
        vals = np.asarray(f.eval(eps, x, xi, z), dtype=float)
        ge = g_eps(eps, z)
        lower = setup.rho1(r) * ge
        upper = setup.rho2(r) * ge + setup.psi(eps)(r) * az + setup.eta(eps)(r)
        return (float(np.max(lower - vals, initial=0.0)),
                float(np.max(vals - upper, initial=0.0)),
                vals.size)

    lo, hi, n = _reduce_max(chunks, worker, n_workers)
    return SandwichReport("sandwich:" + f.name, n, lo, hi)


def monotonicity_check(f, sampler=None, n_workers=1):
    """Check f_eps(x, xi, z1) <= f_eps(x, xi, z2) whenever |z1| <= |z2|."""
    sampler = sampler or SampleSpec(suite="monotone:" + f.name)
    chunks = list(sampler.batches(f.d, f.m))
    rng = rng_for(sampler.seed, "monotone-shrink:" + f.name)
    scaled = []
    for eps, x, xi, z in chunks:
        t = rng.random(len(z))
        zdir = rng.standard_normal(z.shape)
        zdir /= np.maximum(_norm(zdir), 1e-30)[:, None]
        z1 = zdir * (t * _norm(z))[:, None]   # random direction, smaller norm
        scaled.append((eps, x, xi, z1, z))

    def worker(batch):
        eps, x, xi, z1, z2 = batch
        v1 = np.asarray(f.eval(eps, x, xi, z1), dtype=float)
        v2 = np.asarray(f.eval(eps, x, xi, z2), dtype=float)
        return (float(np.max(v1 - v2, initial=0.0)), 0.0, v1.size)

    lo, hi, n = _reduce_max(scaled, worker, n_workers)
    return SandwichReport("monotone:" + f.name, n, lo, hi)


def nonnegativity_check(f, sampler=None, n_workers=1):
    sampler = sampler or SampleSpec(suite="nonneg:" + f.name)
    chunks = list(sampler.batches(f.d, f.m))

    def worker(batch):
        eps, x, xi, z = batch
        vals = np.asarray(f.eval(eps, x, xi, z), dtype=float)
        return (float(np.max(-vals, initial=0.0)), 0.0, vals.size)

    lo, hi, n = _reduce_max(chunks, worker, n_workers)
    return SandwichReport("nonneg:" + f.name, n, lo, hi)
