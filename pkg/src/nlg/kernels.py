"""Radial interaction kernels, their moments, and the limit constants.

A kernel here is a radial density rho(|xi|) on R^d (d in {1,2}) weighting the
offset xi of a pairwise increment energy.  The module computes

  moment(k, T)     = integral over B_T of |xi|^k rho(xi) dxi,
  lam              = moment(2, inf) / d            (gradient coefficient),
  mu               = 2 * H^{d-1}(S^{d-1}) * moment(1, inf),
  kappa            = sphere average of |e1 . sigma|,
  surface_const(nu)= integral of rho(xi) |xi . nu| dxi,

where mu is the full angular-average jump coefficient and surface_const is the
directional surface constant observed as the pointwise limit of the energy on a
step function.  The two do not coincide: surface_const = kappa * moment(1), so
mu / surface_const = 2 H^{d-1}(S^{d-1}) / kappa (= 4 in d = 1).  Both are
computed and reported; the convergence studies downstream assert against
surface_const.
"""

import math
import threading

import numpy as np

__all__ = [
    "RadialKernel",
    "KernelSetup",
    "ConstantsReport",
    "MomentDivergence",
    "make_kernel",
    "parse_kernel_spec",
    "parse_family_spec",
    "moment",
    "limit_constants",
    "admissibility_report",
    "scale_kernel",
    "truncate_kernel",
    "normalize_first_moment",
    "sphere_area",
]

# H^{d-1}(S^{d-1}): the 0-sphere {+1,-1} carries counting measure, mass 2.
_SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi}

REL_TOL = 1e-10  # two successive cutoffs must agree to this relative tolerance


def sphere_area(d):
    return _SPHERE_AREA[d]


class MomentDivergence(ArithmeticError):
    """Raised when a moment integral grows without bound across cutoff doubling."""


class RadialKernel:
    """A radial profile with a support radius and cached moments.

    profile(r) must accept numpy arrays of radii r >= 0 and return nonnegative
    densities; profile(r) = 0 for r > support_radius when the support is
    bounded.  Kernels are immutable after construction; the moment cache is
    lock-protected so instances can be shared across worker threads.
    """

    def __init__(self, name, profile, support_radius, d):
        if d not in (1, 2):
            raise ValueError("dimension must be 1 or 2, got %r" % (d,))
        if support_radius <= 0:
            raise ValueError("nonpositive support radius")
        self.name = name
        self._profile = profile
        self.support_radius = float(support_radius)
        self.d = d
        self._moment_cache = {}
        self._lock = threading.Lock()

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.asarray(self._profile(r), dtype=float)
        if self.support_radius != math.inf:
            out = np.where(r > self.support_radius, 0.0, out)
        return out if out.ndim else float(out)

    def moment(self, k, T=math.inf):
        key = (int(k), float(T))
        with self._lock:
            if key in self._moment_cache:
                return self._moment_cache[key]
        val = _moment_quadrature(self, k, T)
        with self._lock:
            self._moment_cache[key] = val
        return val

    def __repr__(self):
        return "RadialKernel(%s, d=%d, support=%g)" % (
            self.name, self.d, self.support_radius)


def make_kernel(spec, d=1):
    """Build one of the closed-form kernel families.

    spec is a tuple: ("box", c, R) with value c on |xi| <= R, ("gaussian",
    sigma, mass) normalized so the total mass is `mass`, ("truncated", inner
    spec-or-kernel, T), or ("zero",).
    """
    if isinstance(spec, RadialKernel):
        return spec
    kind = spec[0]
    if kind == "box":
        _, c, R = spec
        if c < 0 or R <= 0:
            raise ValueError("box kernel needs c >= 0 and R > 0")
        return RadialKernel("box(%g,%g)" % (c, R),
                            lambda r, c=float(c): np.full_like(np.asarray(r, float), c),
                            R, d)
    if kind == "gaussian":
        sigma = float(spec[1])
        mass = float(spec[2]) if len(spec) > 2 else 1.0
        if sigma <= 0 or mass <= 0:
            raise ValueError("gaussian kernel needs sigma > 0 and mass > 0")
        # mass * (sigma sqrt(pi))^{-d} exp(-r^2/sigma^2) integrates to `mass` on R^d
        amp = mass / (sigma * math.sqrt(math.pi)) ** d
        return RadialKernel(
            "gaussian(%g,%g)" % (sigma, mass),
            lambda r, a=amp, s2=sigma * sigma: a * np.exp(-np.square(r) / s2),
            math.inf, d)
    if kind == "truncated":
        inner = make_kernel(spec[1], d)
        return truncate_kernel(inner, float(spec[2]))
    if kind == "zero":
        return RadialKernel("zero", lambda r: np.zeros_like(np.asarray(r, float)),
                            math.inf, d)
    raise ValueError("unknown kernel spec %r" % (kind,))


def truncate_kernel(kernel, T):
    if T <= 0:
        raise ValueError("nonpositive truncation radius")
    R = min(kernel.support_radius, T)
    return RadialKernel("truncated(%s,%g)" % (kernel.name, T), kernel._profile, R,
                        kernel.d)


def scale_kernel(kernel, c):
    if c < 0:
        raise ValueError("negative kernel scale")
    return RadialKernel("%g*%s" % (c, kernel.name),
                        lambda r, p=kernel._profile, c=c: c * np.asarray(p(r)),
                        kernel.support_radius, kernel.d)


def normalize_first_moment(kernel):
    """Rescale so that the first moment integral |xi| rho(xi) dxi equals 1."""
    m1 = kernel.moment(1, math.inf)
    if m1 <= 0:
        raise ValueError("cannot normalize a kernel with vanishing first moment")
    return scale_kernel(kernel, 1.0 / m1)


def parse_kernel_spec(text, d=1):
    """Parse config strings like "box:0.5,1", "gaussian:1", "gaussian:1,1",
    "truncated:2:gaussian:1", "zero"."""
    text = text.strip()
    if text == "zero":
        return make_kernel(("zero",), d)
    head, _, rest = text.partition(":")
    if head == "box":
        c, R = (float(v) for v in rest.split(","))
        return make_kernel(("box", c, R), d)
    if head == "gaussian":
        parts = [float(v) for v in rest.split(",")] if rest else [1.0]
        return make_kernel(("gaussian", *parts), d)
    if head == "truncated":
        T_text, _, inner = rest.partition(":")
        return truncate_kernel(parse_kernel_spec(inner, d), float(T_text))
    raise ValueError("unknown kernel spec %r" % (text,))


def parse_family_spec(text, d=1):
    """Parse an eps-indexed kernel family: "zero", "vanishing:<spec>" for
    eps * kernel, or a plain kernel spec for an eps-independent family."""
    text = text.strip()
    if text.startswith("vanishing:"):
        base = parse_kernel_spec(text[len("vanishing:"):], d)
        return lambda eps: scale_kernel(base, eps)
    fixed = parse_kernel_spec(text, d)
    return lambda eps: fixed


# ---------------------------------------------------------------------------
# quadrature

_GL_CACHE = {}


def _leggauss(n):
    try:
        return _GL_CACHE[n]
    except KeyError:
        xw = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = xw
        return xw


def _gl_panel(f, a, b, n):
    x, w = _leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, f(mid + half * x)))


def _adaptive_gl(f, a, b, tol, depth=0):
    coarse = _gl_panel(f, a, b, 20)
    fine = _gl_panel(f, a, b, 40)
    if abs(fine - coarse) <= tol * max(abs(fine), 1e-300) or depth >= 40:
        return fine
    m = 0.5 * (a + b)
    return (_adaptive_gl(f, a, m, tol, depth + 1)
            + _adaptive_gl(f, m, b, tol, depth + 1))


def _panel_series(f, B, direction, where):
    """Sum geometric panels toward 0 (direction -1: [B/2,B], [B/4,B/2], ...)
    or toward infinity (direction +1: [B,2B], [2B,4B], ...).

    Divergence test: a non-integrable endpoint keeps panels from shrinking for
    as long as we keep halving (or doubling), whereas a convergent integrand
    can sustain a growth streak only while the panels climb toward an interior
    mode -- of order log2(B / mode location) steps, well under 40 for any sane
    starting cutoff.  Forty successive panels that each fail to shrink (ratio
    >= 0.999) while still contributing more than 1% of the running total mean
    the estimate grows without bound.  Stops when two successive panels agree
    with the total to 1e-10 relative.
    """
    total = 0.0
    prev_panel = None
    non_decaying = 0
    quiet = 0
    a = B
    for _ in range(400):
        lo, hi = (a / 2.0, a) if direction < 0 else (a, 2.0 * a)
        panel = _adaptive_gl(f, lo, hi, REL_TOL)
        total += panel
        if (prev_panel is not None and abs(panel) >= 0.999 * abs(prev_panel)
                and abs(panel) > 0.01 * max(abs(total), 1e-300)):
            non_decaying += 1
            if non_decaying >= 40:
                raise MomentDivergence("moment diverges (%s)" % where)
        else:
            non_decaying = 0
        prev_panel = panel
        if abs(panel) <= REL_TOL * max(abs(total), 1e-300):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
        a = a / 2.0 if direction < 0 else 2.0 * a
        if direction < 0 and a < 1e-18:
            break
    return total


def _moment_quadrature(kernel, k, T):
    """Radial moment integral with panel doubling toward infinity and panel
    halving toward zero (so integrable endpoint singularities converge and
    non-integrable ones are detected rather than mis-summed)."""
    if k < 0 or k > 6:
        raise ValueError("moment order out of range (0..6)")
    d = kernel.d
    area = _SPHERE_AREA[d]
    upper = min(T, kernel.support_radius)
    if upper <= 0:
        return 0.0

    def f(r):
        return np.asarray(kernel._profile(r)) * r ** (k + d - 1)

    B = upper if upper != math.inf else 1.0
    total = _panel_series(f, B, -1, "order %d near 0" % k)
    if upper == math.inf:
        total += _panel_series(f, B, +1, "order %d at infinity" % k)
    return area * total


def moment(kernel, k, T=math.inf):
    """Moment integral of |xi|^k rho over B_T, cached on the kernel."""
    return kernel.moment(k, T)


# ---------------------------------------------------------------------------
# limit constants

class ConstantsReport:
    """Explicit constants of the limit functional for one kernel.

    lam  -- gradient (volume) coefficient, moment(2)/d
    mu   -- full angular-average jump coefficient, 2 H^{d-1}(S^{d-1}) moment(1)
    kappa -- sphere average of |e1 . sigma| (kernel-independent except for the
             identically-zero kernel, where every constant is reported as 0
             because the limit functional vanishes)
    surface_const(nu) -- directional constant, integral of rho(xi)|xi . nu| dxi
    """

    def __init__(self, lam, mu, kappa, surface, surface_fn):
        self.lam = lam
        self.mu = mu
        self.kappa = kappa
        self.surface = surface       # value at nu = e1
        self._surface_fn = surface_fn

    def surface_const(self, nu):
        return self._surface_fn(nu)

    def rows(self, prefix=""):
        return [(prefix + "lambda", self.lam), (prefix + "mu", self.mu),
                (prefix + "kappa", self.kappa),
                (prefix + "surface_const", self.surface)]

    def __repr__(self):
        return ("ConstantsReport(lambda=%.12g, mu=%.12g, kappa=%.12g, "
                "surface_const=%.12g)" % (self.lam, self.mu, self.kappa, self.surface))


def _kappa(d):
    if d == 1:
        # S^0 = {-1, +1} with counting measure
        return (abs(1.0) + abs(-1.0)) / 2.0
    # (1/2pi) integral over the circle of |cos theta|
    val = _adaptive_gl(lambda t: np.abs(np.cos(t)), 0.0, 2.0 * math.pi, REL_TOL)
    return val / (2.0 * math.pi)


def limit_constants(kernel, d=None):
    """Limit constants for one radial kernel; see the module docstring."""
    if d is None:
        d = kernel.d
    m2 = kernel.moment(2, math.inf)
    m1 = kernel.moment(1, math.inf)
    m0 = kernel.moment(0, math.inf)
    if m0 == 0.0 and m1 == 0.0 and m2 == 0.0:
        zero_fn = lambda nu: 0.0
        return ConstantsReport(0.0, 0.0, 0.0, 0.0, zero_fn)
    lam = m2 / d
    mu = 2.0 * _SPHERE_AREA[d] * m1
    kappa = _kappa(d)

    def surface_fn(nu):
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        if float(np.linalg.norm(nu)) == 0:
            raise ValueError("zero direction")
        if d == 1:
            return m1
        # In polar coordinates rho(|xi|)|xi . nu| (unit nu) splits into the
        # pure radial part int rho(r) r^2 dr times the angular factor
        # int_0^{2pi} |cos t| dt, independent of the direction of nu.
        rad = _bare_integral(kernel, power=2)
        ang = _adaptive_gl(lambda t: np.abs(np.cos(t)), 0.0, 2.0 * math.pi, REL_TOL)
        return rad * ang

    surface = surface_fn(np.eye(d)[0] if d == 2 else 1.0)
    return ConstantsReport(lam, mu, kappa, surface, surface_fn)


def _bare_integral(kernel, power):
    """integral over r in (0, support) of rho(r) r^power dr (no sphere factor)."""
    def f(r):
        return np.asarray(kernel._profile(r)) * r ** power

    upper = kernel.support_radius
    B = upper if upper != math.inf else 1.0
    total = _panel_series(f, B, -1, "surface integral near 0")
    if upper == math.inf:
        total += _panel_series(f, B, +1, "surface integral at infinity")
    return total


# ---------------------------------------------------------------------------
# kernel setups and admissibility

class KernelSetup:
    """The two comparison kernels plus the eps-indexed first-order and offset
    families entering the two-sided bounds

        rho1(xi) g_eps(z) <= f_eps(x, xi, z) <= rho2(xi) g_eps(z)
                                              + psi_eps(xi)|z| + eta_eps(xi).

    psi_family / eta_family map eps -> RadialKernel (the asymptotic conditions
    on them are checked on a finite eps sample only, and reported as such).
    """

    def __init__(self, rho1, rho2, psi_family=None, eta_family=None,
                 c0=0.25, r0=0.5):
        d = rho1.d
        zero = make_kernel(("zero",), d)
        self.rho1 = rho1
        self.rho2 = rho2
        self.psi_family = psi_family if psi_family is not None else (lambda eps: zero)
        self.eta_family = eta_family if eta_family is not None else (lambda eps: zero)
        self.c0 = float(c0)
        self.r0 = float(r0)
        self.d = d

    def psi(self, eps):
        return self.psi_family(eps)

    def eta(self, eps):
        return self.eta_family(eps)

    def eta_mass(self, eps):
        """L1 norm of eta_eps."""
        return self.eta(eps).moment(0, math.inf)


def default_setup(d=1):
    """box(0.5,1) comparison kernels, first-moment-normalized box psi, zero eta."""
    rho = make_kernel(("box", 0.5, 1.0), d)
    psi = normalize_first_moment(make_kernel(("box", 1.0, 1.0), d))
    return KernelSetup(rho, rho, psi_family=lambda eps: psi, c0=0.25, r0=0.5)


class AdmissibilityReport:
    def __init__(self, conditions):
        self.conditions = conditions  # list of (name, passed, evidence)
        self.passed = all(ok for _, ok, _ in conditions)

    def lines(self):
        out = []
        for name, ok, evidence in self.conditions:
            out.append("%s %-18s %s" % ("PASS" if ok else "FAIL", name, evidence))
        return out

    def __getitem__(self, name):
        for cname, ok, evidence in self.conditions:
            if cname == name:
                return ok, evidence
        raise KeyError(name)


def _limsup_sample(values):
    """Finite-sample limsup estimate along a sequence indexed by decreasing eps.

    A clean vanishing trend (monotone decay by at least 4x overall) is reported
    as 0; otherwise the max over the tail half of the sample.
    """
    v = list(values)
    if not v:
        return 0.0
    if max(v) == 0.0:
        return 0.0
    decreasing = all(b <= a * (1 + 1e-12) for a, b in zip(v, v[1:]))
    if decreasing and v[-1] <= 0.25 * v[0]:
        return 0.0
    tail = v[len(v) // 2:]
    return max(tail)


def admissibility_report(setup, eps_sequence, delta_table=(0.5, 0.1, 0.02)):
    """Check the standing kernel hypotheses on a finite eps sample.

    Conditions: finite moments 0..2 of rho1/rho2; rho1 >= c0 on |xi| <= r0;
    the psi first-moment normalization per eps (tolerance 1e-6); joint
    psi/eta tail mass below each tabulated delta at some radius r_delta; and
    bounded psi/eta masses across the sample (with the eta limsup as Lambda).
    """
    eps_sequence = list(eps_sequence)
    if any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])) or not eps_sequence:
        raise ValueError("eps sequence must be strictly decreasing and nonempty")
    conditions = []

    evid = []
    ok = True
    for name, k in (("rho1", setup.rho1), ("rho2", setup.rho2)):
        for order in (0, 1, 2):
            try:
                m = k.moment(order, math.inf)
                evid.append("%s m%d=%.6g" % (name, order, m))
            except MomentDivergence:
                ok = False
                evid.append("%s m%d=divergent" % (name, order))
    conditions.append(("finite_moments", ok, " ".join(evid)))

    r = np.linspace(0.0, setup.r0, 1001)
    vals = np.atleast_1d(setup.rho1(r))
    lo = float(vals.min())
    conditions.append(("lower_density", bool(lo >= setup.c0 - 1e-12),
                       "min rho1 on [0,r0]=%.6g vs c0=%.6g" % (lo, setup.c0)))

    try:
        worst = 0.0
        for eps in eps_sequence:
            m1 = setup.psi(eps).moment(1, math.inf)
            worst = max(worst, abs(m1 - 1.0))
        conditions.append(("psi_first_moment", bool(worst <= 1e-6),
                           "max |int |xi| psi_eps - 1| = %.3g" % worst))
    except MomentDivergence as exc:
        conditions.append(("psi_first_moment", False, str(exc)))

    # joint tail mass of |xi| psi_eps + eta_eps, limsup over the eps tail
    radii = (1.0, 2.0, 4.0, 8.0, 16.0)
    pairs = []
    tails_ok = True
    try:
        for delta in delta_table:
            found = None
            for r_delta in radii:
                tails = []
                for eps in eps_sequence:
                    psi_k, eta_k = setup.psi(eps), setup.eta(eps)
                    t = (psi_k.moment(1, math.inf) - psi_k.moment(1, r_delta)
                         + eta_k.moment(0, math.inf) - eta_k.moment(0, r_delta))
                    tails.append(max(t, 0.0))
                if _limsup_sample(tails) < delta:
                    found = r_delta
                    break
            if found is None:
                tails_ok = False
                pairs.append("delta=%g:none" % delta)
            else:
                pairs.append("delta=%g:r=%g" % (delta, found))
        conditions.append(("tail_mass", tails_ok, " ".join(pairs)))
    except MomentDivergence as exc:
        conditions.append(("tail_mass", False, str(exc)))

    try:
        psi_sup = max(setup.psi(eps).moment(0, math.inf) for eps in eps_sequence)
        conditions.append(("psi_mass_bounded", bool(math.isfinite(psi_sup)),
                           "max int psi_eps = %.6g" % psi_sup))
    except MomentDivergence as exc:
        conditions.append(("psi_mass_bounded", False, str(exc)))

    lam_eta = math.inf
    try:
        eta_masses = [setup.eta_mass(eps) for eps in eps_sequence]
        lam_eta = _limsup_sample(eta_masses)
        conditions.append(("eta_mass_bounded", bool(math.isfinite(lam_eta)),
                           "Lambda=%.6g" % lam_eta))
    except MomentDivergence as exc:
        conditions.append(("eta_mass_bounded", False, str(exc)))

    report = AdmissibilityReport(conditions)
    report.Lambda = lam_eta
    return report
