"""Cell-centered box grids, lattice offset quadratures, and test functions.

Everything downstream leans on one structural choice: eps is an integer
multiple q*h of the spacing, and the xi-nodes live on the lattice (h/eps)Z^d,
so x + eps*xi is always again a node and increments are formed without
interpolation.  Subdomain masks are axis-aligned boxes of whole cells, which
makes their discrete measure (#nodes * h^d) exactly the continuum measure.

Flat node order: index = ix*ny + iy (d=1 has ny=1).
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

_TOL = 1e-9


def _axes_box(box, d):
    """Normalize box input: (0,1) in d=1 or ((0,1),(0,2)) in general."""
    box = tuple(box)
    if d == 1 and len(box) == 2 and np.isscalar(box[0]):
        box = (box,)
    if len(box) != d:
        raise ValueError("box %r does not match d=%d" % (box, d))
    out = []
    for a, b in box:
        a, b = float(a), float(b)
        if not b > a:
            raise ValueError("degenerate box side (%g, %g)" % (a, b))
        out.append((a, b))
    return tuple(out)


def _int_div(length, h, what):
    q = length / h
    qi = round(q)
    if abs(q - qi) > _TOL * max(1.0, abs(q)) or qi < 1:
        raise ValueError("%s: %g is not an integer multiple of %g" % (what, length, h))
    return int(qi)


class GridDomain:
    """Cell-centered grid on a box, with named axis-aligned box masks."""

    def __init__(self, box, h, d):
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        self.d = d
        self.h = float(h)
        if self.h <= 0:
            raise ValueError("spacing must be positive")
        self.box = _axes_box(box, d)
        self.shape = tuple(_int_div(b - a, self.h, "box side") for a, b in self.box)
        self.nx = self.shape[0]
        self.ny = self.shape[1] if d == 2 else 1
        self.n_nodes = self.nx * self.ny
        # masks: name -> index ranges ((ix0, ix1), (iy0, iy1)), half-open
        self.masks = {"all": tuple((0, n) for n in self.shape)}

    def axis_nodes(self, axis):
        a, _ = self.box[axis]
        n = self.shape[axis]
        return a + (np.arange(n) + 0.5) * self.h

    def nodes(self, mask="all"):
        """Coordinates of the mask's nodes in flat order, shape (count, d)."""
        rng = self.masks[mask]
        axes = [self.axis_nodes(ax)[rng[ax][0]:rng[ax][1]]
                for ax in range(self.d)]
        if self.d == 1:
            return axes[0].reshape(-1, 1)
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def add_box_mask(self, name, box):
        """Register a cell-aligned sub-box as a named mask."""
        sub = _axes_box(box, self.d)
        rng = []
        for ax, (a, b) in enumerate(sub):
            a0, b0 = self.box[ax]
            if a < a0 - _TOL or b > b0 + _TOL:
                raise ValueError("mask box exceeds the domain on axis %d" % ax)
            i0 = _int_div(a - a0, self.h, "mask offset") if a > a0 + _TOL else 0
            i1 = i0 + _int_div(b - a, self.h, "mask side")
            rng.append((i0, i1))
        self.masks[name] = tuple(rng)
        return name

    def mask_rect(self, mask):
        """Index ranges (ix0, ix1, iy0, iy1) of a mask (iy fixed to (0,1) in d=1)."""
        rng = self.masks[mask]
        if self.d == 1:
            return rng[0][0], rng[0][1], 0, 1
        return rng[0][0], rng[0][1], rng[1][0], rng[1][1]

    def mask_box(self, mask):
        rng = self.masks[mask]
        return tuple((self.box[ax][0] + rng[ax][0] * self.h,
                      self.box[ax][0] + rng[ax][1] * self.h)
                     for ax in range(self.d))

    def mask_count(self, mask):
        rng = self.masks[mask]
        n = 1
        for i0, i1 in rng:
            n *= (i1 - i0)
        return n

    def mask_measure(self, mask):
        return self.mask_count(mask) * self.h ** self.d

    def mask_flat_indices(self, mask):
        rng = self.masks[mask]
        ix = np.arange(rng[0][0], rng[0][1])
        if self.d == 1:
            return ix
        iy = np.arange(rng[1][0], rng[1][1])
        return (ix[:, None] * self.ny + iy[None, :]).ravel()

    def check_eps(self, eps):
        """eps must be a positive integer multiple of h; returns the factor."""
        return _int_div(eps, self.h, "eps")

    def boundary_distance(self, mask="all"):
        """Distance of each mask node to the complement of the mask box
        (i.e. to the nearest face), flat order over the mask."""
        box = self.mask_box(mask)
        pts = self.nodes(mask)
        d = np.full(len(pts), np.inf)
        for ax, (a, b) in enumerate(box):
            d = np.minimum(d, pts[:, ax] - a)
            d = np.minimum(d, b - pts[:, ax])
        return d


def make_grid(box, h, d=1):
    return GridDomain(box, h, d)


@dataclass
class Field:
    domain: GridDomain
    values: np.ndarray   # (n_nodes, m) float64 C-contiguous

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.shape[0] != self.domain.n_nodes:
            raise ValueError("value count %d != node count %d"
                             % (v.shape[0], self.domain.n_nodes))
        if v.shape[1] not in (1, 2, 3):
            raise ValueError("m must be 1, 2 or 3")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite entries")
        self.values = v

    @property
    def m(self):
        return self.values.shape[1]

    def copy(self):
        return Field(self.domain, self.values.copy())

    def sup_norm(self):
        return float(np.max(np.sqrt(np.sum(self.values ** 2, axis=1))))


def constant_field(domain, value=0.0, m=1):
    vals = np.broadcast_to(np.asarray(value, dtype=float).reshape(1, -1),
                           (domain.n_nodes, m)).copy()
    return Field(domain, vals)


# ---------------------------------------------------------------------------
# offset quadrature for the xi-integral

@dataclass
class Offset:
    k: tuple          # lattice offset, integers
    xi: np.ndarray    # k * h / eps
    w: float          # quadrature weight


class OffsetSet:
    """Lattice nodes xi_k = k h/eps with |xi| <= T and trapezoid-style
    weights: (h/eps)^d inside, half on the shell within one step of T.
    Sorted by |k| then lexicographic so sums are reproducible."""

    def __init__(self, offsets, eps, h, T):
        self.offsets = offsets
        self.eps = eps
        self.h = h
        self.T = T

    def __iter__(self):
        return iter(self.offsets)

    def __len__(self):
        return len(self.offsets)

    def total_weight(self):
        return math.fsum(o.w for o in self.offsets)


def offset_set(eps, h, T, d=1):
    if T <= 0:
        raise ValueError("T must be positive")
    q = _int_div(eps, h, "eps")
    step = 1.0 / q
    kmax = int(math.floor(T * q + _TOL))
    offsets = []
    if d == 1:
        candidates = [(k,) for k in range(-kmax, kmax + 1)]
    else:
        candidates = [(kx, ky) for kx in range(-kmax, kmax + 1)
                      for ky in range(-kmax, kmax + 1)]
    for k in candidates:
        r = math.hypot(*k) * step
        if r > T + _TOL:
            continue
        w = step ** d
        if r > T - step + _TOL:
            w *= 0.5
        offsets.append(Offset(k, np.array(k, dtype=float) * step, w))
    offsets.sort(key=lambda o: (math.hypot(*o.k), o.k))
    return OffsetSet(offsets, eps, h, T)


def pair_rect(domain, mask, k):
    """Base-node index rectangle for offset k: positions i such that i and
    i+k both lie in the mask.  Returned as (ax0, ax1, ay0, ay1) in absolute
    node indices (empty ranges possible)."""
    x0, x1, y0, y1 = domain.mask_rect(mask)
    kx = k[0]
    ky = k[1] if domain.d == 2 else 0
    ax0, ax1 = max(x0, x0 - kx), min(x1, x1 - kx)
    ay0, ay1 = max(y0, y0 - ky), min(y1, y1 - ky)
    return ax0, max(ax0, ax1), ay0, max(ay0, ay1)


def shifted_pairs(domain, mask, k):
    """All flat index pairs (i, i + k) with both nodes in the mask."""
    ax0, ax1, ay0, ay1 = pair_rect(domain, mask, k)
    kx = k[0]
    ky = k[1] if domain.d == 2 else 0
    ix = np.arange(ax0, ax1)
    iy = np.arange(ay0, ay1)
    if ix.size == 0 or iy.size == 0:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    base = (ix[:, None] * domain.ny + iy[None, :]).ravel()
    shifted = ((ix[:, None] + kx) * domain.ny + (iy[None, :] + ky)).ravel()
    return base, shifted


# ---------------------------------------------------------------------------
# piecewise-affine test functions

@dataclass
class Jump:
    x0: np.ndarray    # a point on the interface
    nu: np.ndarray    # unit normal
    zeta: np.ndarray  # jump vector, components in R^m
    measure: float    # H^{d-1} measure of the interface inside the box


@dataclass
class Piece:
    """Affine map y -> a + L y on a slab {lo <= y_axis < hi} (None = open end).
    closed_lo/closed_hi pick which side keeps the tie; the step construction
    puts interface nodes on the '>= 0' side of the normal."""
    a: np.ndarray        # (m,)
    L: np.ndarray        # (m, d)
    axis: int = 0
    lo: float = None
    hi: float = None
    closed_lo: bool = True
    closed_hi: bool = False

    def contains(self, pts):
        t = pts[:, self.axis]
        ok = np.ones(len(pts), dtype=bool)
        if self.lo is not None:
            ok &= (t >= self.lo) if self.closed_lo else (t > self.lo)
        if self.hi is not None:
            ok &= (t <= self.hi) if self.closed_hi else (t < self.hi)
        return ok

    def apply(self, pts):
        return self.a[None, :] + pts @ self.L.T


@dataclass
class TestFunction:
    d: int
    m: int
    pieces: list
    jumps: list = field(default_factory=list)

    def value(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.d)
        out = np.full((len(pts), self.m), np.nan)
        todo = np.ones(len(pts), dtype=bool)
        for p in self.pieces:
            sel = todo & p.contains(pts)
            if np.any(sel):
                out[sel] = p.apply(pts[sel])
            todo &= ~sel
        if np.any(todo):
            raise ValueError("%d points not covered by any piece" % int(todo.sum()))
        return out

    def piece_measures(self, box):
        """Lebesgue measure of each piece's slab inside the given box."""
        box = _axes_box(box, self.d)
        out = []
        for p in self.pieces:
            vol = 1.0
            for ax, (a, b) in enumerate(box):
                if ax == p.axis:
                    lo = a if p.lo is None else max(a, p.lo)
                    hi = b if p.hi is None else min(b, p.hi)
                    vol *= max(0.0, hi - lo)
                else:
                    vol *= (b - a)
            out.append(vol)
        return out


def _vec(v, n):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 1 and n > 1:
        v = np.full(n, v[0])
    if v.size != n:
        raise ValueError("expected length-%d vector, got %r" % (n, v))
    return v


def affine_testfn(L, a=0.0, d=1, m=1):
    L = np.asarray(L, dtype=float).reshape(m, d)
    return TestFunction(d, m, [Piece(_vec(a, m), L)])


def step_testfn(x0, zeta, d=1, m=1, axis=0, sign=1, box=None, base_L=None):
    """u(y) = base(y) + (zeta if (y - x0).nu >= 0 else 0), nu = sign*e_axis.

    The interface measure is 1 in d=1 and the orthogonal side length of
    `box` in d=2 (box required there)."""
    zeta = _vec(zeta, m)
    L = (np.zeros((m, d)) if base_L is None
         else np.asarray(base_L, dtype=float).reshape(m, d))
    x0 = float(x0)
    if sign not in (-1, 1):
        raise ValueError("sign must be +-1")
    if d == 1:
        measure = 1.0
    else:
        if box is None:
            raise ValueError("d=2 step needs the box to record the interface measure")
        b = _axes_box(box, d)
        other = 1 - axis
        measure = b[other][1] - b[other][0]
    if sign > 0:
        hi_piece = Piece(zeta, L, axis, lo=x0, hi=None, closed_lo=True)
        lo_piece = Piece(np.zeros(m), L, axis, lo=None, hi=x0, closed_hi=False)
    else:
        hi_piece = Piece(np.zeros(m), L, axis, lo=x0, hi=None, closed_lo=False)
        lo_piece = Piece(zeta, L, axis, lo=None, hi=x0, closed_hi=True)
    pt = np.zeros(d)
    pt[axis] = x0
    nu = np.zeros(d)
    nu[axis] = float(sign)
    # the trace on the nu side is zeta, on the other side 0
    jump = Jump(pt, nu, zeta, measure)
    return TestFunction(d, m, [hi_piece, lo_piece], [jump])


def staircase_testfn(breaks, levels, d=1, m=1, axis=0, box=None):
    """Piecewise constant: levels[i] on [breaks[i-1], breaks[i]) with
    jump metadata at every break."""
    if len(levels) != len(breaks) + 1:
        raise ValueError("need one more level than breaks")
    breaks = [float(b) for b in breaks]
    if sorted(breaks) != breaks:
        raise ValueError("breaks must be increasing")
    pieces = []
    edges = [None] + breaks + [None]
    for i, lev in enumerate(levels):
        pieces.append(Piece(_vec(lev, m), np.zeros((m, d)), axis,
                            lo=edges[i], hi=edges[i + 1]))
    jumps = []
    for i, b in enumerate(breaks):
        if d == 1:
            measure = 1.0
        else:
            bb = _axes_box(box, d)
            other = 1 - axis
            measure = bb[other][1] - bb[other][0]
        pt = np.zeros(d)
        pt[axis] = b
        nu = np.zeros(d)
        nu[axis] = 1.0
        zeta = _vec(levels[i + 1], m) - _vec(levels[i], m)
        jumps.append(Jump(pt, nu, zeta, measure))
    return TestFunction(d, m, pieces, jumps)


def sample_testfn(tf, domain):
    """Nodal evaluation of a test function over the whole domain."""
    if tf.d != domain.d:
        raise ValueError("dimension mismatch")
    vals = tf.value(domain.nodes("all"))
    return Field(domain, vals)


def truncate_field(u, M):
    if M <= 0:
        raise ValueError("truncation level must be positive")
    return Field(u.domain, np.clip(u.values, -M, M))


def glue_fields(u, v, cutoff):
    """w = phi*u + (1-phi)*v nodally, phi a scalar field with values in [0,1]."""
    if u.domain is not v.domain and u.domain.shape != v.domain.shape:
        raise ValueError("domain mismatch")
    if u.values.shape != v.values.shape:
        raise ValueError("component mismatch")
    phi = cutoff.values if isinstance(cutoff, Field) else np.asarray(cutoff, dtype=float)
    phi = phi.reshape(-1, 1)
    if phi.shape[0] != u.domain.n_nodes:
        raise ValueError("cutoff size mismatch")
    if phi.min() < -_TOL or phi.max() > 1 + _TOL:
        raise ValueError("cutoff must take values in [0, 1]")
    return Field(u.domain, phi * u.values + (1.0 - phi) * v.values)


def extend_reflect(u, pad, mask="all"):
    """Mirror the mask-box restriction of u across each face (corners by
    double reflection); returns a field on the enlarged box."""
    pad = int(pad)
    if pad < 0:
        raise ValueError("pad must be nonnegative")
    dom = u.domain
    x0, x1, y0, y1 = dom.mask_rect(mask)
    nx, ny = x1 - x0, y1 - y0
    if pad > nx or (dom.d == 2 and pad > ny):
        raise ValueError("pad %d exceeds a side (single reflection only)" % pad)
    m = u.m
    if dom.d == 1:
        block = u.values[x0:x1].reshape(nx, m)
        ext = np.pad(block, ((pad, pad), (0, 0)), mode="symmetric")
    else:
        block = u.values.reshape(dom.nx, dom.ny, m)[x0:x1, y0:y1]
        ext = np.pad(block, ((pad, pad), (pad, pad), (0, 0)), mode="symmetric")
    mbox = dom.mask_box(mask)
    grown = tuple((a - pad * dom.h, b + pad * dom.h) for a, b in mbox)
    big = GridDomain(grown, dom.h, dom.d)
    return Field(big, ext.reshape(-1, m))


# ---------------------------------------------------------------------------
# serialization

def save_field_csv(u, path):
    dom = u.domain
    pts = dom.nodes("all")
    cols = ["x", "y"][:dom.d] + ["u%d" % (j + 1) for j in range(u.m)]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for p, v in zip(pts, u.values):
            fh.write(",".join(repr(float(c)) for c in p) + ","
                     + ",".join(repr(float(c)) for c in v) + "\n")


def load_field_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [list(map(float, line.strip().split(",")))
                for line in fh if line.strip()]
    d = 2 if header[1] == "y" else 1
    m = len(header) - d
    data = np.asarray(rows)
    pts, vals = data[:, :d], data[:, d:]
    xs = np.unique(pts[:, 0])
    h = xs[1] - xs[0] if len(xs) > 1 else 1.0
    box = []
    for ax in range(d):
        c = np.unique(pts[:, ax])
        box.append((c[0] - h / 2, c[-1] + h / 2))
    dom = GridDomain(tuple(box) if d == 2 else box[0], h, d)
    order = np.lexsort(tuple(pts[:, ax] for ax in reversed(range(d))))
    return Field(dom, vals[order].reshape(-1, m))


def save_pgm(u, path, binary=False):
    """d=2, m=1 field to PGM, maxval 255, rows = first axis.  The linear
    rescale used is recorded next to the image in `<path>.meta`."""
    dom = u.domain
    if dom.d != 2 or u.m != 1:
        raise ValueError("PGM export needs d=2, m=1")
    img = u.values.reshape(dom.nx, dom.ny)
    vmin, vmax = float(img.min()), float(img.max())
    scale = (vmax - vmin) if vmax > vmin else 1.0
    pix = np.round((img - vmin) / scale * 255.0).astype(np.uint8)
    if binary:
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (dom.ny, dom.nx))
            fh.write(pix.tobytes())
    else:
        with open(path, "w") as fh:
            fh.write("P2\n%d %d\n255\n" % (dom.ny, dom.nx))
            for row in pix:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
    with open(path + ".meta", "w") as fh:
        fh.write("vmin=%r\nvmax=%r\nh=%r\nx0=%r\ny0=%r\n"
                 % (vmin, vmax, dom.h, dom.box[0][0], dom.box[1][0]))


def load_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise ValueError("not a PGM file")
    binary = data[:2] == b"P5"
    # header tokens: magic, width, height, maxval (comments stripped)
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    width, height, maxval = tokens
    pos += 1
    if binary:
        pix = np.frombuffer(data, dtype=np.uint8, count=width * height,
                            offset=pos).astype(float)
    else:
        pix = np.array(data[pos:].split(), dtype=float)[:width * height]
    pix = pix.reshape(height, width) / maxval
    vmin, vmax, h, x0, y0 = 0.0, 1.0, 1.0 / max(width, height), 0.0, 0.0
    meta = path + ".meta"
    if os.path.exists(meta):
        kv = {}
        with open(meta) as fh:
            for line in fh:
                if "=" in line:
                    key, val = line.strip().split("=", 1)
                    kv[key] = float(val)
        vmin = kv.get("vmin", vmin)
        vmax = kv.get("vmax", vmax)
        h = kv.get("h", h)
        x0 = kv.get("x0", x0)
        y0 = kv.get("y0", y0)
    vals = vmin + (vmax - vmin) * pix
    dom = GridDomain(((x0, x0 + height * h), (y0, y0 + width * h)), h, 2)
    return Field(dom, vals.reshape(-1, 1))
