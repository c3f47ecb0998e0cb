"""Compare the compiled pair-sweep core against the numpy fallback.

Times the three hot paths (plain pair sums, gradient-accumulating sums,
and the exhaustive lattice scan) on both implementations, checks that
they agree to floating-point noise, and prints a speedup table.

    python3 benchmarks/bench_backends.py [--size 256] [--repeats 5]
"""

import argparse
import time

import numpy as np

from nlg.backend import load_backend


def _best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _offsets(span):
    out = []
    for kx in range(-span, span + 1):
        for ky in range(-span, span + 1):
            if kx or ky:
                out.append((kx, ky))
    return out


def bench_pair_sum(impl, u, nx, ny, offs, inv_eps):
    def run():
        acc = 0.0
        for kx, ky in offs:
            ax0, ax1 = max(0, -kx), min(nx, nx - kx)
            ay0, ay1 = max(0, -ky), min(ny, ny - ky)
            acc += impl.pair_sum(u, nx, ny, 1, ax0, ax1, ay0, ay1, kx, ky,
                                 inv_eps, impl.PHI_GEPS, 1.0 / 0.1, 0.0,
                                 None)
        return acc
    return run


def bench_pair_grad(impl, u, nx, ny, offs, inv_eps):
    grad = np.zeros_like(u)
    def run():
        grad[:] = 0.0
        acc = 0.0
        for kx, ky in offs:
            ax0, ax1 = max(0, -kx), min(nx, nx - kx)
            ay0, ay1 = max(0, -ky), min(ny, ny - ky)
            acc += impl.pair_sum_grad(u, grad, nx, ny, 1, ax0, ax1, ay0,
                                      ay1, kx, ky, inv_eps, impl.PHI_GEPS,
                                      1.0 / 0.1, 0.0, None, 1.0)
        return acc
    return run


def bench_scan(impl):
    rng = np.random.default_rng(7)
    n = 9
    values = rng.uniform(0.0, 1.0, n)
    free_idx = np.arange(1, 7, dtype=np.int64)
    pairs = [(i, i + 1) for i in range(n - 1)] + \
            [(i, i + 2) for i in range(n - 2)]
    pair_i = np.array([p[0] for p in pairs], dtype=np.int64)
    pair_j = np.array([p[1] for p in pairs], dtype=np.int64)
    pair_w = np.full(len(pairs), 0.05)
    pair_phi = np.full(len(pairs), impl.PHI_GEPS, dtype=np.int64)
    pair_pa = np.full(len(pairs), 10.0)
    pair_pb = np.zeros(len(pairs))
    levels = np.linspace(0.0, 1.0, 9)
    def run():
        return impl.brute_force_scan(levels, values.copy(), free_idx,
                                     pair_i, pair_j, pair_w, pair_phi,
                                     pair_pa, pair_pb, 10.0)
    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256,
                    help="grid side for the pair sweeps (default 256)")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    impls = {}
    for name in ("python", "compiled"):
        try:
            impls[name] = load_backend(name)
        except ImportError as exc:
            print("backend %r unavailable: %s" % (name, exc))
    if len(impls) < 2:
        print("only one backend importable; nothing to compare")

    nx = ny = args.size
    rng = np.random.default_rng(0)
    u = np.ascontiguousarray(rng.standard_normal((nx * ny, 1)))
    offs = _offsets(2)   # 24 offsets, |k| <= 2 box
    inv_eps = 10.0

    cases = {
        "pair_sum (%dx%d, %d offsets)" % (nx, ny, len(offs)):
            lambda impl: bench_pair_sum(impl, u, nx, ny, offs, inv_eps),
        "pair_sum_grad (same sweep)":
            lambda impl: bench_pair_grad(impl, u, nx, ny, offs, inv_eps),
        "brute_force_scan (9^6 configs)":
            lambda impl: bench_scan(impl),
    }

    width = max(len(k) for k in cases)
    header = "%-*s  %12s  %12s  %8s" % (width, "case", "python [s]",
                                        "compiled [s]", "speedup")
    print(header)
    print("-" * len(header))
    for label, make in cases.items():
        timings = {}
        results = {}
        for name, impl in impls.items():
            run = make(impl)
            results[name] = run()
            timings[name] = _best_of(args.repeats, run)
        if len(impls) == 2:
            a, b = results["python"], results["compiled"]
            # the scan returns (best, digits); digits may differ on exact
            # ties, so compare the reached minimum only
            if isinstance(a, tuple):
                a, b = a[0], b[0]
            if not np.allclose(float(a), float(b), rtol=1e-10, atol=1e-10):
                raise SystemExit("backends disagree on %s: %r vs %r"
                                 % (label, a, b))
            print("%-*s  %12.4f  %12.4f  %7.1fx"
                  % (width, label, timings["python"], timings["compiled"],
                     timings["python"] / timings["compiled"]))
        else:
            for name, t in timings.items():
                print("%-*s  %s %12.4f" % (width, label, name, t))


if __name__ == "__main__":
    main()
