"""Select the pair-sweep implementation at import time.

The compiled extension (`nlg._pair_core`, Cython) is preferred; the pure
numpy module (`nlg._pair_numpy`) is the fallback.  Set NLG_BACKEND=python
to force the fallback, NLG_BACKEND=compiled to require the extension
(raising if it is missing).  Both expose the same functions and agree to
floating-point noise; tests cross-check them whenever both are importable.
"""

import os

_choice = os.environ.get("NLG_BACKEND", "").strip().lower()

if _choice not in ("", "python", "compiled"):
    raise ValueError("NLG_BACKEND must be 'python' or 'compiled', got %r" % _choice)

if _choice == "python":
    from nlg import _pair_numpy as _impl
elif _choice == "compiled":
    from nlg import _pair_core as _impl
else:
    try:
        from nlg import _pair_core as _impl
    except ImportError:
        from nlg import _pair_numpy as _impl

BACKEND = _impl.BACKEND

PHI_GEPS = _impl.PHI_GEPS
PHI_SURR = _impl.PHI_SURR
PHI_ABS = _impl.PHI_ABS
PHI_CONST = _impl.PHI_CONST
PHI_ATAN = _impl.PHI_ATAN

pair_sum = _impl.pair_sum
pair_sum_grad = _impl.pair_sum_grad
pair_sum_ref = _impl.pair_sum_ref
brute_force_scan = _impl.brute_force_scan


def load_backend(name):
    """Import a specific implementation module by name ('python' or
    'compiled'); used by tests and the benchmark for side-by-side runs."""
    if name == "python":
        from nlg import _pair_numpy
        return _pair_numpy
    if name == "compiled":
        from nlg import _pair_core
        return _pair_core
    raise ValueError("unknown backend %r" % (name,))
