"""Non-local free-discontinuity energies on grids.

The package discretizes double-integral energies of the form

    F_eps(u, U) = int_U int f_eps(x, xi, (u(x + eps xi) - u(x)) / eps)

for fields u on rectangular grids, evaluates the comparison functionals
built from a pair of radial kernels, minimizes under Dirichlet-type
boundary data with a graduated-non-convexity descent, and estimates the
bulk/surface densities of the small-eps limit by shrinking-cell
extrapolation.

Layers, bottom up: `kernels` (radial kernels, moments, limit constants),
`integrands` (pointwise densities and sampled inequality checks), `grid`
(domains, fields, offset quadrature, test functions, PGM IO), `energy`
(pair sums, breakdowns, truncation and interpolation bounds), `minimize`
(descent, Dirichlet instances, enumeration oracle), `cells` (density
extrapolation), `cli` + `config` (the `nlg` experiment runner).
"""

from nlg.backend import BACKEND, load_backend
from nlg.cells import (CellEstimate, Sweep, estimate_f_bulk, estimate_f_surf,
                       extrapolate_triplet)
from nlg.config import ConfigError, ExperimentConfig, parse_config
from nlg.energy import (characteristic_energies, energy_total,
                        interpolation_check, local_nonlocal_ratio,
                        reference_energies, tail_gap)
from nlg.grid import (Field, GridDomain, affine_testfn, constant_field,
                      load_pgm, make_grid, offset_set, sample_testfn,
                      save_pgm, staircase_testfn, step_testfn)
from nlg.integrands import (DEFAULT_SEED, SampleSpec, arctan_family,
                            composite_family, g_eps, make_family,
                            monotonicity_check, nonnegativity_check,
                            periodic_family, reference_family, rng_for,
                            sandwich_check)
from nlg.kernels import (KernelSetup, admissibility_report, default_setup,
                         limit_constants, make_kernel)
from nlg.minimize import (DirichletSpec, MinResult, brute_force_tiny,
                          dirichlet_minimum, minimize_gnc, quantization_gap)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "load_backend",
    "CellEstimate", "Sweep", "estimate_f_bulk", "estimate_f_surf",
    "extrapolate_triplet",
    "ConfigError", "ExperimentConfig", "parse_config",
    "characteristic_energies", "energy_total", "interpolation_check",
    "local_nonlocal_ratio", "reference_energies", "tail_gap",
    "Field", "GridDomain", "affine_testfn", "constant_field", "load_pgm",
    "make_grid", "offset_set", "sample_testfn", "save_pgm",
    "staircase_testfn", "step_testfn",
    "DEFAULT_SEED", "SampleSpec", "arctan_family", "composite_family",
    "g_eps", "make_family", "monotonicity_check", "nonnegativity_check",
    "periodic_family", "reference_family", "rng_for", "sandwich_check",
    "KernelSetup", "admissibility_report", "default_setup",
    "limit_constants", "make_kernel",
    "DirichletSpec", "MinResult", "brute_force_tiny", "dirichlet_minimum",
    "minimize_gnc", "quantization_gap",
    "__version__",
]
