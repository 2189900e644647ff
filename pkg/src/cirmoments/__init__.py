"""Explosion times and exponential-moment stability of Euler schemes for the
square-root (CIR) diffusion.

The package computes, in closed form, the critical time at which the first
moment of ``exp(lam * int y dt + mu * int sqrt(y) dW)`` explodes for the
exact process, together with proven lower bounds on that time for six
Euler-type discretizations; validates them against a Riccati-ODE oracle
and a reproducible parallel Monte Carlo engine; and applies the machinery
to raw-moment stability in the Heston model.
"""

from .core import (
    CirParams,
    FunctionalCoeffs,
    SqrtCoeffs,
    cir_conditional_mean,
    cir_conditional_variance,
    sample_exact_transition,
    sqrt_coeffs,
)
from .explosion import (
    BlowUpError,
    EtaFamily,
    EtaInterval,
    ExplosionTime,
    RiccatiCoeffs,
    RiccatiSolution,
    SupremumLocation,
    eta_family_for_scheme,
    eta_feasible,
    exact_explosion_time,
    max_stable_step,
    moment_upper_bound,
    riccati_blowup_time,
    riccati_coeffs,
    scheme_explosion_bound,
    select_eta,
    semi_analytic_functional,
    solve_riccati,
    supremum_location,
)
from .heston import (
    HestonParams,
    critical_correlation,
    estimate_heston_moment,
    heston_explosion_time,
    moment_coeffs,
)
from .montecarlo import (
    LOG_OVERFLOW,
    McConfig,
    McEstimate,
    estimate_exact_functional,
    estimate_exp_functional,
)
from .schemes import (
    GridSpec,
    PathRecord,
    SchemeKind,
    SchemeState,
    initial_state,
    interpolant,
    interpolant_values,
    simulate_path,
    step,
    step_values,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BlowUpError",
    "CirParams",
    "EtaFamily",
    "EtaInterval",
    "ExplosionTime",
    "FunctionalCoeffs",
    "GridSpec",
    "HestonParams",
    "LOG_OVERFLOW",
    "McConfig",
    "McEstimate",
    "PathRecord",
    "RiccatiCoeffs",
    "RiccatiSolution",
    "SchemeKind",
    "SchemeState",
    "SqrtCoeffs",
    "SupremumLocation",
    "cir_conditional_mean",
    "cir_conditional_variance",
    "critical_correlation",
    "estimate_exact_functional",
    "estimate_exp_functional",
    "estimate_heston_moment",
    "eta_family_for_scheme",
    "eta_feasible",
    "exact_explosion_time",
    "heston_explosion_time",
    "initial_state",
    "interpolant",
    "interpolant_values",
    "max_stable_step",
    "moment_coeffs",
    "moment_upper_bound",
    "riccati_blowup_time",
    "riccati_coeffs",
    "sample_exact_transition",
    "scheme_explosion_bound",
    "select_eta",
    "semi_analytic_functional",
    "simulate_path",
    "solve_riccati",
    "sqrt_coeffs",
    "step",
    "step_values",
    "supremum_location",
]
