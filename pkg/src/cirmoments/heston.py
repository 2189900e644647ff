"""Moment stability of the Heston stochastic volatility model.

Raw moments ``E[S_T^omega]`` of the Heston price reduce, by conditioning
on the variance driver, to the exponential functional of the variance
process with coefficients

    lam = omega*(omega - 1)/2 - (omega*rho)**2 / 2,   mu = omega*rho,

so their explosion times and scheme bounds come straight from
:mod:`cirmoments.explosion`.  Notably ``delta = omega*(omega - 1)/2``
independent of the correlation, which is why the first moment never
explodes while higher moments can.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import CirParams, FunctionalCoeffs
from .explosion import ExplosionTime, exact_explosion_time
from .montecarlo import (
    McConfig,
    McEstimate,
    _acc_from_exponents,
    _chunk_rng,
    _finalize,
    _run_chunked,
)
from .schemes import GridSpec, SchemeKind, initial_raw, interpolant_values, step_values

__all__ = [
    "HestonParams",
    "moment_coeffs",
    "heston_explosion_time",
    "critical_correlation",
    "estimate_heston_moment",
]


@dataclass(frozen=True)
class HestonParams:
    """Heston model: price with rate ``r`` and a square-root variance.

    ``rho`` is the correlation between the price and variance drivers;
    the degenerate values +-1 are admitted (single-factor case).
    """

    s0: float
    r: float
    v: CirParams
    rho: float

    def __post_init__(self):
        if not self.s0 > 0.0:
            raise ValueError(f"s0 must be strictly positive, got {self.s0}")
        if self.r < 0.0:
            raise ValueError(f"r must be nonnegative, got {self.r}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")


def moment_coeffs(omega: float, rho: float) -> FunctionalCoeffs:
    """Functional coefficients of the conditional moment of order ``omega``."""
    return FunctionalCoeffs(
        lam=0.5 * omega * (omega - 1.0) - 0.5 * omega * omega * rho * rho,
        mu=omega * rho,
    )


def heston_explosion_time(h: HestonParams, omega: float) -> ExplosionTime:
    """First time after which ``E[S_T^omega]`` is infinite.

    The deterministic prefactor ``S0^omega * exp(omega*r*T)`` never affects
    finiteness, so this is the functional's critical time.
    """
    return exact_explosion_time(h.v, moment_coeffs(omega, h.rho))


def critical_correlation(h: HestonParams, omega: float) -> float:
    """Largest correlation for which the order-``omega`` moment never explodes.

    Solves the non-explosion boundary ``kappa >= xi*(omega*rho +
    sqrt(omega*(omega-1)))`` for ``rho``.  The returned value may fall
    outside ``[-1, 1]``, meaning every (respectively no) admissible
    correlation explodes; callers wanting a correlation should clamp.
    """
    if not omega > 1.0:
        raise ValueError(f"critical correlation requires omega > 1, got {omega}")
    return (h.v.kappa / h.v.xi - math.sqrt(omega * (omega - 1.0))) / omega


def _joint_estimate(
    h: HestonParams,
    omega: float,
    kind: SchemeKind,
    grid: GridSpec,
    cfg: McConfig,
    threads: int,
) -> McEstimate:
    # price driver decomposed as rho*W_v + sqrt(1-rho^2)*W_perp; the log
    # price is accumulated and exponentiated once at T
    if cfg.antithetic:
        raise ValueError("antithetic variates are not implemented for the joint estimator")
    p = h.v
    dt = grid.dt
    sqrt_dt = math.sqrt(dt)
    rho = h.rho
    rho_perp = math.sqrt(max(0.0, 1.0 - rho * rho))
    start = initial_raw(kind, p)
    log_s0 = math.log(h.s0)

    def chunk_fn(chunk_index: int, n: int):
        rng = _chunk_rng(cfg.seed, chunk_index)
        raw = np.full(n, start)
        log_s = np.full(n, log_s0)
        for _ in range(grid.steps):
            dw_v = rng.standard_normal(n) * sqrt_dt
            dw_perp = rng.standard_normal(n) * sqrt_dt
            ybar = interpolant_values(kind, raw)
            log_s += (h.r - 0.5 * ybar) * dt + np.sqrt(ybar) * (rho * dw_v + rho_perp * dw_perp)
            raw = step_values(kind, p, raw, dt, dw_v)
        return [_acc_from_exponents(omega * log_s)]

    totals = _run_chunked(chunk_fn, cfg, threads, 1)
    return _finalize(totals[0], cfg.paths)


def estimate_heston_moment(
    h: HestonParams,
    omega: float,
    kind: SchemeKind,
    grid: GridSpec,
    cfg: McConfig,
    threads: int = 1,
    estimator: str = "conditional",
) -> McEstimate:
    """Monte Carlo estimate of ``E[S_T^omega]`` under a variance scheme.

    The default ``"conditional"`` estimator simulates only the variance
    path and its driving increments and multiplies the functional estimate
    by the deterministic prefactor; it halves the random numbers and has no
    price-equation discretization error.  The ``"joint"`` estimator
    simulates the log price alongside the variance and raises ``S_T`` to
    ``omega``; both report standard errors and saturation diagnostics.
    """
    if estimator == "joint":
        return _joint_estimate(h, omega, kind, grid, cfg, threads)
    if estimator != "conditional":
        raise ValueError(f"unknown estimator {estimator!r}, expected 'conditional' or 'joint'")
    from .montecarlo import estimate_exp_functional

    f = moment_coeffs(omega, h.rho)
    base = estimate_exp_functional(kind, h.v, f, grid, cfg, threads=threads)

    def prefactor(t: float) -> float:
        return h.s0**omega * math.exp(omega * h.r * t)

    scaled = base.scaled(prefactor(grid.T))
    if base.curve is not None:
        scaled = replace(
            scaled,
            curve=tuple((t, est.scaled(prefactor(t))) for t, est in base.curve),
        )
    return scaled
