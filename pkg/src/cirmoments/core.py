"""Parameter types and the exact transition law of the square-root diffusion.

The model is the mean-reverting square-root (CIR) process

    dy_t = kappa * (theta - y_t) dt + xi * sqrt(y_t) dW_t,

with all four parameters strictly positive.  The conditional law of
``y_{t+dt}`` given ``y_t`` is a scaled noncentral chi-squared distribution,
so increments can be sampled without discretization error; that sampler is
the ground-truth reference against which the Euler-type schemes in
:mod:`cirmoments.schemes` are judged.

The exponential functional studied throughout the package is

    exp( lam * int_0^t y_u du + mu * int_0^t sqrt(y_u) dW_u ),

and the single scalar ``delta = lam + mu**2 / 2`` decides whether its first
moment can blow up in finite time (``delta > 0``) or stays bounded by one
(``delta <= 0``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CirParams",
    "FunctionalCoeffs",
    "SqrtCoeffs",
    "sqrt_coeffs",
    "cir_conditional_mean",
    "cir_conditional_variance",
    "sample_exact_transition",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class CirParams:
    """Coefficients of the square-root diffusion.

    Attributes
    ----------
    kappa : float
        Mean-reversion rate (1/time), > 0.
    theta : float
        Long-run level, > 0.
    xi : float
        Volatility-of-volatility, > 0.
    y0 : float
        Initial value, > 0.
    """

    kappa: float
    theta: float
    xi: float
    y0: float

    def __post_init__(self):
        for name in ("kappa", "theta", "xi", "y0"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")

    @property
    def feller(self) -> bool:
        """True when ``2*kappa*theta > xi**2`` (origin unattainable)."""
        return 2.0 * self.kappa * self.theta > self.xi * self.xi


@dataclass(frozen=True)
class FunctionalCoeffs:
    """Exponent coefficients of the exponential functional.

    ``lam`` multiplies the time integral of the process, ``mu`` the
    stochastic integral of its square root.  ``delta`` is always recomputed
    from the pair so it can never drift out of sync.
    """

    lam: float
    mu: float

    @property
    def delta(self) -> float:
        return self.lam + 0.5 * self.mu * self.mu


@dataclass(frozen=True)
class SqrtCoeffs:
    """Drift/diffusion coefficients of ``x = sqrt(y)``.

    ``dx = (alpha/x + beta*x) dt + gamma dW`` with ``beta < 0 < gamma``
    always, and ``alpha > 0`` exactly when the Feller condition holds.
    """

    alpha: float
    beta: float
    gamma: float


def sqrt_coeffs(p: CirParams) -> SqrtCoeffs:
    """Ito coefficients of the square-root transform of the process."""
    return SqrtCoeffs(
        alpha=(4.0 * p.kappa * p.theta - p.xi * p.xi) / 8.0,
        beta=-0.5 * p.kappa,
        gamma=0.5 * p.xi,
    )


def cir_conditional_mean(p: CirParams, y, dt: float):
    """``E[y_{t+dt} | y_t = y]`` in closed form."""
    decay = np.exp(-p.kappa * dt)
    return p.theta + (y - p.theta) * decay


def cir_conditional_variance(p: CirParams, y, dt: float):
    """``Var[y_{t+dt} | y_t = y]`` in closed form."""
    decay = np.exp(-p.kappa * dt)
    xi2_k = p.xi * p.xi / p.kappa
    return y * xi2_k * decay * (1.0 - decay) + 0.5 * p.theta * xi2_k * (1.0 - decay) ** 2


def sample_exact_transition(p: CirParams, y, dt: float, rng: np.random.Generator):
    """Draw from the exact transition law over ``dt`` started at ``y``.

    The conditional distribution is a scaled noncentral chi-squared with
    (generally non-integer) degrees of freedom ``4*kappa*theta/xi**2``.  It
    is sampled as a Poisson mixture of gamma variates, which is exact for
    every parameter regime and does not need the Feller condition.

    Parameters
    ----------
    y : float or ndarray
        Current state(s), >= 0.
    dt : float
        Time step, > 0.
    rng : numpy.random.Generator
        Source of randomness; one Poisson and one gamma draw per state.

    Returns
    -------
    float or ndarray of the same shape as ``y``, strictly positive.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be strictly positive, got {dt}")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0.0):
        raise ValueError("state must be nonnegative")

    decay = np.exp(-p.kappa * dt)
    scale = -p.xi * p.xi * np.expm1(-p.kappa * dt) / (4.0 * p.kappa)
    dof = 4.0 * p.kappa * p.theta / (p.xi * p.xi)
    noncentrality = y_arr * decay / scale

    mix = rng.poisson(0.5 * noncentrality)
    out = 2.0 * scale * rng.standard_gamma(0.5 * dof + mix)
    if np.ndim(y) == 0:
        return float(out)
    return out
