"""Critical times for the exponential moment, scheme lower bounds, and the
Riccati-ODE oracle.

Everything here revolves around ``delta = lam + mu**2/2``.  For
``delta <= 0`` the first moment of the exponential functional never
explodes and every routine reports an infinite critical time.  For
``delta > 0``:

* :func:`exact_explosion_time` gives the critical time of the continuous
  process in closed form (four cases depending on where ``kappa`` sits
  relative to ``xi*(mu -/+ sqrt(2*delta))``).
* :func:`scheme_explosion_bound` gives the proven lower bound on the
  explosion time of each discretization's moment, uniform in the step
  size.
* :func:`eta_feasible` computes the interval of amplification constants
  ``eta`` for which the scheme bounds' underlying polynomial inequality
  holds on all of ``omega in [0, 1]`` — nonempty exactly when the horizon
  is below (implicit family, strict) or at most (truncation family) the
  corresponding bound.
* :func:`max_stable_step` and :func:`moment_upper_bound` expose the step
  size restrictions and the explicit, step-size-independent moment bounds
  attached to a feasible ``eta``.
* :func:`solve_riccati` / :func:`riccati_blowup_time` provide a
  semi-analytic oracle: the moment equals ``exp(G(T)*y0 + H(T))`` where
  ``G`` solves a scalar Riccati ODE whose movable pole is the explosion
  time.  Blow-up is detected by an adaptive integrator with a hard
  threshold and the pole is refined by bisection on the horizon.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .core import CirParams, FunctionalCoeffs, sqrt_coeffs
from .schemes import SchemeKind

__all__ = [
    "BlowUpError",
    "ExplosionTime",
    "RiccatiCoeffs",
    "RiccatiSolution",
    "EtaFamily",
    "EtaInterval",
    "SupremumLocation",
    "exact_explosion_time",
    "scheme_explosion_bound",
    "riccati_coeffs",
    "solve_riccati",
    "riccati_blowup_time",
    "semi_analytic_functional",
    "eta_feasible",
    "eta_family_for_scheme",
    "select_eta",
    "max_stable_step",
    "moment_upper_bound",
    "supremum_location",
]

INF = math.inf

#: |G| beyond this value counts as blow-up of the Riccati solution.
G_BLOWUP = 1.0e8
#: Numeric oracle horizons beyond this are reported as infinite.
HORIZON_CAP = 1.0e3
_RTOL = 1.0e-10
_ATOL = 1.0e-12
_BISECT_RTOL = 1.0e-6
# Second constraint refinement factor appearing in the truncation-family
# step-size restrictions.
_SQRT2_RATIO = (math.sqrt(2.0) - 1.0) / math.sqrt(2.0)


class BlowUpError(RuntimeError):
    """The requested horizon is at or beyond the moment's explosion time."""


class SupremumLocation(enum.Enum):
    AT_ZERO_VALUE_ONE = "at_zero_value_one"
    AT_TERMINAL = "at_terminal"


@dataclass(frozen=True)
class ExplosionTime:
    """A critical time, the case that produced it, and its auxiliary rate."""

    value: float
    case: str
    aux: float | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


@dataclass(frozen=True)
class RiccatiCoeffs:
    """Coefficients of ``G' = a G^2 + b G + c`` plus the reparameterization
    pair ``(lam_hat, mu_hat)`` that removes the stochastic integral."""

    a: float
    b: float
    c: float
    lam_hat: float
    mu_hat: float


@dataclass(frozen=True)
class RiccatiSolution:
    g: float
    h: float
    blew_up: bool
    blowup_time: float | None = None


class EtaFamily(enum.Enum):
    #: implicit (BEM) polynomial; feasibility requires eta > 1, strictly
    BEM = "bem"
    #: truncation/reflection-family polynomial; eta >= 1 admitted
    TRUNC = "trunc"


@dataclass(frozen=True)
class EtaInterval:
    """Feasible amplification constants; empty when ``lower`` is NaN.

    The BEM family is open at the lower endpoint (strict inequality in the
    defining polynomial), the truncation family is closed.
    """

    lower: float
    upper: float
    family: EtaFamily

    @property
    def empty(self) -> bool:
        return math.isnan(self.lower)

    def contains(self, eta: float) -> bool:
        if self.empty:
            return False
        if self.family is EtaFamily.BEM:
            return self.lower < eta < self.upper
        return self.lower <= eta <= self.upper


def _empty_interval(family: EtaFamily) -> EtaInterval:
    return EtaInterval(math.nan, math.nan, family)


def supremum_location(f: FunctionalCoeffs) -> SupremumLocation:
    """Where ``sup_t E`` of the discretized functional is attained.

    Independent of the scheme: the running conditional expectation is
    monotone in the sign of ``delta``, so the supremum sits at ``t = 0``
    (where the functional equals one) for ``delta <= 0`` and at the
    terminal time otherwise.
    """
    if f.delta <= 0.0:
        return SupremumLocation.AT_ZERO_VALUE_ONE
    return SupremumLocation.AT_TERMINAL


def exact_explosion_time(p: CirParams, f: FunctionalCoeffs) -> ExplosionTime:
    """Critical time of the exponential moment of the exact process.

    Case boundaries follow the strict/weak inequalities of the closed-form
    classification exactly: strict ``<`` for the log case, equality for the
    tangent case, and ``>=`` for the non-exploding case.
    """
    delta = f.delta
    if delta <= 0.0:
        return ExplosionTime(INF, "delta_nonpositive")
    k, xi, mu = p.kappa, p.xi, f.mu
    b = mu * xi - k
    s = math.sqrt(2.0 * delta)
    if k < xi * (mu - s):
        nu = math.sqrt(b * b - 2.0 * xi * xi * delta)
        t_star = math.log((b + nu) / (b - nu)) / nu
        return ExplosionTime(t_star, "log_ratio", aux=nu)
    if k == xi * (mu - s):
        return ExplosionTime(2.0 / b, "double_root")
    if k < xi * (mu + s):
        nu_hat = math.sqrt(2.0 * xi * xi * delta - b * b)
        t_star = (2.0 / nu_hat) * (0.5 * math.pi - math.atan(b / nu_hat))
        return ExplosionTime(t_star, "arctan", aux=nu_hat)
    return ExplosionTime(INF, "no_blowup")


def scheme_explosion_bound(kind: SchemeKind, p: CirParams, f: FunctionalCoeffs) -> ExplosionTime:
    """Proven lower bound on the moment explosion time of a scheme.

    The reflection scheme obeys the truncation-family formulas with ``mu``
    replaced by ``|mu|``; the symmetrized scheme keeps the signed ``mu``.
    """
    delta = f.delta
    if delta <= 0.0:
        return ExplosionTime(INF, "delta_nonpositive")
    k, xi, mu = p.kappa, p.xi, f.mu
    if kind is SchemeKind.BEM:
        if mu < 0.0 and f.lam < 1.5 * mu * mu:
            return ExplosionTime(-2.0 * mu / (xi * delta), "bem_negative_mu")
        return ExplosionTime(1.0 / (xi * (mu + math.sqrt(2.0 * delta))), "bem_reciprocal")
    if kind is SchemeKind.REF:
        mu = abs(mu)
        prefix = "ref"
    else:
        prefix = "trunc"
    if k <= xi * (mu + math.sqrt(0.5 * delta)):
        t_star = 1.0 / (xi * (mu + math.sqrt(2.0 * delta)) - k)
        return ExplosionTime(t_star, f"{prefix}_reciprocal")
    return ExplosionTime(2.0 * (k - mu * xi) / (xi * xi * delta), f"{prefix}_drift_ratio")


def riccati_coeffs(p: CirParams, f: FunctionalCoeffs) -> RiccatiCoeffs:
    """Quadratic ODE coefficients and the reparameterized exponent pair."""
    lam_hat = f.mu / p.xi
    mu_hat = f.lam + f.mu * p.kappa / p.xi
    return RiccatiCoeffs(
        a=0.5 * p.xi * p.xi,
        b=f.mu * p.xi - p.kappa,
        c=f.delta,
        lam_hat=lam_hat,
        mu_hat=mu_hat,
    )


def solve_riccati(p: CirParams, f: FunctionalCoeffs, T: float) -> RiccatiSolution:
    """Integrate ``G' = a G^2 + b G + c``, ``H' = kappa*theta*G`` from 0 to T.

    Adaptive embedded Runge-Kutta (4/5 pair) at relative tolerance 1e-10;
    blow-up is declared when ``|G|`` crosses ``G_BLOWUP`` or the integrator
    stalls near the pole, in which case the crossing/stall time is
    reported.
    """
    if not T > 0.0:
        raise ValueError(f"T must be strictly positive, got {T}")
    co = riccati_coeffs(p, f)
    kth = p.kappa * p.theta

    def rhs(t, y):
        g = y[0]
        return (co.a * g * g + co.b * g + co.c, kth * g)

    def threshold(t, y):
        return abs(y[0]) - G_BLOWUP

    threshold.terminal = True

    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(
            rhs, (0.0, T), (0.0, 0.0), method="RK45", rtol=_RTOL, atol=_ATOL,
            events=threshold, dense_output=False,
        )
    if sol.t_events[0].size:
        return RiccatiSolution(math.nan, math.nan, True, float(sol.t_events[0][0]))
    if sol.status != 0 or not np.isfinite(sol.y[0, -1]):
        # step-size underflow right at the singularity
        return RiccatiSolution(math.nan, math.nan, True, float(sol.t[-1]))
    return RiccatiSolution(float(sol.y[0, -1]), float(sol.y[1, -1]), False)


def riccati_blowup_time(
    p: CirParams, f: FunctionalCoeffs, horizon_cap: float = HORIZON_CAP
) -> ExplosionTime:
    """Numeric critical time: pole of the Riccati solution, or infinity.

    ``delta <= 0`` is classified analytically (``G`` stays trapped below
    zero, respectively identically zero).  Otherwise the pole is bracketed
    by the threshold crossing of a first integration and refined by
    bisection on the integration horizon to 1e-6 relative accuracy.
    Candidates beyond ``horizon_cap`` are reported as infinite.
    """
    if f.delta <= 0.0:
        return ExplosionTime(INF, "delta_nonpositive")
    probe = solve_riccati(p, f, horizon_cap)
    if not probe.blew_up:
        return ExplosionTime(INF, "beyond_horizon")
    t_event = probe.blowup_time

    def blows(T: float) -> bool:
        return solve_riccati(p, f, T).blew_up

    lo = t_event * (1.0 - 1.0e-3)
    hi = min(t_event * (1.0 + 1.0e-3), horizon_cap)
    while lo > 0.0 and blows(lo):
        lo *= 0.95
    while hi < horizon_cap and not blows(hi):
        hi = min(hi * 1.05, horizon_cap)
    for _ in range(80):
        if hi - lo <= _BISECT_RTOL * hi:
            break
        mid = 0.5 * (lo + hi)
        if blows(mid):
            hi = mid
        else:
            lo = mid
    return ExplosionTime(0.5 * (lo + hi), "riccati_pole")


def semi_analytic_functional(p: CirParams, f: FunctionalCoeffs, T: float) -> float:
    """First moment of the exponential functional, ``exp(G(T)*y0 + H(T))``.

    The functional rewrites in terms of ``(y_T, int y dt)`` with exponent
    pair ``(lam_hat, mu_hat)``; the affine ansatz for its expectation
    carries an explicit ``lam_hat*(y0 + kappa*theta*T)`` term that cancels
    the prefactor of the rewrite, leaving only ``G`` and ``H``.  For
    ``delta == 0`` the functional is a true martingale and the value is
    exactly one.

    Raises
    ------
    BlowUpError
        If the Riccati solution explodes at or before ``T``.
    """
    if f.delta == 0.0:
        return 1.0
    sol = solve_riccati(p, f, T)
    if sol.blew_up:
        raise BlowUpError(
            f"moment explodes at t ~ {sol.blowup_time:.6g} <= T = {T:.6g}"
        )
    return float(np.exp(sol.g * p.y0 + sol.h))


def eta_family_for_scheme(kind: SchemeKind, f: FunctionalCoeffs):
    """Polynomial family and effective coefficients validating a scheme's
    bound: BEM has its own form, the reflection scheme uses the truncation
    form with ``|mu|``, everything else the truncation form as-is."""
    if kind is SchemeKind.BEM:
        return EtaFamily.BEM, f
    if kind is SchemeKind.REF:
        return EtaFamily.TRUNC, FunctionalCoeffs(f.lam, abs(f.mu))
    return EtaFamily.TRUNC, f


def _quadratic_roots(a2: float, a1: float, a0: float, clamp_tangent: bool):
    """Real roots of ``a2 x^2 + a1 x + a0`` with ``a2 > 0``; None if complex.

    ``clamp_tangent`` treats a discriminant within rounding of zero as a
    tangency, which keeps weak-inequality boundaries classified as
    feasible under floating point.
    """
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        if not (clamp_tangent and disc >= -1.0e-12 * max(a1 * a1, abs(4.0 * a2 * a0))):
            return None
        disc = 0.0
    root = math.sqrt(disc)
    return ((-a1 - root) / (2.0 * a2), (-a1 + root) / (2.0 * a2))


def eta_feasible(
    family: EtaFamily, p: CirParams, f: FunctionalCoeffs, T: float
) -> EtaInterval:
    """Interval of ``eta`` making the family's polynomial inequality hold
    for every ``omega in [0, 1]``.

    Because the polynomial is negative at ``omega = 0`` and convex, the
    constraint reduces to its value at ``omega = 1``, a quadratic in
    ``eta``.  The interval is nonempty exactly when the horizon is below
    the corresponding scheme bound (strictly below for the BEM family, at
    most the bound for the truncation family).
    """
    delta = f.delta
    if not delta > 0.0:
        raise ValueError("eta feasibility is only defined for delta > 0")
    if not T > 0.0:
        raise ValueError(f"T must be strictly positive, got {T}")
    k, xi, mu = p.kappa, p.xi, f.mu
    if family is EtaFamily.BEM:
        gamma = 0.5 * xi
        roots = _quadratic_roots(
            2.0 * delta * gamma * gamma * T * T,
            2.0 * gamma * mu * T - 1.0,
            1.0,
            clamp_tangent=False,
        )
        if roots is None or roots[1] <= roots[0]:
            return _empty_interval(family)
        lower = max(1.0, roots[0])
        if roots[1] <= lower:
            return _empty_interval(family)
        return EtaInterval(lower, roots[1], family)
    roots = _quadratic_roots(
        xi * xi * delta * T * T,
        -2.0 * (1.0 + (k - mu * xi) * T),
        2.0,
        clamp_tangent=True,
    )
    if roots is None or roots[1] < 1.0:
        return _empty_interval(family)
    return EtaInterval(max(1.0, roots[0]), roots[1], family)


def select_eta(interval: EtaInterval, bound=None) -> float:
    """Default amplification constant from a feasible interval.

    The lower endpoint (nudged inward for the strict BEM family) minimizes
    the moment bound, which is monotone increasing in ``eta``.  Passing a
    callable ``bound`` (eta -> bound value) switches to a numerical
    minimization over the interval instead.
    """
    if interval.empty:
        raise ValueError("empty eta interval")
    if bound is not None:
        pad = 1.0e-9 * max(1.0, interval.upper - interval.lower)
        res = minimize_scalar(
            bound,
            bounds=(interval.lower + pad, interval.upper - pad),
            method="bounded",
        )
        return float(res.x)
    if interval.family is EtaFamily.BEM:
        eta = interval.lower + 1.0e-9
        if eta >= interval.upper:
            eta = 0.5 * (interval.lower + interval.upper)
        return eta
    return interval.lower


def _inv_pos(x: float) -> float:
    # reciprocal under the 0+ convention: nonpositive arguments mean the
    # constraint is absent
    return 1.0 / x if x > 0.0 else INF


def _bem_poly_max(eta: float, gamma: float, mu: float, delta: float, T: float) -> float:
    # Convex quadratic in omega, so its maximum over [0, 1] sits at an
    # endpoint; both are evaluated explicitly.
    at0 = 1.0 - eta
    at1 = 2.0 * eta * eta * delta * gamma * gamma * T * T + 2.0 * eta * gamma * mu * T - eta + 1.0
    return max(at0, at1)


def _require_feasible(kind: SchemeKind, p: CirParams, f: FunctionalCoeffs, T: float, eta: float):
    family, f_eff = eta_family_for_scheme(kind, f)
    interval = eta_feasible(family, p, f_eff, T)
    if not interval.contains(eta):
        raise ValueError(
            f"eta = {eta} is not feasible for {kind.value} at T = {T}"
        )
    return f_eff


def max_stable_step(
    kind: SchemeKind, p: CirParams, f: FunctionalCoeffs, T: float, eta: float
) -> float:
    """Largest step size for which a scheme's moment bound is proven.

    Minimum over the scheme's list of step-size restrictions; restrictions
    whose defining quantity is nonpositive are absent (infinite), so the
    result may be infinite.  ``eta`` must be feasible for ``(kind, T)``.
    """
    delta = f.delta
    if delta <= 0.0:
        return INF
    _require_feasible(kind, p, f, T, eta)
    k, xi, mu = p.kappa, p.xi, f.mu
    if kind is SchemeKind.BEM:
        gamma = 0.5 * xi
        g2t = eta * delta * gamma * gamma * T
        fmax = _bem_poly_max(eta, gamma, mu, delta, T)
        return min(
            1.0 / (2.0 * g2t),
            _inv_pos(gamma * max(0.0, -mu)),
            0.25 * (math.sqrt(5.0) - 1.0) / g2t,
            -fmax / (2.0 * eta * (eta * delta - f.lam) * gamma * gamma * T),
        )
    if kind in (SchemeKind.PTE, SchemeKind.FTE, SchemeKind.ABS):
        base = min(_inv_pos(k - mu * xi), _SQRT2_RATIO * _inv_pos(k - mu * xi))
        if kind is SchemeKind.PTE:
            return min(base, 1.0 / k)
        return base
    if kind is SchemeKind.SYM:
        shifted = k - mu * xi + eta * xi * xi * delta * T
        return min(
            _inv_pos(k - mu * xi),
            _inv_pos(shifted),
            _SQRT2_RATIO * _inv_pos(shifted),
        )
    if kind is SchemeKind.REF:
        down = k - mu * xi + eta * xi * xi * delta * T
        up = k + mu * xi + eta * xi * xi * delta * T
        return min(
            _inv_pos(k - mu * xi),
            _inv_pos(down),
            _SQRT2_RATIO * _inv_pos(down),
            _inv_pos(k + mu * xi),
            _SQRT2_RATIO * _inv_pos(up),
        )
    raise ValueError(f"unknown scheme kind: {kind!r}")


def _nu_y(p: CirParams) -> float:
    # peak constant of the Gaussian-tail envelope entering the truncation
    # and reflection moment bounds
    xi2 = p.xi * p.xi
    kth = p.kappa * p.theta
    return math.sqrt((xi2 + math.sqrt(xi2 * xi2 + 2.0 * kth * kth)) / (2.0 * math.pi))


def moment_upper_bound(
    kind: SchemeKind, p: CirParams, f: FunctionalCoeffs, T: float, eta: float
) -> float:
    """Proven step-size-independent bound on the scheme's exponential moment.

    Requires ``delta > 0`` and a feasible ``eta``.  The implicit scheme's
    bound is driven by the square-root-transform coefficients; the explicit
    families share one envelope constant, counted twice for the schemes
    whose update reflects through the origin (REF, SYM).
    """
    delta = f.delta
    if not delta > 0.0:
        raise ValueError("moment_upper_bound requires delta > 0")
    _require_feasible(kind, p, f, T, eta)
    edt = eta * delta * T
    if kind is SchemeKind.BEM:
        c = sqrt_coeffs(p)
        if not p.feller:
            raise ValueError("the BEM bound requires the Feller condition")
        exponent = edt * T * (c.alpha + 4.0 * c.gamma * c.gamma) + edt * p.y0
    else:
        weight = 2.0 if kind in (SchemeKind.REF, SchemeKind.SYM) else 1.0
        exponent = 0.5 * edt * T * (p.kappa * p.theta + weight * _nu_y(p) * p.xi) + edt * p.y0
    return float(np.exp(exponent))
