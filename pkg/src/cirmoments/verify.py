"""Randomized property suites behind the ``verify`` CLI subcommand.

Each suite runs with a fixed master seed and returns a machine-readable
report dict with a ``passed`` flag, so the CLI can exit nonzero on failure
and tests can reuse the same checks.
"""

from __future__ import annotations

import math

import numpy as np

from .core import CirParams, FunctionalCoeffs
from .explosion import (
    EtaFamily,
    eta_feasible,
    exact_explosion_time,
    max_stable_step,
    moment_upper_bound,
    riccati_blowup_time,
    scheme_explosion_bound,
    select_eta,
)
from .montecarlo import McConfig, estimate_exp_functional
from .schemes import GridSpec, SchemeKind

__all__ = [
    "SUITES",
    "sample_explosive_coeffs",
    "brute_force_eta_search",
    "polynomial_holds_on_omega_grid",
    "verify_riccati",
    "verify_eta",
    "verify_lemma31",
    "verify_bounds",
    "run_suite",
]

MASTER_SEED = 1_234_567

#: parameter ranges for the randomized draws (all with delta > 0)
_K_RANGE = (0.05, 3.0)
_XI_RANGE = (0.05, 2.0)
_MU_RANGE = (-3.0, 3.0)
_LAM_MAX = 5.0


def sample_explosive_coeffs(rng: np.random.Generator, feller: bool = False):
    """Random ``(CirParams, FunctionalCoeffs)`` with ``delta > 0``."""
    while True:
        k = rng.uniform(*_K_RANGE)
        xi = rng.uniform(*_XI_RANGE)
        mu = rng.uniform(*_MU_RANGE)
        lam = rng.uniform(-0.5 * mu * mu + 1e-6, _LAM_MAX)
        theta = rng.uniform(0.05, 0.5)
        if feller:
            theta = max(theta, 0.75 * xi * xi / k)
        y0 = rng.uniform(0.05, 0.5)
        p = CirParams(kappa=k, theta=theta, xi=xi, y0=y0)
        f = FunctionalCoeffs(lam=lam, mu=mu)
        if f.delta > 1e-6:
            return p, f


def _eta_polynomial(family: EtaFamily, p: CirParams, f: FunctionalCoeffs, T: float, etas, omegas):
    """Values of the family's polynomial on an (eta, omega) grid."""
    delta = f.delta
    etas = np.asarray(etas, dtype=float)[:, None]
    omegas = np.asarray(omegas, dtype=float)[None, :]
    if family is EtaFamily.BEM:
        gamma = 0.5 * p.xi
        return (
            2.0 * delta * gamma * gamma * T * T * (etas * omegas) ** 2
            + 2.0 * gamma * f.mu * T * etas * omegas
            - (etas - 1.0)
        )
    return (
        p.xi * p.xi * delta * T * T * (etas * omegas) ** 2
        - 2.0 * (p.kappa - f.mu * p.xi) * T * etas * omegas
        - 2.0 * (etas - 1.0)
    )


def brute_force_eta_search(
    family: EtaFamily,
    p: CirParams,
    f: FunctionalCoeffs,
    T: float,
    n_eta: int = 4096,
    n_omega: int = 1001,
) -> bool:
    """Grid search for a feasible ``eta``, independent of the closed forms."""
    if family is EtaFamily.BEM:
        etas = np.geomspace(1.0 + 1e-9, 100.0, n_eta)
    else:
        etas = np.concatenate(([1.0], np.geomspace(1.0 + 1e-9, 100.0, n_eta - 1)))
    omegas = np.linspace(0.0, 1.0, n_omega)
    values = _eta_polynomial(family, p, f, T, etas, omegas)
    worst = values.max(axis=1)
    if family is EtaFamily.BEM:
        return bool(np.any(worst < 0.0))
    return bool(np.any(worst <= 0.0))


def polynomial_holds_on_omega_grid(
    family: EtaFamily,
    p: CirParams,
    f: FunctionalCoeffs,
    T: float,
    eta: float,
    n_omega: int = 1000,
) -> bool:
    """Check the lemma inequality for one ``eta`` on a dense omega grid."""
    omegas = np.linspace(0.0, 1.0, n_omega)
    values = _eta_polynomial(family, p, f, T, [eta], omegas)[0]
    if family is EtaFamily.BEM:
        return bool(np.all(values < 0.0))
    return bool(np.all(values <= 1e-12))


def verify_riccati(seed: int = MASTER_SEED, sets: int = 100) -> dict:
    """Closed-form explosion times against the Riccati-pole oracle."""
    rng = np.random.default_rng(seed)
    failures = []
    n_finite = n_infinite = 0
    for i in range(sets):
        p, f = sample_explosive_coeffs(rng)
        exact = exact_explosion_time(p, f)
        oracle = riccati_blowup_time(p, f)
        if exact.finite != oracle.finite:
            failures.append(
                f"set {i}: classification mismatch exact={exact.value} oracle={oracle.value}"
            )
            continue
        if exact.finite:
            n_finite += 1
            rel = abs(oracle.value - exact.value) / exact.value
            if rel > 1e-3:
                failures.append(
                    f"set {i}: rel err {rel:.2e} exact={exact.value:.6g} oracle={oracle.value:.6g}"
                )
        else:
            n_infinite += 1
    return {
        "suite": "riccati",
        "passed": not failures,
        "sets": sets,
        "finite": n_finite,
        "infinite": n_infinite,
        "failures": failures,
    }


def verify_eta(seed: int = MASTER_SEED, sets: int = 20) -> dict:
    """Feasibility straddle at 0.99/1.01 of each family's bound, with a
    brute-force grid cross-check."""
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(sets):
        p, f = sample_explosive_coeffs(rng)
        cases = (
            (EtaFamily.BEM, scheme_explosion_bound(SchemeKind.BEM, p, f).value),
            (EtaFamily.TRUNC, scheme_explosion_bound(SchemeKind.FTE, p, f).value),
        )
        for family, t_star in cases:
            t_lo, t_hi = 0.99 * t_star, 1.01 * t_star
            iv = eta_feasible(family, p, f, t_lo)
            if iv.empty:
                failures.append(f"set {i} {family.value}: empty interval at 0.99*T*")
            else:
                eta_mid = 0.5 * (iv.lower + iv.upper)
                if not polynomial_holds_on_omega_grid(family, p, f, t_lo, eta_mid):
                    failures.append(f"set {i} {family.value}: midpoint eta fails omega grid")
                if not brute_force_eta_search(family, p, f, t_lo):
                    failures.append(f"set {i} {family.value}: brute force finds no eta at 0.99*T*")
            if not eta_feasible(family, p, f, t_hi).empty:
                failures.append(f"set {i} {family.value}: nonempty interval at 1.01*T*")
            if brute_force_eta_search(family, p, f, t_hi):
                failures.append(f"set {i} {family.value}: brute force finds eta at 1.01*T*")
    return {"suite": "eta", "passed": not failures, "sets": sets, "failures": failures}


def verify_lemma31(seed: int = MASTER_SEED, paths: int = 20_000) -> dict:
    """Monotonicity of the running moment for every scheme and both signs
    of delta, within three standard errors."""
    p = CirParams(kappa=0.4, theta=0.12, xi=0.3, y0=0.12)
    cases = {
        "delta_negative": FunctionalCoeffs(lam=-1.0, mu=1.0),
        "delta_positive": FunctionalCoeffs(lam=0.5, mu=1.0),
    }
    grid = GridSpec(T=1.0, steps=100)
    record = (0.2, 0.4, 0.6, 0.8, 1.0)
    failures = []
    for case, f in cases.items():
        for kind in SchemeKind:
            cfg = McConfig(paths=paths, seed=seed, record_grid=record)
            est = estimate_exp_functional(kind, p, f, grid, cfg)
            values = [e.mean for _, e in est.curve]
            errors = [e.stderr for _, e in est.curve]
            for j in range(len(values) - 1):
                slack = 3.0 * (errors[j] + errors[j + 1])
                if f.delta <= 0.0:
                    ok = values[j + 1] <= values[j] + slack
                else:
                    ok = values[j + 1] >= values[j] - slack
                if not ok:
                    failures.append(f"{kind.value} {case}: not monotone at index {j}")
            if f.delta <= 0.0 and values[0] > 1.0 + 3.0 * errors[0]:
                failures.append(f"{kind.value} {case}: exceeds 1 at first record point")
    return {"suite": "lemma31", "passed": not failures, "paths": paths, "failures": failures}


def verify_bounds(seed: int = MASTER_SEED, configs: int = 10, paths: int = 30_000) -> dict:
    """Monte Carlo means stay below the proven moment bounds at feasible
    configurations with the step size inside the proven regime."""
    rng = np.random.default_rng(seed)
    kinds = list(SchemeKind)
    failures = []
    done = 0
    attempts = 0
    while done < configs and attempts < 10_000:
        attempts += 1
        kind = kinds[done % len(kinds)]
        p, f = sample_explosive_coeffs(rng, feller=kind is SchemeKind.BEM)
        t_star = scheme_explosion_bound(kind, p, f).value
        T = 0.9 * t_star
        from .explosion import eta_family_for_scheme

        family, f_eff = eta_family_for_scheme(kind, f)
        iv = eta_feasible(family, p, f_eff, T)
        if iv.empty:
            continue
        eta = select_eta(iv)
        ms = max_stable_step(kind, p, f, T, eta)
        dt = min(0.5 * ms, T / 64.0)
        steps = int(math.ceil(T / dt))
        if steps > 2000:
            continue
        bound = moment_upper_bound(kind, p, f, T, eta)
        est = estimate_exp_functional(
            kind, p, f, GridSpec(T=T, steps=steps), McConfig(paths=paths, seed=seed + done)
        )
        if not est.mean - 3.0 * est.stderr <= bound:
            failures.append(
                f"config {done} ({kind.value}): mean {est.mean:.4g} - 3se exceeds bound {bound:.4g}"
            )
        done += 1
    report = {
        "suite": "bounds",
        "passed": not failures and done == configs,
        "configs": done,
        "failures": failures,
    }
    if done < configs:
        report["failures"] = failures + [f"only {done}/{configs} feasible configurations found"]
        report["passed"] = False
    return report


SUITES = {
    "riccati": verify_riccati,
    "eta": verify_eta,
    "lemma31": verify_lemma31,
    "bounds": verify_bounds,
}


def run_suite(name: str, seed: int = MASTER_SEED) -> dict:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return SUITES[name](seed=seed)
