"""Euler-type one-step maps for the square-root diffusion.

Six discretizations on a uniform grid are provided, each paired with a
piecewise-constant nonnegative interpolant used by the moment estimators:

======  ===============================================  ===============
kind    update of the raw state                          interpolant
======  ===============================================  ===============
PTE     partial truncation: sqrt uses the positive part  max(y, 0)
FTE     full truncation: drift and sqrt truncated        max(y, 0)
ABS     absorption: state reset to its positive part     max(y, 0)
REF     reflection: sqrt of the absolute value           abs(y)
SYM     symmetrized: absolute value of the whole update  y (already >= 0)
BEM     drift-implicit backward Euler on x = sqrt(y)     x**2
======  ===============================================  ===============

The BEM recursion is implicit in ``x`` but has a unique positive root in
closed form, so no iterative solve is ever performed; it requires the
Feller condition, which is enforced when the initial state is built.

All step maps accept scalars or numpy arrays of states, which is what the
Monte Carlo engine relies on to advance whole batches of paths at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import CirParams, SqrtCoeffs, sqrt_coeffs

__all__ = [
    "SchemeKind",
    "SchemeState",
    "GridSpec",
    "PathRecord",
    "initial_raw",
    "initial_state",
    "step",
    "step_values",
    "interpolant",
    "interpolant_values",
    "simulate_path",
]


class SchemeKind(enum.Enum):
    PTE = "pte"
    FTE = "fte"
    ABS = "abs"
    REF = "ref"
    SYM = "sym"
    BEM = "bem"


@dataclass(frozen=True)
class SchemeState:
    """Raw state of a scheme: the level for explicit schemes, sqrt(level) for BEM."""

    raw: float


@dataclass(frozen=True)
class GridSpec:
    """Uniform time grid with ``steps`` intervals over ``[0, T]``."""

    T: float
    steps: int

    def __post_init__(self):
        if not self.T > 0.0:
            raise ValueError(f"T must be strictly positive, got {self.T}")
        if not (isinstance(self.steps, int) and self.steps > 0):
            raise ValueError(f"steps must be a positive integer, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    def times(self) -> np.ndarray:
        """Grid points ``t_0 = 0, ..., t_N = T`` (endpoint exact)."""
        return np.linspace(0.0, self.T, self.steps + 1)


@dataclass(frozen=True)
class PathRecord:
    """One simulated path: interpolant values at left endpoints and the
    Brownian increments that produced them (both of length ``steps``)."""

    ybar: np.ndarray
    dw: np.ndarray


def initial_raw(kind: SchemeKind, p: CirParams) -> float:
    """Raw starting state; rejects BEM when the Feller condition fails."""
    if kind is SchemeKind.BEM:
        if not p.feller:
            raise ValueError(
                "the drift-implicit (BEM) scheme requires 2*kappa*theta > xi**2"
            )
        return float(np.sqrt(p.y0))
    return p.y0


def initial_state(kind: SchemeKind, p: CirParams) -> SchemeState:
    return SchemeState(initial_raw(kind, p))


def _bem_step(c: SqrtCoeffs, x, dt: float, dw):
    # Positive root of the implicit update.  When x + gamma*dw is negative
    # the direct form suffers cancellation, so the conjugate form is used.
    q = 1.0 - c.beta * dt
    v = (x + c.gamma * dw) / (2.0 * q)
    w = c.alpha * dt / q
    root = np.sqrt(v * v + w)
    return np.where(v >= 0.0, v + root, w / (root - v))


def step_values(kind: SchemeKind, p: CirParams, raw, dt: float, dw):
    """Advance raw state(s) by one step of the given scheme.

    ``raw`` and ``dw`` may be scalars or arrays of matching shape.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be strictly positive, got {dt}")
    k, th, xi = p.kappa, p.theta, p.xi
    if kind is SchemeKind.PTE:
        pos = np.maximum(raw, 0.0)
        return raw + k * (th - raw) * dt + xi * np.sqrt(pos) * dw
    if kind is SchemeKind.FTE:
        pos = np.maximum(raw, 0.0)
        return raw + k * (th - pos) * dt + xi * np.sqrt(pos) * dw
    if kind is SchemeKind.ABS:
        pos = np.maximum(raw, 0.0)
        return pos + k * (th - pos) * dt + xi * np.sqrt(pos) * dw
    if kind is SchemeKind.REF:
        return raw + k * (th - raw) * dt + xi * np.sqrt(np.abs(raw)) * dw
    if kind is SchemeKind.SYM:
        return np.abs(raw + k * (th - raw) * dt + xi * np.sqrt(raw) * dw)
    if kind is SchemeKind.BEM:
        return _bem_step(sqrt_coeffs(p), raw, dt, dw)
    raise ValueError(f"unknown scheme kind: {kind!r}")


def step(kind: SchemeKind, p: CirParams, s: SchemeState, dt: float, dw: float) -> SchemeState:
    """Typed single-step wrapper around :func:`step_values`."""
    return SchemeState(float(step_values(kind, p, s.raw, dt, dw)))


def interpolant_values(kind: SchemeKind, raw):
    """Nonnegative interpolant value(s) held on ``[t_n, t_{n+1})``."""
    if kind in (SchemeKind.PTE, SchemeKind.FTE, SchemeKind.ABS):
        return np.maximum(raw, 0.0)
    if kind is SchemeKind.REF:
        return np.abs(raw)
    if kind is SchemeKind.SYM:
        return np.asarray(raw, dtype=float) if np.ndim(raw) else float(raw)
    if kind is SchemeKind.BEM:
        return np.square(raw)
    raise ValueError(f"unknown scheme kind: {kind!r}")


def interpolant(kind: SchemeKind, s: SchemeState) -> float:
    return float(interpolant_values(kind, s.raw))


def simulate_path(kind: SchemeKind, p: CirParams, g: GridSpec, seed) -> PathRecord:
    """Simulate one path; deterministic function of ``(kind, p, g, seed)``.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.  The
    record holds the interpolant at every left grid endpoint together with
    the matching Brownian increment, which is exactly what the exponential
    functional consumes.
    """
    rng = np.random.default_rng(seed)
    dt = g.dt
    dw = rng.standard_normal(g.steps) * np.sqrt(dt)
    ybar = np.empty(g.steps)
    raw = initial_raw(kind, p)
    for n in range(g.steps):
        ybar[n] = interpolant_values(kind, raw)
        raw = step_values(kind, p, raw, dt, dw[n])
    return PathRecord(ybar=ybar, dw=dw)
