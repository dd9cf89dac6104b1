"""Radial evolution, linear mode evolution and the planar toy flow.

The radial reduction: on a ball of radius R the pressure boundary value
gamma/R is constant, so the boundary velocity only sees the pressure
profile pi_0, and integrating -Laplace(pi_0) = g(sigma) over the ball gives

    dR/dt = (1/R^2) * int_0^R g(U(r, R)) r^2 dr.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .harmonics import HarmonicExpansion, HarmonicIndex, synthesize
from .quadrature import adaptive_gauss
from .radial import (
    ModelParams,
    RadialStationary,
    SolverError,
    boundary_slope,
    sigma_profile,
    solve_k_of_r,
    solve_r_star,
)
from .spectrum import eigenvalue_ak
from .modes import solve_modes

VELOCITY_RTOL = 1e-9


class VelocityInconsistencyError(RuntimeError):
    """Direct and closed-form radial velocities disagree."""


@dataclass
class EvolutionTrace:
    times: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")


# ---------------------------------------------------------------------------
# Radial velocity
# ---------------------------------------------------------------------------

def velocity_by_quadrature(R: float, params: ModelParams, r_star: Optional[float] = None) -> float:
    """``(1/R^2) int_0^R g(sigma) r^2 dr`` by adaptive Gauss-Legendre,
    split at the necrotic interface where g jumps."""
    if R <= 0:
        raise ValueError("radius must be positive")
    r_star = solve_r_star(params) if r_star is None else r_star
    K = solve_k_of_r(R, params, r_star) if R > r_star else 0.0

    def integrand(r):
        s, _ = sigma_profile(r, R, params, K if R > r_star else None, r_star)
        return np.asarray(params.g(s)) * r * r

    core = -params.b * K ** 3 / 3.0
    # on the shell sigma > sigma_hat except at r = K itself
    shell = adaptive_gauss(integrand, K, R, tol=1e-14)
    return (core + shell) / R ** 2


def velocity_closed_form(R: float, params: ModelParams, r_star: Optional[float] = None) -> float:
    """Closed-form boundary velocity on either branch."""
    r_star = solve_r_star(params) if r_star is None else r_star
    a, b, st = params.a, params.b, params.sigma_tilde
    if R >= r_star:
        return -boundary_slope(R, params, r_star)
    # int_0^R U r^2 = R (R cosh R - sinh R) / sinh R
    mass = R * (R / math.tanh(R) - 1.0) if R > 1e-4 else R ** 3 / 3.0 * (1 - R * R / 15.0)
    return (a * mass - (a * st + b) * R ** 3 / 3.0) / R ** 2


def radial_velocity(R: float, params: ModelParams, r_star: Optional[float] = None) -> float:
    """Boundary velocity dR/dt of a radially symmetric tumor of radius R.

    The direct g-integral is always computed; above R* it is compared with
    -dV/dr(R, R) and a disagreement beyond 1e-9 (relative to the size of the
    terms being balanced) raises :class:`VelocityInconsistencyError`.
    """
    r_star = solve_r_star(params) if r_star is None else r_star
    direct = velocity_by_quadrature(R, params, r_star)
    if R > r_star:
        closed = velocity_closed_form(R, params, r_star)
        scale = max(abs(direct), abs(closed), (params.a * params.sigma_tilde + params.b) * R / 3.0 * 1e-6)
        if abs(direct - closed) > VELOCITY_RTOL * scale:
            raise VelocityInconsistencyError(
                f"radial velocity mismatch at R={R}: direct {direct!r}, closed {closed!r}"
            )
    return direct


def velocity_derivative(R: float, params: ModelParams, h: Optional[float] = None) -> float:
    """Centered finite difference of the radial velocity."""
    h = 1e-5 * R if h is None else h
    r_star = solve_r_star(params)
    return (velocity_closed_form(R + h, params, r_star) - velocity_closed_form(R - h, params, r_star)) / (2 * h)


# ---------------------------------------------------------------------------
# Radial evolution
# ---------------------------------------------------------------------------

def evolve_radius(R0: float, t_end: float, params: ModelParams, t_eval: Optional[Sequence[float]] = None,
                  rtol: float = 1e-10, atol: float = 1e-13) -> EvolutionTrace:
    """Integrate dR/dt = radial_velocity(R) from R0 over [0, t_end].

    The right-hand side has a derivative kink at R*, so the integration is
    restarted whenever the trajectory crosses it.
    """
    if R0 <= 0:
        raise ValueError("initial radius must be positive")
    r_star = solve_r_star(params)
    rhs = lambda t, y: [velocity_closed_form(y[0], params, r_star)]
    crossing = lambda t, y: y[0] - r_star
    crossing.terminal = True

    times, values = [0.0], [R0]
    t0, y0 = 0.0, R0
    while t0 < t_end:
        events = crossing if abs(y0 - r_star) > 1e-12 * r_star else None
        sol = solve_ivp(rhs, (t0, t_end), [y0], method="RK45", rtol=rtol, atol=atol, events=events, dense_output=True)
        if not sol.success:
            raise SolverError(f"radial integration failed: {sol.message}")
        times.extend(sol.t[1:])
        values.extend(sol.y[0, 1:])
        if sol.status == 1:
            t0, y0 = float(sol.t_events[0][0]), r_star
            if times[-1] != t0:
                times.append(t0)
                values.append(y0)
        else:
            break
    times = np.asarray(times)
    values = np.asarray(values)
    keep = np.concatenate([[True], np.diff(times) > 0])
    times, values = times[keep], values[keep]
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        values = np.interp(t_eval, times, values) if len(times) > 1 else np.full_like(t_eval, R0)
        times = t_eval
    meta = {"kind": "radius", "params": params.as_dict(), "R0": R0, "t_end": t_end}
    return EvolutionTrace(times, values, meta)


def fit_decay_rate(trace: EvolutionTrace, r_s: float, lo: float = 1e-6, hi: float = 1e-3) -> float:
    """Least-squares slope of log|R - R_s| over the window where the offset
    lies between ``lo`` and ``hi`` times its initial value."""
    offset = np.abs(trace.values - r_s)
    rel = offset / offset[0]
    mask = (rel <= hi) & (rel >= lo)
    if mask.sum() < 3:
        raise ValueError("decay window holds fewer than three samples; extend t_end")
    slope, _ = np.polyfit(trace.times[mask], np.log(offset[mask]), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Linear mode evolution
# ---------------------------------------------------------------------------

def evolve_modes(initial: HarmonicExpansion, gamma: float, t_samples: Sequence[float], stat: RadialStationary,
                 params: Optional[ModelParams] = None) -> EvolutionTrace:
    """Exact solution of the linearized shape flow c_kl' = a_k(gamma) c_kl.

    ``values[i, j]`` is the amplitude of the j-th index of
    ``metadata['indices']`` at ``t_samples[i]``.
    """
    params = stat.params if params is None else params
    items = initial.items()
    idx = [i for i, _ in items]
    c0 = np.array([c for _, c in items])
    degrees = sorted({i.k for i in idx})
    rates = {}
    if degrees:
        for m in solve_modes(stat, degrees):
            rates[m.k] = eigenvalue_ak(m.k, gamma, m, stat, params)
    t = np.asarray(t_samples, dtype=float)
    a = np.array([rates[i.k] for i in idx])
    values = c0[None, :] * np.exp(np.outer(t, a)) if idx else np.zeros((len(t), 0))
    meta = {
        "kind": "linearized-modes",
        "note": "linear flow only; not the nonlinear free-boundary evolution",
        "gamma": gamma,
        "params": params.as_dict(),
        "indices": [(i.k, i.l) for i in idx],
        "rates": {k: rates[k] for k in degrees},
    }
    return EvolutionTrace(t, values, meta)


def shape_snapshot(trace: EvolutionTrace, sample: int, stat: RadialStationary, theta, phi):
    """Boundary radius R_s (1 + sum c_kl(t) Y_kl) at one sample of a mode trace."""
    coeffs = {HarmonicIndex(k, l): c for (k, l), c in zip(trace.metadata["indices"], trace.values[sample])}
    return stat.r_s * (1.0 + synthesize(HarmonicExpansion(coeffs), theta, phi))


# ---------------------------------------------------------------------------
# Planar toy system x' = 0, y' = -y
# ---------------------------------------------------------------------------

def toy_planar_flow(x0: float, y0: float, t: float) -> tuple[float, float]:
    return x0, y0 * math.exp(-t)


def toy_limit(x0: float, y0: float) -> tuple[float, float]:
    """Limit point; it is the translate of the origin by x0."""
    return x0, 0.0


def toy_on_stable_manifold(x0: float, y0: float) -> bool:
    """True iff the trajectory converges to the origin itself (x0 = 0)."""
    return x0 == 0.0
