"""Radially symmetric stationary states of the necrotic tumor model.

Units are normalized so that the nutrient consumption rate and the boundary
nutrient level are both one.  For a ball of radius R the nutrient profile is

    U(r, R) = R sinh r / (r sinh R)                          R <= R*
    U(r, R) = sigma_hat [sinh(r-K) + K cosh(r-K)] / r         K <= r <= R, R > R*
    U(r, R) = sigma_hat                                       r < K

and the pressure (without the surface-tension constant) is the piecewise
profile V(r, R) with matching constants C (core) and D (living shell).  All
shell integrals of U have elementary antiderivatives and are evaluated in
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .quadrature import adaptive_gauss

ROOT_XTOL = 1e-14
ROOT_RTOL = 4 * np.finfo(float).eps
SERIES_CUTOFF = 1e-4


class InvalidParameterError(ValueError):
    """Model constants outside the admissible region."""


class NoNecroticCoreError(ValueError):
    """Requested the necrotic branch for a radius that has no necrotic core."""


class RadialDomainError(ValueError):
    """Radius outside ``[0, R]``."""


class SolverError(RuntimeError):
    """A root or ODE solve failed to converge."""


@dataclass(frozen=True)
class ModelParams:
    """Tumor model constants ``a``, ``b``, ``sigma_hat`` and surface tension ``gamma``."""

    a: float
    b: float
    sigma_hat: float
    gamma: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("a", "b", "sigma_hat"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be a finite number, got {v!r}")
        if self.a <= 0:
            raise InvalidParameterError(f"a must be positive, got {self.a}")
        if self.b <= 0:
            raise InvalidParameterError(f"b must be positive, got {self.b}")
        if not 0 < self.sigma_hat < 1:
            raise InvalidParameterError(f"sigma_hat must lie in (0, 1), got {self.sigma_hat}")
        if self.b >= self.a * self.sigma_hat:
            raise InvalidParameterError(
                f"need b < a*sigma_hat (got b={self.b}, a*sigma_hat={self.a * self.sigma_hat})"
            )
        if self.gamma is not None and not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma}")

    @property
    def sigma_tilde(self) -> float:
        return self.sigma_hat - self.b / self.a

    @property
    def g1(self) -> float:
        """Proliferation rate at the boundary nutrient level, g(1)."""
        return self.a * (1.0 - self.sigma_tilde) - self.b

    def g(self, sigma):
        """Proliferation rate with the Heaviside gate, H(0) = 0."""
        sigma = np.asarray(sigma, dtype=float)
        live = sigma > self.sigma_hat
        out = np.where(live, self.a * (sigma - self.sigma_tilde) - self.b, -self.b)
        return float(out) if out.ndim == 0 else out

    def with_gamma(self, gamma: float) -> "ModelParams":
        return ModelParams(self.a, self.b, self.sigma_hat, gamma)

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "sigma_hat": self.sigma_hat, "gamma": self.gamma}


# ---------------------------------------------------------------------------
# Critical radius and necrotic interface
# ---------------------------------------------------------------------------

def solve_r_star(params: ModelParams) -> float:
    """Radius at which the necrotic core appears: ``sinh R / R = 1 / sigma_hat``."""
    target = 1.0 / params.sigma_hat
    # sinh(r)/r - 1 via expm1 keeps the residual meaningful when sigma_hat -> 1
    f = lambda r: _sinhc_minus_one(r) - (target - 1.0)
    hi = 1.0
    while f(hi) <= 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=ROOT_XTOL * 1e-2, rtol=ROOT_RTOL, maxiter=500)


def _sinhc_minus_one(r: float) -> float:
    if r < SERIES_CUTOFF:
        r2 = r * r
        return r2 / 6.0 + r2 * r2 / 120.0 + r2 ** 3 / 5040.0
    return math.sinh(r) / r - 1.0


def k_equation_residual(K: float, R: float, params: ModelParams) -> float:
    return math.sinh(R - K) + K * math.cosh(R - K) - R / params.sigma_hat


def solve_k_of_r(R: float, params: ModelParams, r_star: Optional[float] = None) -> float:
    """Necrotic interface radius K(R) in (0, R) for R > R*."""
    r_star = solve_r_star(params) if r_star is None else r_star
    if R <= r_star:
        raise NoNecroticCoreError(f"R={R} does not exceed R*={r_star}; no necrotic core")
    f = lambda K: k_equation_residual(K, R, params)
    # with c = R - K = log(2R/sigma_hat) + 1 the residual is already positive,
    # so the root lies in [R - c, R]; this keeps sinh away from overflow
    lo = max(0.0, R - (math.log(2.0 * R / params.sigma_hat) + 1.0))
    if lo == 0.0 and f(0.0) <= 0.0:
        return 0.0
    return brentq(f, lo, R, xtol=ROOT_XTOL * 1e-2, rtol=ROOT_RTOL, maxiter=500)


# ---------------------------------------------------------------------------
# Nutrient profile
# ---------------------------------------------------------------------------

def _check_domain(r: np.ndarray, R: float) -> None:
    slack = 1e-12 * max(R, 1.0)
    if np.any(r < -slack) or np.any(r > R + slack):
        raise RadialDomainError(f"radius outside [0, {R}]")


def _nonnecrotic_sigma(r: np.ndarray, R: float):
    # R sinh r / (r sinh R), written with exponentials to survive large R
    with np.errstate(divide="ignore", invalid="ignore"):
        small = r < SERIES_CUTOFF
        rs = np.where(small, 1.0, r)
        ratio = np.exp(rs - R) * (-np.expm1(-2 * rs)) / (-math.expm1(-2 * R))
        val = R * ratio / rs
        dval = R * np.exp(rs - R) / (-math.expm1(-2 * R)) * (
            (rs * (1 + np.exp(-2 * rs)) - (-np.expm1(-2 * rs))) / rs ** 2
        )
    r2 = r * r
    pref = 2 * R * math.exp(-R) / (-math.expm1(-2 * R))  # R / sinh R
    ser = pref * (1 + r2 / 6 + r2 * r2 / 120 + r2 ** 3 / 5040)
    dser = pref * (r / 3 + r * r2 / 30 + r * r2 * r2 / 840 + r * r2 ** 3 / 45360)
    return np.where(small, ser, val), np.where(small, dser, dval)


def _necrotic_sigma(r: np.ndarray, K: float, sigma_hat: float):
    with np.errstate(divide="ignore", invalid="ignore"):
        rs = np.where(r > K, r, max(K, 1e-300))
        s = rs - K
        num = np.sinh(s) + K * np.cosh(s)
        dnum = np.cosh(s) + K * np.sinh(s)
        val = sigma_hat * num / rs
        dval = sigma_hat * (dnum / rs - num / rs ** 2)
    inside = r <= K
    return np.where(inside, sigma_hat, val), np.where(inside, 0.0, dval)


def sigma_profile(r, R: float, params: ModelParams, K: Optional[float] = None, r_star: Optional[float] = None):
    """Nutrient ``U(r, R)`` and its radial derivative.

    Returns a pair of floats for scalar ``r`` and a pair of arrays otherwise.
    ``K`` and ``r_star`` may be passed to skip the root solves.
    """
    r_arr = np.asarray(r, dtype=float)
    _check_domain(r_arr, R)
    r_arr = np.clip(r_arr, 0.0, R)
    r_star = solve_r_star(params) if r_star is None else r_star
    if R <= r_star:
        val, dval = _nonnecrotic_sigma(r_arr, R)
    else:
        K = solve_k_of_r(R, params, r_star) if K is None else K
        val, dval = _necrotic_sigma(r_arr, K, params.sigma_hat)
    # boundary value is exactly one on both branches
    val = np.where(r_arr == R, 1.0, val)
    if r_arr.ndim == 0:
        return float(val), float(dval)
    return val, dval


# ---------------------------------------------------------------------------
# Shell integrals of U in closed form
# ---------------------------------------------------------------------------

def _antideriv_eta2(eta, K, sigma_hat):
    s = eta - K
    return sigma_hat * ((eta * np.cosh(s) - np.sinh(s)) + K * (eta * np.sinh(s) - np.cosh(s)))


def _antideriv_eta1(eta, K, sigma_hat):
    s = eta - K
    return sigma_hat * (np.cosh(s) + K * np.sinh(s))


def mass_integral(r, R: float, K: float, sigma_hat: float):
    """``int_r^R U(eta, R) eta^2 d eta`` on the living shell (``K <= r``)."""
    return _antideriv_eta2(R, K, sigma_hat) - _antideriv_eta2(np.asarray(r, float), K, sigma_hat)


def first_moment_integral(r, R: float, K: float, sigma_hat: float):
    """``int_r^R U(eta, R) eta d eta`` on the living shell."""
    return _antideriv_eta1(R, K, sigma_hat) - _antideriv_eta1(np.asarray(r, float), K, sigma_hat)


# ---------------------------------------------------------------------------
# Pressure profile
# ---------------------------------------------------------------------------

def d_constant(R: float, K: float, params: ModelParams) -> float:
    """Shell constant D = -(1/3) a s~ K^3 - a int_K^R U eta^2."""
    a, st = params.a, params.sigma_tilde
    return -a * st * K ** 3 / 3.0 - a * float(mass_integral(K, R, K, params.sigma_hat))


def d_constant_by_matching(R: float, K: float, params: ModelParams) -> float:
    """D recovered from slope continuity at the interface, with the shell
    integral done by adaptive Gauss-Legendre quadrature instead of the
    antiderivative."""
    a, b, st = params.a, params.b, params.sigma_tilde
    U = lambda eta: _necrotic_sigma(np.asarray(eta), K, params.sigma_hat)[0] * eta ** 2
    M = adaptive_gauss(U, K, R, tol=1e-14)
    inner_slope = b * K / 3.0
    return K ** 2 * (inner_slope - (a * st + b) * K / 3.0) - a * M


def _shell_pressure(r, R, K, D, params):
    a, b, st, sh = params.a, params.b, params.sigma_tilde, params.sigma_hat
    M = mass_integral(r, R, K, sh)
    N = first_moment_integral(r, R, K, sh)
    val = D * (1.0 / R - 1.0 / r) - (a * st + b) * (R * R - r * r) / 6.0 - a * (M / r - N)
    dval = D / r ** 2 + (a * st + b) * r / 3.0 + a * M / r ** 2
    return val, dval


def pi_profile(r, R: float, params: ModelParams, K: Optional[float] = None, r_star: Optional[float] = None):
    """Pressure ``V(r, R)`` (zero on r = R) and its radial derivative, for R > R*."""
    r_arr = np.asarray(r, dtype=float)
    _check_domain(r_arr, R)
    r_arr = np.clip(r_arr, 0.0, R)
    r_star = solve_r_star(params) if r_star is None else r_star
    if R <= r_star:
        raise NoNecroticCoreError("closed-form pressure is only available for R > R*")
    K = solve_k_of_r(R, params, r_star) if K is None else K
    D = d_constant(R, K, params)
    vK, _ = _shell_pressure(K, R, K, D, params)
    C = float(vK) - params.b * K * K / 6.0
    with np.errstate(divide="ignore", invalid="ignore"):
        shell = np.where(r_arr >= K, r_arr, max(K, 1e-300))
        sv, sd = _shell_pressure(shell, R, K, D, params)
    inside = r_arr < K
    val = np.where(inside, C + params.b * r_arr ** 2 / 6.0, sv)
    dval = np.where(inside, params.b * r_arr / 3.0, sd)
    val = np.where(r_arr == R, 0.0, val)
    if r_arr.ndim == 0:
        return float(val), float(dval)
    return val, dval


def boundary_slope(R: float, params: ModelParams, r_star: Optional[float] = None) -> float:
    """``dV/dr(R, R)`` for ``R >= R*`` (at R* the core has zero radius)."""
    r_star = solve_r_star(params) if r_star is None else r_star
    if R < r_star:
        raise NoNecroticCoreError(f"R={R} below R*={r_star}")
    K = 0.0 if R == r_star else solve_k_of_r(R, params, r_star)
    D = d_constant(R, K, params)
    return D / R ** 2 + (params.a * params.sigma_tilde + params.b) * R / 3.0


def mass_balance_residual(R: float, K: float, params: ModelParams) -> float:
    """Relative residual of the stationary mass-balance equation."""
    a, b, st = params.a, params.b, params.sigma_tilde
    lhs = a * st * K ** 3 / 3.0 + a * float(mass_integral(K, R, K, params.sigma_hat))
    rhs = (a * st + b) * R ** 3 / 3.0
    return (lhs - rhs) / rhs


# ---------------------------------------------------------------------------
# Stationary state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialStationary:
    """The unique radial stationary tumor and its profiles."""

    params: ModelParams
    r_star: float
    r_s: float
    k_s: float
    d_const: float
    c_const: float

    def sigma(self, r):
        return sigma_profile(r, self.r_s, self.params, self.k_s, self.r_star)[0]

    def dsigma(self, r):
        return sigma_profile(r, self.r_s, self.params, self.k_s, self.r_star)[1]

    def pi0(self, r):
        return pi_profile(r, self.r_s, self.params, self.k_s, self.r_star)[0]

    def dpi(self, r):
        return pi_profile(r, self.r_s, self.params, self.k_s, self.r_star)[1]

    def pi(self, r, gamma: Optional[float] = None):
        """Full stationary pressure, ``gamma / R_s + V(r, R_s)``."""
        gamma = self.params.gamma if gamma is None else gamma
        if gamma is None:
            raise ValueError("surface tension gamma is required for the full pressure")
        return gamma / self.r_s + self.pi0(r)

    def d2pi(self, r):
        """Second derivative from the pressure equation, ``-g(sigma) - 2 pi'/r``."""
        return -np.asarray(self.params.g(self.sigma(r))) - 2.0 * self.dpi(r) / np.asarray(r, float)

    @property
    def dsigma_rs(self) -> float:
        return float(self.dsigma(self.r_s))

    def profile_table(self, n: int = 201) -> np.ndarray:
        """Columns r, sigma, dsigma, pi0, dpi0 on a uniform grid of [0, R_s]."""
        r = np.linspace(0.0, self.r_s, n)
        s, ds = sigma_profile(r, self.r_s, self.params, self.k_s, self.r_star)
        p, dp = pi_profile(r, self.r_s, self.params, self.k_s, self.r_star)
        return np.column_stack([r, s, ds, p, dp])


def solve_stationary_radius(params: ModelParams) -> RadialStationary:
    """Find R_s > R* with ``dV/dr(R_s, R_s) = 0`` and assemble the state."""
    r_star = solve_r_star(params)
    f = lambda R: boundary_slope(R, params, r_star)
    f_lo = f(r_star)
    hi = 2.0 * r_star
    for _ in range(60):
        if np.sign(f(hi)) != np.sign(f_lo):
            break
        hi *= 2.0
    else:
        raise SolverError("could not bracket the stationary radius")
    try:
        r_s = brentq(f, r_star, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=500)
    except (RuntimeError, ValueError) as exc:  # pragma: no cover - guarded by bracketing
        raise SolverError(f"stationary radius solve failed: {exc}") from exc
    k_s = solve_k_of_r(r_s, params, r_star)
    D = d_constant(r_s, k_s, params)
    vK, _ = _shell_pressure(k_s, r_s, k_s, D, params)
    C = float(vK) - params.b * k_s ** 2 / 6.0
    return RadialStationary(params, r_star, r_s, k_s, D, C)
