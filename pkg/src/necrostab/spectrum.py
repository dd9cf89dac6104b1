"""Linearized spectra, neutral surface tensions and the stability threshold."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional

import numpy as np

from .harmonics import HarmonicExpansion
from .modes import ModeSolution, solve_modes, v_mode_slope
from .radial import ModelParams, RadialStationary, solve_stationary_radius

DEFAULT_KMAX = 200
TAIL_MARGIN = 2.0
CRITICAL_BAND = 1e-9

STABLE = "stable-modulo-translations"
UNSTABLE = "unstable"
CRITICAL = "critical"


class InconclusiveThresholdWarning(UserWarning):
    """The asymptotic tail bound could not be certified below the running max."""


def _cubic(k: int) -> int:
    return k * (k - 1) * (k + 2)


def eigenvalue_ak(k: int, gamma: float, mode: ModeSolution, stat: RadialStationary,
                  params: Optional[ModelParams] = None) -> float:
    """Eigenvalue of the linearized operator on degree-k harmonics."""
    params = stat.params if params is None else params
    R = stat.r_s
    dv = v_mode_slope(k, mode, stat, params)
    return -gamma * _cubic(k) / (2 * R * R) - params.a * R * stat.dsigma_rs * dv + params.g1 * R


def gamma_k(k: int, mode: ModeSolution, stat: RadialStationary, params: Optional[ModelParams] = None) -> float:
    """Surface tension at which the degree-k eigenvalue vanishes (k >= 2)."""
    if k < 2:
        raise ValueError(f"neutral surface tension is defined for k >= 2, got k={k}")
    params = stat.params if params is None else params
    R = stat.r_s
    dv = v_mode_slope(k, mode, stat, params)
    return 2 * R ** 3 / _cubic(k) * (params.g1 - params.a * stat.dsigma_rs * dv)


def ak_from_gamma_k(k: int, gamma: float, gk: float, stat: RadialStationary) -> float:
    """Factored form -k(k-1)(k+2)(gamma - gamma_k) / (2 R_s^2)."""
    return -_cubic(k) * (gamma - gk) / (2 * stat.r_s ** 2)


def asymptotic_gamma_k(k: int, stat: RadialStationary, params: Optional[ModelParams] = None) -> float:
    params = stat.params if params is None else params
    return 2 * stat.r_s ** 3 * params.g1 / float(k) ** 3


@dataclass
class ModeTable:
    """Solved modes and derived per-degree quantities for ``k = 0..kmax``."""

    stat: RadialStationary
    kmax: int
    modes: list[ModeSolution]
    dv: np.ndarray
    gamma_values: np.ndarray  # index k; NaN for k < 2

    @classmethod
    def build(cls, stat: RadialStationary, kmax: int) -> "ModeTable":
        modes = solve_modes(stat, range(kmax + 1))
        dv = np.array([v_mode_slope(m.k, m, stat) for m in modes])
        gk = np.full(kmax + 1, np.nan)
        for m in modes[2:]:
            gk[m.k] = gamma_k(m.k, m, stat)
        return cls(stat, kmax, modes, dv, gk)

    def a_values(self, gamma: float) -> np.ndarray:
        p = self.stat.params
        R = self.stat.r_s
        ks = np.arange(self.kmax + 1)
        return -gamma * ks * (ks - 1) * (ks + 2) / (2 * R * R) - p.a * R * self.stat.dsigma_rs * self.dv + p.g1 * R


def gamma_star(stat: RadialStationary, params: Optional[ModelParams] = None, kmax: int = DEFAULT_KMAX,
               table: Optional[ModeTable] = None) -> tuple[float, int]:
    """Largest neutral surface tension over k = 2..kmax, with a tail certificate.

    The envelope ``margin * 2 R_s^3 g(1) k^-3`` at the last computed degree
    must sit below the returned maximum; otherwise kmax is doubled (at most
    twice) and an :class:`InconclusiveThresholdWarning` is issued if the
    bound still fails.
    """
    best, arg, _, _ = _gamma_star_with_table(stat, kmax, table)
    return best, arg


def _gamma_star_with_table(stat, kmax, table=None):
    if kmax < 2:
        raise ValueError("kmax must be at least 2")
    for attempt in range(3):
        if table is None or table.kmax < kmax:
            table = ModeTable.build(stat, kmax)
        gk = table.gamma_values[2:kmax + 1]
        arg = int(np.argmax(gk)) + 2
        best = float(gk[arg - 2])
        tail = TAIL_MARGIN * asymptotic_gamma_k(kmax, stat)
        if tail < best:
            return best, arg, table, kmax
        if attempt < 2:
            kmax *= 2
    warnings.warn(f"gamma* tail not certified up to kmax={kmax}", InconclusiveThresholdWarning)
    return best, arg, table, kmax


def classify(gamma: float, gstar: float) -> str:
    if abs(gamma - gstar) <= CRITICAL_BAND * gstar:
        return CRITICAL
    return STABLE if gamma > gstar else UNSTABLE


@dataclass
class SpectrumReport:
    params: ModelParams
    stat: RadialStationary
    gamma: float
    kmax: int
    a_values: list[float]
    gamma_values: list[float]  # k = 2..kmax
    gamma_star: float
    argmax_k: int
    classification: str
    kernel_degrees: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "r_star": self.stat.r_star,
            "r_s": self.stat.r_s,
            "k_s": self.stat.k_s,
            "kmax": self.kmax,
            "gamma": self.gamma,
            "a": list(self.a_values),
            "gamma_k": list(self.gamma_values),
            "gamma_star": self.gamma_star,
            "argmax_k": self.argmax_k,
            "classification": self.classification,
            "kernel_degrees": list(self.kernel_degrees),
        }

    def table_rows(self):
        for k, a in enumerate(self.a_values):
            gk = self.gamma_values[k - 2] if k >= 2 else float("nan")
            yield k, a, gk


def kernel_tolerance(a0: float) -> float:
    return 1e-7 * max(1.0, abs(a0))


def classify_stability(params: ModelParams, gamma: Optional[float] = None, kmax: int = DEFAULT_KMAX,
                       stat: Optional[RadialStationary] = None,
                       table: Optional[ModeTable] = None) -> SpectrumReport:
    """Full spectrum report at surface tension ``gamma``."""
    gamma = params.gamma if gamma is None else gamma
    if gamma is None or not gamma > 0:
        raise ValueError("a positive surface tension gamma is required")
    stat = solve_stationary_radius(params) if stat is None else stat
    gstar, arg, table, kmax = _gamma_star_with_table(stat, kmax, table)
    a = table.a_values(gamma)[: kmax + 1]
    tol = kernel_tolerance(a[0])
    kernel = [k for k, v in enumerate(a) if abs(v) <= tol]
    return SpectrumReport(
        params=params,
        stat=stat,
        gamma=gamma,
        kmax=kmax,
        a_values=[float(v) for v in a],
        gamma_values=[float(v) for v in table.gamma_values[2:kmax + 1]],
        gamma_star=gstar,
        argmax_k=arg,
        classification=classify(gamma, gstar),
        kernel_degrees=kernel,
    )


def apply_linearized_operator(xi: HarmonicExpansion, gamma: float, stat: RadialStationary,
                              params: Optional[ModelParams] = None) -> HarmonicExpansion:
    """Multiply each coefficient of ``xi`` by the eigenvalue of its degree."""
    params = stat.params if params is None else params
    degrees = xi.degrees()
    if not degrees:
        return HarmonicExpansion({}, xi.max_degree)
    modes = {m.k: m for m in solve_modes(stat, degrees)}
    mult = {k: eigenvalue_ak(k, gamma, modes[k], stat, params) for k in degrees}
    return xi.map_degrees(mult)


# ---------------------------------------------------------------------------
# Hele-Shaw and Dirichlet-Neumann multipliers
# ---------------------------------------------------------------------------

def heleshaw_mu(k: int, n: int) -> Fraction:
    """Hele-Shaw linearized eigenvalue on degree-k harmonics of S^(n-1)."""
    if k < 0 or n < 2:
        raise ValueError("need k >= 0 and n >= 2")
    return Fraction(-k * (k - 1) * (k + n - 1), n - 1)


def heleshaw_composition(k: int, n: int) -> Fraction:
    """Multiplier of (1/(n-1)) Laplace-Beltrami * DN + DN on the unit sphere.

    On degree k the Dirichlet-Neumann operator of the unit ball is k and the
    Laplace-Beltrami operator of S^(n-1) is -k(k+n-2).
    """
    dn = Fraction(k)
    lb = Fraction(-k * (k + n - 2))
    return lb * dn / (n - 1) + dn


@dataclass(frozen=True)
class HeleShawSpectrum:
    n: int
    mu_values: tuple[Fraction, ...]

    @property
    def kernel_dim(self) -> int:
        return sum(harmonic_multiplicity(k, self.n) for k, mu in enumerate(self.mu_values) if mu == 0)


def harmonic_multiplicity(k: int, n: int) -> int:
    """Dimension of the degree-k spherical harmonics on S^(n-1)."""
    if k == 0:
        return 1
    return comb(k + n - 1, n - 1) - comb(k + n - 3, n - 1)


def heleshaw_spectrum(n: int, kmax: int) -> HeleShawSpectrum:
    mus = []
    for k in range(kmax + 1):
        mu = heleshaw_mu(k, n)
        if mu != heleshaw_composition(k, n):
            raise ArithmeticError(f"Hele-Shaw multiplier mismatch at k={k}, n={n}")
        mus.append(mu)
    return HeleShawSpectrum(n, tuple(mus))


def dn_annulus_multiplier(k: int, K: float, R: float) -> float:
    """Degree-k multiplier of the interface Dirichlet-Neumann sum on r = K.

    Harmonic data on r = K, zero on r = R, matched against the interior
    harmonic extension into r < K.
    """
    if not 0 < K < R:
        raise ValueError(f"need 0 < K < R, got K={K}, R={R}")
    q = (K / R) ** (2 * k + 1)
    return (2 * k + 1) / ((1.0 - q) * K)
