"""Real orthonormal spherical harmonics on the unit sphere.

Indexing follows the ``(k, l)`` convention with ``l = 1..2k+1``.  Inside a
degree the orders are laid out as::

    l = 1        -> m = 0 (zonal)
    l = 2m       -> sqrt(2) * N_km * P_k^m(cos theta) * cos(m phi)
    l = 2m + 1   -> sqrt(2) * N_km * P_k^m(cos theta) * sin(m phi)

No Condon-Shortley phase is applied.  Every operator in this package is
diagonal in the degree, so any orthonormal basis of a degree gives the same
results; this one is simply fixed for determinism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np


class HarmonicIndexError(ValueError):
    """Raised for an index outside ``0 <= k``, ``1 <= l <= 2k+1``."""


class QuadratureExactnessError(ValueError):
    """Raised when a quadrature rule cannot resolve the requested degree."""


@dataclass(frozen=True, order=True)
class HarmonicIndex:
    k: int
    l: int

    def __post_init__(self) -> None:
        if self.k < 0 or not 1 <= self.l <= 2 * self.k + 1:
            raise HarmonicIndexError(f"invalid harmonic index (k={self.k}, l={self.l})")

    @property
    def order(self) -> tuple[int, str]:
        """Return ``(m, kind)`` with kind one of ``'zonal'``, ``'cos'``, ``'sin'``."""
        if self.l == 1:
            return 0, "zonal"
        m = self.l // 2
        return m, ("cos" if self.l % 2 == 0 else "sin")


def indices(kmax: int) -> Iterator[HarmonicIndex]:
    """All indices with degree ``0..kmax`` in (k, l) lexicographic order."""
    for k in range(kmax + 1):
        for l in range(1, 2 * k + 2):
            yield HarmonicIndex(k, l)


def _as_index(idx) -> HarmonicIndex:
    if isinstance(idx, HarmonicIndex):
        return idx
    k, l = idx
    return HarmonicIndex(int(k), int(l))


# ---------------------------------------------------------------------------
# Normalized associated Legendre functions
# ---------------------------------------------------------------------------

def normalized_legendre(kmax: int, x) -> np.ndarray:
    """Return ``P[k, m]`` = N_km P_k^m(x) for all ``0 <= m <= k <= kmax``.

    ``N_km = sqrt((2k+1)/(4 pi) (k-m)!/(k+m)!)``, so that ``P[k, 0]`` is the
    zonal harmonic itself.  Computed by the stable upward recurrence in the
    degree with the normalization carried along, which keeps every entry O(1)
    for degrees in the hundreds.  Trailing axes follow ``x``.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((kmax + 1, kmax + 1) + x.shape)
    out[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, kmax + 1):
        out[m, m] = math.sqrt((2 * m + 1) / (2 * m)) * s * out[m - 1, m - 1]
    for m in range(kmax):
        out[m + 1, m] = math.sqrt(2 * m + 3) * x * out[m, m]
    for m in range(kmax + 1):
        for k in range(m + 2, kmax + 1):
            a_k = math.sqrt((4 * k * k - 1) / (k * k - m * m))
            a_km1 = math.sqrt((4 * (k - 1) ** 2 - 1) / ((k - 1) ** 2 - m * m))
            out[k, m] = a_k * (x * out[k - 1, m] - out[k - 2, m] / a_km1)
    return out


def _theta_derivative(P: np.ndarray, k: int, m: int, x, s) -> np.ndarray:
    # d/dtheta of N_km P_k^m(cos theta); needs sin(theta) != 0
    lower = P[k - 1, m] if k - 1 >= m else 0.0
    c = math.sqrt((2 * k + 1) * (k + m) * (k - m) / (2 * k - 1)) if k > m else 0.0
    return (k * x * P[k, m] - c * lower) / s


def eval_ylm(idx, theta, phi):
    """Value of the real orthonormal harmonic ``Y_kl`` at ``(theta, phi)``.

    ``theta`` is the polar angle measured from the north pole, ``phi`` the
    azimuth.  Arrays broadcast; a scalar input gives a float back.
    """
    idx = _as_index(idx)
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    P = normalized_legendre(idx.k, np.cos(theta))
    m, kind = idx.order
    if kind == "zonal":
        val = P[idx.k, 0]
    elif kind == "cos":
        val = math.sqrt(2.0) * P[idx.k, m] * np.cos(m * phi)
    else:
        val = math.sqrt(2.0) * P[idx.k, m] * np.sin(m * phi)
    val = np.asarray(val, dtype=float)
    return float(val) if val.ndim == 0 else val


def eval_all(kmax: int, theta, phi) -> dict[HarmonicIndex, np.ndarray]:
    """Evaluate every harmonic up to ``kmax`` at once (shared recurrence)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    P = normalized_legendre(kmax, np.cos(theta))
    out = {}
    for k in range(kmax + 1):
        out[HarmonicIndex(k, 1)] = P[k, 0]
        for m in range(1, k + 1):
            out[HarmonicIndex(k, 2 * m)] = math.sqrt(2.0) * P[k, m] * np.cos(m * phi)
            out[HarmonicIndex(k, 2 * m + 1)] = math.sqrt(2.0) * P[k, m] * np.sin(m * phi)
    return out


def ylm_gradient(idx, theta, phi) -> tuple[np.ndarray, np.ndarray]:
    """Surface gradient components ``(d/dtheta, (1/sin theta) d/dphi)`` of Y_kl.

    Undefined at the poles; quadrature nodes never land there.
    """
    idx = _as_index(idx)
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    x, s = np.cos(theta), np.sin(theta)
    P = normalized_legendre(idx.k, x)
    m, kind = idx.order
    if kind == "zonal":
        return _theta_derivative(P, idx.k, 0, x, s), np.zeros_like(theta)
    dP = _theta_derivative(P, idx.k, m, x, s)
    c = math.sqrt(2.0)
    if kind == "cos":
        return c * dP * np.cos(m * phi), -c * m * P[idx.k, m] * np.sin(m * phi) / s
    return c * dP * np.sin(m * phi), c * m * P[idx.k, m] * np.cos(m * phi) / s


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Product rule: Gauss-Legendre in cos(theta) times trapezoid in phi.

    ``degree`` is the largest total degree of a band-limited integrand the
    rule integrates exactly.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    degree: int

    @classmethod
    def product(cls, degree: int) -> "QuadratureRule":
        n_theta = degree // 2 + 1
        n_phi = degree + 2
        x, w = np.polynomial.legendre.leggauss(n_theta)
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        theta = np.arccos(x)
        T, F = np.meshgrid(theta, phi, indexing="ij")
        W = np.outer(w, np.full(n_phi, 2.0 * np.pi / n_phi))
        return cls(T.ravel(), F.ravel(), W.ravel(), degree)

    @property
    def nodes(self) -> np.ndarray:
        return np.column_stack([self.theta, self.phi])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, float)))


# ---------------------------------------------------------------------------
# Expansions
# ---------------------------------------------------------------------------

@dataclass
class HarmonicExpansion:
    """Finite real expansion ``sum c_kl Y_kl``."""

    coefficients: dict[HarmonicIndex, float] = field(default_factory=dict)
    max_degree: int = 0

    def __post_init__(self) -> None:
        coeffs = {}
        for key, val in self.coefficients.items():
            idx = _as_index(key)
            val = float(val)
            if not math.isfinite(val):
                raise ValueError(f"non-finite coefficient at {idx}")
            coeffs[idx] = val
        self.coefficients = coeffs
        if coeffs:
            self.max_degree = max(self.max_degree, max(i.k for i in coeffs))

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[int, int, float]]) -> "HarmonicExpansion":
        coeffs: dict[HarmonicIndex, float] = {}
        for k, l, c in triples:
            idx = HarmonicIndex(int(k), int(l))
            coeffs[idx] = coeffs.get(idx, 0.0) + float(c)
        return cls(coeffs)

    def __getitem__(self, idx) -> float:
        return self.coefficients.get(_as_index(idx), 0.0)

    def degrees(self) -> list[int]:
        return sorted({i.k for i in self.coefficients})

    def items(self):
        return sorted(self.coefficients.items())

    def scaled(self, factor: float) -> "HarmonicExpansion":
        return HarmonicExpansion({i: factor * c for i, c in self.coefficients.items()}, self.max_degree)

    def map_degrees(self, multiplier: Callable[[int], float] | Mapping[int, float]) -> "HarmonicExpansion":
        """Apply a degree-diagonal multiplier ``c_kl -> m_k c_kl``."""
        get = multiplier.__getitem__ if isinstance(multiplier, Mapping) else multiplier
        return HarmonicExpansion({i: get(i.k) * c for i, c in self.coefficients.items()}, self.max_degree)

    def __add__(self, other: "HarmonicExpansion") -> "HarmonicExpansion":
        out = dict(self.coefficients)
        for i, c in other.coefficients.items():
            out[i] = out.get(i, 0.0) + c
        return HarmonicExpansion(out, max(self.max_degree, other.max_degree))


def expand(f: Callable, rule: QuadratureRule, kmax: int) -> HarmonicExpansion:
    """Project ``f(theta, phi)`` onto all harmonics of degree ``<= kmax``."""
    if 2 * kmax > rule.degree:
        raise QuadratureExactnessError(
            f"rule exact to degree {rule.degree}, need {2 * kmax} for kmax={kmax}"
        )
    values = np.asarray(f(rule.theta, rule.phi), dtype=float) * np.ones_like(rule.theta)
    basis = eval_all(kmax, rule.theta, rule.phi)
    wf = rule.weights * values
    return HarmonicExpansion({i: float(np.dot(wf, y)) for i, y in basis.items()}, kmax)


def synthesize(expansion: HarmonicExpansion, theta, phi):
    """Evaluate ``sum c_kl Y_kl`` at the given directions."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    out = np.zeros(theta.shape)
    if expansion.coefficients:
        basis = eval_all(max(i.k for i in expansion.coefficients), theta, phi)
        for idx, c in expansion.items():
            out = out + c * basis[idx]
    return float(out) if out.ndim == 0 else out


def dirichlet_energy(idx, rule: QuadratureRule) -> float:
    """Quadrature value of the integral of ``|grad_omega Y_kl|^2`` over the sphere.

    For an exact-enough rule this is the Laplace-Beltrami eigenvalue k(k+1).
    """
    idx = _as_index(idx)
    if 2 * idx.k > rule.degree:
        raise QuadratureExactnessError(f"rule exact to degree {rule.degree}, need {2 * idx.k}")
    gt, gp = ylm_gradient(idx, rule.theta, rule.phi)
    return rule.integrate(gt * gt + gp * gp)


def gram_matrix(kmax: int, rule: QuadratureRule) -> np.ndarray:
    basis = np.array([y for _, y in sorted(eval_all(kmax, rule.theta, rule.phi).items())])
    return (basis * rule.weights) @ basis.T
