"""Degree-k radial problems of the linearized tumor equations.

For each degree k the nutrient perturbation has radial factor u_k solving

    u'' + 2(k+1)/r u' = u   on (K_s, R_s),   u(K_s) = 0,  u(R_s) = 1,

which is solved through z_k(r) = u_k(r) (r/R_s)^(k+1), obeying
z'' = (k(k+1)/r^2 + 1) z with the same boundary values.  The problem is
linear, so one outward shot with unit slope followed by rescaling hits the
far boundary value exactly.  All requested degrees are integrated together
as one vector system; the state is renormalized per degree between segments
so that (R_s/K_s)^(k+1) growth never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import spherical_in, spherical_kn

from .radial import ModelParams, RadialStationary, SolverError

RTOL = 1e-13
ATOL = 1e-300
SEGMENT_LOG_GROWTH = 200.0
DUAL_FORMULA_RTOL = 1e-7


class ModeConsistencyError(RuntimeError):
    """The two pressure-slope formulas disagree beyond tolerance."""


@dataclass
class _Segment:
    lo: float
    hi: float
    sol: Callable
    log_offset: np.ndarray


@dataclass
class _ShotBundle:
    degrees: np.ndarray
    K: float
    R: float
    segments: list[_Segment]
    log_end: np.ndarray
    z_end: np.ndarray
    dz_end: np.ndarray
    j_end: np.ndarray

    def _locate(self, r: np.ndarray) -> np.ndarray:
        edges = np.array([s.hi for s in self.segments[:-1]])
        return np.searchsorted(edges, r, side="left")

    def evaluate(self, j: int, r) -> tuple[np.ndarray, np.ndarray]:
        """Return true (z, z') for column ``j`` at radii ``r``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        n = len(self.degrees)
        z = np.empty_like(r)
        dz = np.empty_like(r)
        seg_of = self._locate(r)
        for si in np.unique(seg_of):
            seg = self.segments[si]
            mask = seg_of == si
            y = seg.sol(np.clip(r[mask], seg.lo, seg.hi))
            factor = math.exp(seg.log_offset[j] - self.log_end[j]) / self.z_end[j]
            z[mask] = y[j] * factor
            dz[mask] = y[n + j] * factor
        return z, dz

    def evaluate_all(self, r) -> tuple[np.ndarray, np.ndarray]:
        """(z, z') for every column at once, shape ``(n_degrees, len(r))``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        n = len(self.degrees)
        z = np.empty((n, r.size))
        dz = np.empty((n, r.size))
        seg_of = self._locate(r)
        for si in np.unique(seg_of):
            seg = self.segments[si]
            mask = seg_of == si
            y = seg.sol(np.clip(r[mask], seg.lo, seg.hi))
            factor = (np.exp(seg.log_offset - self.log_end) / self.z_end)[:, None]
            z[:, mask] = y[:n] * factor
            dz[:, mask] = y[n:2 * n] * factor
        return z, dz

    def log_norm(self, j: int) -> float:
        # log of (true z) / (segment-0 z) i.e. -(log_end + log z_end)
        return -(self.log_end[j] + math.log(self.z_end[j]))


def _shoot(degrees: Sequence[int], K: float, R: float, rtol: float = RTOL) -> _ShotBundle:
    degrees = np.asarray(sorted(set(int(k) for k in degrees)), dtype=int)
    if degrees.size == 0 or degrees[0] < 0:
        raise ValueError("degrees must be nonnegative")
    if not 0 < K < R:
        raise ValueError(f"need 0 < K < R, got K={K}, R={R}")
    n = degrees.size
    lam = degrees * (degrees + 1.0)
    power = degrees + 1.0

    def rhs(r, y):
        z = y[:n]
        return np.concatenate([y[n:2 * n], (lam / (r * r) + 1.0) * z, z * np.exp(power * math.log(r / R))])

    growth = (degrees[-1] + 1) * math.log(R / K) + (R - K)
    nseg = max(1, int(math.ceil(growth / SEGMENT_LOG_GROWTH)))
    edges = np.linspace(K, R, nseg + 1)
    edges[-1] = R
    y = np.concatenate([np.zeros(n), np.ones(n), np.zeros(n)])
    log_scale = np.zeros(n)
    segments = []
    for i in range(nseg):
        lo, hi = edges[i], edges[i + 1]
        first = min((hi - lo) * 1e-6, 1e-3 / (1.0 + degrees[-1]))
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=rtol, atol=ATOL,
                        dense_output=True, first_step=first)
        if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
            raise SolverError(f"mode shooting failed on [{lo}, {hi}]: {sol.message}")
        segments.append(_Segment(lo, hi, sol.sol, log_scale.copy()))
        y = sol.y[:, -1].copy()
        if i < nseg - 1:
            scale = np.maximum(np.abs(y[:n]), np.abs(y[n:2 * n]))
            y /= np.tile(scale, 3)
            log_scale += np.log(scale)
    z_end, dz_end, j_end = y[:n], y[n:2 * n], y[2 * n:]
    if np.any(z_end <= 0):
        raise SolverError("shot did not reach a positive far-boundary value")
    return _ShotBundle(degrees, K, R, segments, log_scale, z_end, dz_end, j_end)


@dataclass(frozen=True)
class ModeSolution:
    """Solved degree-k nutrient mode on the living shell ``[K_s, R_s]``."""

    k: int
    du_at_k: float
    du_at_rs: float
    dv_at_rs: float
    dv_at_rs_rewritten: float
    flux_integral: float
    k_s: float
    r_s: float
    _bundle: _ShotBundle = field(repr=False, compare=False)
    _col: int = field(repr=False, compare=False)

    def _eval(self, r):
        scalar = np.ndim(r) == 0
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        z, dz = self._bundle.evaluate(self._col, r_arr)
        return scalar, r_arr, z, dz

    def u_profile(self, r):
        scalar, r_arr, z, _ = self._eval(r)
        u = z * np.exp((self.k + 1) * np.log(self.r_s / r_arr))
        return float(u[0]) if scalar else u

    def du_profile(self, r):
        scalar, r_arr, z, dz = self._eval(r)
        du = (dz - (self.k + 1) * z / r_arr) * np.exp((self.k + 1) * np.log(self.r_s / r_arr))
        return float(du[0]) if scalar else du

    def z_profile(self, r):
        scalar, _, z, _ = self._eval(r)
        return float(z[0]) if scalar else z

    def flux_identity_gap(self) -> float:
        """Relative gap in u'(R) = u'(K)(K/R)^(2k+2) + int u (tau/R)^(2k+2)."""
        k = self.k
        lhs = self.du_at_rs
        rhs = self.du_at_k * (self.k_s / self.r_s) ** (2 * (k + 1)) + self.flux_integral
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs))

    def table(self, n: int = 201) -> np.ndarray:
        """Columns r, u_k, z_k on a uniform grid of the shell."""
        r = np.linspace(self.k_s, self.r_s, n)
        return np.column_stack([r, self.u_profile(r), self.z_profile(r)])


def _build_modes(bundle: _ShotBundle, stat: RadialStationary) -> list[ModeSolution]:
    p = stat.params
    K, R = stat.k_s, stat.r_s
    jump = (p.sigma_hat - p.sigma_tilde) / p.sigma_hat
    out = []
    for j, k in enumerate(bundle.degrees):
        k = int(k)
        log_norm = bundle.log_norm(j)
        lr = math.log(R / K)
        du_k = math.exp(log_norm + (k + 1) * lr)
        inner_term = math.exp(log_norm - (k + 1) * lr)  # u'(K) (K/R)^(2k+2)
        flux = bundle.j_end[j] / bundle.z_end[j]
        du_r = bundle.dz_end[j] / bundle.z_end[j] - (k + 1) / R
        dv = jump * inner_term + flux
        dv_alt = jump * du_r + (p.sigma_tilde / p.sigma_hat) * flux
        out.append(ModeSolution(k, du_k, du_r, dv, dv_alt, flux, K, R, bundle, j))
    return out


def solve_modes(stat: RadialStationary, degrees: Sequence[int]) -> list[ModeSolution]:
    """Solve the nutrient mode problem for several degrees in one integration.

    Returned in increasing degree order.
    """
    bundle = _shoot(degrees, stat.k_s, stat.r_s)
    return _build_modes(bundle, stat)


def mode_profiles(mode_list: Sequence[ModeSolution], r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrays ``(u, u', z)`` with one row per mode, in the order given.

    Modes that came from the same :func:`solve_modes` call share one dense
    output and are evaluated together.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    u = np.empty((len(mode_list), r.size))
    du = np.empty_like(u)
    zz = np.empty_like(u)
    cache = {}
    for i, m in enumerate(mode_list):
        key = id(m._bundle)
        if key not in cache:
            cache[key] = m._bundle.evaluate_all(r)
        z, dz = cache[key][0][m._col], cache[key][1][m._col]
        scale = np.exp((m.k + 1) * np.log(m.r_s / r))
        u[i] = z * scale
        du[i] = (dz - (m.k + 1) * z / r) * scale
        zz[i] = z
    return u, du, zz


def solve_u_mode(k: int, stat: RadialStationary) -> ModeSolution:
    """Nutrient mode of a single degree ``k``."""
    return solve_modes(stat, [k])[0]


def u1_closed_form(r, stat: RadialStationary):
    """Degree-one mode R_s sigma'(r) / (r sigma'(R_s))."""
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = stat.r_s * stat.dsigma(r) / (r * stat.dsigma_rs)
    return float(val) if np.ndim(val) == 0 else val


def v_mode_slope(k: int, mode: ModeSolution, stat: RadialStationary, params: ModelParams | None = None) -> float:
    """Outer-boundary slope of the degree-k pressure mode.

    Both the interface form and the outer-slope rewrite are evaluated; a
    relative disagreement above 1e-7 raises :class:`ModeConsistencyError`.
    """
    if mode.k != k:
        raise ValueError(f"mode is for degree {mode.k}, not {k}")
    params = stat.params if params is None else params
    jump = (params.sigma_hat - params.sigma_tilde) / params.sigma_hat
    first = jump * mode.du_at_k * (stat.k_s / stat.r_s) ** (2 * (k + 1)) + mode.flux_integral
    second = jump * mode.du_at_rs + (params.sigma_tilde / params.sigma_hat) * mode.flux_integral
    gap = abs(first - second) / max(abs(first), abs(second))
    if gap > DUAL_FORMULA_RTOL:
        raise ModeConsistencyError(f"degree {k}: slope formulas differ by {gap:.3e} (relative)")
    return first


def v1_closed_form(r, stat: RadialStationary, params: ModelParams | None = None):
    """Degree-one pressure mode -R_s pi_s'(r) / (a r sigma_s'(R_s))."""
    params = stat.params if params is None else params
    r = np.asarray(r, dtype=float)
    val = -stat.r_s * stat.dpi(r) / (params.a * r * stat.dsigma_rs)
    return float(val) if np.ndim(val) == 0 else val


def v1_closed_form_slope(r, stat: RadialStationary, params: ModelParams | None = None):
    """Derivative of :func:`v1_closed_form`, using pi'' = -g(sigma) - 2 pi'/r."""
    params = stat.params if params is None else params
    r = np.asarray(r, dtype=float)
    g = np.asarray(params.g(stat.sigma(r)))
    val = stat.r_s / (params.a * stat.dsigma_rs) * (3 * stat.dpi(r) / r ** 2 + g / r)
    return float(val) if np.ndim(val) == 0 else val


def v_profile(mode: ModeSolution, stat: RadialStationary, params: ModelParams | None = None):
    """Pressure mode profile by one outward integration from the interface.

    The bounded core solution is constant, so the slope just outside the
    interface is the jump term alone; the constant is fixed afterwards by
    v(R_s) = 0.  Returns a callable valid on ``[0, R_s]``.
    """
    params = stat.params if params is None else params
    k = mode.k
    K, R = stat.k_s, stat.r_s
    slope0 = (params.sigma_hat - params.sigma_tilde) / params.sigma_hat * mode.du_at_k

    def rhs(r, y):
        return [y[1], mode.u_profile(r) - 2.0 * (k + 1) * y[1] / r]

    sol = solve_ivp(rhs, (K, R), [0.0, slope0], method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    if not sol.success:
        raise SolverError(f"pressure mode integration failed for degree {k}: {sol.message}")
    shift = sol.y[0, -1]

    def profile(r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.full(r_arr.shape, -shift)
        shell = r_arr >= K
        if np.any(shell):
            out[shell] = sol.sol(np.clip(r_arr[shell], K, R))[0] - shift
        return float(out[0]) if np.ndim(r) == 0 else out

    def slope(r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros(r_arr.shape)
        shell = r_arr >= K
        if np.any(shell):
            out[shell] = sol.sol(np.clip(r_arr[shell], K, R))[1]
        return float(out[0]) if np.ndim(r) == 0 else out

    profile.slope = slope
    return profile


def bessel_mode(k: int, stat: RadialStationary):
    """Closed-form mode through modified spherical Bessel functions.

    Returns ``(u, du)`` callables.  The cross combination loses accuracy
    quickly with k, so this is only offered for ``k <= 30`` as a check.
    """
    if k > 30:
        raise ValueError("Bessel closed form is limited to k <= 30")
    K, R = stat.k_s, stat.r_s
    iK, kK = spherical_in(k, K), spherical_kn(k, K)

    def zeta(r):
        return r * (spherical_in(k, r) * kK - spherical_kn(k, r) * iK)

    def dzeta(r):
        return (spherical_in(k, r) * kK - spherical_kn(k, r) * iK) + r * (
            spherical_in(k, r, derivative=True) * kK - spherical_kn(k, r, derivative=True) * iK
        )

    norm = zeta(R)

    def u(r):
        r = np.asarray(r, dtype=float)
        return zeta(r) / norm * (R / r) ** (k + 1)

    def du(r):
        r = np.asarray(r, dtype=float)
        return (dzeta(r) - (k + 1) * zeta(r) / r) / norm * (R / r) ** (k + 1)

    return u, du


@dataclass(frozen=True)
class ModeFields:
    """Radial factors of the degree-k perturbation fields for boundary amplitude c."""

    k: int
    c: float
    zeta: float
    u_radial: Callable = field(repr=False)
    v_radial: Callable = field(repr=False)


def mode_fields(k: int, c: float, mode: ModeSolution, stat: RadialStationary,
                params: ModelParams | None = None, gamma: float | None = None) -> ModeFields:
    """Nutrient and pressure perturbation factors and the interface response.

    The nutrient boundary value is -R_s sigma_s'(R_s) c, the first-order
    change of sigma_s along the displaced boundary; the pressure term uses
    the same factor, which keeps the interface flux jump consistent.
    """
    params = stat.params if params is None else params
    gamma = params.gamma if gamma is None else gamma
    if gamma is None:
        raise ValueError("gamma is required for the pressure field")
    K, R = stat.k_s, stat.r_s
    amp = R * stat.dsigma_rs * c
    vbar = v_profile(mode, stat, params) if c != 0 else None
    tension = gamma * (k - 1) * (k + 2) / (2.0 * R)

    def u_radial(r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros(r_arr.shape)
        shell = r_arr > K
        if c != 0 and np.any(shell):
            rs = r_arr[shell]
            out[shell] = -amp * (rs / R) ** k * mode.u_profile(rs)
        return float(out[0]) if np.ndim(r) == 0 else out

    def v_radial(r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        if c == 0:
            out = np.zeros(r_arr.shape)
        else:
            out = (tension * c + params.a * amp * vbar(r_arr)) * (r_arr / R) ** k
        return float(out[0]) if np.ndim(r) == 0 else out

    zeta = amp * (K / R) ** k * mode.du_at_k / (params.sigma_hat * K)
    return ModeFields(k, c, zeta, u_radial, v_radial)
