"""End-to-end check suite for one parameter set.

Every check records the measured quantity, the tolerance it is held to and
a verdict.  Solver failures inside a check are recorded as failures with the
exception text; the suite itself never raises.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import dynamics, harmonics, modes, radial, spectrum

THREADS_ENV = "NECROSTAB_THREADS"

DEFAULT_TOLERANCES = {
    "orthonormality": 1e-9,
    "dirichlet_energy": 1e-8,
    "root_residual": 1e-12,
    "interface": 1e-10,
    "stationary_slope": 1e-10,
    "pressure_curvature": 1e-8,
    "d_constant": 1e-10,
    "u1_closed_form": 1e-8,
    "v1_slope": 1e-7,
    "dual_formula": 1e-7,
    "flux_identity": 1e-8,
    "translation_kernel": 1e-7,
    "gamma_asymptotics": 0.05,
    "velocity_consistency": 1e-9,
    "radial_linearization": 1e-4,
    "toy_limit": 1e-8,
}


@dataclass
class CheckRecord:
    name: str
    group: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.group:<16} {self.name:<28} measured={self.measured:.3e} tol={self.tolerance:.1e} {self.detail}".rstrip()


@dataclass
class VerifyReport:
    params: dict
    records: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {"params": self.params, "passed": self.passed, "checks": [asdict(r) for r in self.records]}

    def lines(self) -> list[str]:
        out = [r.line() for r in self.records]
        out.append(f"overall: {'PASS' if self.passed else 'FAIL'} ({sum(r.passed for r in self.records)}/{len(self.records)})")
        return out


class _Context:
    """Lazily shared heavy objects (stationary state, mode table)."""

    def __init__(self, params: radial.ModelParams, kmax: int):
        self.params = params
        self.kmax = kmax
        self._stat = None
        self._table = None
        self._gstar = None

    @property
    def stat(self) -> radial.RadialStationary:
        if self._stat is None:
            self._stat = radial.solve_stationary_radius(self.params)
        return self._stat

    @property
    def table(self) -> spectrum.ModeTable:
        if self._table is None:
            self._table = spectrum.ModeTable.build(self.stat, self.kmax)
        return self._table

    @property
    def gstar(self) -> tuple[float, int]:
        if self._gstar is None:
            self._gstar = spectrum.gamma_star(self.stat, kmax=self.kmax, table=self.table)
        return self._gstar


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# each check returns (measured, passes, detail); the tolerance is looked up by key
def _orthonormality(ctx, tol):
    rule = harmonics.QuadratureRule.product(22)
    G = harmonics.gram_matrix(10, rule)
    err = float(np.max(np.abs(G - np.eye(len(G)))))
    return err, err <= tol, "degrees 0..10"


def _dirichlet(ctx, tol):
    rule = harmonics.QuadratureRule.product(24)
    err = max(abs(harmonics.dirichlet_energy(i, rule) - i.k * (i.k + 1)) for i in harmonics.indices(10))
    return err, err <= tol, "degrees 0..10"


def _root_residuals(ctx, tol):
    p, st = ctx.params, ctx.stat
    r1 = abs(math.sinh(st.r_star) / st.r_star - 1 / p.sigma_hat) * p.sigma_hat
    r2 = abs(radial.k_equation_residual(st.k_s, st.r_s, p)) / (st.r_s / p.sigma_hat)
    err = max(r1, r2)
    return err, err <= tol, "R* and K(R_s) equations"


def _interface(ctx, tol):
    p, st = ctx.params, ctx.stat
    err = max(abs(st.sigma(st.r_s) - 1.0), abs(st.sigma(st.k_s) - p.sigma_hat), abs(st.dsigma(st.k_s)),
              abs(st.dpi(st.k_s) - p.b * st.k_s / 3.0))
    return err, err <= tol, "sigma(R_s)=1, sigma(K_s)=sigma_hat, sigma'(K_s)=0, pi'(K_s)=bK_s/3"


def _stationary_slope(ctx, tol):
    st = ctx.stat
    err = max(abs(st.dpi(st.r_s)), abs(radial.mass_balance_residual(st.r_s, st.k_s, ctx.params)))
    return err, err <= tol, "pi'(R_s)=0 and mass balance"


def _pressure_curvature(ctx, tol):
    st = ctx.stat
    err = abs(float(st.d2pi(st.r_s)) + ctx.params.g1)
    return err, err <= tol, "pi''(R_s) = -g(1)"


def _d_constant(ctx, tol):
    st = ctx.stat
    err = _rel(st.d_const, radial.d_constant_by_matching(st.r_s, st.k_s, ctx.params))
    return err, err <= tol, "closed form vs slope matching"


def _u1(ctx, tol):
    st = ctx.stat
    r = np.linspace(st.k_s, st.r_s, 1000)
    err = float(np.max(np.abs(ctx.table.modes[1].u_profile(r) - modes.u1_closed_form(r, st))))
    return err, err <= tol, "sup over 1000 points"


def _v1(ctx, tol):
    p, st = ctx.params, ctx.stat
    err = _rel(ctx.table.dv[1], p.g1 / (p.a * st.dsigma_rs))
    return err, err <= tol, "v1'(R_s) = g(1)/(a sigma'(R_s))"


def _dual(ctx, tol):
    err = max(_rel(m.dv_at_rs, m.dv_at_rs_rewritten) for m in ctx.table.modes)
    return err, err <= tol, f"k = 0..{ctx.kmax}"


def _flux(ctx, tol):
    err = max(m.flux_identity_gap() for m in ctx.table.modes)
    return err, err <= tol, f"k = 0..{ctx.kmax}"


def _mode_profiles(ctx, tol):
    st = ctx.stat
    r = np.linspace(st.k_s, st.r_s, 1002)[1:-1]
    ms = ctx.table.modes[:51]
    U, dU, Z = modes.mode_profiles(ms, r)
    dK = np.array([m.du_at_k for m in ms])
    dR = np.array([m.du_at_rs for m in ms])
    violations = int(np.sum(U <= 0) + np.sum(U >= 1) + np.sum(dU <= 0)
                     + np.sum(np.diff(U, axis=0) <= 0) + np.sum(np.diff(Z, axis=0) >= 0)
                     + np.sum(np.diff(dK) < 0) + np.sum(np.diff(dR) > 0))
    return float(violations), violations == 0, "bounds, monotonicity and orderings, k <= 50"


def _interface_jump(ctx, tol):
    # the outward integration starts from the jump condition alone; its slope at
    # R_s must reproduce the quadrature slope
    st = ctx.stat
    err = 0.0
    for m in ctx.table.modes[:11]:
        prof = modes.v_profile(m, st)
        err = max(err, _rel(prof.slope(st.r_s), ctx.table.dv[m.k]))
    return err, err <= tol, "outward integration vs quadrature slope, k <= 10"


def _v_monotone(ctx, tol):
    dv = ctx.table.dv[:51]
    violations = int(np.sum(np.diff(dv) >= 0))
    return float(violations), violations == 0, "v_k'(R_s) decreasing in k, k <= 50"


def _translation(ctx, tol):
    a = ctx.table.a_values(1.0)
    bound = spectrum.kernel_tolerance(a[0])
    ok = abs(a[1]) <= bound and a[0] < 0
    return abs(a[1]) / max(1.0, abs(a[0])), ok, f"a0={a[0]:.6g}"


def _gamma_positive(ctx, tol):
    gk = ctx.table.gamma_values[2:]
    return float(np.min(gk)), bool(np.all(gk > 0)), f"min gamma_k over k=2..{ctx.kmax}"


def _asymptotics(ctx, tol):
    k = ctx.kmax
    st, p = ctx.stat, ctx.params
    ratio = ctx.table.gamma_values[k] * k ** 3 / (2 * st.r_s ** 3 * p.g1)
    return abs(ratio - 1), abs(ratio - 1) <= tol, f"k={k}"


def _dichotomy(ctx, tol):
    gstar, arg = ctx.gstar
    above = ctx.table.a_values(1.05 * gstar)
    below = ctx.table.a_values(0.95 * gstar)
    bound = spectrum.kernel_tolerance(above[0])
    ok = (above[0] < 0 and abs(above[1]) <= bound and np.all(above[2:] < 0) and np.any(below[2:] > 0))
    return gstar, bool(ok), f"gamma*={gstar:.10g} at k={arg}"


def _heleshaw(ctx, tol):
    bad = 0
    for n in (2, 3, 4):
        hs = spectrum.heleshaw_spectrum(n, 20)
        bad += hs.kernel_dim != n + 1
        bad += any(hs.mu_values[k] >= 0 for k in range(2, 21))
    return float(bad), bad == 0, "n in {2,3,4}, k <= 20, exact"


def _annulus(ctx, tol):
    st = ctx.stat
    ell = np.array([spectrum.dn_annulus_multiplier(k, st.k_s, st.r_s) for k in range(101)])
    bad = int(np.sum(ell <= 0) + np.sum(np.diff(ell) <= 0))
    bad += spectrum.dn_annulus_multiplier(0, 1.0, 2.0) != 2.0
    return float(bad), bad == 0, "positive and increasing, k <= 100"


def _velocity(ctx, tol):
    st, p = ctx.stat, ctx.params
    Rs = np.linspace(st.r_star, 3 * st.r_s, 102)[1:-1]
    err = max(_rel(dynamics.velocity_by_quadrature(R, p, st.r_star), dynamics.velocity_closed_form(R, p, st.r_star))
              for R in Rs)
    return err, err <= tol, "100 radii in (R*, 3 R_s)"


def _linearization(ctx, tol):
    st = ctx.stat
    a0 = ctx.table.a_values(1.0)[0]
    d = dynamics.velocity_derivative(st.r_s, ctx.params)
    err = _rel(d, a0 / st.r_s)
    return err, err <= tol, "dPhi/dR(R_s) vs a0/R_s"


def _toy(ctx, tol):
    err = 0.0
    for x0, y0 in [(0.0, 1.0), (2.0, 3.0), (5.0, 0.0), (-1.5, -2.0)]:
        x, y = dynamics.toy_planar_flow(x0, y0, 20.0)
        lx, ly = dynamics.toy_limit(x0, y0)
        err = max(err, math.hypot(x - lx, y - ly))
    ok = err <= tol and dynamics.toy_on_stable_manifold(0.0, 1.0) and not dynamics.toy_on_stable_manifold(2.0, 3.0)
    return err, ok, "distance to (x0, 0) at t=20"


CHECKS: list[tuple[str, str, str, Callable]] = [
    ("ylm-orthonormality", "harmonics", "orthonormality", _orthonormality),
    ("dirichlet-energy", "harmonics", "dirichlet_energy", _dirichlet),
    ("root-residuals", "stationary", "root_residual", _root_residuals),
    ("interface-identities", "stationary", "interface", _interface),
    ("stationary-slope", "stationary", "stationary_slope", _stationary_slope),
    ("pressure-curvature", "stationary", "pressure_curvature", _pressure_curvature),
    ("d-constant-dual", "stationary", "d_constant", _d_constant),
    ("u1-closed-form", "mode-ode", "u1_closed_form", _u1),
    ("mode-profile-properties", "mode-ode", "u1_closed_form", _mode_profiles),
    ("flux-identity", "mode-ode", "flux_identity", _flux),
    ("v1-slope", "eigenvalues", "v1_slope", _v1),
    ("dual-slope-formulas", "eigenvalues", "dual_formula", _dual),
    ("interface-jump-identity", "eigenvalues", "dual_formula", _interface_jump),
    ("v-slope-monotone", "eigenvalues", "dual_formula", _v_monotone),
    ("a1-zero", "eigenvalues", "translation_kernel", _translation),
    ("gamma-k-positive", "eigenvalues", "dual_formula", _gamma_positive),
    ("gamma-asymptotics", "eigenvalues", "gamma_asymptotics", _asymptotics),
    ("threshold-dichotomy", "threshold", "dual_formula", _dichotomy),
    ("heleshaw-spectrum", "hele-shaw", "dual_formula", _heleshaw),
    ("annulus-multiplier", "interface-dn", "dual_formula", _annulus),
    ("radial-velocity-consistency", "radial-dynamics", "velocity_consistency", _velocity),
    ("radial-linearization", "radial-dynamics", "radial_linearization", _linearization),
    ("toy-flow", "toy-system", "toy_limit", _toy),
]


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def verify_suite(params: radial.ModelParams, tolerances: dict | None = None, kmax: int = 200) -> VerifyReport:
    """Run every check against ``params``; records keep the fixed check order."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    ctx = _Context(params, kmax)

    def run(entry):
        name, group, key, fn = entry
        t = tol[key]
        try:
            measured, ok, detail = fn(ctx, t)
            return CheckRecord(name, group, float(measured), t, bool(ok), detail)
        except Exception as exc:  # recorded, never propagated
            return CheckRecord(name, group, float("nan"), t, False, f"error: {type(exc).__name__}: {exc}")

    # shared state is built once up front so threads only read it
    try:
        ctx.stat, ctx.table
    except Exception:
        pass
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        records = list(pool.map(run, CHECKS))
    return VerifyReport(params.as_dict(), records)
