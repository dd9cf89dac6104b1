import numpy as np
import pytest
from scipy.linalg import solve_banded

from necrostab import modes, spectrum


def fd_bvp_k0(K, R, n):
    """Second-order centered differences for u'' + (2/r) u' = u, u(K)=0, u(R)=1."""
    r = np.linspace(K, R, n + 1)
    h = r[1] - r[0]
    ri = r[1:-1]
    lower = 1 / h ** 2 - 1 / (h * ri)
    diag = -2 / h ** 2 - 1 + 0 * ri
    upper = 1 / h ** 2 + 1 / (h * ri)
    rhs = np.zeros_like(ri)
    rhs[-1] = -upper[-1] * 1.0
    ab = np.zeros((3, ri.size))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ri, solve_banded((1, 1), ab, rhs)


def test_k0_against_finite_difference_bvp(stat0, table0):
    r1, u1 = fd_bvp_k0(stat0.k_s, stat0.r_s, 10_000)
    r2, u2 = fd_bvp_k0(stat0.k_s, stat0.r_s, 20_000)
    rich = (4 * u2[1::2] - u1) / 3  # Richardson: both grids share the coarse nodes
    m = table0.modes[0]
    assert np.max(np.abs(u1 - m.u_profile(r1))) <= 1e-7
    assert np.max(np.abs(rich - m.u_profile(r1))) <= 1e-10


@pytest.mark.parametrize("k", [0, 1, 2, 5, 10, 20, 30])
def test_against_bessel_closed_form(stat0, table0, k):
    u, du = modes.bessel_mode(k, stat0)
    r = np.linspace(stat0.k_s, stat0.r_s, 200)
    m = table0.modes[k]
    assert np.max(np.abs(m.u_profile(r) - u(r))) < 1e-10
    assert abs(m.du_at_rs - du(stat0.r_s)) < 1e-9 * abs(du(stat0.r_s))


def test_bessel_mode_refuses_high_degree(stat0):
    with pytest.raises(ValueError):
        modes.bessel_mode(31, stat0)


def test_u1_closed_form(stat0, table0):
    r = np.linspace(stat0.k_s, stat0.r_s, 1000)
    assert np.max(np.abs(table0.modes[1].u_profile(r) - modes.u1_closed_form(r, stat0))) <= 1e-8


def test_v1_profile_against_closed_form(stat0, table0, p0):
    prof = modes.v_profile(table0.modes[1], stat0)
    r = np.linspace(stat0.k_s, stat0.r_s, 300)
    assert np.max(np.abs(prof(r) - modes.v1_closed_form(r, stat0))) < 1e-10
    assert abs(table0.dv[1] - p0.g1 / (p0.a * stat0.dsigma_rs)) <= 1e-7 * abs(table0.dv[1])


def test_inner_branch_jump_identity(stat0, table0, p0):
    jump = (p0.sigma_hat - p0.sigma_tilde) / p0.sigma_hat
    for m in table0.modes[:8]:
        prof = modes.v_profile(m, stat0)
        assert prof.slope(stat0.k_s * (1 - 1e-9)) == 0.0
        assert abs(prof.slope(stat0.k_s) - jump * m.du_at_k) <= 1e-14 * abs(jump * m.du_at_k)
        assert abs(prof.slope(stat0.r_s) - m.dv_at_rs) <= 1e-8 * abs(m.dv_at_rs)


def test_dual_formulas_and_flux(table0):
    for m in table0.modes:
        assert abs(m.dv_at_rs - m.dv_at_rs_rewritten) <= 1e-7 * abs(m.dv_at_rs)
        assert m.flux_identity_gap() <= 1e-8


def test_vectorized_matches_single_solves(stat0, table0):
    for k in (3, 57, 200):
        m = modes.solve_u_mode(k, stat0)
        assert abs(m.dv_at_rs - table0.dv[k]) <= 1e-10 * abs(table0.dv[k])
        assert abs(m.du_at_k - table0.modes[k].du_at_k) <= 1e-10 * abs(m.du_at_k)


def test_batched_profiles_match_single(stat0, table0):
    r = np.linspace(stat0.k_s, stat0.r_s, 37)
    U, dU, Z = modes.mode_profiles([table0.modes[k] for k in (7, 0, 150)], r)
    for row, k in enumerate((7, 0, 150)):
        m = table0.modes[k]
        np.testing.assert_allclose(U[row], m.u_profile(r), rtol=1e-14, atol=0)
        np.testing.assert_allclose(Z[row], m.z_profile(r), rtol=1e-14, atol=0)
        np.testing.assert_allclose(dU[row], m.du_profile(r), rtol=1e-15, atol=0)


def test_mode_profile_properties_k_le_50(stat0, table0):
    r = np.linspace(stat0.k_s, stat0.r_s, 1002)[1:-1]
    U = np.array([m.u_profile(r) for m in table0.modes[:51]])
    Z = np.array([m.z_profile(r) for m in table0.modes[:51]])
    dU = np.array([m.du_profile(r) for m in table0.modes[:51]])
    assert np.all((U > 0) & (U < 1)) and np.all(dU > 0)
    assert np.all(np.diff(U, axis=0) > 0)
    assert np.all(np.diff(Z, axis=0) < 0)
    assert np.all(np.diff([m.du_at_k for m in table0.modes[:51]]) >= 0)
    assert np.all(np.diff([m.du_at_rs for m in table0.modes[:51]]) <= 0)


def test_slope_decays_like_one_over_k(stat0, table0):
    # the decay rate is only checked numerically: k v_k'(R_s) stays bounded
    kv = np.arange(1, 201) * table0.dv[1:]
    assert np.all(kv > 0) and kv[-1] < 2 * kv[50]


def test_mode_fields_reproduce_eigenvalue(stat0, table0, p0):
    gamma, c, k = 2.0, 1e-3, 3
    f = modes.mode_fields(k, c, table0.modes[k], stat0, gamma=gamma)
    R = stat0.r_s
    assert abs(f.u_radial(R) + R * stat0.dsigma_rs * c) < 1e-14
    h = 1e-5
    dv = (3 * f.v_radial(R) - 4 * f.v_radial(R - h) + f.v_radial(R - 2 * h)) / (2 * h)
    # normal velocity perturbation: g(1) R c - d/dr v at R_s
    ak = spectrum.eigenvalue_ak(k, gamma, table0.modes[k], stat0)
    assert abs((p0.g1 * R * c - dv) - ak * c) < 1e-7 * abs(ak * c)


def test_mode_table_csv_columns(table0):
    t = table0.modes[4].table(5)
    assert t.shape == (5, 3)
    assert abs(t[0, 1]) < 1e-14 and abs(t[-1, 1] - 1) < 1e-12
