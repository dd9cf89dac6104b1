import math

import numpy as np
import pytest

from necrostab import dynamics, radial
from necrostab.harmonics import HarmonicExpansion


def test_velocity_routes_agree(stat0, p0):
    for R in np.linspace(stat0.r_star, 3 * stat0.r_s, 102)[1:-1]:
        q = dynamics.velocity_by_quadrature(R, p0, stat0.r_star)
        c = dynamics.velocity_closed_form(R, p0, stat0.r_star)
        assert abs(q - c) <= 1e-9 * max(abs(q), abs(c))


def test_velocity_below_r_star(p0):
    for R in (0.01, 0.5, 1.0, 2.0):
        q = dynamics.velocity_by_quadrature(R, p0)
        c = dynamics.velocity_closed_form(R, p0)
        assert abs(q - c) < 1e-12


def test_radial_velocity_zero_at_stationary(stat0, p0):
    assert abs(dynamics.radial_velocity(stat0.r_s, p0)) < 1e-12


def test_linearization_is_a0_over_rs(stat0, table0, p0):
    a0 = table0.a_values(1.0)[0]
    assert abs(dynamics.velocity_derivative(stat0.r_s, p0) - a0 / stat0.r_s) <= 1e-6 * abs(a0 / stat0.r_s)


@pytest.mark.parametrize("factor", [0.9, 1.2])
def test_radius_converges_monotonically(stat0, p0, factor):
    tr = dynamics.evolve_radius(factor * stat0.r_s, 300.0, p0, t_eval=np.linspace(0, 300, 3001))
    off = tr.values - stat0.r_s
    assert abs(off[-1]) <= 1e-6
    assert np.all(np.diff(np.abs(off)) <= 1e-12)


def test_small_tumor_crosses_r_star(stat0, p0):
    tr = dynamics.evolve_radius(0.3 * stat0.r_s, 100.0, p0)
    assert tr.values[0] < stat0.r_star < tr.values[-1]
    assert np.all(np.diff(tr.values) > 0)


def test_trace_rejects_unordered_times():
    with pytest.raises(ValueError):
        dynamics.EvolutionTrace([0.0, 0.0], [1.0, 1.0])


def test_mode_evolution_is_exponential(stat0, table0):
    xi = HarmonicExpansion.from_triples([(1, 3, 0.5), (2, 1, 0.1), (5, 2, -0.2)])
    t = np.linspace(0, 3, 4)
    tr = dynamics.evolve_modes(xi, 4.0, t, stat0)
    a = table0.a_values(4.0)
    assert tr.metadata["indices"] == [(1, 3), (2, 1), (5, 2)]
    np.testing.assert_allclose(tr.values[:, 0], 0.5, rtol=1e-12)
    np.testing.assert_allclose(tr.values[:, 1], 0.1 * np.exp(a[2] * t), rtol=1e-12)
    assert "linear" in tr.metadata["note"]
    shape = dynamics.shape_snapshot(tr, 0, stat0, np.array([0.3]), np.array([0.2]))
    assert shape.shape == (1,)


def test_toy_flow():
    assert dynamics.toy_planar_flow(2.0, 3.0, 20.0)[1] == 3.0 * math.exp(-20.0)
    assert dynamics.toy_limit(2.0, 3.0) == (2.0, 0.0)
    assert dynamics.toy_on_stable_manifold(0.0, 5.0)
    assert not dynamics.toy_on_stable_manifold(1e-3, 5.0)
