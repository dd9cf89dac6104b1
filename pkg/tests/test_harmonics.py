import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import sph_harm_y

from necrostab import harmonics as H
from necrostab.harmonics import HarmonicExpansion, HarmonicIndex, QuadratureRule


def test_index_layout():
    assert HarmonicIndex(3, 1).order == (0, "zonal")
    assert HarmonicIndex(3, 2).order == (1, "cos")
    assert HarmonicIndex(3, 3).order == (1, "sin")
    assert len(list(H.indices(4))) == 25
    with pytest.raises(H.HarmonicIndexError):
        HarmonicIndex(2, 6)
    with pytest.raises(H.HarmonicIndexError):
        HarmonicIndex(-1, 1)


def test_against_scipy_complex_harmonics():
    # independent oracle: real combinations of scipy's complex harmonics
    theta = np.linspace(0.1, 3.0, 7)
    phi = np.linspace(0.2, 6.0, 7)
    for idx in H.indices(8):
        m, kind = idx.order
        y = sph_harm_y(idx.k, m, theta, phi) * (-1) ** m  # drop the Condon-Shortley phase
        if m == 0:
            ref = y.real
        elif kind == "cos":
            ref = math.sqrt(2) * y.real
        else:
            ref = math.sqrt(2) * y.imag
        np.testing.assert_allclose(H.eval_ylm(idx, theta, phi), ref, atol=1e-13)


def test_gram_matrix_identity():
    G = H.gram_matrix(10, QuadratureRule.product(22))
    assert np.max(np.abs(G - np.eye(len(G)))) <= 1e-9


def test_dirichlet_energy():
    rule = QuadratureRule.product(24)
    for idx in H.indices(10):
        assert abs(H.dirichlet_energy(idx, rule) - idx.k * (idx.k + 1)) <= 1e-8


def test_gradient_matches_finite_difference():
    idx = HarmonicIndex(5, 4)
    th, ph, h = 0.7, 1.3, 1e-6
    dth, dph = H.ylm_gradient(idx, th, ph)
    fd_th = (H.eval_ylm(idx, th + h, ph) - H.eval_ylm(idx, th - h, ph)) / (2 * h)
    fd_ph = (H.eval_ylm(idx, th, ph + h) - H.eval_ylm(idx, th, ph - h)) / (2 * h) / math.sin(th)
    assert abs(dth - fd_th) < 1e-7 and abs(dph - fd_ph) < 1e-7


def test_expand_requires_exact_rule():
    with pytest.raises(H.QuadratureExactnessError):
        H.expand(lambda t, p: t, QuadratureRule.product(10), 6)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=25, max_size=25))
def test_expand_synthesize_round_trip(coeffs):
    exp = HarmonicExpansion({idx: c for idx, c in zip(H.indices(4), coeffs)})
    rule = QuadratureRule.product(10)
    back = H.expand(lambda t, p: H.synthesize(exp, t, p), rule, 4)
    for idx in H.indices(4):
        assert abs(back[idx] - exp[idx]) < 1e-12


def test_map_degrees_is_multiplier():
    exp = HarmonicExpansion.from_triples([(0, 1, 1.0), (2, 3, 2.0), (2, 1, -1.0)])
    out = exp.map_degrees({0: 5.0, 2: -0.5})
    assert out[(2, 3)] == -1.0 and out[(0, 1)] == 5.0 and out[(2, 1)] == 0.5
