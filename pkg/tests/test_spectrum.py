import warnings
from fractions import Fraction

import numpy as np
import pytest

from necrostab import harmonics, spectrum
from necrostab.harmonics import HarmonicExpansion


def test_p0_threshold(stat0, table0):
    g, arg = spectrum.gamma_star(stat0, table=table0)
    assert arg == 2
    assert abs(g - table0.gamma_values[2]) == 0
    assert abs(g - 3.0739935817951984) < 1e-9


def test_factored_form_matches(stat0, table0):
    for k in (2, 3, 10, 77, 200):
        for gamma in (0.5, 3.0, 10.0):
            direct = spectrum.eigenvalue_ak(k, gamma, table0.modes[k], stat0)
            fact = spectrum.ak_from_gamma_k(k, gamma, table0.gamma_values[k], stat0)
            assert abs(direct - fact) <= 1e-12 * max(1.0, abs(direct))
            assert abs(table0.a_values(gamma)[k] - direct) <= 1e-12 * max(1.0, abs(direct))


def test_gamma_k_undefined_below_two(stat0, table0):
    with pytest.raises(ValueError):
        spectrum.gamma_k(1, table0.modes[1], stat0)


def test_classification(stat0, table0, p0):
    g, _ = spectrum.gamma_star(stat0, table=table0)
    assert spectrum.classify(1.05 * g, g) == spectrum.STABLE
    assert spectrum.classify(0.95 * g, g) == spectrum.UNSTABLE
    assert spectrum.classify(g * (1 + 1e-12), g) == spectrum.CRITICAL
    rep = spectrum.classify_stability(p0, 1.05 * g, stat=stat0, table=table0)
    assert rep.kernel_degrees == [1]
    assert rep.classification == spectrum.STABLE
    with pytest.raises(ValueError):
        spectrum.classify_stability(p0, None, stat=stat0, table=table0)


def test_report_schema(stat0, table0, p0):
    rep = spectrum.classify_stability(p0, 4.0, stat=stat0, table=table0)
    d = rep.to_dict()
    for key in ("params", "r_star", "r_s", "k_s", "kmax", "a", "gamma_k", "gamma_star", "argmax_k", "classification"):
        assert key in d
    assert len(d["a"]) == 201 and len(d["gamma_k"]) == 199
    rows = list(rep.table_rows())
    assert rows[2][2] == d["gamma_k"][0] and np.isnan(rows[0][2])


def test_tail_not_certified_warns(stat0, monkeypatch):
    # an absurd margin keeps the tail envelope above the maximum after both doublings
    monkeypatch.setattr(spectrum, "TAIL_MARGIN", 1e12)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spectrum.gamma_star(stat0, kmax=4)
    assert any(issubclass(w.category, spectrum.InconclusiveThresholdWarning) for w in caught)


def test_linearized_operator_is_multiplier(stat0, table0):
    xi = HarmonicExpansion.from_triples([(0, 1, 0.1), (1, 2, 0.2), (4, 7, -0.3)])
    out = spectrum.apply_linearized_operator(xi, 3.0, stat0)
    a = table0.a_values(3.0)
    assert abs(out[(0, 1)] - 0.1 * a[0]) < 1e-13
    assert abs(out[(1, 2)]) < 1e-13
    assert abs(out[(4, 7)] + 0.3 * a[4]) < 1e-13


@pytest.mark.parametrize("n", [2, 3, 4])
def test_heleshaw_exact(n):
    hs = spectrum.heleshaw_spectrum(n, 20)
    for k, mu in enumerate(hs.mu_values):
        assert mu == Fraction(-k * (k - 1) * (k + n - 1), n - 1)
        assert mu == spectrum.heleshaw_composition(k, n)
    assert hs.kernel_dim == n + 1


def test_heleshaw_n3_table():
    assert [int(m) for m in spectrum.heleshaw_spectrum(3, 5).mu_values] == [0, 0, -4, -15, -36, -70]


def test_multiplicity_matches_real_basis():
    assert all(spectrum.harmonic_multiplicity(k, 3) == len([i for i in harmonics.indices(k) if i.k == k])
               for k in range(8))


def test_annulus_multiplier():
    assert spectrum.dn_annulus_multiplier(0, 1.0, 2.0) == 2.0
    ell = [spectrum.dn_annulus_multiplier(k, 4.3, 5.8) for k in range(101)]
    assert all(v > 0 for v in ell)
    with pytest.raises(ValueError):
        spectrum.dn_annulus_multiplier(1, 2.0, 1.0)
