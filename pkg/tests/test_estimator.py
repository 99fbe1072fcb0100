import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from coulomb import CoulombGasExpansion
from coulomb.estimator import TERMS, predict_from
from coulomb.exactpf import ln_z_sphere_exact
from coulomb.expansion import ExpansionCoefficients, coeffs_plain
from coulomb.geometry import sphere

NS = np.arange(10, 200, 7, dtype=float)


def test_params_round_trip():
    est = CoulombGasExpansion(logn=-1 / 6, min_n=5)
    assert est.get_params() == {"nlogn": -0.5, "logn": -1 / 6, "min_n": 5}
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    twin.set_params(nlogn=None)
    assert twin.nlogn is None and est.nlogn == -0.5


@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_recovers_synthetic(coef):
    coef[1] = -0.5
    y = predict_from(ExpansionCoefficients(*coef), NS)
    est = CoulombGasExpansion(nlogn=None).fit(NS, y)
    assert np.allclose(est.coef_, coef, atol=1e-6)
    assert np.allclose(est.predict(NS), y, rtol=1e-10, atol=1e-8)


def test_pinned_values_are_kept():
    y = predict_from(ExpansionCoefficients(0.0, -0.5, 1.0, 0.3, -2.0), NS)
    est = CoulombGasExpansion(logn=0.3).fit(NS.reshape(-1, 1), y)
    assert est.coef_[1] == -0.5 and est.coef_[3] == 0.3
    assert est.coef_[2] == pytest.approx(1.0, abs=1e-9)


def test_fits_exact_sphere_free_energy():
    ns = np.arange(40, 400, 10)
    y = np.array([ln_z_sphere_exact(int(n)) for n in ns])
    est = CoulombGasExpansion(logn=-1 / 6).fit(ns, y)
    want = coeffs_plain(sphere())
    got = est.coefficients_
    assert got.quad == pytest.approx(0.0, abs=1e-9)
    assert got.linear == pytest.approx(want.linear, abs=1e-7)
    assert got.constant == pytest.approx(want.constant, abs=1e-3)
    assert np.max(np.abs(est.residuals(ns, y))) < 1e-4


def test_min_n_filters():
    y = predict_from(ExpansionCoefficients(0, -0.5, 1, 0, 0), NS)
    est = CoulombGasExpansion(min_n=100).fit(NS, y)
    assert est.n_samples_fit_ == int(np.sum(NS >= 100))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CoulombGasExpansion().predict([10])


@pytest.mark.parametrize("X", [[[1.0, 2.0]] * 6, [1.0, 10, 20, 30, 40, 50], [np.nan, 10, 20, 30, 40, 50]])
def test_bad_input(X):
    with pytest.raises(ValueError):
        CoulombGasExpansion().fit(X, np.zeros(6))


def test_too_few_samples():
    with pytest.raises(ValueError):
        CoulombGasExpansion().fit([10, 20, 30], [0.0, 1.0, 2.0])


def test_terms_order():
    c = ExpansionCoefficients(1.0, 2.0, 3.0, 4.0, 5.0)
    assert tuple(getattr(c, t) for t in TERMS) == c.as_tuple()
