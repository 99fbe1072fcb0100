"""Scikit-learn style fitter for five-term free-energy expansions."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .expansion import ExpansionCoefficients, eval_expansion

TERMS = ("quad", "nlogn", "linear", "logn", "constant")


def _design(n: np.ndarray) -> np.ndarray:
    ln = np.log(n)
    return np.stack([n * n, n * ln, n, ln, np.ones_like(n)], axis=1)


class CoulombGasExpansion(BaseEstimator, RegressorMixin):
    """Least-squares fit of ``ln Z(n) = a n^2 + b n ln n + c n + d ln n + e``.

    Parameters
    ----------
    nlogn : float or None
        Value to pin the ``n ln n`` coefficient to. The default ``-0.5`` is
        universal; ``None`` fits it freely.
    logn : float or None
        Value to pin the ``ln n`` coefficient to, e.g. ``(g - 1) / 6`` for
        the plain expansion in ``N``. ``None`` fits it.
    min_n : int
        Samples with ``n`` below this are dropped before fitting.

    Attributes
    ----------
    coef_ : ndarray of shape (5,)
        Coefficients in the order ``quad, nlogn, linear, logn, constant``.
    n_samples_fit_ : int
    """

    def __init__(self, nlogn: float | None = -0.5, logn: float | None = None, min_n: int = 2):
        self.nlogn = nlogn
        self.logn = logn
        self.min_n = min_n

    def _as_n(self, X) -> np.ndarray:
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError("X must hold a single column of n values")
            X = X[:, 0]
        if np.any(X < 2):
            raise ValueError("n must be at least 2")
        return X

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(X, (-1, 1)) if np.ndim(X) == 1 else X, y, dtype=float, y_numeric=True)
        n = self._as_n(X)
        keep = n >= self.min_n
        n, y = n[keep], y[keep]
        pinned = {1: self.nlogn, 3: self.logn}
        free = [i for i in range(5) if pinned.get(i) is None]
        if n.size < len(free):
            raise ValueError(f"need at least {len(free)} samples with n >= {self.min_n}, got {n.size}")
        A = _design(n)
        target = y.copy()
        for i, v in pinned.items():
            if v is not None:
                target -= float(v) * A[:, i]
        # column scaling keeps the n^2 and constant columns comparable
        cols = A[:, free]
        scale = np.abs(cols).max(axis=0)
        sol, *_ = np.linalg.lstsq(cols / scale, target, rcond=None)
        coef = np.zeros(5)
        coef[free] = sol / scale
        for i, v in pinned.items():
            if v is not None:
                coef[i] = float(v)
        self.coef_ = coef
        self.n_samples_fit_ = int(n.size)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        return _design(self._as_n(X)) @ self.coef_

    @property
    def coefficients_(self) -> ExpansionCoefficients:
        check_is_fitted(self, "coef_")
        return ExpansionCoefficients(*map(float, self.coef_), variable="N", kind="plain")

    def residuals(self, X, y) -> np.ndarray:
        return np.asarray(y, dtype=float) - self.predict(X)


def predict_from(coeffs: ExpansionCoefficients, ns) -> np.ndarray:
    """Evaluate assembled coefficients at each ``n``."""
    return np.array([eval_expansion(coeffs, n) for n in np.ravel(ns)])
