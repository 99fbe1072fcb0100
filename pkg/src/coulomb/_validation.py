"""Input checks shared by the public functions."""
from __future__ import annotations

import math
import numbers

import numpy as np


def check_tau(tau) -> complex:
    """Return ``tau`` as a complex number with positive imaginary part."""
    try:
        t = complex(tau)
    except (TypeError, ValueError) as exc:
        raise TypeError(f"tau must be a complex number, got {tau!r}") from exc
    if not (math.isfinite(t.real) and math.isfinite(t.imag)):
        raise ValueError("tau must be finite")
    if t.imag <= 0:
        raise ValueError(f"Im(tau) must be positive, got {t.imag}")
    return t


def check_period_matrix(tau, max_genus: int = 3) -> np.ndarray:
    """Validate a symmetric period matrix with positive definite imaginary part."""
    t = np.atleast_2d(np.asarray(tau, dtype=complex))
    g = t.shape[0]
    if t.ndim != 2 or t.shape[1] != g:
        raise ValueError("period matrix must be square")
    if g > max_genus:
        raise ValueError(f"genus {g} not supported (max {max_genus})")
    if not np.all(np.isfinite(t)):
        raise ValueError("period matrix must be finite")
    if not np.allclose(t, t.T, rtol=0, atol=1e-12 * max(1.0, np.abs(t).max())):
        raise ValueError("period matrix must be symmetric")
    if np.linalg.eigvalsh(t.imag).min() <= 0:
        raise ValueError("imaginary part of the period matrix must be positive definite")
    return t


def check_int(n, name: str, minimum: int | None = None, maximum: int | None = None) -> int:
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        else:
            raise TypeError(f"{name} must be an integer, got {n!r}")
    n = int(n)
    if minimum is not None and n < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {n}")
    if maximum is not None and n > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {n}")
    return n


def check_genus(g, supported=(0, 1)) -> int:
    g = check_int(g, "genus", minimum=0)
    if supported is not None and g not in supported:
        raise ValueError(f"genus {g} is not supported here (supported: {supported})")
    return g


def check_field(values, grid) -> np.ndarray:
    """Broadcast a scalar or array to the node layout of ``grid``."""
    arr = np.asarray(values)
    if arr.ndim == 0:
        return np.full(grid.size, arr.item(), dtype=arr.dtype if arr.dtype.kind == "c" else float)
    arr = arr.reshape(-1)
    if arr.size != grid.size:
        raise ValueError(f"field has {arr.size} values but the grid has {grid.size} nodes")
    return arr


def check_finite(x, name: str = "input"):
    if not np.all(np.isfinite(np.asarray(x))):
        raise ValueError(f"{name} must be finite")
    return x
