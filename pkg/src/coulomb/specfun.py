"""Scalar special functions in double precision.

Theta and eta functions, Hurwitz zeta with its Euler-Maclaurin
derivative, Barnes G through log-factorials, and the constant
zeta'(-1). Sums go through :func:`math.fsum` so cancellation in long
series does not accumulate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from ._validation import check_finite, check_int, check_period_matrix, check_tau

LN_2PI = math.log(2.0 * math.pi)

# B_2, B_4, ..., B_16
_BERNOULLI = (
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
)
_EM_COEFF = tuple(float(b / math.factorial(2 * j + 2)) for j, b in enumerate(_BERNOULLI))
_EM_SHIFT = 20.0


# ---------------------------------------------------------------- theta / eta

def jacobi_theta1(z, tau):
    """First Jacobi theta function with nome ``q = exp(i pi tau)``.

    ``theta_1(z|tau) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) pi z)``.
    Odd in ``z``, ``theta_1(z+1) = -theta_1(z)`` and
    ``theta_1(z+tau) = -exp(-i pi tau - 2 i pi z) theta_1(z)``.
    Accepts scalar or array ``z``.
    """
    tau = check_tau(tau)
    z = np.asarray(z, dtype=complex)
    check_finite(z, "z")
    y = float(np.max(np.abs(z.imag))) if z.size else 0.0
    # last kept term sits 16 decades below the largest one
    nmax = int(math.ceil(y / tau.imag + math.sqrt(16 * math.log(10) / (math.pi * tau.imag)))) + 1
    n = np.arange(nmax + 1)
    log_q = 1j * math.pi * tau
    coef = 2.0 * (-1.0) ** n * np.exp(log_q * (n + 0.5) ** 2)
    terms = coef * np.sin(np.multiply.outer(z, (2 * n + 1) * math.pi))
    out = terms.sum(axis=-1)
    return out.item() if out.ndim == 0 else out


def jacobi_theta1_prime0(tau) -> complex:
    """Derivative of theta_1 at the origin."""
    tau = check_tau(tau)
    nmax = int(math.ceil(math.sqrt(16 * math.log(10) / (math.pi * tau.imag)))) + 1
    n = np.arange(nmax + 1)
    terms = 2.0 * (-1.0) ** n * np.exp(1j * math.pi * tau * (n + 0.5) ** 2) * (2 * n + 1) * math.pi
    return complex(terms.sum())


def dedekind_eta(tau) -> complex:
    """Dedekind eta ``q^(1/24) prod (1 - q^n)`` with ``q = exp(2 i pi tau)``."""
    tau = check_tau(tau)
    nmax = int(math.ceil(18 * math.log(10) / (2 * math.pi * tau.imag))) + 1
    q = np.exp(2j * math.pi * tau * np.arange(1, nmax + 1))
    return complex(np.exp(2j * math.pi * tau / 24) * np.prod(1.0 - q))


def theta_radius(tau) -> int:
    """Lattice box radius giving a 1e-16 Gaussian tail for the Riemann theta sum."""
    t = check_period_matrix(tau)
    lam = float(np.linalg.eigvalsh(t.imag).min())
    return int(math.ceil(math.sqrt(16 * math.log(10) / (math.pi * lam)))) + 2


def _lattice_box(g: int, radius: int) -> np.ndarray:
    r = range(-radius, radius + 1)
    return np.array(list(product(r, repeat=g)), dtype=float)


def _theta_sum(z: np.ndarray, tau: np.ndarray, shift: np.ndarray, chunk: int = 4096):
    """Sum exp(i pi (n+a)^T tau (n+a) + 2 i pi (n+a)^T z) over a centred box.

    ``z`` has shape (P, g); ``shift`` is the characteristic ``a``. The box is
    centred per point on the dominant lattice vector so that large ``Im z``
    does not push the peak of the summand out of the box.
    """
    g = tau.shape[0]
    Y = tau.imag
    box = _lattice_box(g, theta_radius(tau))
    out = np.empty(z.shape[0], dtype=complex)
    Yinv = np.linalg.inv(Y)
    for start in range(0, z.shape[0], chunk):
        zc = z[start:start + chunk]
        centre = -np.rint(zc.imag @ Yinv.T + shift)
        n = centre[:, None, :] + box[None, :, :] + shift  # (P, B, g)
        quad = np.einsum("pbi,ij,pbj->pb", n, tau, n)
        lin = np.einsum("pbi,pi->pb", n, zc)
        out[start:start + chunk] = np.exp(1j * math.pi * quad + 2j * math.pi * lin).sum(axis=1)
    return out


def _as_points(z, g: int) -> tuple[np.ndarray, tuple]:
    z = np.asarray(z, dtype=complex)
    if g == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        lead = z.shape
        return z.reshape(-1, 1), lead
    if z.shape[-1] != g:
        raise ValueError(f"z must have trailing dimension {g}")
    lead = z.shape[:-1]
    return z.reshape(-1, g), lead


def riemann_theta(z, tau):
    """Riemann theta ``sum_n exp(i pi n^T tau n + 2 i pi n^T z)`` for genus <= 3.

    ``z`` has trailing dimension ``g`` (or is scalar-like for ``g = 1``).
    """
    t = check_period_matrix(tau)
    pts, lead = _as_points(z, t.shape[0])
    check_finite(pts, "z")
    out = _theta_sum(pts, t, np.zeros(t.shape[0])).reshape(lead)
    return out.item() if out.ndim == 0 else out


def theta_norm_sq(z, tau):
    """``exp(-2 pi Im(z)^T Im(tau)^{-1} Im(z)) |theta(z, tau)|^2``.

    Invariant under ``z -> z + m + tau n`` for integer vectors ``m, n``.
    """
    t = check_period_matrix(tau)
    pts, lead = _as_points(z, t.shape[0])
    check_finite(pts, "z")
    th = _theta_sum(pts, t, np.zeros(t.shape[0]))
    y = pts.imag
    gauss = np.einsum("pi,ij,pj->p", y, np.linalg.inv(t.imag), y)
    out = (np.exp(-2 * math.pi * gauss) * np.abs(th) ** 2).reshape(lead)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class ThetaCharacteristic:
    """Genus-one theta characteristic ``[a; b]`` held as exact fractions."""

    a: Fraction
    b: Fraction

    def __init__(self, a, b):
        object.__setattr__(self, "a", Fraction(a).limit_denominator(10**9))
        object.__setattr__(self, "b", Fraction(b).limit_denominator(10**9))


def theta_with_char(char, z, tau):
    """``theta[a; b](z, tau) = sum_n exp(i pi (n+a)^2 tau + 2 i pi (n+a)(z+b))``."""
    if not isinstance(char, ThetaCharacteristic):
        char = ThetaCharacteristic(*char)
    t = np.array([[check_tau(tau)]])
    z = np.asarray(z, dtype=complex)
    pts = (z + float(char.b)).reshape(-1, 1)
    check_finite(pts, "z")
    out = _theta_sum(pts, t, np.array([float(char.a)])).reshape(z.shape)
    return out.item() if out.ndim == 0 else out


# ---------------------------------------------------------------- zeta

def _pochhammer(s: float, m: int) -> float:
    p = 1.0
    for i in range(m):
        p *= s + i
    return p


def _pochhammer_deriv(s: float, m: int) -> float:
    total = 0.0
    for i in range(m):
        p = 1.0
        for j in range(m):
            if j != i:
                p *= s + j
        total += p
    return total


def _bernoulli_poly(n: int, x: float) -> float:
    """Bernoulli polynomial ``B_n(x)`` for ``n <= 16``."""
    coeffs = {0: Fraction(1), 1: Fraction(-1, 2)}
    coeffs.update({2 * j + 2: b for j, b in enumerate(_BERNOULLI)})
    return math.fsum(math.comb(n, j) * float(coeffs[j]) * x ** (n - j)
                     for j in range(n + 1) if j in coeffs)


def _em_split(a: float, s: float = 0.0) -> tuple[int, float]:
    # the Bernoulli tail behaves like ((s + 2j) / (2 pi x))^(2j), so x must
    # also grow with s
    target = max(_EM_SHIFT, 1.2 * s)
    n_head = max(0, int(math.ceil(target - a)))
    return n_head, a + n_head


def hurwitz_zeta(s: float, a: float, log_scale: float = 0.0) -> float:
    """Hurwitz zeta ``sum_{m>=0} (m+a)^{-s}`` by Euler-Maclaurin.

    ``log_scale`` returns ``exp(s * log_scale) * zeta(s, a)`` without
    overflowing, which the series in :mod:`coulomb.exactpf` needs for
    ``(k+1)^n zeta(n, k+2)`` at large ``n``.
    """
    s = float(s)
    a = float(a)
    if not (math.isfinite(s) and math.isfinite(a)):
        raise ValueError("s and a must be finite")
    if s == 1.0:
        raise ValueError("hurwitz_zeta has a pole at s = 1")
    if a <= 0:
        raise ValueError("a must be positive")
    if s <= 0 and s.is_integer() and s >= -15:
        return math.exp(s * log_scale) * _bernoulli_poly(1 - int(s), a) / (s - 1.0)
    n_head, x = _em_split(a, s)
    head = np.exp(s * (log_scale - np.log(a + np.arange(n_head)))).tolist()
    base = math.exp(s * (log_scale - math.log(x)))
    tail = [base * x / (s - 1.0), 0.5 * base]
    for j, c in enumerate(_EM_COEFF, start=1):
        tail.append(c * _pochhammer(s, 2 * j - 1) * base * x ** (1 - 2 * j))
    return math.fsum(head + tail)


def _hurwitz_zeta_ds(s: float, a: float) -> float:
    """Derivative in ``s`` of the Euler-Maclaurin representation of zeta(s, a)."""
    n_head, x = _em_split(a, s)
    parts = [-math.log(a + m) * (a + m) ** (-s) for m in range(n_head)]
    lx = math.log(x)
    base = x ** (-s)
    t1 = base * x / (s - 1.0)
    parts += [-lx * t1 - base * x / (s - 1.0) ** 2, -0.5 * lx * base]
    for j, c in enumerate(_EM_COEFF, start=1):
        m = 2 * j - 1
        w = c * x ** (1 - 2 * j) * base
        parts.append(w * (_pochhammer_deriv(s, m) - lx * _pochhammer(s, m)))
    return math.fsum(parts)


@lru_cache(maxsize=None)
def _zeta_prime_minus1_em() -> float:
    return _hurwitz_zeta_ds(-1.0, 1.0)


def glaisher_log() -> float:
    """ln A for the Glaisher-Kinkelin constant, from zeta'(2).

    Uses ``zeta'(2) = zeta(2) (gamma + ln 2 pi - 12 ln A)``.
    """
    zp2 = _hurwitz_zeta_ds(2.0, 1.0)
    return (np.euler_gamma + LN_2PI - 6.0 * zp2 / math.pi**2) / 12.0


def zeta_prime_minus1() -> float:
    """The constant zeta'(-1), about -0.1654211437.

    Taken from the Glaisher route, which avoids the cancellation that
    limits the direct Euler-Maclaurin derivative to about 1e-13.
    """
    return 1.0 / 12.0 - glaisher_log()


def hurwitz_zeta_deriv(s, a) -> float:
    """Closed forms of the s-derivative of zeta(s, a) at s in {-1, 0} for integer a."""
    a = check_int(a, "a", minimum=1)
    if s == 0:
        return math.lgamma(a) - 0.5 * LN_2PI
    if s == -1:
        return math.fsum([zeta_prime_minus1()] + [n * math.log(n) for n in range(2, a)])
    raise ValueError(f"hurwitz_zeta_deriv supports s in {{-1, 0}}, got {s!r}")


# ---------------------------------------------------------------- Barnes G

def log_factorial(n) -> float:
    n = check_int(n, "n", minimum=0)
    return math.lgamma(n + 1.0)


def log_barnes_g(n) -> float:
    """``ln G(n+1) = sum_{j=1}^{n-1} ln j!``."""
    n = check_int(n, "n", minimum=1)
    return math.fsum(math.lgamma(j + 1.0) for j in range(1, n))


def log_barnes_g_asymptotic(n) -> float:
    """Large-n form of ``ln G(n+1)``."""
    n = check_int(n, "n", minimum=2)
    ln_n = math.log(n)
    return (0.5 * n * n * ln_n - 0.75 * n * n + 0.5 * n * LN_2PI
            - ln_n / 12.0 + zeta_prime_minus1())


def sum_j_ln_j(n) -> float:
    """``sum_{j=1}^n j ln j``."""
    n = check_int(n, "n", minimum=1)
    return math.fsum(j * math.log(j) for j in range(2, n + 1))


def sum_j_ln_j_asymptotic(n) -> float:
    n = check_int(n, "n", minimum=1)
    ln_n = math.log(n)
    return (n * n / 2 + n / 2 + 1.0 / 12) * ln_n - n * n / 4 + 1.0 / 12 - zeta_prime_minus1()
