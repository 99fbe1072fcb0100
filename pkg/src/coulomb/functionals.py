"""Geometric functionals of conformal metrics, evaluated by grid quadrature.

A metric is represented by :class:`ConformalMetric`, i.e. a log-factor
``s`` with ``rho = exp(2 s) rho_can`` sampled on a grid. All functionals
take their reference metric ``rho_0`` in that form, so composing metric
changes is just adding log-factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_field
from .exceptions import AdmissibilityError
from .geometry import (
    PotentialSpec,
    QuadratureGrid,
    canonical_curvature,
    green_canonical,
    green_integral,
    laplacian_field,
    sigma_arakelov,
    solve_poisson,
)


class ConformalMetric:
    """The metric ``exp(2 s) rho_can`` on a quadrature grid."""

    def __init__(self, grid: QuadratureGrid, log_factor=0.0, name: str = "conformal"):
        self.grid = grid
        self.log_factor = check_field(log_factor, grid).astype(float)
        self.name = name

    @classmethod
    def canonical(cls, grid: QuadratureGrid) -> "ConformalMetric":
        return cls(grid, 0.0, "canonical")

    @classmethod
    def arakelov(cls, grid: QuadratureGrid) -> "ConformalMetric":
        return cls(grid, sigma_arakelov(grid.surface), "arakelov")

    @property
    def genus(self) -> int:
        return self.grid.surface.genus

    @property
    def weights(self) -> np.ndarray:
        return self.grid.canonical_weights * np.exp(2.0 * self.log_factor)

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    @property
    def curvature(self) -> np.ndarray:
        s = self.log_factor
        return np.exp(-2.0 * s) * (canonical_curvature(self.grid.surface) + 2.0 * laplacian_field(s, self.grid))

    def laplacian(self, values) -> np.ndarray:
        return np.exp(-2.0 * self.log_factor) * laplacian_field(check_field(values, self.grid), self.grid)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, check_field(values, self.grid)))

    def rescaled(self, sigma) -> "ConformalMetric":
        """The metric ``exp(2 sigma) * self``."""
        return ConformalMetric(self.grid, self.log_factor + check_field(sigma, self.grid))


def _metric(ref) -> ConformalMetric:
    if isinstance(ref, ConformalMetric):
        return ref
    if isinstance(ref, QuadratureGrid):
        return ConformalMetric.canonical(ref)
    raise TypeError("reference must be a ConformalMetric or a QuadratureGrid")


def _same_grid(metric: ConformalMetric, *fields):
    return [check_field(f, metric.grid) for f in fields]


@dataclass(frozen=True)
class ConformalPair:
    """``rho = exp(2 sigma) rho_0`` together with its Kahler potential ``phi``."""

    sigma: np.ndarray
    phi: np.ndarray
    reference: str


def kahler_potential(sigma, ref) -> np.ndarray:
    """Kahler potential ``phi`` of ``rho = exp(2 sigma) rho_0``.

    Solves ``exp(2 sigma) = vol/vol_0 - (vol/2) Delta_0 phi`` in the gauge
    where ``phi`` has zero ``rho_0``-mean.
    """
    m = _metric(ref)
    (sigma,) = _same_grid(m, sigma)
    e2 = np.exp(2.0 * sigma)
    vol0 = m.volume
    vol = m.integrate(e2)
    # Delta_can phi = exp(2 s) Delta_0 phi
    rhs = np.exp(2.0 * m.log_factor) * 2.0 * (1.0 / vol0 - e2 / vol)
    phi = solve_poisson(rhs, m.grid)
    return phi - m.integrate(phi) / vol0


def conformal_pair(sigma, ref) -> ConformalPair:
    m = _metric(ref)
    (sigma,) = _same_grid(m, sigma)
    return ConformalPair(sigma, kahler_potential(sigma, m), m.name)


def s_liouville(sigma, ref) -> float:
    """Liouville functional ``int mu_0 (sigma Delta_0 sigma + R_0 sigma)``."""
    m = _metric(ref)
    (sigma,) = _same_grid(m, sigma)
    return m.integrate(sigma * m.laplacian(sigma) + m.curvature * sigma)


def s_mabuchi(sigma, phi, ref) -> float:
    """Mabuchi functional of the pair ``(sigma, phi)`` over ``rho_0``."""
    m = _metric(ref)
    sigma, phi = _same_grid(m, sigma, phi)
    g = m.genus
    e2 = np.exp(2.0 * sigma)
    vol = m.integrate(e2)
    integrand = (-2.0 * math.pi * (1 - g) * phi * m.laplacian(phi)
                 + (8.0 * math.pi * (1 - g) / m.volume - m.curvature) * phi
                 + 4.0 * sigma * e2 / vol)
    return m.integrate(integrand)


def s_aubin_yau(phi, ref) -> float:
    """Aubin-Yau functional ``-int mu_0 (phi Delta_0 phi / 4 - phi / vol_0)``."""
    m = _metric(ref)
    (phi,) = _same_grid(m, phi)
    return -m.integrate(0.25 * phi * m.laplacian(phi) - phi / m.volume)


def admissible_field(ref) -> np.ndarray:
    """``B/k`` for an admissible Hermitian metric: ``2 pi exp(-2 s)``."""
    m = _metric(ref)
    return 2.0 * math.pi * np.exp(-2.0 * m.log_factor)


def magnetic_after_change(sigma, psi, ref, b0=None) -> np.ndarray:
    """``B/k`` after ``rho -> exp(2 sigma) rho`` and ``h -> exp(-k psi) h``."""
    m = _metric(ref)
    sigma, psi = _same_grid(m, sigma, psi)
    b0 = admissible_field(m) if b0 is None else check_field(b0, m.grid)
    return np.exp(-2.0 * sigma) * (b0 - 0.5 * m.laplacian(psi))


def s1(sigma, psi, ref, b0=None) -> float:
    """First magnetic functional; ``b0`` is ``B(rho_0, h_0)/k`` (admissible by default)."""
    m = _metric(ref)
    sigma, psi = _same_grid(m, sigma, psi)
    b0 = admissible_field(m) if b0 is None else check_field(b0, m.grid)
    integrand = -0.5 * psi * m.curvature + 2.0 * sigma * (b0 - 0.5 * m.laplacian(psi))
    return m.integrate(integrand) / (2.0 * math.pi)


def s2(psi, ref, b0=None) -> float:
    """Second magnetic functional ``(1/2pi) int mu_0 (-psi Delta_0 psi / 4 + b0 psi)``."""
    m = _metric(ref)
    (psi,) = _same_grid(m, psi)
    b0 = admissible_field(m) if b0 is None else check_field(b0, m.grid)
    return m.integrate(-0.25 * psi * m.laplacian(psi) + b0 * psi) / (2.0 * math.pi)


def ricci_potential(ref) -> np.ndarray:
    """Mean-zero solution of ``Delta_rho Psi = R_rho - mean(R_rho)``."""
    m = _metric(ref)
    s = m.log_factor
    if np.ptp(s) == 0.0:
        return np.zeros(m.grid.size)
    r_bar = canonical_curvature(m.grid.surface) / m.volume
    rhs = np.exp(2.0 * s) * (m.curvature - r_bar)
    psi = solve_poisson(rhs, m.grid)
    return psi - m.integrate(psi) / m.volume


def polyakov(ref) -> float:
    """Polyakov functional ``(1/4) int mu R Psi``."""
    m = _metric(ref)
    return 0.25 * m.integrate(m.curvature * ricci_potential(m))


# ---------------------------------------------------------------- magnetic free energy

@dataclass(frozen=True)
class FTerms:
    """Coefficients of ``F = a k ln k + b k + c ln k + d``."""

    klogk: float
    k: float
    logk: float
    constant: float

    def __call__(self, k: float) -> float:
        return self.klogk * k * math.log(k) + self.k * k + self.logk * math.log(k) + self.constant


def f_curly(ref, b, genus: int | None = None, mass_tol: float = 1e-8) -> FTerms:
    """Large-k pieces of the magnetic free energy for ``b = B/(2 pi k)``.

    ``b`` must be positive with unit ``rho``-mass.
    """
    m = _metric(ref)
    (b,) = _same_grid(m, b)
    g = m.genus if genus is None else genus
    if np.min(b) <= 0:
        raise AdmissibilityError(float(np.min(b)))
    mass = m.integrate(b)
    if abs(mass - 1.0) > mass_tol:
        raise ValueError(f"b must have unit mass, got {mass!r}")
    lb = np.log(b)
    const = (m.integrate(m.curvature * lb) / (12.0 * math.pi)
             + m.integrate(lb * m.laplacian(lb)) / (48.0 * math.pi))
    return FTerms(0.5 * mass, 0.5 * m.integrate(b * lb), 2.0 * (1 - g) / 3.0, const)


# ---------------------------------------------------------------- equilibrium measure

@dataclass(frozen=True)
class EquilibriumData:
    """Equilibrium density ``f_V``, the weights of ``mu_V`` and the constant ``c_V``."""

    potential: PotentialSpec
    f_V: np.ndarray
    mu_V_weights: np.ndarray
    c_V: float


def equilibrium(potential: PotentialSpec, grid: QuadratureGrid, floor: float = 1e-6) -> EquilibriumData:
    """Equilibrium measure ``mu_V = f_V mu_can`` of an admissible potential."""
    potential.check_admissible(grid, floor)
    f = potential.equilibrium_density(grid.surface, grid.nodes)
    v = potential(grid.surface, grid.nodes)
    # the identity below integrated against mu_can forces c_V = (1/2) int mu_can V
    c_v = 0.5 * grid.integrate(v)
    return EquilibriumData(potential, f, grid.canonical_weights * f, c_v)


def equilibrium_identity(data: EquilibriumData, grid: QuadratureGrid, ys: Sequence[complex]) -> np.ndarray:
    """``int mu_V(x) G(x, y) + V(y)/2`` at each ``y``; constant and equal to ``c_V``."""
    surf = grid.surface
    pot = data.potential
    out = []
    for y in ys:
        val = green_integral(grid, lambda x: pot.equilibrium_density(surf, x), y)
        out.append(val + 0.5 * float(pot(surf, np.asarray(y))))
    return np.array(out)


def green_variation_defect(sigma, grid: QuadratureGrid, ys: Sequence[complex]) -> np.ndarray:
    """Mass of the varied Green function under ``rho = exp(2 sigma) rho_can``.

    The candidate ``G_can(x, y) - pi (phi(x) + phi(y)) + 2 pi S_AY(phi)``
    solves the Green equation of ``rho`` in ``x`` for any constant; this
    returns its ``rho``-integral in ``x``, which must vanish.
    """
    m = ConformalMetric.canonical(grid)
    (sigma,) = _same_grid(m, sigma)
    phi = kahler_potential(sigma, m)
    say = s_aubin_yau(phi, m)
    e2 = np.exp(2.0 * sigma)
    nodes = grid.nodes
    shape = grid.shape
    if grid.surface.genus != 1:
        raise ValueError("green_variation_defect is implemented on the torus")
    coeffs = np.fft.fft2(e2.reshape(shape)) / e2.size
    freqs = np.fft.fftfreq(shape[0], 1.0 / shape[0])
    tau = grid.surface.tau

    def dens(x):
        x = np.asarray(x, dtype=complex)
        t = x.imag / tau.imag
        s = x.real - tau.real * t
        ph = np.exp(2j * math.pi * np.multiply.outer(s, freqs))
        pt = np.exp(2j * math.pi * np.multiply.outer(t, freqs))
        return np.einsum("...i,ij,...j->...", ph, coeffs, pt).real

    out = []
    mean_term = m.integrate(e2 * (-math.pi * phi))
    vol = m.integrate(e2)
    for y in ys:
        idx = int(np.argmin(np.abs(nodes - y)))
        y0 = nodes[idx]
        g_part = green_integral(grid, dens, y0)
        out.append(g_part + mean_term + vol * (-math.pi * phi[idx] + 2.0 * math.pi * say))
    return np.array(out)

