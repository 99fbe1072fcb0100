"""Surfaces, quadrature grids, canonical and Arakelov metrics, Green functions.

The sphere is described in one stereographic chart ``z``; the torus
``C / (Z + tau Z)`` in the chart ``z = s + tau t`` with ``s, t in [0, 1)``.
Densities are with respect to Lebesgue measure ``dx dy`` in the chart,
and the Laplacian is the positive one, ``Delta_rho = -(1/rho)(d_xx + d_yy)``.

Fields sampled on a grid are plain ``numpy`` arrays aligned with
``grid.nodes``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from ._validation import check_genus, check_int, check_tau
from .exceptions import AdmissibilityError
from .specfun import dedekind_eta, jacobi_theta1

SPHERE_CHART = "stereographic"
TORUS_CHART = "fundamental-domain"


# ---------------------------------------------------------------- surfaces

@dataclass(frozen=True)
class SurfaceSpec:
    genus: int
    tau: complex | None = None

    def __post_init__(self):
        g = check_genus(self.genus)
        object.__setattr__(self, "genus", g)
        if g == 1:
            if self.tau is None:
                raise ValueError("a torus needs a modulus tau")
            object.__setattr__(self, "tau", check_tau(self.tau))
        elif self.tau is not None:
            raise ValueError("the sphere takes no modulus")

    @property
    def euler_characteristic(self) -> int:
        return 2 - 2 * self.genus

    @property
    def im_tau_det(self) -> float:
        """det Im(tau), taken as 1 on the sphere."""
        return 1.0 if self.genus == 0 else self.tau.imag


def sphere() -> SurfaceSpec:
    return SurfaceSpec(0)


def torus(tau) -> SurfaceSpec:
    return SurfaceSpec(1, tau)


def torus_coordinates(z, tau: complex):
    """Split ``z = s + tau t`` into real lattice coordinates ``(s, t)``."""
    z = np.asarray(z, dtype=complex)
    t = z.imag / tau.imag
    return z.real - tau.real * t, t


# ---------------------------------------------------------------- grids

@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor quadrature grid in a fixed chart.

    ``weights`` integrate against Lebesgue measure in the chart;
    ``canonical_weights`` are the same nodes weighted by the canonical
    volume form and sum to one.
    """

    surface: SurfaceSpec
    nodes: np.ndarray
    weights: np.ndarray
    chart: str
    resolution: int
    shape: tuple[int, int]
    canonical_weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> float:
        """Integral of a sampled field against the canonical volume form."""
        return float(np.dot(self.canonical_weights, np.asarray(values).reshape(-1)).real)


@lru_cache(maxsize=32)
def _sphere_grid(resolution: int) -> QuadratureGrid:
    n_u, n_phi = resolution, 2 * resolution
    x, w = np.polynomial.legendre.leggauss(n_u)
    # x is the height (1 - |z|^2) / (1 + |z|^2); u = |z|^2 / (1 + |z|^2)
    x = x[::-1]
    w = w[::-1]
    u = 0.5 * (1.0 - x)
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    r = np.sqrt(u / (1.0 - u))
    nodes = (r[:, None] * np.exp(1j * phi)[None, :]).reshape(-1)
    w_u = 0.5 * w
    cw = np.repeat(w_u / n_phi, n_phi)
    lebesgue = np.repeat(w_u * math.pi / (n_phi * (1.0 - u) ** 2), n_phi)
    return QuadratureGrid(sphere(), nodes, lebesgue, SPHERE_CHART, resolution,
                          (n_u, n_phi), cw)


@lru_cache(maxsize=32)
def _torus_grid(tau: complex, resolution: int) -> QuadratureGrid:
    n = resolution
    s = np.arange(n) / n
    nodes = (s[:, None] + tau * s[None, :]).reshape(-1)
    lebesgue = np.full(n * n, tau.imag / (n * n))
    cw = np.full(n * n, 1.0 / (n * n))
    return QuadratureGrid(torus(tau), nodes, lebesgue, TORUS_CHART, n, (n, n), cw)


def make_grid(surface: SurfaceSpec, resolution: int) -> QuadratureGrid:
    """Quadrature grid on ``surface``.

    Sphere: Gauss-Legendre in ``u = |z|^2/(1+|z|^2)`` times ``2*resolution``
    uniform angles. Torus: uniform ``resolution x resolution`` grid.
    """
    resolution = check_int(resolution, "resolution", minimum=8)
    if surface.genus == 0:
        return _sphere_grid(resolution)
    return _torus_grid(surface.tau, resolution)


def dump_grid(grid: QuadratureGrid, path) -> None:
    """Write a grid as CSV with a versioned header line."""
    tau = grid.surface.tau or 0j
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# coulomb-grid v1 {grid.surface.genus} {tau.real!r} {tau.imag!r} {grid.resolution}\n")
        fh.write("re,im,weight\n")
        for z, w in zip(grid.nodes, grid.weights):
            fh.write(f"{z.real:.17g},{z.imag:.17g},{w:.17g}\n")


def load_grid(path) -> QuadratureGrid:
    """Read a grid written by :func:`dump_grid`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:3] != ["#", "coulomb-grid", "v1"]:
            raise ValueError("not a coulomb-grid v1 file")
        genus, re_tau, im_tau, res = int(header[3]), float(header[4]), float(header[5]), int(header[6])
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    surface = sphere() if genus == 0 else torus(complex(re_tau, im_tau))
    nodes = data[:, 0] + 1j * data[:, 1]
    weights = data[:, 2]
    shape = (res, 2 * res) if genus == 0 else (res, res)
    cw = weights * canonical_density(surface, nodes)
    chart = SPHERE_CHART if genus == 0 else TORUS_CHART
    return QuadratureGrid(surface, nodes, weights, chart, res, shape, cw)


# ---------------------------------------------------------------- metrics

def canonical_density(surface: SurfaceSpec, z):
    """Canonical volume density (unit total mass) w.r.t. ``dx dy``."""
    z = np.asarray(z, dtype=complex)
    if surface.genus == 0:
        return 1.0 / (math.pi * (1.0 + np.abs(z) ** 2) ** 2)
    return np.full(z.shape, 1.0 / surface.tau.imag)[()]


def canonical_curvature(surface: SurfaceSpec) -> float:
    """Constant scalar curvature of the canonical metric, ``8 pi (1 - g)``."""
    return 8.0 * math.pi * (1 - surface.genus)


def sigma_arakelov(surface: SurfaceSpec) -> float:
    """Constant log-ratio ``sigma_Ar`` with ``rho_Ar = exp(2 sigma_Ar) rho_can``."""
    if surface.genus == 0:
        return 0.5 * (1.0 + math.log(math.pi))
    eta = abs(dedekind_eta(surface.tau))
    return math.log(2.0 * math.pi * math.sqrt(surface.tau.imag) * eta**2)


def arakelov_density(surface: SurfaceSpec, z):
    """Arakelov metric density w.r.t. ``dx dy``."""
    z = np.asarray(z, dtype=complex)
    if surface.genus == 0:
        return math.e / (1.0 + np.abs(z) ** 2) ** 2
    return np.full(z.shape, 4.0 * math.pi**2 * abs(dedekind_eta(surface.tau)) ** 4)[()]


def volume_arakelov(surface: SurfaceSpec) -> float:
    if surface.genus == 0:
        return math.pi * math.e
    return 4.0 * math.pi**2 * surface.tau.imag * abs(dedekind_eta(surface.tau)) ** 4


# ---------------------------------------------------------------- Green function

def _reduce_torus(d: np.ndarray, tau: complex) -> np.ndarray:
    s, t = torus_coordinates(d, tau)
    s = s - np.floor(s + 0.5)
    t = t - np.floor(t + 0.5)
    return s + tau * t


def green_canonical(surface: SurfaceSpec, z, w):
    """Green function of the canonical metric (mean zero, ``Delta G = -2 pi delta + 2 pi``)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if surface.genus == 0:
        out = 0.5 + np.log(np.abs(z - w)) - 0.5 * np.log1p(np.abs(z) ** 2) - 0.5 * np.log1p(np.abs(w) ** 2)
    else:
        tau = surface.tau
        d = _reduce_torus(z - w, tau)
        eta = dedekind_eta(tau)
        out = (np.log(np.abs(jacobi_theta1(d, tau))) - math.log(abs(eta))
               - math.pi * d.imag**2 / tau.imag)
    return out[()] if isinstance(out, np.ndarray) else out


def green_regular_part(surface: SurfaceSpec, w):
    """``lim_{z -> w} G(z, w) - ln|z - w|`` in the chart."""
    w = np.asarray(w, dtype=complex)
    if surface.genus == 0:
        return (0.5 - np.log1p(np.abs(w) ** 2))[()]
    eta = abs(dedekind_eta(surface.tau))
    return np.full(w.shape, math.log(2.0 * math.pi * eta**2))[()]


def _smooth_step(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def _cutoff_radius(surface: SurfaceSpec, y: complex) -> float:
    if surface.genus == 0:
        return 0.5 * min(1.0, 0.5 * (1.0 + abs(y) ** 2))
    tau = surface.tau
    shortest = min(abs(v) for v in (1.0, tau, tau - 1.0, tau + 1.0))
    return 0.45 * min(shortest, tau.imag)


def green_integral(grid: QuadratureGrid, f: Callable, y: complex, n_radial: int = 48,
                   n_angular: int = 64) -> float:
    """``int mu_can(x) f(x) G(x, y)`` with the logarithmic singularity removed.

    ``G`` is split as ``chi(|x-y|) ln|x-y| + rest`` with ``chi`` a smooth
    bump. The smooth rest goes through the grid rule; the local log part
    is integrated in polar coordinates around ``y``. ``f`` must accept an
    array of chart points.
    """
    surface = grid.surface
    y = complex(y)
    r0 = _cutoff_radius(surface, y)
    x = grid.nodes
    d = x - y
    if surface.genus == 1:
        d = _reduce_torus(d, surface.tau)
    r = np.abs(d)
    chi = 1.0 - _smooth_step(r / r0)
    hit = r < 1e-13
    with np.errstate(divide="ignore"):
        g = np.where(hit, 0.0, green_canonical(surface, np.where(hit, y + 1.0, x), y))
        local = np.where(hit, 0.0, chi * np.log(np.where(hit, 1.0, r)))
    rest = np.where(hit, green_regular_part(surface, y), g - local)
    smooth_part = np.dot(grid.canonical_weights, np.asarray(f(x)) * rest).real

    # polar part: r = r0 t^2 absorbs the r ln r behaviour at the centre
    t, wt = np.polynomial.legendre.leggauss(n_radial)
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    rr = r0 * t**2
    theta = 2.0 * math.pi * np.arange(n_angular) / n_angular
    pts = y + rr[:, None] * np.exp(1j * theta)[None, :]
    dens = canonical_density(surface, pts)
    vals = np.asarray(f(pts)) * dens
    ang = vals.mean(axis=1) * 2.0 * math.pi
    chi_r = 1.0 - _smooth_step(t**2)
    radial = ang * chi_r * np.log(rr) * rr * (2.0 * r0 * t)
    return float(smooth_part + np.dot(wt, radial).real)


# ---------------------------------------------------------------- spectral calculus

@lru_cache(maxsize=8)
def _legendre_tables(n_u: int, n_phi: int):
    """Orthonormal associated Legendre functions at the Gauss nodes, per order m."""
    x, w = np.polynomial.legendre.leggauss(n_u)
    x = x[::-1]
    w = w[::-1]
    lmax = n_u - 1
    mmax = min(lmax, n_phi // 2 - 1)
    sin_t = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    tables = []
    pmm = np.full(n_u, math.sqrt(0.5))
    for m in range(mmax + 1):
        if m > 0:
            pmm = pmm * math.sqrt((2 * m + 1) / (2 * m)) * sin_t
        rows = [pmm]
        if m < lmax:
            rows.append(math.sqrt(2 * m + 3) * x * pmm)
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            rows.append(a * (x * rows[-1] - b * rows[-2]))
        tables.append(np.array(rows))
    return w, tables


def _sphere_multiplier(values: np.ndarray, grid: QuadratureGrid, mult: Callable) -> np.ndarray:
    n_u, n_phi = grid.shape
    w, tables = _legendre_tables(n_u, n_phi)
    F = np.fft.rfft(values.reshape(n_u, n_phi), axis=1)
    G = np.zeros_like(F)
    for m, P in enumerate(tables):
        ell = np.arange(m, m + P.shape[0])
        coeff = P @ (w * F[:, m])
        G[:, m] = P.T @ (mult(ell) * coeff)
    return np.fft.irfft(G, n=n_phi, axis=1).reshape(-1)


def _torus_symbol(grid: QuadratureGrid) -> np.ndarray:
    n = grid.shape[0]
    tau = grid.surface.tau
    m = np.fft.fftfreq(n, 1.0 / n)
    sym = 4.0 * math.pi**2 * np.abs(m[None, :] - m[:, None] * tau) ** 2 / tau.imag
    if n % 2 == 0:
        # drop Nyquist modes so the discrete operator stays real and symmetric
        sym[n // 2, :] = 0.0
        sym[:, n // 2] = 0.0
    return sym


def _torus_multiplier(values: np.ndarray, grid: QuadratureGrid, fn: Callable) -> np.ndarray:
    n = grid.shape[0]
    F = np.fft.fft2(values.reshape(n, n))
    return np.fft.ifft2(F * fn(_torus_symbol(grid))).real.reshape(-1)


def laplacian_field(values, grid: QuadratureGrid) -> np.ndarray:
    """Canonical Laplacian of a sampled real field (spectral)."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if grid.surface.genus == 0:
        return _sphere_multiplier(v, grid, lambda ell: 4.0 * math.pi * ell * (ell + 1.0))
    return _torus_multiplier(v, grid, lambda s: s)


def solve_poisson(rhs, grid: QuadratureGrid) -> np.ndarray:
    """Mean-zero ``u`` with ``Delta_can u = rhs - mean(rhs)``."""
    v = np.asarray(rhs, dtype=float).reshape(-1)
    if grid.surface.genus == 0:
        def inv(ell):
            with np.errstate(divide="ignore"):
                return np.where(ell > 0, 1.0 / (4.0 * math.pi * ell * (ell + 1.0)), 0.0)
        return _sphere_multiplier(v, grid, inv)

    def inv_sym(s):
        with np.errstate(divide="ignore"):
            return np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return _torus_multiplier(v, grid, inv_sym)


# ---------------------------------------------------------------- potentials

@dataclass(frozen=True)
class PotentialSpec:
    """A potential from a small analytic family.

    ``zero``; ``torus-fourier`` with ``coefficients`` mapping ``(m, n)`` to
    the complex amplitude of ``exp(2 i pi (m s + n t))``; ``sphere-zonal``
    ``a * x**p`` with ``x = (1 - |z|^2)/(1 + |z|^2)``.
    """

    family: str = "zero"
    coefficients: Mapping[tuple[int, int], complex] = field(default_factory=dict)
    degree: int = 0
    amplitude: float = 0.0

    def __post_init__(self):
        if self.family not in ("zero", "torus-fourier", "sphere-zonal"):
            raise ValueError(f"unknown potential family {self.family!r}")
        if self.family == "torus-fourier":
            coeffs = {(int(m), int(n)): complex(c) for (m, n), c in dict(self.coefficients).items()}
            for (m, n), c in coeffs.items():
                partner = coeffs.get((-m, -n), 0.0)
                if abs(partner - c.conjugate()) > 1e-14 * max(1.0, abs(c)):
                    raise ValueError(f"coefficient ({m},{n}) lacks its conjugate partner")
            object.__setattr__(self, "coefficients", coeffs)
        if self.family == "sphere-zonal":
            object.__setattr__(self, "degree", check_int(self.degree, "degree", minimum=0))
            object.__setattr__(self, "amplitude", float(self.amplitude))

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero")

    @classmethod
    def zonal(cls, amplitude: float, degree: int) -> "PotentialSpec":
        return cls("sphere-zonal", degree=degree, amplitude=amplitude)

    @classmethod
    def torus_cosine(cls, amplitude: float, m: int = 1, n: int = 0) -> "PotentialSpec":
        """``amplitude * cos(2 pi (m s + n t))``."""
        if (m, n) == (0, 0):
            return cls("torus-fourier", {(0, 0): amplitude})
        return cls("torus-fourier", {(m, n): amplitude / 2, (-m, -n): amplitude / 2})

    @property
    def is_zero(self) -> bool:
        if self.family == "zero":
            return True
        if self.family == "sphere-zonal":
            return self.amplitude == 0.0
        return all(c == 0 for c in self.coefficients.values())

    def _check_surface(self, surface: SurfaceSpec):
        if self.family == "torus-fourier" and surface.genus != 1:
            raise ValueError("torus-fourier potentials live on the torus")
        if self.family == "sphere-zonal" and surface.genus != 0:
            raise ValueError("sphere-zonal potentials live on the sphere")

    def __call__(self, surface: SurfaceSpec, z):
        """Value of V at chart points."""
        self._check_surface(surface)
        z = np.asarray(z, dtype=complex)
        if self.is_zero:
            return np.zeros(z.shape)
        if self.family == "sphere-zonal":
            x = (1.0 - np.abs(z) ** 2) / (1.0 + np.abs(z) ** 2)
            return self.amplitude * x**self.degree
        s, t = torus_coordinates(z, surface.tau)
        out = np.zeros(z.shape, dtype=complex)
        for (m, n), c in self.coefficients.items():
            out += c * np.exp(2j * math.pi * (m * s + n * t))
        return out.real

    def laplacian(self, surface: SurfaceSpec, z):
        """Analytic canonical Laplacian of V at chart points."""
        self._check_surface(surface)
        z = np.asarray(z, dtype=complex)
        if self.is_zero:
            return np.zeros(z.shape)
        if self.family == "sphere-zonal":
            p, a = self.degree, self.amplitude
            x = (1.0 - np.abs(z) ** 2) / (1.0 + np.abs(z) ** 2)
            lower = p * (p - 1) * x ** (p - 2) if p >= 2 else 0.0
            return 4.0 * math.pi * a * (p * (p + 1) * x**p - lower)
        tau = surface.tau
        s, t = torus_coordinates(z, tau)
        out = np.zeros(z.shape, dtype=complex)
        for (m, n), c in self.coefficients.items():
            sym = 4.0 * math.pi**2 * abs(n - m * tau) ** 2 / tau.imag
            out += sym * c * np.exp(2j * math.pi * (m * s + n * t))
        return out.real

    def equilibrium_density(self, surface: SurfaceSpec, z):
        """``f_V = 1 + Delta_can V / 4 pi``."""
        return 1.0 + self.laplacian(surface, z) / (4.0 * math.pi)

    def check_admissible(self, grid: QuadratureGrid, floor: float = 1e-6) -> float:
        fmin = float(np.min(self.equilibrium_density(grid.surface, grid.nodes)))
        if fmin <= floor:
            raise AdmissibilityError(fmin)
        return fmin


def laplacian_canonical(potential: PotentialSpec, grid: QuadratureGrid) -> np.ndarray:
    """Analytic ``Delta_can V`` sampled on the grid nodes."""
    return potential.laplacian(grid.surface, grid.nodes)
