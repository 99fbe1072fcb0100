"""Large-N expansion coefficients of the Coulomb gas free energy.

The theta-weighted free energy is expanded in ``k = N + g - 1``::

    ln Z_theta = beta2 k^2 + alpha1 k ln k + beta1 k + alpha0 ln k + beta0

and re-expanded in ``N`` for the plain partition function. The genus
enters symbolically through :class:`ExpansionInputs`; for ``g <= 1`` the
inputs are computed numerically by :func:`expansion_inputs`.

Two potential-dependent pieces carry signs that differ from one
published form of these coefficients; ``variant="printed"`` reproduces
that form for comparison and the default ``"corrected"`` is the one
validated against exact Gram-determinant partition functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ._validation import check_int, check_period_matrix
from .exactpf import det_scalar_laplacian
from .functionals import (
    ConformalMetric,
    admissible_field,
    kahler_potential,
    polyakov,
    s2,
    s_aubin_yau,
    s_liouville,
    s_mabuchi,
)
from .geometry import (
    PotentialSpec,
    QuadratureGrid,
    SurfaceSpec,
    canonical_curvature,
    laplacian_field,
    sigma_arakelov,
    volume_arakelov,
)
from .specfun import LN_2PI, dedekind_eta, theta_norm_sq, zeta_prime_minus1

VARIANTS = ("corrected", "printed")


@dataclass(frozen=True)
class ExpansionCoefficients:
    """``quad n^2 + nlogn n ln n + linear n + logn ln n + constant``."""

    quad: float
    nlogn: float
    linear: float
    logn: float
    constant: float
    variable: str = "k"
    kind: str = "modified"
    genus: int = 0

    def __post_init__(self):
        if self.variable not in ("k", "N"):
            raise ValueError("variable must be 'k' or 'N'")
        if self.kind not in ("modified", "plain"):
            raise ValueError("kind must be 'modified' or 'plain'")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.quad, self.nlogn, self.linear, self.logn, self.constant)


@dataclass(frozen=True)
class BosonizationConstants:
    g: int
    k: int
    ln_B: float
    c_g: float


def c_zero() -> float:
    return -24.0 * zeta_prime_minus1() + 1.0 - 6.0 * LN_2PI - 2.0 * math.log(2.0)


def c_one() -> float:
    return -8.0 * LN_2PI


def c_genus(g: int) -> float:
    g = check_int(g, "g", minimum=0)
    return (1 - g) * c_zero() + g * c_one()


def ln_b_gk(g: int, k: int) -> BosonizationConstants:
    """Genus constant ``B_{g,k}`` of the bosonization formula (log)."""
    g = check_int(g, "g", minimum=0)
    k = check_int(k, "k", minimum=0)
    if k < g:
        raise ValueError(f"bosonization needs k >= g, got k={k}, g={g}")
    cg = c_genus(g)
    ln_b = (2 * g - k) * LN_2PI + cg / 4.0
    return BosonizationConstants(g, k, ln_b, cg)


def faltings_delta(surface: SurfaceSpec) -> float:
    """Faltings delta invariant ``c_g - 6 ln(det Delta_Ar / vol_Ar)``."""
    g = surface.genus
    return c_genus(g) - 6.0 * (det_scalar_laplacian(surface, "arakelov") - math.log(volume_arakelov(surface)))


def faltings_delta_closed(surface: SurfaceSpec) -> float:
    if surface.genus == 0:
        return 0.0
    tau = surface.tau
    return -6.0 * math.log(tau.imag * abs(dedekind_eta(tau)) ** 4) - 8.0 * LN_2PI


# ---------------------------------------------------------------- assembly

@dataclass(frozen=True)
class ExpansionInputs:
    """Geometric and potential-dependent numbers entering the coefficients.

    Attributes
    ----------
    genus : int
    s2_v : float
        Quadratic functional of ``V`` over the Arakelov metric with the
        magnetic field of the deformed Hermitian metric.
    s2_v_printed : float
        The same functional with the undeformed (admissible) field.
    s_ay_hat : float
        Aubin-Yau functional of the Arakelov Kahler potential.
    s_mabuchi_ar : float
        Mabuchi functional of ``(-sigma_Ar, -phi_Ar)`` over the Arakelov metric.
    s_liouville_ar : float
        Liouville functional of ``-sigma_Ar`` over the Arakelov metric.
    polyakov_can : float
    int_muv_lnf : float
        ``int mu_V ln f_V``.
    int_curv_v : float
        ``int mu_can (R_can - 16 pi (1-g)) V / 4 pi``.
    int_lnf, int_curv_lnf, int_lnf_lap_lnf : float
        ``int mu_can ln f_V``, ``int mu_can (R_can - 8 pi (1-g)) ln f_V``
        and ``int mu_can ln f_V Delta ln f_V``.
    ln_det_ar_over_vol : float
        ``ln(det Delta_Ar / vol_Ar)``.
    ln_det_im_tau : float
        ``ln det Im(tau)``, zero on the sphere.
    """

    genus: int
    s2_v: float = 0.0
    s2_v_printed: float = 0.0
    s_ay_hat: float = 0.0
    s_mabuchi_ar: float = 0.0
    s_liouville_ar: float = 0.0
    polyakov_can: float = 0.0
    int_muv_lnf: float = 0.0
    int_curv_v: float = 0.0
    int_lnf: float = 0.0
    int_curv_lnf: float = 0.0
    int_lnf_lap_lnf: float = 0.0
    ln_det_ar_over_vol: float = 0.0
    ln_det_im_tau: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "genus" and not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite")


def assemble_modified(inp: ExpansionInputs, variant: str = "corrected") -> ExpansionCoefficients:
    """In-k coefficients of the theta-weighted free energy."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    g = inp.genus
    ln2 = math.log(2.0)
    # potential-dependent pieces enter with opposite signs in the two variants
    sign = -1.0 if variant == "corrected" else 1.0
    beta2 = inp.s2_v if variant == "corrected" else inp.s2_v_printed
    beta1 = math.fsum([
        2.0 * math.pi * (1 - g) * inp.s_ay_hat,
        -0.25 * inp.s_mabuchi_ar,
        LN_2PI - 0.5 * ln2,
        sign * 0.5 * (inp.int_muv_lnf + inp.int_curv_v),
    ])
    beta0 = math.fsum([
        (1 - g) * (4.0 * zeta_prime_minus1() + 4.0 / 3.0 * LN_2PI - 5.0 / 6.0 - ln2 / 6.0),
        (inp.polyakov_can - inp.s_liouville_ar) / (6.0 * math.pi),
        -inp.polyakov_can / (12.0 * math.pi),
        -2.0 / 3.0 * (1 - g) * inp.int_lnf,
        inp.int_curv_lnf / (24.0 * math.pi),
        inp.int_lnf_lap_lnf / (48.0 * math.pi),
        0.5 * (inp.ln_det_ar_over_vol - inp.ln_det_im_tau),
    ])
    return ExpansionCoefficients(beta2, -0.5, beta1, 2.0 * (g - 1) / 3.0, beta0, "k", "modified", g)


def to_in_n(c: ExpansionCoefficients) -> ExpansionCoefficients:
    """Re-expand in-k coefficients in ``N = k - g + 1``."""
    if c.variable == "N":
        return c
    s = c.genus - 1
    return ExpansionCoefficients(
        c.quad,
        c.nlogn,
        2.0 * s * c.quad + c.linear,
        c.logn + s * c.nlogn,
        s * s * c.quad + s * c.nlogn + s * c.linear + c.constant,
        "N", c.kind, c.genus,
    )


def to_plain(c: ExpansionCoefficients, ln_det_im_tau: float = 0.0) -> ExpansionCoefficients:
    """Average the theta weight over the Jacobian: shift the constant."""
    c = to_in_n(c)
    if c.kind == "plain":
        return c
    shift = 0.5 * ln_det_im_tau + 0.5 * c.genus * math.log(2.0) if c.genus > 0 else 0.0
    return replace(c, constant=c.constant + shift, kind="plain")


def eval_expansion(c: ExpansionCoefficients, n) -> float:
    """Evaluate the five-term expansion at ``n`` (``k`` or ``N`` per ``c.variable``)."""
    n = float(n)
    if n < 2:
        raise ValueError("the expansion is evaluated at n >= 2")
    ln_n = math.log(n)
    return math.fsum([c.quad * n * n, c.nlogn * n * ln_n, c.linear * n, c.logn * ln_n, c.constant])


# ---------------------------------------------------------------- numerics for g <= 1

def expansion_inputs(surface: SurfaceSpec, potential: PotentialSpec | None = None,
                     grid: QuadratureGrid | None = None) -> ExpansionInputs:
    """Evaluate every :class:`ExpansionInputs` slot on a grid (genus 0 or 1)."""
    from .geometry import make_grid

    potential = PotentialSpec.zero() if potential is None else potential
    g = surface.genus
    if grid is None:
        grid = make_grid(surface, 64)
    if grid.surface != surface:
        raise ValueError("grid belongs to a different surface")
    ar = ConformalMetric.arakelov(grid)
    can = ConformalMetric.canonical(grid)
    sig = sigma_arakelov(surface)
    ones = np.ones(grid.size)
    # sigma_Ar is constant, so phi_Ar vanishes in the mean-zero gauge
    phi_ar = kahler_potential(sig * ones, can)
    s_m = s_mabuchi(-sig * ones, -kahler_potential(-sig * ones, ar), ar)
    s_l = s_liouville(-sig * ones, ar)
    ln_det_ar = det_scalar_laplacian(surface, "arakelov") - math.log(volume_arakelov(surface))
    ln_det_it = 0.0 if g == 0 else math.log(surface.tau.imag)
    base = dict(genus=g, s_ay_hat=s_aubin_yau(phi_ar, can), s_mabuchi_ar=s_m,
                s_liouville_ar=s_l, polyakov_can=polyakov(can),
                ln_det_ar_over_vol=ln_det_ar, ln_det_im_tau=ln_det_it)
    if potential.is_zero:
        return ExpansionInputs(**base)

    potential.check_admissible(grid)
    v = potential(surface, grid.nodes)
    lap_v = potential.laplacian(surface, grid.nodes)
    f = 1.0 + lap_v / (4.0 * math.pi)
    lnf = np.log(f)
    r_can = canonical_curvature(surface)
    b_adm = admissible_field(ar)
    b_hat = b_adm + 0.5 * ar.laplacian(v)
    return ExpansionInputs(
        **base,
        s2_v=s2(v, ar, b_hat),
        s2_v_printed=s2(v, ar, b_adm),
        int_muv_lnf=grid.integrate(f * lnf),
        int_curv_v=grid.integrate((r_can - 16.0 * math.pi * (1 - g)) * v) / (4.0 * math.pi),
        int_lnf=grid.integrate(lnf),
        int_curv_lnf=grid.integrate((r_can - 8.0 * math.pi * (1 - g)) * lnf),
        int_lnf_lap_lnf=grid.integrate(lnf * laplacian_field(lnf, grid)),
    )


def coeffs_modified(surface: SurfaceSpec, potential: PotentialSpec | None = None,
                    grid: QuadratureGrid | None = None, variant: str = "corrected") -> ExpansionCoefficients:
    """In-k coefficients of the theta-weighted free energy on the sphere or a torus."""
    return assemble_modified(expansion_inputs(surface, potential, grid), variant)


def coeffs_plain(surface: SurfaceSpec, potential: PotentialSpec | None = None,
                 grid: QuadratureGrid | None = None, variant: str = "corrected") -> ExpansionCoefficients:
    """In-N coefficients of the plain free energy."""
    inp = expansion_inputs(surface, potential, grid)
    return to_plain(assemble_modified(inp, variant), inp.ln_det_im_tau)


# ---------------------------------------------------------------- theta lemma

def theta_integral_check(g: int, tau, resolution: int, chunk: int = 65536) -> tuple[float, float]:
    """Midpoint quadrature of ``||theta||^2`` over ``z = P + tau Q``, ``(P, Q)`` in ``[0,1)^(2g)``.

    Returns ``(numeric, closed)`` with ``closed = (2^g det Im tau)^(-1/2)``.
    """
    g = check_int(g, "g", minimum=1, maximum=2)
    t = check_period_matrix(tau, max_genus=2)
    if t.shape[0] != g:
        raise ValueError(f"period matrix has genus {t.shape[0]}, expected {g}")
    resolution = check_int(resolution, "resolution", minimum=2)
    closed = (2.0**g * np.linalg.det(t.imag)) ** -0.5
    x = (np.arange(resolution) + 0.5) / resolution
    axes = np.meshgrid(*([x] * (2 * g)), indexing="ij")
    pq = np.stack([a.reshape(-1) for a in axes], axis=1)
    total = []
    for start in range(0, pq.shape[0], chunk):
        blk = pq[start:start + chunk]
        z = blk[:, :g] + blk[:, g:] @ t.T
        total.append(float(np.sum(theta_norm_sq(z, t))))
    numeric = math.fsum(total) / pq.shape[0]
    return numeric, float(closed)
