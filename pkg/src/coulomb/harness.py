"""Verification runs driven by small TOML configs.

Each ``cmd_*`` function takes a :class:`RunConfig` and returns a
:class:`RunResult`; the CLI in :mod:`coulomb.cli` only parses arguments,
writes outputs and maps results to exit codes.
"""
from __future__ import annotations

import csv
import io
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import exactpf, expansion, functionals
from .exceptions import AdmissibilityError, ConditioningError, ConfigError
from .geometry import PotentialSpec, QuadratureGrid, SurfaceSpec, make_grid, sphere, torus

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_CONFIG = 3
EXIT_CONDITIONING = 4

CSV_COLUMNS = ("n", "exact", "asymptotic", "residual", "scaled_residual")

N_MAX = 2000
RESOLUTION_RANGE = (16, 512)


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration."""

    genus: int = 0
    tau: complex = 1j
    potential: PotentialSpec = field(default_factory=PotentialSpec.zero)
    n_min: int = 20
    n_max: int = 400
    n_step: int = 0
    n_values: tuple[int, ...] = ()
    grid_resolution: int = 64
    tolerances: dict = field(default_factory=dict)
    output_path: str | None = None
    seed: int = 0

    @property
    def surface(self) -> SurfaceSpec:
        return sphere() if self.genus == 0 else torus(self.tau)

    def ns(self) -> list[int]:
        """The sweep values of ``N``.

        Explicit ``n_values`` win; otherwise ``n_step > 0`` gives an
        arithmetic range and ``n_step = 0`` a doubling ladder.
        """
        if self.n_values:
            return sorted(set(self.n_values))
        if self.n_step > 0:
            return list(range(self.n_min, self.n_max + 1, self.n_step))
        out, n = [], self.n_min
        while n <= self.n_max:
            out.append(n)
            n *= 2
        return out

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))


_TOP_KEYS = {"grid_resolution", "output_path", "seed", "surface", "potential", "sweep", "tolerances"}
_TABLE_KEYS = {
    "surface": {"genus", "tau_re", "tau_im"},
    "potential": {"family", "amplitude", "degree", "m", "n"},
    "sweep": {"n_min", "n_max", "n_step", "n_values"},
}


def _need_int(table: dict, key: str, default=None) -> int | None:
    v = table.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return v


def _need_real(table: dict, key: str, default=None) -> float | None:
    v = table.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return float(v)


def _potential_from(table: dict, genus: int) -> PotentialSpec:
    family = table.get("family", "zero")
    if family == "zero":
        return PotentialSpec.zero()
    amplitude = _need_real(table, "amplitude", 0.0)
    if family == "sphere-zonal":
        if genus != 0:
            raise ConfigError("sphere-zonal potentials need genus 0")
        degree = _need_int(table, "degree", 1)
        if degree < 0:
            raise ConfigError("degree must be nonnegative")
        return PotentialSpec.zonal(amplitude, degree)
    if family == "torus-cosine":
        if genus != 1:
            raise ConfigError("torus-cosine potentials need genus 1")
        m, n = _need_int(table, "m", 1), _need_int(table, "n", 0)
        return PotentialSpec.torus_cosine(amplitude, m, n)
    raise ConfigError(f"unknown potential family {family!r}")


def config_from_mapping(data: dict) -> RunConfig:
    """Validate a parsed TOML document; raises :class:`ConfigError`."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    for name, allowed in _TABLE_KEYS.items():
        table = data.get(name, {})
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table")
        extra = set(table) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
    surf = data.get("surface", {})
    genus = _need_int(surf, "genus", 0)
    if genus not in (0, 1):
        raise ConfigError(f"genus must be 0 or 1, got {genus}")
    tau = complex(_need_real(surf, "tau_re", 0.0), _need_real(surf, "tau_im", 1.0))
    if genus == 1 and not tau.imag > 0:
        raise ConfigError(f"Im tau must be positive, got {tau.imag}")

    sweep = data.get("sweep", {})
    n_min = _need_int(sweep, "n_min", 20)
    n_max = _need_int(sweep, "n_max", 400)
    n_step = _need_int(sweep, "n_step", 0)
    raw_values = sweep.get("n_values", [])
    if not isinstance(raw_values, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in raw_values):
        raise ConfigError("n_values must be a flat list of integers")
    values = tuple(raw_values)
    lo = min(values) if values else n_min
    hi = max(values) if values else n_max
    if lo < 2 or n_min < 2:
        raise ConfigError("n_min must be at least 2")
    if hi > N_MAX or n_max > N_MAX:
        raise ConfigError(f"n_max must be at most {N_MAX}")
    if not values and n_min > n_max:
        raise ConfigError("n_min exceeds n_max")
    if n_step < 0:
        raise ConfigError("n_step must be nonnegative")

    res = _need_int(data, "grid_resolution", 64)
    if not RESOLUTION_RANGE[0] <= res <= RESOLUTION_RANGE[1]:
        raise ConfigError(f"grid_resolution must lie in {list(RESOLUTION_RANGE)}, got {res}")
    tols = data.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ConfigError("[tolerances] must be a table")
    tolerances = {}
    for k, v in tols.items():
        tv = _need_real(tols, k)
        if not tv > 0:
            raise ConfigError(f"tolerance {k} must be positive")
        tolerances[k] = tv
    out = data.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_path must be a string")
    try:
        potential = _potential_from(data.get("potential", {}), genus)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(genus, tau, potential, n_min, n_max, n_step, values, res,
                     tolerances, out, _need_int(data, "seed", 0))


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return config_from_mapping(data)


# ---------------------------------------------------------------- results and CSV

@dataclass(frozen=True)
class ResidualRow:
    n: int
    exact: float
    asymptotic: float
    residual: float
    scaled_residual: float

    @classmethod
    def build(cls, n: int, exact: float, asymptotic: float) -> "ResidualRow":
        r = abs(exact - asymptotic)
        return cls(int(n), float(exact), float(asymptotic), r, r * n / math.log(n))


@dataclass
class RunResult:
    code: int
    lines: list[str] = field(default_factory=list)
    rows: list[ResidualRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.code == EXIT_OK


def _fmt(x: float) -> str:
    return format(x, ".17g")


def rows_to_csv(rows: Iterable[ResidualRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sorted(rows, key=lambda r: r.n):
        w.writerow([str(r.n)] + [_fmt(getattr(r, c)) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResidualRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    return [ResidualRow(int(r[0]), *(float(x) for x in r[1:])) for r in reader if r]


def write_csv(rows: Sequence[ResidualRow], path) -> None:
    Path(path).write_text(rows_to_csv(rows))


def worker_count() -> int:
    raw = os.environ.get("COULOMB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def _sweep(fn: Callable[[int], ResidualRow], ns: Sequence[int]) -> list[ResidualRow]:
    workers = min(worker_count(), len(ns))
    if workers <= 1:
        rows = [fn(n) for n in ns]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(fn, ns))
    return sorted(rows, key=lambda r: r.n)


def _doubling_chain(ns: Sequence[int]) -> list[int]:
    """The longest ``n, n/2, n/4, n/8`` chain ending at the largest ``n``."""
    present = set(ns)
    chain = [max(ns)]
    while len(chain) < 4 and chain[-1] % 2 == 0 and chain[-1] // 2 in present:
        chain.append(chain[-1] // 2)
    return chain[::-1]


# ---------------------------------------------------------------- commands

def cmd_verify_sphere(cfg: RunConfig) -> RunResult:
    """Sphere residual table against the plain-N expansion."""
    if cfg.genus != 0:
        raise ConfigError("verify-sphere needs genus 0")
    surf = sphere()
    grid = make_grid(surf, cfg.grid_resolution)
    pot = cfg.potential
    try:
        coeffs = expansion.coeffs_plain(surf, pot, grid)
    except AdmissibilityError as exc:
        return RunResult(EXIT_FAIL, [f"admissibility diagnostic: {exc}"])

    def row(n: int) -> ResidualRow:
        if pot.is_zero:
            exact = exactpf.ln_z_sphere_exact(n)
        else:
            exact = exactpf.ln_z_sphere_gram(n, pot, make_grid(surf, max(4 * n, cfg.grid_resolution))).value
        return ResidualRow.build(n, exact, expansion.eval_expansion(coeffs, n))

    rows = _sweep(row, cfg.ns())
    bound = cfg.tolerance("scaled_residual", 1.0)
    floor = cfg.tolerance("residual_floor", 1e-11)
    lines = []
    ok = True
    worst = max(r.scaled_residual for r in rows)
    if worst > bound:
        ok = False
        lines.append(f"scaled residual {worst:.3e} exceeds {bound:.3e}")
    by_n = {r.n: r for r in rows}
    chain = _doubling_chain([r.n for r in rows])
    for a, b in zip(chain, chain[1:]):
        ra, rb = by_n[a], by_n[b]
        if rb.residual > floor and rb.scaled_residual > ra.scaled_residual:
            ok = False
            lines.append(f"scaled residual grows from N={a} to N={b}")
    lines.append(f"verify-sphere: {len(rows)} rows, max scaled residual {worst:.3e}, "
                 f"{'PASS' if ok else 'FAIL'}")
    return RunResult(EXIT_OK if ok else EXIT_FAIL, lines, rows)


def cmd_verify_torus(cfg: RunConfig) -> RunResult:
    """Torus exactness ladder in ``k = N``."""
    if cfg.genus != 1:
        raise ConfigError("verify-torus needs genus 1")
    if not cfg.potential.is_zero:
        raise ConfigError("verify-torus has an exact reference only for V = 0")
    surf = torus(cfg.tau)
    modified = expansion.coeffs_modified(surf)
    plain = expansion.coeffs_plain(surf)

    def row(n: int) -> ResidualRow:
        return ResidualRow.build(n, exactpf.ln_z_theta_torus_exact(n, cfg.tau),
                                 expansion.eval_expansion(modified, n))

    rows = _sweep(row, cfg.ns())
    tol = cfg.tolerance("torus_residual", 1e-10)
    worst = max(r.residual for r in rows)
    shift = plain.constant - modified.constant
    shift_dev = abs(shift - exactpf.partition_from_modified(0.0, 1, cfg.tau))
    ok = worst <= tol and shift_dev <= tol
    lines = [
        f"theta-average shift deviation {shift_dev:.3e}",
        f"verify-torus: {len(rows)} rows, max residual {worst:.3e} (tol {tol:.1e}), "
        f"{'PASS' if ok else 'FAIL'}",
    ]
    return RunResult(EXIT_OK if ok else EXIT_FAIL, lines, rows)


def random_smooth_field(grid: QuadratureGrid, rng: np.random.Generator, amp: float = 0.2,
                        modes: int = 3) -> np.ndarray:
    """A few random low Fourier modes on a torus grid."""
    n = grid.shape[0]
    s = np.arange(n) / n
    S, T = np.meshgrid(s, s, indexing="ij")
    out = np.zeros_like(S)
    for _ in range(modes):
        m, k = rng.integers(-2, 3, 2)
        out += amp * rng.normal() * np.cos(2 * math.pi * (m * S + k * T) + rng.uniform(0, 2 * math.pi))
    return out.ravel()


def functional_law_deviations(tau: complex = 0.3 + 1.1j, resolution: int = 64, seed: int = 0) -> dict[str, float]:
    """Cocycle, antisymmetry and constant-shift defects on random torus fields."""
    rng = np.random.default_rng(seed)
    grid = make_grid(torus(tau), resolution)
    can = functionals.ConformalMetric.canonical(grid)
    a, b, psi = (random_smooth_field(grid, rng) for _ in range(3))
    m1 = can.rescaled(a)
    pa = functionals.kahler_potential(a, can)
    pb = functionals.kahler_potential(b, m1)
    pab = functionals.kahler_potential(a + b, can)
    sl, sm = functionals.s_liouville, functionals.s_mabuchi
    b_after = functionals.magnetic_after_change(a, psi, can)
    b_psi = functionals.magnetic_after_change(0.0, psi, can)
    c = 0.7
    return {
        "liouville-cocycle": abs(sl(a + b, can) - sl(a, can) - sl(b, m1)),
        "liouville-antisymmetry": abs(sl(a, can) + sl(-a, m1)),
        "kahler-additivity": float(np.ptp(pab - pa - pb)),
        "mabuchi-cocycle": abs(sm(a + b, pab, can) - sm(a, pa, can) - sm(b, pb, m1)),
        "mabuchi-antisymmetry": abs(sm(a, pa, can) + sm(-a, -pa, m1)),
        "s1-antisymmetry": abs(functionals.s1(a, psi, can) + functionals.s1(-a, -psi, m1, b_after)),
        "s2-antisymmetry": abs(functionals.s2(psi, can) + functionals.s2(-psi, can, b_psi)),
        # genus 1: S1 shifts by 2(g-1)c = 0, S2 and S_AY by c
        "s1-shift": abs(functionals.s1(a, psi + c, can) - functionals.s1(a, psi, can)),
        "s2-shift": abs(functionals.s2(psi + c, can) - functionals.s2(psi, can) - c),
        "aubin-yau-shift": abs(functionals.s_aubin_yau(pa + c, can) - functionals.s_aubin_yau(pa, can) - c),
        "polyakov-variation": abs(functionals.polyakov(m1) - sl(a, can)),
    }


def equilibrium_deviations(resolution: int = 64) -> dict[str, tuple[float, float]]:
    """``(|mass - 1|, spread of int mu_V G + V/2)`` for two builtin potentials."""
    cases = {
        "torus-cosine": (torus(0.3 + 1.1j), PotentialSpec.torus_cosine(0.1, 1, 0)),
        "sphere-zonal": (sphere(), PotentialSpec.zonal(0.3, 2)),
    }
    ys = [0.2 + 0.3j, 0.5 + 0.1j, 0.1 + 0.9j]
    out = {}
    for name, (surf, pot) in cases.items():
        grid = make_grid(surf, resolution)
        data = functionals.equilibrium(pot, grid)
        vals = functionals.equilibrium_identity(data, grid, ys)
        out[name] = (abs(float(data.mu_V_weights.sum()) - 1.0), float(np.ptp(vals)))
    return out


def _suite_functional_laws(cfg):
    return max(functional_law_deviations(seed=cfg.seed).values())


def _suite_theta_lemma(cfg):
    devs = []
    for tau in (1j, 2j, 0.3 + 1.7j):
        num, closed = expansion.theta_integral_check(1, tau, 256)
        devs.append(abs(num - closed))
    return max(devs)


def _suite_theta_lemma_g2(cfg):
    num, closed = expansion.theta_integral_check(2, np.diag([1j, 2j]), 20)
    return abs(num - closed)


def _suite_zeta_routes(cfg):
    return max(abs(r.closed_form - r.series) for r in map(exactpf.zeta_k_prime_zero, range(21)))


def _suite_zeta_at_zero(cfg):
    return max(abs(exactpf.zeta_k_zero(k) - (-k / 2 - 2 / 3)) for k in range(21))


def _suite_bosonization(cfg):
    surf = sphere()
    half = 0.5 * (exactpf.det_scalar_laplacian(surf, "arakelov") - math.log(math.pi * math.e))
    return max(abs(exactpf.ln_z_sphere_exact(n) - (exactpf.ln_det_magnetic_sphere(n - 1)
                                                   - expansion.ln_b_gk(0, n - 1).ln_B + half))
               for n in range(1, 51))


def _suite_c_tilde(cfg):
    res = [abs(exactpf.c_tilde(n) - exactpf.c_tilde_asymptotic(n)) for n in (25, 50, 100, 200)]
    if any(b >= a for a, b in zip(res, res[1:])):
        return math.inf
    return res[2]


def _suite_gram_product(cfg):
    grid = make_grid(sphere(), 128)
    return max(abs(exactpf.ln_z_sphere_gram(n, None, grid).value - exactpf.ln_z_sphere_exact(n))
               for n in range(1, 9))


def _suite_torus_exactness(cfg):
    devs = []
    for tau in (1j, 2j, 0.3 + 1.7j):
        c = expansion.coeffs_modified(torus(tau))
        devs += [abs(exactpf.ln_z_theta_torus_exact(k, tau) - expansion.eval_expansion(c, k)) for k in range(2, 51)]
    return max(devs)


def _suite_equilibrium_mass(cfg):
    return max(v[0] for v in equilibrium_deviations().values())


def _suite_equilibrium_spread(cfg):
    return max(v[1] for v in equilibrium_deviations().values())


def _suite_faltings(cfg):
    return max(abs(expansion.faltings_delta(s) - expansion.faltings_delta_closed(s))
               for s in (sphere(), torus(1j), torus(0.3 + 1.7j)))


# name -> (runner, default tolerance, uses quadrature)
SUITES: dict[str, tuple[Callable[[RunConfig], float], float, bool]] = {
    "functional-laws": (_suite_functional_laws, 1e-5, True),
    "theta-lemma": (_suite_theta_lemma, 1e-8, True),
    "theta-lemma-g2": (_suite_theta_lemma_g2, 1e-6, True),
    "zeta-two-route": (_suite_zeta_routes, 1e-9, False),
    "zeta-at-zero": (_suite_zeta_at_zero, 1e-15, False),
    "bosonization-closure": (_suite_bosonization, 1e-10, False),
    "c-tilde": (_suite_c_tilde, 5e-2, False),
    "gram-product": (_suite_gram_product, 1e-9, True),
    "torus-exactness": (_suite_torus_exactness, 1e-10, False),
    "equilibrium-mass": (_suite_equilibrium_mass, 1e-8, True),
    "equilibrium-spread": (_suite_equilibrium_spread, 1e-4, True),
    "faltings-delta": (_suite_faltings, 1e-12, False),
}


def cmd_identities(cfg: RunConfig, only: Sequence[str] | None = None) -> RunResult:
    """Run the identity suites; one report line per suite."""
    names = list(SUITES) if not only else list(only)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    lines = [f"# seed={cfg.seed}"]
    ok = True
    for name in names:
        fn, default_tol, _ = SUITES[name]
        tol = cfg.tolerance(name, default_tol)
        t0 = time.perf_counter()
        dev = fn(cfg)
        passed = dev <= tol
        ok &= passed
        lines.append(f"{name} max_dev={dev:.3e} tol={tol:.1e} {'PASS' if passed else 'FAIL'} "
                     f"({time.perf_counter() - t0:.2f}s)")
    return RunResult(EXIT_OK if ok else EXIT_FAIL, lines)


# ---------------------------------------------------------------- B2 fit

@dataclass(frozen=True)
class B2Fit:
    fitted: float
    s2_corrected: float
    s2_admissible: float
    ns: tuple[int, ...]

    def relative_deviation(self, reference: float) -> float:
        if reference == 0.0:
            return abs(self.fitted)
        return abs(self.fitted - reference) / abs(reference)


def gram_difference(n: int, potential: PotentialSpec, resolution: int = 32, check: bool = True) -> float:
    """``ln Z_gram(N, V) - ln Z_gram(N, 0)`` on a common grid."""
    grid = make_grid(sphere(), max(4 * n, resolution))
    with_v = exactpf.ln_z_sphere_gram(n, potential, grid, check_resolution=check).value
    return with_v - exactpf.ln_z_sphere_gram(n, None, grid).value


def fit_b2(potential: PotentialSpec, ns: Sequence[int], resolution: int = 64, check: bool = True) -> B2Fit:
    """Least-squares quadratic fit of the Gram free-energy difference in ``N``."""
    ns = tuple(int(n) for n in ns)
    if len(ns) < 3:
        raise ValueError("need at least three values of N")
    workers = min(worker_count(), len(ns))
    fn = lambda n: gram_difference(n, potential, resolution, check)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            diffs = list(pool.map(fn, ns))
    else:
        diffs = [fn(n) for n in ns]
    x = np.asarray(ns, dtype=float)
    design = np.stack([x * x, x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.asarray(diffs), rcond=None)
    inp = expansion.expansion_inputs(sphere(), potential, make_grid(sphere(), resolution))
    return B2Fit(float(coef[0]), inp.s2_v, inp.s2_v_printed, ns)


def cmd_fit_b2(cfg: RunConfig) -> RunResult:
    """Fit ``B2`` from Gram determinants and compare with both quadratures of ``S2``."""
    if cfg.genus != 0:
        raise ConfigError("fit-b2 needs genus 0")
    ns = cfg.ns()
    if max(ns) > 40:
        raise ConfigError("fit-b2 is limited to N <= 40 (Gram conditioning)")
    try:
        fit = fit_b2(cfg.potential, ns, cfg.grid_resolution)
    except ConditioningError as exc:
        return RunResult(EXIT_CONDITIONING, [f"conditioning failure: {exc}"])
    except AdmissibilityError as exc:
        return RunResult(EXIT_FAIL, [f"admissibility diagnostic: {exc}"])
    tol = cfg.tolerance("b2_relative", 5e-2)
    lines = [f"fitted B2 = {fit.fitted:.10e} over N in [{min(ns)}, {max(ns)}]"]
    if cfg.potential.is_zero:
        ok = abs(fit.fitted) <= cfg.tolerance("b2_zero", 1e-10)
        lines.append(f"V = 0: |B2| = {abs(fit.fitted):.3e} {'PASS' if ok else 'FAIL'}")
        return RunResult(EXIT_OK if ok else EXIT_FAIL, lines)
    dev_adm = fit.relative_deviation(fit.s2_admissible)
    dev_cor = fit.relative_deviation(fit.s2_corrected)
    ok = dev_adm < tol
    lines += [
        f"S2 with admissible field  = {fit.s2_admissible:.10e}  rel.dev {dev_adm:.3e} "
        f"{'PASS' if ok else 'FAIL'}",
        f"S2 with deformed field    = {fit.s2_corrected:.10e}  rel.dev {dev_cor:.3e} "
        f"{'PASS' if dev_cor < tol else 'FAIL'}",
    ]
    return RunResult(EXIT_OK if ok else EXIT_FAIL, lines)
