"""Initial-data factory and constraint checks.

Cauchy data are (a, dota, phi0, phi1) for the potential and the scalar
field; the curvature data (f, dotf) follow from them.  Two constraints
matter at t = 0:

- the Gauss constraint  d^i f_i0 + [a^i, f_i0] = [phi1, phi0] + [[a0, phi0], phi0],
  which is checked, never solved (generic random data violate it; the
  manufactured family below satisfies it exactly), and
- the Lorenz data constraint  dota_0 = d^i a_i, enforced by
  :func:`finalize_lorenz`.

Random fields are built from seeded band-limited coefficient noise so every
generator is deterministic and exactly algebra valued.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import grid as gridmod, system
from .algebra import AlgebraKind, basis
from .errors import StructureError
from .grid import Field, GridSpec, Rep, derivative, l2_norm, sobolev_norm
from .nullform import SpacetimeField, Potential
from .system import GaugeState, check_power


# ---------------------------------------------------------------------------
# Random band-limited fields


def random_scalar_field(grid: GridSpec, seed: int, band: float, amplitude: float = 1.0,
                        mean_zero: bool = False) -> Field:
    """Real scalar low-pass noise with modes |k_i| <= band, unit-ish variance."""
    rng = np.random.default_rng(seed)
    n = grid.n_points
    white = rng.standard_normal((n, n, n))
    spec = np.fft.fftn(white) * grid.band_mask(band, exclude_zero=mean_zero)
    kept = int(np.count_nonzero(grid.band_mask(band, exclude_zero=mean_zero)))
    spec *= amplitude * np.sqrt(n**3 / max(kept, 1))
    return Field(grid, spec, Rep.SPECTRAL, None, True)


def random_algebra_field(grid: GridSpec, kind: AlgebraKind, seed: int, band: float,
                         amplitude: float = 1.0, mean_zero: bool = False) -> Field:
    """Algebra-valued band-limited noise: one scalar field per basis direction."""
    seeds = np.random.SeedSequence(seed).generate_state(kind.dim)
    coeffs = [
        random_scalar_field(grid, int(s), band, amplitude, mean_zero).values
        for s in seeds
    ]
    vals = np.einsum("a...,aij->ij...", np.stack(coeffs), basis(kind))
    return Field(grid, vals, Rep.SPECTRAL, kind, kind.is_real)


def make_lorenz_potential(grid: GridSpec, kind: AlgebraKind, seed: int, band: float,
                          amplitude: float = 1.0) -> Potential:
    """Random band-limited 4-potential satisfying d_t A_0 = d^i A_i exactly.

    All components are mean free (the null rewritings apply Riesz transforms
    to every slot, which kill the zero mode).
    """
    ss = np.random.SeedSequence(seed).spawn(8)
    def gen(s):
        return random_algebra_field(grid, kind, int(s.generate_state(1)[0]), band,
                                    amplitude, mean_zero=True)
    a = [gen(ss[i]) for i in range(4)]
    dta = [gen(ss[4 + i]) for i in range(4)]
    dta0 = derivative(a[1], 0) + derivative(a[2], 1) + derivative(a[3], 2)
    comps = [SpacetimeField(a[0], dta0)]
    comps += [SpacetimeField(a[i], dta[i]) for i in range(1, 4)]
    return tuple(comps)


# ---------------------------------------------------------------------------
# Cauchy data


@dataclass(frozen=True)
class CauchyData:
    """Data (a, dota, phi0, phi1) at t = 0 plus the Higgs exponent p."""

    a: tuple[Field, Field, Field, Field]
    dota: tuple[Field, Field, Field, Field]
    phi0: Field
    phi1: Field
    p: float = 3.0

    def __post_init__(self):
        check_power(self.p)
        fields = (*self.a, *self.dota, self.phi0, self.phi1)
        g, k = fields[0].grid, fields[0].kind
        if k is None:
            raise StructureError("Cauchy data must be algebra valued")
        for f in fields:
            if f.grid != g or f.kind != k:
                raise StructureError("all data fields must share grid and kind")

    @property
    def grid(self) -> GridSpec:
        return self.a[0].grid

    @property
    def kind(self) -> AlgebraKind:
        return self.a[0].kind

    def scaled(self, c: float) -> "CauchyData":
        return replace(
            self,
            a=tuple(c * f for f in self.a),
            dota=tuple(c * f for f in self.dota),
            phi0=c * self.phi0,
            phi1=c * self.phi1,
        )


def finalize_lorenz(d: CauchyData) -> CauchyData:
    """Overwrite dota_0 with d^i a_i (the Lorenz data constraint); idempotent."""
    dta0 = derivative(d.a[1], 0) + derivative(d.a[2], 1) + derivative(d.a[3], 2)
    return replace(d, dota=(dta0, d.dota[1], d.dota[2], d.dota[3]))


def lorenz_data_residual(d: CauchyData) -> float:
    dta0 = derivative(d.a[1], 0) + derivative(d.a[2], 1) + derivative(d.a[3], 2)
    return l2_norm(d.dota[0].spectral() - dta0)


def build_f_data(d: CauchyData) -> tuple[tuple[Field, ...], tuple[Field, ...]]:
    """Curvature data (f, dotf) from the potential data.

    f_ij, f_0i and dotf_ij are the curvature and its time derivative written
    out; dotf_0i comes from the beta = i field equation:

        dotf_0i = d^j f_ji + [a^alpha, f_alpha-i]
                  + [d_i phi0, phi0] + [[a_i, phi0], phi0].
    """
    prod = gridmod.pointwise_product
    a, dota, phi0 = d.a, d.dota, d.phi0
    f: list[Field] = []
    for al, be in system.PAIRS:
        if al == 0:
            i = be
            f.append(dota[i].spectral() - derivative(a[0], i - 1)
                     + prod(a[0], a[i], "commutator"))
        else:
            i, j = al, be
            f.append(derivative(a[j], i - 1) - derivative(a[i], j - 1)
                     + prod(a[i], a[j], "commutator"))

    def f_comp(al, be):
        idx, sign = system.pair_sign(al, be)
        return sign * f[idx]

    dotf = [None] * 6
    for idx, (al, be) in enumerate(system.PAIRS):
        if al == 0:
            continue
        i, j = al, be
        lin = derivative(dota[j], i - 1) - derivative(dota[i], j - 1)
        comm = prod(dota[i], a[j], "commutator") + prod(a[i], dota[j], "commutator")
        dotf[idx] = lin + comm
    for i in range(1, 4):
        idx, _ = system.pair_sign(0, i)
        acc = None
        for j in range(1, 4):
            if j == i:
                continue  # F_ii = 0
            term = derivative(f_comp(j, i), j - 1)
            acc = term if acc is None else acc + term
        # [a^alpha, f_alpha-i] with the metric sign on alpha = 0
        acc = acc - prod(a[0], f_comp(0, i), "commutator")
        for j in range(1, 4):
            if j == i:
                continue
            acc = acc + prod(a[j], f_comp(j, i), "commutator")
        acc = acc + prod(derivative(phi0, i - 1), phi0, "commutator")
        acc = acc + prod(prod(a[i], phi0, "commutator"), phi0, "commutator")
        dotf[idx] = acc
    return tuple(f), tuple(dotf)


def gauss_residual(d: CauchyData, f: tuple[Field, ...]) -> float:
    """L2 norm of the Gauss constraint defect (reported, never raised).

    The constraint is d^i f_i0 + [a^i, f_i0] = [phi0, phi1 + [a0, phi0]],
    i.e. the time component of the field equation with the matter current
    [phi, D phi]; the current orientation is pinned by requiring that the
    constraint propagate under the evolved system.
    """
    prod = gridmod.pointwise_product

    def f_comp(al, be):
        idx, sign = system.pair_sign(al, be)
        return sign * f[idx]

    acc = None
    for i in range(1, 4):
        term = derivative(f_comp(i, 0), i - 1) + prod(d.a[i], f_comp(i, 0), "commutator")
        acc = term if acc is None else acc + term
    rhs = prod(d.phi0, d.phi1, "commutator")
    rhs = rhs + prod(d.phi0, prod(d.a[0], d.phi0, "commutator"), "commutator")
    return l2_norm(acc - rhs)


def data_norm(d: CauchyData) -> float:
    """||a||_H1 + ||dota||_L2 + ||phi0||_H1 + ||phi1||_L2.

    Multi-component norms aggregate in l2 over the four potential components.
    """
    na = np.sqrt(sum(sobolev_norm(x, 1.0) ** 2 for x in d.a))
    nda = np.sqrt(sum(l2_norm(x) ** 2 for x in d.dota))
    return float(na + nda + sobolev_norm(d.phi0, 1.0) + l2_norm(d.phi1))


@dataclass(frozen=True)
class FBoundReport:
    """Ratios for the curvature-data bounds.

    ``f_ratio_printed`` uses the literal denominator (1+||a||_H1)^2 ||dota||_L2,
    which misses the dota-independent part of f_ij; ``f_ratio_corrected``
    uses (1+||a||_H1)^2 (||a||_H1 + ||dota||_L2).  ``dotf_ratio`` is
    ||dotf||_{H^-1} / [(1+||a||_H1)^3 (||dota||_L2 + ||phi0||_H1^2)].
    Zero-over-zero reports as 0.
    """

    f_ratio_printed: float
    f_ratio_corrected: float
    dotf_ratio: float


def _safe_ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    return num / den


def check_f_bounds(d: CauchyData, f, dotf) -> FBoundReport:
    na = np.sqrt(sum(sobolev_norm(x, 1.0) ** 2 for x in d.a))
    nda = np.sqrt(sum(l2_norm(x) ** 2 for x in d.dota))
    nphi = sobolev_norm(d.phi0, 1.0)
    nf = np.sqrt(sum(l2_norm(x) ** 2 for x in f))
    ndf = np.sqrt(sum(sobolev_norm(x, -1.0) ** 2 for x in dotf))
    return FBoundReport(
        f_ratio_printed=_safe_ratio(nf, (1 + na) ** 2 * nda),
        f_ratio_corrected=_safe_ratio(nf, (1 + na) ** 2 * (na + nda)),
        dotf_ratio=_safe_ratio(ndf, (1 + na) ** 3 * (nda + nphi**2)),
    )


# ---------------------------------------------------------------------------
# Data generators


def random_cauchy_data(grid: GridSpec, kind: AlgebraKind, seed: int, band: float,
                       amplitude: float = 1.0, p: float = 3.0) -> CauchyData:
    """Generic random band-limited data (Lorenz enforced, Gauss generally not)."""
    ss = np.random.SeedSequence(seed).generate_state(10)
    a = tuple(random_algebra_field(grid, kind, int(ss[i]), band, amplitude) for i in range(4))
    dota = tuple(random_algebra_field(grid, kind, int(ss[4 + i]), band, amplitude) for i in range(4))
    phi0 = random_algebra_field(grid, kind, int(ss[8]), band, amplitude)
    phi1 = random_algebra_field(grid, kind, int(ss[9]), band, amplitude)
    return finalize_lorenz(CauchyData(a, dota, phi0, phi1, p))


def make_constraint_data(grid: GridSpec, kind: AlgebraKind, seed: int, band: float,
                         amplitude: float = 1.0, p: float = 3.0,
                         phi_amplitude: float | None = None,
                         phi1_factor: float = 0.5) -> CauchyData:
    """Manufactured data satisfying Gauss and Lorenz exactly.

    Takes a_0 = 0 and dota_i = 0, which makes f_0i = 0, and phi1 a pointwise
    multiple of phi0, so both sides of the Gauss constraint vanish
    identically while a_i (and phi0) remain genuinely noncommuting.
    """
    ss = np.random.SeedSequence(seed).generate_state(5)
    z = gridmod.zero_field(grid, kind)
    if phi_amplitude is None:
        phi_amplitude = amplitude
    a = (z,) + tuple(random_algebra_field(grid, kind, int(ss[i]), band, amplitude,
                                          mean_zero=True) for i in range(3))
    dota = (z, z, z, z)
    phi0 = random_algebra_field(grid, kind, int(ss[4]), band, phi_amplitude, mean_zero=True)
    phi1 = phi1_factor * phi0
    return finalize_lorenz(CauchyData(a, dota, phi0, phi1, p))


def abelian_wave_data(grid: GridSpec, kind: AlgebraKind, seed: int, band: float,
                      amplitude: float = 1.0, p: float = 3.0) -> CauchyData:
    """Data proportional to a single algebra direction: every bracket vanishes.

    The evolution is then the free (shifted) wave equation componentwise,
    with the exact per-mode solution available in closed form.
    """
    rng = np.random.default_rng(seed)
    direction = basis(kind)[rng.integers(kind.dim)]
    ss = np.random.SeedSequence(seed + 1).generate_state(10)

    def one(s, ampl):
        sc = random_scalar_field(grid, int(s), band, ampl, mean_zero=True)
        vals = np.einsum("...,ij->ij...", sc.values, direction)
        return Field(grid, vals, Rep.SPECTRAL, kind, kind.is_real)

    a = tuple(one(ss[i], amplitude) for i in range(4))
    dota = tuple(one(ss[4 + i], amplitude) for i in range(4))
    phi0 = one(ss[8], 0.0)
    phi1 = one(ss[9], 0.0)
    return finalize_lorenz(CauchyData(a, dota, phi0, phi1, p))


def to_gauge_state(d: CauchyData) -> GaugeState:
    """Full second-order state at t = 0: (a, dota, f, dotf, phi0, phi1)."""
    f, dotf = build_f_data(d)
    return GaugeState(
        tuple(x.spectral() for x in d.a),
        tuple(x.spectral() for x in d.dota),
        tuple(x.spectral() for x in f),
        tuple(x.spectral() for x in dotf),
        d.phi0.spectral(),
        d.phi1.spectral(),
    )


def random_gauge_state(grid: GridSpec, kind: AlgebraKind, seed: int, band: float,
                       amplitude: float = 1.0) -> GaugeState:
    """Exact-Lorenz potential plus free random F and phi parts.

    This is the test family for the null rewritings: only the potential must
    satisfy the Lorenz condition (and be mean free); F and phi enter the
    identities as passive second slots.
    """
    pot = make_lorenz_potential(grid, kind, seed, band, amplitude)
    ss = np.random.SeedSequence(seed + 7).generate_state(14)
    f = tuple(random_algebra_field(grid, kind, int(ss[i]), band, amplitude) for i in range(6))
    dtf = tuple(random_algebra_field(grid, kind, int(ss[6 + i]), band, amplitude) for i in range(6))
    phi = random_algebra_field(grid, kind, int(ss[12]), band, amplitude)
    dtphi = random_algebra_field(grid, kind, int(ss[13]), band, amplitude)
    return GaugeState(
        tuple(c.u for c in pot),
        tuple(c.dtu for c in pot),
        f, dtf, phi, dtphi,
    )
