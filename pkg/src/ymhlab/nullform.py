"""Null forms, bilinear symbols and their numeric bound checkers.

The classical null forms on pairs ``(u, du/dt)`` are

    Q0(u, v)   = -d_t u d_t v + sum_i d_i u d_i v
    Qab(u, v)  = d_a u d_b v - d_b u d_a v

with the pointwise product appropriate to the field values (scalar product,
pointwise matrix product, or commutator for the bracketed versions).  On a
Lorenz 4-potential A the composite Riesz-transform operator

    RQ[u, v] = -1/2 eps^{ijk} eps_{klm} Q_ij[R^l u^m, v] - Q_0i[R^i u_0, v]

rewrites [A^alpha, d_alpha psi] as a null form; ``lorenz_identity_residuals``
verifies that rewriting (and its time-derivative companion) numerically.

Bilinear multipliers B_sigma with tensor-product symbols sigma(xi, eta) =
sum_m a_m(xi) b_m(eta) are evaluated as sums of multiplier products; the
registered symbols are q0, q0i, qij (the null-form symbols) and 1.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import grid as gridmod
from .algebra import AlgebraKind, commutator_entries, matmul_entries
from .errors import StructureError
from .grid import Dealias, Field, GridSpec, Rep, abs_grad, derivative, l2_norm, riesz

SPATIAL = (1, 2, 3)
METRIC = (-1.0, 1.0, 1.0, 1.0)

_EPS3 = [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0),
         (1, 0, 2, -1.0), (2, 1, 0, -1.0), (0, 2, 1, -1.0)]


@dataclass(frozen=True)
class SpacetimeField:
    """A field together with its time derivative on one grid."""

    u: Field
    dtu: Field

    def __post_init__(self):
        if self.u.grid != self.dtu.grid:
            raise StructureError("u and dtu live on different grids")
        if self.u.is_matrix != self.dtu.is_matrix:
            raise StructureError("u and dtu have different value ranks")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def deriv(self, alpha: int) -> Field:
        """d_alpha: the stored time derivative for alpha = 0, spectral else."""
        if alpha == 0:
            return self.dtu
        return derivative(self.u, alpha - 1)

    def map(self, fn) -> "SpacetimeField":
        """Apply a linear operator to both members."""
        return SpacetimeField(fn(self.u), fn(self.dtu))


Potential = tuple[SpacetimeField, SpacetimeField, SpacetimeField, SpacetimeField]


def constant_spacetime(field: Field) -> SpacetimeField:
    return SpacetimeField(field, gridmod.zero_field(field.grid, field.kind, field.rep))


def potential_map(pot, fn) -> Potential:
    comps = tuple(c.map(fn) for c in pot)
    if len(comps) != 4:
        raise StructureError("a 4-potential needs four components")
    return comps


def lorenz_residual_potential(pot) -> float:
    """L2 norm of d^alpha A_alpha = -dtA_0 + sum_i d_i A_i."""
    acc = -pot[0].dtu.spectral()
    for i in SPATIAL:
        acc = acc + derivative(pot[i].u, i - 1)
    return l2_norm(acc)


# ---------------------------------------------------------------------------
# Null forms


def _accumulate_bilinear(pairs, op: str, grid: GridSpec, kind=None) -> Field:
    """Sum coef * product(x, y) in physical space, then one masked transform.

    ``pairs`` yields (coef, x_field, y_field); fields are converted to
    physical once by the caller if reuse matters.
    """
    acc = None
    real = True
    for coef, x, y in pairs:
        xp, yp = x.physical(), y.physical()
        real = real and xp.real and yp.real
        if op == "commutator":
            term = commutator_entries(xp.values, yp.values)
        elif op == "mul":
            if xp.is_matrix and yp.is_matrix:
                term = matmul_entries(xp.values, yp.values)
            else:
                term = xp.values * yp.values
        else:
            raise StructureError(f"unknown pointwise op {op!r}")
        acc = coef * term if acc is None else acc + coef * term
    out = Field(grid, acc, Rep.PHYSICAL, kind, real)
    return gridmod.dealias(out)


def q0(u: SpacetimeField, v: SpacetimeField, op: str = "mul") -> Field:
    """Q0(u, v) = d_alpha u d^alpha v (with the metric diag(-1,1,1,1))."""
    if u.grid != v.grid:
        raise StructureError("grid mismatch")
    pairs = [(METRIC[a], u.deriv(a), v.deriv(a)) for a in range(4)]
    return _accumulate_bilinear(pairs, op, u.grid, _common_kind(u, v, op))


def qab(u: SpacetimeField, v: SpacetimeField, alpha: int, beta: int, op: str = "mul") -> Field:
    """Q_ab(u, v) = d_a u d_b v - d_b u d_a v (lower indices)."""
    if alpha == beta:
        raise StructureError("null form indices must differ")
    if u.grid != v.grid:
        raise StructureError("grid mismatch")
    pairs = [(1.0, u.deriv(alpha), v.deriv(beta)), (-1.0, u.deriv(beta), v.deriv(alpha))]
    return _accumulate_bilinear(pairs, op, u.grid, _common_kind(u, v, op))


def _common_kind(u, v, op):
    if op == "mul" and u.u.is_matrix and v.u.is_matrix:
        return None  # plain matrix product leaves the algebra
    return u.u.kind if u.u.kind == v.u.kind else None


def q0_bracket(u: SpacetimeField, v: SpacetimeField) -> Field:
    """Q0[u, v] = [d_alpha u, d^alpha v]."""
    return q0(u, v, op="commutator")


def qab_bracket(u: SpacetimeField, v: SpacetimeField, alpha: int, beta: int) -> Field:
    """Q_ab[u, v] = [d_a u, d_b v] - [d_b u, d_a v]."""
    return qab(u, v, alpha, beta, op="commutator")


def riesz_null_bracket(pot, v: SpacetimeField) -> Field:
    """The composite null operator RQ[u, v] on a 4-potential first slot.

    Evaluated literally: -1/2 eps^{ijk} eps_{klm} Q_ij[R^l u^m, v]
    - Q_0i[R^i u_0, v], with eps the antisymmetric symbol (eps_123 = 1) and
    R^l the Riesz transforms.  Spatial components of ``pot`` should be mean
    free (the Riesz transforms annihilate the zero mode).
    """
    pot = tuple(pot)
    if len(pot) != 4:
        raise StructureError("a 4-potential needs four components")
    g = v.grid
    # first slots R^l u^m for the spatial block, R^i u_0 for the time block
    r_spatial = {}
    for l in range(3):
        for m in range(3):
            r_spatial[(l, m)] = pot[m + 1].map(lambda f, l=l: riesz(f, l))
    r_time = [pot[0].map(lambda f, i=i: riesz(f, i)) for i in range(3)]

    pairs = []
    for i, j, k, s1 in _EPS3:
        for kk, l, m, s2 in _EPS3:
            if kk != k:
                continue
            w = r_spatial[(l, m)]
            coef = -0.5 * s1 * s2
            # Q_ij[w, v] = [d_i w, d_j v] - [d_j w, d_i v]
            pairs.append((coef, w.deriv(i + 1), v.deriv(j + 1)))
            pairs.append((-coef, w.deriv(j + 1), v.deriv(i + 1)))
    for i in range(3):
        w = r_time[i]
        pairs.append((-1.0, w.deriv(0), v.deriv(i + 1)))
        pairs.append((1.0, w.deriv(i + 1), v.deriv(0)))
    return _accumulate_bilinear(pairs, "commutator", g, _common_kind(pot[0], v, "commutator"))


def contraction_bracket(pot, v: SpacetimeField) -> Field:
    """[A^alpha, d_alpha v] evaluated directly (metric contraction)."""
    pairs = [(METRIC[a], pot[a].u, v.deriv(a)) for a in range(4)]
    return _accumulate_bilinear(pairs, "commutator", v.grid, _common_kind(pot[0], v, "commutator"))


def dt_contraction_bracket(pot, v: SpacetimeField) -> Field:
    """[d_t A^alpha, d_alpha v] evaluated directly."""
    pairs = [(METRIC[a], pot[a].dtu, v.deriv(a)) for a in range(4)]
    return _accumulate_bilinear(pairs, "commutator", v.grid, _common_kind(pot[0], v, "commutator"))


@dataclass(frozen=True)
class IdentityReport:
    """Relative L2 residuals of the two Lorenz-gauge null rewritings."""

    contraction_residual: float
    dt_contraction_residual: float


def lorenz_identity_residuals(pot, psi: SpacetimeField) -> IdentityReport:
    """Residuals of the two identities that hold in Lorenz gauge.

    (1) [A^alpha, d_alpha psi] = RQ[|nabla|^{-1} A, psi]
    (2) [d_t A^alpha, d_alpha psi] = sum_i Q_0i[A^i, psi]

    Both sides go through distinct code paths; residuals are relative L2.
    """
    lhs1 = contraction_bracket(pot, psi)
    rhs1 = riesz_null_bracket(potential_map(pot, lambda f: abs_grad(f, -1.0)), psi)
    lhs2 = dt_contraction_bracket(pot, psi)
    rhs2 = None
    for i in range(3):
        term = qab_bracket(pot[i + 1], psi, 0, i + 1)
        rhs2 = term if rhs2 is None else rhs2 + term
    return IdentityReport(
        contraction_residual=gridmod.rel_l2_diff(lhs1, rhs1),
        dt_contraction_residual=gridmod.rel_l2_diff(lhs2, rhs2),
    )


# ---------------------------------------------------------------------------
# Bilinear symbols and B_sigma

_FACTOR_NAMES = {"one", "bessel", "comp"}


@dataclass(frozen=True)
class SymbolFactor:
    """A registered scalar factor: 1, <xi>, or xi_axis."""

    name: str
    axis: int | None = None

    def __post_init__(self):
        if self.name not in _FACTOR_NAMES:
            raise StructureError(f"unregistered symbol factor {self.name!r}")
        if self.name == "comp" and self.axis not in (0, 1, 2):
            raise StructureError("component factor needs axis in {0,1,2}")

    @property
    def odd(self) -> bool:
        return self.name == "comp"

    def weights(self, g: GridSpec) -> np.ndarray:
        if self.name == "one":
            return np.ones((1, 1, 1))
        if self.name == "bessel":
            return np.sqrt(g.bessel_sq)
        return gridmod._odd_axis_weight(g, self.axis)

    def at_points(self, pts: np.ndarray) -> np.ndarray:
        if self.name == "one":
            return np.ones(pts.shape[:-1])
        if self.name == "bessel":
            return np.sqrt(1.0 + np.sum(pts**2, axis=-1))
        return pts[..., self.axis]


@dataclass(frozen=True)
class BilinearSymbol:
    """sigma(xi, eta) = sum_m coef_m a_m(xi) b_m(eta), with optional signs.

    ``signs`` realizes sigma(s1 xi, s2 eta) by flipping the odd factors.
    """

    name: str
    terms: tuple[tuple[float, SymbolFactor, SymbolFactor], ...]
    signs: tuple[int, int] = (1, 1)

    def with_signs(self, s1: int, s2: int) -> "BilinearSymbol":
        return replace(self, signs=(s1, s2))

    def at_points(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        s1, s2 = self.signs
        out = None
        for coef, fa, fb in self.terms:
            term = coef * fa.at_points(s1 * xi) * fb.at_points(s2 * eta)
            out = term if out is None else out + term
        return out


def one_symbol() -> BilinearSymbol:
    return BilinearSymbol("one", ((1.0, SymbolFactor("one"), SymbolFactor("one")),))


def q0_symbol() -> BilinearSymbol:
    terms = [(1.0, SymbolFactor("bessel"), SymbolFactor("bessel"))]
    terms += [(-1.0, SymbolFactor("comp", i), SymbolFactor("comp", i)) for i in range(3)]
    return BilinearSymbol("q0", tuple(terms))


def q0i_symbol(i: int) -> BilinearSymbol:
    terms = (
        (-1.0, SymbolFactor("bessel"), SymbolFactor("comp", i)),
        (1.0, SymbolFactor("comp", i), SymbolFactor("bessel")),
    )
    return BilinearSymbol(f"q0{i}", terms)


def qij_symbol(i: int, j: int) -> BilinearSymbol:
    if i == j:
        raise StructureError("qij needs distinct indices")
    terms = (
        (-1.0, SymbolFactor("comp", i), SymbolFactor("comp", j)),
        (1.0, SymbolFactor("comp", j), SymbolFactor("comp", i)),
    )
    return BilinearSymbol(f"q{i}{j}", terms)


def bsigma(sym: BilinearSymbol, u: Field, v: Field) -> Field:
    """B_sigma(u, v): multiplier products summed per tensor-product term.

    Spatial symbols only; the output is dealiased like any pointwise product.
    """
    g = gridmod._check_same_grid(u, v)
    s1, s2 = sym.signs
    us, vs = u.spectral(), v.spectral()
    acc = None
    for coef, fa, fb in sym.terms:
        wa = fa.weights(g) * (s1 if fa.odd else 1)
        wb = fb.weights(g) * (s2 if fb.odd else 1)
        ua = replace(us, values=us.values * wa, real=False).physical()
        vb = replace(vs, values=vs.values * wb, real=False).physical()
        if ua.is_matrix and vb.is_matrix:
            term = matmul_entries(ua.values, vb.values)
        else:
            term = ua.values * vb.values
        acc = coef * term if acc is None else acc + coef * term
    out = Field(g, acc, Rep.PHYSICAL, None, False)
    return gridmod.dealias(out)


def bsigma_direct(sym: BilinearSymbol, u: Field, v: Field) -> Field:
    """O(N^6) double-sum oracle for B_sigma on small grids (scalar fields)."""
    g = gridmod._check_same_grid(u, v)
    n = g.n_points
    cu = u.spectral().values / n**3
    cv = v.spectral().values / n**3
    if cu.ndim != 3:
        raise StructureError("direct oracle implemented for scalar fields")
    k = g.k_int
    base = 2 * np.pi / g.length
    out = np.zeros((n, n, n), dtype=complex)
    nz_u = np.argwhere(np.abs(cu) > 0)
    nz_v = np.argwhere(np.abs(cv) > 0)
    for iu in nz_u:
        xi = base * k[iu]
        for iv in nz_v:
            eta = base * k[iv]
            sig = sym.at_points(xi[None, :], eta[None, :])[0]
            tgt = tuple(int(x) % n for x in (k[iu] + k[iv]))
            out[tgt] += sig * cu[tuple(iu)] * cv[tuple(iv)]
    out *= g.dealias_mask if g.dealias is not Dealias.NONE else 1.0
    return Field(g, out * n**3, Rep.SPECTRAL, None, False)


# ---------------------------------------------------------------------------
# Symbol-bound and angle-estimate checkers


def angle(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Angle between xi and eta rows, atan2-based for stability; 0 at 0."""
    cross = np.linalg.norm(np.cross(xi, eta), axis=-1)
    dot = np.einsum("...i,...i->...", xi, eta)
    out = np.arctan2(cross, dot)
    nx = np.linalg.norm(xi, axis=-1)
    ne = np.linalg.norm(eta, axis=-1)
    return np.where((nx > 0) & (ne > 0), out, 0.0)


def _log_uniform_vectors(rng, count: int, lo=1e-3, hi=1e3) -> np.ndarray:
    mag = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi), size=(count, 3))
    sgn = rng.choice([-1.0, 1.0], size=(count, 3))
    return mag * sgn


@dataclass(frozen=True)
class BoundRow:
    name: str
    samples: int
    max_ratio: float
    argmax_xi: tuple[float, float, float]
    argmax_eta: tuple[float, float, float]


@dataclass(frozen=True)
class SymbolBoundReport:
    rows: tuple[BoundRow, ...]

    def ratio(self, name: str) -> float:
        for r in self.rows:
            if r.name == name:
                return r.max_ratio
        raise KeyError(name)


def check_symbol_bounds(samples: int, seed: int = 0, chunk: int = 200_000) -> SymbolBoundReport:
    """Max lhs/rhs ratios for the three null-symbol bounds over random (xi, eta).

    Components are log-uniform in magnitude over [1e-3, 1e3] with random
    signs.  Four rows come back: ``qij`` (sharp, ratio <= 1), ``q0j``, the
    literal ``q0`` bound (known to be violated at mismatched magnitudes; kept
    for the record) and ``q0-corrected`` which adds the same |xi|/<eta> +
    |eta|/<xi> cross terms that appear in the q0j bound.
    """
    if samples < 1:
        raise StructureError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best: dict[str, tuple[float, np.ndarray, np.ndarray]] = {}

    def update(name, ratios, xi, eta):
        i = int(np.argmax(ratios))
        cur = best.get(name)
        if cur is None or ratios[i] > cur[0]:
            best[name] = (float(ratios[i]), xi[i].copy(), eta[i].copy())

    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        xi = _log_uniform_vectors(rng, m)
        eta = _log_uniform_vectors(rng, m)
        nx = np.linalg.norm(xi, axis=1)
        ne = np.linalg.norm(eta, axis=1)
        bx = np.sqrt(1 + nx**2)
        be = np.sqrt(1 + ne**2)
        th = angle(xi, eta)
        cross = np.linalg.norm(np.cross(xi, eta), axis=1)
        minb = np.minimum(bx, be)
        dot = np.einsum("ij,ij->i", xi, eta)

        denom_ij = nx * ne * th
        r_ij = np.where(denom_ij > 0, cross / np.where(denom_ij > 0, denom_ij, 1.0), 0.0)
        update("qij", r_ij, xi, eta)

        q0j = np.abs(-bx[:, None] * eta + xi * be[:, None]).max(axis=1)
        rhs_j = nx * ne * th + nx / be + ne / bx
        update("q0j", q0j / rhs_j, xi, eta)

        q0v = np.abs(bx * be - dot)
        rhs_printed = nx * ne * th**2 + 1.0 / minb
        update("q0", q0v / rhs_printed, xi, eta)
        update("q0-corrected", q0v / (rhs_printed + nx / be + ne / bx), xi, eta)
        done += m

    rows = tuple(
        BoundRow(name, samples, v[0], tuple(v[1]), tuple(v[2]))
        for name, v in sorted(best.items())
    )
    return SymbolBoundReport(rows)


@dataclass(frozen=True)
class AngleRow:
    exponents: tuple[float, float, float]
    signs: tuple[int, int]
    samples: int
    max_ratio: float


@dataclass(frozen=True)
class AngleReport:
    rows: tuple[AngleRow, ...]

    @property
    def max_ratio(self) -> float:
        return max(r.max_ratio for r in self.rows)


def check_angle_estimate(samples: int, exponents, seed: int = 0) -> AngleReport:
    """Max of theta(s xi, s' eta) / rhs over random (tau, lambda, xi, eta).

    rhs = (<|tau+lam| - |xi+eta|>/m)^alpha + (<-tau + s|xi|>/m)^beta
        + (<-lam + s'|eta|>/m)^gamma,  m = min(<xi>, <eta>),

    for every requested exponent triple with alpha, beta, gamma in [0, 1/2]
    and all four sign pairs.  On-cone matched configurations (tau = |xi|,
    lam = |eta|) are injected alongside random modulations to probe the
    worst case.
    """
    for e in exponents:
        if not all(0.0 <= float(x) <= 0.5 for x in e):
            raise StructureError("exponents must lie in [0, 1/2]")
    rng = np.random.default_rng(seed)
    xi = _log_uniform_vectors(rng, samples)
    eta = _log_uniform_vectors(rng, samples)
    nx = np.linalg.norm(xi, axis=1)
    ne = np.linalg.norm(eta, axis=1)
    m = np.minimum(np.sqrt(1 + nx**2), np.sqrt(1 + ne**2))
    nxe = np.linalg.norm(xi + eta, axis=1)

    tau = 10.0 ** rng.uniform(-3, 3, size=samples) * rng.choice([-1.0, 1.0], size=samples)
    lam = 10.0 ** rng.uniform(-3, 3, size=samples) * rng.choice([-1.0, 1.0], size=samples)
    # interleave exactly-on-cone configurations (the adversarial regime)
    oncone = rng.random(samples) < 0.5
    rows = []
    for s1, s2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        t = np.where(oncone, s1 * nx, tau)
        l = np.where(oncone, s2 * ne, lam)
        th = angle(s1 * xi, s2 * eta)
        w_out = np.sqrt(1 + (np.abs(t + l) - nxe) ** 2)
        w_u = np.sqrt(1 + (-t + s1 * nx) ** 2)
        w_v = np.sqrt(1 + (-l + s2 * ne) ** 2)
        for e in exponents:
            a, b, c = (float(x) for x in e)
            rhs = (w_out / m) ** a + (w_u / m) ** b + (w_v / m) ** c
            rows.append(AngleRow((a, b, c), (s1, s2), samples, float(np.max(th / rhs))))
    return AngleReport(tuple(rows))
