"""Periodic pseudo-spectral grid on [0, L)^3.

Fields are sampled on an N^3 lattice and carry a representation tag:
``Rep.PHYSICAL`` holds point values, ``Rep.SPECTRAL`` holds the unnormalized
DFT (``scipy.fft.fftn`` over the three spatial axes, which sit *last* in the
value arrays).  The expansion coefficient of the mode ``exp(i xi_k . x)`` is
``spectral / N^3`` with ``xi_k = (2 pi / L) k``, ``k in {-N/2, ..., N/2-1}``.

Matrix-valued fields store values with leading matrix axes, shape
``(n, n, N, N, N)``; scalar fields use ``(N, N, N)``.

All pointwise products are evaluated in physical space and, with the
two-thirds rule active, every mode with any ``|k_i| > N/3`` is annihilated
afterwards, so products of fields band-limited to ``N/3`` are alias-free.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from . import algebra
from .algebra import AlgebraKind
from .errors import StructureError

_WORKERS = min(os.cpu_count() or 1, 4)


class Rep(Enum):
    PHYSICAL = "physical"
    SPECTRAL = "spectral"


class Dealias(Enum):
    NONE = "none"
    TWO_THIRDS = "two-thirds"


@dataclass(frozen=True)
class GridSpec:
    """Resolution, period and dealiasing rule; owner of multiplier conventions."""

    n_points: int
    length: float = 2.0 * np.pi
    dealias: Dealias = Dealias.TWO_THIRDS

    def __post_init__(self):
        n = self.n_points
        if n < 4 or (n & (n - 1)) != 0:
            raise StructureError(f"n_points must be a power of two >= 4, got {n}")
        if not self.length > 0:
            raise StructureError("length must be positive")

    @cached_property
    def k_int(self) -> np.ndarray:
        """Integer mode numbers along one axis, fft ordering."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(np.int64)

    @cached_property
    def xi_axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Frequency (2 pi / L) k along each axis, shaped for broadcasting."""
        base = 2.0 * np.pi / self.length * self.k_int.astype(np.float64)
        return (
            base.reshape(-1, 1, 1),
            base.reshape(1, -1, 1),
            base.reshape(1, 1, -1),
        )

    @cached_property
    def xi_norm(self) -> np.ndarray:
        x0, x1, x2 = self.xi_axes
        return np.sqrt(x0**2 + x1**2 + x2**2)

    @cached_property
    def bessel_sq(self) -> np.ndarray:
        """1 + |xi|^2 on the full lattice."""
        return 1.0 + self.xi_norm**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean keep-mask for the configured dealias rule."""
        if self.dealias is Dealias.NONE:
            return np.ones((self.n_points,) * 3, dtype=bool)
        return self.band_mask(self.n_points / 3.0)

    def band_mask(self, band: float, exclude_zero: bool = False) -> np.ndarray:
        """Keep-mask for modes with every |k_i| <= band."""
        k = self.k_int
        one = np.abs(k) <= band
        m = one.reshape(-1, 1, 1) & one.reshape(1, -1, 1) & one.reshape(1, 1, -1)
        if exclude_zero:
            m = m.copy()
            m[0, 0, 0] = False
        return m

    @property
    def cell_volume(self) -> float:
        return (self.length / self.n_points) ** 3

    @property
    def volume(self) -> float:
        return self.length**3

    def x_axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical coordinates along each axis, shaped for broadcasting."""
        x = np.arange(self.n_points) * (self.length / self.n_points)
        return x.reshape(-1, 1, 1), x.reshape(1, -1, 1), x.reshape(1, 1, -1)


@dataclass(frozen=True)
class Field:
    """A scalar or Lie-algebra-valued function on the torus.

    ``real`` records whether the physical-space values are real; it is kept
    True for so(n) fields and real scalar fields so inverse transforms can
    drop round-off imaginary parts.
    """

    grid: GridSpec
    values: np.ndarray
    rep: Rep
    kind: AlgebraKind | None = None
    real: bool = True

    def __post_init__(self):
        n = self.grid.n_points
        shape = self.values.shape
        if shape[-3:] != (n, n, n):
            raise StructureError(f"trailing axes must be {(n, n, n)}, got {shape}")
        if self.values.ndim not in (3, 5):
            raise StructureError("values must be (N,N,N) or (n,n,N,N,N)")
        if self.kind is not None:
            if self.values.ndim != 5 or shape[:2] != (self.kind.n, self.kind.n):
                raise StructureError(f"kind {self.kind} requires leading axes {(self.kind.n,) * 2}")

    @property
    def is_matrix(self) -> bool:
        return self.values.ndim == 5

    def spectral(self) -> "Field":
        if self.rep is Rep.SPECTRAL:
            return self
        vals = sfft.fftn(self.values, axes=(-3, -2, -1), workers=_WORKERS)
        return replace(self, values=vals, rep=Rep.SPECTRAL)

    def physical(self) -> "Field":
        if self.rep is Rep.PHYSICAL:
            return self
        vals = sfft.ifftn(self.values, axes=(-3, -2, -1), workers=_WORKERS)
        if self.real:
            vals = vals.real
        return replace(self, values=vals, rep=Rep.PHYSICAL)

    def _binary(self, other: "Field", op) -> "Field":
        if not isinstance(other, Field):
            return NotImplemented
        if other.grid != self.grid:
            raise StructureError("grid mismatch")
        if other.rep is not self.rep:
            raise StructureError("representation mismatch; convert explicitly")
        kind = self.kind if self.kind == other.kind else None
        return Field(self.grid, op(self.values, other.values), self.rep, kind,
                     self.real and other.real)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return replace(self, values=-self.values)

    def __mul__(self, c):
        if isinstance(c, Field):
            raise StructureError("use pointwise_product for field products")
        real = self.real and not np.iscomplexobj(c)
        return replace(self, values=c * self.values, real=real)

    __rmul__ = __mul__


def zero_field(grid: GridSpec, kind: AlgebraKind | None = None, rep: Rep = Rep.SPECTRAL) -> Field:
    n = grid.n_points
    if kind is None:
        shape: tuple[int, ...] = (n, n, n)
        dtype = np.float64 if rep is Rep.PHYSICAL else np.complex128
        real = True
    else:
        shape = (kind.n, kind.n, n, n, n)
        dtype = kind.dtype if rep is Rep.PHYSICAL else np.complex128
        real = kind.is_real
    return Field(grid, np.zeros(shape, dtype=dtype), rep, kind, real)


def _check_same_grid(u: Field, v: Field) -> GridSpec:
    if u.grid != v.grid:
        raise StructureError("grid mismatch")
    return u.grid


# ---------------------------------------------------------------------------
# Fourier multipliers


def _apply_weights(u: Field, weights: np.ndarray) -> Field:
    s = u.spectral()
    return replace(s, values=s.values * weights)


def _odd_axis_weight(grid: GridSpec, axis: int) -> np.ndarray:
    """xi_axis with the unpaired Nyquist plane of that axis zeroed.

    Odd symbols would otherwise break realness of real fields on an even
    grid; band-limited fields never populate the Nyquist plane anyway.
    """
    xi = grid.xi_axes[axis].copy()
    flat = xi.reshape(-1)
    flat[grid.k_int == -grid.n_points // 2] = 0.0
    return xi


def derivative(u: Field, axis: int) -> Field:
    """Spatial derivative d/dx_axis, symbol i xi_axis."""
    if axis not in (0, 1, 2):
        raise StructureError(f"axis must be 0, 1 or 2, got {axis}")
    return _apply_weights(u, 1j * _odd_axis_weight(u.grid, axis))


def abs_grad(u: Field, power: float = 1.0) -> Field:
    """|nabla|^power; for negative powers the zero mode maps to 0."""
    xi = u.grid.xi_norm
    if power >= 0:
        w = xi**power
    else:
        with np.errstate(divide="ignore"):
            w = np.where(xi > 0, xi, 1.0) ** power
        w = np.where(xi > 0, w, 0.0)
    return _apply_weights(u, w)


def riesz(u: Field, axis: int) -> Field:
    """Riesz transform |nabla|^{-1} d/dx_axis, symbol i xi_axis / |xi|; 0 at xi=0."""
    if axis not in (0, 1, 2):
        raise StructureError(f"axis must be 0, 1 or 2, got {axis}")
    g = u.grid
    xi = g.xi_norm
    w = np.where(xi > 0, _odd_axis_weight(g, axis) / np.where(xi > 0, xi, 1.0), 0.0)
    return _apply_weights(u, 1j * w)


def bessel(u: Field, s: float) -> Field:
    """Bessel potential <nabla>^s, symbol (1 + |xi|^2)^(s/2)."""
    return _apply_weights(u, u.grid.bessel_sq ** (s / 2.0))


_MULTIPLIERS = {"partial", "abs_grad", "abs_grad_inv", "riesz", "bessel"}


def multiplier(u: Field, name: str, *, axis: int | None = None, s: float | None = None) -> Field:
    """Apply a registered scalar symbol by name.

    Registered names: ``partial`` (i xi_j), ``abs_grad`` (|xi|),
    ``abs_grad_inv`` (|xi|^-1, zero mode -> 0), ``riesz`` (i xi_j/|xi|,
    zero mode -> 0) and ``bessel`` ((1+|xi|^2)^(s/2)).
    """
    if name not in _MULTIPLIERS:
        raise StructureError(f"unregistered symbol {name!r}")
    if name == "partial":
        return derivative(u, _require(axis, "axis"))
    if name == "abs_grad":
        return abs_grad(u, 1.0)
    if name == "abs_grad_inv":
        return abs_grad(u, -1.0)
    if name == "riesz":
        return riesz(u, _require(axis, "axis"))
    return bessel(u, _require(s, "s"))


def _require(value, label):
    if value is None:
        raise StructureError(f"symbol requires parameter {label!r}")
    return value


# ---------------------------------------------------------------------------
# Pointwise products


def dealias(u: Field) -> Field:
    """Apply the grid's dealias rule (a spectral mask)."""
    s = u.spectral()
    if u.grid.dealias is Dealias.NONE:
        return s
    return replace(s, values=s.values * u.grid.dealias_mask)


def pointwise_product(u: Field, v: Field, op: str = "mul") -> Field:
    """Pointwise bilinear map followed by the dealias rule; returns spectral.

    ``op`` is one of ``mul`` (scalar or matrix product), ``commutator`` or
    ``inner`` (entrywise real inner product, yielding a scalar field).
    """
    grid = _check_same_grid(u, v)
    up, vp = u.physical(), v.physical()
    real = u.real and v.real
    kind: AlgebraKind | None = None
    if op == "mul":
        if up.is_matrix and vp.is_matrix:
            vals = algebra.matmul_entries(up.values, vp.values)
        else:
            vals = up.values * vp.values
            kind = up.kind or vp.kind
    elif op == "commutator":
        if not (up.is_matrix and vp.is_matrix):
            raise StructureError("commutator requires matrix-valued fields")
        vals = algebra.commutator_entries(up.values, vp.values)
        kind = up.kind if up.kind == vp.kind else None
    elif op == "inner":
        if not (up.is_matrix and vp.is_matrix):
            raise StructureError("inner requires matrix-valued fields")
        vals = algebra.inner_entries(up.values, vp.values)
        real = True
    else:
        raise StructureError(f"unknown pointwise op {op!r}")
    out = Field(grid, vals, Rep.PHYSICAL, kind, real)
    return dealias(out)


# ---------------------------------------------------------------------------
# Norms


def _coeff_mag_sq(u: Field) -> np.ndarray:
    """|expansion coefficient|^2 per mode, summed over matrix entries."""
    s = u.spectral()
    c = s.values / u.grid.n_points**3
    mag = np.abs(c) ** 2
    if u.is_matrix:
        mag = mag.sum(axis=(0, 1))
    return mag


def sobolev_norm(u: Field, s: float) -> float:
    """H^s norm: sqrt(L^3 sum <xi>^{2s} |c_xi|^2).

    For matrix-valued fields the per-mode modulus is the entrywise norm,
    which matches the algebra inner-product norm pointwise.
    """
    w = u.grid.bessel_sq**s
    return float(np.sqrt(u.grid.volume * np.sum(w * _coeff_mag_sq(u))))


def l2_norm(u: Field) -> float:
    return sobolev_norm(u, 0.0)


def l2_norm_physical(u: Field) -> float:
    """L^2 norm by direct grid quadrature (Parseval cross-check)."""
    p = u.physical()
    mag = np.abs(p.values) ** 2
    return float(np.sqrt(u.grid.cell_volume * mag.sum()))


def rel_l2_diff(a: Field, b: Field) -> float:
    """Relative L^2 distance, 0 when both are zero."""
    diff = l2_norm(a.spectral() - b.spectral())
    scale = max(l2_norm(a), l2_norm(b))
    if scale == 0.0:
        return 0.0
    return diff / scale
