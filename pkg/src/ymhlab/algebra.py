"""Matrix Lie algebras so(n, R) and su(n, C).

``AlgebraElement`` wraps a single n-by-n matrix.  The ``*_entries`` helpers
accept stacked arrays whose *leading* two axes are the matrix indices
(shape ``(n, n, ...)``), which is how fields store their per-point values.

Conventions: the commutator is ``[X, Y] = XY - YX`` and the invariant inner
product is the positive-definite ``Tr(X Y^T)`` for so(n) and
``Re Tr(X Y*)`` for su(n), i.e. the entrywise real inner product.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import StructureError


class Family(Enum):
    SO = "so"
    SU = "su"


@dataclass(frozen=True)
class AlgebraKind:
    """A choice of algebra: so(n, R) or su(n, C)."""

    family: Family
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise StructureError(f"matrix dimension must be >= 2, got {self.n}")

    @property
    def dim(self) -> int:
        """Real dimension: n(n-1)/2 for so(n), n^2 - 1 for su(n)."""
        if self.family is Family.SO:
            return self.n * (self.n - 1) // 2
        return self.n * self.n - 1

    @property
    def dtype(self):
        """Entry dtype of elements: real for so(n), complex for su(n)."""
        return np.float64 if self.family is Family.SO else np.complex128

    @property
    def is_real(self) -> bool:
        return self.family is Family.SO

    def __str__(self) -> str:
        return f"{self.family.value}({self.n})"


SU2 = AlgebraKind(Family.SU, 2)
SO3 = AlgebraKind(Family.SO, 3)


def project_entries(kind: AlgebraKind, m: np.ndarray) -> np.ndarray:
    """Project stacked matrices (leading axes (n, n)) onto the algebra.

    so(n): antisymmetrize and keep the real part.  su(n): skew-hermitian
    part minus the trace part.
    """
    m = np.asarray(m)
    swap = np.swapaxes(m, 0, 1)
    if kind.family is Family.SO:
        return np.real(m - swap) / 2.0
    skew = (m - np.conj(swap)) / 2.0
    trace = np.einsum("ii...->...", skew) / kind.n
    eye = np.eye(kind.n, dtype=np.complex128).reshape((kind.n, kind.n) + (1,) * (m.ndim - 2))
    return skew - trace * eye


def commutator_entries(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """[X, Y] = XY - YX on stacked matrices with leading (n, n) axes."""
    xy = np.einsum("ij...,jk...->ik...", x, y)
    yx = np.einsum("ij...,jk...->ik...", y, x)
    return xy - yx


def matmul_entries(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise matrix product on stacked matrices with leading (n, n) axes."""
    return np.einsum("ij...,jk...->ik...", x, y)


def inner_entries(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Entrywise real inner product, summed over the leading matrix axes."""
    return np.real(np.einsum("ij...,ij...->...", x, np.conj(y)))


@dataclass(frozen=True)
class AlgebraElement:
    """One point value: an n-by-n matrix in so(n) or su(n).

    Construct through :meth:`from_matrix` (which projects onto the algebra)
    unless the entries are already known to satisfy the closure constraint.
    """

    kind: AlgebraKind
    entries: np.ndarray

    @classmethod
    def from_matrix(cls, kind: AlgebraKind, m: np.ndarray) -> "AlgebraElement":
        m = np.asarray(m, dtype=kind.dtype)
        if m.shape != (kind.n, kind.n):
            raise StructureError(f"expected shape {(kind.n, kind.n)}, got {m.shape}")
        return cls(kind, project_entries(kind, m))

    @classmethod
    def zero(cls, kind: AlgebraKind) -> "AlgebraElement":
        return cls(kind, np.zeros((kind.n, kind.n), dtype=kind.dtype))

    def closure_defect(self) -> float:
        """Distance of the entries from their algebra projection (abs)."""
        return float(np.max(np.abs(self.entries - project_entries(self.kind, self.entries))))


def _check_kinds(x: AlgebraElement, y: AlgebraElement) -> AlgebraKind:
    if x.kind != y.kind:
        raise StructureError(f"algebra kinds differ: {x.kind} vs {y.kind}")
    return x.kind


def commutator(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    kind = _check_kinds(x, y)
    return AlgebraElement(kind, commutator_entries(x.entries, y.entries))


def inner(x: AlgebraElement, y: AlgebraElement) -> float:
    _check_kinds(x, y)
    return float(inner_entries(x.entries, y.entries))


def norm(x: AlgebraElement) -> float:
    return float(np.sqrt(inner(x, x)))


def random_element(kind: AlgebraKind, seed: int, scale: float = 1.0) -> AlgebraElement:
    """Deterministic pseudo-random element with entries O(scale)."""
    if scale < 0:
        raise StructureError("scale must be >= 0")
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((kind.n, kind.n))
    if kind.family is Family.SU:
        m = m + 1j * rng.standard_normal((kind.n, kind.n))
    return AlgebraElement(kind, scale * project_entries(kind, m))


@lru_cache(maxsize=None)
def basis(kind: AlgebraKind) -> np.ndarray:
    """Orthonormal basis of the algebra, shape (dim, n, n).

    Orthonormal with respect to the entrywise inner product; obtained by QR
    on the flattened real embedding of the natural spanning set, so the
    result is deterministic.
    """
    n = kind.n
    span = []
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=kind.dtype)
            e[i, j], e[j, i] = 1.0, -1.0
            span.append(e)
    if kind.family is Family.SU:
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n), dtype=np.complex128)
                e[i, j] = e[j, i] = 1j
                span.append(e)
        for k in range(n - 1):
            e = np.zeros((n, n), dtype=np.complex128)
            e[k, k], e[k + 1, k + 1] = 1j, -1j
            span.append(e)
    stack = np.stack(span)
    if kind.dim != len(span):
        raise StructureError("spanning set size does not match algebra dimension")
    flat = stack.reshape(len(span), -1)
    emb = np.concatenate([flat.real, flat.imag], axis=1) if kind.family is Family.SU else flat.real
    q, r = np.linalg.qr(emb.T)
    # fix signs so the first nonzero overlap with the spanning vector is positive
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if kind.family is Family.SU:
        half = flat.shape[1]
        out = (q[:half, :] + 1j * q[half:, :]).T.reshape(stack.shape)
    else:
        out = q.T.reshape(stack.shape).astype(np.float64)
    return out


@lru_cache(maxsize=None)
def structure_constants(kind: AlgebraKind) -> np.ndarray:
    """c[a, b, c] with [T_a, T_b] = sum_c c[a, b, c] T_c in the basis above."""
    t = basis(kind)
    d = kind.dim
    c = np.zeros((d, d, d))
    for a in range(d):
        for b in range(d):
            br = commutator_entries(t[a], t[b])
            for e in range(d):
                c[a, b, e] = inner_entries(br, t[e])
    return c


def to_coefficients(kind: AlgebraKind, entries: np.ndarray) -> np.ndarray:
    """Expand stacked matrices over the basis; returns shape (dim, ...).

    Valid for entries in the algebra or in its complexification (the
    coefficients come out complex in that case).
    """
    t = basis(kind)
    return np.einsum("aij,ij...->a...", np.conj(t), entries)


def from_coefficients(kind: AlgebraKind, coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_coefficients`; returns leading (n, n) axes."""
    t = basis(kind)
    return np.einsum("a...,aij->ij...", coeffs, t)
