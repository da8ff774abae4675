import numpy as np
import pytest

from ymhlab.algebra import SU2, AlgebraKind, Family, basis
from ymhlab.errors import StructureError
from ymhlab.grid import (
    Dealias,
    Field,
    GridSpec,
    Rep,
    abs_grad,
    bessel,
    dealias,
    derivative,
    l2_norm,
    l2_norm_physical,
    multiplier,
    pointwise_product,
    riesz,
    sobolev_norm,
    zero_field,
)

SO3 = AlgebraKind(Family.SO, 3)


def make_grid(n=16, length=2 * np.pi, rule=Dealias.TWO_THIRDS):
    return GridSpec(n, length, rule)


def plane_wave(grid, k, amplitude=1.0):
    """Complex scalar field amplitude * exp(i (2 pi / L) k . x)."""
    x0, x1, x2 = grid.x_axes()
    base = 2 * np.pi / grid.length
    phase = base * (k[0] * x0 + k[1] * x1 + k[2] * x2)
    vals = amplitude * np.exp(1j * phase)
    return Field(grid, vals, Rep.PHYSICAL, real=False)


def random_scalar(grid, seed, band=None, real=True):
    rng = np.random.default_rng(seed)
    n = grid.n_points
    vals = rng.standard_normal((n, n, n))
    if not real:
        vals = vals + 1j * rng.standard_normal((n, n, n))
    f = Field(grid, vals, Rep.PHYSICAL, real=real)
    if band is not None:
        s = f.spectral()
        masked = s.values * grid.band_mask(band)
        f = Field(grid, masked, Rep.SPECTRAL, real=real)
    return f


def random_algebra_field(grid, kind, seed, band=None):
    t = basis(kind)
    rng = np.random.default_rng(seed)
    n = grid.n_points
    coeffs = rng.standard_normal((kind.dim, n, n, n))
    vals = np.einsum("a...,aij->ij...", coeffs, t)
    f = Field(grid, vals, Rep.PHYSICAL, kind=kind, real=kind.is_real)
    if band is not None:
        s = f.spectral()
        f = Field(grid, s.values * grid.band_mask(band), Rep.SPECTRAL, kind=kind,
                  real=kind.is_real)
    return f


class TestGridSpec:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(StructureError):
            GridSpec(12)

    def test_frequency_lattice(self):
        g = make_grid(8, length=4.0)
        assert set(g.k_int.tolist()) == set(range(-4, 4))
        np.testing.assert_allclose(g.xi_axes[0].ravel(), 2 * np.pi / 4.0 * g.k_int)

    def test_dealias_mask_two_thirds(self):
        g = make_grid(16)
        m = g.dealias_mask
        k = g.k_int
        # |k_i| > 16/3 ~ 5.33 is annihilated, so modes up to 5 survive
        assert m[np.abs(k) <= 5, 0, 0].all()
        assert not m[np.abs(k) > 5.34, 0, 0].any()


class TestTransforms:
    def test_round_trip_real(self):
        u = random_scalar(make_grid(), seed=0)
        back = u.spectral().physical()
        np.testing.assert_allclose(back.values, u.values, rtol=1e-12, atol=1e-12)
        assert back.values.dtype == np.float64

    def test_round_trip_matrix(self):
        u = random_algebra_field(make_grid(8), SU2, seed=1)
        back = u.spectral().physical()
        np.testing.assert_allclose(back.values, u.values, atol=1e-12)

    def test_parseval(self):
        u = random_scalar(make_grid(), seed=2)
        assert l2_norm(u) == pytest.approx(l2_norm_physical(u), rel=1e-12)

    def test_parseval_matrix(self):
        u = random_algebra_field(make_grid(8), SO3, seed=3)
        assert l2_norm(u) == pytest.approx(l2_norm_physical(u), rel=1e-12)


class TestMultipliers:
    def test_derivative_single_mode(self):
        g = make_grid(16, length=5.0)
        u = plane_wave(g, (1, 0, 0))
        du = derivative(u, 0).physical()
        expected = 1j * (2 * np.pi / 5.0) * u.values
        np.testing.assert_allclose(du.values, expected, atol=1e-12)

    def test_riesz_of_constant_is_zero(self):
        g = make_grid(8)
        c = Field(g, np.full((8, 8, 8), 3.0), Rep.PHYSICAL)
        out = riesz(c, 1)
        assert l2_norm(out) == 0.0

    def test_inverse_abs_grad_zero_mode(self):
        g = make_grid(8)
        c = Field(g, np.ones((8, 8, 8)), Rep.PHYSICAL)
        assert l2_norm(abs_grad(c, -1.0)) == 0.0

    def test_bessel_single_mode(self):
        g = make_grid(16)
        u = plane_wave(g, (1, 0, 0))
        out = bessel(u, 1.0).physical()
        expected = np.sqrt(1 + (2 * np.pi / g.length) ** 2) * u.values
        np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_unregistered_symbol_rejected(self):
        u = plane_wave(make_grid(8), (1, 0, 0))
        with pytest.raises(StructureError):
            multiplier(u, "laplacian")

    def test_multiplier_dispatch_matches_functions(self):
        u = random_scalar(make_grid(8), 5)
        np.testing.assert_array_equal(
            multiplier(u, "riesz", axis=2).values, riesz(u, 2).values
        )
        np.testing.assert_array_equal(
            multiplier(u, "bessel", s=-1.0).values, bessel(u, -1.0).values
        )

    def test_riesz_compose_abs_grad_is_derivative(self):
        # R_j |nabla| = d_j on mean-zero fields
        g = make_grid(16)
        u = random_scalar(g, 6, band=5)
        s = u.spectral().values.copy()
        s[0, 0, 0] = 0.0
        u = Field(g, s, Rep.SPECTRAL)
        lhs = riesz(abs_grad(u, 1.0), 2)
        rhs = derivative(u, 2)
        diff = l2_norm(lhs - rhs)
        assert diff < 1e-12 * max(l2_norm(rhs), 1.0)

    def test_reality_preserved(self):
        g = make_grid(16)
        u = random_scalar(g, 7)
        for f in (derivative(u, 0), riesz(u, 1), abs_grad(u, 1.0),
                  abs_grad(u, -1.0), bessel(u, 0.37)):
            raw = np.fft.ifftn(f.values, axes=(-3, -2, -1))
            assert np.max(np.abs(raw.imag)) < 1e-13


class TestPointwiseProduct:
    def test_zero_annihilates(self):
        g = make_grid(8)
        u = random_scalar(g, 8)
        z = zero_field(g, rep=Rep.PHYSICAL)
        assert l2_norm(pointwise_product(u, z)) == 0.0

    def test_commutator_with_self_vanishes(self):
        g = make_grid(8)
        u = random_algebra_field(g, SU2, 9)
        out = pointwise_product(u, u, op="commutator")
        assert l2_norm(out) < 1e-13 * l2_norm(u) ** 2

    def test_single_modes_add_exponents(self):
        g = make_grid(16)
        u = plane_wave(g, (1, 2, 0))
        v = plane_wave(g, (2, -1, 1))
        w = pointwise_product(u, v)
        c = w.values / g.n_points**3
        k = g.k_int.tolist()
        idx = (k.index(3), k.index(1), k.index(1))
        assert abs(c[idx] - 1.0) < 1e-12
        c[idx] = 0.0
        assert np.max(np.abs(c)) < 1e-12

    def test_grid_mismatch_rejected(self):
        u = random_scalar(make_grid(8), 1)
        v = random_scalar(make_grid(16), 1)
        with pytest.raises(StructureError):
            pointwise_product(u, v)

    def test_dealiased_product_matches_convolution_oracle(self):
        # direct O(N^6) convolution on N = 16 with band-limited inputs
        g = make_grid(16)
        band = 5  # 16/3 -> modes up to 5 survive the two-thirds mask
        u = random_scalar(g, 10, band=band, real=False)
        v = random_scalar(g, 11, band=band, real=False)
        w = pointwise_product(u, v)

        n = g.n_points
        cu = u.spectral().values / n**3
        cv = v.spectral().values / n**3
        k = g.k_int
        conv = np.zeros_like(cu)
        nz_u = np.argwhere(np.abs(cu) > 0)
        nz_v = np.argwhere(np.abs(cv) > 0)
        for iu in nz_u:
            ku = k[iu]
            for iv in nz_v:
                kk = ku + k[iv]
                out = tuple(int(x) % n for x in kk)
                conv[out] += cu[tuple(iu)] * cv[tuple(iv)]
        conv *= g.dealias_mask
        got = w.values / n**3
        assert np.max(np.abs(got - conv)) < 1e-12 * np.max(np.abs(conv))

    def test_inner_product_field(self):
        g = make_grid(8)
        u = random_algebra_field(g, SU2, 12)
        out = pointwise_product(u, u, op="inner")
        up = u.physical().values
        direct = np.real(np.einsum("ij...,ij...->...", up, np.conj(up)))
        direct_masked = np.fft.fftn(direct) * g.dealias_mask
        np.testing.assert_allclose(out.values, direct_masked,
                                   atol=1e-12 * np.max(np.abs(direct_masked)))


class TestNorms:
    def test_zero(self):
        assert sobolev_norm(zero_field(make_grid(8)), 1.3) == 0.0

    def test_constant_field(self):
        g = make_grid(8, length=3.0)
        c = Field(g, np.full((8, 8, 8), -2.5), Rep.PHYSICAL)
        for s in (-1.0, 0.0, 2.0):
            assert sobolev_norm(c, s) == pytest.approx(2.5 * 3.0**1.5, rel=1e-13)

    def test_single_mode_scaling(self):
        # lattice-sum oracle: a single mode scales the L2 norm by <k>^s
        g = make_grid(16)
        u = plane_wave(g, (2, 1, 0), amplitude=0.7)
        s = 0.95
        xi = 2 * np.pi / g.length * np.sqrt(5.0)
        expected = (1 + xi**2) ** (s / 2) * l2_norm(u)
        assert sobolev_norm(u, s) == pytest.approx(expected, rel=1e-12)
