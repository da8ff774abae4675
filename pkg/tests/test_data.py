import numpy as np
import pytest

from ymhlab import data, grid as gridmod, system
from ymhlab.algebra import SU2, basis
from ymhlab.data import (
    CauchyData,
    abelian_wave_data,
    build_f_data,
    check_f_bounds,
    data_norm,
    finalize_lorenz,
    gauss_residual,
    lorenz_data_residual,
    make_constraint_data,
    make_lorenz_potential,
    random_cauchy_data,
)
from ymhlab.errors import ConfigError
from ymhlab.grid import Field, GridSpec, Rep, l2_norm, rel_l2_diff, zero_field

GRID = GridSpec(16)


def zero_data(grid=GRID):
    z = lambda: zero_field(grid, SU2)
    return CauchyData((z(), z(), z(), z()), (z(), z(), z(), z()), z(), z())


class TestLorenzPotential:
    def test_zero_amplitude(self):
        pot = make_lorenz_potential(GRID, SU2, seed=0, band=3, amplitude=0.0)
        assert all(l2_norm(c.u) == 0 for c in pot)

    def test_constraint_exact(self):
        from ymhlab.nullform import lorenz_residual_potential
        pot = make_lorenz_potential(GRID, SU2, seed=1, band=4)
        assert lorenz_residual_potential(pot) < 1e-13

    def test_deterministic(self):
        p1 = make_lorenz_potential(GRID, SU2, seed=2, band=3)
        p2 = make_lorenz_potential(GRID, SU2, seed=2, band=3)
        for c1, c2 in zip(p1, p2):
            np.testing.assert_array_equal(c1.u.values, c2.u.values)

    def test_mean_zero(self):
        pot = make_lorenz_potential(GRID, SU2, seed=3, band=3)
        for c in pot:
            assert np.max(np.abs(c.u.spectral().values[..., 0, 0, 0])) < 1e-13


class TestFinalizeLorenz:
    def test_enforces_constraint(self):
        d = random_cauchy_data(GRID, SU2, seed=4, band=3)
        assert lorenz_data_residual(d) < 1e-13

    def test_idempotent(self):
        d = random_cauchy_data(GRID, SU2, seed=5, band=3)
        d2 = finalize_lorenz(d)
        np.testing.assert_array_equal(d.dota[0].spectral().values,
                                      d2.dota[0].spectral().values)
        for i in range(1, 4):
            np.testing.assert_array_equal(d.a[i].values, d2.a[i].values)

    def test_zero_a_gives_zero_dota0(self):
        d = zero_data()
        assert l2_norm(finalize_lorenz(d).dota[0]) == 0.0


class TestBuildFData:
    def test_zero_data(self):
        f, dotf = build_f_data(zero_data())
        assert all(l2_norm(x) == 0 for x in (*f, *dotf))

    def test_abelian_single_mode_curl(self):
        # a in one algebra direction, phi = 0: f_ij reduces to the curl
        t0 = basis(SU2)[2]
        sc = data.random_scalar_field(GRID, 6, band=2)
        a = [zero_field(GRID, SU2)]
        a += [Field(GRID, np.einsum("...,ij->ij...",
                                    data.random_scalar_field(GRID, 7 + j, band=2).values, t0),
                    Rep.SPECTRAL, SU2, False) for j in range(3)]
        z = zero_field(GRID, SU2)
        d = finalize_lorenz(CauchyData(tuple(a), (z, z, z, z), z, z))
        f, _ = build_f_data(d)
        for idx, (al, be) in enumerate(system.PAIRS):
            if al == 0:
                continue
            curl = gridmod.derivative(a[be], al - 1) - gridmod.derivative(a[al], be - 1)
            assert rel_l2_diff(f[idx], curl) < 1e-12

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_f_equals_curvature(self, seed):
        d = random_cauchy_data(GRID, SU2, seed=seed, band=3)
        f, _ = build_f_data(d)
        f_curv = system.curvature_from_potential(d.a, d.dota)
        for x, y in zip(f, f_curv):
            assert rel_l2_diff(x, y) < 1e-12


class TestGaussResidual:
    def test_zero_data(self):
        f, _ = build_f_data(zero_data())
        assert gauss_residual(zero_data(), f) == 0.0

    def test_abelian_pure_gauge(self):
        # a_i = d_i chi in one direction, everything else zero
        t0 = basis(SU2)[0]
        chi = data.random_scalar_field(GRID, 8, band=3)
        a = [zero_field(GRID, SU2)]
        a += [Field(GRID, np.einsum("...,ij->ij...",
                                    gridmod.derivative(chi, j).values, t0),
                    Rep.SPECTRAL, SU2, False) for j in range(3)]
        z = zero_field(GRID, SU2)
        d = finalize_lorenz(CauchyData(tuple(a), (z, z, z, z), z, z))
        f, _ = build_f_data(d)
        assert gauss_residual(d, f) < 1e-12

    def test_manufactured_family_exact(self):
        for seed in range(3):
            d = make_constraint_data(GRID, SU2, seed=seed, band=3, amplitude=0.8,
                                     phi_amplitude=0.5)
            f, _ = build_f_data(d)
            assert gauss_residual(d, f) < 1e-10

    def test_generic_data_violates(self):
        d = random_cauchy_data(GRID, SU2, seed=11, band=3)
        f, _ = build_f_data(d)
        assert gauss_residual(d, f) > 1e-3


class TestDataNorm:
    def test_zero(self):
        assert data_norm(zero_data()) == 0.0

    def test_homogeneous_degree_one(self):
        d = random_cauchy_data(GRID, SU2, seed=12, band=3)
        n1 = data_norm(d)
        n2 = data_norm(d.scaled(0.25))
        assert n2 == pytest.approx(0.25 * n1, rel=1e-12)

    def test_single_mode_value(self):
        # a_1 = single mode in one direction, everything else zero
        t0 = basis(SU2)[0]
        g = GRID
        x0, _, _ = g.x_axes()
        sc = np.cos(2 * 2 * np.pi / g.length * x0)
        vals = np.einsum("...,ij->ij...", sc * np.ones((g.n_points,) * 3), t0)
        a1 = Field(g, vals, Rep.PHYSICAL, SU2, False)
        z = zero_field(g, SU2)
        d = CauchyData((z, a1, z, z), (z, z, z, z), z, z)
        xi = 2 * 2 * np.pi / g.length
        expected = np.sqrt(1 + xi**2) * l2_norm(a1)
        assert data_norm(d) == pytest.approx(expected, rel=1e-12)

    def test_p_validation(self):
        d = zero_data()
        with pytest.raises(ConfigError):
            CauchyData(d.a, d.dota, d.phi0, d.phi1, p=5.0)


class TestFBounds:
    def test_zero_data_reports_zero(self):
        d = zero_data()
        f, dotf = build_f_data(d)
        rep = check_f_bounds(d, f, dotf)
        assert rep.f_ratio_printed == 0.0
        assert rep.dotf_ratio == 0.0

    def test_pure_dota_data(self):
        # a = phi = 0: f_0i = dota_i exactly, so the printed ratio is <= 1
        z = zero_field(GRID, SU2)
        dota = tuple([z] + [data.random_algebra_field(GRID, SU2, 20 + i, band=3)
                            for i in range(3)])
        d = CauchyData((z, z, z, z), dota, z, z)
        f, dotf = build_f_data(d)
        rep = check_f_bounds(d, f, dotf)
        assert rep.f_ratio_printed == pytest.approx(1.0, rel=1e-12)

    def test_random_batch_finite(self):
        ratios = []
        for seed in range(20):
            d = random_cauchy_data(GRID, SU2, seed=seed, band=3)
            f, dotf = build_f_data(d)
            rep = check_f_bounds(d, f, dotf)
            assert np.isfinite(rep.f_ratio_printed)
            assert np.isfinite(rep.f_ratio_corrected)
            assert np.isfinite(rep.dotf_ratio)
            assert rep.f_ratio_corrected <= rep.f_ratio_printed
            ratios.append(rep.f_ratio_corrected)
        assert max(ratios) < 50


class TestGenerators:
    def test_constraint_data_deterministic(self):
        d1 = make_constraint_data(GRID, SU2, seed=30, band=2)
        d2 = make_constraint_data(GRID, SU2, seed=30, band=2)
        np.testing.assert_array_equal(d1.a[1].values, d2.a[1].values)

    def test_abelian_data_brackets_vanish(self):
        d = abelian_wave_data(GRID, SU2, seed=31, band=2)
        comm = gridmod.pointwise_product(d.a[1], d.a[2], "commutator")
        assert l2_norm(comm) < 1e-13

    def test_to_gauge_state_compatibility(self):
        d = make_constraint_data(GRID, SU2, seed=32, band=2)
        s = data.to_gauge_state(d)
        from ymhlab.diagnose import compatibility_residual, lorenz_residual
        assert compatibility_residual(s) < 1e-12
        assert lorenz_residual(s) < 1e-12
