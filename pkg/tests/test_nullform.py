import numpy as np
import pytest

from ymhlab import data
from ymhlab.algebra import SU2
from ymhlab.errors import StructureError
from ymhlab.grid import Field, GridSpec, Rep, l2_norm, rel_l2_diff, zero_field
from ymhlab.nullform import (
    SpacetimeField,
    bsigma,
    bsigma_direct,
    check_angle_estimate,
    check_symbol_bounds,
    constant_spacetime,
    lorenz_identity_residuals,
    lorenz_residual_potential,
    one_symbol,
    potential_map,
    q0,
    q0_bracket,
    q0_symbol,
    q0i_symbol,
    qab,
    qab_bracket,
    qij_symbol,
    riesz_null_bracket,
)

GRID = GridSpec(16)


def scalar_wave(grid, k, sign=1.0):
    """u = exp(i(t|k| - k.x)) at t = 0 as a (u, dtu) pair, scalar complex."""
    x0, x1, x2 = grid.x_axes()
    base = 2 * np.pi / grid.length
    kk = np.asarray(k, dtype=float)
    phase = -base * (kk[0] * x0 + kk[1] * x1 + kk[2] * x2)
    u = np.exp(1j * phase)
    omega = base * np.linalg.norm(kk)
    uf = Field(grid, u, Rep.PHYSICAL, real=False)
    dtf = Field(grid, sign * 1j * omega * u, Rep.PHYSICAL, real=False)
    return SpacetimeField(uf, dtf)


def random_st(grid, kind, seed, band=4):
    return SpacetimeField(
        data.random_algebra_field(grid, kind, seed, band),
        data.random_algebra_field(grid, kind, seed + 1000, band),
    )


class TestQ0:
    def test_constant_second_slot(self):
        u = random_st(GRID, SU2, 0)
        c = constant_spacetime(
            Field(GRID, np.broadcast_to(
                np.array([[0.3j, 0], [0, -0.3j]]).reshape(2, 2, 1, 1, 1),
                (2, 2, 16, 16, 16)).copy(), Rep.PHYSICAL, SU2, real=False)
        )
        assert l2_norm(q0(u, c)) < 1e-12

    def test_plane_wave_null_cancellation(self):
        # parallel characteristic directions: Q0 vanishes identically
        u = scalar_wave(GRID, (2, 1, 0))
        out = q0(u, u)
        assert l2_norm(out) < 1e-11

    def test_static_reduces_to_gradient_product(self):
        g = GRID
        a = data.random_scalar_field(g, 3, band=4)
        b = data.random_scalar_field(g, 4, band=4)
        u = SpacetimeField(a, zero_field(g))
        v = SpacetimeField(b, zero_field(g))
        out = q0(u, v)
        from ymhlab.grid import derivative, pointwise_product
        acc = None
        for j in range(3):
            t = pointwise_product(derivative(a, j), derivative(b, j))
            acc = t if acc is None else acc + t
        assert rel_l2_diff(out, acc) < 1e-12


class TestQab:
    def test_equal_indices_rejected(self):
        u = scalar_wave(GRID, (1, 0, 0))
        with pytest.raises(StructureError):
            qab(u, u, 1, 1)

    def test_scalar_self_antisymmetry(self):
        u = SpacetimeField(data.random_scalar_field(GRID, 5, 4),
                           data.random_scalar_field(GRID, 6, 4))
        assert l2_norm(qab(u, u, 1, 2)) < 1e-13

    def test_x_independent_first_slot(self):
        g = GRID
        c = constant_spacetime(Field(g, np.full((16, 16, 16), 1.7), Rep.PHYSICAL))
        v = SpacetimeField(data.random_scalar_field(g, 7, 4),
                           data.random_scalar_field(g, 8, 4))
        assert l2_norm(qab(c, v, 1, 2)) < 1e-13

    def test_antisymmetry_in_arguments(self):
        u = SpacetimeField(data.random_scalar_field(GRID, 9, 4),
                           data.random_scalar_field(GRID, 10, 4))
        v = SpacetimeField(data.random_scalar_field(GRID, 11, 4),
                           data.random_scalar_field(GRID, 12, 4))
        lhs = qab(u, v, 1, 2)
        rhs = -1.0 * qab(v, u, 1, 2)
        assert rel_l2_diff(lhs, rhs) < 1e-12


class TestBrackets:
    def test_bracket_equals_ordinary_combination(self):
        # Q_ab[u,v] = Q_ab(u,v) + Q_ab(v,u) with the pointwise matrix product
        u, v = random_st(GRID, SU2, 20), random_st(GRID, SU2, 30)
        for a, b in ((0, 1), (1, 2), (0, 3)):
            lhs = qab_bracket(u, v, a, b)
            rhs = qab(u, v, a, b, op="mul") + qab(v, u, a, b, op="mul")
            assert rel_l2_diff(lhs, rhs) < 1e-12

    def test_q0_bracket_equals_difference(self):
        u, v = random_st(GRID, SU2, 40), random_st(GRID, SU2, 50)
        lhs = q0_bracket(u, v)
        rhs = q0(u, v, op="mul") - q0(v, u, op="mul")
        assert rel_l2_diff(lhs, rhs) < 1e-12

    def test_derivative_bracket_is_half_qab(self):
        # [d_a u, d_b u] = Qab[u, u] / 2
        from ymhlab.grid import pointwise_product
        for seed in range(5):
            u = random_st(GRID, SU2, 60 + seed)
            for a, b in ((0, 1), (1, 3), (2, 3)):
                direct = pointwise_product(u.deriv(a), u.deriv(b), "commutator")
                half = 0.5 * qab_bracket(u, u, a, b)
                scale = max(l2_norm(direct), 1e-30)
                assert l2_norm(direct - half) < 1e-12 * scale

    def test_zero_argument(self):
        u = random_st(GRID, SU2, 70)
        z = constant_spacetime(zero_field(GRID, SU2))
        assert l2_norm(q0_bracket(u, z)) == 0.0


class TestRieszNullBracket:
    def test_zero_potential(self):
        pot = tuple(constant_spacetime(zero_field(GRID, SU2)) for _ in range(4))
        v = random_st(GRID, SU2, 80)
        assert l2_norm(riesz_null_bracket(pot, v)) == 0.0

    def test_constant_second_slot(self):
        pot = data.make_lorenz_potential(GRID, SU2, 81, band=4)
        c = constant_spacetime(zero_field(GRID, SU2, Rep.PHYSICAL))
        assert l2_norm(riesz_null_bracket(pot, c)) == 0.0


class TestLorenzIdentities:
    def test_potential_satisfies_lorenz(self):
        pot = data.make_lorenz_potential(GRID, SU2, 90, band=4)
        assert lorenz_residual_potential(pot) < 1e-13

    def test_zero_potential_residuals(self):
        pot = tuple(constant_spacetime(zero_field(GRID, SU2)) for _ in range(4))
        psi = random_st(GRID, SU2, 91)
        rep = lorenz_identity_residuals(pot, psi)
        assert rep.contraction_residual == 0.0
        assert rep.dt_contraction_residual == 0.0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_identities_on_exact_lorenz_data(self, seed):
        pot = data.make_lorenz_potential(GRID, SU2, 100 + seed, band=4)
        psi = random_st(GRID, SU2, 200 + seed, band=4)
        rep = lorenz_identity_residuals(pot, psi)
        assert rep.contraction_residual < 1e-9
        assert rep.dt_contraction_residual < 1e-9

    def test_residual_grows_linearly_with_lorenz_violation(self):
        base = data.make_lorenz_potential(GRID, SU2, 300, band=4)
        bump = data.random_algebra_field(GRID, SU2, 301, band=4, mean_zero=True)
        resid = []
        deltas = (1e-3, 1e-2, 1e-1)
        psi = random_st(GRID, SU2, 302, band=4)
        for delta in deltas:
            pot = (SpacetimeField(base[0].u, base[0].dtu + delta * bump),) + base[1:]
            rep = lorenz_identity_residuals(pot, psi)
            resid.append(rep.contraction_residual)
        fit = np.polyfit(np.log(deltas), np.log(resid), 1)[0]
        assert fit == pytest.approx(1.0, abs=0.1)


class TestBSigma:
    def make_pair(self, grid, seeds, band):
        u = data.random_scalar_field(grid, seeds[0], band)
        v = data.random_scalar_field(grid, seeds[1], band)
        return u, v

    def test_one_symbol_is_plain_product(self):
        from ymhlab.grid import pointwise_product
        u, v = self.make_pair(GRID, (400, 401), 4)
        out = bsigma(one_symbol(), u, v)
        ref = pointwise_product(u, v)
        assert rel_l2_diff(out, ref) < 1e-13

    def test_qij_on_identical_single_mode(self):
        g = GRID
        x0, x1, x2 = g.x_axes()
        u = Field(g, np.exp(1j * (2 * np.pi / g.length) * (x0 + 2 * x1 + 0 * x2)),
                  Rep.PHYSICAL, real=False)
        out = bsigma(qij_symbol(0, 1), u, u)
        assert l2_norm(out) < 1e-13

    def test_q0_single_modes_coefficient(self):
        g = GRID
        base = 2 * np.pi / g.length
        k = np.array([1.0, 2.0, 0.0]) * base
        m = np.array([-1.0, 1.0, 1.0]) * base
        x0, x1, x2 = g.x_axes()
        u = Field(g, np.exp(1j * (k[0] * x0 + k[1] * x1 + k[2] * x2)), Rep.PHYSICAL, real=False)
        v = Field(g, np.exp(1j * (m[0] * x0 + m[1] * x1 + m[2] * x2)), Rep.PHYSICAL, real=False)
        out = bsigma(q0_symbol(), u, v)
        c = out.values / g.n_points**3
        expected = np.sqrt(1 + k @ k) * np.sqrt(1 + m @ m) - k @ m
        kk = g.k_int.tolist()
        idx = (kk.index(0), kk.index(3), kk.index(1))
        assert abs(c[idx] - expected) < 1e-12 * abs(expected)

    @pytest.mark.parametrize("symname", ["one", "q0", "q01", "q12"])
    @pytest.mark.parametrize("signs", [(1, 1), (1, -1), (-1, 1)])
    def test_matches_direct_double_sum(self, symname, signs):
        g = GridSpec(8)
        sym = {
            "one": one_symbol(), "q0": q0_symbol(),
            "q01": q0i_symbol(1), "q12": qij_symbol(1, 2),
        }[symname].with_signs(*signs)
        u = data.random_scalar_field(g, 500, band=2)
        v = data.random_scalar_field(g, 501, band=2)
        fast = bsigma(sym, u, v)
        slow = bsigma_direct(sym, u, v)
        scale = max(l2_norm(slow), 1e-30)
        assert l2_norm(fast - slow) / scale < 1e-11

    def test_symbol_closed_forms(self):
        # tensor-product expansion reproduces the closed forms at random points
        rng = np.random.default_rng(0)
        xi = rng.standard_normal((1000, 3)) * 10
        eta = rng.standard_normal((1000, 3)) * 10
        bx = np.sqrt(1 + np.sum(xi**2, axis=1))
        be = np.sqrt(1 + np.sum(eta**2, axis=1))
        q0v = q0_symbol().at_points(xi, eta)
        ref = bx * be - np.einsum("ij,ij->i", xi, eta)
        np.testing.assert_allclose(q0v, ref, rtol=1e-12)
        q01v = q0i_symbol(1).at_points(xi, eta)
        np.testing.assert_allclose(q01v, -bx * eta[:, 1] + xi[:, 1] * be, rtol=1e-12)
        q12v = qij_symbol(1, 2).at_points(xi, eta)
        np.testing.assert_allclose(q12v, -xi[:, 1] * eta[:, 2] + xi[:, 2] * eta[:, 1],
                                   rtol=1e-12, atol=1e-14)


class TestSymbolBounds:
    def test_small_run(self):
        rep = check_symbol_bounds(20_000, seed=1)
        assert rep.ratio("qij") <= 1.0 + 1e-12
        assert rep.ratio("q0j") <= 4.0
        assert rep.ratio("q0-corrected") <= 4.0
        # the literal q0 bound is violated at mismatched magnitudes
        assert rep.ratio("q0") > 4.0

    def test_parallel_vectors_qij_zero(self):
        from ymhlab.nullform import angle
        xi = np.array([[1.0, 2.0, 3.0]])
        assert angle(xi, 2 * xi)[0] == pytest.approx(0.0, abs=1e-12)

    def test_rejects_empty(self):
        with pytest.raises(StructureError):
            check_symbol_bounds(0)


class TestAngleEstimate:
    def test_corner_exponents_bounded(self):
        corners = [(0, 0, 0), (0.5, 0.5, 0.5), (0.5, 0.25, 0.0), (0.25, 0.25, 0.25)]
        rep = check_angle_estimate(20_000, corners, seed=3)
        assert rep.max_ratio <= 10.0
        assert np.isfinite(rep.max_ratio)

    def test_parallel_same_sign_on_cone(self):
        # theta = 0 whenever the signed vectors align; ratio contributes 0
        from ymhlab.nullform import angle
        xi = np.array([[0.0, 0.0, 2.0]])
        assert angle(xi, 3 * xi)[0] == 0.0

    def test_rejects_bad_exponents(self):
        with pytest.raises(StructureError):
            check_angle_estimate(10, [(0.6, 0, 0)])
