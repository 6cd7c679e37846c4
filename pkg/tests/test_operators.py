"""Quantization, adjoints, composition, boundedness, and parametrix checks."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spdolab import (DenseCapError, EllipticityError, GridMismatchError,
                     LambdaOperator, SpectralField, TorusGrid, boundedness_harness,
                     compose, inner, l2_norm, parametrix, parametrix_residual_scan,
                     quantize, random_band_limited_field)
from spdolab.catalog import make_symbol

GRID = TorusGrid(1, 32)
N = GRID.frequency_cutoff

seeds = st.integers(0, 2**32 - 1)


def band_field(grid, seed):
    rng = np.random.default_rng(seed)
    return random_band_limited_field(grid, rng, grid.frequency_cutoff // 2)


class TestQuantization:
    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_identity_symbol(self, seed):
        op = quantize(make_symbol("one"), GRID)
        u = band_field(GRID, seed)
        assert l2_norm(op.apply(u) - u) <= 1e-12

    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_frequency_multiplier(self, seed):
        # a(xi) = xi acts as exact spectral differentiation
        op = quantize(make_symbol("xi"), GRID)
        u = band_field(GRID, seed)
        expected = SpectralField.from_coefficients(
            GRID, GRID.frequency_grids()[0] * u.coefficients)
        assert l2_norm(op.apply(u) - expected) <= 1e-12

    def test_single_modulation_shifts_modes(self):
        # a(x) = e^{i3x} sends e^{ikx} to e^{i(k+3)x} inside the band
        op = quantize(make_symbol("mod:3"), GRID)
        u = SpectralField.pure_mode(GRID, 5)
        out = op.apply(u)
        assert abs(out.coefficient_at((8,)) - 1.0) <= 1e-12
        assert abs(l2_norm(out) - 1.0) <= 1e-12

    def test_mixed_symbol_closed_form(self):
        # (2 + sin x)(1+xi^2)^(1/2) on a pure mode is a pointwise product
        op = quantize(make_symbol("trig-lambda:2,1,0,1"), GRID)
        k = 4
        u = SpectralField.pure_mode(GRID, k)
        x = GRID.axis_nodes()
        expected = (2.0 + np.sin(x)) * np.sqrt(1.0 + k**2) * np.exp(1j * k * x)
        assert np.max(np.abs(op.apply(u).values - expected)) <= 1e-12

    @given(seed=seeds)
    @settings(max_examples=10, deadline=None)
    def test_dense_matrix_agrees_with_apply(self, seed):
        op = quantize(make_symbol("trig-lambda:2,1,0,1"), GRID)
        u = band_field(GRID, seed)
        via_dense = op.dense_matrix() @ u.values
        assert np.max(np.abs(via_dense - op.apply(u).values)) <= 1e-12

    def test_linearity(self):
        op = quantize(make_symbol("mod-xi:2"), GRID)
        u, v = band_field(GRID, 0), band_field(GRID, 1)
        lhs = op.apply(u + 2.0 * v)
        rhs = op.apply(u) + 2.0 * op.apply(v)
        assert l2_norm(lhs - rhs) <= 1e-12

    def test_dense_cap(self):
        op = quantize(make_symbol("one"), TorusGrid(1, 8192))
        with pytest.raises(DenseCapError):
            op.dense_matrix()

    def test_grid_mismatch(self):
        op = quantize(make_symbol("one"), GRID)
        with pytest.raises(GridMismatchError):
            op.apply(SpectralField.pure_mode(TorusGrid(1, 64), 1))


class TestLambdaOperator:
    def test_inverse_pair(self):
        up = LambdaOperator(1.0, GRID)
        down = LambdaOperator(-1.0, GRID)
        u = band_field(GRID, 3)
        assert l2_norm(down.apply(up.apply(u)) - u) <= 1e-12

    def test_matches_quantized_symbol(self):
        op = quantize(make_symbol("lambda:2"), GRID)
        lam = LambdaOperator(2.0, GRID)
        u = band_field(GRID, 5)
        assert l2_norm(op.apply(u) - lam.apply(u)) <= 1e-11

    def test_self_adjoint(self):
        lam = LambdaOperator(1.0, GRID)
        u, v = band_field(GRID, 1), band_field(GRID, 2)
        assert abs(inner(lam.apply(u), v) - inner(u, lam.apply(v))) <= 1e-12


class TestAdjoint:
    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_pairing_identity(self, seed):
        op = quantize(make_symbol("trig-lambda:2,1,0,1"), GRID)
        adj = op.adjoint()
        u, v = band_field(GRID, seed), band_field(GRID, seed + 13)
        assert abs(inner(op.apply(u), v) - inner(u, adj.apply(v))) <= 1e-11

    def test_double_adjoint(self):
        op = quantize(make_symbol("mod-xi:1"), GRID)
        u = band_field(GRID, 9)
        back = op.adjoint().adjoint()
        assert l2_norm(back.apply(u) - op.apply(u)) <= 1e-11


class TestComposition:
    def test_multiplier_after_profile_exact(self):
        # first-order symbol against x-profile: the one-term expansion is exact
        # away from the band edge (products alias in the top mode pair)
        f = quantize(make_symbol("trig:2,1,0"), GRID)
        d = quantize(make_symbol("xi"), GRID)
        exact = compose(d, f, mode="exact").operator
        asym = compose(d, f, mode="asymptotic-1").operator
        for k in range(-N // 2, N // 2 + 1):
            u = SpectralField.pure_mode(GRID, k)
            assert l2_norm(exact.apply(u) - asym.apply(u)) <= 1e-10

    def test_profile_after_multiplier_exact(self):
        f = quantize(make_symbol("trig:2,1,0"), GRID)
        d = quantize(make_symbol("xi"), GRID)
        exact = compose(f, d, mode="exact").operator
        asym = compose(f, d, mode="asymptotic-1").operator
        for k in range(-N // 2, N // 2 + 1):
            u = SpectralField.pure_mode(GRID, k)
            assert l2_norm(exact.apply(u) - asym.apply(u)) <= 1e-10

    def test_first_order_remainder_decays(self):
        # remainder order l1 + l2 - 2: relative error shrinks ~ (1+k)^-2
        grid = TorusGrid(1, 64)
        a = quantize(make_symbol("trig-lambda:2,1,0,1"), grid)
        b = quantize(make_symbol("trig-lambda:3,0,1,1"), grid)
        exact = compose(a, b, mode="exact").operator
        asym = compose(a, b, mode="asymptotic-1").operator
        rels = []
        for k in (4, 8, 16):
            u = SpectralField.pure_mode(grid, k)
            ref = exact.apply(u)
            rels.append(l2_norm(ref - asym.apply(u)) / l2_norm(ref))
        assert rels[0] < 1e-3
        assert rels[0] > 3.0 * rels[1] > 9.0 * rels[2]

    def test_composed_order_metadata(self):
        a = quantize(make_symbol("lambda:1"), GRID)
        b = quantize(make_symbol("xi"), GRID)
        result = compose(a, b, mode="asymptotic-1")
        assert result.symbol.order == 2.0


class TestBoundedness:
    def test_pure_multiplier_ratio_at_most_one(self):
        # |xi| <= (1+xi^2)^(1/2) pointwise, so the H^1 -> L2 ratio never exceeds 1
        report = boundedness_harness(make_symbol("xi"), s=1.0)
        assert report.max_ratio <= 1.0 + 1e-12

    def test_variable_symbol_uniform_across_cutoffs(self):
        report = boundedness_harness(make_symbol("trig-lambda:2,1,0,1"), s=1.0)
        assert len(report.rows) == 3
        assert report.variation < 0.10


class TestParametrix:
    def test_variable_elliptic_residual_slope(self):
        grid = TorusGrid(1, 128)
        op = quantize(make_symbol("trig-lambda:2,1,0,1"), grid)
        built = parametrix(op, lower_frequency_bound=8.0)
        scan = parametrix_residual_scan(built, op, side="left")
        assert scan.fitted_slope <= -0.9
        assert scan.rows[0].frequency == 8

    def test_right_parametrix_slope(self):
        grid = TorusGrid(1, 128)
        op = quantize(make_symbol("trig-lambda:2,1,0,1"), grid)
        built = parametrix(op, lower_frequency_bound=8.0)
        scan = parametrix_residual_scan(built, op, side="right")
        assert scan.fitted_slope <= -0.9

    def test_exact_multiplier_residual_above_taper(self):
        # for a pure frequency multiplier the truncated reciprocal is exact
        # wherever the taper is 1, i.e. above twice the cutoff
        grid = TorusGrid(1, 128)
        op = quantize(make_symbol("lambda:1"), grid)
        built = parametrix(op, lower_frequency_bound=8.0)
        for k in (16, 24, 40, 63):
            u = SpectralField.pure_mode(grid, k)
            resid = built.left.apply(op.apply(u)) - u
            assert l2_norm(resid) <= 1e-12

    def test_non_elliptic_rejected(self):
        op = quantize(make_symbol("trig:1,1,0"), GRID)
        with pytest.raises(EllipticityError):
            parametrix(op)
