"""Weighted energy inequality: per-term assembly, aggregation, and the scan."""

import numpy as np
import pytest

from spdolab import CarlemanConfig, TorusGrid, scan, verify_inequality
from spdolab.carleman import (path_terms, resolve_operator_family, resolve_process,
                              resolve_window)
from spdolab.paths import TimeGrid, sample_brownian

T = 0.25
MU = 64.0 / T**2

BASE = dict(mu=MU, horizon=T, steps=256, paths=8, grid_points=32,
            a1="c-dx", b1="lambda:1", process="brownian-mode:0.1,1", seed=0)


def cfg(**overrides):
    merged = {**BASE, **overrides}
    return CarlemanConfig(**merged)


def quadrature_oracle(mu, horizon, a1_mode, b1_shift, nodes=100001):
    """Continuum terms for z = sin(pi t/T) e^{ix}: trapezoid at fine resolution."""
    t = np.linspace(0.0, horizon, nodes)
    eta = np.sin(np.pi * t / horizon)
    deta = (np.pi / horizon) * np.cos(np.pi * t / horizon)
    s = t - horizon
    e = np.exp(mu * s**2)
    lam = np.sqrt(1.0 + 1.0) ** b1_shift  # B1 = Lambda^shift on mode 1
    a1 = float(a1_mode)                   # A1 = multiplier xi on mode 1
    term1 = np.trapezoid(e * eta**2, t)
    term2 = np.trapezoid(e * (mu * s * eta - lam * eta) ** 2, t) / mu
    bracket = -1j * deta - a1 * eta - 1j * lam * eta
    cmp_ = 1j * (mu * s * eta - lam * eta)
    term3 = 4.0 / mu * np.trapezoid(e * (bracket * np.conj(cmp_)).real, t)
    return term1, term2, term3


class TestConfigValidation:
    @pytest.mark.parametrize("bad", [dict(mu=0.0), dict(mu=-1.0), dict(horizon=0.0),
                                     dict(steps=8), dict(paths=0)])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            cfg(**bad)


class TestFamilies:
    def test_zero_family(self):
        fam = resolve_operator_family("zero", TorusGrid(1, 16))
        assert fam.is_zero
        out = fam.apply_columns(np.ones((16, 3), dtype=complex))
        assert np.all(out == 0.0)

    def test_catalog_family(self):
        grid = TorusGrid(1, 16)
        fam = resolve_operator_family("c-dx:2", grid)
        cols = np.exp(1j * 3 * grid.axis_nodes()).reshape(-1, 1)
        out = fam.apply_columns(cols)
        assert np.allclose(out, 6.0 * cols, atol=1e-12)

    def test_lambda_family_self_adjoint(self):
        grid = TorusGrid(1, 16)
        fam = resolve_operator_family("lambda:1", grid)
        assert fam.adjoint().operator is fam.operator

    def test_reduction_branch_family(self):
        # imaginary part of the upper branch of tau^2 = -|xi|^2 multiplies
        # mode k by |k|
        grid = TorusGrid(1, 16)
        fam = resolve_operator_family("reduction-im:laplace:1", grid)
        k = -5
        cols = np.exp(1j * k * grid.axis_nodes()).reshape(-1, 1)
        out = fam.apply_columns(cols)
        ratio = out[0, 0] / cols[0, 0]
        assert abs(abs(ratio) - abs(k)) <= 1e-9 or abs(ratio) <= 1e-9

    def test_path_dependent_family_rejected(self):
        with pytest.raises(ValueError):
            resolve_operator_family("affine-w:0.5", TorusGrid(1, 16))

    def test_bad_branch_index(self):
        with pytest.raises(ValueError):
            resolve_operator_family("reduction-im:laplace:7", TorusGrid(1, 16))

    def test_window_selectors(self):
        assert resolve_window("sine") is not None
        assert resolve_window("parabolic") is not None
        with pytest.raises(ValueError):
            resolve_window("boxcar")

    def test_process_selectors(self):
        grid = TorusGrid(1, 16)
        tg = TimeGrid(T, 32)
        z = resolve_process("deterministic-mode:2,0.5", "sine", grid, 0, 0, tg)
        assert abs(z.snapshots[16].coefficient_at((2,))) > 0.0
        z2 = resolve_process("brownian-mode:0.1,1", "parabolic", grid, 0, 0, tg)
        assert len(z2.snapshots) == 33
        with pytest.raises(ValueError):
            resolve_process("levy-mode:1", "sine", grid, 0, 0, tg)


class TestEqualityAndStructure:
    def test_zero_process_every_term_vanishes(self):
        report = verify_inequality(cfg(process="deterministic-mode:1,0.0", paths=2))
        assert report.lhs_mean == 0.0 and report.rhs_mean == 0.0
        assert np.all(report.term_means == 0.0)
        assert report.verdict and report.borderline

    def test_self_adjoint_family_kills_skew_term(self):
        det = verify_inequality(cfg(process="deterministic-mode:1", paths=1))
        assert abs(det.term_means[3]) <= 1e-12
        sto = verify_inequality(cfg(paths=4))
        assert abs(sto.term_means[3]) <= 1e-12

    def test_non_self_adjoint_family_excites_skew_term(self):
        report = verify_inequality(cfg(b1="mod:1", paths=2))
        assert abs(report.term_means[3]) > 0.0

    def test_deterministic_process_has_zero_se_with_one_path(self):
        report = verify_inequality(cfg(process="deterministic-mode:1", paths=1))
        assert report.gap_se == 0.0
        assert report.verdict


class TestDeterministicBaseline:
    def test_terms_match_quadrature_oracle(self):
        o1, o2, o3 = quadrature_oracle(MU, T, a1_mode=1, b1_shift=1)
        for steps in (512, 1024):
            r = verify_inequality(cfg(process="deterministic-mode:1", paths=1,
                                      steps=steps, grid_points=32))
            assert abs(r.term_means[0] - o1) <= 0.01 * o1
            assert abs(r.term_means[1] - o2) <= 0.01 * o2
            assert abs(r.term_means[2] - o3) <= 0.01 * abs(o3)

    def test_increment_terms_vanish_with_resolution(self):
        # |dz|^2 sums are O(dt) for smooth paths: term5, term6 -> 0 linearly
        r1 = verify_inequality(cfg(process="deterministic-mode:1", paths=1, steps=256))
        r2 = verify_inequality(cfg(process="deterministic-mode:1", paths=1, steps=512))
        assert abs(r2.term_means[4]) < 0.6 * abs(r1.term_means[4])
        assert abs(r2.term_means[5]) < 0.6 * abs(r1.term_means[5])


class TestStochasticAggregation:
    def test_rerun_identical(self):
        a = verify_inequality(cfg(paths=16))
        b = verify_inequality(cfg(paths=16))
        assert a.gap == b.gap and a.gap_se == b.gap_se
        assert np.array_equal(a.term_means, b.term_means)

    def test_seed_changes_results(self):
        a = verify_inequality(cfg(paths=16, seed=0))
        b = verify_inequality(cfg(paths=16, seed=1))
        assert a.gap != b.gap

    def test_threading_does_not_change_bytes(self, monkeypatch):
        a = verify_inequality(cfg(paths=16))
        monkeypatch.setenv("SPDO_LAB_THREADS", "4")
        b = verify_inequality(cfg(paths=16))
        assert a.gap == b.gap and np.array_equal(a.term_means, b.term_means)

    def test_se_positive_for_stochastic_runs(self):
        report = verify_inequality(cfg(paths=16))
        assert report.gap_se > 0.0
        assert report.lhs_se > 0.0

    def test_path_terms_direct_row(self):
        grid = TorusGrid(1, 16)
        tg = TimeGrid(T, 64)
        a1 = resolve_operator_family("zero", grid)
        b1 = resolve_operator_family("zero", grid)
        z = resolve_process("deterministic-mode:1", "sine", grid, 0, 0, tg)
        terms = path_terms(z, a1, b1, b1, MU)
        assert terms.shape == (6,)
        assert terms[0] > 0.0 and terms[3] == 0.0


class TestScan:
    def test_default_grid_is_kappa_over_t_squared(self):
        base = cfg(paths=2, steps=64, grid_points=16)
        result = scan(base, T_list=(0.125, 0.25), kappa_list=(16.0, 64.0))
        assert len(result.rows) == 4
        mus = {(r.horizon, r.mu) for r in result.rows}
        assert (0.125, 16.0 / 0.125**2) in mus
        assert (0.25, 64.0 / 0.25**2) in mus

    def test_explicit_mu_list_overrides(self):
        base = cfg(paths=2, steps=64, grid_points=16)
        result = scan(base, mu_list=(100.0, 400.0), T_list=(0.25,))
        assert [r.mu for r in result.rows] == [100.0, 400.0]

    def test_summary_fields(self):
        base = cfg(paths=4, steps=64, grid_points=16)
        result = scan(base, T_list=(0.25,), kappa_list=(16.0, 64.0))
        assert result.summary["rows"] == 2
        assert 0 <= result.summary["passes"] <= 2
        assert "gap_vs_mu@T=0.25" in result.summary["trends"]
        assert result.all_pass() == (result.summary["passes"] == 2)
