"""Backfitting estimator: rules, sweeps, optimality, identifiability behavior."""

import numpy as np
import pytest
from conftest import ridged_design, sim_xy, stacked_dense

from addspline import (
    AdditiveDesign,
    SingularSystemError,
    backfit,
    backfit_stages,
    build_design,
    center_component,
    criterion,
    hessian_check,
    joint_solve,
    kn_rule,
    lambda_rule,
    one_stage_pair,
    penalty_matrix,
    predict,
    univariate_penalized,
)
from addspline.backfit import NormalEquations, assemble_hessian
from addspline.basis import design_matrix, make_knots


class TestTuningRules:
    def test_interval_rule_values(self):
        assert [kn_rule(n) for n in (100, 111, 200, 500, 1000, 2000)] == [
            13,
            13,
            17,
            24,
            32,
            42,
        ]

    def test_interval_rule_formula(self):
        for n in (64, 300, 5000):
            assert kn_rule(n) == int(round(2.0 * n**0.4))

    def test_lambda_rule_formula(self):
        assert lambda_rule(1000, 32) == pytest.approx(2.0 * 1000**0.4 / np.sqrt(32), rel=1e-14)
        assert lambda_rule(1000, 32) == pytest.approx(5.6035, abs=1e-4)
        assert lambda_rule(111, 13) == pytest.approx(3.649114671261128, rel=1e-12)

    def test_build_design_wires_defaults(self):
        y, x1, x2 = sim_xy(200, seed=1)
        d = build_design(y, x1, x2)
        K = kn_rule(200)
        assert d.X1.config.num_intervals == K
        assert d.lambda1 == lambda_rule(200, K)
        assert d.lambda2 == d.lambda1
        assert d.penalty.order == 2
        assert d.num_coef == K + 3

    def test_build_design_overrides(self):
        y, x1, x2 = sim_xy(60, seed=2)
        d = build_design(y, x1, x2, degree=2, diff_order=1, num_intervals=7, lambda1=0.5, lambda2=2.0)
        assert d.X1.config.degree == 2
        assert d.penalty.order == 1
        assert d.X1.config.num_intervals == 7
        assert (d.lambda1, d.lambda2) == (0.5, 2.0)


class TestDesignValidation:
    def test_row_mismatch(self):
        y, x1, x2 = sim_xy(50, seed=3)
        cfg = make_knots(3, 6)
        with pytest.raises(ValueError):
            AdditiveDesign(
                y=y,
                X1=design_matrix(cfg, x1),
                X2=design_matrix(cfg, x2[:-1]),
                lambda1=1.0,
                lambda2=1.0,
                penalty=penalty_matrix(2, cfg.num_basis),
            )

    def test_penalty_size_mismatch(self):
        y, x1, x2 = sim_xy(50, seed=3)
        cfg = make_knots(3, 6)
        with pytest.raises(ValueError):
            AdditiveDesign(
                y=y,
                X1=design_matrix(cfg, x1),
                X2=design_matrix(cfg, x2),
                lambda1=1.0,
                lambda2=1.0,
                penalty=penalty_matrix(2, cfg.num_basis + 2),
            )

    def test_negative_penalty_weight(self):
        y, x1, x2 = sim_xy(50, seed=3)
        with pytest.raises(ValueError):
            build_design(y, x1, x2, num_intervals=6, lambda1=-1.0, lambda2=1.0)


class TestSweeps:
    def test_first_two_stages_match_closed_form(self):
        # stage updates alternate ridge solves against the other component's fit
        d = ridged_design(n=150, K=8)
        X1, X2 = d.X1.values, d.X2.values
        P = d.penalty.values
        inv1 = np.linalg.inv(X1.T @ X1 + d.lambda1 * P)
        inv2 = np.linalg.inv(X2.T @ X2 + d.lambda2 * P)
        b1 = inv1 @ X1.T @ d.y
        b2 = inv2 @ X2.T @ (d.y - X1 @ b1)
        got = backfit_stages(d, 1)
        assert np.allclose(got.b1, b1, atol=1e-12)
        assert np.allclose(got.b2, b2, atol=1e-12)
        b1 = inv1 @ X1.T @ (d.y - X2 @ b2)
        b2 = inv2 @ X2.T @ (d.y - X1 @ b1)
        got = backfit_stages(d, 2)
        assert np.allclose(got.b1, b1, atol=1e-12)
        assert np.allclose(got.b2, b2, atol=1e-12)

    def test_fixed_stage_prefix_of_tolerance_run(self):
        d = ridged_design()
        full = backfit(d, tol=1e-13, keep_history=True)
        for stages in (1, 3, full.stages):
            part = backfit_stages(d, stages)
            assert np.array_equal(part.b1, full.history[stages - 1][0])
            assert np.array_equal(part.b2, full.history[stages - 1][1])

    def test_criterion_never_increases(self):
        for seed in (0, 5):
            y, x1, x2 = sim_xy(120, seed=seed)
            d = build_design(y, x1, x2, num_intervals=9, lambda1=0.7, lambda2=1.3)
            r = backfit(d, tol=1e-12, keep_history=True)
            vals = [criterion(d, b1, b2) for b1, b2 in r.history]
            diffs = np.diff(vals)
            assert np.all(diffs <= 1e-10 * abs(vals[0]))

    def test_linearity_in_response(self):
        _, x1, x2 = sim_xy(100, seed=4)
        rng = np.random.default_rng(10)
        ya, yb = rng.normal(size=100), rng.normal(size=100)

        def fit(y):
            d = build_design(y, x1, x2, num_intervals=8, lambda1=1.0, lambda2=1.0)
            return backfit_stages(d, 6)

        ra, rb, rab = fit(ya), fit(yb), fit(ya + yb)
        assert np.allclose(rab.b1, ra.b1 + rb.b1, atol=1e-9)
        assert np.allclose(rab.b2, ra.b2 + rb.b2, atol=1e-9)

    def test_convergence_flags(self):
        d = ridged_design()
        r = backfit(d, tol=1e-13)
        assert r.converged
        assert r.stages >= 1
        assert r.residual_norm <= 1e-13
        short = backfit(d, tol=1e-13, max_stages=2)
        assert not short.converged
        assert short.stages == 2

    def test_history_off_by_default(self):
        d = ridged_design()
        assert backfit(d).history is None

    def test_argument_validation(self):
        d = ridged_design()
        with pytest.raises(ValueError):
            backfit(d, tol=-1.0)
        with pytest.raises(ValueError):
            backfit_stages(d, 0)
        with pytest.raises(ValueError):
            backfit(d, b2_init=np.zeros(3))


class TestNormalEquations:
    def test_residual_norm_is_estimating_equation_gap(self):
        d = ridged_design()
        eq = NormalEquations(d)
        r = backfit(d, tol=1e-13)
        assert eq.residual_norm(r.b1, r.b2) <= 1e-13
        rng = np.random.default_rng(0)
        b1 = r.b1 + 1e-3 * rng.normal(size=r.b1.size)
        assert eq.residual_norm(b1, r.b2) > 1e-6

    def test_stacked_matrix_matches_dense_blocks(self):
        d = ridged_design(n=90, K=6)
        A, _ = stacked_dense(d)
        assert np.allclose(NormalEquations(d).stacked_matrix(), A, atol=1e-12)


class TestOptimality:
    def test_converged_fit_beats_random_perturbations(self):
        y, x1, x2 = sim_xy(150, seed=6)
        d = build_design(y, x1, x2, num_intervals=10, lambda1=1.0, lambda2=1.0)
        r = backfit(d, tol=1e-12)
        base = criterion(d, r.b1, r.b2)
        rng = np.random.default_rng(99)
        q = d.num_coef
        for scale in (1e-3, 1.0):
            for _ in range(50):
                db1 = scale * rng.normal(size=q)
                db2 = scale * rng.normal(size=q)
                assert criterion(d, r.b1 + db1, r.b2 + db2) >= base - 1e-10 * (1 + base)

    def test_constant_transfer_leaves_criterion_unchanged(self):
        # the unpenalized shared-constant direction: moving c from one
        # component to the other changes neither the fit nor the penalty
        y, x1, x2 = sim_xy(150, seed=6)
        d = build_design(y, x1, x2, num_intervals=10, lambda1=1.0, lambda2=1.0)
        r = backfit(d, tol=1e-12)
        base = criterion(d, r.b1, r.b2)
        ones = np.ones(d.num_coef)
        for c in (-2.0, 0.5, 10.0):
            shifted = criterion(d, r.b1 + c * ones, r.b2 - c * ones)
            assert shifted == pytest.approx(base, rel=1e-12)


class TestJointSolve:
    def test_raises_on_exactly_singular_full_design(self):
        # both bases sum to one, the difference penalty kills constants:
        # the stacked system has an exact null vector for every lambda
        for seed in (0, 1, 2):
            y, x1, x2 = sim_xy(120, seed=seed)
            d = build_design(y, x1, x2, num_intervals=8, lambda1=1.0, lambda2=1.0)
            with pytest.raises(SingularSystemError):
                joint_solve(d)

    def test_null_vector_is_exact(self):
        y, x1, x2 = sim_xy(120, seed=7)
        d = build_design(y, x1, x2, num_intervals=8, lambda1=3.0, lambda2=0.25)
        A, _ = stacked_dense(d)
        q = d.num_coef
        z = np.concatenate([np.ones(q), -np.ones(q)]) / np.sqrt(2 * q)
        assert np.abs(A @ z).max() < 1e-12 * np.abs(A).max()

    def test_matches_backfit_on_identified_design(self):
        # once the constant gauge is broken the joint minimizer is unique and
        # the backfit limit must land on it
        for seed in (3, 8, 21):
            d = ridged_design(seed=seed)
            b1, b2 = joint_solve(d)
            r = backfit(d, tol=1e-13)
            assert r.converged
            assert np.abs(b1 - r.b1).max() < 1e-8
            assert np.abs(b2 - r.b2).max() < 1e-8

    def test_matches_dense_solver_on_identified_design(self):
        d = ridged_design(seed=5)
        A, rhs = stacked_dense(d)
        want = np.linalg.solve(A, rhs)
        b1, b2 = joint_solve(d)
        got = np.concatenate([b1, b2])
        assert np.abs(got - want).max() < 1e-9


class TestInitInvariance:
    def test_identified_quantities_ignore_the_start(self):
        y, x1, x2 = sim_xy(200, seed=9)
        d = build_design(y, x1, x2, num_intervals=10, lambda1=1.0, lambda2=1.0)
        q = d.num_coef
        ra = backfit(d, tol=1e-12)
        rb = backfit(d, b2_init=3.0 * np.random.default_rng(1).normal(size=q), tol=1e-12)
        grid = np.linspace(0.05, 1.0, 60)
        _, _, sum_a = predict(ra, d.X1.config, grid, grid)
        _, _, sum_b = predict(rb, d.X1.config, grid, grid)
        assert np.abs(sum_a - sum_b).max() < 1e-8
        for j in (1, 2):
            ca = center_component(ra, d, j, grid)
            cb = center_component(rb, d, j, grid)
            assert np.abs(ca - cb).max() < 1e-8

    def test_projected_gap_contracts(self):
        # off the shared-constant direction the sweep map is a strong
        # contraction; along it the gap is exactly preserved
        y, x1, x2 = sim_xy(200, seed=9)
        d = build_design(y, x1, x2, num_intervals=10, lambda1=1.0, lambda2=1.0)
        q = d.num_coef
        init = 5.0 * np.random.default_rng(2).normal(size=q)
        ra = backfit(d, tol=1e-13, max_stages=12, keep_history=True)
        rb = backfit(d, b2_init=init, tol=1e-13, max_stages=12, keep_history=True)
        ones = np.ones(q) / np.sqrt(q)

        def projected_gap(stage):
            gap = rb.history[stage][1] - ra.history[stage][1]
            return np.linalg.norm(gap - (gap @ ones) * ones)

        gaps = [projected_gap(s) for s in range(12)]
        for prev, nxt in zip(gaps, gaps[1:]):
            if prev > 1e-9:
                assert nxt <= 0.5 * prev

    def test_constant_direction_is_exactly_neutral(self):
        # starting 1000 units up the constant direction never decays
        y, x1, x2 = sim_xy(150, seed=12)
        d = build_design(y, x1, x2, num_intervals=9, lambda1=1.0, lambda2=1.0)
        q = d.num_coef
        ra = backfit(d, tol=1e-13, max_stages=8, keep_history=True)
        rb = backfit(d, b2_init=1e3 * np.ones(q), tol=1e-13, max_stages=8, keep_history=True)
        for s in range(8):
            gap = rb.history[s][1] - ra.history[s][1]
            assert np.abs(gap - 1e3).max() < 1e-6


class TestPointwiseHelpers:
    def test_univariate_penalized_matches_dense_ridge(self):
        y, x1, _ = sim_xy(130, seed=13)
        cfg = make_knots(3, 9)
        X = design_matrix(cfg, x1)
        Q = penalty_matrix(2, cfg.num_basis)
        lam = 0.8
        beta = np.linalg.solve(X.values.T @ X.values + lam * Q.values, X.values.T @ y)
        pts = np.array([0.21, 0.5, 0.93])
        want = design_matrix(cfg, pts).values @ beta
        got = univariate_penalized(X, y, lam, Q, pts)
        assert np.allclose(got, want, atol=1e-10)
        # scalar form
        assert univariate_penalized(X, y, lam, Q, 0.5) == pytest.approx(want[1], abs=1e-10)

    def test_one_stage_pair_closed_form(self):
        y, x1, x2 = sim_xy(140, seed=14)
        d = build_design(y, x1, x2, num_intervals=8, lambda1=1.0, lambda2=1.0)
        X1, X2, P = d.X1.values, d.X2.values, d.penalty.values
        b1 = np.linalg.solve(X1.T @ X1 + P, X1.T @ y)
        b2 = np.linalg.solve(X2.T @ X2 + P, X2.T @ (y - X1 @ b1))
        v = design_matrix(d.X1.config, np.array([0.3])).values[0]
        f1, f2 = one_stage_pair(d, 0.3, 0.3)
        assert f1 == pytest.approx(v @ b1, abs=1e-10)
        assert f2 == pytest.approx(v @ b2, abs=1e-10)

    def test_predict_shapes_and_sum(self):
        d = ridged_design()
        r = backfit(d, tol=1e-12)
        g = np.linspace(0.1, 1.0, 11)
        f1, f2, total = predict(r, d.X1.config, g, g)
        assert f1.shape == f2.shape == total.shape == (11,)
        assert np.allclose(total, f1 + f2, atol=1e-12)

    def test_center_component_mean_zero_over_design(self):
        y, x1, x2 = sim_xy(170, seed=15)
        d = build_design(y, x1, x2, num_intervals=9)
        r = backfit(d, tol=1e-11)
        c1 = center_component(r, d, 1, x1)
        c2 = center_component(r, d, 2, x2)
        assert abs(c1.mean()) < 1e-12 * (1 + np.abs(c1).max())
        assert abs(c2.mean()) < 1e-12 * (1 + np.abs(c2).max())

    def test_center_component_accepts_scalar(self):
        d = ridged_design()
        r = backfit(d, tol=1e-12)
        val = center_component(r, d, 1, 0.5)
        assert np.ndim(val) == 0
        assert np.isfinite(val)


class TestHessianCheck:
    def test_full_design_reports_the_zero_direction(self):
        y, x1, x2 = sim_xy(160, seed=16)
        for lam in (0.0, 1.0, 10.0):
            d = build_design(y, x1, x2, num_intervals=8, lambda1=lam, lambda2=lam)
            rep = hessian_check(d)
            assert not rep.is_pd
            assert abs(rep.constant_shift_quadform) < 1e-9
            assert abs(rep.min_eig) < 1e-9
            # the defect is one-dimensional: the next eigenvalue is real mass
            eigs = np.linalg.eigvalsh(assemble_hessian(d))
            assert eigs[1] > 1e-3

    def test_identified_design_is_positive_definite(self):
        rep = hessian_check(ridged_design())
        assert rep.is_pd
        assert rep.min_eig > 0.0
        assert rep.constant_shift_quadform > 1.0
