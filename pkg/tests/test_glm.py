import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symreg import (
    BERNOULLI,
    GAUSSIAN,
    GlmProblem,
    fit_glm,
    fit_glm_lasso,
    soft_threshold,
)


# ---------------------------------------------------------------- negloglik

def test_gaussian_perfect_fit():
    y = np.array([1.0, -2.0, 0.5])
    assert GAUSSIAN.negloglik(y, y) == 0.0


def test_gaussian_half_sum_of_squares():
    assert GAUSSIAN.negloglik(np.array([1.0, 0.0]), np.zeros(2)) == 0.5


def test_bernoulli_log_two():
    val = BERNOULLI.negloglik(np.array([1.0]), np.array([0.0]))
    assert abs(val - np.log(2.0)) < 1e-12


def test_bernoulli_overflow_safe():
    y = np.array([1.0, 0.0])
    val = BERNOULLI.negloglik(y, np.array([1000.0, -1000.0]))
    assert np.isfinite(val) and abs(val) < 1e-8


def test_negloglik_rejects_non_finite():
    with pytest.raises(ValueError):
        GAUSSIAN.negloglik(np.array([np.nan]), np.array([0.0]))
    with pytest.raises(ValueError):
        BERNOULLI.negloglik(np.array([1.0]), np.array([np.inf]))


@pytest.mark.parametrize("family", [GAUSSIAN, BERNOULLI])
def test_negloglik_gradient_finite_differences(family, rng):
    h = 1e-6
    for _ in range(10):
        n = rng.integers(3, 10)
        eta = rng.standard_normal(n)
        if family is BERNOULLI:
            y = (rng.random(n) < 0.5).astype(float)
        else:
            y = rng.standard_normal(n)
        g = family.dnll_deta(y, eta)
        fd = np.zeros(n)
        for i in range(n):
            ep, em = eta.copy(), eta.copy()
            ep[i] += h
            em[i] -= h
            fd[i] = (family.negloglik(y, ep) - family.negloglik(y, em)) / (2 * h)
        assert np.all(np.abs(g - fd) <= 1e-6 * np.maximum(np.abs(g), 1.0))


# ---------------------------------------------------------------- fit_glm

def test_fit_glm_exact_slope(rng):
    z = rng.standard_normal(30)
    coef = fit_glm(GlmProblem(2.0 * z, z))
    assert abs(coef[0] - 2.0) < 1e-12


def test_fit_glm_offset_absorbs_response(rng):
    Z = rng.standard_normal((25, 3))
    offset = rng.standard_normal(25)
    coef = fit_glm(GlmProblem(offset, Z, offset))
    assert np.max(np.abs(coef)) < 1e-10


def test_fit_glm_balanced_bernoulli_intercept():
    y = np.array([0.0, 1.0] * 10)
    coef = fit_glm(GlmProblem(y, np.ones((20, 1)), family=BERNOULLI))
    assert abs(coef[0]) < 1e-8


def test_fit_glm_residual_orthogonality(rng):
    Z = rng.standard_normal((40, 4))
    y = rng.standard_normal(40)
    offset = rng.standard_normal(40)
    coef = fit_glm(GlmProblem(y, Z, offset))
    resid = y - offset - Z @ coef
    assert np.max(np.abs(Z.T @ resid)) <= 1e-8 * np.max(np.abs(y))


def test_fit_glm_rank_deficiency_uses_ridge(rng):
    z = rng.standard_normal(20)
    Z = np.column_stack([z, np.zeros(20)])
    info = {}
    coef = fit_glm(GlmProblem(2.0 * z, Z), info=info)
    assert info.get("ridged") is True
    assert coef[1] == 0.0
    assert abs(coef[0] - 2.0) < 1e-6


def test_fit_glm_bernoulli_recovers_coefficients(rng):
    Z = rng.standard_normal((4000, 2))
    truth = np.array([1.0, -0.5])
    y = (rng.random(4000) < BERNOULLI.mean(Z @ truth)).astype(float)
    coef = fit_glm(GlmProblem(y, Z, family=BERNOULLI))
    assert np.all(np.abs(coef - truth) < 0.15)


# ---------------------------------------------------------------- soft_threshold

def test_soft_threshold_values():
    assert soft_threshold(np.array([3.0]), 1.0)[0] == 2.0
    assert soft_threshold(np.array([-0.5]), 1.0)[0] == 0.0
    x = np.array([0.3, -4.0, 0.0])
    assert np.array_equal(soft_threshold(x, 0.0), x)


def test_soft_threshold_rejects_negative_t():
    with pytest.raises(ValueError):
        soft_threshold(np.ones(2), -0.1)


@settings(max_examples=40)
@given(
    st.floats(-3, 3, allow_nan=False),
    st.floats(0, 2, allow_nan=False),
)
def test_soft_threshold_is_prox_of_l1(x, t):
    grid = np.arange(-5.0, 5.0, 1e-4)
    objective = 0.5 * (grid - x) ** 2 + t * np.abs(grid)
    brute = grid[np.argmin(objective)]
    assert abs(soft_threshold(np.array([x]), t)[0] - brute) <= 2e-4


# ---------------------------------------------------------------- fit_glm_lasso

def test_lasso_unpenalized_matches_glm(rng):
    Z = rng.standard_normal((60, 4)) @ np.diag([1.0, 2.0, 0.5, 1.0])
    y = rng.standard_normal(60)
    ls = fit_glm(GlmProblem(y, Z))
    l0 = fit_glm_lasso(GlmProblem(y, Z), 0.0)
    assert np.max(np.abs(ls - l0)) <= 1e-8


def test_lasso_null_threshold(rng):
    Z = rng.standard_normal((50, 3))
    y = rng.standard_normal(50)
    offset = rng.standard_normal(50)
    bound = np.max(np.abs(Z.T @ (y - offset)))
    coef = fit_glm_lasso(GlmProblem(y, Z, offset), bound * 1.0001)
    assert np.array_equal(coef, np.zeros(3))


def test_lasso_orthonormal_closed_form(rng):
    Z, _ = np.linalg.qr(rng.standard_normal((40, 5)))
    y = rng.standard_normal(40)
    for rho in (0.05, 0.3, 1.0):
        coef = fit_glm_lasso(GlmProblem(y, Z), rho)
        closed = soft_threshold(Z.T @ y, rho)
        assert np.max(np.abs(coef - closed)) <= 1e-8


def test_lasso_orthonormal_brute_force_q2(rng):
    # independent oracle at q=2: grid minimization of the lasso objective
    Z, _ = np.linalg.qr(rng.standard_normal((25, 2)))
    y = rng.standard_normal(25)
    rho = 0.4
    grid = np.arange(-3.0, 3.0, 5e-3)
    z1_sq = float(Z[:, 1] @ Z[:, 1])
    best, best_val = None, np.inf
    for c0 in grid:
        r0 = y - Z[:, 0] * c0
        # quadratic in the second coordinate, expanded over the whole grid
        vals = (
            0.5 * float(r0 @ r0)
            - grid * float(Z[:, 1] @ r0)
            + 0.5 * grid**2 * z1_sq
            + rho * (abs(c0) + np.abs(grid))
        )
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best, best_val = (c0, grid[j]), vals[j]
    coef = fit_glm_lasso(GlmProblem(y, Z), rho)
    assert np.max(np.abs(coef - np.asarray(best))) <= 1e-2


def test_lasso_objective_monotone(rng):
    Z = rng.standard_normal((50, 6))
    y = rng.standard_normal(50)
    info = {}
    fit_glm_lasso(GlmProblem(y, Z), 0.5, info=info)
    trace = info["objective_trace"]
    assert np.all(np.diff(trace) <= 1e-10 * np.maximum(np.abs(trace[:-1]), 1.0))


def test_lasso_kkt_conditions(rng):
    for family in (GAUSSIAN, BERNOULLI):
        Z = rng.standard_normal((80, 5))
        if family is BERNOULLI:
            y = (rng.random(80) < 0.4).astype(float)
        else:
            y = rng.standard_normal(80)
        rho = 2.0
        problem = GlmProblem(y, Z, family=family)
        coef = fit_glm_lasso(problem, rho)
        grad = Z.T @ family.dnll_deta(y, Z @ coef)
        for j in range(5):
            if coef[j] != 0.0:
                assert abs(grad[j] + rho * np.sign(coef[j])) <= 1e-6 * max(1.0, rho)
            else:
                assert abs(grad[j]) <= rho + 1e-6
