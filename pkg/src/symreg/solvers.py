# The three estimators for scalar-on-symmetric-matrix regression:
#   * fit_cp        - standard rank-R CP regression, block lasso-GLM updates
#   * fit_sym_cp    - the CP fit with its coefficient matrix symmetrized
#   * fit_sym_tensor- the symmetric rank-R model B diag(lam) B^T estimated by
#                     block updates (gamma, lam via GLM) plus proximal
#                     gradient with soft-thresholding on B
# plus the eigen-decomposition initializer and the full pipeline
# (sym-CP fit -> eigen init -> symmetric fit).

from dataclasses import dataclass, field

import numpy as np

from .glm import GAUSSIAN, Family, GlmProblem, fit_glm, fit_glm_lasso, soft_threshold
from .tensor_ops import check_symmetric, cp_to_full, khatri_rao, symcp_to_full, symmetrize


class NumericalError(RuntimeError):
    pass


@dataclass
class Dataset:
    """n records of (y, z, X) with every X an exactly symmetric p x p matrix."""

    y: np.ndarray          # (n,)
    Z: np.ndarray          # (n, p0); p0 may be 0
    X: np.ndarray          # (n, p, p)
    family: Family = GAUSSIAN
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.Z = np.asarray(self.Z, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.Z.ndim == 1:
            self.Z = self.Z[:, None]
        n = self.y.size
        if n < 1:
            raise ValueError("dataset needs at least one record")
        if self.Z.shape[0] != n or self.X.shape[0] != n:
            raise ValueError("y, Z, X record counts disagree")
        if self.X.ndim != 3 or self.X.shape[1] != self.X.shape[2]:
            raise ValueError(f"X must be (n, p, p), got {self.X.shape}")
        if not np.array_equal(self.X, self.X.transpose(0, 2, 1)):
            raise ValueError("covariate matrices must be exactly symmetric")
        self._x_rows = None

    @property
    def n(self):
        return self.y.size

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def p0(self):
        return self.Z.shape[1]

    @property
    def x_rows(self):
        """(n, p*p) flattened covariates; cached for inner-product batches."""
        if self._x_rows is None:
            self._x_rows = np.ascontiguousarray(self.X.reshape(self.n, -1))
        return self._x_rows

    def take(self, idx):
        """Row-subset view used by CV folds; meta is shared."""
        idx = np.asarray(idx)
        return Dataset(self.y[idx], self.Z[idx], self.X[idx], self.family, self.meta)


@dataclass(frozen=True)
class FitConfig:
    rank: int = 3
    rho: float = 0.0
    max_outer_iters: int = 200
    tol: float = 1e-4
    prox_steps: int = 5
    delta0: float = 1.0
    line_search_max_halvings: int = 50
    seed: int = 0
    renormalize_columns: bool = False
    # inner l1-GLM controls for the CP block updates
    lasso_max_iter: int = 500
    lasso_kkt_tol: float = 1e-8

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if not (0.0 < self.tol < 1.0):
            raise ValueError("tol must lie in (0, 1)")
        for name in ("max_outer_iters", "prox_steps", "line_search_max_halvings"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")


@dataclass
class SymCPFactors:
    """Weights lam (length R) and shared factor matrix B (p x R).

    lam may be None to request the default initialization: one unpenalized
    lam-GLM update before the first outer iteration. Individual lam_r may be
    exactly 0 (a voided rank); voided ranks are kept in place, never pruned.
    """

    lam: np.ndarray | None
    B: np.ndarray

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float)
        if self.B.ndim != 2:
            raise ValueError("B must be p x R")
        if not np.all(np.isfinite(self.B)):
            raise ValueError("B must be finite")
        if self.lam is not None:
            self.lam = np.asarray(self.lam, dtype=float).ravel()
            if self.lam.size != self.B.shape[1]:
                raise ValueError("lam length must match B columns")
            if not np.all(np.isfinite(self.lam)):
                raise ValueError("lam must be finite")

    @property
    def rank(self):
        return self.B.shape[1]

    def to_full(self):
        return symcp_to_full(self.lam, self.B)


@dataclass
class CPFactors:
    B1: np.ndarray
    B2: np.ndarray

    def __post_init__(self):
        self.B1 = np.asarray(self.B1, dtype=float)
        self.B2 = np.asarray(self.B2, dtype=float)
        if self.B1.shape != self.B2.shape:
            raise ValueError("B1, B2 must have equal shapes")
        if not (np.all(np.isfinite(self.B1)) and np.all(np.isfinite(self.B2))):
            raise ValueError("factors must be finite")

    @property
    def rank(self):
        return self.B1.shape[1]

    def to_full(self):
        return cp_to_full(self.B1, self.B2)


@dataclass
class FitResult:
    gamma: np.ndarray
    factors: object                 # SymCPFactors or CPFactors
    coef_full: np.ndarray
    objective_trace: np.ndarray
    converged: bool
    iterations: int
    config: FitConfig
    meta: dict = field(default_factory=dict)

    def predict_eta(self, Z, X):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        X = np.asarray(X, dtype=float)
        return Z @ self.gamma + X.reshape(X.shape[0], -1) @ self.coef_full.ravel()


def _eta(data, gamma, coef_full):
    return data.Z @ gamma + data.x_rows @ coef_full.ravel()


def objective(data, gamma, factors, rho):
    """Penalized loss: negloglik at eta_i = gamma'z_i + <B_full, X_i>, plus rho*||vec B||_1.

    The l1 penalty applies to the factor matrix B only, never to lam or gamma.
    """
    eta = _eta(data, gamma, factors.to_full())
    return data.family.negloglik(data.y, eta) + rho * float(np.abs(factors.B).sum())


def grad_loss_B(data, gamma, factors):
    """Gradient of the unpenalized negloglik in B: sum_i w_i * 2 X_i B diag(lam).

    w_i is the derivative of the negloglik in eta_i (mu_i - y_i under the
    canonical links used here); descent steps subtract this gradient.
    """
    eta = _eta(data, gamma, factors.to_full())
    w = data.family.dnll_deta(data.y, eta)
    xw = np.tensordot(w, data.X, axes=1)
    return 2.0 * (xw @ factors.B) * factors.lam


def prox_update_B(data, gamma, factors, rho, config, trace=None):
    """config.prox_steps proximal-gradient steps on B with backtracking.

    Each step soft-thresholds S - delta*grad at rho*delta, halving delta
    (recomputing the candidate from the same S) until the quadratic
    majorization  nll(S+) <= nll(S) + <grad, S+ - S> + ||S+ - S||_F^2/(2 delta)
    holds. Exhausting the halving budget keeps S; non-progress is legal.
    """
    lam = factors.lam
    B = factors.B.copy()
    zoff = data.Z @ gamma
    y, fam = data.y, data.family

    def nll_of(Bmat):
        eta = zoff + data.x_rows @ symcp_to_full(lam, Bmat).ravel()
        return fam.negloglik(y, eta), eta

    nll, eta = nll_of(B)
    for _ in range(config.prox_steps):
        w = fam.dnll_deta(y, eta)
        grad = 2.0 * (np.tensordot(w, data.X, axes=1) @ B) * lam
        delta, accepted = config.delta0, False
        for _ in range(config.line_search_max_halvings + 1):
            cand = soft_threshold(B - delta * grad, rho * delta)
            diff = cand - B
            cand_nll, cand_eta = nll_of(cand)
            # slack covers float cancellation once the true decrease is ~eps*|nll|
            slack = 1e-14 * (1.0 + abs(nll) + abs(cand_nll))
            if cand_nll <= nll + float(np.sum(grad * diff)) + float(
                np.sum(diff * diff)
            ) / (2.0 * delta) + slack:
                accepted = True
                break
            delta /= 2.0
        if trace is not None:
            trace.append({"delta": delta if accepted else None, "accepted": accepted})
        if not accepted:
            break
        B, nll, eta = cand, cand_nll, cand_eta
        if not np.any(diff):
            break
    return B


def _init_lambda(data, gamma, B, info=None):
    """One unpenalized lam-GLM update, used when an init supplies only B."""
    design = data.x_rows @ khatri_rao(B, B)
    problem = GlmProblem(data.y, design, data.Z @ gamma, data.family)
    return fit_glm(problem, info=info)


def _relative_change(prev, cur):
    return abs(prev - cur) / max(abs(prev), 1e-10)


def fit_sym_tensor(data, config, init):
    """Block-update estimation of the sparse symmetric rank-R model.

    Repeats {gamma-GLM with offset <B_full, X_i>; lam-GLM on the per-rank
    quadratic forms with offset gamma'z_i; prox_steps proximal-gradient
    updates of B} until the relative change of the penalized objective drops
    below config.tol or max_outer_iters is hit. The recorded trace is
    non-increasing because every block update can only lower the objective.
    """
    p, R = data.p, config.rank
    if init.B.shape != (p, R):
        raise ValueError(f"init B must be {(p, R)}, got {init.B.shape}")
    B = init.B.copy()
    gamma = np.zeros(data.p0)
    glm_info = {}
    lam = (
        init.lam.copy()
        if init.lam is not None
        else _init_lambda(data, gamma, B, glm_info)
    )

    factors = SymCPFactors(lam, B)
    obj = objective(data, gamma, factors, config.rho)
    trace = [obj]
    converged = False
    iterations = 0
    for t in range(config.max_outer_iters):
        iterations = t + 1
        offset = data.x_rows @ symcp_to_full(lam, B).ravel()
        gamma = fit_glm(
            GlmProblem(data.y, data.Z, offset, data.family), coef0=gamma, info=glm_info
        )
        zoff = data.Z @ gamma
        design = data.x_rows @ khatri_rao(B, B)
        lam = fit_glm(
            GlmProblem(data.y, design, zoff, data.family), coef0=lam, info=glm_info
        )
        B = prox_update_B(data, gamma, SymCPFactors(lam, B), config.rho, config)
        if config.renormalize_columns:
            norms = np.linalg.norm(B, axis=0)
            pos = norms > 0
            lam = np.where(pos, lam * norms**2, lam)
            B = np.where(pos, B / np.where(pos, norms, 1.0), B)

        factors = SymCPFactors(lam, B)
        new_obj = objective(data, gamma, factors, config.rho)
        if not np.isfinite(new_obj):
            raise NumericalError(f"non-finite objective at outer iteration {t + 1}")
        trace.append(new_obj)
        if _relative_change(obj, new_obj) < config.tol:
            obj = new_obj
            converged = True
            break
        obj = new_obj

    meta = {
        "family": data.family.name,
        "factor_column_norms": np.linalg.norm(B, axis=0),
        "ridged": bool(glm_info.get("ridged", False)),
        "lam_init": "glm" if init.lam is None else "given",
    }
    return FitResult(
        gamma=gamma,
        factors=factors,
        coef_full=factors.to_full(),
        objective_trace=np.asarray(trace),
        converged=converged,
        iterations=iterations,
        config=config,
        meta=meta,
    )


def _cp_objective(data, gamma, b1, b2, rho):
    eta = _eta(data, gamma, b1 @ b2.T)
    pen = rho * (float(np.abs(b1).sum()) + float(np.abs(b2).sum()))
    return data.family.negloglik(data.y, eta) + pen


def fit_cp(data, config):
    """Standard rank-R CP regression by block ascent (D = 2).

    gamma is refit by GLM with offset <B1 B2', X_i>; B1 is refit by an
    l1-penalized GLM on covariates vec(X_i B2) with offset gamma'z_i, and B2
    symmetrically on vec(X_i' B1). Factors start as seeded standard normals.
    """
    p, R = data.p, config.rank
    rng = np.random.default_rng(config.seed)
    b1 = rng.standard_normal((p, R))
    b2 = rng.standard_normal((p, R))
    gamma = np.zeros(data.p0)

    obj = _cp_objective(data, gamma, b1, b2, config.rho)
    trace = [obj]
    converged = False
    iterations = 0
    for t in range(config.max_outer_iters):
        iterations = t + 1
        offset = data.x_rows @ (b1 @ b2.T).ravel()
        gamma = fit_glm(GlmProblem(data.y, data.Z, offset, data.family), coef0=gamma)
        zoff = data.Z @ gamma

        design1 = np.einsum("ipq,qr->ipr", data.X, b2).reshape(data.n, p * R)
        b1 = fit_glm_lasso(
            GlmProblem(data.y, design1, zoff, data.family),
            config.rho,
            coef0=b1.ravel(),
            max_iter=config.lasso_max_iter,
            kkt_tol=config.lasso_kkt_tol,
        ).reshape(p, R)

        design2 = np.einsum("ipq,pr->iqr", data.X, b1).reshape(data.n, p * R)
        b2 = fit_glm_lasso(
            GlmProblem(data.y, design2, zoff, data.family),
            config.rho,
            coef0=b2.ravel(),
            max_iter=config.lasso_max_iter,
            kkt_tol=config.lasso_kkt_tol,
        ).reshape(p, R)

        new_obj = _cp_objective(data, gamma, b1, b2, config.rho)
        if not np.isfinite(new_obj):
            raise NumericalError(f"non-finite objective at outer iteration {t + 1}")
        trace.append(new_obj)
        if _relative_change(obj, new_obj) < config.tol:
            obj = new_obj
            converged = True
            break
        obj = new_obj

    factors = CPFactors(b1, b2)
    return FitResult(
        gamma=gamma,
        factors=factors,
        coef_full=factors.to_full(),
        objective_trace=np.asarray(trace),
        converged=converged,
        iterations=iterations,
        config=config,
        meta={"family": data.family.name},
    )


def fit_sym_cp(data, config, cp_result=None):
    """CP regression followed by symmetrization of the coefficient matrix.

    On symmetric covariates the symmetrized matrix produces the same linear
    predictor as the raw CP reconstruction, so predictions are unchanged;
    only the reported coefficient matrix differs.
    """
    base = cp_result if cp_result is not None else fit_cp(data, config)
    coef_sym = symmetrize(base.coef_full)
    return FitResult(
        gamma=base.gamma,
        factors=base.factors,
        coef_full=coef_sym,
        objective_trace=base.objective_trace,
        converged=base.converged,
        iterations=base.iterations,
        config=config,
        meta=dict(base.meta, cp_coef_full=base.coef_full),
    )


def construct_init(b_sym, rank):
    """Eigen-decomposition initializer: best rank-R symmetric approximation.

    Keeps the R eigenpairs of largest |eigenvalue| (ties: larger signed
    eigenvalue, then lower index); returns the signed eigenvalues as lam and
    the unit-norm eigenvectors as B.
    """
    b_sym = check_symmetric(b_sym, "b_sym")
    p = b_sym.shape[0]
    if not 1 <= rank <= p:
        raise ValueError(f"rank must lie in [1, {p}], got {rank}")
    vals, vecs = np.linalg.eigh(b_sym)
    order = sorted(range(p), key=lambda i: (-abs(vals[i]), -vals[i], i))
    keep = order[:rank]
    return SymCPFactors(vals[keep], vecs[:, keep])


def default_pipeline(data, config):
    """Symmetrized-CP fit -> eigen init -> symmetric tensor fit.

    Returns the symmetric-tensor FitResult with both baselines attached in
    meta ("baseline_cp", "baseline_sym_cp").
    """
    cp_res = fit_cp(data, config)
    sym_cp_res = fit_sym_cp(data, config, cp_result=cp_res)
    init = construct_init(sym_cp_res.coef_full, config.rank)
    result = fit_sym_tensor(data, config, init)
    result.meta["baseline_cp"] = cp_res
    result.meta["baseline_sym_cp"] = sym_cp_res
    return result
