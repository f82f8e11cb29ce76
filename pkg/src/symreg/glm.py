# Exponential-family plumbing: losses, (weighted) GLM fits with offsets via
# least squares / IRLS, the soft-threshold operator, and an l1-penalized GLM
# solved by proximal gradient with backtracking. The matrix solvers build all
# of their block updates out of these pieces.

import numpy as np

RIDGE = 1e-8  # fallback perturbation for rank-deficient designs
IRLS_GRAD_TOL = 1e-8
IRLS_MAX_ITER = 100


class GlmConvergenceError(RuntimeError):
    pass


def _sigmoid(eta):
    out = np.empty_like(eta, dtype=float)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    z = np.exp(eta[~pos])
    out[~pos] = z / (1.0 + z)
    return out


class Family:
    """Closed forms for one exponential family under its canonical link.

    gaussian: identity link, mu = eta, variance fixed at 1 during optimization
    (sigma^2 only rescales the loss, so the penalty grid absorbs it).
    bernoulli: logit link, mu = 1/(1+exp(-eta)).
    """

    def __init__(self, name):
        if name not in ("gaussian", "bernoulli"):
            raise ValueError(f"unknown family {name!r}")
        self.name = name

    def __repr__(self):
        return f"Family({self.name!r})"

    def __eq__(self, other):
        return isinstance(other, Family) and other.name == self.name

    def __hash__(self):
        return hash(("Family", self.name))

    def mean(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.name == "gaussian":
            return eta
        return _sigmoid(eta)

    def mean_deriv(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.name == "gaussian":
            return np.ones_like(eta)
        mu = _sigmoid(eta)
        return mu * (1.0 - mu)

    def negloglik(self, y, eta):
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if y.shape != eta.shape:
            raise ValueError(f"length mismatch: y {y.shape}, eta {eta.shape}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(eta))):
            raise ValueError("negloglik requires finite y and eta")
        if self.name == "gaussian":
            return 0.5 * float(np.sum((y - eta) ** 2))
        # log(1 + e^eta) - y*eta, overflow-safe for large |eta|
        return float(np.sum(np.logaddexp(0.0, eta) - y * eta))

    def dnll_deta(self, y, eta):
        """Gradient of negloglik in eta; mu - y for both canonical links."""
        return self.mean(eta) - np.asarray(y, dtype=float)

    def lipschitz_factor(self):
        """Upper bound on mu'(eta), used to size proximal steps."""
        return 1.0 if self.name == "gaussian" else 0.25


GAUSSIAN = Family("gaussian")
BERNOULLI = Family("bernoulli")


class GlmProblem:
    """Immutable bundle (y, Z, offset, family) for one GLM solve."""

    def __init__(self, y, Z, offset=None, family=GAUSSIAN):
        self.y = np.asarray(y, dtype=float).ravel()
        self.Z = np.asarray(Z, dtype=float)
        if self.Z.ndim == 1:
            self.Z = self.Z[:, None]
        n = self.y.size
        if self.Z.shape[0] != n:
            raise ValueError(f"Z has {self.Z.shape[0]} rows for {n} responses")
        self.offset = (
            np.zeros(n) if offset is None else np.asarray(offset, dtype=float).ravel()
        )
        if self.offset.size != n:
            raise ValueError("offset length mismatch")
        self.family = family
        if family.name == "bernoulli" and not np.all(np.isin(self.y, (0.0, 1.0))):
            raise ValueError("bernoulli responses must be 0/1")

    @property
    def n(self):
        return self.y.size

    @property
    def q(self):
        return self.Z.shape[1]


def _solve_ls(Z, r, info):
    coef, _, rank, _ = np.linalg.lstsq(Z, r, rcond=None)
    if rank < Z.shape[1]:
        # collinear columns appear routinely when ranks void; perturb instead of failing
        G = Z.T @ Z + RIDGE * np.eye(Z.shape[1])
        coef = np.linalg.solve(G, Z.T @ r)
        if info is not None:
            info["ridged"] = True
    return coef


def fit_glm(problem, coef0=None, info=None):
    """Minimize problem.family negloglik of y given Z @ coef + offset.

    gaussian reduces to least squares of (y - offset) on Z; bernoulli runs
    IRLS with step halving until the gradient inf-norm is <= 1e-8 or 100
    iterations. Rank-deficient designs are solved with a 1e-8 ridge and
    flagged in `info` (a caller-supplied dict).
    """
    q = problem.q
    if q == 0:
        return np.zeros(0)
    if problem.family.name == "gaussian":
        return _solve_ls(problem.Z, problem.y - problem.offset, info)

    Z, y, offset = problem.Z, problem.y, problem.offset
    coef = np.zeros(q) if coef0 is None else np.asarray(coef0, dtype=float).copy()
    nll = problem.family.negloglik(y, Z @ coef + offset)
    fails = 0
    for it in range(IRLS_MAX_ITER):
        eta = Z @ coef + offset
        mu = _sigmoid(eta)
        grad = Z.T @ (mu - y)
        if np.max(np.abs(grad), initial=0.0) <= IRLS_GRAD_TOL:
            break
        w = np.maximum(mu * (1.0 - mu), 1e-10)
        H = Z.T @ (w[:, None] * Z)
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(H + RIDGE * np.eye(q), -grad)
            if info is not None:
                info["ridged"] = True
        t, accepted = 1.0, False
        for _ in range(30):
            cand = coef + t * step
            cand_nll = problem.family.negloglik(y, Z @ cand + offset)
            if cand_nll <= nll:
                coef, nll, accepted = cand, cand_nll, True
                break
            t /= 2.0
        if not accepted:
            fails += 1
            if fails >= 2:
                raise GlmConvergenceError(
                    "IRLS objective increases with step halving exhausted"
                )
        else:
            fails = 0
    if info is not None:
        info["iterations"] = it + 1
    return coef


def soft_threshold(v, t):
    """Elementwise sign(x) * max(|x| - t, 0); the prox operator of t*||.||_1."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def fit_glm_lasso(problem, rho, coef0=None, max_iter=2000, kkt_tol=None, info=None):
    """Minimize negloglik + rho*||coef||_1 by proximal gradient with backtracking.

    The step starts at 1/L (L a spectral-norm Lipschitz bound) and halves
    until the quadratic majorization holds, so the penalized objective is
    non-increasing across iterations. Convergence is declared on the KKT
    residual: |grad_j + rho*sign(coef_j)| for active j, max(|grad_j|-rho, 0)
    for zero j.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    Z, y, offset, fam = problem.Z, problem.y, problem.offset, problem.family
    q = problem.q
    if q == 0:
        return np.zeros(0)
    if kkt_tol is None:
        kkt_tol = 1e-9 * max(1.0, rho)
    coef = np.zeros(q) if coef0 is None else np.asarray(coef0, dtype=float).copy()

    sigma_max = np.linalg.norm(Z, 2) if Z.size else 0.0
    lip = fam.lipschitz_factor() * sigma_max**2
    delta0 = 1.0 / lip if lip > 0 else 1.0

    nll = fam.negloglik(y, Z @ coef + offset)
    trace = [nll + rho * np.abs(coef).sum()]
    for it in range(max_iter):
        eta = Z @ coef + offset
        grad = Z.T @ fam.dnll_deta(y, eta)

        active = coef != 0.0
        kkt = np.where(
            active,
            np.abs(grad + rho * np.sign(coef)),
            np.maximum(np.abs(grad) - rho, 0.0),
        )
        if np.max(kkt, initial=0.0) <= kkt_tol:
            break

        delta, accepted = delta0, False
        for _ in range(60):
            cand = soft_threshold(coef - delta * grad, rho * delta)
            diff = cand - coef
            cand_nll = fam.negloglik(y, Z @ cand + offset)
            # slack covers float cancellation once the true decrease is ~eps*|nll|
            slack = 1e-14 * (1.0 + abs(nll) + abs(cand_nll))
            if cand_nll <= nll + grad @ diff + (diff @ diff) / (2.0 * delta) + slack:
                accepted = True
                break
            delta /= 2.0
        if not accepted or not np.any(diff):
            break
        coef, nll = cand, cand_nll
        trace.append(nll + rho * np.abs(coef).sum())
    if info is not None:
        info["iterations"] = it + 1
        info["objective_trace"] = np.asarray(trace)
    return coef
