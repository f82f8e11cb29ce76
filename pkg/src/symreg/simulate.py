# Seeded synthetic-data generators: 0/1 signal matrices (circle, cross,
# butterfly, two_box, three_box), random correlation-matrix covariates, and
# full datasets y_i = gamma0'z_i + <B0, X_i> + sigma*eps_i. Everything is a
# pure function of (spec, seed); the RNG is numpy's PCG64 so identical seeds
# give bit-identical datasets.

from dataclasses import dataclass

import numpy as np

from .glm import BERNOULLI, GAUSSIAN
from .solvers import Dataset

SHAPE_NAMES = ("circle", "cross", "butterfly", "two_box", "three_box")
RNG_ALGORITHM = "numpy-pcg64"


@dataclass(frozen=True)
class SignalShape:
    name: str
    p: int

    def __post_init__(self):
        if self.name not in SHAPE_NAMES:
            raise ValueError(f"unknown shape {self.name!r}; choose from {SHAPE_NAMES}")
        if self.p < 16 or self.p % 8 != 0:
            raise ValueError(f"p must be >= 16 and divisible by 8, got {self.p}")


def shape_signal(shape):
    """Deterministic 0/1 symmetric signal matrix for one named shape."""
    if not isinstance(shape, SignalShape):
        raise TypeError("shape_signal expects a SignalShape")
    p = shape.p
    idx = np.arange(1, p + 1, dtype=float)
    I, J = np.meshgrid(idx, idx, indexing="ij")
    c = (p + 1) / 2.0

    if shape.name == "circle":
        # squared radii keep the mask exactly symmetric
        r2 = (I - c) ** 2 + (J - c) ** 2
        mask = (r2 >= (p / 4 - p / 16) ** 2) & (r2 <= (p / 4 + p / 16) ** 2)
    elif shape.name == "cross":
        mask = (np.abs(I - c) <= p / 16) | (np.abs(J - c) <= p / 16)
    elif shape.name == "butterfly":
        mask = (np.abs(I - J) <= np.abs(I + J - (p + 1)) / 2) & (
            np.maximum(np.abs(I - c), np.abs(J - c)) <= 3 * p / 8
        )
    elif shape.name == "two_box":
        mask = np.zeros((p, p), dtype=bool)
        mask[p // 8 : 3 * p // 8, p // 8 : 3 * p // 8] = True
        mask[5 * p // 8 : 7 * p // 8, 5 * p // 8 : 7 * p // 8] = True
    else:  # three_box
        side = p // 6
        mask = np.zeros((p, p), dtype=bool)
        for start in (p // 12, 5 * p // 12, 9 * p // 12):
            mask[start : start + side, start : start + side] = True
    return mask.astype(float)


def random_correlation(p, rng):
    """Random correlation matrix D^{-1/2} (A A') D^{-1/2}, A iid standard normal.

    Exactly symmetric, unit diagonal, positive semidefinite, off-diagonals
    in [-1, 1]. A zero Gram diagonal (probability-zero) triggers a redraw.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    while True:
        a = rng.standard_normal((p, p))
        s = a @ a.T
        s = (s + s.T) / 2.0
        d = np.diag(s)
        if np.all(d > 0):
            break
    x = s / np.sqrt(np.outer(d, d))
    np.fill_diagonal(x, 1.0)
    return x


@dataclass(frozen=True)
class SimSpec:
    shape: SignalShape
    n: int
    p0: int = 5
    gamma0: tuple = None  # defaults to all ones, length p0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.p0 < 0:
            raise ValueError("p0 must be nonnegative")
        g = np.ones(self.p0) if self.gamma0 is None else np.asarray(self.gamma0, float)
        if g.size != self.p0:
            raise ValueError("gamma0 length must equal p0")
        object.__setattr__(self, "gamma0", tuple(float(v) for v in g))


def synth_dataset(b0, n, p0=5, gamma0=None, sigma=1.0, seed=0, family=GAUSSIAN):
    """Dataset with true coefficient matrix b0 and correlation-matrix covariates.

    Draw order (fixed for reproducibility): z (n x p0), then the n covariate
    matrices, then the noise vector. For the bernoulli family, y is drawn as
    Bernoulli(sigmoid(eta)) and sigma is ignored.
    """
    b0 = np.asarray(b0, dtype=float)
    p = b0.shape[0]
    if b0.shape != (p, p):
        raise ValueError("b0 must be square")
    gamma0 = np.ones(p0) if gamma0 is None else np.asarray(gamma0, dtype=float).ravel()
    if gamma0.size != p0:
        raise ValueError("gamma0 length must equal p0")

    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p0)) if p0 > 0 else np.zeros((n, 0))
    X = np.stack([random_correlation(p, rng) for _ in range(n)])
    signal = Z @ gamma0 + X.reshape(n, -1) @ b0.ravel()
    if family == BERNOULLI:
        y = (rng.random(n) < BERNOULLI.mean(signal)).astype(float)
    else:
        y = signal + sigma * rng.standard_normal(n)
    meta = {
        "rng": RNG_ALGORITHM,
        "seed": int(seed),
        "sigma": float(sigma),
        "signal_var": float(np.var(signal)),
        "b0": b0,
        "gamma0": gamma0,
    }
    return Dataset(y, Z, X, family, meta)


def gen_dataset(spec):
    """Generate the full synthetic dataset for one SimSpec."""
    b0 = shape_signal(spec.shape)
    return synth_dataset(
        b0,
        spec.n,
        p0=spec.p0,
        gamma0=np.asarray(spec.gamma0),
        sigma=spec.sigma,
        seed=spec.seed,
    )
