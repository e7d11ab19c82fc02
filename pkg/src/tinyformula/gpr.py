"""Exact Gaussian-process regression of a scaling coefficient on the FLOPs ratio.

The prior is zero-mean with an RBF covariance,

    k(x, x') = signal_variance * exp(-(x - x')**2 / (2 * lengthscale**2)),

and observations carry i.i.d. Gaussian noise. Far from the training inputs
the posterior mean therefore falls back to 0; callers that need a value in a
sensible range must clamp (see ``tinyformula.formula``). A constant-mean
variant, which centers targets on their average, is available through
``mean="constant"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConditioningError

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)
RECONSTRUCTION_TOL = 1e-8
NEGATIVE_VARIANCE_TOL = 1e-10

LENGTHSCALE_GRID = np.geomspace(0.05, 2.0, 17)
SIGNAL_GRID = np.geomspace(0.01, 4.0, 9)
NOISE_GRID = np.geomspace(1e-4, 0.25, 9)


@dataclass(frozen=True)
class Kernel:
    lengthscale: float
    signal_variance: float

    def __post_init__(self):
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ValueError(f"lengthscale must be positive, got {self.lengthscale}")
        if not (self.signal_variance > 0 and math.isfinite(self.signal_variance)):
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")

    def __call__(self, a, b) -> np.ndarray:
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        sq = (a[:, None] - b[None, :]) ** 2
        return self.signal_variance * np.exp(-0.5 * sq / self.lengthscale**2)


@dataclass(frozen=True)
class Posterior:
    mean: float | np.ndarray
    variance: float | np.ndarray


def _factorize(gram: np.ndarray, noise: float, inputs: np.ndarray) -> tuple[np.ndarray, float]:
    if noise == 0 and np.unique(inputs).size < inputs.size:
        raise ConditioningError(
            "Gram matrix is singular: duplicate inputs with zero noise variance"
        )
    m = gram.shape[0]
    base = gram + noise * np.eye(m)
    for jitter in JITTER_LADDER:
        try:
            L = np.linalg.cholesky(base + jitter * np.eye(m))
        except np.linalg.LinAlgError:
            continue
        diag = np.diag(L)
        # numerically singular even though the factorization went through
        if diag.min() ** 2 <= np.finfo(float).eps * diag.max() ** 2:
            continue
        return L, jitter
    raise ConditioningError(
        f"Gram matrix not positive definite even with jitter {JITTER_LADDER[-1]:g}; "
        "inputs are too close for this lengthscale and noise level"
    )


@dataclass(frozen=True, eq=False)
class GprModel:
    """A fitted regressor. Build it with :func:`fit`."""

    inputs: np.ndarray
    targets: np.ndarray
    kernel: Kernel
    noise_variance: float
    target: str = "r"
    mean: str = "zero"
    jitter: float = 0.0
    factor: np.ndarray = field(default=None, repr=False)
    alpha: np.ndarray = field(default=None, repr=False)
    offset: float = 0.0

    @property
    def m(self) -> int:
        return self.inputs.size

    def gram(self) -> np.ndarray:
        """K(c, c) + (noise + jitter) I, the matrix that ``factor`` decomposes."""
        m = self.m
        return self.kernel(self.inputs, self.inputs) + (self.noise_variance + self.jitter) * np.eye(m)

    def predict(self, c) -> Posterior:
        return predict(self, c)

    def log_marginal_likelihood(self) -> float:
        y = self.targets - self.offset
        return float(
            -0.5 * y @ self.alpha
            - np.log(np.diag(self.factor)).sum()
            - 0.5 * self.m * math.log(2 * math.pi)
        )

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "lengthscale": self.kernel.lengthscale,
            "signal_variance": self.kernel.signal_variance,
            "noise_variance": self.noise_variance,
            "mean": self.mean,
            "inputs": self.inputs.tolist(),
            "targets": self.targets.tolist(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "GprModel":
        model = fit(
            list(zip(doc["inputs"], doc["targets"])),
            Kernel(float(doc["lengthscale"]), float(doc["signal_variance"])),
            float(doc["noise_variance"]),
            target=doc.get("target", "r"),
            mean=doc.get("mean", "zero"),
        )
        err = np.abs(model.factor @ model.factor.T - model.gram()).max()
        if err > RECONSTRUCTION_TOL:
            raise ConditioningError(f"reloaded factorization off by {err:g}")
        return model

    @classmethod
    def load(cls, path) -> "GprModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit(pairs: Sequence[tuple[float, float]], kernel: Kernel, noise: float,
        target: str = "r", mean: str = "zero") -> GprModel:
    """Condition a GP on ``(c, y)`` pairs."""
    data = np.asarray(pairs, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("pairs must be a sequence of (c, y) tuples")
    if data.shape[0] < 2:
        raise ValueError(f"need at least 2 training pairs, got {data.shape[0]}")
    if not np.isfinite(data).all():
        raise ValueError("training pairs must be finite")
    if not (noise >= 0 and math.isfinite(noise)):
        raise ValueError(f"noise variance must be >= 0, got {noise}")
    if mean not in ("zero", "constant"):
        raise ValueError(f"unknown mean function {mean!r}")
    c, y = data[:, 0].copy(), data[:, 1].copy()
    offset = float(y.mean()) if mean == "constant" else 0.0
    L, jitter = _factorize(kernel(c, c), noise, c)
    alpha = solve_triangular(L.T, solve_triangular(L, y - offset, lower=True), lower=False)
    return GprModel(c, y, kernel, float(noise), target, mean, jitter, L, alpha, offset)


def predict(model: GprModel, c) -> Posterior:
    """Posterior mean and variance of a noisy observation at ``c``.

    The variance includes the observation noise, matching the predictive
    distribution of a new target rather than of the latent function.
    """
    scalar = np.ndim(c) == 0
    cs = np.atleast_1d(np.asarray(c, dtype=float))
    if not np.isfinite(cs).all():
        raise ValueError(f"test input must be finite, got {c!r}")
    k_star = model.kernel(cs, model.inputs)  # (t, m)
    mu = model.offset + k_star @ model.alpha
    v = solve_triangular(model.factor, k_star.T, lower=True)  # (m, t)
    var = model.kernel.signal_variance + model.noise_variance - np.sum(v * v, axis=0)
    if (var < -NEGATIVE_VARIANCE_TOL).any():
        raise ConditioningError(f"posterior variance {var.min():g} is materially negative")
    var = np.maximum(var, 0.0)
    if scalar:
        return Posterior(float(mu[0]), float(var[0]))
    return Posterior(mu, var)


@dataclass(frozen=True)
class Hyperparameters:
    kernel: Kernel
    noise_variance: float
    log_likelihood: float


def grid_log_likelihoods(pairs, mean: str = "zero") -> list[tuple[float, float, float, float]]:
    """Log marginal likelihood over the fixed search grid.

    Returns ``(lengthscale, signal_variance, noise_variance, loglik)`` for
    every grid point whose Gram matrix factorizes.
    """
    out = []
    for ell in LENGTHSCALE_GRID:
        for sf2 in SIGNAL_GRID:
            for sn2 in NOISE_GRID:
                try:
                    model = fit(pairs, Kernel(float(ell), float(sf2)), float(sn2), mean=mean)
                except ConditioningError:
                    continue
                out.append((float(ell), float(sf2), float(sn2), model.log_marginal_likelihood()))
    return out


def fit_hyperparameters(pairs, mean: str = "zero") -> Hyperparameters:
    """Grid-search maximum of the log marginal likelihood.

    Ties go to the larger lengthscale, then the larger noise variance.
    """
    if len(pairs) < 4:
        raise ValueError(f"hyperparameter search needs at least 4 pairs, got {len(pairs)}")
    table = grid_log_likelihoods(pairs, mean=mean)
    if not table:
        raise ConditioningError("no grid point produced a factorizable Gram matrix")
    ell, sf2, sn2, ll = max(table, key=lambda row: (row[3], row[0], row[2]))
    return Hyperparameters(Kernel(ell, sf2), sn2, ll)
