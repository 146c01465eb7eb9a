"""Numerical kernels shared by the analyses: correlation, centered least
squares, deterministic splits, categorical encodings and rank distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDesignError,
    FeatureMismatchError,
    InvalidSizesError,
    ItemMismatchError,
    LengthMismatchError,
    ShapeMismatchError,
    ZeroVarianceError,
)

RIDGE_LAMBDA = 1e-8


def _as_vector(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ShapeMismatchError(f"expected a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite entries")
    return arr


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; raises ZeroVarianceError on constant input."""
    xv, yv = _as_vector(x), _as_vector(y)
    if len(xv) != len(yv):
        raise LengthMismatchError(f"lengths differ: {len(xv)} vs {len(yv)}")
    if len(xv) < 2:
        raise LengthMismatchError("need at least 2 observations")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    sx = math.sqrt(float(xc @ xc))
    sy = math.sqrt(float(yc @ yc))
    if sx == 0.0:
        raise ZeroVarianceError("first argument is constant")
    if sy == 0.0:
        raise ZeroVarianceError("second argument is constant")
    r = float(xc @ yc) / (sx * sy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Rectangular observations-by-features table with unique column names."""

    names: tuple[str, ...]
    data: np.ndarray  # shape (n_rows, len(names))

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(self.names):
            raise ShapeMismatchError(
                f"data shape {self.data.shape} does not match {len(self.names)} columns")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate column names")

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def take_rows(self, rows: Sequence[int]) -> "FeatureMatrix":
        return FeatureMatrix(self.names, self.data[np.asarray(rows, dtype=int)])

    @staticmethod
    def concat(*parts: "FeatureMatrix") -> "FeatureMatrix":
        names = tuple(n for p in parts for n in p.names)
        return FeatureMatrix(names, np.hstack([p.data for p in parts]))


@dataclass(frozen=True)
class FitDiagnostics:
    residual_norm: float
    rank: int
    ridge_fallback: bool


@dataclass(frozen=True, eq=False)
class OlsModel:
    feature_names: tuple[str, ...]
    coefficients: np.ndarray
    intercept: float
    column_means: np.ndarray
    target_mean: float
    centered: bool
    diagnostics: FitDiagnostics


def fit_ols(X: FeatureMatrix, y: Sequence[float], center: bool = True) -> OlsModel:
    """Least squares on (optionally mean-centered) features.

    Solved by orthogonal decomposition; rank-deficient designs fall back to a
    tiny ridge (lambda=1e-8), flagged in the diagnostics. Centering stores the
    training means and leaves the intercept at 0.
    """
    yv = _as_vector(y)
    n, k = X.data.shape
    if len(yv) != n:
        raise ShapeMismatchError(f"{n} rows but {len(yv)} targets")
    if n < k:
        raise ShapeMismatchError(f"underdetermined system: {n} rows, {k} features")
    if center:
        means = X.data.mean(axis=0)
        target_mean = float(yv.mean())
    else:
        means = np.zeros(k)
        target_mean = 0.0
    xc = X.data - means
    yc = yv - target_mean
    beta, _, rank, _ = np.linalg.lstsq(xc, yc, rcond=None)
    if rank == 0:
        raise DegenerateDesignError("design matrix has rank 0")
    ridge = False
    if rank < k:
        gram = xc.T @ xc + RIDGE_LAMBDA * np.eye(k)
        beta = np.linalg.solve(gram, xc.T @ yc)
        ridge = True
    residual = float(np.linalg.norm(xc @ beta - yc))
    return OlsModel(
        feature_names=X.names,
        coefficients=beta,
        intercept=0.0,
        column_means=means,
        target_mean=target_mean,
        centered=center,
        diagnostics=FitDiagnostics(residual_norm=residual, rank=int(rank), ridge_fallback=ridge),
    )


def predict(model: OlsModel, X: FeatureMatrix) -> np.ndarray:
    if X.names != model.feature_names:
        raise FeatureMismatchError(
            f"columns {X.names} do not match trained features {model.feature_names}")
    return (X.data - model.column_means) @ model.coefficients + model.target_mean + model.intercept


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    train: tuple[int, ...]
    test: tuple[int, ...]


def train_test_split(n: int, test: int, seed: int) -> SplitPlan:
    """Uniform split without replacement, deterministic in the seed."""
    if not 0 < test < n:
        raise InvalidSizesError(f"cannot hold out {test} of {n} observations")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitPlan(
        seed=seed,
        train=tuple(int(i) for i in sorted(perm[test:])),
        test=tuple(int(i) for i in sorted(perm[:test])),
    )


def one_hot(labels: Sequence[str], prefix: str = "") -> FeatureMatrix:
    """Indicator matrix with one column per distinct label; each row sums to 1."""
    if not labels:
        raise ValueError("no labels to encode")
    distinct = sorted(set(labels))
    columns = {label: j for j, label in enumerate(distinct)}
    data = np.zeros((len(labels), len(distinct)))
    for i, label in enumerate(labels):
        data[i, columns[label]] = 1.0
    return FeatureMatrix(tuple(f"{prefix}{label}" for label in distinct), data)


@dataclass(frozen=True)
class Ranking:
    """Dense descending ranks; 1 is best, tied items share a rank."""

    ranks: tuple[int, ...]


def rank_of_scores(scores: Sequence[float]) -> Ranking:
    if not len(scores):
        raise ValueError("cannot rank an empty score list")
    distinct = sorted(set(scores), reverse=True)
    position = {value: i + 1 for i, value in enumerate(distinct)}
    return Ranking(tuple(position[s] for s in scores))


class ConcordanceBucket(str, Enum):
    SAME = "same"
    ONE = "one"
    TWO_PLUS = "two_plus"


def kendall_discordance(a: Ranking, b: Ranking) -> tuple[int, ConcordanceBucket]:
    """Count of item pairs ordered oppositely; pairs tied in either ranking are skipped."""
    if len(a.ranks) != len(b.ranks):
        raise ItemMismatchError(f"rankings cover {len(a.ranks)} vs {len(b.ranks)} items")
    discordant = 0
    n = len(a.ranks)
    for i in range(n):
        for j in range(i + 1, n):
            da = a.ranks[i] - a.ranks[j]
            db = b.ranks[i] - b.ranks[j]
            if da == 0 or db == 0:
                continue
            if (da > 0) != (db > 0):
                discordant += 1
    if discordant == 0:
        bucket = ConcordanceBucket.SAME
    elif discordant == 1:
        bucket = ConcordanceBucket.ONE
    else:
        bucket = ConcordanceBucket.TWO_PLUS
    return discordant, bucket
