"""Test statistics, the randomization engine, and the simulation data models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import SeededStream, student_t_cdf
from .groups import CapacityError, sample_rotations

__all__ = [
    "DegenerateInputError",
    "WeightedStatistic",
    "TwoSampleModel",
    "RandomizationOutcome",
    "EmgdModel",
    "weighted_sum",
    "mean_diff",
    "TTestResult",
    "two_sample_t",
    "one_sample_t",
    "randomization_pvalue",
    "randomization_threshold",
    "threshold_from_values",
    "emgd_sample",
    "lil_ratio",
    "rotation_bilinear_exact",
    "rotation_bilinear_mc",
]

ALTERNATIVES = ("greater", "less", "two-sided")


class DegenerateInputError(ValueError):
    """Input with zero spread where a variance estimate is needed."""


@dataclass(frozen=True, eq=False)
class WeightedStatistic:
    """T(x) = sum(theta_i x_i) with unit-norm weights."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.array(self.theta, dtype=float)
        if th.ndim != 1 or th.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if abs(np.sum(th**2) - 1.0) > 1e-10:
            raise ValueError("weights must have unit Euclidean norm")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @classmethod
    def uniform(cls, n: int) -> "WeightedStatistic":
        return cls(np.full(n, 1.0 / math.sqrt(n)))

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.abs(self.theta)))

    def __call__(self, x):
        return weighted_sum(x, self)


@dataclass(frozen=True)
class TwoSampleModel:
    """Independent Gaussian samples of sizes n and m sharing a mean eta."""

    n: int
    m: int
    var1: float
    var2: float
    eta: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("sample sizes must be at least 1")
        if not (self.var1 > 0 and self.var2 > 0):
            raise ValueError("variances must be positive")

    def oriented(self) -> "TwoSampleModel":
        """The same model with the larger sample listed first."""
        if self.n >= self.m:
            return self
        return TwoSampleModel(self.m, self.n, self.var2, self.var1, self.eta)

    @property
    def t_variance(self) -> float:
        """Variance of the difference of sample means."""
        return self.var1 / self.n + self.var2 / self.m

    def sample(self, stream: SeededStream, size=None) -> np.ndarray:
        shape = (self.n + self.m,) if size is None else (size, self.n + self.m)
        sd = np.concatenate([np.full(self.n, math.sqrt(self.var1)), np.full(self.m, math.sqrt(self.var2))])
        return self.eta + sd * stream.rng.standard_normal(shape)


@dataclass(frozen=True, eq=False)
class RandomizationOutcome:
    observed: float
    replicates: np.ndarray
    p_value: float
    threshold: float | None = None
    exact: bool = False

    @property
    def r(self) -> int:
        return len(self.replicates)


@dataclass(frozen=True)
class EmgdModel:
    """N(0,1) + Exp(rate) - 1/rate. ``rate=math.inf`` is the pure Gaussian."""

    rate: float = math.inf

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive or math.inf")

    @property
    def gaussian(self) -> bool:
        return math.isinf(self.rate)

    @property
    def variance(self) -> float:
        return 1.0 if self.gaussian else 1.0 + 1.0 / self.rate**2


def weighted_sum(x, stat: WeightedStatistic):
    """sum(theta * x) along the last axis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != stat.theta.size:
        raise ValueError(f"expected {stat.theta.size} coordinates, got {x.shape[-1]}")
    return x @ stat.theta


def mean_diff(x, n: int, m: int):
    """Mean of the first n coordinates minus mean of the last m (last axis)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n + m:
        raise ValueError(f"expected {n + m} coordinates, got {x.shape[-1]}")
    return x[..., :n].mean(axis=-1) - x[..., n:].mean(axis=-1)


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_value: float


def _two_sided(t: float, df: float) -> float:
    return min(1.0, 2.0 * student_t_cdf(-abs(t), df))


def two_sample_t(x, n: int, m: int, variant: str = "welch") -> TTestResult:
    """Pooled or Welch two-sample t-test of the first n versus the last m coordinates."""
    if n < 2 or m < 2:
        raise ValueError("each sample needs at least two observations")
    x = np.asarray(x, dtype=float)
    if x.shape != (n + m,):
        raise ValueError(f"expected a vector of length {n + m}")
    a, b = x[:n], x[n:]
    diff = a.mean() - b.mean()
    s1, s2 = a.var(ddof=1), b.var(ddof=1)
    if variant == "pooled":
        sp2 = ((n - 1) * s1 + (m - 1) * s2) / (n + m - 2)
        if sp2 == 0:
            raise DegenerateInputError("pooled variance is zero")
        stat = diff / math.sqrt(sp2 * (1.0 / n + 1.0 / m))
        df = float(n + m - 2)
    elif variant == "welch":
        v1, v2 = s1 / n, s2 / m
        if v1 + v2 == 0:
            raise DegenerateInputError("both sample variances are zero")
        stat = diff / math.sqrt(v1 + v2)
        df = (v1 + v2) ** 2 / (v1**2 / (n - 1) + v2**2 / (m - 1))
    else:
        raise ValueError(f"variant must be 'pooled' or 'welch', got {variant!r}")
    return TTestResult(float(stat), df, _two_sided(stat, df))


def one_sample_t(x) -> TTestResult:
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two observations")
    s = x.std(ddof=1)
    if s == 0:
        raise DegenerateInputError("sample variance is zero")
    stat = math.sqrt(n) * x.mean() / s
    return TTestResult(float(stat), float(n - 1), _two_sided(stat, n - 1))


def _evaluate(statistic: Callable, block: np.ndarray) -> np.ndarray:
    vals = np.asarray(statistic(block), dtype=float)
    if vals.shape != (block.shape[0],):
        vals = np.array([statistic(row) for row in block], dtype=float)
    return vals


def _orient(values, alternative: str):
    if alternative == "greater":
        return values
    if alternative == "less":
        return -values
    if alternative == "two-sided":
        return np.abs(values)
    raise ValueError(f"alternative must be one of {ALTERNATIVES}")


def _replicate_values(x, statistic, group, r, stream, exact):
    if exact:
        if not getattr(group, "enumerable", False):
            raise CapacityError(f"{type(group).__name__} of this size cannot be enumerated")
        return np.concatenate([_evaluate(statistic, block) for block in group.orbit(x)])
    if r < 0:
        raise ValueError("replicate count must be nonnegative")
    if r == 0:
        return np.empty(0)
    if stream is None:
        raise ValueError("Monte Carlo mode needs a SeededStream")
    return _evaluate(statistic, group.orbit_sample(x, r, stream))


def threshold_from_values(values, alpha: float) -> float:
    """Smallest value t in ``values`` with #{values > t} <= alpha * len(values)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    if n == 0:
        raise ValueError("threshold needs at least one replicate value")
    # number strictly above v[i] is n - searchsorted(v, v[i], 'right')
    above = n - np.searchsorted(v, v, side="right")
    ok = np.nonzero(above <= alpha * n)[0]
    return float(v[ok[0]])


def randomization_pvalue(
    x,
    statistic: Callable,
    group,
    r: int = 0,
    stream: SeededStream | None = None,
    *,
    exact: bool = False,
    alternative: str = "greater",
    alpha: float | None = None,
) -> RandomizationOutcome:
    """Randomization p-value of ``statistic`` at ``x`` under ``group``.

    Monte Carlo mode draws ``r`` Haar images of x from ``stream`` and returns
    (1 + #{T(g x) >= T(x)}) / (1 + r). Exact mode walks the whole group and
    returns #{T(g x) >= T(x)} / |G|. ``statistic`` may be vectorized over the
    last axis; otherwise it is applied row by row. Comparisons for
    ``alternative="two-sided"`` are on |T|.

    When ``alpha`` is given, the randomization threshold of the replicate
    values is attached to the outcome.
    """
    x = np.asarray(x, dtype=float)
    observed = float(_evaluate(statistic, x[None, :])[0])
    reps = _replicate_values(x, statistic, group, r, stream, exact)
    obs_o = _orient(np.array(observed), alternative)
    # tolerance absorbs float noise in T(gx) for g fixing T, e.g. reordered sums
    tol = 1e-12 * max(1.0, abs(float(obs_o)))
    hits = int(np.count_nonzero(_orient(reps, alternative) >= obs_o - tol))
    p = hits / reps.size if exact else (1 + hits) / (1 + reps.size)
    thr = threshold_from_values(reps, alpha) if alpha is not None else None
    reps.setflags(write=False)
    return RandomizationOutcome(observed, reps, float(p), thr, exact)


def randomization_threshold(
    x,
    statistic: Callable,
    group,
    r: int = 0,
    alpha: float = 0.05,
    stream: SeededStream | None = None,
    *,
    exact: bool = False,
) -> float:
    """t_alpha: the smallest replicate value exceeded by at most an alpha fraction.

    Note the strict inequality here, against the ``>=`` used by the p-value.
    """
    reps = _replicate_values(np.asarray(x, dtype=float), statistic, group, r, stream, exact)
    return threshold_from_values(reps, alpha)


def emgd_sample(model: EmgdModel, stream: SeededStream, size=None):
    """Centred exponentially modified Gaussian draws."""
    z = stream.rng.standard_normal(size)
    if model.gaussian:
        return z
    return z + stream.exponential(size) / model.rate - 1.0 / model.rate


def lil_ratio(x, p: float) -> float:
    """|sum x| / (2^(1/2+1/p) n^(1/2-1/p) sqrt(log log n)), natural logs.

    ``p=math.inf`` gives K = sqrt(2) and the n^(1/2) scaling.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 3:
        raise ValueError("log log n is only positive for n >= 3")
    q = 0.0 if math.isinf(p) else 1.0 / p
    denom = 2.0 ** (0.5 + q) * n ** (0.5 - q) * math.sqrt(math.log(math.log(n)))
    return np.abs(x.sum(axis=-1)) / denom


def _check_bilinear(A, x, y):
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if A.shape != (n, n) or y.shape != (n,) or x.shape != (n,):
        raise ValueError("A must be n x n and x, y length n")
    if np.max(np.abs(A - A.T)) > 1e-10:
        raise ValueError("A must be symmetric")
    return A, x, y


def rotation_bilinear_exact(A, x, y) -> float:
    """Haar average of (Mx)^T A (My) over SO(n): mean eigenvalue of A times <x, y>."""
    A, x, y = _check_bilinear(A, x, y)
    return float(np.trace(A) / x.size * (x @ y))


def rotation_bilinear_mc(A, x, y, N: int, stream: SeededStream) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of the Haar average over N rotations."""
    A, x, y = _check_bilinear(A, x, y)
    if N < 2:
        raise ValueError("need at least two rotations for a standard error")
    vals = np.empty(N)
    block = 4096
    for start in range(0, N, block):
        k = min(block, N - start)
        m = sample_rotations(x.size, k, stream)
        mx, my = m @ x, m @ y
        vals[start:start + k] = np.einsum("ki,ij,kj->k", mx, A, my)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(N))
