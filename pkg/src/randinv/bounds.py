"""Closed-form distances between the sampling law of a statistic and its
group-averaged (randomization) law.

Inputs are canonicalized: where a bound is stated for n >= m or for a
nonnegative variance difference, arguments are swapped or an absolute value
is taken so callers can pass either orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import lambert_w0, log_hypergeom_weight, normal_cdf
from .stats import TwoSampleModel

__all__ = [
    "DEFAULT_BERRY_ESSEEN_C",
    "GaussianMixtureNull",
    "SOnTailParams",
    "berry_esseen_one_sample",
    "lp_gaussian_bound",
    "two_sample_lp_bound",
    "mixture_null",
    "mixture_tail",
    "mixture_cdf",
    "symmetric_kl_gaussian",
    "mixture_symmetric_kl",
    "tv_kl_penultimate",
    "tv_bound",
    "so_n_tail",
]

DEFAULT_BERRY_ESSEEN_C = 0.56


@dataclass(frozen=True, eq=False)
class GaussianMixtureNull:
    """Centred Gaussian mixture: weights[j] on a N(0, sd[j]^2) component."""

    weights: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        s = np.array(self.sd, dtype=float)
        if w.shape != s.shape or w.ndim != 1 or w.size == 0:
            raise ValueError("weights and sd must be matching nonempty vectors")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")
        if np.any(s <= 0):
            raise ValueError("component standard deviations must be positive")
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sd", s)

    @property
    def variances(self) -> np.ndarray:
        return self.sd**2


@dataclass(frozen=True)
class SOnTailParams:
    kappa0: float = 1.0 / 72.0
    prefactor: float = 1.0

    def __post_init__(self):
        if not self.kappa0 > 0:
            raise ValueError("kappa0 must be positive")
        if not self.prefactor >= 1:
            raise ValueError("prefactor must be at least 1")


def berry_esseen_one_sample(sigma: float, omega: float, theta, C: float = DEFAULT_BERRY_ESSEEN_C) -> float:
    """2 C omega / sigma^3 * sum |theta_i|^3.

    Bounds |P(T(X) > t) - E rho(T(g X) > t)| for T = sum theta_i X_i with
    i.i.d. centred X_i of standard deviation sigma and third absolute moment
    omega, uniformly in t.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if omega < 0 or C <= 0:
        raise ValueError("omega must be nonnegative and C positive")
    theta = np.asarray(theta, dtype=float)
    return float(2.0 * C * omega / sigma**3 * np.sum(np.abs(theta) ** 3))


def _lp_core(delta: float, scale: float, mode: str) -> float:
    # sqrt(2 delta f(scale / sqrt(2 pi delta))) with f = W or log(1 + .)
    if delta == 0:
        return 0.0
    z = scale / math.sqrt(2.0 * math.pi * delta)
    if mode == "lambert_exact":
        f = lambert_w0(z)
    elif mode == "log_upper":
        f = math.log1p(z)
    else:
        raise ValueError(f"mode must be 'lambert_exact' or 'log_upper', got {mode!r}")
    return math.sqrt(2.0 * delta * f)


def lp_gaussian_bound(var1: float, var2: float, mode: str = "log_upper") -> float:
    """Levy-Prokhorov bound between N(0, var1) and N(0, var2).

    ``lambert_exact`` solves the Ky Fan tail equation with Lambert's W;
    ``log_upper`` replaces W(z) by its upper bound log(z + 1).
    """
    if not (var1 > 0 and var2 > 0):
        raise ValueError("variances must be positive")
    return _lp_core(abs(var1 - var2), 1.0, mode)


def two_sample_lp_bound(n: int, m: int, var1: float, var2: float) -> float:
    """Levy-Prokhorov distance bound between T(X) and the permutation-averaged law.

    sqrt(2 (1/m - 1/n) |var1 - var2| log(nm/sqrt(n^2 - m^2) / sqrt(2 pi |var1 - var2|) + 1)),
    with n >= m after canonicalization; 0 when n == m or var1 == var2.
    """
    if n < 1 or m < 1:
        raise ValueError("sample sizes must be at least 1")
    if not (var1 > 0 and var2 > 0):
        raise ValueError("variances must be positive")
    if m > n:
        n, m, var1, var2 = m, n, var2, var1
    delta = abs(var1 - var2)
    if n == m or delta == 0:
        return 0.0
    coef = 1.0 / m - 1.0 / n
    scale = n * m / math.sqrt(float(n) * n - float(m) * m)
    # written as sqrt(coef) * _lp_core so the pieces match the single-Gaussian bound
    return math.sqrt(coef) * _lp_core(delta, scale, "log_upper")


def mixture_null(model: TwoSampleModel) -> GaussianMixtureNull:
    """Law of T(g Z) for Gaussian Z, averaged over uniform g in S_{n+m}.

    Component j (j = 0..m) is the event that exactly j of the first-sample
    values land in the second-sample slots; it has hypergeometric weight and
    variance var1/n + var2/m + j (1/m^2 - 1/n^2)(var1 - var2).
    """
    n, m, v1, v2 = model.n, model.m, model.var1, model.var2
    if m > n:
        raise ValueError("mixture_null expects n >= m; use model.oriented()")
    j = np.arange(m + 1, dtype=float)
    logw = np.array([log_hypergeom_weight(int(k), n, m) for k in range(m + 1)])
    w = np.exp(logw)
    w /= w.sum()
    # the positive-sum form avoids cancellation in the variance
    var = v1 * ((n - j) / n**2 + j / m**2) + v2 * ((m - j) / m**2 + j / n**2)
    return GaussianMixtureNull(w, np.sqrt(var))


def mixture_tail(null: GaussianMixtureNull, t: float) -> float:
    """sum_j w_j (1 - Phi(t / s_j))."""
    return float(sum(w * normal_cdf(-t / s) for w, s in zip(null.weights, null.sd)))


def mixture_cdf(null: GaussianMixtureNull, t: float) -> float:
    return float(sum(w * normal_cdf(t / s) for w, s in zip(null.weights, null.sd)))


def symmetric_kl_gaussian(var1: float, var2: float) -> float:
    """Symmetrized KL divergence between N(0, var1) and N(0, var2): (s1/s2 - s2/s1)^2 / 4."""
    if not (var1 > 0 and var2 > 0):
        raise ValueError("variances must be positive")
    r = math.sqrt(var1 / var2)
    return 0.25 * (r - 1.0 / r) ** 2


def mixture_symmetric_kl(model: TwoSampleModel) -> float:
    """sum_j w_j H(mu, nu_j): the convexity bound on H(mu, nu) for the mixture null."""
    model = model.oriented()
    null = mixture_null(model)
    v0 = model.t_variance
    return float(sum(w * symmetric_kl_gaussian(v0, v) for w, v in zip(null.weights, null.variances)))


def tv_kl_penultimate(model: TwoSampleModel) -> float:
    """(n-m)/(n+m) |b - a|/(a + b) / (4 [m a + n b]/[(n+m)(a+b)]) with a = var1, b = var2.

    The last exact step of the symmetric-KL chain before the max{.} relaxation
    that produces :func:`tv_bound`.
    """
    model = model.oriented()
    n, m, a, b = model.n, model.m, model.var1, model.var2
    ratio = (n - m) / (n + m)
    mix = (m * a + n * b) / ((n + m) * (a + b))
    return 0.25 * ratio * abs(b - a) / (a + b) / mix


def tv_bound(model: TwoSampleModel) -> float:
    """Total-variation bound between T(X) and its permutation-averaged law, capped at 1.

    1/2 sqrt((n-m)/(n+m)) |var2 - var1|^(1/2) max(sqrt(1/(var1 + var2)), sqrt(1/(2 var2)))
    with n >= m and var1 attached to the size-n sample.
    """
    model = model.oriented()
    n, m, a, b = model.n, model.m, model.var1, model.var2
    if n == m or a == b:
        return 0.0
    val = 0.5 * math.sqrt((n - m) / (n + m)) * math.sqrt(abs(b - a)) * max(
        math.sqrt(1.0 / (a + b)), math.sqrt(1.0 / (2.0 * b))
    )
    return min(1.0, val)


def so_n_tail(t: float, c_n: float, norm_x: float, params: SOnTailParams = SOnTailParams()) -> float:
    """min(1, K exp(-kappa0 t^2 / (c_n^2 |x|^2))): Haar tail of T(Mx) over SO(n)."""
    if not (c_n > 0 and norm_x > 0):
        raise ValueError("c_n and norm_x must be positive")
    return min(1.0, params.prefactor * math.exp(-params.kappa0 * t * t / (c_n**2 * norm_x**2)))
