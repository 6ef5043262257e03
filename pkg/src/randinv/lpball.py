"""Uniform points in l_p balls, plus closed-form volumes and moments.

Points are built from i.i.d. variates with density proportional to
exp(-|t|^p) and an independent standard exponential Z:

    X = Y / (sum |Y_i|^p + Z)^(1/p)

is uniform on the unit l_p^n ball. The exp(-|t|^p) variates come from a
ratio-of-uniforms rejection sampler whose acceptance probability is known in
closed form (between 0.5 and 0.75 for every p >= 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SeededStream, log_gamma

__all__ = [
    "LpBallSpec",
    "UnsupportedExponentError",
    "ratio_of_uniforms_bound",
    "acceptance_probability",
    "sample_exp_power",
    "sample_exp_power_batch",
    "ratio_of_uniforms_trials",
    "sample_lp_ball",
    "sample_lp_ball_many",
    "lp_ball_volume",
    "log_lp_ball_volume",
    "lp_ball_second_moment",
]

# a draw that needs this many proposals means the generator is broken
_PROPOSAL_GUARD = 10**6


class UnsupportedExponentError(ValueError):
    pass


@dataclass(frozen=True)
class LpBallSpec:
    n: int
    p: float
    r: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be at least 1")
        if not (self.p >= 1):
            raise ValueError("exponent must satisfy p >= 1 (or be math.inf)")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError("radius must be positive and finite")

    @property
    def is_cube(self) -> bool:
        return math.isinf(self.p)

    def norm(self, x) -> np.ndarray:
        """The l_p norm along the last axis."""
        a = np.abs(np.asarray(x, dtype=float))
        if self.is_cube:
            return a.max(axis=-1)
        return np.sum(a**self.p, axis=-1) ** (1.0 / self.p)

    def contains(self, x) -> np.ndarray:
        a = np.abs(np.asarray(x, dtype=float)) / self.r
        if self.is_cube:
            return a.max(axis=-1) <= 1.0
        return np.sum(a**self.p, axis=-1) <= 1.0


def _check_finite_p(p: float) -> None:
    if not (p >= 1) or math.isinf(p):
        raise ValueError(f"exponent must be finite with p >= 1, got {p!r}")


def ratio_of_uniforms_bound(p: float) -> float:
    """Half-width (2/(e p))^(1/p) of the V proposal interval."""
    _check_finite_p(p)
    return (2.0 / (math.e * p)) ** (1.0 / p)


def acceptance_probability(p: float) -> float:
    """Gamma(1+1/p) (e p)^(1/p) / 2^(1+1/p), the per-proposal acceptance rate."""
    _check_finite_p(p)
    q = 1.0 / p
    return math.exp(log_gamma(1.0 + q) + q * math.log(math.e * p) - (1.0 + q) * math.log(2.0))


def _accept(u: np.ndarray, v: np.ndarray, p: float) -> np.ndarray:
    # u^2 <= exp(-|v/u|^p) compared in log space; u == 0 is always rejected
    with np.errstate(divide="ignore"):
        return 2.0 * np.log(u) <= -np.abs(v / u) ** p


def sample_exp_power_batch(p: float, size: int, stream: SeededStream, return_trials: bool = False):
    """``size`` variates with density proportional to exp(-|t|^p).

    Each pass proposes as many (U, V) pairs as there are variates still
    missing and keeps the accepted ones, in order.
    """
    _check_finite_p(p)
    b = ratio_of_uniforms_bound(p)
    out = np.empty(size)
    filled = 0
    trials = 0
    while filled < size:
        need = size - filled
        u = stream.rng.random(need)
        v = stream.rng.uniform(-b, b, need)
        ok = _accept(u, v, p)
        k = int(ok.sum())
        out[filled:filled + k] = v[ok] / u[ok]
        filled += k
        trials += need
        if trials > _PROPOSAL_GUARD * max(size, 1):
            raise RuntimeError("ratio-of-uniforms sampler is not accepting; the random stream is corrupt")
    if return_trials:
        return out, trials
    return out


def sample_exp_power(p: float, stream: SeededStream) -> float:
    if not p >= 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p!r}")
    return float(sample_exp_power_batch(p, 1, stream)[0])


def ratio_of_uniforms_trials(p: float, proposals: int, stream: SeededStream) -> int:
    """Run ``proposals`` independent (U, V) proposals and count acceptances."""
    _check_finite_p(p)
    b = ratio_of_uniforms_bound(p)
    u = stream.rng.random(proposals)
    v = stream.rng.uniform(-b, b, proposals)
    return int(_accept(u, v, p).sum())


def _direct_exp_power(p: float, size: int, stream: SeededStream) -> np.ndarray:
    if p == 1:
        return stream.rng.laplace(0.0, 1.0, size)
    if p == 2:
        return stream.rng.standard_normal(size) / math.sqrt(2.0)
    # |Y|^p ~ Gamma(1/p) with a random sign
    g = stream.rng.standard_gamma(1.0 / p, size) ** (1.0 / p)
    return g * np.where(stream.rng.random(size) < 0.5, -1.0, 1.0)


def sample_lp_ball_many(spec: LpBallSpec, count: int, stream: SeededStream, method: str = "ratio") -> np.ndarray:
    """``count`` uniform points of the ball, shape (count, n).

    ``method="direct"`` swaps the ratio-of-uniforms step for a Laplace /
    Gaussian / Gamma-based generator; it exists for cross-checking only.
    """
    n = spec.n
    if spec.is_cube:
        return stream.rng.uniform(-spec.r, spec.r, (count, n))
    p = spec.p
    if method == "ratio":
        y = sample_exp_power_batch(p, count * n, stream).reshape(count, n)
    elif method == "direct":
        y = _direct_exp_power(p, count * n, stream).reshape(count, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    z = stream.exponential(count)
    scale = (np.sum(np.abs(y) ** p, axis=1) + z) ** (1.0 / p)
    return spec.r * y / scale[:, None]


def sample_lp_ball(spec: LpBallSpec, stream: SeededStream, method: str = "ratio") -> np.ndarray:
    return sample_lp_ball_many(spec, 1, stream, method)[0]


def log_lp_ball_volume(spec: LpBallSpec) -> float:
    n, r = spec.n, spec.r
    if spec.is_cube:
        return n * math.log(2.0 * r)
    q = 1.0 / spec.p
    return n * math.log(2.0 * r) + n * log_gamma(1.0 + q) - log_gamma(1.0 + n * q)


def lp_ball_volume(spec: LpBallSpec) -> float:
    """(2r)^n Gamma(1+1/p)^n / Gamma(1+n/p); raises OverflowError past double range."""
    lv = log_lp_ball_volume(spec)
    if lv > math.log(np.finfo(float).max):
        raise OverflowError("volume exceeds double range; use log_lp_ball_volume")
    return math.exp(lv)


def lp_ball_second_moment(n: int, p: float) -> float:
    """Exact E[X_1^2] for X uniform on the unit l_p^n ball, p in {1, 2}."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if p == 1:
        return 2.0 / ((n + 1) * (n + 2))
    if p == 2:
        return 1.0 / (n + 2)
    raise UnsupportedExponentError(f"no closed-form second moment for p={p!r}")
