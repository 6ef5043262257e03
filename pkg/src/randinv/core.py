"""Seeded random streams and the scalar special functions used across the package."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SeededStream",
    "SpecialFnConfig",
    "derive_stream",
    "log_gamma",
    "normal_cdf",
    "student_t_cdf",
    "regularized_incomplete_beta",
    "lambert_w0",
    "log_hypergeom_weight",
    "NumericError",
]

_U64_MAX = 2**64 - 1


class NumericError(ArithmeticError):
    """An iterative routine failed to converge."""


@dataclass(frozen=True)
class SpecialFnConfig:
    newton_tolerance: float = 1e-12
    max_iterations: int = 100

    def __post_init__(self):
        if not self.newton_tolerance > 0:
            raise ValueError("newton_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


DEFAULT_CONFIG = SpecialFnConfig()


@dataclass(eq=False)
class SeededStream:
    """A deterministic random stream keyed by ``(master_seed, stream_index)``.

    Backed by the counter-based Philox generator, keyed through a
    ``SeedSequence`` so that distinct indices never share state. ``rng`` is
    the underlying :class:`numpy.random.Generator`; it is stateful, so a
    stream must not be drawn from concurrently.
    """

    master_seed: int
    stream_index: int | tuple[int, ...] = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.master_seed <= _U64_MAX:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        key = self.stream_index
        key = (key,) if isinstance(key, (int, np.integer)) else tuple(key)
        if any(k < 0 for k in key):
            raise ValueError("stream_index must be nonnegative")
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=tuple(int(k) for k in key))
        self.rng = np.random.Generator(np.random.Philox(seq))

    def child(self, index: int) -> "SeededStream":
        """Independent sub-stream ``index`` below this one."""
        key = self.stream_index
        key = (key,) if isinstance(key, (int, np.integer)) else tuple(key)
        return SeededStream(self.master_seed, key + (int(index),))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.rng.uniform(low, high, size)

    def normal(self, size=None):
        return self.rng.standard_normal(size)

    def exponential(self, size=None):
        """Standard exponential variates by inversion, ``-log(1 - U)``."""
        return -np.log1p(-self.rng.random(size))


def derive_stream(master_seed: int, index: int | tuple[int, ...] = 0) -> SeededStream:
    """Return a fresh stream; identical arguments always give identical variates."""
    return SeededStream(master_seed, index)


def log_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def normal_cdf(t: float) -> float:
    # erfc keeps full relative accuracy in the lower tail
    return 0.5 * math.erfc(-t / math.sqrt(2.0))


def _beta_continued_fraction(a: float, b: float, x: float, config: SpecialFnConfig) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 10 * config.max_iterations + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise NumericError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float, config: SpecialFnConfig = DEFAULT_CONFIG) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not (a > 0 and b > 0):
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x, config) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x, config) / b


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t with ``df`` degrees of freedom (df need not be an integer)."""
    if not df > 0:
        raise ValueError(f"degrees of freedom must be positive, got {df!r}")
    if t == 0:
        return 0.5
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    # tail = P(T > |t|) = I_{df/(df+t^2)}(df/2, 1/2) / 2
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def lambert_w0(z: float, config: SpecialFnConfig = DEFAULT_CONFIG) -> float:
    """Principal branch of Lambert's W for ``z >= 0``.

    Newton's method on ``w*exp(w) - z`` started at ``log(z + 1)``, which is an
    upper bound for W(z); the function is convex there so the iterates decrease
    monotonically to the root.
    """
    if z < 0:
        raise ValueError("lambert_w0 is only defined here for z >= 0")
    if z == 0:
        return 0.0
    if math.isinf(z):
        return math.inf
    w = math.log1p(z)
    for _ in range(config.max_iterations):
        ew = math.exp(w)
        step = (w * ew - z) / (ew * (w + 1.0))
        w -= step
        if abs(step) <= config.newton_tolerance * max(abs(w), 1e-300):
            return w
    raise NumericError(f"lambert_w0 did not converge for z={z!r}")


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_hypergeom_weight(j: int, n: int, m: int) -> float:
    """log of C(n, j) C(m, m-j) / C(n+m, m).

    This is the probability that a uniformly random relabelling moves exactly
    ``j`` of the first ``n`` coordinates into the last ``m`` slots.
    """
    if not (0 <= j <= m <= n):
        raise ValueError(f"need 0 <= j <= m <= n, got j={j}, n={n}, m={m}")
    return _log_binom(n, j) + _log_binom(m, m - j) - _log_binom(n + m, m)
