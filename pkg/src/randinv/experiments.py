"""Simulation studies written out as deterministic CSV files.

Every (grid point, replicate) pair draws from its own derived stream, so a
row depends only on the master seed and its position in the grid.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import integrate

from . import bounds, lpball, stats
from .core import derive_stream, normal_cdf
from .groups import PermutationGroup, SignFlipGroup

log = logging.getLogger(__name__)

__all__ = [
    "KINDS",
    "COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "run",
    "emgd_moments",
    "expected_rows",
]

INF = math.inf

COLUMNS = {
    "lil-ball": ("p", "n", "rep", "ratio"),
    "one-sample": ("lambda", "rep", "p_t", "p_rand", "be_bound"),
    "two-sample": ("m", "rep", "p_welch", "p_perm", "tv_bound"),
    "cdf-compare": ("t", "F_empirical", "F_mixture", "lp_band"),
    "accept-rate": ("p", "trials", "accept_rate", "theoretical"),
    "rot-bilinear": ("n", "samples", "estimate", "exact", "std_error"),
}
KINDS = tuple(COLUMNS)

# grid parameters each kind accepts, with their defaults
DEFAULTS = {
    "lil-ball": dict(reps=1000, p=[1.0, 2.0, INF], n=[10, 100, 1000, 10_000, 100_000]),
    "one-sample": dict(reps=200, r=2000, n=[100], lam=[INF, 10.0, 1.0, 0.1, 0.01, 0.001],
                       be_constant=bounds.DEFAULT_BERRY_ESSEEN_C, analytic_moments=False),
    "two-sample": dict(reps=200, r=2000, n=[200], m=[25, 50, 100, 200], var1=1.0, var2=16.0),
    "cdf-compare": dict(reps=200, n=[200], m=[100], var1=1.0, var2=16.0, t_grid=None),
    "accept-rate": dict(p=[1.0, 2.0, 4.0, 8.0], trials=100_000),
    "rot-bilinear": dict(n=[2, 4, 6, 8], samples=20_000),
}

_KIND_ID = {k: i for i, k in enumerate(KINDS)}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    out_dir: Path = Path(".")
    reps: int | None = None
    r: int | None = None
    p: list | None = None
    n: list | None = None
    m: list | None = None
    lam: list | None = None
    var1: float | None = None
    var2: float | None = None
    t_grid: list | None = None
    trials: int | None = None
    samples: int | None = None
    be_constant: float | None = None
    analytic_moments: bool | None = None
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in COLUMNS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        allowed = DEFAULTS[self.kind]
        for f in fields(self):
            if f.name in ("kind", "seed", "out_dir", "extra"):
                continue
            value = getattr(self, f.name)
            if f.name in allowed:
                if value is None:
                    default = allowed[f.name]
                    setattr(self, f.name, list(default) if isinstance(default, list) else default)
            elif value is not None:
                raise ConfigError(f"parameter {f.name!r} does not apply to kind {self.kind!r}")
        self.out_dir = Path(self.out_dir)
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self._validate()

    def _validate(self):
        for name in ("reps", "r", "trials", "samples"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be at least 1")
        for name in ("p", "n", "m", "lam"):
            v = getattr(self, name)
            if v is not None and len(v) == 0:
                raise ConfigError(f"grid {name!r} must be nonempty")
        if self.kind == "lil-ball" and min(self.n) < 3:
            raise ConfigError("lil-ball needs n >= 3")
        if self.kind in ("lil-ball", "accept-rate") and any(not p >= 1 for p in self.p):
            raise ConfigError("exponents must satisfy p >= 1")
        if self.kind == "accept-rate" and any(math.isinf(p) for p in self.p):
            raise ConfigError("accept-rate needs finite exponents")
        if self.kind in ("one-sample", "two-sample", "cdf-compare") and len(self.n) != 1:
            raise ConfigError(f"{self.kind} takes a single n")
        if self.kind == "cdf-compare" and len(self.m) != 1:
            raise ConfigError("cdf-compare takes a single m")
        if self.kind == "one-sample" and self.n[0] < 2:
            raise ConfigError("one-sample needs n >= 2")
        if self.kind in ("two-sample", "cdf-compare"):
            if self.n[0] < 2 or min(self.m) < 2:
                raise ConfigError("sample sizes must be at least 2")
            if not (self.var1 > 0 and self.var2 > 0):
                raise ConfigError("variances must be positive")
        if self.kind == "rot-bilinear" and min(self.n) < 1:
            raise ConfigError("dimensions must be at least 1")
        if self.kind == "rot-bilinear" and self.samples < 2:
            raise ConfigError("samples must be at least 2")
        if self.kind == "one-sample" and any(not lam > 0 for lam in self.lam):
            raise ConfigError("rates must be positive (inf allowed)")

    @property
    def output_path(self) -> Path:
        return self.out_dir / f"{self.kind}.csv"


def expected_rows(config: ExperimentConfig) -> int:
    k = config.kind
    if k == "lil-ball":
        return len(config.p) * len(config.n) * config.reps
    if k == "one-sample":
        return len(config.lam) * config.reps
    if k == "two-sample":
        return len(config.m) * config.reps
    if k == "cdf-compare":
        return len(_t_grid(config))
    if k == "accept-rate":
        return len(config.p)
    return len(config.n)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _stream(config: ExperimentConfig, *key):
    return derive_stream(config.seed, (_KIND_ID[config.kind],) + tuple(int(k) for k in key))


def _abs_third_moment_shifted_normal(c: float) -> float:
    # E|X + c|^3 for X ~ N(0, 1)
    phi = math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
    return (c**3 + 3.0 * c) * (2.0 * normal_cdf(c) - 1.0) + 2.0 * (c * c + 2.0) * phi


def emgd_moments(model: stats.EmgdModel) -> tuple[float, float]:
    """(standard deviation, third absolute moment) of the centred EMGD."""
    if model.gaussian:
        return 1.0, _abs_third_moment_shifted_normal(0.0)
    lam = model.rate
    # condition on the exponential part y and integrate against its density
    val, _ = integrate.quad(
        lambda y: lam * math.exp(-lam * y) * _abs_third_moment_shifted_normal(y - 1.0 / lam),
        0.0, math.inf, limit=200,
    )
    return math.sqrt(model.variance), val


def _lil_ball(config):
    for gi, p in enumerate(config.p):
        for ni, n in enumerate(config.n):
            spec = lpball.LpBallSpec(int(n), p)
            for rep in range(config.reps):
                x = lpball.sample_lp_ball(spec, _stream(config, gi, ni, rep))
                yield (p, int(n), rep, stats.lil_ratio(x, p))


def _one_sample(config):
    n = int(config.n[0])
    group = SignFlipGroup(n)
    stat = stats.WeightedStatistic.uniform(n)
    for gi, lam in enumerate(config.lam):
        model = stats.EmgdModel(lam)
        if config.analytic_moments:
            sigma, omega = emgd_moments(model)
        for rep in range(config.reps):
            s = _stream(config, gi, rep)
            x = stats.emgd_sample(model, s, n)
            p_t = stats.one_sample_t(x).p_value
            p_rand = stats.randomization_pvalue(x, stat, group, config.r, s, alternative="two-sided").p_value
            if not config.analytic_moments:
                sigma = x.std(ddof=1)
                omega = float(np.mean(np.abs(x - x.mean()) ** 3))
            be = bounds.berry_esseen_one_sample(sigma, omega, stat.theta, config.be_constant)
            yield (lam, rep, p_t, p_rand, be)


def _two_sample(config):
    n = int(config.n[0])
    for gi, m in enumerate(config.m):
        m = int(m)
        model = stats.TwoSampleModel(n, m, config.var1, config.var2)
        tv = bounds.tv_bound(model)
        group = PermutationGroup(n + m)

        def statistic(x, n=n, m=m):
            return stats.mean_diff(x, n, m)

        for rep in range(config.reps):
            s = _stream(config, gi, rep)
            x = model.sample(s)
            p_w = stats.two_sample_t(x, n, m, "welch").p_value
            p_perm = stats.randomization_pvalue(x, statistic, group, config.r, s, alternative="two-sided").p_value
            yield (m, rep, p_w, p_perm, tv)


def _t_grid(config):
    if config.t_grid is not None:
        return [float(t) for t in config.t_grid]
    sd = math.sqrt(stats.TwoSampleModel(int(config.n[0]), int(config.m[0]), config.var1, config.var2).t_variance)
    return [float(v) for v in np.linspace(-3.0 * sd, 3.0 * sd, 41)]


def _cdf_compare(config):
    n, m = int(config.n[0]), int(config.m[0])
    model = stats.TwoSampleModel(n, m, config.var1, config.var2)
    x = model.sample(_stream(config, 0), size=config.reps)
    t_obs = np.sort(stats.mean_diff(x, n, m))
    # T changes sign when the samples are swapped; the mixture law is symmetric
    null = bounds.mixture_null(model.oriented())
    band = bounds.two_sample_lp_bound(n, m, config.var1, config.var2)
    for t in _t_grid(config):
        f_emp = np.searchsorted(t_obs, t, side="right") / t_obs.size
        yield (t, f_emp, bounds.mixture_cdf(null, t), band)


def _accept_rate(config):
    for gi, p in enumerate(config.p):
        acc = lpball.ratio_of_uniforms_trials(p, config.trials, _stream(config, gi))
        yield (p, config.trials, acc / config.trials, lpball.acceptance_probability(p))


def _rot_bilinear(config):
    for gi, n in enumerate(config.n):
        n = int(n)
        s = _stream(config, gi)
        g = s.normal((n, n))
        a = 0.5 * (g + g.T)
        x, y = s.normal(n), s.normal(n)
        est, se = stats.rotation_bilinear_mc(a, x, y, config.samples, s)
        yield (n, config.samples, est, stats.rotation_bilinear_exact(a, x, y), se)


_RUNNERS = {
    "lil-ball": _lil_ball,
    "one-sample": _one_sample,
    "two-sample": _two_sample,
    "cdf-compare": _cdf_compare,
    "accept-rate": _accept_rate,
    "rot-bilinear": _rot_bilinear,
}


def run(config: ExperimentConfig) -> list[Path]:
    """Run one experiment and write ``<out_dir>/<kind>.csv``; returns the written paths."""
    rows = list(_RUNNERS[config.kind](config))
    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_path
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS[config.kind])
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    log.info("wrote %d rows to %s", len(rows), path)
    return [path]
