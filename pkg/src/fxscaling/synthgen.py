"""Synthetic activity with known moments.

Counts are doubly stochastic Poisson: a common positive factor ``s(k)`` with
mean 1 and variance ``coupling_v`` modulates every pair's intensity,
``P_i(k) ~ Poisson(rate_i * s(k))``. Trades thin quotes,
``D_i(k) ~ Binomial(P_i(k), trade_fraction)``.

The factor is ``exp(sigma*z(k) - sigma**2/2)`` with ``sigma**2 = log(1+v)``
and ``z`` a unit-variance stationary AR(1) with coefficient
``factor_memory``.

RNG: numpy ``Generator(Philox)`` seeded by ``SeedSequence(seed,
spawn_key=(stream, index))``; stream 1 is the factor, 2 the quote counts of
pair ``index``, 3 its trade thinning, 4 its tick timestamps.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import GeometryError, SpecError
from .panel import ActivityPanel, WEEK_MINUTES
from .scaling import ols
from .tickdata import MS_PER_MINUTE, PAIR_RE, Interval, Kind, TickStream, iso_ms, to_ms

DEFAULT_START = "2008-08-03T00:00:00Z"  # a Sunday


def _rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(stream, index))))


def default_pairs(n: int) -> tuple:
    """Deterministic synthetic pair codes ``C00/USD``, ``C01/USD``..."""
    return tuple(f"C{i:02d}/USD" if i < 100 else f"{i:03d}/XXX" for i in range(n))


def logspace_rates(n: int, lo: float, hi: float) -> tuple:
    return tuple(np.logspace(np.log10(lo), np.log10(hi), n).tolist())


@dataclass(frozen=True)
class GenSpec:
    pairs: tuple
    rates: tuple
    Q: int
    coupling_v: float = 0.0
    factor_memory: float = 0.0
    trade_fraction: float = 0.3
    seed: int = 0
    dt: int = 1
    start: str = DEFAULT_START

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if len(self.pairs) != len(self.rates):
            raise SpecError("one rate per pair required")
        if not self.pairs:
            raise SpecError("at least one pair required")
        for p in self.pairs:
            if not PAIR_RE.match(p):
                raise SpecError(f"malformed pair code {p!r}")
        if any(not (r > 0 and math.isfinite(r)) for r in self.rates):
            raise SpecError("rates must be positive and finite")
        if self.Q < 2:
            raise SpecError("Q must be at least 2")
        if not (self.coupling_v >= 0 and math.isfinite(self.coupling_v)):
            raise SpecError("coupling_v must be a finite non-negative variance")
        if not 0 <= self.factor_memory < 1:
            raise SpecError("factor_memory must lie in [0, 1)")
        if not 0 <= self.trade_fraction <= 1:
            raise SpecError("trade_fraction must lie in [0, 1]")
        if self.dt < 1:
            raise SpecError("dt must be a positive number of minutes")
        # the factor's mean of 1 is carried by draws near z = sigma; past the largest
        # z expected in Q draws a sample path cannot realise it
        if self.coupling_v > 0 and math.log1p(self.coupling_v) > 2 * math.log(max(self.Q, 3)):
            raise SpecError(f"coupling_v={self.coupling_v:g} has no usable lognormal factor over Q={self.Q} bins")

    @classmethod
    def poisson(cls, n: int, lo: float, hi: float, Q: int, **kw) -> "GenSpec":
        return cls(default_pairs(n), logspace_rates(n, lo, hi), Q, **kw)

    @property
    def window(self) -> Interval:
        t0 = to_ms(self.start)
        return Interval(t0, t0 + self.Q * self.dt * MS_PER_MINUTE)

    @property
    def log_sigma2(self) -> float:
        return math.log1p(self.coupling_v)

    @classmethod
    def from_json(cls, data) -> "GenSpec":
        """Build from a dict, JSON text or path.

        Besides the field names, ``rates`` may be ``{"logspace": [lo, hi]}``,
        ``pairs`` may be an integer count, and ``weeks`` may replace ``Q``.
        """
        if isinstance(data, (str, Path)) and not str(data).lstrip().startswith("{"):
            data = Path(data).read_text()
        if isinstance(data, str):
            data = json.loads(data)
        d = dict(data)
        pairs = d.pop("pairs")
        rates = d.pop("rates")
        n = pairs if isinstance(pairs, int) else len(pairs)
        if isinstance(pairs, int):
            pairs = default_pairs(pairs)
        if isinstance(rates, dict):
            rates = logspace_rates(n, *rates["logspace"])
        elif isinstance(rates, (int, float)):
            rates = (float(rates),) * n
        if "weeks" in d:
            weeks = d.pop("weeks")
            d.setdefault("Q", weeks * WEEK_MINUTES // d.get("dt", 1))
        try:
            return cls(tuple(pairs), tuple(rates), **d)
        except TypeError as exc:
            raise SpecError(str(exc)) from None

    def to_json(self) -> dict:
        return asdict(self)


def gen_factor(spec: GenSpec) -> np.ndarray:
    if spec.coupling_v == 0:
        return np.ones(spec.Q)
    rho = spec.factor_memory
    eps = _rng(spec.seed, 1).standard_normal(spec.Q)
    eps[1:] *= math.sqrt(1 - rho * rho)
    z = lfilter([1.0], [1.0, -rho], eps) if rho else eps
    sigma2 = spec.log_sigma2
    s = np.exp(math.sqrt(sigma2) * z - sigma2 / 2)
    if not (np.all(np.isfinite(s)) and np.all(s > 0)):
        raise SpecError("factor left the positive floating-point range; coupling_v too large")
    return s


def gen_panel(spec: GenSpec) -> tuple:
    """Quote and trade panels over ``spec.window``."""
    s = gen_factor(spec)
    n = len(spec.pairs)
    p = np.empty((n, spec.Q), dtype=np.int64)
    d = np.empty_like(p)
    for i, rate in enumerate(spec.rates):
        p[i] = _rng(spec.seed, 2, i).poisson(rate * s)
        d[i] = _rng(spec.seed, 3, i).binomial(p[i], spec.trade_fraction)
    w = spec.window
    return (ActivityPanel(Kind.QUOTE, spec.dt, w, spec.pairs, p),
            ActivityPanel(Kind.TRADE, spec.dt, w, spec.pairs, d))


def panels_to_stream(p_panel: ActivityPanel, d_panel: ActivityPanel, seed: int = 0) -> TickStream:
    """Scatter each bin's events uniformly (ms resolution) inside the bin."""
    width = p_panel.dt * MS_PER_MINUTE
    t0 = p_panel.window.start
    table = tuple(sorted(p_panel.pairs))
    ts_parts, pair_parts, kind_parts = [], [], []
    for i, pair in enumerate(p_panel.pairs):
        rng = _rng(seed, 4, i)
        for code, panel in ((0, p_panel), (1, d_panel)):
            row = panel.counts[i]
            total = int(row.sum())
            if not total:
                continue
            starts = np.repeat(t0 + np.arange(panel.n_bins, dtype=np.int64) * width, row)
            ts_parts.append(starts + rng.integers(0, width, size=total))
            pair_parts.append(np.full(total, table.index(pair), dtype=np.int32))
            kind_parts.append(np.full(total, code, dtype=np.uint8))
    if not ts_parts:
        return TickStream(np.empty(0, np.int64), np.empty(0, np.int32), np.empty(0, np.uint8),
                          table, p_panel.window)
    ts = np.concatenate(ts_parts)
    pr = np.concatenate(pair_parts)
    kd = np.concatenate(kind_parts)
    order = np.lexsort((kd, pr, ts))
    return TickStream(ts[order], pr[order], kd[order], table, p_panel.window)


def gen_tick_stream(spec: GenSpec, window: Interval | None = None, dt: int | None = None) -> TickStream:
    if window is not None or dt is not None:
        dt = spec.dt if dt is None else int(dt)
        window = window or spec.window
        length = window.end - window.start
        if length % (dt * MS_PER_MINUTE) or length // (dt * MS_PER_MINUTE) != spec.Q:
            raise GeometryError(f"window {window} does not hold Q={spec.Q} bins of {dt} min")
        spec = GenSpec(spec.pairs, spec.rates, spec.Q, spec.coupling_v, spec.factor_memory,
                       spec.trade_fraction, spec.seed, dt, iso_ms(window.start))
    p, d = gen_panel(spec)
    return panels_to_stream(p, d, spec.seed)


@dataclass(frozen=True)
class AnalyticMoments:
    mean: np.ndarray
    var: np.ndarray
    cov: np.ndarray
    corr: np.ndarray = field(repr=False)

    @property
    def global_corr(self) -> float:
        n = len(self.mean)
        return float(self.corr[np.triu_indices(n, 1)].mean())

    @property
    def implied_alpha(self) -> float:
        """Half the OLS slope of log var on log mean over the exact points.

        Tends to 1/2 when every rate is small compared with 1/v and to 1 when
        every rate is large.
        """
        slope, _, _ = ols(np.log(self.mean), np.log(self.var))
        return slope / 2


def analytic_moments(spec: GenSpec) -> AnalyticMoments:
    """Lag-0 quote moments: ``mean = rate``, ``var = rate + v*rate**2``,
    ``cov_ij = v*rate_i*rate_j``."""
    if spec.factor_memory != 0:
        raise NotImplementedError("closed forms are provided for factor_memory = 0 only")
    lam = np.asarray(spec.rates)
    v = spec.coupling_v
    var = lam + v * lam ** 2
    cov = v * np.outer(lam, lam)
    np.fill_diagonal(cov, var)
    corr = cov / np.sqrt(np.outer(var, var))
    return AnalyticMoments(lam.copy(), var, cov, corr)
