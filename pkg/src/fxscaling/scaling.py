"""Fluctuation-scaling fits and bootstrap dispersion.

The fit regresses ``log Var_i`` on ``log Mean_i`` (natural logs) by ordinary
least squares: slope ``2*alpha``, intercept ``log A``. ``normr`` is the root of
the summed squared residuals.

Bootstrap replicates draw from per-replicate Philox streams derived from
``(seed, replicate)``, so any replicate can be regenerated on its own and the
result does not depend on evaluation order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BootstrapDegeneracyError, DegenerateError, InsufficientDataError
from .panel import ActivityPanel

RETRY_CAP = 10
MAX_FAILED_FRACTION = 0.10
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class ScalingFit:
    A: float
    alpha: float
    normr: float
    n_used: int
    excluded: tuple = ()
    points: tuple = ()
    pairs_used: tuple = ()

    @property
    def log_A(self) -> float:
        return float(np.log(self.A))

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "A": self.A, "normr": self.normr, "n_used": self.n_used,
                "excluded": [{"pair": p, "reason": r} for p, r in self.excluded],
                "points": [list(pt) for pt in self.points]}


@dataclass(frozen=True)
class BootstrapResult:
    estimate_mean: float
    estimate_sd: float
    n_replicates: int
    points_per_replicate: int
    seed: int
    n_failed: int = 0
    replicates: np.ndarray = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {"mean": self.estimate_mean, "sd": self.estimate_sd, "B": self.n_replicates,
                "m": self.points_per_replicate, "seed": self.seed}


def replicate_rng(seed: int, replicate: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(replicate)))
    return np.random.Generator(np.random.Philox(ss))


def ols(x, y):
    """Slope, intercept and residuals of ``y ~ x``; two-pass centred sums."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(np.dot(dx, dx))
    if sxx <= 0.0:
        raise DegenerateError("regressor has zero spread")
    slope = float(np.dot(dx, y - ym)) / sxx
    intercept = float(ym - slope * xm)
    return slope, intercept, y - (intercept + slope * x)


def scaling_points(counts, pairs, min_mean: float = 0.0):
    """Usable ``(log mean, log variance)`` points plus exclusions with reasons."""
    x = np.asarray(counts, dtype=np.float64)
    mu = x.sum(axis=1) / x.shape[1]
    dev = x - mu[:, None]
    var = np.einsum("ij,ij->i", dev, dev) / x.shape[1]
    used, excluded = [], []
    for i, p in enumerate(pairs):
        if not mu[i] > min_mean:
            excluded.append((p, f"mean {mu[i]:.6g} <= min_mean {min_mean:g}"))
        elif not var[i] > 0:
            excluded.append((p, "zero variance"))
        else:
            used.append(i)
    used = np.asarray(used, dtype=np.int64)
    return used, np.log(mu[used]), np.log(var[used]), excluded


def fit_scaling(panel: ActivityPanel, min_mean: float = 0.0) -> ScalingFit:
    if min_mean < 0:
        raise ValueError("min_mean must be non-negative")
    used, lx, ly, excluded = scaling_points(panel.counts, panel.pairs, min_mean)
    if used.size < 2:
        raise InsufficientDataError(f"only {used.size} pair(s) usable for the scaling fit")
    try:
        slope, intercept, resid = ols(lx, ly)
    except DegenerateError:
        raise DegenerateError("all usable pairs have the same mean activity") from None
    return ScalingFit(A=float(np.exp(intercept)), alpha=slope / 2,
                      normr=float(np.sqrt(np.dot(resid, resid))), n_used=int(used.size),
                      excluded=tuple(excluded),
                      points=tuple(zip(lx.tolist(), ly.tolist())),
                      pairs_used=tuple(panel.pairs[i] for i in used))


def _batch_alpha(sub: np.ndarray, min_mean: float) -> np.ndarray:
    """Alpha for each replicate of ``sub`` (shape replicates x pairs x m); NaN if degenerate."""
    m = sub.shape[-1]
    mu = sub.sum(axis=-1) / m
    dev = sub - mu[..., None]
    var = np.einsum("rim,rim->ri", dev, dev) / m
    ok = (mu > min_mean) & (var > 0)
    w = ok.astype(np.float64)
    n = w.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.where(ok, np.log(np.where(ok, mu, 1.0)), 0.0)
        ly = np.where(ok, np.log(np.where(ok, var, 1.0)), 0.0)
        xm = (w * lx).sum(axis=1) / n
        ym = (w * ly).sum(axis=1) / n
        dx = w * (lx - xm[:, None])
        sxx = (dx * dx).sum(axis=1)
        sxy = (dx * (ly - ym[:, None])).sum(axis=1)
        alpha = sxy / sxx / 2
    spread_ok = sxx > 1e-12 * np.maximum(1.0, n)
    return np.where((n >= 2) & spread_ok, alpha, np.nan)


def _summarise(values: np.ndarray, B: int, m: int, seed: int, failed: int) -> BootstrapResult:
    good = values[~np.isnan(values)]
    sd = float(good.std(ddof=1)) if good.size > 1 else 0.0
    return BootstrapResult(float(good.mean()), sd, B, m, int(seed), failed, values)


def bootstrap_scaling(panel: ActivityPanel, B: int = 1000, m: int = 100, seed: int = 0,
                      min_mean: float = 0.0) -> BootstrapResult:
    """m-out-of-n bootstrap of alpha: each replicate resamples ``m`` bins with
    replacement (the same bins for every pair) and refits."""
    q = panel.n_bins
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 2 <= m <= q:
        raise ValueError(f"m must lie in [2, {q}]")
    counts = panel.counts
    rngs = [replicate_rng(seed, r) for r in range(B)]
    alphas = np.empty(B)
    chunk = max(1, _CHUNK_ELEMS // (panel.n_pairs * m))
    for lo in range(0, B, chunk):
        hi = min(B, lo + chunk)
        idx = np.stack([rngs[r].integers(0, q, size=m) for r in range(lo, hi)])
        sub = counts[:, idx].transpose(1, 0, 2)
        alphas[lo:hi] = _batch_alpha(sub, min_mean)
    failed = 0
    for r in np.flatnonzero(np.isnan(alphas)):
        for _ in range(RETRY_CAP):
            idx = rngs[r].integers(0, q, size=m)
            a = _batch_alpha(counts[:, idx][None], min_mean)[0]
            if not np.isnan(a):
                alphas[r] = a
                break
        else:
            failed += 1
    if failed > MAX_FAILED_FRACTION * B or failed == B:
        raise BootstrapDegeneracyError(f"{failed} of {B} bootstrap replicates had fewer than two usable pairs")
    return _summarise(alphas, B, m, seed, failed)


def bootstrap_moments(series, B: int = 1000, seed: int = 0) -> dict:
    """Bootstrap mean and standard deviation of a single count series.

    Returns ``{"mean": BootstrapResult, "sd": BootstrapResult}``; the standard
    deviation statistic is the population form, matching the lag-0
    covariance. A two-SD error bar is ``2 * result.estimate_sd``.
    """
    x = np.asarray(series, dtype=np.float64)
    q = x.size
    if B < 1:
        raise ValueError("B must be at least 1")
    if q < 2:
        raise ValueError("series needs at least two points")
    if np.ptp(x) == 0:
        zero = np.zeros(B)
        return {"mean": _summarise(zero + x[0], B, q, seed, 0), "sd": _summarise(zero, B, q, seed, 0)}
    means = np.empty(B)
    sds = np.empty(B)
    chunk = max(1, _CHUNK_ELEMS // q)
    for lo in range(0, B, chunk):
        hi = min(B, lo + chunk)
        idx = np.stack([replicate_rng(seed, r, stream=1).integers(0, q, size=q) for r in range(lo, hi)])
        s = x[idx]
        mu = s.sum(axis=1) / q
        dev = s - mu[:, None]
        means[lo:hi] = mu
        sds[lo:hi] = np.sqrt(np.einsum("rk,rk->r", dev, dev) / q)
    return {"mean": _summarise(means, B, q, seed, 0), "sd": _summarise(sds, B, q, seed, 0)}
