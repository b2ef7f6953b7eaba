"""Experiments built from the estimators: bin-width sweep, quote/trade lag
profile, weekly rolling study and the exponent-vs-correlation regression.

Per-window failures never abort a study; they become flagged rows carrying
the reason.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, FxScalingError, GeometryError
from .moments import CorrSummary, corr_matrix, pd_corr
from .panel import ActivityPanel, WindowPlan, bin_counts, rebin
from .scaling import BootstrapResult, ScalingFit, bootstrap_scaling, fit_scaling, ols
from .tickdata import Interval, Kind, TickStream, iso_ms


# -- dt sweep --------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    dt: int
    alpha: float
    global_corr: float
    normr: float
    flags: tuple = ()


@dataclass(frozen=True)
class SweepCurve:
    rows: tuple

    def __post_init__(self):
        dts = [r.dt for r in self.rows]
        if any(b <= a for a, b in zip(dts, dts[1:])):
            raise ValueError("sweep rows must have strictly increasing dt")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dt", "alpha", "global_corr", "normr"])
        for r in self.rows:
            w.writerow([r.dt, _num(r.alpha), _num(r.global_corr), _num(r.normr)])
        return buf.getvalue()


def _num(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def dt_sweep(base: ActivityPanel, dt_list, min_mean: float = 0.0) -> SweepCurve:
    """Rebin ``base`` to every ``dt`` and record alpha, <C> and normr."""
    dts = sorted(set(int(d) for d in dt_list))
    length = base.window.end - base.window.start
    for dt in dts:
        if dt < base.dt or dt % base.dt or length % (dt * 60_000):
            raise GeometryError(f"dt={dt} does not tile the {base.n_bins * base.dt}-minute window "
                                f"from a {base.dt}-minute base")
    rows = []
    for dt in dts:
        flags = []
        alpha = normr = gc = math.nan
        panel = rebin(base, dt)
        try:
            fit = fit_scaling(panel, min_mean)
            alpha, normr = fit.alpha, fit.normr
        except DegenerateError as exc:
            flags.append(f"fit: {exc}")
        try:
            gc = corr_matrix(panel, 0).global_avg
        except DegenerateError as exc:
            flags.append(f"corr: {exc}")
        rows.append(SweepRow(dt, alpha, gc, normr, tuple(flags)))
    return SweepCurve(tuple(rows))


# -- lag profile -----------------------------------------------------------

@dataclass(frozen=True)
class LagProfile:
    rows: tuple  # (tau, global_avg, defined_fraction, flag)

    @property
    def taus(self):
        return [r[0] for r in self.rows]

    @property
    def values(self):
        return [r[1] for r in self.rows]

    @property
    def argmax(self) -> int:
        vals = np.array(self.values, dtype=float)
        if np.all(np.isnan(vals)):
            raise DegenerateError("lag profile has no defined values")
        return int(self.rows[int(np.nanargmax(vals))][0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "global_avg"])
        for tau, val, _, _ in self.rows:
            w.writerow([tau, _num(val)])
        return buf.getvalue()


def pd_lag_profile(p_panel: ActivityPanel, d_panel: ActivityPanel, tau_range,
                   normalization: str = "standard") -> LagProfile:
    """<PD>(tau) for every integer lag in ``tau_range`` (inclusive).

    Defaults to lag-0 variance normalisation; see :mod:`fxscaling.moments`
    for why lag-``tau`` denominators flatten the profile.
    """
    lo, hi = tau_range
    if max(abs(lo), abs(hi)) >= p_panel.n_bins:
        raise GeometryError(f"lags must stay below Q={p_panel.n_bins}")
    rows = []
    for tau in range(int(lo), int(hi) + 1):
        try:
            s = pd_corr(p_panel, d_panel, tau, normalization)
            rows.append((tau, s.global_avg, s.defined_fraction, ""))
        except DegenerateError as exc:
            rows.append((tau, math.nan, 0.0, str(exc)))
    return LagProfile(tuple(rows))


# -- weekly rolling study --------------------------------------------------

@dataclass(frozen=True)
class RollingConfig:
    dt: int = 1
    B: int = 1000
    m: int = 100
    min_mean: float = 0.0
    seed: int = 0
    pairs: tuple | None = None
    threads: int = 1
    break_window: int = 8
    break_mads: float = 2.0


@dataclass
class WeekRow:
    label: str
    window: Interval
    fit_P: ScalingFit | None = None
    fit_D: ScalingFit | None = None
    corr_P: CorrSummary | None = None
    corr_D: CorrSummary | None = None
    pd_global: float | None = None
    bootstrap_P: BootstrapResult | None = None
    bootstrap_D: BootstrapResult | None = None
    flags: list = field(default_factory=list)

    def stat(self, kind: str, name: str):
        fit = getattr(self, f"fit_{kind}")
        corr = getattr(self, f"corr_{kind}")
        boot = getattr(self, f"bootstrap_{kind}")
        if name == "alpha":
            return None if fit is None else fit.alpha
        if name == "normr":
            return None if fit is None else fit.normr
        if name == "alpha_sd":
            return None if boot is None else boot.estimate_sd
        if name == "alpha_boot_mean":
            return None if boot is None else boot.estimate_mean
        if name == "avgcorr":
            return None if corr is None else corr.global_avg
        raise KeyError(name)

    def to_json(self) -> dict:
        def opt(x):
            return None if x is None else x.to_json()
        corr = lambda c: None if c is None else {"global_avg": c.global_avg,
                                                 "defined_fraction": c.defined_fraction}
        return {"label": self.label, "t0": iso_ms(self.window.start), "t1": iso_ms(self.window.end),
                "fit_P": opt(self.fit_P), "fit_D": opt(self.fit_D),
                "corr_P": corr(self.corr_P), "corr_D": corr(self.corr_D),
                "pd0": self.pd_global,
                "bootstrap_P": opt(self.bootstrap_P), "bootstrap_D": opt(self.bootstrap_D),
                "flags": list(self.flags)}


@dataclass
class RollingReport:
    weeks: list
    config: RollingConfig = field(default_factory=RollingConfig)

    def series(self, kind: str, name: str) -> list:
        return [w.stat(kind, name) for w in self.weeks]

    def regression(self, kind: str = "P") -> "RegressionResult":
        pts = [(a, c) for a, c in zip(self.series(kind, "alpha"), self.series(kind, "avgcorr"))
               if a is not None and c is not None]
        return alpha_corr_regression(pts)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(w.to_json(), sort_keys=True) + "\n" for w in self.weeks)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.weeks:
            w.writerow([row.label,
                        _num(row.stat("P", "alpha")), _num(row.stat("P", "alpha_sd")), _num(row.stat("P", "normr")),
                        _num(row.stat("D", "alpha")), _num(row.stat("D", "alpha_sd")), _num(row.stat("D", "normr")),
                        _num(row.stat("P", "avgcorr")), _num(row.stat("D", "avgcorr")),
                        _num(row.pd_global), ";".join(row.flags)])
        return buf.getvalue()


CSV_COLUMNS = ("week_label", "alpha_P", "alpha_P_sd", "normr_P", "alpha_D", "alpha_D_sd", "normr_D",
               "avgcorr_P", "avgcorr_D", "pd0", "flags")


def _pair_list(stream: TickStream, pairs) -> tuple:
    if pairs:
        return tuple(pairs)
    return tuple(sorted(stream.pair_universe))


def analyse_window(p: ActivityPanel, d: ActivityPanel, label: str, cfg: RollingConfig) -> WeekRow:
    """All per-week statistics for one pair of panels."""
    row = WeekRow(label, p.window)
    for kind, panel in (("P", p), ("D", d)):
        try:
            setattr(row, f"fit_{kind}", fit_scaling(panel, cfg.min_mean))
        except (DegenerateError, ValueError) as exc:
            row.flags.append(f"fit_{kind}: {exc}")
        try:
            setattr(row, f"corr_{kind}", corr_matrix(panel, 0))
        except DegenerateError as exc:
            row.flags.append(f"corr_{kind}: {exc}")
        if getattr(row, f"fit_{kind}") is not None and cfg.B > 0:
            try:
                setattr(row, f"bootstrap_{kind}",
                        bootstrap_scaling(panel, cfg.B, min(cfg.m, panel.n_bins), cfg.seed, cfg.min_mean))
            except (DegenerateError, ValueError) as exc:
                row.flags.append(f"bootstrap_{kind}: {exc}")
    try:
        row.pd_global = pd_corr(p, d, 0).global_avg
    except DegenerateError as exc:
        row.flags.append(f"pd0: {exc}")
    return row


def _week(stream: TickStream, label: str, window: Interval, pairs: tuple, cfg: RollingConfig) -> WeekRow:
    try:
        p = bin_counts(stream, Kind.QUOTE, cfg.dt, window, pairs)
        d = bin_counts(stream, Kind.TRADE, cfg.dt, window, pairs)
    except FxScalingError as exc:
        return WeekRow(label, window, flags=[f"panel: {exc}"])
    if not p.counts.any() and not d.counts.any():
        return WeekRow(label, window, flags=["panel: no events in window"])
    return analyse_window(p, d, label, cfg)


def rolling_weekly(stream: TickStream, plan: WindowPlan, config: RollingConfig | None = None) -> RollingReport:
    cfg = config or RollingConfig()
    pairs = _pair_list(stream, cfg.pairs)
    jobs = list(plan)
    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            weeks = list(pool.map(lambda job: _week(stream, job[0], job[1], pairs, cfg), jobs))
    else:
        weeks = [_week(stream, label, w, pairs, cfg) for label, w in jobs]
    weeks.sort(key=lambda w: w.window.start)
    for kind in ("P", "D"):
        flags = scaling_break_flags([w.stat(kind, "normr") for w in weeks],
                                    cfg.break_window, cfg.break_mads)
        for w, hit in zip(weeks, flags):
            if hit:
                w.flags.append(f"scaling_break_{kind}")
    return RollingReport(weeks, cfg)


def scaling_break_flags(normr, window: int = 8, n_mads: float = 2.0, min_history: int = 3) -> list:
    """Flag entries exceeding median + ``n_mads`` * MAD of the preceding
    ``window`` defined values. Needs ``min_history`` prior values to flag."""
    out = []
    hist = []
    for v in normr:
        hit = False
        if v is not None and not math.isnan(v):
            past = np.array(hist[-window:])
            if past.size >= min_history:
                med = np.median(past)
                mad = np.median(np.abs(past - med))
                hit = bool(v > med + n_mads * mad)
            hist.append(v)
        out.append(hit)
    return out


# -- alpha vs <C> regression -----------------------------------------------

@dataclass(frozen=True)
class RegressionResult:
    a: float
    b: float
    rms: float
    pearson_r: float
    n: int

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "rms": self.rms, "pearson_r": self.pearson_r, "n": self.n}


def alpha_corr_regression(points) -> RegressionResult:
    """OLS of <C> on alpha. ``rms`` is the root of the summed (not averaged)
    squared residuals."""
    pts = np.asarray(list(points), dtype=np.float64).reshape(-1, 2)
    if len(pts) < 2:
        raise DegenerateError("regression needs at least two points")
    x, y = pts[:, 0], pts[:, 1]
    try:
        a, b, resid = ols(x, y)
    except DegenerateError:
        raise DegenerateError("alpha series has zero variance") from None
    dx, dy = x - x.mean(), y - y.mean()
    syy = float(np.dot(dy, dy))
    r = float(np.dot(dx, dy) / math.sqrt(float(np.dot(dx, dx)) * syy)) if syy > 0 else math.nan
    if not math.isnan(r):
        r = max(-1.0, min(1.0, r))
    return RegressionResult(a, b, float(math.sqrt(np.dot(resid, resid))), r, len(pts))


def report_from_jsonl(text: str) -> list:
    return [json.loads(ln) for ln in text.splitlines() if ln.strip()]


def regression_points_from_rows(rows, kind: str = "P") -> list:
    """(alpha, <C>) pairs from JSON report rows, skipping weeks where either is missing."""
    pts = []
    for row in rows:
        fit, corr = row.get(f"fit_{kind}"), row.get(f"corr_{kind}")
        if fit and corr and fit.get("alpha") is not None and corr.get("global_avg") is not None:
            pts.append((fit["alpha"], corr["global_avg"]))
    return pts
