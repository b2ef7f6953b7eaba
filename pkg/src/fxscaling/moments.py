"""Temporal means, lagged covariances and correlation matrices.

Covariances use the full-series means and the biased ``1/(Q-|tau|)``
normalisation. For ``tau >= 0`` the product pairs ``x(k)`` with
``y(k+tau)``; for ``tau < 0`` it pairs ``x(k-tau)`` with ``y(k)``, so that
``cov(x, y, tau) == cov(y, x, -tau)``.

Two normalisations are offered for the correlation matrices:

``"lagged"`` (default)
    denominators are lag-``tau`` quantities: autocovariances for
    ``corr_matrix`` and each pair's own quote/trade covariance for
    ``pd_corr``.
``"standard"``
    denominators are lag-0 variances, ``sqrt(Var X_i * Var Y_j)``. Use this
    for lag profiles: at ``tau != 0`` this ratio compares two lagged
    quantities of the same factor and stays near 1 (or is noise over noise),
    so it carries no lag structure.

At ``tau = 0`` both coincide for ``corr_matrix``. Entries whose radicand is
not positive are undefined (NaN) and excluded from global averages, which
are renormalised over defined entries. Counts are integers, so the sign of
every denominator term is decided exactly; a covariance that is zero up to
rounding never produces a spurious huge ratio.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, GeometryError
from .panel import ActivityPanel


@dataclass(frozen=True)
class LaggedCov:
    value: float
    tau: int
    terms: int


@dataclass(frozen=True, eq=False)
class CorrSummary:
    tau: int
    pairs: tuple
    matrix: np.ndarray
    global_avg: float
    defined_fraction: float

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.matrix)

    def to_json(self) -> dict:
        return {"tau": self.tau, "pairs": list(self.pairs), "matrix": _nan_to_none(self.matrix),
                "global_avg": self.global_avg, "defined_fraction": self.defined_fraction}

    def to_csv(self) -> str:
        return _matrix_csv(self.pairs, self.matrix)


@dataclass(frozen=True, eq=False)
class PDCorrSummary(CorrSummary):
    pass


def _nan_to_none(m):
    return [[None if math.isnan(v) else v for v in row] for row in np.asarray(m).tolist()]


def _matrix_csv(pairs, matrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(pairs))
    for p, row in zip(pairs, np.asarray(matrix).tolist()):
        w.writerow([p] + ["" if math.isnan(v) else repr(v) for v in row])
    return buf.getvalue()


def mean(series) -> float:
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise DegenerateError("mean of an empty series")
    return float(x.sum() / x.size)


def _check_lag(q: int, tau: int):
    if abs(tau) >= q:
        raise GeometryError(f"|tau|={abs(tau)} must be below Q={q}")


def lagged_cov(x, y, tau: int) -> LaggedCov:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise GeometryError("x and y must be vectors of equal length")
    q = x.size
    tau = int(tau)
    _check_lag(q, tau)
    dx = x - mean(x)
    dy = y - mean(y)
    n = q - abs(tau)
    if tau >= 0:
        s = np.dot(dx[:n], dy[tau:])
    else:
        s = np.dot(dx[-tau:], dy[:n])
    return LaggedCov(float(s / n), tau, n)


def centered(counts) -> np.ndarray:
    x = np.asarray(counts, dtype=np.float64)
    return x - x.sum(axis=1, keepdims=True) / x.shape[1]


def lagged_cov_matrix(x, y, tau: int) -> np.ndarray:
    """``M[i, j] = Cov(x_i, y_j)(tau)`` for row-stacked series."""
    xc, yc = centered(x), centered(y)
    q = xc.shape[1]
    tau = int(tau)
    _check_lag(q, tau)
    n = q - abs(tau)
    if tau >= 0:
        return xc[:, :n] @ yc[:, tau:].T / n
    return xc[:, -tau:] @ yc[:, :n].T / n


NORMALISATIONS = ("lagged", "standard")


def _check_norm(normalization: str):
    if normalization not in NORMALISATIONS:
        raise ValueError(f"normalization must be one of {NORMALISATIONS}")


def _variances(x) -> np.ndarray:
    xc = centered(x)
    return np.einsum("ik,ik->i", xc, xc) / xc.shape[1]


def _exact_sign(x: np.ndarray, y: np.ndarray, tau: int) -> np.ndarray:
    """Exact sign of ``Cov(x_i, y_i)(tau)`` for integer rows.

    ``q**2 * n`` times the covariance is an integer; it is assembled from
    int64 sums with Python integers so nothing can overflow or round.
    """
    q = x.shape[1]
    n = q - abs(tau)
    xs, ys = (x[:, :n], y[:, tau:]) if tau >= 0 else (x[:, -tau:], y[:, :n])
    out = np.empty(x.shape[0], dtype=np.int64)
    for i in range(x.shape[0]):
        sx, sy = int(x[i].sum()), int(y[i].sum())
        num = (q * q * int(np.dot(xs[i], ys[i])) - q * sy * int(xs[i].sum())
               - q * sx * int(ys[i].sum()) + n * sx * sy)
        out[i] = (num > 0) - (num < 0)
    return out


def _normalise(cov: np.ndarray, rows: np.ndarray, cols: np.ndarray,
               row_sign: np.ndarray, col_sign: np.ndarray) -> np.ndarray:
    ok = np.multiply.outer(row_sign, col_sign) > 0
    radicand = np.abs(np.multiply.outer(rows, cols))
    out = np.full(cov.shape, np.nan)
    out[ok] = cov[ok] / np.sqrt(radicand[ok])
    return out


def _integer_counts(x) -> np.ndarray:
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.integer):
        raise TypeError("exact sign checks need integer counts")
    return x.astype(np.int64, copy=False)


def corr_matrix(panel: ActivityPanel, tau: int = 0, normalization: str = "lagged") -> CorrSummary:
    _check_norm(normalization)
    if panel.n_pairs < 2:
        raise DegenerateError("correlation matrix needs at least two pairs")
    x = _integer_counts(panel.counts)
    cov = lagged_cov_matrix(x, x, tau)
    if normalization == "lagged":
        diag, sign = np.diag(cov).copy(), _exact_sign(x, x, tau)
    else:
        diag, sign = _variances(x), (np.ptp(x, axis=1) > 0).astype(np.int64)
    c = _normalise(cov, diag, diag, sign, sign)
    if tau == 0:
        np.clip(c, -1.0, 1.0, out=c)  # rounding only; Cauchy-Schwarz holds at lag 0
    iu = np.triu_indices(panel.n_pairs, k=1)
    upper = c[iu]
    defined = ~np.isnan(upper)
    if not defined.any():
        raise DegenerateError("no off-diagonal correlation is defined")
    return CorrSummary(int(tau), panel.pairs, c, float(upper[defined].mean()),
                       float(defined.mean()))


def global_avg_corr(summary: CorrSummary) -> float:
    """Mean of the defined ``i < j`` entries of a lag-0 correlation matrix."""
    if summary.tau != 0:
        raise GeometryError("the global average is defined on simultaneous (tau=0) correlations")
    n = summary.matrix.shape[0]
    if n < 2:
        raise DegenerateError("need at least two pairs")
    upper = summary.matrix[np.triu_indices(n, k=1)]
    upper = upper[~np.isnan(upper)]
    if upper.size == 0:
        raise DegenerateError("no off-diagonal correlation is defined")
    return float(upper.mean())


def pd_corr(p_panel: ActivityPanel, d_panel: ActivityPanel, tau: int = 0,
            normalization: str = "lagged") -> PDCorrSummary:
    """Quote-vs-trade cross-correlation matrix ``PD[i, j] = Cov(P_i, D_j)(tau) / den``.

    With ``"lagged"`` the denominator uses each pair's own quote/trade
    covariance at the same lag, ``sqrt(Cov(P_i, D_i)(tau) * Cov(P_j, D_j)(tau))``;
    with ``"standard"`` it is ``sqrt(Var P_i * Var D_j)``.
    """
    _check_norm(normalization)
    if p_panel.pairs != d_panel.pairs or p_panel.dt != d_panel.dt or p_panel.window != d_panel.window:
        raise GeometryError("quote and trade panels must share pairs, dt and window")
    x, y = _integer_counts(p_panel.counts), _integer_counts(d_panel.counts)
    cov = lagged_cov_matrix(x, y, tau)
    if normalization == "lagged":
        rows = cols = np.diag(cov).copy()
        rsign = csign = _exact_sign(x, y, tau)
    else:
        rows, cols = _variances(x), _variances(y)
        rsign = (np.ptp(x, axis=1) > 0).astype(np.int64)
        csign = (np.ptp(y, axis=1) > 0).astype(np.int64)
    m = _normalise(cov, rows, cols, rsign, csign)
    if normalization == "standard" and tau == 0:
        np.clip(m, -1.0, 1.0, out=m)
    defined = ~np.isnan(m)
    if not defined.any():
        raise DegenerateError("no cross-correlation entry is defined")
    return PDCorrSummary(int(tau), p_panel.pairs, m, float(m[defined].mean()),
                         float(defined.mean()))


def summary_json(summary: CorrSummary) -> str:
    return json.dumps(summary.to_json())
