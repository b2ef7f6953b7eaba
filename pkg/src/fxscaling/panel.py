"""Count panels: events per pair per bin of width ``dt`` minutes.

Bins are half-open, ``[t0 + k*dt, t0 + (k+1)*dt)``. Pairs without events in
the window keep an all-zero row so panel geometry is stable across windows.
"""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import CoverageError, EmptyPlanError, GeometryError
from .tickdata import MS_PER_MINUTE, Interval, Kind, TickStream, iso_ms, to_ms

WEEK_MINUTES = 10_080
FXP_MAGIC = b"FXP1"

_WEEKDAYS = ("MON", "TUE", "WED", "THU", "FRI", "SAT", "SUN")


@dataclass(frozen=True, eq=False)
class ActivityPanel:
    kind: Kind
    dt: int
    window: Interval
    pairs: tuple
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        object.__setattr__(self, "pairs", tuple(self.pairs))
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != len(self.pairs):
            raise GeometryError(f"counts shape {counts.shape} does not match {len(self.pairs)} pairs")
        if self.dt <= 0:
            raise GeometryError("bin width must be positive")
        length = self.window.end - self.window.start
        if length % (self.dt * MS_PER_MINUTE):
            raise GeometryError(f"window of {length / MS_PER_MINUTE:g} min is not a multiple of dt={self.dt}")
        q = length // (self.dt * MS_PER_MINUTE)
        if counts.shape[1] != q:
            raise GeometryError(f"expected {q} bins, got {counts.shape[1]}")
        if q < 2:
            raise GeometryError("a panel needs at least two bins")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_bins(self) -> int:
        return self.counts.shape[1]

    def with_counts(self, counts, pairs=None) -> "ActivityPanel":
        return ActivityPanel(self.kind, self.dt, self.window,
                             self.pairs if pairs is None else pairs, counts)

    def __eq__(self, other):
        if not isinstance(other, ActivityPanel):
            return NotImplemented
        return (self.kind == other.kind and self.dt == other.dt and self.window == other.window
                and self.pairs == other.pairs and np.array_equal(self.counts, other.counts))

    __hash__ = None


@dataclass(frozen=True)
class WindowPlan:
    windows: tuple
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(week_label(w) for w in self.windows))
        if len(self.labels) != len(self.windows):
            raise ValueError("one label per window required")
        lengths = {w.end - w.start for w in self.windows}
        if len(lengths) > 1:
            raise GeometryError("windows must have equal length")
        for a, b in zip(self.windows, self.windows[1:]):
            if b.start < a.end:
                raise GeometryError("windows must be disjoint and ordered")

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(zip(self.labels, self.windows))


def week_label(window: Interval) -> str:
    """ISO week of the window midpoint, unique for consecutive 7-day windows."""
    mid = datetime.fromtimestamp((window.start + window.end) / 2000, tz=timezone.utc)
    return mid.strftime("%G-W%V")


def bin_counts(stream: TickStream, kind, dt: int, window: Interval, pairs) -> ActivityPanel:
    kind = Kind.parse(kind)
    pairs = tuple(pairs)
    if not pairs:
        raise ValueError("pair list is empty")
    if len(set(pairs)) != len(pairs):
        raise ValueError("duplicate pair in pair list")
    width = int(dt) * MS_PER_MINUTE
    if dt <= 0 or (window.end - window.start) % width:
        raise GeometryError(f"window {window} is not divisible into {dt}-minute bins")
    if not stream.span.contains(window):
        raise CoverageError(f"window {window} lies outside stream span {stream.span}")
    q = (window.end - window.start) // width

    lo, hi = np.searchsorted(stream.timestamps, [window.start, window.end], side="left")
    ts = stream.timestamps[lo:hi]
    sel = stream.kinds[lo:hi] == kind.code
    # map stream pair indices onto panel rows, -1 for pairs not requested
    row_of = np.full(len(stream.pair_table), -1, dtype=np.int64)
    for r, p in enumerate(pairs):
        try:
            row_of[stream.pair_table.index(p)] = r
        except ValueError:
            pass
    rows = row_of[stream.pair_idx[lo:hi]]
    sel &= rows >= 0
    bins = (ts[sel] - window.start) // width
    flat = rows[sel] * q + bins
    counts = np.bincount(flat, minlength=len(pairs) * q).reshape(len(pairs), q)
    return ActivityPanel(kind, int(dt), window, pairs, counts)


def parse_anchor(anchor) -> tuple | None:
    """``"SUN@00:00"`` -> (6, 0); ``None``/``"data"`` -> None (anchor at span start)."""
    if anchor is None or (isinstance(anchor, str) and anchor.lower() in ("data", "start", "none")):
        return None
    if isinstance(anchor, tuple):
        return anchor
    day, _, hhmm = str(anchor).partition("@")
    day = day.strip().upper()[:3]
    if day not in _WEEKDAYS:
        raise ValueError(f"unknown weekday in anchor {anchor!r}")
    hh, _, mm = (hhmm or "00:00").partition(":")
    minute = int(hh) * 60 + int(mm or 0)
    if not 0 <= minute < 1440:
        raise ValueError(f"anchor time out of range in {anchor!r}")
    return _WEEKDAYS.index(day), minute


def first_anchor(start_ms: int, anchor=("SUN", 0)) -> int:
    parsed = parse_anchor(anchor)
    if parsed is None:
        return start_ms
    weekday, minute = parsed
    t = datetime.fromtimestamp(start_ms / 1000, tz=timezone.utc)
    midnight = t.replace(hour=0, minute=0, second=0, microsecond=0)
    cand = midnight + timedelta(days=(weekday - t.weekday()) % 7, minutes=minute)
    while to_ms(cand) < start_ms:
        cand += timedelta(days=7)
    while to_ms(cand - timedelta(days=7)) >= start_ms:
        cand -= timedelta(days=7)
    return to_ms(cand)


def plan_weeks(span: Interval, week_anchor="SUN@00:00", week_minutes: int = WEEK_MINUTES) -> WindowPlan:
    """Maximal run of whole weeks starting at successive anchors inside ``span``."""
    length = week_minutes * MS_PER_MINUTE
    t = first_anchor(span.start, week_anchor)
    windows = []
    while t + length <= span.end:
        windows.append(Interval(t, t + length))
        t += length
    if not windows:
        raise EmptyPlanError(f"span {span} holds no whole week from anchor {week_anchor!r}")
    return WindowPlan(tuple(windows))


def partial_fragments(span: Interval, plan: WindowPlan) -> list:
    """Leading/trailing pieces of ``span`` not covered by whole planned weeks."""
    out = []
    if not plan.windows:
        return [span] if span.end > span.start else []
    if span.start < plan.windows[0].start:
        out.append(Interval(span.start, plan.windows[0].start))
    if plan.windows[-1].end < span.end:
        out.append(Interval(plan.windows[-1].end, span.end))
    return out


def rebin(panel: ActivityPanel, dt_new: int) -> ActivityPanel:
    if dt_new <= 0 or dt_new % panel.dt:
        raise GeometryError(f"dt={dt_new} is not a multiple of dt={panel.dt}")
    group = dt_new // panel.dt
    if panel.n_bins % group:
        raise GeometryError(f"{panel.n_bins} bins cannot be grouped by {group}")
    if group == 1:
        return panel
    counts = panel.counts.reshape(panel.n_pairs, panel.n_bins // group, group).sum(axis=2)
    return ActivityPanel(panel.kind, int(dt_new), panel.window, panel.pairs, counts)


def sub_panel(panel: ActivityPanel, pairs) -> ActivityPanel:
    rows = [panel.pairs.index(p) for p in pairs]
    return panel.with_counts(panel.counts[rows], tuple(pairs))


# -- serialization ---------------------------------------------------------

def panel_meta(panel: ActivityPanel) -> dict:
    return {"kind": panel.kind.value, "dt_minutes": panel.dt,
            "t0": iso_ms(panel.window.start), "t1": iso_ms(panel.window.end)}


def write_panel_csv(panel: ActivityPanel, path) -> None:
    """Write ``path`` (CSV) and ``path + '.json'`` (geometry sidecar)."""
    path = Path(path)
    path.write_text(panel_to_csv(panel))
    Path(str(path) + ".json").write_text(json.dumps(panel_meta(panel), indent=1) + "\n")


def panel_to_csv(panel: ActivityPanel) -> str:
    buf = io.StringIO()
    buf.write(",".join(["pair"] + [f"bin_{k}" for k in range(panel.n_bins)]) + "\n")
    for p, row in zip(panel.pairs, panel.counts.tolist()):
        buf.write(p + "," + ",".join(map(str, row)) + "\n")
    return buf.getvalue()


def panel_from_csv(text: str, meta: dict | None = None) -> ActivityPanel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("pair"):
        raise GeometryError("panel CSV must start with a 'pair,bin_0,...' header")
    pairs, rows = [], []
    for ln in lines[1:]:
        cells = ln.split(",")
        pairs.append(cells[0].strip())
        rows.append([int(c) for c in cells[1:]])
    counts = np.array(rows, dtype=np.int64)
    meta = dict(meta or {})
    dt = int(meta.get("dt_minutes", 1))
    t0 = to_ms(meta.get("t0", 0))
    t1 = to_ms(meta["t1"]) if "t1" in meta else t0 + counts.shape[1] * dt * MS_PER_MINUTE
    return ActivityPanel(Kind.parse(meta.get("kind", "Q")), dt, Interval(t0, t1), tuple(pairs), counts)


def read_panel_csv(path) -> ActivityPanel:
    """Read a panel CSV; a missing sidecar means ``dt=1``, epoch start, quotes."""
    path = Path(path)
    side = Path(str(path) + ".json")
    meta = json.loads(side.read_text()) if side.exists() else None
    return panel_from_csv(path.read_text(), meta)


def panel_to_bytes(panel: ActivityPanel) -> bytes:
    """Binary layout: ``FXP1``, u32 LE header length, UTF-8 JSON header
    (sidecar fields plus ``pairs``, ``n_bins``), then one little-endian int64
    column of ``n_bins`` counts per pair, in ``pairs`` order."""
    header = dict(panel_meta(panel), pairs=list(panel.pairs), n_bins=panel.n_bins)
    hb = json.dumps(header, separators=(",", ":")).encode()
    return FXP_MAGIC + struct.pack("<I", len(hb)) + hb + panel.counts.astype("<i8").tobytes()


def panel_from_bytes(data: bytes) -> ActivityPanel:
    if data[:4] != FXP_MAGIC:
        raise GeometryError("not an FXP1 panel file")
    (hlen,) = struct.unpack("<I", data[4:8])
    header = json.loads(data[8:8 + hlen].decode())
    n, q = len(header["pairs"]), header["n_bins"]
    body = np.frombuffer(data[8 + hlen:], dtype="<i8")
    if body.size != n * q:
        raise GeometryError(f"FXP1 body holds {body.size} counts, expected {n * q}")
    return ActivityPanel(Kind.parse(header["kind"]), int(header["dt_minutes"]),
                         Interval.of(header["t0"], header["t1"]), tuple(header["pairs"]),
                         body.reshape(n, q).astype(np.int64))


def read_panel(path) -> ActivityPanel:
    """Read either panel format, dispatching on the magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == FXP_MAGIC:
        return panel_from_bytes(path.read_bytes())
    return read_panel_csv(path)
