"""Tick event model, tick CSV parsing and pair filtering.

A tick file holds one event per line::

    2008-08-03T08:38:00.000Z,EUR/USD,Q

Timestamps are UTC, the pair is ``AAA/BBB`` (three uppercase alphanumerics on
each side) and the kind is ``Q`` (quote) or ``T`` (trade). Extra trailing
columns are ignored. A header line is recognised by a leading non-digit.

Internally a :class:`TickStream` is columnar: int64 millisecond timestamps,
an index into the pair table and a uint8 kind code. The arrays are marked
read-only so a stream can be shared between threads.
"""
from __future__ import annotations

import enum
import io
import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import BinaryIO, Iterable, Iterator, Union

import numpy as np

from .errors import EmptyStreamError, OrderingError, ParseError, SelectionError

MS_PER_MINUTE = 60_000
REJECT_BUDGET = 0.01

PAIR_RE = re.compile(r"^[A-Z0-9]{3}/[A-Z0-9]{3}$")
_LINE_RE = re.compile(
    r"^\s*(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}(?::\d{2}(?:\.\d{1,3})?)?)(Z|\+00:00)?\s*,"
    r"\s*([^,\s]*)\s*,\s*([^,\s]*)\s*(?:,.*)?$"
)


class Kind(enum.Enum):
    QUOTE = "Q"
    TRADE = "T"

    @property
    def code(self) -> int:
        return 0 if self is Kind.QUOTE else 1

    @classmethod
    def parse(cls, value) -> "Kind":
        if isinstance(value, Kind):
            return value
        v = str(value).strip().upper()
        aliases = {"Q": cls.QUOTE, "QUOTE": cls.QUOTE, "P": cls.QUOTE,
                   "T": cls.TRADE, "TRADE": cls.TRADE, "D": cls.TRADE}
        try:
            return aliases[v]
        except KeyError:
            raise ValueError(f"unknown event kind {value!r}") from None


class OrderPolicy(enum.Enum):
    STRICT = "strict"
    SORT_LENIENT = "sort"


# -- time helpers ----------------------------------------------------------

TimeLike = Union[int, str, datetime, np.datetime64]


def to_ms(t: TimeLike) -> int:
    """Milliseconds since the Unix epoch for an ISO string, datetime or int."""
    if isinstance(t, (int, np.integer)):
        return int(t)
    if isinstance(t, np.datetime64):
        return int(t.astype("datetime64[ms]").astype(np.int64))
    if isinstance(t, str):
        s = t.strip()
        if s.endswith("Z"):
            s = s[:-1] + "+00:00"
        t = datetime.fromisoformat(s)
    if isinstance(t, datetime):
        if t.tzinfo is None:
            t = t.replace(tzinfo=timezone.utc)
        delta = t - datetime(1970, 1, 1, tzinfo=timezone.utc)
        return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000
    raise TypeError(f"cannot convert {type(t).__name__} to a timestamp")


def iso_ms(ms: int) -> str:
    """Canonical ``YYYY-MM-DDTHH:MM:SS.mmmZ`` rendering."""
    return str(np.datetime64(int(ms), "ms")) + "Z"


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open UTC interval ``[start, end)`` in epoch milliseconds."""

    start: int
    end: int

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError("interval end precedes start")

    @classmethod
    def of(cls, start: TimeLike, end: TimeLike) -> "Interval":
        return cls(to_ms(start), to_ms(end))

    @property
    def minutes(self) -> float:
        return (self.end - self.start) / MS_PER_MINUTE

    def contains(self, other: "Interval") -> bool:
        return self.start <= other.start and other.end <= self.end

    def __str__(self):
        return f"[{iso_ms(self.start)}, {iso_ms(self.end)})"


# -- events and streams ----------------------------------------------------

@dataclass(frozen=True)
class TickEvent:
    timestamp: int
    pair: str
    kind: Kind

    def __post_init__(self):
        if not PAIR_RE.match(self.pair):
            raise ValueError(f"malformed pair code {self.pair!r}")
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind.parse(self.kind))

    @classmethod
    def from_line(cls, line: str) -> "TickEvent":
        stream = parse_tick_file(io.BytesIO(line.encode()), OrderPolicy.STRICT)
        return next(iter(stream))

    def to_line(self) -> str:
        return f"{iso_ms(self.timestamp)},{self.pair},{self.kind.value}"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TickStream:
    """Time-ordered columnar event store.

    ``pair_table`` is sorted; ``pair_idx`` indexes into it. ``pair_universe``
    is the set of pairs that actually occur.
    """

    timestamps: np.ndarray
    pair_idx: np.ndarray
    kinds: np.ndarray
    pair_table: tuple
    span: Interval
    rejects: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "timestamps", _frozen(np.asarray(self.timestamps, dtype=np.int64)))
        object.__setattr__(self, "pair_idx", _frozen(np.asarray(self.pair_idx, dtype=np.int32)))
        object.__setattr__(self, "kinds", _frozen(np.asarray(self.kinds, dtype=np.uint8)))
        n = len(self.timestamps)
        if not (len(self.pair_idx) == len(self.kinds) == n):
            raise ValueError("column lengths differ")
        if n:
            if np.any(np.diff(self.timestamps) < 0):
                raise ValueError("events are not time-ordered")
            if self.timestamps[0] < self.span.start or self.timestamps[-1] >= self.span.end:
                raise ValueError("event outside stream span")

    def __len__(self):
        return len(self.timestamps)

    def __iter__(self) -> Iterator[TickEvent]:
        kinds = (Kind.QUOTE, Kind.TRADE)
        for t, p, k in zip(self.timestamps.tolist(), self.pair_idx.tolist(), self.kinds.tolist()):
            yield TickEvent(t, self.pair_table[p], kinds[k])

    @property
    def events(self) -> list:
        return list(self)

    @property
    def pair_universe(self) -> frozenset:
        present = np.unique(self.pair_idx)
        return frozenset(self.pair_table[i] for i in present)

    @classmethod
    def from_events(cls, events: Iterable[TickEvent], span: Interval | None = None) -> "TickStream":
        events = sorted(events, key=lambda e: e.timestamp)
        table = tuple(sorted({e.pair for e in events}))
        lookup = {p: i for i, p in enumerate(table)}
        ts = np.array([e.timestamp for e in events], dtype=np.int64)
        if span is None:
            span = _default_span(ts)
        return cls(ts,
                   np.array([lookup[e.pair] for e in events], dtype=np.int32),
                   np.array([e.kind.code for e in events], dtype=np.uint8),
                   table, span)

    def same_events(self, other: "TickStream") -> bool:
        """Event-for-event equality, ignoring pair-table layout and rejects."""
        if len(self) != len(other):
            return False
        mine = np.asarray(self.pair_table, dtype=object)[self.pair_idx]
        theirs = np.asarray(other.pair_table, dtype=object)[other.pair_idx]
        return (np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.kinds, other.kinds)
                and bool(np.all(mine == theirs)))

    def rejects_json(self) -> str:
        return json.dumps([{"line_number": n, "reason": r} for n, r in self.rejects])


def _default_span(ts: np.ndarray) -> Interval:
    # minute-aligned so that bin grids starting on whole minutes are covered
    if len(ts) == 0:
        return Interval(0, 0)
    lo = int(ts[0]) // MS_PER_MINUTE * MS_PER_MINUTE
    hi = -(-(int(ts[-1]) + 1) // MS_PER_MINUTE) * MS_PER_MINUTE
    return Interval(lo, hi)


# -- parsing ---------------------------------------------------------------

def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str):
        with open(source, "rb") as fh:
            data = fh.read()
    elif hasattr(source, "read"):
        data = source.read()
    else:
        data = b"".join(source)
    if isinstance(data, str):
        return data
    return data.decode("utf-8")


def parse_tick_file(source: BinaryIO | bytes | str, policy: OrderPolicy = OrderPolicy.STRICT,
                    span: Interval | None = None) -> TickStream:
    """Parse tick CSV into a :class:`TickStream`.

    ``source`` may be a binary file object, raw bytes, an iterable of byte
    lines or a filesystem path. Malformed lines are collected into
    ``stream.rejects`` as ``(line_number, reason)``; more than 1% rejects is
    fatal. Under ``STRICT`` the first decreasing timestamp raises
    :class:`OrderingError`; under ``SORT_LENIENT`` events are stably sorted.

    Without an explicit ``span`` the stream span is the smallest
    minute-aligned interval containing every event.
    """
    policy = OrderPolicy(policy)
    lines = _read_text(source).splitlines()
    first = 0
    while first < len(lines) and not lines[first].strip():
        first += 1
    if first < len(lines) and not lines[first].lstrip()[:1].isdigit():
        first += 1  # header

    stamps, pairs, kinds, line_nos = [], [], [], []
    rejects = []
    n_records = 0
    match = _LINE_RE.match
    for lineno in range(first + 1, len(lines) + 1):
        line = lines[lineno - 1]
        if not line.strip():
            continue
        n_records += 1
        m = match(line)
        if m is None:
            rejects.append((lineno, "unparseable record"))
            continue
        stamp, _, pair, kind = m.groups()
        if kind not in ("Q", "T"):
            rejects.append((lineno, f"unknown kind {kind!r}"))
            continue
        if not PAIR_RE.match(pair):
            rejects.append((lineno, f"malformed pair {pair!r}"))
            continue
        stamps.append(stamp)
        pairs.append(pair)
        kinds.append(kind == "T")
        line_nos.append(lineno)

    if n_records == 0:
        raise EmptyStreamError("tick input contains no records")

    try:
        ts = np.array(stamps, dtype="datetime64[ms]").astype(np.int64)
    except ValueError:
        # locate the bad timestamps one at a time
        good = []
        for i, s in enumerate(stamps):
            try:
                np.datetime64(s, "ms")
                good.append(i)
            except ValueError:
                rejects.append((line_nos[i], f"invalid timestamp {s!r}"))
        stamps = [stamps[i] for i in good]
        pairs = [pairs[i] for i in good]
        kinds = [kinds[i] for i in good]
        line_nos = [line_nos[i] for i in good]
        ts = np.array(stamps, dtype="datetime64[ms]").astype(np.int64)
    rejects.sort()

    if len(rejects) > REJECT_BUDGET * n_records:
        raise ParseError(f"{len(rejects)} of {n_records} lines rejected (budget "
                         f"{REJECT_BUDGET:.0%})", rejects)
    if len(ts) == 0:
        raise EmptyStreamError("tick input contains no valid records", rejects)

    if len(ts) > 1:
        bad = np.flatnonzero(np.diff(ts) < 0)
        if bad.size:
            if policy is OrderPolicy.STRICT:
                raise OrderingError(line_nos[bad[0] + 1])
            order = np.argsort(ts, kind="stable")
            ts = ts[order]
            pairs = [pairs[i] for i in order]
            kinds = [kinds[i] for i in order]

    table, idx = np.unique(np.asarray(pairs, dtype=object), return_inverse=True)
    if span is None:
        span = _default_span(ts)
    return TickStream(ts, idx.astype(np.int32), np.asarray(kinds, dtype=np.uint8),
                      tuple(table.tolist()), span, tuple(rejects))


def write_tick_csv(stream: TickStream, dest: BinaryIO | None = None, header: bool = False) -> bytes:
    """Serialise a stream in canonical form; returns the bytes written."""
    stamps = np.datetime_as_string(stream.timestamps.astype("datetime64[ms]"), unit="ms")
    table = stream.pair_table
    kind_chr = ("Q", "T")
    out = [f"{s}Z,{table[p]},{kind_chr[k]}"
           for s, p, k in zip(stamps.tolist(), stream.pair_idx.tolist(), stream.kinds.tolist())]
    if header:
        out.insert(0, "timestamp,pair,kind")
    data = ("\n".join(out) + "\n").encode() if out else b""
    if dest is not None:
        dest.write(data)
    return data


def filter_pairs(stream: TickStream, include) -> TickStream:
    """Keep only events whose pair is in ``include``; span is unchanged."""
    include = set(include)
    if not include:
        raise ValueError("include set is empty")
    if not include & stream.pair_universe:
        raise SelectionError(f"none of {sorted(include)} occur in the stream")
    keep_idx = np.array([i for i, p in enumerate(stream.pair_table) if p in include], dtype=np.int32)
    mask = np.isin(stream.pair_idx, keep_idx)
    return TickStream(stream.timestamps[mask], stream.pair_idx[mask], stream.kinds[mask],
                      stream.pair_table, stream.span, stream.rejects)
