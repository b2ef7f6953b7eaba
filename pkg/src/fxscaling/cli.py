"""Command line entry point: ``fxscaling <subcommand> ...``.

Exit codes
----------
0 success, 1 unexpected failure, 2 usage error, 3 tick parse error,
4 window/bin geometry error, 5 statistical degeneracy, 6 I/O error.

Defaults can be overridden through the environment: ``FXSCALING_DT``,
``FXSCALING_B``, ``FXSCALING_M``, ``FXSCALING_SEED``, ``FXSCALING_MIN_MEAN``,
``FXSCALING_THREADS`` and ``FXSCALING_WEEK_ANCHOR``. Command-line flags win
over the environment.

Every run writes ``<output>.manifest.json`` next to its primary output.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import tempfile
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (DegenerateError, EmptyPlanError, FxScalingError, GeometryError, ParseError,
                     SpecError)
from .moments import NORMALISATIONS, corr_matrix
from .panel import (ActivityPanel, bin_counts, panel_to_bytes, panel_to_csv, panel_meta,
                    partial_fragments, plan_weeks, read_panel)
from .scaling import bootstrap_scaling, fit_scaling
from .studies import (RollingConfig, RollingReport, WeekRow, alpha_corr_regression, dt_sweep, pd_lag_profile,
                      regression_points_from_rows, report_from_jsonl, rolling_weekly)
from .synthgen import GenSpec, gen_panel, panels_to_stream
from .tickdata import (Interval, Kind, OrderPolicy, TickStream, iso_ms, parse_tick_file,
                       write_tick_csv)

log = logging.getLogger("fxscaling")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PARSE, EXIT_GEOMETRY, EXIT_DEGENERATE, EXIT_IO = 0, 1, 2, 3, 4, 5, 6

ENV_PREFIX = "FXSCALING_"


def _env(name, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    return default if raw is None else cast(raw)


# -- io helpers ------------------------------------------------------------

def atomic_write(path, data) -> None:
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Collects inputs and outputs of one invocation for the manifest."""

    def __init__(self, args):
        self.args = args
        self.inputs = {}
        self.outputs = []
        self.t_start = time.perf_counter()

    def read(self, path):
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(path)
        self.inputs[str(path)] = sha256_file(path)
        return path

    def write(self, path, data):
        atomic_write(path, data)
        self.outputs.append(str(path))

    def write_manifest(self):
        if not self.outputs:
            return
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "subcommand": self.args.command,
            "config": config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "versions": {"fxscaling": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "wall_time_s": time.perf_counter() - self.t_start,
        }
        atomic_write(str(self.args.out) + ".manifest.json",
                     json.dumps(manifest, indent=1, sort_keys=True, default=str) + "\n")


def _window(args, stream: TickStream | None = None) -> Interval:
    start = args.start if args.start else None
    end = args.end if args.end else None
    if stream is not None:
        span = stream.span
        return Interval.of(start or span.start, end or span.end)
    if not (start and end):
        raise GeometryError("--start and --end are required")
    return Interval.of(start, end)


def _load_ticks(run: Run, path, args) -> TickStream:
    stream = parse_tick_file(str(run.read(path)), OrderPolicy(args.order))
    if stream.rejects:
        log.warning("%d malformed line(s) skipped in %s", len(stream.rejects), path)
        if getattr(args, "rejects", None):
            run.write(args.rejects, stream.rejects_json() + "\n")
    return stream


def _is_panel_file(path) -> bool:
    with open(path, "rb") as fh:
        head = fh.read(5)
    return head[:4] == b"FXP1" or head.startswith(b"pair,") or head.startswith(b"pair\n")


def _pairs_arg(args, stream: TickStream) -> tuple:
    if getattr(args, "pairs", None):
        return tuple(p.strip() for p in args.pairs.split(",") if p.strip())
    return tuple(sorted(stream.pair_universe))


def _panels_from_ticks(run, args, kinds):
    stream = _load_ticks(run, args.input, args)
    window = _window(args, stream)
    pairs = _pairs_arg(args, stream)
    return [bin_counts(stream, k, args.dt, window, pairs) for k in kinds]


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# -- subcommands -----------------------------------------------------------

def cmd_synth(run: Run, args):
    spec = GenSpec.from_json(run.read(args.spec).read_text())
    if args.seed is not None:
        spec = GenSpec(**{**asdict(spec), "seed": args.seed})
    p, d = gen_panel(spec)
    stream = panels_to_stream(p, d, spec.seed)
    run.write(args.out, write_tick_csv(stream))
    if args.panel_prefix:
        for panel, tag in ((p, "P"), (d, "D")):
            base = f"{args.panel_prefix}_{tag}.csv"
            run.write(base, panel_to_csv(panel))
            run.write(base + ".json", _dumps(panel_meta(panel)))
    log.info("wrote %d events for %d pairs over %s", len(stream), len(spec.pairs), spec.window)


def cmd_bin(run: Run, args):
    (panel,) = _panels_from_ticks(run, args, [Kind.parse(args.kind)])
    if args.format == "fxp" or str(args.out).endswith(".fxp"):
        run.write(args.out, panel_to_bytes(panel))
    else:
        run.write(args.out, panel_to_csv(panel))
        run.write(str(args.out) + ".json", _dumps(panel_meta(panel)))


def _load_panel(run: Run, path) -> ActivityPanel:
    run.read(path)
    side = Path(str(path) + ".json")
    if side.exists():
        run.read(side)
    return read_panel(path)


def cmd_fit(run: Run, args):
    panel = _load_panel(run, args.input)
    fit = fit_scaling(panel, args.min_mean)
    report = fit.to_json()
    report["bootstrap"] = None
    if args.B > 0:
        try:
            boot = bootstrap_scaling(panel, args.B, min(args.m, panel.n_bins), args.seed, args.min_mean)
            report["bootstrap"] = boot.to_json()
        except (DegenerateError, ValueError) as exc:
            log.warning("bootstrap skipped: %s", exc)
    run.write(args.out, _dumps(report))


def cmd_corr(run: Run, args):
    panel = _load_panel(run, args.input)
    summary = corr_matrix(panel, args.tau)
    if str(args.out).endswith(".csv"):
        run.write(args.out, summary.to_csv())
    else:
        run.write(args.out, _dumps(summary.to_json()))


def cmd_pdlag(run: Run, args):
    if args.p and args.d:
        p, d = _load_panel(run, args.p), _load_panel(run, args.d)
    elif args.input:
        p, d = _panels_from_ticks(run, args, [Kind.QUOTE, Kind.TRADE])
    else:
        raise UsageError("pdlag needs either --in TICKS or both --p and --d panels")
    profile = pd_lag_profile(p, d, (args.tau_min, args.tau_max), args.normalization)
    run.write(args.out, profile.to_csv())
    try:
        log.info("argmax tau = %d", profile.argmax)
    except DegenerateError:
        pass


def cmd_sweep(run: Run, args):
    dts = [int(x) for x in str(args.dt_list).split(",") if x.strip()]
    if _is_panel_file(args.input):
        base = _load_panel(run, args.input)
    else:
        (base,) = _panels_from_ticks(run, argparse.Namespace(**{**vars(args), "dt": 1}),
                                     [Kind.parse(args.kind)])
    curve = dt_sweep(base, dts, args.min_mean)
    run.write(args.out, curve.to_csv())


def cmd_rolling(run: Run, args):
    stream = _load_ticks(run, args.input, args)
    span = _window(args, stream)
    cfg = RollingConfig(dt=args.dt, B=args.B, m=args.m, min_mean=args.min_mean, seed=args.seed,
                        pairs=_pairs_arg(args, stream), threads=args.threads)
    try:
        plan = plan_weeks(span, args.anchor)
    except EmptyPlanError:
        weeks, fragments = [], [span]
    else:
        weeks, fragments = rolling_weekly(stream, plan, cfg).weeks, partial_fragments(span, plan)
    for frag in fragments:
        log.warning("partial week %s excluded from analysis", frag)
        weeks.append(WeekRow("partial:" + iso_ms(frag.start), frag, flags=["partial week"]))
    report = RollingReport(sorted(weeks, key=lambda w: w.window.start), cfg)
    run.write(args.out, report.to_jsonl())
    if args.csv:
        run.write(args.csv, report.to_csv())


def cmd_regress(run: Run, args):
    path = run.read(args.input)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        pts = regression_points_from_rows(report_from_jsonl(text), args.kind)
    else:
        pts = []
        for ln in text.splitlines():
            cells = [c.strip() for c in ln.split(",")]
            try:
                pts.append((float(cells[0]), float(cells[1])))
            except (ValueError, IndexError):
                continue  # header or blank
    result = alpha_corr_regression(pts)
    run.write(args.out, _dumps(result.to_json()))


# -- argument parsing ------------------------------------------------------

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fxscaling", description="Fluctuation scaling and cross-correlation "
                                                   "analysis of market activity counts.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, ticks=True, stats=True, dt=True):
        p.add_argument("--seed", type=int, default=_env("SEED", 0, int))
        p.add_argument("--threads", type=int, default=_env("THREADS", 1, int))
        if ticks:
            p.add_argument("--order", choices=[o.value for o in OrderPolicy], default="strict",
                           help="tick ordering policy (default strict)")
            p.add_argument("--start", help="window start, ISO-8601 UTC (default: data span)")
            p.add_argument("--end", help="window end, ISO-8601 UTC (default: data span)")
            p.add_argument("--pairs", help="comma-separated pair include list")
            p.add_argument("--rejects", help="write the malformed-line report (JSON) here")
        if stats:
            p.add_argument("--min-mean", type=float, default=_env("MIN_MEAN", 0.0, float))
            p.add_argument("--B", type=int, default=_env("B", 1000, int))
            p.add_argument("--m", type=int, default=_env("M", 100, int))
        if dt:
            p.add_argument("--dt", type=int, default=_env("DT", 1, int), help="bin width in minutes")

    p = sub.add_parser("synth", help="generate a synthetic tick file from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--panel-prefix", help="also write <prefix>_P.csv and <prefix>_D.csv")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bin", help="bin ticks into a count panel")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", default="Q", help="Q (quotes) or T (trades)")
    p.add_argument("--format", choices=["csv", "fxp"], default="csv")
    common(p, stats=False)
    p.set_defaults(func=cmd_bin)

    p = sub.add_parser("fit", help="fit the fluctuation-scaling law to a panel")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    common(p, ticks=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("corr", help="lagged correlation matrix of a panel")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=int, default=0)
    common(p, ticks=False, stats=False)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("pdlag", help="quote/trade cross-correlation lag profile")
    p.add_argument("--in", dest="input")
    p.add_argument("--p")
    p.add_argument("--d")
    p.add_argument("--out", required=True)
    p.add_argument("--tau-min", type=int, default=-30)
    p.add_argument("--tau-max", type=int, default=30)
    p.add_argument("--normalization", choices=list(NORMALISATIONS), default="standard",
                   help="denominators: lag-0 variances (standard) or lag-tau own covariances (lagged)")
    common(p, stats=False)
    p.set_defaults(func=cmd_pdlag)

    p = sub.add_parser("sweep", help="alpha and <C> as functions of bin width")
    p.add_argument("--in", dest="input", required=True, help="tick file or 1-minute panel")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", default="Q")
    p.add_argument("--dt", "--dt-list", dest="dt_list", default="1,5,15,60,240",
                   help="comma-separated bin widths in minutes")
    common(p, stats=True, dt=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rolling", help="weekly rolling study")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="JSON-lines report")
    p.add_argument("--csv", help="also write the flat CSV report")
    p.add_argument("--anchor", default=_env("WEEK_ANCHOR", "SUN@00:00"),
                   help="week anchor like SUN@00:00, or 'data' to start at the first event")
    common(p)
    p.set_defaults(func=cmd_rolling)

    p = sub.add_parser("regress", help="regress <C> on alpha across weeks")
    p.add_argument("--in", dest="input", required=True, help="rolling report (.jsonl) or alpha,corr CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["P", "D"], default="P")
    p.set_defaults(func=cmd_regress)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"fxscaling: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.verbose:
        log.setLevel(logging.DEBUG)
    run = Run(args)
    try:
        args.func(run, args)
        run.write_manifest()
    except UsageError as exc:
        print(f"fxscaling: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except (GeometryError, SpecError) as exc:
        log.error("geometry error: %s", exc)
        return EXIT_GEOMETRY
    except DegenerateError as exc:
        log.error("degenerate input: %s", exc)
        return EXIT_DEGENERATE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except FxScalingError as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
