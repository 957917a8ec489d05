"""Command-line entry point.

Subcommands:

* ``run-sim``    -- run a scripted two-endpoint session over a simulated
  link on virtual time, write the trace, print a metrics summary.
* ``metrics``    -- recompute continuity/symmetry metrics from a trace file.
* ``serve``      -- live two-person WebSocket bridge on wall-clock frames.
* ``codec-dump`` -- parse hex-encoded wire frames for debugging.

Exit codes: 0 success, 1 engine failure, 2 bad configuration or input.
``TELEDGE_LOG`` sets the log level (debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import engine as eng
from .gestures import GestureScript, ScriptError, load_script
from .harness import (InvalidMetricError, continuity_metric, parse_path, run_session,
                      symmetry_divergence)
from .layout import ElectrodeLayout, LayoutError, make_layout
from .netsim import LinkConfigError, LinkModel, SimLink
from .trace import SessionTrace, TraceFormatError, read_trace, write_trace
from .wire import dump_frame

log = logging.getLogger("teledge")

EXIT_OK = 0
EXIT_ENGINE = 1
EXIT_CONFIG = 2

DEFAULT_DURATION_MS = 600_000  # ten-minute sessions unless told otherwise


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    layout: ElectrodeLayout
    params: eng.StimParams
    link: LinkModel
    script_a: GestureScript
    script_b: GestureScript
    duration_ms: int
    trace_out: Optional[str] = None
    cut_at_ms: Optional[float] = None
    path_spec: Optional[str] = None
    metrics_endpoint: str = "A"


def _parse_layout(text: str) -> ElectrodeLayout:
    try:
        left, right = (int(part) for part in text.split(","))
        return make_layout(left, right)
    except (ValueError, LayoutError) as exc:
        raise ConfigError(f"bad --layout {text!r}: {exc}") from exc


def _build_link(args: argparse.Namespace) -> LinkModel:
    model = LinkModel()
    if args.link_config:
        from .netsim import parse_link_config
        with open(args.link_config, "r", encoding="utf-8") as fh:
            model = parse_link_config(fh.read())
    overrides = {}
    if args.delay_us is not None:
        overrides["one_way_delay_us"] = args.delay_us
    if args.jitter_us is not None:
        overrides["jitter_us"] = args.jitter_us
    if args.loss is not None:
        overrides["loss_prob"] = args.loss
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reorder:
        overrides["allow_reorder"] = True
    if overrides:
        import dataclasses
        model = dataclasses.replace(model, **overrides)
    return model


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    layout = _parse_layout(args.layout)
    try:
        params = eng.StimParams(pulse_width_us=args.pulse_us, refresh_hz=args.refresh_hz)
        params.validate_for(layout.total)
    except eng.ParamsError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        link = _build_link(args)
    except (OSError, LinkConfigError) as exc:
        raise ConfigError(f"link configuration: {exc}") from exc
    try:
        script_a = load_script(args.script_a, layout, "A")
        script_b = load_script(args.script_b, layout, "B")
    except OSError as exc:
        raise ConfigError(f"cannot read script: {exc}") from exc
    except ScriptError as exc:
        raise ConfigError(f"bad script: {exc}") from exc
    if args.duration_ms <= 0:
        raise ConfigError(f"--duration-ms must be > 0, got {args.duration_ms}")
    return RunConfig(layout=layout, params=params, link=link, script_a=script_a,
                     script_b=script_b, duration_ms=args.duration_ms,
                     trace_out=args.trace_out, cut_at_ms=args.cut_at_ms,
                     path_spec=args.path, metrics_endpoint=args.endpoint)


def _print_metrics(trace: SessionTrace, path_spec: Optional[str], endpoint: str) -> None:
    rows: list[tuple[str, str]] = []
    sym = symmetry_divergence(trace)
    if path_spec:
        coverage, skips = continuity_metric(trace, parse_path(path_spec), endpoint)
        rows.append(("coverage", f"{coverage:.4f}"))
        rows.append(("skips", str(skips)))
    rows.append(("symmetry_mean", f"{sym.mean:.4f}"))
    rows.append(("symmetry_max", str(sym.max)))
    rows.append(("frames", str(trace.frame_count())))
    for endpoint_id in ("A", "B"):
        rows.append((f"discards_{endpoint_id.lower()}",
                     str(trace.records[endpoint_id][-1].rx_discards if trace.records[endpoint_id] else 0)))
    for direction, stats in sorted(trace.link_stats.items()):
        key = direction.replace("->", "_to_").lower()
        rows.append((f"sent_{key}", str(stats["sent"])))
        rows.append((f"dropped_{key}", str(stats["dropped"])))
    width = max(len(name) for name, _ in rows)
    print(f"{'metric'.ljust(width)}  value")
    for name, value in rows:
        print(f"{name.ljust(width)}  {value}")
    print()
    for name, value in rows:
        print(f"{name}={value}")


def cmd_run_sim(args: argparse.Namespace) -> int:
    try:
        config = _build_run_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        trace = run_session(config.script_a, config.script_b, config.link,
                            config.duration_ms, layout=config.layout,
                            params=config.params, cut_at_ms=config.cut_at_ms)
    except Exception as exc:  # engine failures are exit 1 by contract
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    if config.trace_out:
        write_trace(trace, config.trace_out)
        log.info("trace written to %s", config.trace_out)
    _print_metrics(trace, config.path_spec, config.metrics_endpoint)
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        trace = read_trace(args.trace)
    except (OSError, TraceFormatError, ValueError) as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _print_metrics(trace, args.path, args.endpoint)
    except InvalidMetricError as exc:
        print(f"error: invalid-metric: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .serve import run_bridge
    try:
        layout = _parse_layout(args.layout)
        params = eng.StimParams(pulse_width_us=args.pulse_us, refresh_hz=args.refresh_hz)
        params.validate_for(layout.total)
    except (ConfigError, eng.ParamsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        asyncio.run(run_bridge(args.port, layout=layout, params=params,
                               static_dir=args.static_dir, host=args.host))
    except OSError as exc:
        print(f"error: cannot bind port {args.port}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_codec_dump(args: argparse.Namespace) -> int:
    blobs = list(args.hex)
    if not blobs:
        blobs = [line.strip() for line in sys.stdin if line.strip()]
    status = EXIT_OK
    for blob in blobs:
        try:
            data = bytes.fromhex(blob.replace(" ", ""))
        except ValueError:
            print(f"not hex: {blob!r}", file=sys.stderr)
            status = EXIT_CONFIG
            continue
        print(dump_frame(data, total=args.total))
    return status


def _add_common_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--layout", default="21,32", metavar="L,R",
                        help="electrode counts per strip (default 21,32)")
    parser.add_argument("--refresh-hz", type=int, default=60)
    parser.add_argument("--pulse-us", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teledge",
        description="Bidirectional electro-tactile edge-display tele-communication.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run-sim", help="scripted session over a simulated link")
    _add_common_engine_flags(run)
    run.add_argument("--script-a", required=True, help="gesture script for endpoint A")
    run.add_argument("--script-b", required=True, help="gesture script for endpoint B")
    run.add_argument("--duration-ms", type=int, default=DEFAULT_DURATION_MS)
    run.add_argument("--trace-out", help="write the session trace here")
    run.add_argument("--delay-us", type=int, default=None)
    run.add_argument("--jitter-us", type=int, default=None)
    run.add_argument("--loss", type=float, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--reorder", action="store_true", help="allow packet reordering")
    run.add_argument("--link-config", help="key=value link configuration file")
    run.add_argument("--cut-at-ms", type=float, default=None,
                     help="sever the link at this virtual time")
    run.add_argument("--path", help="expected trace path for continuity, e.g. 21:52")
    run.add_argument("--endpoint", default="A", choices=("A", "B"),
                     help="endpoint whose stim sequence the path is checked against")
    run.set_defaults(func=cmd_run_sim)

    metrics = sub.add_parser("metrics", help="recompute metrics from a trace file")
    metrics.add_argument("trace", help="trace file from run-sim")
    metrics.add_argument("--path", help="expected trace path, e.g. 21:52 or 5,7,9")
    metrics.add_argument("--endpoint", default="A", choices=("A", "B"))
    metrics.set_defaults(func=cmd_metrics)

    serve = sub.add_parser("serve", help="live two-person bridge for UI clients")
    _add_common_engine_flags(serve)
    serve.add_argument("--port", type=int, required=True)
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--static-dir", help="serve the browser client from this directory")
    serve.set_defaults(func=cmd_serve)

    dump = sub.add_parser("codec-dump", help="parse hex wire frames")
    dump.add_argument("hex", nargs="*", help="hex-encoded frames (default: stdin lines)")
    dump.add_argument("--total", type=int, default=53, help="session electrode count")
    dump.set_defaults(func=cmd_codec_dump)
    return parser


def _setup_logging() -> None:
    level_name = os.environ.get("TELEDGE_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
