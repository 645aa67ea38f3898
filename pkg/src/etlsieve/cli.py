"""Command line entry point: ``etlsieve {gen,parse,analyze,watch}``.

Logs go to stderr, data to files. ``analyze`` exits 0 when the run
completes with nothing flagged, 2 when at least one cluster is flagged and
1 on any fatal error.
"""

from __future__ import annotations

import argparse
import logging
import signal
import sys
import threading
import time
from dataclasses import fields, replace
from datetime import datetime, timezone
from pathlib import Path

from . import log_corpus, pipeline, synthgen
from .config import ConfigError, RunConfig

log = logging.getLogger("etlsieve")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2


def _qualified(exc: BaseException) -> str:
    module = type(exc).__module__
    if module.startswith("etlsieve."):
        return f"{module.rsplit('.', 1)[-1]}: {exc}"
    return f"{type(exc).__name__}: {exc}"


def cmd_gen(spec_path, out_dir, seed: int | None = None) -> int:
    try:
        spec = synthgen.load_corpus_spec(spec_path)
        if seed is not None:
            spec = replace(spec, seed=seed)
        manifest = synthgen.generate_corpus(spec, out_dir)
    except (OSError, ValueError, KeyError) as exc:
        log.error("gen failed: %s", _qualified(exc))
        return EXIT_ERROR
    log.info("wrote %d logs and %s to %s", len(manifest), synthgen.MANIFEST_NAME, out_dir)
    return EXIT_OK


def cmd_parse(config: RunConfig, out_path) -> int:
    try:
        patterns = log_corpus.load_patterns(config.pattern_file)
        vectors, failures = log_corpus.scan_corpus(config.input_dir, patterns, config.suffix)
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            n = log_corpus.emit_feature_table(vectors, fh)
    except (OSError, ValueError) as exc:
        log.error("parse failed: %s", _qualified(exc))
        return EXIT_ERROR
    log.info("wrote %d rows to %s (%d parse failures)", n, out_path, len(failures))
    return EXIT_OK


def cmd_analyze(config: RunConfig, out_dir=None) -> int:
    try:
        config.validate()
        result = pipeline.analyze(config)
        pipeline.write_outputs(result, out_dir or config.output_dir, config.edge_floor)
    except Exception as exc:  # every failure maps to exit 1
        log.error("analyze failed: %s", _qualified(exc))
        return EXIT_ERROR
    funnel = result.report.funnel
    log.info("funnel: scanned %d, parse failures %d, zero removed %d, analyzed %d, flagged %d",
             funnel["scanned"], funnel["parse_failures"], funnel["zero_removed"],
             funnel["analyzed"], funnel["flagged"])
    return EXIT_FLAGGED if result.any_flagged else EXIT_OK


def cycle_dir(root, cycle: int, now: datetime | None = None) -> Path:
    now = now or datetime.now(timezone.utc)
    return Path(root) / f"{now.strftime('%Y%m%dT%H%M%S%fZ')}-{cycle:04d}"


def run_watch(config: RunConfig, *, max_cycles: int | None = None, stop: threading.Event | None = None,
              interval: float | None = None, analyze=cmd_analyze) -> list[tuple[Path, int]]:
    """Run ``analyze`` every ``interval`` seconds until ``stop`` is set.

    A tick that arrives while the previous cycle is still running is
    skipped. Returns ``(output dir, exit code)`` per completed cycle.
    """
    stop = stop or threading.Event()
    interval = config.interval if interval is None else interval
    busy = threading.Lock()
    results: list[tuple[Path, int]] = []
    worker: threading.Thread | None = None
    started = 0

    def one_cycle(n):
        try:
            out = cycle_dir(config.output_dir, n)
            code = analyze(config, out)
            results.append((out, code))
            log.info("watch cycle %d finished with exit code %d -> %s", n, code, out)
        except Exception:
            log.exception("watch cycle %d crashed", n)
        finally:
            busy.release()

    next_tick = time.monotonic()
    while not stop.is_set() and (max_cycles is None or started < max_cycles):
        if busy.acquire(blocking=False):
            started += 1
            worker = threading.Thread(target=one_cycle, args=(started,), daemon=True)
            worker.start()
        else:
            log.warning("watch: previous cycle still running, skipping this tick")
        next_tick += interval
        stop.wait(max(0.0, next_tick - time.monotonic()))
    if worker is not None:
        worker.join()
    return results


def cmd_watch(config: RunConfig) -> int:
    try:
        config.validate()
    except ConfigError as exc:
        log.error("watch: %s", exc)
        return EXIT_ERROR
    stop = threading.Event()

    def on_signal(signum, frame):
        log.info("watch: signal %d received, stopping after the current cycle", signum)
        stop.set()

    previous = {s: signal.signal(s, on_signal) for s in (signal.SIGINT, signal.SIGTERM)}
    try:
        run_watch(config, stop=stop)
    finally:
        for s, handler in previous.items():
            signal.signal(s, handler)
    return EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("-i", "--input", dest="input_dir", help="directory of session logs")
    p.add_argument("--patterns", dest="pattern_file", help="pattern configuration file")
    p.add_argument("--suffix", help="log filename suffix (default .log)")


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", dest="output_dir", help="output directory")
    p.add_argument("-k", type=int, help="number of mixture components (default 10)")
    p.add_argument("--frac", type=float, help="outlier population fraction (default 0.05)")
    p.add_argument("--cv-floor", type=float, help="minimum coefficient of variation (default 1e-3)")
    p.add_argument("--rel-tol", type=float, help="EM relative tolerance (default 1e-6)")
    p.add_argument("--max-iter", type=int, help="EM iteration cap (default 200)")
    p.add_argument("--variance-floor", type=float, help="minimum component variance (default 1e-6)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--edge-floor", type=float, help="minimum similarity drawn in the graph (default 0.01)")
    p.add_argument("--high-volume-pct", type=float, help="row-count percentile for HIGH_VOLUME (default 90)")
    p.add_argument("--low-throughput-pct", type=float, help="throughput percentile for LOW_THROUGHPUT (default 10)")
    p.add_argument("--log1p", action="store_true", default=None, help="log(1+x) the row counts first")
    p.add_argument("--no-standardize", dest="standardize", action="store_false", default=None,
                   help="cluster raw magnitudes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etlsieve", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic log corpus")
    g.add_argument("spec", help="corpus spec JSON")
    g.add_argument("out", help="output directory")
    g.add_argument("--seed", type=int, help="override the spec's seed")

    p = sub.add_parser("parse", help="write features.csv only")
    _add_run_flags(p)
    p.add_argument("-o", "--output", dest="csv_out", default="features.csv")

    a = sub.add_parser("analyze", help="run the full pipeline once")
    _add_run_flags(a)
    _add_analysis_flags(a)

    w = sub.add_parser("watch", help="re-run analyze periodically")
    _add_run_flags(w)
    _add_analysis_flags(w)
    w.add_argument("--interval", type=float, help="seconds between cycles (default 60)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = RunConfig.load(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "gen":
        return cmd_gen(args.spec, args.out, args.seed)
    try:
        config = config_from_args(args)
    except (ConfigError, OSError, ValueError, TypeError) as exc:
        log.error("cli: invalid configuration: %s", exc)
        return EXIT_ERROR
    if args.command == "parse":
        if config.input_dir is None:
            log.error("cli: parse needs --input")
            return EXIT_ERROR
        return cmd_parse(config, args.csv_out)
    if args.command == "analyze":
        return cmd_analyze(config)
    return cmd_watch(config)


if __name__ == "__main__":
    sys.exit(main())
