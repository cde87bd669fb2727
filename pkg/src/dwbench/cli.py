"""Command-line surface: thin orchestration over the library modules.

Every subcommand delegates to the core package — no metric math, generation
logic, or SQL analysis lives here.  Configuration resolves with the
precedence: command-line flag, then environment variable (the ``DSS_*``
family), then JSON config file, then built-in default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import backend as backend_mod
from . import bitmap, datagen, driver, metrics, querygen, report, rewrite

CONFIG_FILE_NAME = "dwbench.json"

CONFIG_KEYS = ("sf", "seed", "timeout", "streams", "backend", "dsn", "out")


@dataclass(frozen=True)
class Settings:
    """Fully resolved run-level configuration."""

    sf: float
    seed: int
    timeout: float
    streams: Optional[int]
    backend: str
    dsn: str
    out: str


def _find_config_file(explicit: Optional[str]) -> Optional[Path]:
    if explicit:
        path = Path(explicit)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        return path
    config_dir = os.environ.get("DSS_CONFIG")
    if config_dir:
        candidate = Path(config_dir) / CONFIG_FILE_NAME
        if candidate.exists():
            return candidate
    local = Path(CONFIG_FILE_NAME)
    if local.exists():
        return local
    return None


def _load_config_file(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ValueError(
            f"config file {path} has unknown keys: {', '.join(sorted(unknown))}"
        )
    return raw


def resolve_settings(args: argparse.Namespace) -> Settings:
    """Apply the precedence chain flag > env (DSS_*) > config file > default."""
    cfg = _load_config_file(_find_config_file(getattr(args, "config", None)))

    def pick(flag_value, env_var: Optional[str], file_key: str, default):
        if flag_value is not None:
            return flag_value
        if env_var:
            env_value = os.environ.get(env_var)
            if env_value is not None:
                return env_value
        if file_key in cfg:
            return cfg[file_key]
        return default

    out = pick(getattr(args, "out", None), "DSS_PATH", "out", ".")
    return Settings(
        sf=float(pick(getattr(args, "sf", None), None, "sf", 1.0)),
        seed=int(pick(getattr(args, "seed", None), None, "seed", datagen.DEFAULT_SEED)),
        timeout=float(
            pick(getattr(args, "timeout", None), None, "timeout", driver.DEFAULT_TIMEOUT)
        ),
        streams=(
            None
            if (s := pick(getattr(args, "streams", None), None, "streams", None)) is None
            else int(s)
        ),
        backend=str(pick(getattr(args, "backend", None), None, "backend", "simulator")),
        dsn=str(pick(getattr(args, "dsn", None), None, "dsn", "")),
        out=str(out),
    )


def _run_config(settings: Settings, capture_plans: bool = False) -> driver.RunConfig:
    return driver.RunConfig(
        sf=settings.sf,
        backend=backend_mod.BackendConfig(kind=settings.backend, dsn=settings.dsn),
        seed=settings.seed,
        timeout=settings.timeout,
        stream_count_override=settings.streams,
        output_dir=settings.out,
        capture_plans=capture_plans,
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--sf", type=float, help="scale factor")
    parser.add_argument("--seed", type=int, help="global RNG seed")
    parser.add_argument("--timeout", type=float, help="per-query timeout, seconds")
    parser.add_argument("--streams", type=int, help="throughput query-stream count")
    parser.add_argument(
        "--backend", choices=("simulator", "sql_dbms"), help="backend kind"
    )
    parser.add_argument("--dsn", help="database DSN for kind sql_dbms")
    parser.add_argument("--out", help="working directory for data and logs")


def _archive_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--archive", help="write the run archive to this file")
    parser.add_argument(
        "--format",
        choices=("human", "csv", "machine"),
        default="human",
        help="report rendering for stdout",
    )
    parser.add_argument(
        "--no-load",
        action="store_true",
        help="measure against an already-loaded database",
    )
    parser.add_argument(
        "--capture-plans",
        action="store_true",
        help="store an execution plan with each query record",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dwbench",
        description="Decision-support benchmark: generate, run, measure, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write flat data files, and optionally streams")
    _add_common(p)
    p.add_argument("--table", default="all", help="one table name, or 'all'")
    p.add_argument("--part", type=int, default=1, help="partition number (1-based)")
    p.add_argument("--parts", type=int, default=1, help="total partitions")
    p.add_argument(
        "--update-pairs",
        type=int,
        default=0,
        help="also write this many insert/delete refresh pair files",
    )
    p.add_argument(
        "--query-streams",
        type=int,
        default=None,
        help="also write query stream scripts 0..N to the output directory",
    )

    for name, help_text in (
        ("load", "timed load: tables, then keys and indexes, then statistics"),
        ("power", "single-session timed run of all 22 queries plus refreshes"),
        ("throughput", "concurrent streams plus a refresh session"),
        ("run", "full pipeline: load, power, throughput, metrics"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _archive_flags(p)

    p = sub.add_parser("metrics", help="compute the composite metrics")
    p.add_argument("--archive", help="render metrics stored in a run archive")
    p.add_argument("--power", type=float, help="power metric value")
    p.add_argument("--throughput", type=float, help="throughput metric value")
    p.add_argument("--price", type=float, help="total system price")

    p = sub.add_parser("rewrite", help="factor common predicates out of a query")
    p.add_argument("sql_file", help="SQL file to read, or '-' for stdin")
    p.add_argument(
        "--show-hoisted",
        action="store_true",
        help="also print the hoisted predicates as comments",
    )

    p = sub.add_parser("bitmap", help="advise on bitmap indexing for a column")
    p.add_argument("--distinct", type=int, required=True, help="distinct values")
    p.add_argument("--rows", type=int, required=True, help="table row count")

    p = sub.add_parser("report", help="render a stored run archive")
    p.add_argument("--archive", required=True, help="run archive file")
    p.add_argument(
        "--format", choices=("human", "csv", "machine"), default="human"
    )

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_gen(args: argparse.Namespace) -> int:
    settings = resolve_settings(args)
    cfg = datagen.GenConfig(
        settings.sf,
        args.table,
        part_index=args.part,
        part_count=args.parts,
        seed=settings.seed,
        output_dir=settings.out,
    )
    summary = datagen.generate_table(cfg)
    for name in sorted(summary.files):
        print(f"{name}: {summary.rows[name]} rows")
    for pair in range(1, args.update_pairs + 1):
        refresh_set = datagen.generate_refresh_set(
            settings.sf, pair, settings.seed, output_dir=settings.out
        )
        print(
            f"refresh pair {pair}: {len(refresh_set.new_orders)} orders, "
            f"{len(refresh_set.new_lineitems)} lineitems"
        )
    if args.query_streams is not None:
        paths = querygen.write_stream_files(
            settings.out,
            range(0, args.query_streams + 1),
            settings.seed,
            settings.sf,
        )
        for sid in sorted(paths):
            sql_path, par_path = paths[sid]
            print(f"wrote {sql_path} and {par_path}")
    return 0


def _phase_command(args: argparse.Namespace, phases: tuple[str, ...]) -> int:
    settings = resolve_settings(args)
    cfg = _run_config(settings, capture_plans=args.capture_plans)
    if args.no_load:
        phases = tuple(p for p in phases if p != "load")
    out_dir = Path(settings.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log = driver.RunLog(out_dir / "log.txt")
    archive = report.run_all(cfg, phases=phases, log=log)
    if args.archive:
        report.save_archive(archive, args.archive)
    print(report.render_report(archive, format=args.format), end="")
    return 1 if archive.partial else 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    if args.archive:
        archive = report.load_archive(args.archive)
        if archive.metrics_report is None:
            print("archive holds no metrics (incomplete run)", file=sys.stderr)
            return 1
        rep = archive.metrics_report
    elif args.power is not None and args.throughput is not None:
        qphh = metrics.qphh_at_size(args.power, args.throughput)
        rep = metrics.MetricsReport(
            power_at_size=args.power,
            throughput_at_size=args.throughput,
            qphh_at_size=qphh,
            price_per_qphh=(
                metrics.price_per_qphh(args.price, qphh)
                if args.price is not None
                else None
            ),
        )
    else:
        print(
            "metrics needs --archive, or both --power and --throughput",
            file=sys.stderr,
        )
        return 1
    print(f"Power@Size          {rep.power_at_size:.2f}")
    print(f"Throughput@Size     {rep.throughput_at_size:.2f}")
    print(f"Composite QphH@Size {rep.qphh_at_size:.2f}")
    if rep.price_per_qphh is not None:
        print(f"Price/QphH@Size     {rep.price_per_qphh:.2f}")
    return 0


def _cmd_rewrite(args: argparse.Namespace) -> int:
    if args.sql_file == "-":
        sql = sys.stdin.read()
    else:
        path = Path(args.sql_file)
        if not path.exists():
            print(f"no such file: {path}", file=sys.stderr)
            return 1
        sql = path.read_text(encoding="utf-8")
    try:
        rewritten, rep = rewrite.rewrite_query(sql)
    except rewrite.PredicateParseError as exc:
        print(f"cannot rewrite: {exc}", file=sys.stderr)
        return 1
    if args.show_hoisted:
        print(f"-- hoisted: {', '.join(rep.hoisted_text) or '(nothing)'}")
        print(f"-- residual disjuncts: {rep.residual_disjuncts}")
    print(rewritten, end="" if rewritten.endswith("\n") else "\n")
    return 0


def _cmd_bitmap(args: argparse.Namespace) -> int:
    try:
        advice = bitmap.advise(args.distinct, args.rows)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    width = bitmap.code_width(args.distinct)
    print(f"verdict: {advice.verdict}")
    print(f"cardinality ratio: {advice.ratio:.6f}")
    print(f"simple bitmap: {args.distinct} bit-vectors ({args.distinct} bits/row)")
    print(f"encoded bitmap: {width} bit-slices ({width} bits/row)")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        archive = report.load_archive(args.archive)
    except FileNotFoundError:
        print(f"no such archive: {args.archive}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"bad archive: {exc}", file=sys.stderr)
        return 1
    print(report.render_report(archive, format=args.format), end="")
    return 1 if archive.partial else 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("dwbench.service.app:app", host=args.host, port=args.port)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "load":
            return _phase_command(args, ("load",))
        if args.command == "power":
            return _phase_command(args, ("load", "power"))
        if args.command == "throughput":
            return _phase_command(args, ("load", "throughput"))
        if args.command == "run":
            return _phase_command(args, ("load", "power", "throughput"))
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "rewrite":
            return _cmd_rewrite(args)
        if args.command == "bitmap":
            return _cmd_bitmap(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except (ValueError, KeyError, driver.DriverError) as exc:
        message = exc.args[0] if exc.args else str(exc)
        print(str(message), file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command: {args.command}")


if __name__ == "__main__":
    sys.exit(main())
