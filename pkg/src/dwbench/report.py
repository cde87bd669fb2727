"""Run archives and result rendering.

A :class:`RunArchive` is the durable output of a benchmark run: the config
snapshot, every timing record, and the computed metrics.  Archives serialize
to a line-oriented JSON format (one object per line) so they can be appended
while a run progresses and re-rendered later, deterministically.

Rendering produces the classic per-query result table: a Power column, one
column per throughput stream, and per-row mean/max/min across the streams
(headed Média / Maior / Menor), with the run metrics as a footer.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import backend as backend_mod
from . import driver, metrics

ALL_PHASES = ("load", "power", "throughput")

_HUMAN_MEAN_COLS = ("Média", "Maior", "Menor")
_CSV_MEAN_COLS = ("mean", "max", "min")


@dataclass(frozen=True)
class RunArchive:
    """Everything a finished (or aborted) run leaves behind."""

    run_id: str
    sf: float
    seed: int
    backend_kind: str
    dsn: str
    timeout: float
    stream_count: int
    phases: tuple[str, ...]
    records: tuple[driver.TimingRecord, ...]
    metrics_report: Optional[metrics.MetricsReport]
    validation_ok: Optional[bool]
    partial: bool

    def __post_init__(self) -> None:
        for phase in self.phases:
            if phase not in ALL_PHASES:
                raise ValueError(f"unknown phase: {phase!r}")

    def phase_records(self, phase: str) -> tuple[driver.TimingRecord, ...]:
        return tuple(r for r in self.records if r.phase == phase.upper())

    def power_query_elapsed(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for r in self.phase_records("power"):
            if r.name.startswith("q"):
                out[int(r.name[1:])] = r.elapsed
        return out

    def stream_query_elapsed(self, stream_id: int) -> dict[int, float]:
        out: dict[int, float] = {}
        for r in self.phase_records("throughput"):
            if r.stream_id == stream_id and r.name.startswith("q"):
                out[int(r.name[1:])] = r.elapsed
        return out

    def throughput_stream_ids(self) -> tuple[int, ...]:
        sids = {
            r.stream_id
            for r in self.phase_records("throughput")
            if r.name.startswith("q")
        }
        return tuple(sorted(sids))


def _run_id(sf: float, seed: int) -> str:
    return f"{time.strftime('%Y%m%dT%H%M%S')}-sf{sf:g}-seed{seed}"


def _canonical_throughput_order(
    records: Sequence[driver.TimingRecord],
) -> list[driver.TimingRecord]:
    """Group concurrent records by session, keeping each session's own order.

    Arrival order across sessions depends on thread scheduling; grouping the
    query sessions first (by stream id) and the refresh session last makes the
    archive deterministic for a deterministic run.
    """
    indexed = list(enumerate(records))
    indexed.sort(key=lambda p: (p[1].name.startswith("RF"), p[1].stream_id, p[0]))
    return [r for _, r in indexed]


def run_all(
    cfg: driver.RunConfig,
    phases: Sequence[str] = ALL_PHASES,
    generate: bool = True,
    log: Optional[driver.RunLog] = None,
) -> RunArchive:
    """Execute the requested phases in order and gather one archive.

    The same backend instance carries through all phases, so the database
    state produced by the load feeds the measurements.  A failing phase marks
    the archive partial; later phases still run when they can.
    """
    for phase in phases:
        if phase not in ALL_PHASES:
            raise ValueError(f"unknown phase: {phase!r}")
    ordered = tuple(p for p in ALL_PHASES if p in phases)
    records: list[driver.TimingRecord] = []
    partial = False
    validation_ok: Optional[bool] = None
    power_report: Optional[driver.PowerReport] = None
    thru_report: Optional[driver.ThroughputReport] = None

    b = backend_mod.open_backend(cfg.backend)
    try:
        if "load" in ordered:
            load_report = driver.load_test(cfg, b=b, generate=generate, log=log)
            records.extend(load_report.records)
            validation_ok = load_report.validation.ok
            if not load_report.ok:
                partial = True
        if "power" in ordered:
            power_report = driver.power_test(cfg, b=b, log=log)
            records.extend(power_report.records)
            if not power_report.complete:
                partial = True
        if "throughput" in ordered:
            thru_report = driver.throughput_test(cfg, b=b, log=log)
            records.extend(_canonical_throughput_order(thru_report.records))
            if not thru_report.complete:
                partial = True
    finally:
        b.close()

    metrics_report: Optional[metrics.MetricsReport] = None
    if (
        power_report is not None
        and power_report.complete
        and thru_report is not None
        and thru_report.complete
    ):
        inp = driver.build_metrics_input(power_report, thru_report, cfg.sf)
        metrics_report = metrics.compute_report(inp)

    stream_count = thru_report.stream_count if thru_report else cfg.streams
    return RunArchive(
        run_id=_run_id(cfg.sf, cfg.seed),
        sf=cfg.sf,
        seed=cfg.seed,
        backend_kind=cfg.backend.kind,
        dsn=cfg.backend.dsn,
        timeout=cfg.timeout,
        stream_count=stream_count,
        phases=ordered,
        records=tuple(records),
        metrics_report=metrics_report,
        validation_ok=validation_ok,
        partial=partial,
    )


# --------------------------------------------------------------------------
# Serialization: one JSON object per line.


def _header_payload(archive: RunArchive) -> dict:
    return {
        "kind": "run",
        "run_id": archive.run_id,
        "sf": archive.sf,
        "seed": archive.seed,
        "backend_kind": archive.backend_kind,
        "dsn": archive.dsn,
        "timeout": archive.timeout,
        "stream_count": archive.stream_count,
        "phases": list(archive.phases),
        "validation_ok": archive.validation_ok,
        "partial": archive.partial,
    }


def _metrics_payload(report: metrics.MetricsReport) -> dict:
    return {
        "kind": "metrics",
        "power_at_size": report.power_at_size,
        "throughput_at_size": report.throughput_at_size,
        "qphh_at_size": report.qphh_at_size,
        "price_per_qphh": report.price_per_qphh,
        "lower_bound_only": report.lower_bound_only,
    }


def dump_archive(archive: RunArchive) -> str:
    lines = [json.dumps(_header_payload(archive), sort_keys=True)]
    for record in archive.records:
        raw = json.loads(record.to_json_line())
        raw["kind"] = "timing"
        lines.append(json.dumps(raw, sort_keys=True))
    if archive.metrics_report is not None:
        lines.append(json.dumps(_metrics_payload(archive.metrics_report), sort_keys=True))
    return "\n".join(lines) + "\n"


def load_archive_text(text: str) -> RunArchive:
    header: Optional[dict] = None
    records: list[driver.TimingRecord] = []
    metrics_report: Optional[metrics.MetricsReport] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"archive line {lineno} is not valid JSON: {exc}") from exc
        kind = raw.get("kind")
        if kind == "run":
            header = raw
        elif kind == "timing":
            raw.pop("kind")
            try:
                records.append(driver.TimingRecord.from_json_line(json.dumps(raw)))
            except (KeyError, ValueError) as exc:
                raise ValueError(
                    f"archive line {lineno} is not a valid timing record: {exc!r}"
                ) from exc
        elif kind == "metrics":
            metrics_report = metrics.MetricsReport(
                power_at_size=raw["power_at_size"],
                throughput_at_size=raw["throughput_at_size"],
                qphh_at_size=raw["qphh_at_size"],
                price_per_qphh=raw.get("price_per_qphh"),
                lower_bound_only=raw.get("lower_bound_only", False),
            )
        else:
            raise ValueError(f"archive line {lineno} has unknown kind: {kind!r}")
    if header is None:
        raise ValueError("archive has no run header line")
    return RunArchive(
        run_id=header["run_id"],
        sf=header["sf"],
        seed=header["seed"],
        backend_kind=header["backend_kind"],
        dsn=header.get("dsn", ""),
        timeout=header["timeout"],
        stream_count=header["stream_count"],
        phases=tuple(header["phases"]),
        records=tuple(records),
        metrics_report=metrics_report,
        validation_ok=header.get("validation_ok"),
        partial=header["partial"],
    )


def save_archive(archive: RunArchive, path: Path | str) -> None:
    Path(path).write_text(dump_archive(archive), encoding="utf-8")


def load_archive(path: Path | str) -> RunArchive:
    return load_archive_text(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# Rendering.


def _fmt(value: float) -> str:
    return f"{value:.3f}"


def _table_rows(archive: RunArchive) -> tuple[list[str], list[list[str]]]:
    """Shared table shape for the human and csv formats (pre-localization)."""
    sids = archive.throughput_stream_ids()
    power = archive.power_query_elapsed()
    streams = {sid: archive.stream_query_elapsed(sid) for sid in sids}

    have_power = "power" in archive.phases
    header = ["query"]
    if have_power:
        header.append("power")
    header.extend(f"stream_{sid}" for sid in sids)
    if sids:
        header.extend(_CSV_MEAN_COLS)

    rows: list[list[str]] = []
    for qid in range(1, 23):
        row = [f"q{qid}"]
        if have_power:
            row.append(_fmt(power[qid]) if qid in power else "")
        values = [streams[sid][qid] for sid in sids if qid in streams[sid]]
        row.extend(_fmt(streams[sid][qid]) if qid in streams[sid] else "" for sid in sids)
        if sids:
            if values:
                mean = sum(values) / len(values)
                row.extend([_fmt(mean), _fmt(max(values)), _fmt(min(values))])
            else:
                row.extend(["", "", ""])
        rows.append(row)

    rf_power = {
        r.name: r.elapsed for r in archive.phase_records("power") if r.name.startswith("RF")
    }
    rf_streams = {
        (r.name, r.stream_id): r.elapsed
        for r in archive.phase_records("throughput")
        if r.name.startswith("RF")
    }
    for rf in ("RF1", "RF2"):
        if rf not in rf_power and not any(k[0] == rf for k in rf_streams):
            continue
        row = [rf]
        if have_power:
            row.append(_fmt(rf_power[rf]) if rf in rf_power else "")
        values = [rf_streams[(rf, sid)] for sid in sids if (rf, sid) in rf_streams]
        row.extend(
            _fmt(rf_streams[(rf, sid)]) if (rf, sid) in rf_streams else ""
            for sid in sids
        )
        if sids:
            if values:
                mean = sum(values) / len(values)
                row.extend([_fmt(mean), _fmt(max(values)), _fmt(min(values))])
            else:
                row.extend(["", "", ""])
        rows.append(row)
    return header, rows


def _metric_lines(archive: RunArchive) -> list[tuple[str, str]]:
    report = archive.metrics_report
    if report is None:
        return []
    out = [
        ("Power@Size", f"{report.power_at_size:.2f}"),
        ("Throughput@Size", f"{report.throughput_at_size:.2f}"),
        ("Composite QphH@Size", f"{report.qphh_at_size:.2f}"),
    ]
    if report.price_per_qphh is not None:
        out.append(("Price/QphH@Size", f"{report.price_per_qphh:.2f}"))
    if report.lower_bound_only:
        out.append(("Note", "lower bound only (censored timings present)"))
    return out


def _render_human(archive: RunArchive) -> str:
    header, rows = _table_rows(archive)
    display = ["Query"]
    for col in header[1:]:
        if col == "power":
            display.append("Power")
        elif col.startswith("stream_"):
            display.append(col.split("_", 1)[1])
        else:
            display.append(_HUMAN_MEAN_COLS[_CSV_MEAN_COLS.index(col)])

    widths = [len(h) for h in display]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))

    def fmt_row(cells: Sequence[str]) -> str:
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(widths[i + 1]) for i, c in enumerate(cells[1:])]
        return "  ".join([first, *rest]).rstrip()

    lines = [
        f"Run {archive.run_id} — SF {archive.sf:g}, backend {archive.backend_kind}, "
        f"seed {archive.seed}, streams {archive.stream_count}",
        "",
        fmt_row(display),
        fmt_row(["-" * w for w in widths]),
    ]
    lines.extend(fmt_row(row) for row in rows)
    metric_lines = _metric_lines(archive)
    if metric_lines:
        lines.append("")
        label_w = max(len(label) for label, _ in metric_lines)
        lines.extend(f"{label.ljust(label_w)}  {value}" for label, value in metric_lines)
    if archive.partial:
        lines.append("")
        lines.append("PARTIAL RUN: one or more phases did not complete.")
    return "\n".join(lines) + "\n"


def _render_csv(archive: RunArchive) -> str:
    header, rows = _table_rows(archive)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    metric_lines = _metric_lines(archive)
    if metric_lines:
        writer.writerow([])
        writer.writerow(["metric", "value"])
        for label, value in metric_lines:
            writer.writerow([label, value])
    return buf.getvalue()


def render_report(archive: RunArchive, format: str = "human") -> str:
    """Render an archive as a result table plus metrics footer.

    Formats: ``human`` (aligned text), ``csv`` (same numbers, machine
    friendly), ``machine`` (the canonical line-oriented archive itself).
    """
    if not archive.phases:
        raise ValueError("archive holds no executed phases")
    if format == "human":
        return _render_human(archive)
    if format == "csv":
        return _render_csv(archive)
    if format == "machine":
        return dump_archive(archive)
    raise ValueError(f"unknown report format: {format!r}")
