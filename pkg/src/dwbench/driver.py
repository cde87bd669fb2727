"""Run orchestration: load, single-session power, concurrent throughput.

The driver owns the three timed phases of a full benchmark run.  It keeps a
strict separation between the two clocks involved: ``time.monotonic()`` feeds
every elapsed-seconds figure (timeouts, phase totals), while ``time.time()``
only decorates the human-readable run log.  All timing records funnel through
one serialized collector so concurrent sessions never interleave partial
writes.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import backend as backend_mod
from . import datagen, metrics, querygen, refresh, schema

PHASES = ("LOAD", "POWER", "THROUGHPUT")
STATUSES = ("ok", "timeout", "error")

DEFAULT_TIMEOUT = 25_000.0

#: Query sessions to run concurrently in the throughput phase, by scale
#: factor.  Scale factors below the smallest entry use the smallest entry's
#: value; unlisted factors in between use the next lower listed one.
STREAM_COUNTS: tuple[tuple[float, int], ...] = (
    (1, 2),
    (10, 3),
    (30, 4),
    (100, 5),
    (300, 6),
    (1000, 7),
    (3000, 8),
    (10000, 9),
)


class DriverError(RuntimeError):
    """A phase could not run to completion."""


def stream_count(sf: float, override: Optional[int] = None) -> int:
    """Number of concurrent query sessions for the throughput phase."""
    if override is not None:
        if override < 1:
            raise ValueError("stream count override must be >= 1")
        return override
    if sf <= 0:
        raise ValueError("scale factor must be positive")
    chosen = STREAM_COUNTS[0][1]
    for bound, count in STREAM_COUNTS:
        if sf >= bound:
            chosen = count
    return chosen


@dataclass(frozen=True)
class RunConfig:
    """One immutable description of a full run.

    The same config object drives every phase; nothing about the system under
    test may change between the power and throughput measurements, and sharing
    a frozen config is how the driver enforces that.
    """

    sf: float
    backend: backend_mod.BackendConfig = field(
        default_factory=backend_mod.BackendConfig
    )
    seed: int = datagen.DEFAULT_SEED
    timeout: float = DEFAULT_TIMEOUT
    stream_count_override: Optional[int] = None
    output_dir: Optional[str] = None
    capture_plans: bool = False

    def __post_init__(self) -> None:
        if self.sf <= 0:
            raise ValueError("scale factor must be positive")
        if self.timeout <= 0:
            raise ValueError("per-query timeout must be positive")
        if self.stream_count_override is not None and self.stream_count_override < 1:
            raise ValueError("stream count override must be >= 1")

    @property
    def streams(self) -> int:
        return stream_count(self.sf, self.stream_count_override)

    def resolved_output_dir(self) -> Path:
        return Path(datagen.resolve_output_dir(self.output_dir))


@dataclass(frozen=True)
class TimingRecord:
    """One timed unit of work: a table load, a query, or a refresh function.

    ``start``/``end`` are wall-clock POSIX timestamps for correlation with the
    run log; ``elapsed`` is the authoritative duration.  A censored execution
    carries ``elapsed`` equal to the configured timeout, never more.
    """

    phase: str
    stream_id: int
    name: str
    start: float
    end: float
    elapsed: float
    status: str
    detail: str = ""
    plan: str = ""

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase: {self.phase!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status: {self.status!r}")
        if self.elapsed < 0:
            raise ValueError("elapsed must be >= 0")
        if not math.isclose(self.end - self.start, self.elapsed, abs_tol=1e-6):
            raise ValueError("start/end span must equal elapsed")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json_line(self) -> str:
        payload = {
            "phase": self.phase,
            "stream_id": self.stream_id,
            "name": self.name,
            "start": self.start,
            "end": self.end,
            "elapsed": self.elapsed,
            "status": self.status,
        }
        if self.detail:
            payload["detail"] = self.detail
        if self.plan:
            payload["plan"] = self.plan
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "TimingRecord":
        raw = json.loads(line)
        return cls(
            phase=raw["phase"],
            stream_id=int(raw["stream_id"]),
            name=raw["name"],
            start=float(raw["start"]),
            end=float(raw["end"]),
            elapsed=float(raw["elapsed"]),
            status=raw["status"],
            detail=raw.get("detail", ""),
            plan=raw.get("plan", ""),
        )


def _record(
    phase: str,
    stream_id: int,
    name: str,
    start_wall: float,
    elapsed: float,
    status: str,
    detail: str = "",
    plan: str = "",
) -> TimingRecord:
    return TimingRecord(
        phase=phase,
        stream_id=stream_id,
        name=name,
        start=start_wall,
        end=start_wall + elapsed,
        elapsed=elapsed,
        status=status,
        detail=detail,
        plan=plan,
    )


class RecordCollector:
    """Append-only, lock-guarded sink shared by all sessions of a phase."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._records: list[TimingRecord] = []

    def add(self, record: TimingRecord) -> None:
        with self._lock:
            self._records.append(record)

    def snapshot(self) -> tuple[TimingRecord, ...]:
        with self._lock:
            return tuple(self._records)


class RunLog:
    """Human-readable append-only log with `%H:%M:%S` timestamps.

    Query executions are bracketed by ``---q<N> ini---`` / ``---q<N> fim---``
    marker lines, each followed by a timestamp line; other events get a single
    timestamped message line.
    """

    def __init__(self, path: Optional[Path]) -> None:
        self._path = path
        self._lock = threading.Lock()

    @staticmethod
    def _stamp() -> str:
        return time.strftime("%H:%M:%S", time.localtime())

    def _write(self, text: str) -> None:
        if self._path is None:
            return
        with self._lock:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(text)

    def line(self, message: str) -> None:
        self._write(f"{self._stamp()} {message}\n")

    def marker(self, name: str, phase: str) -> None:
        self._write(f"---{name} {phase}---\n{self._stamp()}\n")


def _null_log() -> RunLog:
    return RunLog(None)


@dataclass(frozen=True)
class LoadReport:
    records: tuple[TimingRecord, ...]
    counts: dict[str, int]
    validation: schema.LoadValidation
    complete: bool

    @property
    def table_records(self) -> tuple[TimingRecord, ...]:
        return tuple(r for r in self.records if r.name in schema.TABLE_NAMES)

    @property
    def ok(self) -> bool:
        return self.complete and self.validation.ok


@dataclass(frozen=True)
class PowerReport:
    records: tuple[TimingRecord, ...]
    complete: bool

    def query_elapsed(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for r in self.records:
            if r.name.startswith("q"):
                out[int(r.name[1:])] = r.elapsed
        return out

    def refresh_elapsed(self) -> tuple[float, float]:
        by_name = {r.name: r.elapsed for r in self.records if r.name.startswith("RF")}
        return (by_name["RF1"], by_name["RF2"])


@dataclass(frozen=True)
class ThroughputReport:
    records: tuple[TimingRecord, ...]
    ts: float
    stream_count: int
    complete: bool

    def session_elapsed(self) -> dict[str, float]:
        """Total recorded work per session, keyed `stream<N>` / `refresh`."""
        out: dict[str, float] = {}
        for r in self.records:
            key = "refresh" if r.name.startswith("RF") else f"stream{r.stream_id}"
            out[key] = out.get(key, 0.0) + r.elapsed
        return out


def flat_file_paths(data_dir: Path) -> dict[str, Path]:
    return {name: data_dir / f"{name}.tbl" for name in schema.TABLE_NAMES}


def ensure_flat_files(cfg: RunConfig, generate: bool = False) -> dict[str, Path]:
    """Locate the eight flat files, optionally generating any that are absent."""
    data_dir = cfg.resolved_output_dir()
    paths = flat_file_paths(data_dir)
    missing = [name for name, p in paths.items() if not p.exists()]
    if missing and generate:
        for name in missing:
            datagen.generate_table(
                datagen.GenConfig(
                    cfg.sf, name, seed=cfg.seed, output_dir=str(data_dir)
                )
            )
        missing = [name for name, p in paths.items() if not p.exists()]
    if missing:
        raise DriverError(
            "missing flat file(s): "
            + ", ".join(str(paths[name]) for name in sorted(missing))
        )
    return paths


def load_test(
    cfg: RunConfig,
    b: Optional[backend_mod.Backend] = None,
    generate: bool = False,
    log: Optional[RunLog] = None,
) -> LoadReport:
    """Timed load: per-table bulk load, then PK+index build, then statistics.

    The three phases are timed separately and every table contributes its own
    record, in the fixed load order.  Row counts are validated at the end.
    """
    log = log or _null_log()
    paths = ensure_flat_files(cfg, generate=generate)
    own_backend = b is None
    if b is None:
        b = backend_mod.open_backend(cfg.backend)
    records: list[TimingRecord] = []
    complete = True
    try:
        b.create_schema()
        for name in schema.LOAD_ORDER:
            wall = time.time()
            t0 = time.monotonic()
            try:
                b.bulk_load(name, paths[name])
            except Exception as exc:  # noqa: BLE001 - partial report on failure
                records.append(
                    _record(
                        "LOAD", 0, name, wall, time.monotonic() - t0, "error", str(exc)
                    )
                )
                log.line(f"load {name} failed: {exc}")
                complete = False
                break
            records.append(_record("LOAD", 0, name, wall, time.monotonic() - t0, "ok"))
            log.line(f"load {name}")
        if complete:
            wall = time.time()
            t0 = time.monotonic()
            b.create_constraints()
            records.append(
                _record("LOAD", 0, "pk_and_index", wall, time.monotonic() - t0, "ok")
            )
            log.line("build primary keys and indexes")
            wall = time.time()
            t0 = time.monotonic()
            b.analyze()
            records.append(
                _record("LOAD", 0, "statistics", wall, time.monotonic() - t0, "ok")
            )
            log.line("collect optimizer statistics")
        counts = {name: b.table_count(name) for name in schema.TABLE_NAMES}
    finally:
        if own_backend:
            b.close()
    validation = schema.validate_load(counts, cfg.sf)
    return LoadReport(tuple(records), counts, validation, complete)


def _run_query(
    session: backend_mod.Session,
    instance: querygen.QueryInstance,
    cfg: RunConfig,
    phase: str,
    collector: RecordCollector,
    log: RunLog,
) -> TimingRecord:
    name = f"q{instance.template_id}"
    plan = ""
    if cfg.capture_plans:
        _plan_result, plan = session.capture_plan(instance.sql)
    log.marker(name, "ini")
    wall = time.time()
    result = session.execute(instance.sql, timeout=cfg.timeout)
    log.marker(name, "fim")
    record = _record(
        phase,
        instance.stream_id,
        name,
        wall,
        result.elapsed,
        result.status,
        result.detail,
        plan,
    )
    collector.add(record)
    return record


def _run_refresh_pair(
    session: backend_mod.Session,
    cfg: RunConfig,
    pair_index: int,
    stream_id: int,
    phase: str,
    collector: RecordCollector,
    log: RunLog,
) -> None:
    refresh_set = datagen.generate_refresh_set(cfg.sf, pair_index, cfg.seed)

    log.marker("RF1", "ini")
    wall = time.time()
    try:
        outcome = refresh.rf1(session, refresh_set)
        rec = _record(
            phase,
            stream_id,
            "RF1",
            wall,
            outcome.elapsed,
            "ok",
            f"orders={outcome.orders_affected} lineitems={outcome.lineitems_affected}",
        )
    except refresh.RefreshError as exc:
        rec = _record(phase, stream_id, "RF1", wall, time.time() - wall, "error", str(exc))
    collector.add(rec)
    log.marker("RF1", "fim")

    log.marker("RF2", "ini")
    wall = time.time()
    try:
        outcome = refresh.rf2(session, refresh_set.order_keys())
        rec = _record(
            phase,
            stream_id,
            "RF2",
            wall,
            outcome.elapsed,
            "ok",
            f"orders={outcome.orders_affected} lineitems={outcome.lineitems_affected}",
        )
    except refresh.RefreshError as exc:
        rec = _record(phase, stream_id, "RF2", wall, time.time() - wall, "error", str(exc))
    collector.add(rec)
    log.marker("RF2", "fim")


def power_test(
    cfg: RunConfig,
    b: Optional[backend_mod.Backend] = None,
    log: Optional[RunLog] = None,
) -> PowerReport:
    """Single-session measurement: RF1, the 22 stream-0 queries, RF2.

    Queries run strictly one after another in the fixed stream-0 order; each
    is censored at the configured timeout.  A backend failure aborts the
    phase, returning the records gathered so far.
    """
    log = log or _null_log()
    own_backend = b is None
    if b is None:
        b = backend_mod.open_backend(cfg.backend)
    collector = RecordCollector()
    complete = True
    try:
        session = b.open_session()
        try:
            refresh_set = datagen.generate_refresh_set(cfg.sf, 1, cfg.seed)

            log.marker("RF1", "ini")
            wall = time.time()
            outcome = refresh.rf1(session, refresh_set)
            collector.add(
                _record("POWER", 0, "RF1", wall, outcome.elapsed, "ok")
            )
            log.marker("RF1", "fim")

            for instance in querygen.stream_instances(0, cfg.seed, cfg.sf):
                _run_query(session, instance, cfg, "POWER", collector, log)

            log.marker("RF2", "ini")
            wall = time.time()
            outcome = refresh.rf2(session, refresh_set.order_keys())
            collector.add(
                _record("POWER", 0, "RF2", wall, outcome.elapsed, "ok")
            )
            log.marker("RF2", "fim")
        finally:
            session.close()
    except Exception as exc:  # noqa: BLE001 - partial records on abort
        log.line(f"power test aborted: {exc}")
        complete = False
    finally:
        if own_backend:
            b.close()
    return PowerReport(collector.snapshot(), complete)


def _query_session(
    b: backend_mod.Backend,
    cfg: RunConfig,
    sid: int,
    collector: RecordCollector,
    log: RunLog,
    spans: dict[str, tuple[float, float]],
    failures: list[str],
) -> None:
    t0 = time.monotonic()
    try:
        session = b.open_session()
        try:
            for instance in querygen.stream_instances(sid, cfg.seed, cfg.sf):
                _run_query(session, instance, cfg, "THROUGHPUT", collector, log)
        finally:
            session.close()
    except Exception as exc:  # noqa: BLE001 - one session failing must not stop others
        failures.append(f"stream {sid}: {exc}")
        log.line(f"stream {sid} failed: {exc}")
    finally:
        spans[f"stream{sid}"] = (t0, time.monotonic())


def _refresh_session(
    b: backend_mod.Backend,
    cfg: RunConfig,
    collector: RecordCollector,
    log: RunLog,
    spans: dict[str, tuple[float, float]],
    failures: list[str],
) -> None:
    t0 = time.monotonic()
    try:
        session = b.open_session()
        try:
            for s in range(1, cfg.streams + 1):
                _run_refresh_pair(
                    session, cfg, s + 1, s, "THROUGHPUT", collector, log
                )
        finally:
            session.close()
    except Exception as exc:  # noqa: BLE001
        failures.append(f"refresh session: {exc}")
        log.line(f"refresh session failed: {exc}")
    finally:
        spans["refresh"] = (t0, time.monotonic())


def throughput_test(
    cfg: RunConfig,
    b: Optional[backend_mod.Backend] = None,
    log: Optional[RunLog] = None,
) -> ThroughputReport:
    """Concurrent measurement: S query sessions plus one refresh session.

    Each query session runs its own 22-query schedule sequentially; the
    refresh session runs S insert/delete pairs serially, concurrent with the
    queries.  Ts spans from the first session start to the last session end.
    """
    log = log or _null_log()
    own_backend = b is None
    if b is None:
        b = backend_mod.open_backend(cfg.backend)
    collector = RecordCollector()
    spans: dict[str, tuple[float, float]] = {}
    failures: list[str] = []
    s = cfg.streams
    try:
        threads = [
            threading.Thread(
                target=_query_session,
                args=(b, cfg, sid, collector, log, spans, failures),
                name=f"query-stream-{sid}",
            )
            for sid in range(1, s + 1)
        ]
        threads.append(
            threading.Thread(
                target=_refresh_session,
                args=(b, cfg, collector, log, spans, failures),
                name="refresh-stream",
            )
        )
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        if own_backend:
            b.close()
    starts = [span[0] for span in spans.values()]
    ends = [span[1] for span in spans.values()]
    ts = (max(ends) - min(starts)) if spans else 0.0
    return ThroughputReport(collector.snapshot(), ts, s, not failures)


def capture_plan(b: backend_mod.Backend, sql: str) -> str:
    """Fetch the backend's execution plan for a query without running it."""
    if not sql.strip():
        raise ValueError("cannot capture a plan for empty SQL")
    session = b.open_session()
    try:
        result, plan = session.capture_plan(sql)
    finally:
        session.close()
    if not result.ok:
        raise DriverError(f"plan capture failed: {result.detail}")
    return plan


def build_metrics_input(
    power: PowerReport,
    throughput: ThroughputReport,
    sf: float,
    total_price: Optional[float] = None,
) -> metrics.MetricsInput:
    """Assemble the metric formula inputs from the two measured phases."""
    by_query = power.query_elapsed()
    if sorted(by_query) != list(range(1, 23)):
        raise ValueError("power report must contain exactly queries 1..22")
    qi = tuple(by_query[qid] for qid in range(1, 23))
    ri = power.refresh_elapsed()
    censored = sum(
        1
        for r in (*power.records, *throughput.records)
        if r.status == "timeout"
    )
    return metrics.MetricsInput(
        qi=qi,
        ri=ri,
        s=throughput.stream_count,
        ts=throughput.ts,
        sf=sf,
        total_price=total_price,
        censored_count=censored,
    )
