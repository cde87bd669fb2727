"""Uniform execution layer: a real SQL database or a hermetic simulator.

Both backends expose the same surface: sessions that execute statements
under a timeout (errors and cancellations come back as statuses, never
exceptions), a bulk-load path for the pipe-delimited flat files, table
counts for load validation, and the insert/delete primitives the refresh
functions need, with per-session transaction control.

The simulator answers queries from a latency model (pattern -> seconds,
first match wins, else the default) by actually sleeping, so wall-clock
orchestration and timeout censoring behave exactly as against a real
server.  It never evaluates SQL; it keeps per-table row counters, the
order-key population with per-order lineitem counts (so delete cascades
and duplicate-key detection are exact), and full row lists only for the
catalog-sized tables.

The sql_dbms kind dispatches on the DSN: ``postgres://``/``postgresql://``
uses the optional psycopg driver; anything else is treated as an SQLite
path (with ``sqlite:`` / ``sqlite:///`` prefixes stripped, and
``:memory:`` mapped to a process-shared in-memory database).
"""

from __future__ import annotations

import re
import sqlite3
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from . import schema

__all__ = [
    "BackendConfig",
    "ExecResult",
    "BulkLoadError",
    "Backend",
    "Session",
    "open_backend",
]


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "simulator"  # "sql_dbms" | "simulator"
    dsn: str = ""
    latency_model: Mapping[str, float] = field(default_factory=dict)
    default_latency: float = 0.01
    select_rows: int = 1
    plan_prefix: str = "EXPLAIN"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sql_dbms", "simulator"):
            raise ValueError(f"unknown backend kind: {self.kind!r}")
        if self.default_latency < 0:
            raise ValueError("default latency must be >= 0")
        for pattern, seconds in self.latency_model.items():
            if seconds < 0:
                raise ValueError(f"latency for {pattern!r} must be >= 0")
        if not self.plan_prefix:
            raise ValueError("plan_prefix must be nonempty")


@dataclass(frozen=True)
class ExecResult:
    rows: Optional[int]
    elapsed: float
    status: str  # "ok" | "timeout" | "error"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class BulkLoadError(ValueError):
    pass


def _parse_flat_file(table: str, path: str | Path) -> list[tuple[str, ...]]:
    arity = schema.table(table).arity
    rows: list[tuple[str, ...]] = []
    with open(path, "r", encoding="ascii", newline="") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("|")
            if len(fields) != arity:
                raise BulkLoadError(
                    f"{path}: line {number}: expected {arity} fields, got {len(fields)}"
                )
            rows.append(tuple(fields))
    return rows


class Session:
    """One independent execution context; single-threaded by contract."""

    def execute(self, sql: str, timeout: Optional[float] = None) -> ExecResult:
        raise NotImplementedError

    def capture_plan(
        self, sql: str, timeout: Optional[float] = None
    ) -> tuple[ExecResult, str]:
        raise NotImplementedError

    def insert_rows(self, table: str, rows: Sequence[Sequence[str]]) -> ExecResult:
        raise NotImplementedError

    def delete_orders_cascade(self, keys: Sequence[int]) -> ExecResult:
        raise NotImplementedError

    def begin(self) -> ExecResult:
        raise NotImplementedError

    def commit(self) -> ExecResult:
        raise NotImplementedError

    def rollback(self) -> ExecResult:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class Backend:
    """Factory for sessions plus the out-of-session load/inspect paths."""

    config: BackendConfig

    def open_session(self) -> Session:
        raise NotImplementedError

    def create_schema(self) -> None:
        raise NotImplementedError

    def create_constraints(self) -> None:
        raise NotImplementedError

    def analyze(self) -> None:
        raise NotImplementedError

    def bulk_load(self, table: str, path: str | Path) -> int:
        raise NotImplementedError

    def table_count(self, table: str) -> int:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


def open_backend(config: BackendConfig) -> Backend:
    if config.kind == "simulator":
        return SimulatorBackend(config)
    dsn = config.dsn
    if dsn.startswith(("postgres://", "postgresql://")):
        return PostgresBackend(config)
    return SqliteBackend(config)


# --- simulator -----------------------------------------------------------

_CATALOG_TABLES = ("region", "nation")


class _SimState:
    def __init__(self):
        self.lock = threading.RLock()
        self.counts: dict[str, int] = {name: 0 for name in schema.TABLE_NAMES}
        self.order_lines: dict[int, int] = {}
        self.catalog_rows: dict[str, list[tuple[str, ...]]] = {
            name: [] for name in _CATALOG_TABLES
        }


class _SimTxn:
    def __init__(self):
        self.count_delta: dict[str, int] = {}
        self.new_orders: dict[int, int] = {}
        self.removed_orders: set[int] = set()


class SimulatorSession(Session):
    def __init__(self, backend: "SimulatorBackend"):
        self._backend = backend
        self._state = backend._state
        self._txn: Optional[_SimTxn] = None
        self._closed = False

    # latency lookup: first matching pattern wins, else the default
    def _latency(self, sql: str) -> float:
        for pattern, seconds in self._backend.config.latency_model.items():
            if re.search(pattern, sql, re.IGNORECASE):
                return seconds
        return self._backend.config.default_latency

    def _guard(self) -> Optional[ExecResult]:
        if self._closed:
            return ExecResult(None, 0.0, "error", "session closed")
        return None

    def execute(self, sql: str, timeout: Optional[float] = None) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        start = time.monotonic()
        latency = self._latency(sql)
        if timeout is not None and latency > timeout:
            time.sleep(timeout)
            return ExecResult(None, timeout, "timeout", f"cancelled at {timeout}s")
        time.sleep(latency)
        elapsed = time.monotonic() - start
        return ExecResult(self._backend.config.select_rows, elapsed, "ok")

    def capture_plan(
        self, sql: str, timeout: Optional[float] = None
    ) -> tuple[ExecResult, str]:
        closed = self._guard()
        if closed:
            return closed, ""
        prefix = self._backend.config.plan_prefix
        plan = f"{prefix} (simulated) latency={self._latency(sql)}s\n{sql}"
        return ExecResult(0, 0.0, "ok"), plan

    def _apply(self, txn: _SimTxn) -> None:
        state = self._state
        for table, delta in txn.count_delta.items():
            state.counts[table] += delta
        for key, lines in txn.new_orders.items():
            state.order_lines[key] = lines
        for key in txn.removed_orders:
            state.order_lines.pop(key, None)

    def insert_rows(self, table: str, rows: Sequence[Sequence[str]]) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        start = time.monotonic()
        schema.table(table)
        with self._state.lock:
            txn = self._txn if self._txn is not None else _SimTxn()
            if table == "orders":
                for row in rows:
                    key = int(row[0])
                    exists = key in self._state.order_lines and key not in txn.removed_orders
                    if exists or key in txn.new_orders:
                        return ExecResult(
                            None,
                            time.monotonic() - start,
                            "error",
                            f"duplicate key value violates unique constraint: orders pk {key}",
                        )
                    txn.new_orders[key] = 0
            elif table == "lineitem":
                for row in rows:
                    key = int(row[0])
                    if key in txn.new_orders:
                        txn.new_orders[key] += 1
                    else:
                        self._state.order_lines[key] = (
                            self._state.order_lines.get(key, 0) + 1
                        )
            txn.count_delta[table] = txn.count_delta.get(table, 0) + len(rows)
            if self._txn is None:
                self._apply(txn)
        return ExecResult(len(rows), time.monotonic() - start, "ok")

    def delete_orders_cascade(self, keys: Sequence[int]) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        start = time.monotonic()
        with self._state.lock:
            txn = self._txn if self._txn is not None else _SimTxn()
            orders_deleted = 0
            lines_deleted = 0
            for key in keys:
                if key in txn.new_orders:
                    lines_deleted += txn.new_orders.pop(key)
                    orders_deleted += 1
                elif key in self._state.order_lines and key not in txn.removed_orders:
                    txn.removed_orders.add(key)
                    lines_deleted += self._state.order_lines[key]
                    orders_deleted += 1
            txn.count_delta["orders"] = txn.count_delta.get("orders", 0) - orders_deleted
            txn.count_delta["lineitem"] = (
                txn.count_delta.get("lineitem", 0) - lines_deleted
            )
            if self._txn is None:
                self._apply(txn)
        return ExecResult(
            orders_deleted + lines_deleted,
            time.monotonic() - start,
            "ok",
            f"orders={orders_deleted} lineitems={lines_deleted}",
        )

    def begin(self) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        if self._txn is not None:
            return ExecResult(None, 0.0, "error", "transaction already open")
        self._txn = _SimTxn()
        return ExecResult(0, 0.0, "ok")

    def commit(self) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        if self._txn is None:
            return ExecResult(None, 0.0, "error", "no open transaction")
        with self._state.lock:
            self._apply(self._txn)
        self._txn = None
        return ExecResult(0, 0.0, "ok")

    def rollback(self) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        self._txn = None
        return ExecResult(0, 0.0, "ok")

    def close(self) -> None:
        self._txn = None
        self._closed = True


class SimulatorBackend(Backend):
    def __init__(self, config: BackendConfig):
        self.config = config
        self._state = _SimState()

    def open_session(self) -> Session:
        return SimulatorSession(self)

    def create_schema(self) -> None:
        self._state = _SimState()

    def create_constraints(self) -> None:
        pass

    def analyze(self) -> None:
        pass

    def bulk_load(self, table: str, path: str | Path) -> int:
        rows = _parse_flat_file(table, path)
        with self._state.lock:
            self._state.counts[table] += len(rows)
            if table in _CATALOG_TABLES:
                self._state.catalog_rows[table].extend(rows)
            elif table == "orders":
                for row in rows:
                    key = int(row[0])
                    self._state.order_lines.setdefault(key, 0)
            elif table == "lineitem":
                for row in rows:
                    key = int(row[0])
                    self._state.order_lines[key] = (
                        self._state.order_lines.get(key, 0) + 1
                    )
        return len(rows)

    def table_count(self, table: str) -> int:
        schema.table(table)
        with self._state.lock:
            return self._state.counts[table]

    def catalog_rows(self, table: str) -> list[tuple[str, ...]]:
        with self._state.lock:
            return list(self._state.catalog_rows[table])

    def close(self) -> None:
        pass


# --- sqlite --------------------------------------------------------------


def _interruptible(connection: sqlite3.Connection, timeout: Optional[float]):
    """Arm a timer that interrupts the connection at the timeout."""
    if timeout is None:
        return None
    timer = threading.Timer(timeout, connection.interrupt)
    timer.daemon = True
    timer.start()
    return timer


class SqliteSession(Session):
    def __init__(self, backend: "SqliteBackend"):
        self._backend = backend
        self._con = backend._connect()
        self._closed = False

    def _guard(self) -> Optional[ExecResult]:
        if self._closed:
            return ExecResult(None, 0.0, "error", "session closed")
        return None

    def _run(
        self,
        sql: str,
        timeout: Optional[float],
        script: bool = False,
    ) -> tuple[ExecResult, list]:
        closed = self._guard()
        if closed:
            return closed, []
        start = time.monotonic()
        timer = _interruptible(self._con, timeout)
        try:
            if script:
                self._con.executescript(sql)
                fetched: list = []
                count = 0
            else:
                cursor = self._con.execute(sql)
                fetched = cursor.fetchall() if cursor.description else []
                count = len(fetched) if cursor.description else max(cursor.rowcount, 0)
            elapsed = time.monotonic() - start
            return ExecResult(count, elapsed, "ok"), fetched
        except sqlite3.OperationalError as exc:
            if "interrupt" in str(exc).lower() and timeout is not None:
                return ExecResult(None, timeout, "timeout", f"cancelled at {timeout}s"), []
            return ExecResult(None, time.monotonic() - start, "error", str(exc)), []
        except sqlite3.Error as exc:
            return ExecResult(None, time.monotonic() - start, "error", str(exc)), []
        finally:
            if timer is not None:
                timer.cancel()

    def execute(self, sql: str, timeout: Optional[float] = None) -> ExecResult:
        # Stream blocks may hold several statements (view create/drop).
        script = sql.count(";") > 1
        result, _ = self._run(sql, timeout, script=script)
        return result

    def capture_plan(
        self, sql: str, timeout: Optional[float] = None
    ) -> tuple[ExecResult, str]:
        statement = sql.strip().rstrip(";")
        result, rows = self._run(
            f"{self._backend.config.plan_prefix} {statement}", timeout
        )
        plan = "\n".join(" ".join(str(v) for v in row) for row in rows)
        return result, plan

    def insert_rows(self, table: str, rows: Sequence[Sequence[str]]) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        start = time.monotonic()
        spec = schema.table(table)
        placeholders = ",".join("?" * spec.arity)
        try:
            self._con.executemany(
                f"INSERT INTO {table} VALUES ({placeholders})", [tuple(r) for r in rows]
            )
            return ExecResult(len(rows), time.monotonic() - start, "ok")
        except sqlite3.Error as exc:
            return ExecResult(None, time.monotonic() - start, "error", str(exc))

    def delete_orders_cascade(self, keys: Sequence[int]) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        start = time.monotonic()
        orders_deleted = 0
        lines_deleted = 0
        try:
            for offset in range(0, len(keys), 500):
                chunk = list(keys[offset : offset + 500])
                marks = ",".join("?" * len(chunk))
                cur = self._con.execute(
                    f"DELETE FROM lineitem WHERE l_orderkey IN ({marks})", chunk
                )
                lines_deleted += max(cur.rowcount, 0)
                cur = self._con.execute(
                    f"DELETE FROM orders WHERE o_orderkey IN ({marks})", chunk
                )
                orders_deleted += max(cur.rowcount, 0)
            return ExecResult(
                orders_deleted + lines_deleted,
                time.monotonic() - start,
                "ok",
                f"orders={orders_deleted} lineitems={lines_deleted}",
            )
        except sqlite3.Error as exc:
            return ExecResult(None, time.monotonic() - start, "error", str(exc))

    def _txn_stmt(self, statement: str) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        try:
            self._con.execute(statement)
            return ExecResult(0, 0.0, "ok")
        except sqlite3.Error as exc:
            return ExecResult(None, 0.0, "error", str(exc))

    def begin(self) -> ExecResult:
        return self._txn_stmt("BEGIN")

    def commit(self) -> ExecResult:
        return self._txn_stmt("COMMIT")

    def rollback(self) -> ExecResult:
        return self._txn_stmt("ROLLBACK")

    def close(self) -> None:
        if not self._closed:
            self._con.close()
            self._closed = True


class SqliteBackend(Backend):
    def __init__(self, config: BackendConfig):
        self.config = config
        dsn = config.dsn
        for prefix in ("sqlite:///", "sqlite://", "sqlite:"):
            if dsn.startswith(prefix):
                dsn = dsn[len(prefix):]
                break
        self._uri = False
        if dsn in ("", ":memory:"):
            # one shared in-memory database per backend instance
            self._path = f"file:dwbench-{uuid.uuid4().hex}?mode=memory&cache=shared"
            self._uri = True
        else:
            self._path = dsn
        # anchor connection keeps a shared in-memory database alive
        self._anchor = self._connect()

    def _connect(self) -> sqlite3.Connection:
        con = sqlite3.connect(
            self._path,
            uri=self._uri,
            check_same_thread=False,
            isolation_level=None,
            timeout=60.0,
        )
        con.execute("PRAGMA busy_timeout = 60000")
        return con

    def open_session(self) -> Session:
        return SqliteSession(self)

    def create_schema(self) -> None:
        self._anchor.executescript(schema.emit_ddl(include_constraints=False))

    def create_constraints(self) -> None:
        self._anchor.executescript(schema.emit_constraint_ddl())

    def analyze(self) -> None:
        self._anchor.execute("ANALYZE")

    def bulk_load(self, table: str, path: str | Path) -> int:
        rows = _parse_flat_file(table, path)
        spec = schema.table(table)
        placeholders = ",".join("?" * spec.arity)
        self._anchor.execute("BEGIN")
        try:
            self._anchor.executemany(
                f"INSERT INTO {table} VALUES ({placeholders})", rows
            )
            self._anchor.execute("COMMIT")
        except sqlite3.Error:
            self._anchor.execute("ROLLBACK")
            raise
        return len(rows)

    def table_count(self, table: str) -> int:
        schema.table(table)
        cur = self._anchor.execute(f"SELECT count(*) FROM {table}")
        return int(cur.fetchone()[0])

    def close(self) -> None:
        self._anchor.close()


# --- postgres (optional driver) ------------------------------------------


class PostgresSession(Session):
    def __init__(self, backend: "PostgresBackend"):
        self._backend = backend
        self._con = backend._connect()
        self._closed = False

    def _guard(self) -> Optional[ExecResult]:
        if self._closed:
            return ExecResult(None, 0.0, "error", "session closed")
        return None

    def _cancel_timer(self, timeout: Optional[float]):
        if timeout is None:
            return None
        timer = threading.Timer(timeout, self._con.cancel)
        timer.daemon = True
        timer.start()
        return timer

    def execute(self, sql: str, timeout: Optional[float] = None) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        import psycopg

        start = time.monotonic()
        timer = self._cancel_timer(timeout)
        try:
            with self._con.cursor() as cur:
                cur.execute(sql)
                if cur.description is not None:
                    count = len(cur.fetchall())
                else:
                    count = max(cur.rowcount, 0)
            self._con.commit()
            return ExecResult(count, time.monotonic() - start, "ok")
        except psycopg.errors.QueryCanceled:
            self._con.rollback()
            return ExecResult(None, timeout or 0.0, "timeout", f"cancelled at {timeout}s")
        except psycopg.Error as exc:
            self._con.rollback()
            return ExecResult(None, time.monotonic() - start, "error", str(exc))
        finally:
            if timer is not None:
                timer.cancel()

    def capture_plan(
        self, sql: str, timeout: Optional[float] = None
    ) -> tuple[ExecResult, str]:
        closed = self._guard()
        if closed:
            return closed, ""
        import psycopg

        statement = sql.strip().rstrip(";")
        start = time.monotonic()
        try:
            with self._con.cursor() as cur:
                cur.execute(f"{self._backend.config.plan_prefix} {statement}")
                rows = cur.fetchall()
            self._con.commit()
            plan = "\n".join(" ".join(str(v) for v in row) for row in rows)
            return ExecResult(len(rows), time.monotonic() - start, "ok"), plan
        except psycopg.Error as exc:
            self._con.rollback()
            return ExecResult(None, time.monotonic() - start, "error", str(exc)), ""

    def insert_rows(self, table: str, rows: Sequence[Sequence[str]]) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        import psycopg

        spec = schema.table(table)
        placeholders = ",".join(["%s"] * spec.arity)
        start = time.monotonic()
        try:
            with self._con.cursor() as cur:
                cur.executemany(
                    f"INSERT INTO {table} VALUES ({placeholders})",
                    [tuple(r) for r in rows],
                )
            return ExecResult(len(rows), time.monotonic() - start, "ok")
        except psycopg.Error as exc:
            return ExecResult(None, time.monotonic() - start, "error", str(exc))

    def delete_orders_cascade(self, keys: Sequence[int]) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        import psycopg

        start = time.monotonic()
        try:
            with self._con.cursor() as cur:
                cur.execute(
                    "DELETE FROM lineitem WHERE l_orderkey = ANY(%s)", (list(keys),)
                )
                lines_deleted = max(cur.rowcount, 0)
                cur.execute(
                    "DELETE FROM orders WHERE o_orderkey = ANY(%s)", (list(keys),)
                )
                orders_deleted = max(cur.rowcount, 0)
            return ExecResult(
                orders_deleted + lines_deleted,
                time.monotonic() - start,
                "ok",
                f"orders={orders_deleted} lineitems={lines_deleted}",
            )
        except psycopg.Error as exc:
            return ExecResult(None, time.monotonic() - start, "error", str(exc))

    def _txn(self, action: str) -> ExecResult:
        closed = self._guard()
        if closed:
            return closed
        import psycopg

        try:
            if action == "begin":
                self._con.execute("BEGIN")
            elif action == "commit":
                self._con.commit()
            else:
                self._con.rollback()
            return ExecResult(0, 0.0, "ok")
        except psycopg.Error as exc:
            return ExecResult(None, 0.0, "error", str(exc))

    def begin(self) -> ExecResult:
        return self._txn("begin")

    def commit(self) -> ExecResult:
        return self._txn("commit")

    def rollback(self) -> ExecResult:
        return self._txn("rollback")

    def close(self) -> None:
        if not self._closed:
            self._con.close()
            self._closed = True


class PostgresBackend(Backend):
    def __init__(self, config: BackendConfig):
        self.config = config
        self._anchor = self._connect()

    def _connect(self):
        try:
            import psycopg
        except ImportError as exc:  # pragma: no cover - optional extra
            raise RuntimeError(
                "postgres support needs the 'postgres' extra (pip install dwbench[postgres])"
            ) from exc
        return psycopg.connect(self.config.dsn, autocommit=False)

    def open_session(self) -> Session:
        return PostgresSession(self)

    def create_schema(self) -> None:
        with self._anchor.cursor() as cur:
            cur.execute(schema.emit_ddl(include_constraints=False))
        self._anchor.commit()

    def create_constraints(self) -> None:
        with self._anchor.cursor() as cur:
            cur.execute(schema.emit_constraint_ddl())
        self._anchor.commit()

    def analyze(self) -> None:
        with self._anchor.cursor() as cur:
            cur.execute("ANALYZE")
        self._anchor.commit()

    def bulk_load(self, table: str, path: str | Path) -> int:
        # validate the flat file first so malformed lines abort with a
        # line number before any byte reaches the server
        rows = _parse_flat_file(table, path)
        with self._anchor.cursor() as cur:
            with cur.copy(
                f"COPY {table} FROM STDIN (FORMAT text, DELIMITER '|')"
            ) as copy:
                with open(path, "rb") as handle:
                    while chunk := handle.read(65536):
                        copy.write(chunk)
        self._anchor.commit()
        return len(rows)

    def table_count(self, table: str) -> int:
        schema.table(table)
        with self._anchor.cursor() as cur:
            cur.execute(f"SELECT count(*) FROM {table}")
            return int(cur.fetchone()[0])

    def close(self) -> None:
        self._anchor.close()
