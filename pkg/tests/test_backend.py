"""Session, timeout, bulk-load, and transaction tests for both backends."""

from __future__ import annotations

import threading
import time
from pathlib import Path

import pytest

from dwbench import backend, datagen, schema

SF = 0.01


def sim(**kwargs) -> backend.Backend:
    defaults = dict(kind="simulator", default_latency=0.001)
    defaults.update(kwargs)
    return backend.open_backend(backend.BackendConfig(**defaults))


@pytest.fixture(scope="module")
def flat_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("flat")
    datagen.generate_table(datagen.GenConfig(SF, "all", output_dir=str(out)))
    return out


class TestConfig:
    def test_kind_validated(self):
        with pytest.raises(ValueError):
            backend.BackendConfig(kind="mystery")

    def test_negative_latency_rejected(self):
        with pytest.raises(ValueError):
            backend.BackendConfig(kind="simulator", default_latency=-1)
        with pytest.raises(ValueError):
            backend.BackendConfig(kind="simulator", latency_model={"q1": -0.5})

    def test_plan_prefix_nonempty(self):
        with pytest.raises(ValueError):
            backend.BackendConfig(kind="simulator", plan_prefix="")


class TestSimulatorExecute:
    def test_default_latency_elapsed(self):
        b = sim(default_latency=0.01)
        s = b.open_session()
        result = s.execute("SELECT 1")
        assert result.ok
        assert result.rows == 1
        assert 0.009 <= result.elapsed <= 0.05

    def test_pattern_latency_beats_default(self):
        b = sim(latency_model={"slowpoke": 0.05}, default_latency=0.001)
        s = b.open_session()
        fast = s.execute("SELECT 1")
        slow = s.execute("SELECT * FROM slowpoke")
        assert slow.elapsed > fast.elapsed
        assert slow.elapsed >= 0.045

    def test_timeout_censors_at_bound(self):
        b = sim(latency_model={"glacier": 10.0})
        s = b.open_session()
        start = time.monotonic()
        result = s.execute("SELECT * FROM glacier", timeout=0.05)
        wall = time.monotonic() - start
        assert result.status == "timeout"
        assert result.rows is None
        assert result.elapsed == 0.05
        assert wall < 1.0  # did not actually wait the modeled 10 s

    def test_closed_session_reports_error(self):
        s = sim().open_session()
        s.close()
        result = s.execute("SELECT 1")
        assert result.status == "error"
        assert "session closed" in result.detail

    def test_sessions_are_independent(self):
        b = sim()
        s1, s2 = b.open_session(), b.open_session()
        s1.close()
        assert s2.execute("SELECT 1").ok

    def test_many_concurrent_sessions(self):
        b = sim(default_latency=0.01)
        sessions = [b.open_session() for _ in range(10)]
        results = [None] * len(sessions)

        def run(i):
            results[i] = sessions[i].execute(f"SELECT {i}")

        threads = [threading.Thread(target=run, args=(i,)) for i in range(len(sessions))]
        start = time.monotonic()
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        wall = time.monotonic() - start
        assert all(r.ok for r in results)
        assert wall < 0.1  # ran in parallel, not 10 x 10 ms serially

    def test_capture_plan(self):
        b = sim(plan_prefix="EXPLAIN ANALYZE")
        result, plan = b.open_session().capture_plan("SELECT 1")
        assert result.ok
        assert plan.startswith("EXPLAIN ANALYZE")


class TestSimulatorLoad:
    def test_bulk_load_counts(self, flat_dir):
        b = sim()
        assert b.bulk_load("region", flat_dir / "region.tbl") == 5
        assert b.bulk_load("nation", flat_dir / "nation.tbl") == 25
        assert b.table_count("region") == 5
        assert b.table_count("nation") == 25

    def test_empty_file_loads_zero(self, tmp_path):
        empty = tmp_path / "region.tbl"
        empty.write_text("")
        assert sim().bulk_load("region", empty) == 0

    def test_malformed_line_names_line_number(self, tmp_path):
        bad = tmp_path / "region.tbl"
        bad.write_text("1|AFRICA|ok\n2|AMERICA|ok\n3|ASIA\n")
        with pytest.raises(backend.BulkLoadError) as err:
            sim().bulk_load("region", bad)
        assert "line 3" in str(err.value)

    def test_full_load_matches_validate(self, flat_dir):
        b = sim()
        counts = {}
        for name in schema.LOAD_ORDER:
            counts[name] = b.bulk_load(name, flat_dir / f"{name}.tbl")
        report = schema.validate_load(
            {name: b.table_count(name) for name in schema.TABLE_NAMES}, SF
        )
        assert report.ok

    def test_catalog_rows_retained(self, flat_dir):
        b = sim()
        b.bulk_load("region", flat_dir / "region.tbl")
        rows = b.catalog_rows("region")
        assert [r[1] for r in rows] == [
            "AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST",
        ]


class TestSimulatorRefreshSemantics:
    def loaded(self, flat_dir):
        b = sim(default_latency=0.0)
        for name in schema.LOAD_ORDER:
            b.bulk_load(name, flat_dir / f"{name}.tbl")
        return b

    def test_insert_then_delete_restores_counts(self, flat_dir):
        b = self.loaded(flat_dir)
        rs = datagen.generate_refresh_set(SF, 1)
        before = {t: b.table_count(t) for t in ("orders", "lineitem")}
        s = b.open_session()
        assert s.begin().ok
        assert s.insert_rows("orders", rs.new_orders).ok
        assert s.insert_rows("lineitem", rs.new_lineitems).ok
        assert s.commit().ok
        assert b.table_count("orders") == before["orders"] + len(rs.new_orders)
        assert b.table_count("lineitem") == before["lineitem"] + len(rs.new_lineitems)

        new_keys = [int(r[0]) for r in rs.new_orders]
        s.begin()
        result = s.delete_orders_cascade(new_keys)
        assert result.ok
        assert f"orders={len(rs.new_orders)}" in result.detail
        assert f"lineitems={len(rs.new_lineitems)}" in result.detail
        s.commit()
        assert {t: b.table_count(t) for t in ("orders", "lineitem")} == before

    def test_duplicate_insert_reports_pk_violation(self, flat_dir):
        b = self.loaded(flat_dir)
        rs = datagen.generate_refresh_set(SF, 1)
        s = b.open_session()
        s.begin()
        s.insert_rows("orders", rs.new_orders)
        s.insert_rows("lineitem", rs.new_lineitems)
        s.commit()
        s.begin()
        result = s.insert_rows("orders", rs.new_orders)
        assert result.status == "error"
        assert "duplicate key" in result.detail
        s.rollback()
        assert b.table_count("orders") == 15000 + len(rs.new_orders)

    def test_rollback_discards_staged_rows(self, flat_dir):
        b = self.loaded(flat_dir)
        rs = datagen.generate_refresh_set(SF, 2)
        before = b.table_count("orders")
        s = b.open_session()
        s.begin()
        s.insert_rows("orders", rs.new_orders)
        s.rollback()
        assert b.table_count("orders") == before

    def test_delete_cascade_counts_base_lineitems(self, flat_dir):
        b = self.loaded(flat_dir)
        rows = list(datagen.generate_rows("lineitem", SF))
        per_order: dict[int, int] = {}
        for row in rows:
            key = int(row[0])
            per_order[key] = per_order.get(key, 0) + 1
        keys = [1, 2, 3]
        expected_lines = sum(per_order[k] for k in keys)
        s = b.open_session()
        s.begin()
        result = s.delete_orders_cascade(keys)
        s.commit()
        assert f"lineitems={expected_lines}" in result.detail
        assert b.table_count("orders") == 15000 - 3


class TestSqliteBackend:
    def make(self, tmp_path=None):
        dsn = "" if tmp_path is None else str(tmp_path / "bench.db")
        b = backend.open_backend(backend.BackendConfig(kind="sql_dbms", dsn=dsn))
        b.create_schema()
        return b

    def test_dispatch_on_dsn(self):
        b = backend.open_backend(backend.BackendConfig(kind="sql_dbms", dsn=":memory:"))
        assert isinstance(b, backend.SqliteBackend)

    def test_bulk_load_and_count(self, flat_dir):
        b = self.make()
        assert b.bulk_load("region", flat_dir / "region.tbl") == 5
        assert b.table_count("region") == 5

    def test_malformed_line_aborts_with_line(self, tmp_path, flat_dir):
        b = self.make()
        bad = tmp_path / "nation.tbl"
        bad.write_text("1|ALGERIA|1|x\n2|broken\n")
        with pytest.raises(backend.BulkLoadError) as err:
            b.bulk_load("nation", bad)
        assert "line 2" in str(err.value)

    def test_execute_query(self, flat_dir):
        b = self.make()
        b.bulk_load("region", flat_dir / "region.tbl")
        s = b.open_session()
        result = s.execute("SELECT * FROM region")
        assert result.ok
        assert result.rows == 5

    def test_sql_error_carried_in_status(self):
        s = self.make().open_session()
        result = s.execute("SELECT * FROM not_a_table")
        assert result.status == "error"
        assert "not_a_table" in result.detail

    def test_closed_session(self):
        s = self.make().open_session()
        s.close()
        assert s.execute("SELECT 1").status == "error"
        assert "session closed" in s.execute("SELECT 1").detail

    def test_timeout_interrupts_long_statement(self):
        b = self.make()
        s = b.open_session()
        # recursive CTE that would run effectively forever
        slow = (
            "WITH RECURSIVE r(n) AS (SELECT 1 UNION ALL SELECT n+1 FROM r) "
            "SELECT count(*) FROM r"
        )
        start = time.monotonic()
        result = s.execute(slow, timeout=0.2)
        wall = time.monotonic() - start
        assert result.status == "timeout"
        assert result.elapsed == 0.2
        assert wall < 5.0

    def test_refresh_round_trip(self, flat_dir):
        b = self.make()
        for name in schema.LOAD_ORDER:
            b.bulk_load(name, flat_dir / f"{name}.tbl")
        rs = datagen.generate_refresh_set(SF, 1)
        before = {t: b.table_count(t) for t in ("orders", "lineitem")}
        s = b.open_session()
        s.begin()
        assert s.insert_rows("orders", rs.new_orders).ok
        assert s.insert_rows("lineitem", rs.new_lineitems).ok
        s.commit()
        s.begin()
        result = s.delete_orders_cascade([int(r[0]) for r in rs.new_orders])
        s.commit()
        assert result.ok
        assert {t: b.table_count(t) for t in ("orders", "lineitem")} == before

    def test_duplicate_pk_rejected_after_constraints(self, flat_dir):
        b = self.make()
        b.create_constraints()
        b.bulk_load("region", flat_dir / "region.tbl")
        s = b.open_session()
        s.begin()
        result = s.insert_rows("region", [("1", "DUPLICATE", "x")])
        assert result.status == "error"
        assert "unique" in result.detail.lower()
        s.rollback()
        assert b.table_count("region") == 5

    def test_capture_plan_text(self, flat_dir):
        b = backend.open_backend(
            backend.BackendConfig(kind="sql_dbms", dsn="", plan_prefix="EXPLAIN QUERY PLAN")
        )
        b.create_schema()
        b.bulk_load("region", flat_dir / "region.tbl")
        result, plan = b.open_session().capture_plan("SELECT * FROM region;")
        assert result.ok
        assert "region" in plan.lower()

    def test_file_database_persists_between_sessions(self, tmp_path, flat_dir):
        b = self.make(tmp_path)
        b.bulk_load("region", flat_dir / "region.tbl")
        b.close()
        b2 = backend.open_backend(
            backend.BackendConfig(kind="sql_dbms", dsn=str(tmp_path / "bench.db"))
        )
        assert b2.table_count("region") == 5
