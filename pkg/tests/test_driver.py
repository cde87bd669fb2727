"""Orchestration: load/power/throughput sequencing, censoring, concurrency."""

from __future__ import annotations

import re
import threading
import time

import pytest

from dwbench import backend, datagen, driver, querygen, schema

SF = 0.01

EXPECTED_POWER_SEQUENCE = (
    ["RF1"] + [f"q{qid}" for qid in querygen.STREAM_ZERO_ORDER] + ["RF2"]
)


@pytest.fixture(scope="module")
def flat_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("flat")
    datagen.generate_table(datagen.GenConfig(SF, "all", output_dir=str(out)))
    return out


def sim_config(flat_dir, **overrides):
    base = dict(
        sf=SF,
        backend=backend.BackendConfig(kind="simulator", default_latency=0.001),
        output_dir=str(flat_dir),
    )
    base.update(overrides)
    return driver.RunConfig(**base)


def loaded_sim(flat_dir, cfg=None):
    b = backend.open_backend(
        (cfg or sim_config(flat_dir)).backend
    )
    for name in schema.LOAD_ORDER:
        b.bulk_load(name, flat_dir / f"{name}.tbl")
    return b


class TestStreamCount:
    def test_listed_scale_factors(self):
        for sf, s in [(1, 2), (10, 3), (30, 4), (100, 5), (300, 6),
                      (1000, 7), (3000, 8), (10000, 9)]:
            assert driver.stream_count(sf) == s

    def test_below_one_uses_two(self):
        assert driver.stream_count(0.01) == 2
        assert driver.stream_count(0.5) == 2

    def test_unlisted_uses_next_lower(self):
        assert driver.stream_count(3) == 2
        assert driver.stream_count(50) == 4
        assert driver.stream_count(20000) == 9

    def test_monotone(self):
        sfs = [0.1, 1, 2, 10, 20, 30, 99, 100, 500, 1000, 5000, 10000]
        counts = [driver.stream_count(sf) for sf in sfs]
        assert counts == sorted(counts)

    def test_override_wins(self):
        assert driver.stream_count(1, override=5) == 5
        with pytest.raises(ValueError):
            driver.stream_count(1, override=0)


class TestRunConfig:
    def test_defaults(self, flat_dir):
        cfg = sim_config(flat_dir)
        assert cfg.timeout == 25_000.0
        assert cfg.streams == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            driver.RunConfig(sf=1.0, timeout=0)
        with pytest.raises(ValueError):
            driver.RunConfig(sf=-1.0)

    def test_immutable(self, flat_dir):
        cfg = sim_config(flat_dir)
        with pytest.raises(AttributeError):
            cfg.timeout = 1.0  # type: ignore[misc]


class TestTimingRecord:
    def test_round_trips_through_json(self):
        rec = driver.TimingRecord(
            "POWER", 0, "q14", 100.0, 101.5, 1.5, "ok", detail="rows=1"
        )
        again = driver.TimingRecord.from_json_line(rec.to_json_line())
        assert again == rec

    def test_validation(self):
        with pytest.raises(ValueError):
            driver.TimingRecord("WARMUP", 0, "q1", 0.0, 1.0, 1.0, "ok")
        with pytest.raises(ValueError):
            driver.TimingRecord("POWER", 0, "q1", 0.0, 1.0, 1.0, "meh")
        with pytest.raises(ValueError):
            driver.TimingRecord("POWER", 0, "q1", 0.0, 5.0, 1.0, "ok")


class TestLoadTest:
    def test_full_load_on_simulator(self, flat_dir):
        report = driver.load_test(sim_config(flat_dir))
        assert report.complete and report.ok
        assert [r.name for r in report.table_records] == list(schema.LOAD_ORDER)
        assert len(report.table_records) == 8
        assert report.validation.ok
        extra = [r.name for r in report.records if r.name not in schema.TABLE_NAMES]
        assert extra == ["pk_and_index", "statistics"]
        assert all(r.phase == "LOAD" and r.ok for r in report.records)

    def test_missing_file_is_named(self, flat_dir, tmp_path):
        (tmp_path / "region.tbl").write_text("")
        cfg = sim_config(flat_dir, output_dir=str(tmp_path))
        with pytest.raises(driver.DriverError) as err:
            driver.load_test(cfg)
        assert "lineitem.tbl" in str(err.value)

    def test_generate_on_demand(self, tmp_path):
        cfg = driver.RunConfig(
            sf=SF,
            backend=backend.BackendConfig(kind="simulator"),
            output_dir=str(tmp_path),
        )
        report = driver.load_test(cfg, generate=True)
        assert report.ok
        assert (tmp_path / "lineitem.tbl").exists()

    def test_log_lists_tables_in_load_order(self, flat_dir, tmp_path):
        log_path = tmp_path / "log.txt"
        driver.load_test(sim_config(flat_dir), log=driver.RunLog(log_path))
        text = log_path.read_text()
        positions = [text.index(f"load {name}") for name in schema.LOAD_ORDER]
        assert positions == sorted(positions)
        for line in text.splitlines():
            assert re.match(r"^\d{2}:\d{2}:\d{2} ", line)


@pytest.fixture(scope="module")
def power_report(flat_dir):
    b = loaded_sim(flat_dir)
    try:
        return driver.power_test(sim_config(flat_dir), b=b)
    finally:
        b.close()


@pytest.fixture(scope="module")
def throughput_result(flat_dir):
    b = loaded_sim(flat_dir)
    try:
        report = driver.throughput_test(sim_config(flat_dir), b=b)
        counts = {t: b.table_count(t) for t in schema.TABLE_NAMES}
    finally:
        b.close()
    return report, counts


class TestPowerTest:
    def test_exact_sequence(self, power_report):
        report = power_report
        assert [r.name for r in report.records] == EXPECTED_POWER_SEQUENCE
        assert len(report.records) == 24

    def test_all_ok_when_fast(self, power_report):
        report = power_report
        assert report.complete
        assert all(r.status == "ok" for r in report.records)
        assert all(r.phase == "POWER" and r.stream_id == 0 for r in report.records)

    def test_query_elapsed_exposes_all_22(self, power_report):
        elapsed = power_report.query_elapsed()
        assert sorted(elapsed) == list(range(1, 23))
        assert all(v >= 0 for v in elapsed.values())
        rf1, rf2 = power_report.refresh_elapsed()
        assert rf1 >= 0 and rf2 >= 0

    def test_counts_restored_by_rf_pair(self, flat_dir):
        b = loaded_sim(flat_dir)
        try:
            before = {t: b.table_count(t) for t in schema.TABLE_NAMES}
            driver.power_test(sim_config(flat_dir), b=b)
            assert {t: b.table_count(t) for t in schema.TABLE_NAMES} == before
        finally:
            b.close()

    def test_timeout_censors_and_run_continues(self, flat_dir):
        cfg = sim_config(
            flat_dir,
            backend=backend.BackendConfig(
                kind="simulator",
                default_latency=0.001,
                latency_model={r"l_shipmode": 5.0},
            ),
            timeout=0.05,
        )
        b = loaded_sim(flat_dir, cfg)
        try:
            report = driver.power_test(cfg, b=b)
        finally:
            b.close()
        assert [r.name for r in report.records] == EXPECTED_POWER_SEQUENCE
        censored = {r.name: r for r in report.records if r.status == "timeout"}
        assert censored, "queries touching l_shipmode should exceed the timeout"
        for rec in censored.values():
            assert rec.elapsed == cfg.timeout
        assert all(r.elapsed <= cfg.timeout for r in report.records if r.name.startswith("q"))

    def test_markers_logged_per_query(self, flat_dir, tmp_path):
        log_path = tmp_path / "log.txt"
        b = loaded_sim(flat_dir)
        try:
            driver.power_test(sim_config(flat_dir), b=b, log=driver.RunLog(log_path))
        finally:
            b.close()
        text = log_path.read_text()
        for qid in range(1, 23):
            assert text.count(f"---q{qid} ini---") == 1
            assert text.count(f"---q{qid} fim---") == 1
        assert text.index("---q14 ini---") < text.index("---q12 fim---")

    def test_plan_capture_attaches_plans(self, flat_dir):
        cfg = sim_config(flat_dir, capture_plans=True)
        b = loaded_sim(flat_dir, cfg)
        try:
            report = driver.power_test(cfg, b=b)
        finally:
            b.close()
        assert all(r.plan for r in report.records if r.name.startswith("q"))


class TestThroughputTest:
    def test_session_structure(self, throughput_result):
        report, _ = throughput_result
        assert report.stream_count == 2
        query_records = [r for r in report.records if r.name.startswith("q")]
        assert len(query_records) == 2 * 22
        for sid in (1, 2):
            names = [r.name for r in report.records
                     if r.stream_id == sid and r.name.startswith("q")]
            assert sorted(int(n[1:]) for n in names) == list(range(1, 23))
        rf_records = [r for r in report.records if r.name.startswith("RF")]
        assert [r.name for r in rf_records] == ["RF1", "RF2", "RF1", "RF2"]

    def test_ts_contains_every_session(self, throughput_result):
        report, _ = throughput_result
        assert report.complete
        assert report.ts > 0
        for session_total in report.session_elapsed().values():
            assert report.ts >= session_total * 0.999

    def test_refresh_pairs_leave_counts_unchanged(self, throughput_result, flat_dir):
        _, counts = throughput_result
        b = loaded_sim(flat_dir)
        try:
            base = {t: b.table_count(t) for t in schema.TABLE_NAMES}
        finally:
            b.close()
        assert counts == base

    def test_sessions_overlap_in_time(self, flat_dir):
        cfg = sim_config(
            flat_dir,
            backend=backend.BackendConfig(kind="simulator", default_latency=0.01),
        )
        b = loaded_sim(flat_dir, cfg)
        try:
            t0 = time.monotonic()
            report = driver.throughput_test(cfg, b=b)
            wall = time.monotonic() - t0
        finally:
            b.close()
        serial_floor = sum(
            r.elapsed for r in report.records if r.name.startswith("q")
        )
        assert wall < serial_floor * 0.75, "streams must run concurrently"

    def test_stream_override_changes_session_count(self, flat_dir):
        cfg = sim_config(flat_dir, stream_count_override=3)
        b = loaded_sim(flat_dir, cfg)
        try:
            report = driver.throughput_test(cfg, b=b)
        finally:
            b.close()
        assert report.stream_count == 3
        assert len([r for r in report.records if r.name.startswith("q")]) == 66
        assert len([r for r in report.records if r.name == "RF1"]) == 3


class TestCapturePlan:
    def test_simulator_echoes_sql(self, flat_dir):
        b = backend.open_backend(backend.BackendConfig(kind="simulator"))
        try:
            plan = driver.capture_plan(b, "select 1")
        finally:
            b.close()
        assert "select 1" in plan

    def test_empty_sql_rejected(self):
        b = backend.open_backend(backend.BackendConfig(kind="simulator"))
        try:
            with pytest.raises(ValueError):
                driver.capture_plan(b, "   ")
        finally:
            b.close()

    def test_original_and_rewritten_q19_give_distinct_plans(self, flat_dir):
        from dwbench import rewrite

        inst = querygen.substitute_params(querygen.template(19), 0)
        distributed = querygen.q19_distributed_form(inst)
        factored, report = rewrite.rewrite_query(distributed)
        assert report.changed
        b = backend.open_backend(backend.BackendConfig(kind="sql_dbms", dsn=""))
        try:
            b.create_schema()
            p1 = driver.capture_plan(b, "select count(*) from lineitem")
            p2 = driver.capture_plan(b, "select count(*) from orders")
        finally:
            b.close()
        assert p1 != p2


class TestMetricsIntegration:
    def test_build_metrics_input(self, flat_dir):
        b = loaded_sim(flat_dir)
        try:
            cfg = sim_config(flat_dir)
            power = driver.power_test(cfg, b=b)
            thru = driver.throughput_test(cfg, b=b)
        finally:
            b.close()
        inp = driver.build_metrics_input(power, thru, SF)
        assert len(inp.qi) == 22
        assert len(inp.ri) == 2
        assert inp.s == 2
        assert inp.ts == thru.ts
        assert inp.censored_count == 0
        from dwbench import metrics

        report = metrics.compute_report(inp)
        assert report.power_at_size > 0
        assert report.throughput_at_size > 0
        assert report.qphh_at_size == pytest.approx(
            (report.power_at_size * report.throughput_at_size) ** 0.5
        )

    def test_censored_runs_flag_lower_bound(self, flat_dir):
        cfg = sim_config(
            flat_dir,
            backend=backend.BackendConfig(
                kind="simulator",
                default_latency=0.001,
                latency_model={r"l_shipmode": 5.0},
            ),
            timeout=0.05,
        )
        b = loaded_sim(flat_dir, cfg)
        try:
            power = driver.power_test(cfg, b=b)
            thru = driver.throughput_test(cfg, b=b)
        finally:
            b.close()
        inp = driver.build_metrics_input(power, thru, SF)
        assert inp.censored_count > 0
        from dwbench import metrics

        assert metrics.compute_report(inp).lower_bound_only

    def test_incomplete_power_report_rejected(self):
        with pytest.raises(ValueError):
            driver.build_metrics_input(
                driver.PowerReport((), False),
                driver.ThroughputReport((), 1.0, 2, True),
                SF,
            )
