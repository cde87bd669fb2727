"""Determinism, partitioning, and integrity checks for the data generator."""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwbench import datagen, schema

SF = 0.01
SEED = datagen.DEFAULT_SEED


def rows_of(table, sf=SF, seed=SEED, part_index=1, part_count=1):
    return list(datagen.generate_rows(table, sf, seed, part_index, part_count))


@pytest.fixture(scope="module")
def desk_rows():
    """One full SF=0.01 generation, reused across this module."""
    return {name: rows_of(name) for name in schema.TABLE_NAMES}


class TestFlatFileFormat:
    def test_pipe_count_matches_arity(self, tmp_path):
        summary = datagen.generate_table(
            datagen.GenConfig(SF, "nation", output_dir=str(tmp_path))
        )
        text = Path(summary.files["nation"]).read_text(encoding="ascii")
        lines = text.splitlines()
        assert len(lines) == 25
        arity = schema.table("nation").arity
        for line in lines:
            assert line.count("|") == arity - 1
            assert not line.endswith("|")

    def test_newline_terminated_no_trailing_delimiter(self, tmp_path):
        summary = datagen.generate_table(
            datagen.GenConfig(SF, "region", output_dir=str(tmp_path))
        )
        raw = Path(summary.files["region"]).read_bytes()
        assert raw.endswith(b"\n")
        assert b"|\n" not in raw

    def test_file_naming_single_and_partitioned(self, tmp_path):
        single = datagen.generate_table(
            datagen.GenConfig(SF, "customer", output_dir=str(tmp_path))
        )
        assert Path(single.files["customer"]).name == "customer.tbl"
        part = datagen.generate_table(
            datagen.GenConfig(
                SF, "customer", part_index=2, part_count=4, output_dir=str(tmp_path)
            )
        )
        assert Path(part.files["customer"]).name == "customer.tbl.2"

    def test_money_fields_have_two_decimals(self, desk_rows):
        for row in desk_rows["part"]:
            whole, _, frac = row[7].partition(".")
            assert len(frac) == 2
            int(whole)
            int(frac)

    def test_dates_are_iso(self, desk_rows):
        for row in desk_rows["orders"][:200]:
            dt.date.fromisoformat(row[4])

    def test_format_money(self):
        assert datagen.format_money(0) == "0.00"
        assert datagen.format_money(104950) == "1049.50"
        assert datagen.format_money(-50) == "-0.50"
        assert datagen.format_money(-99999) == "-999.99"
        assert datagen.format_money(5) == "0.05"


class TestDeterminism:
    def test_regeneration_is_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            datagen.generate_table(datagen.GenConfig(SF, "all", output_dir=str(out)))
        for name in schema.TABLE_NAMES:
            fa = (a / f"{name}.tbl").read_bytes()
            fb = (b / f"{name}.tbl").read_bytes()
            assert fa == fb, name

    def test_seed_changes_content(self):
        base = rows_of("customer")
        other = rows_of("customer", seed=SEED + 1)
        assert base != other

    def test_different_tables_use_independent_streams(self):
        # Same key, different tables: unrelated draws.
        supplier = rows_of("supplier")
        customer = rows_of("customer")
        assert supplier[0][2] != customer[0][2]


class TestPartitioning:
    @pytest.mark.parametrize("table", ["customer", "orders", "partsupp", "lineitem"])
    def test_union_of_parts_equals_whole(self, table, desk_rows):
        whole = desk_rows[table]
        pieces = []
        for i in range(1, 5):
            pieces.extend(rows_of(table, part_index=i, part_count=4))
        assert pieces == whole  # ordered concatenation, not just multiset

    def test_parts_are_disjoint(self):
        seen = set()
        for i in range(1, 5):
            keys = {row[0] for row in rows_of("orders", part_index=i, part_count=4)}
            assert not (seen & keys)
            seen |= keys

    def test_row_content_independent_of_part_count(self):
        whole = {row[0]: row for row in rows_of("customer")}
        for i in range(1, 8):
            for row in rows_of("customer", part_index=i, part_count=7):
                assert whole[row[0]] == row

    def test_more_parts_than_rows_leaves_empty_parts(self):
        total = []
        for i in range(1, 9):
            total.extend(rows_of("region", part_index=i, part_count=8))
        assert len(total) == 5

    def test_bad_part_index_rejected(self):
        with pytest.raises(ValueError):
            datagen.GenConfig(SF, "orders", part_index=5, part_count=4)
        with pytest.raises(ValueError):
            datagen.GenConfig(SF, "orders", part_index=0, part_count=4)


class TestCardinalities:
    def test_fixed_and_scaled_counts(self, desk_rows):
        assert len(desk_rows["region"]) == 5
        assert len(desk_rows["nation"]) == 25
        assert len(desk_rows["supplier"]) == 100
        assert len(desk_rows["part"]) == 2000
        assert len(desk_rows["partsupp"]) == 8000
        assert len(desk_rows["customer"]) == 1500
        assert len(desk_rows["orders"]) == 15000

    def test_lineitem_count_within_band(self, desk_rows):
        lo, hi = schema.lineitem_bounds(SF)
        assert lo <= len(desk_rows["lineitem"]) <= hi

    def test_validate_load_accepts_generated_counts(self, desk_rows):
        counts = {name: len(rows) for name, rows in desk_rows.items()}
        assert schema.validate_load(counts, SF).ok

    def test_dense_primary_keys(self, desk_rows):
        for name in ("supplier", "part", "customer", "orders"):
            keys = [int(r[0]) for r in desk_rows[name]]
            assert keys == list(range(1, len(keys) + 1))

    def test_lineitem_numbers_dense_per_order(self, desk_rows):
        by_order: dict[str, list[int]] = {}
        for row in desk_rows["lineitem"]:
            by_order.setdefault(row[0], []).append(int(row[3]))
        for numbers in by_order.values():
            assert numbers == list(range(1, len(numbers) + 1))
            assert 1 <= len(numbers) <= 7

    def test_too_small_scale_rejected(self):
        with pytest.raises(ValueError):
            datagen.GenConfig(0.0001, "orders")


class TestReferentialClosure:
    def test_foreign_keys_resolve(self, desk_rows):
        nations = {r[0] for r in desk_rows["nation"]}
        regions = {r[0] for r in desk_rows["region"]}
        suppliers = {r[0] for r in desk_rows["supplier"]}
        parts = {r[0] for r in desk_rows["part"]}
        customers = {r[0] for r in desk_rows["customer"]}
        orders = {r[0] for r in desk_rows["orders"]}
        ps_pairs = {(r[0], r[1]) for r in desk_rows["partsupp"]}

        assert {r[2] for r in desk_rows["nation"]} <= regions
        assert {r[3] for r in desk_rows["supplier"]} <= nations
        assert {r[3] for r in desk_rows["customer"]} <= nations
        assert {r[0] for r in desk_rows["partsupp"]} <= parts
        assert {r[1] for r in desk_rows["partsupp"]} <= suppliers
        assert {r[1] for r in desk_rows["orders"]} <= customers
        assert {r[0] for r in desk_rows["lineitem"]} <= orders
        assert {(r[1], r[2]) for r in desk_rows["lineitem"]} <= ps_pairs

    def test_primary_keys_unique(self, desk_rows):
        for name in schema.TABLE_NAMES:
            spec = schema.table(name)
            positions = [spec.column_names.index(c) for c in spec.primary_key]
            keys = [tuple(r[i] for i in positions) for r in desk_rows[name]]
            assert len(keys) == len(set(keys)), name

    def test_partsupp_four_distinct_suppliers_per_part(self, desk_rows):
        by_part: dict[str, set[str]] = {}
        for row in desk_rows["partsupp"]:
            by_part.setdefault(row[0], set()).add(row[1])
        assert all(len(s) == 4 for s in by_part.values())
        assert len(by_part) == 2000

    def test_some_customers_have_no_orders(self, desk_rows):
        with_orders = {r[1] for r in desk_rows["orders"]}
        all_customers = {r[0] for r in desk_rows["customer"]}
        assert all_customers - with_orders


class TestValueDomains:
    def test_categoricals_stay_in_domain(self, desk_rows):
        dom = datagen.value_domains()
        assert {r[1] for r in desk_rows["region"]} == set(dom["regions"])
        assert {r[1] for r in desk_rows["nation"]} == set(dom["nations"])
        assert {r[6] for r in desk_rows["customer"]} <= set(dom["segments"])
        assert {r[5] for r in desk_rows["orders"]} <= set(dom["priorities"])
        assert {r[3] for r in desk_rows["part"]} <= set(dom["brands"])
        assert {r[4] for r in desk_rows["part"]} <= set(dom["part_types"])
        assert {r[6] for r in desk_rows["part"]} <= set(dom["containers"])
        assert {r[14] for r in desk_rows["lineitem"]} <= set(dom["shipmodes"])
        assert {r[13] for r in desk_rows["lineitem"]} <= set(dom["shipinstruct"])

    def test_domain_sizes(self):
        dom = datagen.value_domains()
        assert len(dom["brands"]) == 25
        assert len(dom["containers"]) == 40
        assert len(dom["part_types"]) == 150
        assert len(dom["shipmodes"]) == 7
        assert set(["AIR", "AIR REG", "FOB"]) <= set(dom["shipmodes"])
        assert "DELIVER IN PERSON" in dom["shipinstruct"]
        assert "FURNITURE" in dom["segments"]
        assert "1-URGENT" in dom["priorities"]
        assert "royal" in dom["part_name_colors"]
        assert "tan" in dom["part_name_colors"]

    def test_nation_region_map(self):
        dom = dict(datagen.value_domains()["nation_regions"])
        regions = datagen.value_domains()["regions"]
        assert regions[dom["EGYPT"] - 1] == "MIDDLE EAST"
        assert regions[dom["JORDAN"] - 1] == "MIDDLE EAST"
        assert regions[dom["ALGERIA"] - 1] == "AFRICA"
        assert regions[dom["RUSSIA"] - 1] == "EUROPE"
        assert regions[dom["BRAZIL"] - 1] == "AMERICA"
        from collections import Counter

        per_region = Counter(datagen.value_domains()["nation_regions"][i][1] for i in range(25))
        assert set(per_region.values()) == {5}

    def test_dates_inside_span(self, desk_rows):
        lo = dt.date.fromisoformat("1992-01-01")
        hi = dt.date.fromisoformat("1998-12-31")
        for row in desk_rows["orders"]:
            assert lo <= dt.date.fromisoformat(row[4]) <= hi
        for row in desk_rows["lineitem"]:
            for idx in (10, 11, 12):
                assert lo <= dt.date.fromisoformat(row[idx]) <= hi

    def test_lineitem_date_arithmetic(self, desk_rows):
        order_dates = {r[0]: dt.date.fromisoformat(r[4]) for r in desk_rows["orders"]}
        for row in desk_rows["lineitem"]:
            od = order_dates[row[0]]
            ship = dt.date.fromisoformat(row[10])
            commit = dt.date.fromisoformat(row[11])
            receipt = dt.date.fromisoformat(row[12])
            assert dt.timedelta(days=1) <= ship - od <= dt.timedelta(days=121)
            assert dt.timedelta(days=30) <= commit - od <= dt.timedelta(days=90)
            assert dt.timedelta(days=1) <= receipt - ship <= dt.timedelta(days=30)

    def test_flags_follow_pivot_date(self, desk_rows):
        pivot = dt.date(1995, 6, 17)
        for row in desk_rows["lineitem"]:
            ship = dt.date.fromisoformat(row[10])
            receipt = dt.date.fromisoformat(row[12])
            if receipt <= pivot:
                assert row[8] in ("R", "A")
            else:
                assert row[8] == "N"
            assert row[9] == ("O" if ship > pivot else "F")

    def test_order_status_derived_from_lines(self, desk_rows):
        statuses: dict[str, set[str]] = {}
        for row in desk_rows["lineitem"]:
            statuses.setdefault(row[0], set()).add(row[9])
        for row in desk_rows["orders"]:
            line = statuses[row[0]]
            if line == {"F"}:
                assert row[2] == "F"
            elif line == {"O"}:
                assert row[2] == "O"
            else:
                assert row[2] == "P"


class TestDerivedMoney:
    def test_extendedprice_is_quantity_times_retail(self, desk_rows):
        retail = {r[0]: r[7] for r in desk_rows["part"]}
        for row in desk_rows["lineitem"][:500]:
            qty = int(row[4])
            price_cents = datagen.retail_price_cents(int(row[1]))
            assert datagen.format_money(qty * price_cents) == row[5]
            whole, _, frac = retail[row[1]].partition(".")
            assert int(whole) * 100 + int(frac) == price_cents

    def test_retail_price_range(self):
        values = [datagen.retail_price_cents(k) for k in range(1, 5000)]
        assert min(values) >= 90_000
        assert max(values) <= 210_000

    def test_totalprice_matches_lines(self, desk_rows):
        def cents(text: str) -> int:
            sign = -1 if text.startswith("-") else 1
            whole, _, frac = text.lstrip("-").partition(".")
            return sign * (int(whole) * 100 + int(frac))

        per_order: dict[str, int] = {}
        for row in desk_rows["lineitem"]:
            ext = cents(row[5])
            disc = int(row[6].split(".")[1])
            tax = int(row[7].split(".")[1])
            charge = (ext * (100 - disc) * (100 + tax) + 5_000) // 10_000
            per_order[row[0]] = per_order.get(row[0], 0) + charge
        for row in desk_rows["orders"]:
            assert cents(row[3]) == per_order[row[0]]


class TestQuerySupport:
    """Spot checks that selective query constants actually hit rows."""

    def test_phone_prefix_tracks_nation(self, desk_rows):
        for row in desk_rows["customer"]:
            assert int(row[4].split("-")[0]) == 10 + int(row[3]) - 1

    def test_discount_window_populated(self, desk_rows):
        hits = [
            r
            for r in desk_rows["lineitem"]
            if r[10].startswith("1995")
            and r[6] in ("0.01", "0.02", "0.03")
            and int(r[4]) < 25
        ]
        assert hits

    def test_planted_comment_phrases_present_but_rare(self, desk_rows):
        special = [r for r in desk_rows["orders"] if "special deposits" in r[8]]
        assert 0 < len(special) < len(desk_rows["orders"]) // 10
        complaints = [r for r in desk_rows["supplier"] if "Customer Complaints" in r[6]]
        assert 0 < len(complaints) < 50

    def test_part_names_are_three_colors(self, desk_rows):
        colors = set(datagen.value_domains()["part_name_colors"])
        for row in desk_rows["part"][:300]:
            words = row[1].split(" ")
            assert len(words) == 3
            assert set(words) <= colors
        assert any(r[1].startswith("royal") for r in desk_rows["part"])
        assert any("tan" in r[1] for r in desk_rows["part"])


class TestRefreshSets:
    def test_sizing_rule(self):
        assert datagen.refresh_set_size(0.01) == 15
        assert datagen.refresh_set_size(1) == 1500
        assert datagen.refresh_set_size(0.0004) == 1

    def test_first_pair_shape(self):
        rs = datagen.generate_refresh_set(SF, 1)
        assert rs.pair_index == 1
        assert len(rs.new_orders) == 15
        assert len(rs.delete_keys) == 15
        new_keys = [int(r[0]) for r in rs.new_orders]
        assert new_keys == list(range(15001, 15016))
        assert list(rs.delete_keys) == list(range(1, 16))
        per_order = {}
        for row in rs.new_lineitems:
            per_order.setdefault(row[0], []).append(row)
        assert set(per_order) == {r[0] for r in rs.new_orders}
        assert all(1 <= len(v) <= 7 for v in per_order.values())

    def test_pairs_never_collide(self):
        seen_new: set[int] = set()
        seen_del: set[int] = set()
        for i in range(1, 6):
            rs = datagen.generate_refresh_set(SF, i)
            new = {int(r[0]) for r in rs.new_orders}
            dels = set(rs.delete_keys)
            assert not (new & seen_new)
            assert not (dels & seen_del)
            assert not (new & dels)
            seen_new |= new
            seen_del |= dels
        assert max(seen_del) <= 15000
        assert min(seen_new) > 15000

    def test_delete_keys_exist_in_base(self, desk_rows):
        base = {int(r[0]) for r in desk_rows["orders"]}
        rs = datagen.generate_refresh_set(SF, 3)
        assert set(rs.delete_keys) <= base

    def test_new_rows_keep_referential_closure(self, desk_rows):
        customers = {r[0] for r in desk_rows["customer"]}
        ps_pairs = {(r[0], r[1]) for r in desk_rows["partsupp"]}
        rs = datagen.generate_refresh_set(SF, 2)
        assert {r[1] for r in rs.new_orders} <= customers
        assert {(r[1], r[2]) for r in rs.new_lineitems} <= ps_pairs

    def test_files_written(self, tmp_path):
        rs = datagen.generate_refresh_set(SF, 4, output_dir=str(tmp_path))
        orders = (tmp_path / "orders.tbl.u4").read_text(encoding="ascii")
        lines = (tmp_path / "lineitem.tbl.u4").read_text(encoding="ascii")
        dels = (tmp_path / "delete.4").read_text(encoding="ascii")
        assert len(orders.splitlines()) == len(rs.new_orders)
        assert len(lines.splitlines()) == len(rs.new_lineitems)
        assert [int(x) for x in dels.split()] == list(rs.delete_keys)
        assert "|" not in dels

    def test_exhausted_pair_space_rejected(self):
        with pytest.raises(ValueError):
            datagen.generate_refresh_set(SF, 1001)
        with pytest.raises(ValueError):
            datagen.generate_refresh_set(SF, 0)

    def test_refresh_determinism(self):
        a = datagen.generate_refresh_set(SF, 1)
        b = datagen.generate_refresh_set(SF, 1)
        assert a == b


class TestEnvOverride:
    def test_dss_path_used_when_no_explicit_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DSS_PATH", str(tmp_path / "env"))
        summary = datagen.generate_table(datagen.GenConfig(SF, "region"))
        assert Path(summary.files["region"]).parent == tmp_path / "env"

    def test_explicit_dir_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DSS_PATH", str(tmp_path / "env"))
        summary = datagen.generate_table(
            datagen.GenConfig(SF, "region", output_dir=str(tmp_path / "flag"))
        )
        assert Path(summary.files["region"]).parent == tmp_path / "flag"


@settings(max_examples=20, deadline=None)
@given(
    sf=st.sampled_from([0.001, 0.002, 0.01, 0.05]),
    parts=st.integers(min_value=1, max_value=6),
    table=st.sampled_from(["supplier", "customer", "orders"]),
)
def test_partition_law_property(sf, parts, table):
    whole = list(datagen.generate_rows(table, sf, SEED))
    pieces = []
    for i in range(1, parts + 1):
        pieces.extend(datagen.generate_rows(table, sf, SEED, i, parts))
    assert pieces == whole
