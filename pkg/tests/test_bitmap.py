"""Bitmap indexes: reference vectors, width law, advisor, scan equivalence."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwbench import bitmap
from dwbench.bitmap import (
    BitVector,
    advise,
    build_encoded,
    build_simple,
    code_width,
    query_eq,
    query_in,
)


def scan_eq(column, value):
    """Brute-force oracle: positions where the column equals the value."""
    return {i for i, v in enumerate(column) if v == value}


class TestBitVector:
    def test_set_get_roundtrip(self):
        vec = BitVector(130)
        for i in (0, 1, 63, 64, 65, 128, 129):
            vec.set(i)
        for i in range(130):
            assert vec.get(i) == (i in {0, 1, 63, 64, 65, 128, 129})

    def test_out_of_range(self):
        vec = BitVector(10)
        with pytest.raises(IndexError):
            vec.set(10)
        with pytest.raises(IndexError):
            vec.get(-1)

    def test_padding_bits_stay_zero(self):
        vec = BitVector.ones(70)
        assert vec.count() == 70
        assert vec.words[-1] >> (70 - 64) == 0
        other = BitVector(70)
        res = vec.andnot(other)
        assert res.count() == 70
        assert res.words[-1] >> (70 - 64) == 0

    def test_and_andnot(self):
        a = BitVector(8)
        b = BitVector(8)
        for i in (0, 2, 4):
            a.set(i)
        for i in (2, 3, 4):
            b.set(i)
        assert set((a & b).ones_positions()) == {2, 4}
        assert set(a.andnot(b).ones_positions()) == {0}

    def test_to01_row_zero_first(self):
        vec = BitVector(5)
        vec.set(0)
        vec.set(4)
        assert vec.to01() == "10001"

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            BitVector(8) & BitVector(9)


class TestSimpleBitmap:
    def test_reference_column(self):
        idx = build_simple(["a", "b", "c", "c", "a"])
        assert idx.domain == ("a", "b", "c")
        assert idx.vector("a").to01() == "10001"
        assert idx.vector("b").to01() == "01000"
        assert idx.vector("c").to01() == "00110"

    def test_single_value_column(self):
        idx = build_simple(["x"] * 7)
        assert idx.domain == ("x",)
        assert idx.vector("x").to01() == "1111111"

    def test_partition_law(self):
        rng = random.Random(1)
        column = [rng.choice("pqrs") for _ in range(257)]
        idx = build_simple(column)
        for i in range(len(column)):
            assert sum(v.get(i) for v in idx.vectors) == 1

    def test_empty_column_rejected(self):
        with pytest.raises(ValueError):
            build_simple([])


class TestEncodedBitmap:
    def test_reference_column(self):
        idx = build_encoded(["a", "b", "c", "c", "a"])
        assert idx.width == 2
        assert idx.mapping == {"a": 0, "b": 1, "c": 2}
        assert idx.slice_for_bit(1).to01() == "00110"
        assert idx.slice_for_bit(0).to01() == "01000"

    def test_width_law(self):
        assert code_width(1) == 1
        assert code_width(2) == 1
        assert code_width(3) == 2
        assert code_width(4) == 2
        assert code_width(5) == 3
        assert code_width(12_000) == 14

    def test_width_from_columns(self):
        assert build_encoded(list("abc")).width == 2
        assert build_encoded(["only"]).width == 1
        column = list(range(12_000))
        assert build_encoded(column).width == 14

    def test_codes_first_appearance_order(self):
        idx = build_encoded(["z", "y", "z", "x"])
        assert idx.mapping == {"z": 0, "y": 1, "x": 2}

    def test_empty_column_rejected(self):
        with pytest.raises(ValueError):
            build_encoded([])

    def test_space_law(self):
        for d in (1, 2, 3, 10, 100, 1000):
            column = list(range(d))
            simple = build_simple(column)
            encoded = build_encoded(column)
            assert len(encoded.slices) == code_width(d)
            assert len(encoded.slices) <= len(simple.vectors)
            if d == 1:
                assert len(encoded.slices) == len(simple.vectors)
            else:
                assert len(encoded.slices) < len(simple.vectors)


class TestQueries:
    def test_reference_lookup(self):
        column = ["a", "b", "c", "c", "a"]
        for idx in (build_simple(column), build_encoded(column)):
            assert query_eq(idx, "c") == {2, 3}
            assert query_eq(idx, "a") == {0, 4}
            assert query_eq(idx, "missing") == set()

    def test_unused_code_point_is_empty(self):
        # d=3 leaves code 11 unused; no value maps there, lookups miss.
        idx = build_encoded(["a", "b", "c"])
        assert 3 not in idx.mapping.values()
        assert query_eq(idx, "d") == set()

    def test_in_list_union(self):
        column = ["a", "b", "c", "c", "a", "b"]
        for idx in (build_simple(column), build_encoded(column)):
            assert query_in(idx, ["a", "c"]) == query_eq(idx, "a") | query_eq(idx, "c")
            assert query_in(idx, []) == set()

    def test_random_equivalence_with_scan(self):
        rng = random.Random(77)
        column = [rng.randint(0, 40) for _ in range(10_000)]
        simple = build_simple(column)
        encoded = build_encoded(column)
        for value in list(range(0, 45, 3)) + [999]:
            expect = scan_eq(column, value)
            assert query_eq(simple, value) == expect
            assert query_eq(encoded, value) == expect

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(min_value=0, max_value=9), min_size=1, max_size=300))
    def test_equivalence_property(self, column):
        simple = build_simple(column)
        encoded = build_encoded(column)
        for value in set(column) | {-1}:
            expect = scan_eq(column, value)
            assert query_eq(simple, value) == expect
            assert query_eq(encoded, value) == expect


class TestAdvisor:
    def test_reference_ratio(self):
        advice = advise(27, 100_000)
        assert advice.eligible
        assert advice.verdict == "bitmap_eligible"
        assert advice.ratio == pytest.approx(0.00027)

    def test_degenerate_full_cardinality(self):
        advice = advise(1, 1)
        assert not advice.eligible
        assert advice.verdict == "too_high_cardinality"
        assert advice.ratio == 1.0

    def test_boundary_inclusive(self):
        assert advise(100, 100_000).eligible
        assert not advise(101, 100_000).eligible
        assert advise(1, 1000).eligible
        assert not advise(1, 999).eligible

    def test_preconditions(self):
        with pytest.raises(ValueError):
            advise(0, 100)
        with pytest.raises(ValueError):
            advise(10, 5)
