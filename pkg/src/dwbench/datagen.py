"""Deterministic, partitionable flat-file generator for the eight tables.

Every row's content is a pure function of (seed, table, row group): the
generator derives one RNG substream per row group by hashing those three
values, so any partitioning of the key space produces exactly the same
bytes for a given row.  Partition ``i`` of ``C`` covers a contiguous slice
of the dense key space 1..N; parts are pairwise disjoint and their
concatenation equals the unpartitioned output row for row.

Row groups are single keys for the dimension tables, one PART key for its
four PARTSUPP rows, and one ORDERS key for the order row plus its 1..7
LINEITEM children.  LINEITEM therefore partitions by order-key ranges,
and its total row count is stochastic within a +-5% band.

Files are pipe-delimited, newline-terminated, with no trailing delimiter:
a k-field record carries exactly k-1 pipes.  Dates are ISO YYYY-MM-DD and
money values fixed-point with two fraction digits (internally integer
cents; binary floats never touch a money value).

Refresh sets pair an insert batch (new orders above the base key space,
each with 1..7 lineitems) with a delete batch (existing order keys taken
sequentially from the bottom of the key space), sized at 0.1% of the
ORDERS base cardinality per pair.
"""

from __future__ import annotations

import functools
import hashlib
import os
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

from . import schema

__all__ = [
    "DEFAULT_SEED",
    "GenConfig",
    "GenSummary",
    "RefreshSet",
    "value_domains",
    "generate_table",
    "generate_rows",
    "generate_refresh_set",
    "refresh_set_size",
    "resolve_output_dir",
    "retail_price_cents",
    "part_suppliers",
    "format_money",
    "table_file_name",
]

DEFAULT_SEED = 1782942327

DATE_MIN = date(1992, 1, 1)
DATE_MAX = date(1998, 12, 31)
# Orders stop 151 days before the span end so every derived lineitem date
# (ship <= +121, receipt <= ship+30) stays inside the span.
_ORDER_DATE_MAX = DATE_MAX - timedelta(days=151)
_CURRENT_DATE = date(1995, 6, 17)

_REGIONS = ("AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST")

# (nation name, region key 1..5)
_NATIONS = (
    ("ALGERIA", 1), ("ARGENTINA", 2), ("BRAZIL", 2), ("CANADA", 2),
    ("EGYPT", 5), ("ETHIOPIA", 1), ("FRANCE", 4), ("GERMANY", 4),
    ("INDIA", 3), ("INDONESIA", 3), ("IRAN", 5), ("IRAQ", 5),
    ("JAPAN", 3), ("JORDAN", 5), ("KENYA", 1), ("MOROCCO", 1),
    ("MOZAMBIQUE", 1), ("PERU", 2), ("CHINA", 3), ("ROMANIA", 4),
    ("SAUDI ARABIA", 5), ("VIETNAM", 3), ("RUSSIA", 4),
    ("UNITED KINGDOM", 4), ("UNITED STATES", 2),
)

_SEGMENTS = ("AUTOMOBILE", "BUILDING", "FURNITURE", "MACHINERY", "HOUSEHOLD")
_PRIORITIES = ("1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW")
_SHIPMODES = ("AIR", "AIR REG", "FOB", "MAIL", "SHIP", "RAIL", "TRUCK")
_SHIPINSTRUCT = ("DELIVER IN PERSON", "COLLECT COD", "NONE", "TAKE BACK RETURN")
_CONTAINER_SIZES = ("SM", "MED", "LG", "JUMBO", "WRAP")
_CONTAINER_KINDS = ("CASE", "BOX", "PACK", "PKG", "BAG", "JAR", "DRUM", "CAN")
_TYPE_CLASSES = ("STANDARD", "SMALL", "MEDIUM", "LARGE", "ECONOMY", "PROMO")
_TYPE_FINISHES = ("ANODIZED", "BURNISHED", "PLATED", "POLISHED", "BRUSHED")
_TYPE_MATERIALS = ("TIN", "NICKEL", "BRASS", "STEEL", "COPPER")

_COLORS = (
    "almond", "antique", "aquamarine", "azure", "beige", "bisque", "black",
    "blue", "blush", "brown", "burlywood", "chartreuse", "chocolate",
    "coral", "cornsilk", "cream", "cyan", "firebrick", "forest", "frosted",
    "goldenrod", "green", "honeydew", "indian", "ivory", "khaki",
    "lavender", "lemon", "linen", "magenta", "maroon", "midnight", "mint",
    "moccasin", "navy", "olive", "orange", "orchid", "peach", "peru",
    "pink", "plum", "powder", "puff", "purple", "red", "rose", "royal",
    "saddle", "salmon", "sandy", "seashell", "sienna", "sky", "slate",
    "smoke", "snow", "spring", "steel", "tan", "thistle", "tomato",
    "turquoise", "violet", "wheat", "white", "yellow",
)

_COMMENT_WORDS = (
    "accounts", "across", "against", "asymptotes", "blithely", "bold",
    "braids", "carefully", "courts", "daring", "deposits", "dolphins",
    "dugouts", "epitaphs", "escapades", "even", "express", "final",
    "fluffily", "foxes", "furiously", "ideas", "instructions", "ironic",
    "packages", "pending", "pinto", "platelets", "quickly", "quiet",
    "regular", "requests", "ruthless", "sauternes", "silent", "sleepy",
    "slyly", "special", "theodolites", "unusual", "waters",
)


def value_domains() -> dict[str, tuple]:
    """The closed vocabularies generation draws from."""
    return {
        "regions": _REGIONS,
        "nations": tuple(name for name, _ in _NATIONS),
        "nation_regions": _NATIONS,
        "segments": _SEGMENTS,
        "priorities": _PRIORITIES,
        "shipmodes": _SHIPMODES,
        "shipinstruct": _SHIPINSTRUCT,
        "brands": tuple(f"Brand#{m}{n}" for m in range(1, 6) for n in range(1, 6)),
        "containers": tuple(
            f"{size} {kind}" for size in _CONTAINER_SIZES for kind in _CONTAINER_KINDS
        ),
        "part_types": tuple(
            f"{c} {f} {m}"
            for c in _TYPE_CLASSES for f in _TYPE_FINISHES for m in _TYPE_MATERIALS
        ),
        "part_name_colors": _COLORS,
        "order_date_range": (DATE_MIN.isoformat(), DATE_MAX.isoformat()),
    }


def resolve_output_dir(explicit: str | os.PathLike | None) -> Path:
    """Explicit argument wins, then DSS_PATH, then the working directory."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get("DSS_PATH")
    if env:
        return Path(env)
    return Path(".")


@dataclass(frozen=True)
class GenConfig:
    sf: float
    table: str = "all"
    part_index: int = 1
    part_count: int = 1
    seed: int = DEFAULT_SEED
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.table != "all":
            schema.table(self.table)
        if not 1 <= self.part_index <= self.part_count:
            raise ValueError(
                f"need 1 <= part_index <= part_count, got {self.part_index}/{self.part_count}"
            )
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if schema.expected_cardinality("supplier", self.sf) < 4:
            raise ValueError(
                "scale factor too small: need at least 4 suppliers for the "
                "four suppliers-per-part rule"
            )


@dataclass(frozen=True)
class GenSummary:
    rows: dict[str, int]
    files: dict[str, str]


@dataclass(frozen=True)
class RefreshSet:
    pair_index: int
    new_orders: tuple[tuple[str, ...], ...]
    new_lineitems: tuple[tuple[str, ...], ...]
    delete_keys: tuple[int, ...]

    def order_keys(self) -> tuple[int, ...]:
        """Keys of the rows this set would insert (the matching delete set)."""
        return tuple(int(row[0]) for row in self.new_orders)


def _row_rng(seed: int, table: str, key: int) -> random.Random:
    digest = hashlib.blake2b(
        f"{seed}|{table}|{key}".encode("ascii"), digest_size=16
    ).digest()
    return random.Random(int.from_bytes(digest, "big"))


def format_money(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    whole, frac = divmod(abs(cents), 100)
    return f"{sign}{whole}.{frac:02d}"


def _words(rng: random.Random, max_len: int, phrase: Optional[str] = None) -> str:
    """Space-joined comment words within ``max_len``; may splice a phrase."""
    parts: list[str] = []
    if phrase and len(phrase) <= max_len:
        parts.append(phrase)
    budget = rng.randint(max(6, max_len // 3), max_len)
    while True:
        word = rng.choice(_COMMENT_WORDS)
        candidate = " ".join(parts + [word]) if parts else word
        if len(candidate) > min(budget, max_len):
            break
        parts.append(word)
    if not parts:
        return rng.choice(_COMMENT_WORDS)[:max_len]
    return " ".join(parts)


def _address(rng: random.Random, max_len: int) -> str:
    alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ,"
    n = rng.randint(10, max_len)
    return "".join(rng.choice(alphabet) for _ in range(n)).strip()


def _phone(rng: random.Random, nation_key: int) -> str:
    country = 10 + nation_key - 1
    return (
        f"{country}-{rng.randint(100, 999)}-{rng.randint(100, 999)}"
        f"-{rng.randint(1000, 9999)}"
    )


def retail_price_cents(part_key: int) -> int:
    """Part retail price as a pure function of the key (cents)."""
    return 90_000 + (part_key // 10) % 20_001 + 100 * (part_key % 1_000)


@functools.lru_cache(maxsize=262_144)
def part_suppliers(sf: float, seed: int, part_key: int) -> tuple[int, ...]:
    """The four distinct suppliers carrying a part, in stored order."""
    supplier_count = schema.expected_cardinality("supplier", sf)
    rng = _row_rng(seed, "partsupp", part_key)
    return tuple(rng.sample(range(1, supplier_count + 1), 4))


def _region_row(sf: float, seed: int, key: int) -> tuple[str, ...]:
    rng = _row_rng(seed, "region", key)
    return (str(key), _REGIONS[key - 1], _words(rng, 120))


def _nation_row(sf: float, seed: int, key: int) -> tuple[str, ...]:
    rng = _row_rng(seed, "nation", key)
    name, region_key = _NATIONS[key - 1]
    return (str(key), name, str(region_key), _words(rng, 120))


def _supplier_row(sf: float, seed: int, key: int) -> tuple[str, ...]:
    rng = _row_rng(seed, "supplier", key)
    nation_key = rng.randint(1, len(_NATIONS))
    acctbal = rng.randint(-99_999, 999_999)
    phrase = "Customer Complaints" if rng.random() < 0.05 else None
    return (
        str(key),
        f"Supplier#{key:09d}",
        _address(rng, 38),
        str(nation_key),
        _phone(rng, nation_key),
        format_money(acctbal),
        _words(rng, 95, phrase),
    )


def _part_row(sf: float, seed: int, key: int) -> tuple[str, ...]:
    rng = _row_rng(seed, "part", key)
    name = " ".join(rng.sample(_COLORS, 3))
    mfgr = rng.randint(1, 5)
    brand = f"Brand#{mfgr}{rng.randint(1, 5)}"
    ptype = (
        f"{rng.choice(_TYPE_CLASSES)} {rng.choice(_TYPE_FINISHES)}"
        f" {rng.choice(_TYPE_MATERIALS)}"
    )
    return (
        str(key),
        name,
        f"Manufacturer#{mfgr}",
        brand,
        ptype,
        str(rng.randint(1, 50)),
        f"{rng.choice(_CONTAINER_SIZES)} {rng.choice(_CONTAINER_KINDS)}",
        format_money(retail_price_cents(key)),
        _words(rng, 22),
    )


def _partsupp_rows(sf: float, seed: int, part_key: int) -> list[tuple[str, ...]]:
    rng = _row_rng(seed, "partsupp", part_key)
    supplier_count = schema.expected_cardinality("supplier", sf)
    suppliers = rng.sample(range(1, supplier_count + 1), 4)
    rows = []
    for supp_key in suppliers:
        rows.append(
            (
                str(part_key),
                str(supp_key),
                str(rng.randint(1, 9_999)),
                format_money(rng.randint(100, 100_000)),
                _words(rng, 130),
            )
        )
    return rows


def _customer_row(sf: float, seed: int, key: int) -> tuple[str, ...]:
    rng = _row_rng(seed, "customer", key)
    nation_key = rng.randint(1, len(_NATIONS))
    return (
        str(key),
        f"Customer#{key:09d}",
        _address(rng, 38),
        str(nation_key),
        _phone(rng, nation_key),
        format_money(rng.randint(-99_999, 999_999)),
        rng.choice(_SEGMENTS),
        _words(rng, 110),
    )


def _draw_order_custkey(rng: random.Random, customer_count: int) -> int:
    # A third of customers (keys divisible by 3) never place orders; this
    # keeps "customers without orders" queries satisfiable.
    if customer_count < 3:
        return rng.randint(1, customer_count)
    while True:
        key = rng.randint(1, customer_count)
        if key % 3 != 0:
            return key


def _order_unit(
    sf: float, seed: int, order_key: int
) -> tuple[tuple[str, ...], list[tuple[str, ...]]]:
    """One order row plus its 1..7 lineitem rows."""
    rng = _row_rng(seed, "orders", order_key)
    customer_count = schema.expected_cardinality("customer", sf)
    part_count = schema.expected_cardinality("part", sf)
    clerk_count = max(1, round(1_000 * sf))

    cust_key = _draw_order_custkey(rng, customer_count)
    order_day = DATE_MIN.toordinal() + rng.randint(
        0, _ORDER_DATE_MAX.toordinal() - DATE_MIN.toordinal()
    )
    order_date = date.fromordinal(order_day)

    item_count = rng.randint(1, 7)
    items: list[tuple[str, ...]] = []
    statuses: list[str] = []
    total_cents = 0
    for line_number in range(1, item_count + 1):
        part_key = rng.randint(1, part_count)
        supp_key = part_suppliers(sf, seed, part_key)[rng.randrange(4)]
        quantity = rng.randint(1, 50)
        ext_cents = quantity * retail_price_cents(part_key)
        discount = rng.randint(0, 10)
        tax = rng.randint(0, 8)
        ship = order_day + rng.randint(1, 121)
        commit = order_day + rng.randint(30, 90)
        receipt = ship + rng.randint(1, 30)
        ship_date = date.fromordinal(ship)
        if date.fromordinal(receipt) <= _CURRENT_DATE:
            return_flag = rng.choice(("R", "A"))
        else:
            return_flag = "N"
        line_status = "O" if ship_date > _CURRENT_DATE else "F"
        statuses.append(line_status)
        # charge = extended * (1 - discount) * (1 + tax), half-up in cents
        charge_num = ext_cents * (100 - discount) * (100 + tax)
        total_cents += (charge_num + 5_000) // 10_000
        items.append(
            (
                str(order_key),
                str(part_key),
                str(supp_key),
                str(line_number),
                str(quantity),
                format_money(ext_cents),
                f"0.{discount:02d}",
                f"0.{tax:02d}",
                return_flag,
                line_status,
                ship_date.isoformat(),
                date.fromordinal(commit).isoformat(),
                date.fromordinal(receipt).isoformat(),
                rng.choice(_SHIPINSTRUCT),
                rng.choice(_SHIPMODES),
                _words(rng, 40),
            )
        )

    if all(s == "F" for s in statuses):
        order_status = "F"
    elif all(s == "O" for s in statuses):
        order_status = "O"
    else:
        order_status = "P"
    phrase = "special deposits" if rng.random() < 0.02 else None
    order_row = (
        str(order_key),
        str(cust_key),
        order_status,
        format_money(total_cents),
        order_date.isoformat(),
        rng.choice(_PRIORITIES),
        f"Clerk#{rng.randint(1, clerk_count):09d}",
        "0",
        _words(rng, 72, phrase),
    )
    return order_row, items


def _key_slice(total: int, part_index: int, part_count: int) -> range:
    start = total * (part_index - 1) // part_count + 1
    end = total * part_index // part_count
    return range(start, end + 1)


def generate_rows(
    table: str,
    sf: float,
    seed: int = DEFAULT_SEED,
    part_index: int = 1,
    part_count: int = 1,
) -> Iterator[tuple[str, ...]]:
    """Rows (as rendered field tuples) for one table partition."""
    GenConfig(sf, table, part_index, part_count, seed)
    name = table.lower()
    if name in ("region", "nation", "supplier", "part", "customer"):
        per_key = {
            "region": _region_row,
            "nation": _nation_row,
            "supplier": _supplier_row,
            "part": _part_row,
            "customer": _customer_row,
        }[name]
        total = schema.expected_cardinality(name, sf)
        for key in _key_slice(total, part_index, part_count):
            yield per_key(sf, seed, key)
    elif name == "partsupp":
        total = schema.expected_cardinality("part", sf)
        for key in _key_slice(total, part_index, part_count):
            yield from _partsupp_rows(sf, seed, key)
    elif name == "orders":
        total = schema.expected_cardinality("orders", sf)
        for key in _key_slice(total, part_index, part_count):
            yield _order_unit(sf, seed, key)[0]
    elif name == "lineitem":
        total = schema.expected_cardinality("orders", sf)
        for key in _key_slice(total, part_index, part_count):
            yield from _order_unit(sf, seed, key)[1]
    else:
        raise KeyError(f"unknown table: {table!r}")


def table_file_name(table: str, part_index: int = 1, part_count: int = 1) -> str:
    if part_count > 1:
        return f"{table}.tbl.{part_index}"
    return f"{table}.tbl"


def _write_rows(path: Path, rows: Iterable[Sequence[str]]) -> int:
    count = 0
    with open(path, "w", encoding="ascii", newline="") as out:
        for row in rows:
            out.write("|".join(row))
            out.write("\n")
            count += 1
    return count


def generate_table(cfg: GenConfig) -> GenSummary:
    """Write the configured table (or all eight) as flat files."""
    out_dir = resolve_output_dir(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = schema.TABLE_NAMES if cfg.table == "all" else (cfg.table.lower(),)
    rows: dict[str, int] = {}
    files: dict[str, str] = {}
    for name in tables:
        path = out_dir / table_file_name(name, cfg.part_index, cfg.part_count)
        rows[name] = _write_rows(
            path, generate_rows(name, cfg.sf, cfg.seed, cfg.part_index, cfg.part_count)
        )
        files[name] = str(path)
    return GenSummary(rows, files)


def refresh_set_size(sf: float) -> int:
    """Orders per refresh pair: 0.1% of the ORDERS base, minimum 1."""
    return max(1, round(schema.expected_cardinality("orders", sf) / 1000))


def generate_refresh_set(
    sf: float,
    pair_index: int,
    seed: int = DEFAULT_SEED,
    output_dir: str | os.PathLike | None = None,
) -> RefreshSet:
    """Insert/delete batch for one refresh pair; optionally written to disk.

    New order keys sit above the base key space in consecutive per-pair
    bands; delete keys walk the base key space from the bottom, so batches
    never collide across pairs.
    """
    if pair_index < 1:
        raise ValueError("pair_index must be >= 1")
    GenConfig(sf, "orders", seed=seed)
    base_orders = schema.expected_cardinality("orders", sf)
    size = refresh_set_size(sf)
    if pair_index * size > base_orders:
        raise ValueError(
            f"pair_index {pair_index} exhausts the base order population"
        )

    first_new = base_orders + (pair_index - 1) * size + 1
    new_orders: list[tuple[str, ...]] = []
    new_lineitems: list[tuple[str, ...]] = []
    for key in range(first_new, first_new + size):
        order_row, items = _order_unit(sf, seed, key)
        new_orders.append(order_row)
        new_lineitems.extend(items)

    first_del = (pair_index - 1) * size + 1
    delete_keys = tuple(range(first_del, first_del + size))

    refresh = RefreshSet(
        pair_index, tuple(new_orders), tuple(new_lineitems), delete_keys
    )
    if output_dir is not None:
        out_dir = resolve_output_dir(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_rows(out_dir / f"orders.tbl.u{pair_index}", refresh.new_orders)
        _write_rows(out_dir / f"lineitem.tbl.u{pair_index}", refresh.new_lineitems)
        _write_rows(out_dir / f"delete.{pair_index}", ((str(k),) for k in delete_keys))
    return refresh
