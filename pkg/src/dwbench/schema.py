"""Warehouse schema model: table layouts, scale rules, DDL, load validation.

The schema is the classic decision-support star of eight tables (REGION,
NATION, SUPPLIER, PART, PARTSUPP, CUSTOMER, ORDERS, LINEITEM).  Row counts
scale with a scale factor ``sf``: REGION and NATION are fixed catalogs, the
other tables grow linearly, and LINEITEM is stochastic with a tolerance band
around its nominal size.

DDL emission is split in two phases to match the load procedure (data first,
then constraints): ``emit_table_ddl`` creates bare tables, and
``emit_constraint_ddl`` adds the primary-key indexes and the secondary
indexes afterwards.  ``parse_ddl`` round-trips the emitted subset back into
``TableSpec`` values so a schema written to disk can be audited.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping

__all__ = [
    "Column",
    "TableSpec",
    "IndexSpec",
    "CardinalityCheck",
    "LoadValidation",
    "TABLE_NAMES",
    "LOAD_ORDER",
    "OFFICIAL_SCALE_FACTORS",
    "schema",
    "table",
    "is_official_scale",
    "expected_cardinality",
    "lineitem_bounds",
    "expected_counts",
    "validate_load",
    "pk_indexes",
    "secondary_indexes",
    "emit_table_ddl",
    "emit_schema_ddl",
    "emit_constraint_ddl",
    "emit_ddl",
    "parse_ddl",
]


@dataclass(frozen=True)
class Column:
    """One column: SQL name plus rendered SQL type."""

    name: str
    sqltype: str

    @property
    def kind(self) -> str:
        """Value class used by generators and loaders.

        One of ``int``, ``money`` (fixed-point, two fraction digits),
        ``date`` (ISO text) or ``text``.
        """
        t = self.sqltype.upper()
        if t.startswith("INTEGER"):
            return "int"
        if t.startswith("DECIMAL"):
            return "money"
        if t.startswith("DATE"):
            return "date"
        return "text"


@dataclass(frozen=True)
class TableSpec:
    """One table: columns in file order plus the primary-key definition."""

    name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...]
    pk_index_name: str

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def arity(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class IndexSpec:
    """A named index over one or more columns of a table."""

    name: str
    table: str
    columns: tuple[str, ...]
    unique: bool = False


def _t(name: str, pk: tuple[str, ...], pk_name: str, *cols: tuple[str, str]) -> TableSpec:
    return TableSpec(name, tuple(Column(n, t) for n, t in cols), pk, pk_name)


_SCHEMA: tuple[TableSpec, ...] = (
    _t(
        "region", ("r_regionkey",), "region_pkey",
        ("r_regionkey", "INTEGER"),
        ("r_name", "CHAR(25)"),
        ("r_comment", "VARCHAR(152)"),
    ),
    _t(
        "nation", ("n_nationkey",), "nation_pkey",
        ("n_nationkey", "INTEGER"),
        ("n_name", "CHAR(25)"),
        ("n_regionkey", "INTEGER"),
        ("n_comment", "VARCHAR(152)"),
    ),
    _t(
        "supplier", ("s_suppkey",), "supp_pkey",
        ("s_suppkey", "INTEGER"),
        ("s_name", "CHAR(25)"),
        ("s_address", "VARCHAR(40)"),
        ("s_nationkey", "INTEGER"),
        ("s_phone", "CHAR(15)"),
        ("s_acctbal", "DECIMAL(15,2)"),
        ("s_comment", "VARCHAR(101)"),
    ),
    _t(
        "part", ("p_partkey",), "part_pkey",
        ("p_partkey", "INTEGER"),
        ("p_name", "VARCHAR(55)"),
        ("p_mfgr", "CHAR(25)"),
        ("p_brand", "CHAR(10)"),
        ("p_type", "VARCHAR(25)"),
        ("p_size", "INTEGER"),
        ("p_container", "CHAR(10)"),
        ("p_retailprice", "DECIMAL(15,2)"),
        ("p_comment", "VARCHAR(23)"),
    ),
    _t(
        "partsupp", ("ps_partkey", "ps_suppkey"), "ps_pkey",
        ("ps_partkey", "INTEGER"),
        ("ps_suppkey", "INTEGER"),
        ("ps_availqty", "INTEGER"),
        ("ps_supplycost", "DECIMAL(15,2)"),
        ("ps_comment", "VARCHAR(199)"),
    ),
    _t(
        "customer", ("c_custkey",), "customer_pkey",
        ("c_custkey", "INTEGER"),
        ("c_name", "VARCHAR(25)"),
        ("c_address", "VARCHAR(40)"),
        ("c_nationkey", "INTEGER"),
        ("c_phone", "CHAR(15)"),
        ("c_acctbal", "DECIMAL(15,2)"),
        ("c_mktsegment", "CHAR(10)"),
        ("c_comment", "VARCHAR(117)"),
    ),
    _t(
        "orders", ("o_orderkey",), "orders_pkey",
        ("o_orderkey", "INTEGER"),
        ("o_custkey", "INTEGER"),
        ("o_orderstatus", "CHAR(1)"),
        ("o_totalprice", "DECIMAL(15,2)"),
        ("o_orderdate", "DATE"),
        ("o_orderpriority", "CHAR(15)"),
        ("o_clerk", "CHAR(15)"),
        ("o_shippriority", "INTEGER"),
        ("o_comment", "VARCHAR(79)"),
    ),
    _t(
        "lineitem", ("l_orderkey", "l_linenumber"), "lineitem_pkey",
        ("l_orderkey", "INTEGER"),
        ("l_partkey", "INTEGER"),
        ("l_suppkey", "INTEGER"),
        ("l_linenumber", "INTEGER"),
        ("l_quantity", "DECIMAL(15,2)"),
        ("l_extendedprice", "DECIMAL(15,2)"),
        ("l_discount", "DECIMAL(15,2)"),
        ("l_tax", "DECIMAL(15,2)"),
        ("l_returnflag", "CHAR(1)"),
        ("l_linestatus", "CHAR(1)"),
        ("l_shipdate", "DATE"),
        ("l_commitdate", "DATE"),
        ("l_receiptdate", "DATE"),
        ("l_shipinstruct", "CHAR(25)"),
        ("l_shipmode", "CHAR(10)"),
        ("l_comment", "VARCHAR(44)"),
    ),
)

_BY_NAME: dict[str, TableSpec] = {t.name: t for t in _SCHEMA}

TABLE_NAMES: tuple[str, ...] = tuple(t.name for t in _SCHEMA)

# Bulk-load order: the two big tables go first, then the catalogs and the
# remaining dimension tables.  Constraints are built after the data, so the
# order is free of foreign-key concerns.
LOAD_ORDER: tuple[str, ...] = (
    "lineitem",
    "orders",
    "region",
    "nation",
    "part",
    "supplier",
    "partsupp",
    "customer",
)

OFFICIAL_SCALE_FACTORS: tuple[int, ...] = (1, 10, 30, 100, 300, 1000, 3000, 10000)

# Nominal rows at sf=1.  REGION and NATION are fixed; LINEITEM is nominal
# only (actual size is drawn per order, within +-5%).
_FIXED_ROWS = {"region": 5, "nation": 25}
_LINEAR_ROWS = {
    "supplier": 10_000,
    "part": 200_000,
    "partsupp": 800_000,
    "customer": 150_000,
    "orders": 1_500_000,
}
_LINEITEM_NOMINAL = 6_000_000
_LINEITEM_TOLERANCE = Decimal("0.05")

_SECONDARY_INDEXES: tuple[IndexSpec, ...] = (
    IndexSpec("i_o_orderdate", "orders", ("o_orderdate",)),
    IndexSpec("i_l_shipdate", "lineitem", ("l_shipdate",)),
    IndexSpec("i_l_receiptdate", "lineitem", ("l_receiptdate",)),
    IndexSpec("i_l_partkey", "lineitem", ("l_partkey",)),
    IndexSpec("i_l_orderkey", "lineitem", ("l_orderkey",)),
    IndexSpec("i_n_nationkey", "nation", ("n_nationkey",)),
)


def schema() -> tuple[TableSpec, ...]:
    """All eight tables, in catalog order."""
    return _SCHEMA


def table(name: str) -> TableSpec:
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise KeyError(f"unknown table: {name!r}") from None


def is_official_scale(sf: float) -> bool:
    """True when ``sf`` is one of the sanctioned scale-factor values."""
    return any(sf == official for official in OFFICIAL_SCALE_FACTORS)


def _as_decimal(sf: float) -> Decimal:
    if isinstance(sf, Decimal):
        d = sf
    else:
        # str() round-trips the intended decimal value of float inputs.
        d = Decimal(str(sf))
    if d <= 0:
        raise ValueError(f"scale factor must be positive, got {sf!r}")
    return d


def _scaled(base: int, sf: float) -> int:
    n = int((Decimal(base) * _as_decimal(sf)).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    return max(1, n)


def expected_cardinality(table_name: str, sf: float) -> int:
    """Exact expected row count for one of the seven deterministic tables.

    LINEITEM has no exact count; use :func:`lineitem_bounds` for its band.
    PARTSUPP is pinned to four rows per PART row so that the relation holds
    at every scale, including fractional ones where independent rounding
    could drift off by one.
    """
    name = table_name.lower()
    if name in _FIXED_ROWS:
        return _FIXED_ROWS[name]
    if name == "partsupp":
        return 4 * _scaled(_LINEAR_ROWS["part"], sf)
    if name in _LINEAR_ROWS:
        return _scaled(_LINEAR_ROWS[name], sf)
    if name == "lineitem":
        raise ValueError("lineitem row count is stochastic; use lineitem_bounds()")
    raise KeyError(f"unknown table: {table_name!r}")


def lineitem_bounds(sf: float) -> tuple[int, int]:
    """Inclusive (low, high) band for the LINEITEM row count at ``sf``."""
    center = Decimal(_LINEITEM_NOMINAL) * _as_decimal(sf)
    lo = int((center * (1 - _LINEITEM_TOLERANCE)).quantize(Decimal(1), rounding=ROUND_CEILING))
    hi = int((center * (1 + _LINEITEM_TOLERANCE)).quantize(Decimal(1), rounding=ROUND_FLOOR))
    return max(1, lo), max(1, hi)


def expected_counts(sf: float) -> dict[str, object]:
    """Expected cardinality per table: ints, except a (lo, hi) pair for LINEITEM."""
    out: dict[str, object] = {
        name: expected_cardinality(name, sf) for name in TABLE_NAMES if name != "lineitem"
    }
    out["lineitem"] = lineitem_bounds(sf)
    return out


@dataclass(frozen=True)
class CardinalityCheck:
    table: str
    expected: str
    actual: int
    ok: bool


@dataclass(frozen=True)
class LoadValidation:
    ok: bool
    checks: tuple[CardinalityCheck, ...]

    def failures(self) -> tuple[CardinalityCheck, ...]:
        return tuple(c for c in self.checks if not c.ok)


def validate_load(counts: Mapping[str, int], sf: float) -> LoadValidation:
    """Check observed per-table row counts against the scale rules.

    Every table must be present.  The seven deterministic tables must match
    exactly; LINEITEM must fall inside its tolerance band.
    """
    checks: list[CardinalityCheck] = []
    for name in TABLE_NAMES:
        actual = int(counts.get(name, -1))
        if name == "lineitem":
            lo, hi = lineitem_bounds(sf)
            ok = lo <= actual <= hi
            checks.append(CardinalityCheck(name, f"{lo}..{hi}", actual, ok))
        else:
            want = expected_cardinality(name, sf)
            checks.append(CardinalityCheck(name, str(want), actual, actual == want))
    return LoadValidation(all(c.ok for c in checks), tuple(checks))


def pk_indexes() -> tuple[IndexSpec, ...]:
    """Primary keys, expressed as unique indexes built after the data load."""
    return tuple(
        IndexSpec(t.pk_index_name, t.name, t.primary_key, unique=True) for t in _SCHEMA
    )


def secondary_indexes() -> tuple[IndexSpec, ...]:
    return _SECONDARY_INDEXES


def emit_table_ddl(spec: TableSpec) -> str:
    """CREATE TABLE statement for one table, without constraints."""
    lines = [f"CREATE TABLE {spec.name} ("]
    for i, col in enumerate(spec.columns):
        sep = "," if i < len(spec.columns) - 1 else ""
        lines.append(f"    {col.name} {col.sqltype} NOT NULL{sep}")
    lines.append(");")
    return "\n".join(lines)


def emit_schema_ddl() -> str:
    """CREATE TABLE statements for the whole schema."""
    return "\n\n".join(emit_table_ddl(t) for t in _SCHEMA) + "\n"


def _emit_index(ix: IndexSpec) -> str:
    unique = "UNIQUE " if ix.unique else ""
    cols = ", ".join(ix.columns)
    return f"CREATE {unique}INDEX {ix.name} ON {ix.table} ({cols});"


def emit_constraint_ddl() -> str:
    """Primary-key and secondary-index statements, built post-load."""
    stmts = [_emit_index(ix) for ix in pk_indexes()]
    stmts += [_emit_index(ix) for ix in _SECONDARY_INDEXES]
    return "\n".join(stmts) + "\n"


def emit_ddl(include_constraints: bool = True) -> str:
    """Full schema DDL; with constraints it parses back via :func:`parse_ddl`."""
    out = emit_schema_ddl()
    if include_constraints:
        out += "\n" + emit_constraint_ddl()
    return out


_CREATE_TABLE_RE = re.compile(
    r"CREATE\s+TABLE\s+(\w+)\s*\((.*?)\)\s*;", re.IGNORECASE | re.DOTALL
)
_CREATE_INDEX_RE = re.compile(
    r"CREATE\s+(UNIQUE\s+)?INDEX\s+(\w+)\s+ON\s+(\w+)\s*\(([^)]*)\)\s*;",
    re.IGNORECASE,
)


def _split_columns(body: str) -> list[str]:
    # Split on commas at depth zero; DECIMAL(15,2) keeps its inner comma.
    parts: list[str] = []
    depth = 0
    cur: list[str] = []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur and "".join(cur).strip():
        parts.append("".join(cur))
    return parts


def _parse_column(text: str) -> Column:
    t = text.strip()
    m = re.match(r"(\w+)\s+(.+?)(\s+NOT\s+NULL)?\s*$", t, re.IGNORECASE)
    if not m:
        raise ValueError(f"unparsable column definition: {text!r}")
    name = m.group(1).lower()
    sqltype = re.sub(r"\s+", " ", m.group(2).upper()).replace("( ", "(").replace(" )", ")")
    sqltype = re.sub(r"\s*,\s*", ",", sqltype)
    sqltype = re.sub(r"\s*\(\s*", "(", sqltype)
    return Column(name, sqltype)


def parse_ddl(text: str) -> tuple[tuple[TableSpec, ...], tuple[IndexSpec, ...]]:
    """Parse DDL previously produced by :func:`emit_ddl`.

    Returns the reconstructed tables (with primary keys recovered from the
    unique ``*_pkey`` indexes, when present) and the non-unique secondary
    indexes.  This covers only the harness's own DDL subset.
    """
    tables: list[TableSpec] = []
    for m in _CREATE_TABLE_RE.finditer(text):
        name = m.group(1).lower()
        cols = tuple(_parse_column(c) for c in _split_columns(m.group(2)))
        tables.append(TableSpec(name, cols, (), ""))

    pk_by_table: dict[str, tuple[tuple[str, ...], str]] = {}
    secondary: list[IndexSpec] = []
    for m in _CREATE_INDEX_RE.finditer(text):
        unique = bool(m.group(1))
        ix_name = m.group(2).lower()
        tbl = m.group(3).lower()
        cols = tuple(c.strip().lower() for c in m.group(4).split(","))
        if unique:
            pk_by_table[tbl] = (cols, ix_name)
        else:
            secondary.append(IndexSpec(ix_name, tbl, cols))

    finished: list[TableSpec] = []
    for t in tables:
        pk, pk_name = pk_by_table.get(t.name, ((), ""))
        finished.append(TableSpec(t.name, t.columns, pk, pk_name))
    return tuple(finished), tuple(secondary)
