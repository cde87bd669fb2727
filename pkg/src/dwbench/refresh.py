"""The two refresh functions, timed and transactional.

RF1 inserts a refresh set's new orders with their lineitems; RF2 deletes
orders (and their lineitems, cascade) by key.  Each function runs in a
single transaction: a constraint violation or backend failure rolls the
whole batch back and surfaces the error with zero net effect, so RF2
applied to the keys RF1 just inserted always restores the exact pre-RF1
table counts.

Inserts go through multi-row batches (default 1000 rows per statement
round-trip) instead of a row-at-a-time loop; the observable effects are
identical and desk-scale runs stay fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import backend as backend_mod
from . import datagen

__all__ = [
    "RefreshOutcome",
    "RefreshError",
    "rf1",
    "rf2",
    "load_refresh_files",
    "DEFAULT_BATCH_SIZE",
]

DEFAULT_BATCH_SIZE = 1000


class RefreshError(RuntimeError):
    pass


@dataclass(frozen=True)
class RefreshOutcome:
    function: str  # "RF1" | "RF2"
    orders_affected: int
    lineitems_affected: int
    elapsed: float

    def __post_init__(self):
        if self.function not in ("RF1", "RF2"):
            raise ValueError(f"unknown refresh function: {self.function!r}")
        if self.elapsed < 0:
            raise ValueError("elapsed must be >= 0")
        if self.function == "RF1" and self.orders_affected > 0:
            if not (
                self.orders_affected
                <= self.lineitems_affected
                <= 7 * self.orders_affected
            ):
                raise ValueError(
                    "RF1 lineitems must be between 1 and 7 per order: "
                    f"{self.orders_affected} orders, {self.lineitems_affected} lineitems"
                )
        if self.lineitems_affected < 0 or self.orders_affected < 0:
            raise ValueError("affected counts must be >= 0")


def _batches(rows: Sequence, size: int):
    for offset in range(0, len(rows), size):
        yield rows[offset : offset + size]


def _fail(session, detail: str) -> None:
    session.rollback()
    raise RefreshError(detail)


def rf1(
    session: backend_mod.Session,
    refresh_set: datagen.RefreshSet,
    batch_size: int = DEFAULT_BATCH_SIZE,
    clock=None,
) -> RefreshOutcome:
    """Insert the set's orders and lineitems atomically; returns counts."""
    import time

    monotonic = clock or time.monotonic
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    start = monotonic()
    if not refresh_set.new_orders and not refresh_set.new_lineitems:
        return RefreshOutcome("RF1", 0, 0, monotonic() - start)
    opened = session.begin()
    if not opened.ok:
        raise RefreshError(f"RF1 could not open a transaction: {opened.detail}")
    for table, rows in (
        ("orders", refresh_set.new_orders),
        ("lineitem", refresh_set.new_lineitems),
    ):
        for batch in _batches(rows, batch_size):
            result = session.insert_rows(table, batch)
            if not result.ok:
                _fail(session, f"RF1 insert into {table} failed: {result.detail}")
    committed = session.commit()
    if not committed.ok:
        _fail(session, f"RF1 commit failed: {committed.detail}")
    return RefreshOutcome(
        "RF1",
        len(refresh_set.new_orders),
        len(refresh_set.new_lineitems),
        monotonic() - start,
    )


def rf2(
    session: backend_mod.Session,
    delete_keys: Sequence[int],
    clock=None,
) -> RefreshOutcome:
    """Delete the keyed orders and their lineitems atomically."""
    import time

    monotonic = clock or time.monotonic
    start = monotonic()
    if not delete_keys:
        return RefreshOutcome("RF2", 0, 0, monotonic() - start)
    opened = session.begin()
    if not opened.ok:
        raise RefreshError(f"RF2 could not open a transaction: {opened.detail}")
    result = session.delete_orders_cascade(list(delete_keys))
    if not result.ok:
        _fail(session, f"RF2 delete failed: {result.detail}")
    committed = session.commit()
    if not committed.ok:
        _fail(session, f"RF2 commit failed: {committed.detail}")
    orders_deleted, lineitems_deleted = _parse_cascade_detail(result.detail)
    return RefreshOutcome(
        "RF2", orders_deleted, lineitems_deleted, monotonic() - start
    )


def _parse_cascade_detail(detail: str) -> tuple[int, int]:
    orders = lines = 0
    for token in detail.split():
        if token.startswith("orders="):
            orders = int(token.split("=", 1)[1])
        elif token.startswith("lineitems="):
            lines = int(token.split("=", 1)[1])
    return orders, lines


def load_refresh_files(directory: str | Path, pair_index: int) -> datagen.RefreshSet:
    """Read one pair's orders/lineitem/delete files back into a RefreshSet."""
    base = Path(directory)
    orders_path = base / f"orders.tbl.u{pair_index}"
    lineitem_path = base / f"lineitem.tbl.u{pair_index}"
    delete_path = base / f"delete.{pair_index}"
    for path in (orders_path, lineitem_path, delete_path):
        if not path.exists():
            raise FileNotFoundError(f"missing refresh file: {path}")
    new_orders = tuple(
        tuple(line.split("|"))
        for line in orders_path.read_text(encoding="ascii").splitlines()
        if line
    )
    new_lineitems = tuple(
        tuple(line.split("|"))
        for line in lineitem_path.read_text(encoding="ascii").splitlines()
        if line
    )
    delete_keys = tuple(
        int(line)
        for line in delete_path.read_text(encoding="ascii").split()
        if line
    )
    return datagen.RefreshSet(pair_index, new_orders, new_lineitems, delete_keys)
