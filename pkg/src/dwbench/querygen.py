"""Query templates, parameter substitution, and stream-script rendering.

The 22 read-only query bodies live here with their literals re-abstracted
into ``[NAME]`` placeholders.  Stream 0 is a pinned fixture: substituting
its parameters reproduces the canonical query texts (Q19 gets brands
34/51/14 with quantities 9/13/23, Q6 gets 1995-01-01/0.02/25, Q1 the
64-day interval, and so on).  Streams 1 and up draw parameters
deterministically from (seed, stream, query) substreams.

A rendered stream script is the init block, the 22 queries in schedule
order — each wrapped in ``---q<N> ini---`` / ``---q<N> fim---`` timestamped
log markers — and the completion block.  Stream 0 always runs the fixed
order starting at q14 and ending at q12; higher streams use a seeded
shuffle.
"""

from __future__ import annotations

import hashlib
import os
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from . import datagen

__all__ = [
    "QueryTemplate",
    "QueryInstance",
    "StreamSchedule",
    "RefreshDescriptor",
    "EnvPaths",
    "QUERY_IDS",
    "STREAM_ZERO_ORDER",
    "REFRESH_FUNCTIONS",
    "templates",
    "template",
    "stream_order",
    "substitute_params",
    "stream_instances",
    "render_stream",
    "write_stream_files",
    "default_init",
    "default_complete",
    "resolve_env",
    "q19_distributed_form",
]

DEFAULT_SEED = datagen.DEFAULT_SEED

QUERY_IDS: tuple[int, ...] = tuple(range(1, 23))

STREAM_ZERO_ORDER: tuple[int, ...] = (
    14, 2, 9, 20, 6, 17, 18, 8, 21, 13, 3, 22, 16, 4, 11, 15, 1, 10, 19, 5, 7, 12
)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    stream0: str


@dataclass(frozen=True)
class QueryTemplate:
    id: int
    body: str
    param_specs: tuple[ParamSpec, ...]
    draw: Callable[[random.Random, float], dict[str, str]]

    @property
    def placeholders(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.param_specs)


@dataclass(frozen=True)
class QueryInstance:
    template_id: int
    stream_id: int
    sql: str
    params: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class StreamSchedule:
    stream_id: int
    order: tuple[int, ...]


@dataclass(frozen=True)
class RefreshDescriptor:
    id: int
    name: str
    action: str


REFRESH_FUNCTIONS: tuple[RefreshDescriptor, ...] = (
    RefreshDescriptor(1, "RF1", "insert new orders with their lineitems"),
    RefreshDescriptor(2, "RF2", "delete orders and their lineitems by key"),
)


# --- template bodies -----------------------------------------------------

_BODIES: dict[int, str] = {}
_HEADERS: dict[int, str] = {}


def _register(qid: int, header: str, body: str) -> None:
    _BODIES[qid] = body.strip("\n") + "\n"
    _HEADERS[qid] = header.strip("\n") + "\n"


_register(1, """
-- @(#)1.sql      2.1.8.1
-- TPC-H/TPC-R Pricing Summary Report Query (Q1)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    l_returnflag,
    l_linestatus,
    sum(l_quantity) as sum_qty,
    sum(l_extendedprice) as sum_base_price,
    sum(l_extendedprice * (1 - l_discount)) as sum_disc_price,
    sum(l_extendedprice * (1 - l_discount) * (1 + l_tax)) as sum_charge,
    avg(l_quantity) as avg_qty,
    avg(l_extendedprice) as avg_price,
    avg(l_discount) as avg_disc,
    count(*) as count_order
from
    lineitem
where
    l_shipdate <= date '1998-12-01' - interval '[DELTA] day'
group by
    l_returnflag,
    l_linestatus
order by
    l_returnflag,
    l_linestatus;
""")

_register(2, """
-- @(#)2.sql      2.1.8.2
-- TPC-H/TPC-R Minimum Cost Supplier Query (Q2)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    s_acctbal,
    s_name,
    n_name,
    p_partkey,
    p_mfgr,
    s_address,
    s_phone,
    s_comment
from
    part,
    supplier,
    partsupp,
    nation,
    region
where
    p_partkey = ps_partkey
    and s_suppkey = ps_suppkey
    and p_size = [SIZE]
    and p_type like '%[TYPE]'
    and s_nationkey = n_nationkey
    and n_regionkey = r_regionkey
    and r_name = '[REGION]'
    and ps_supplycost = (
        select
            min(ps_supplycost)
        from
            partsupp,
            supplier,
            nation,
            region
        where
            p_partkey = ps_partkey
            and s_suppkey = ps_suppkey
            and s_nationkey = n_nationkey
            and n_regionkey = r_regionkey
            and r_name = '[REGION]'
    )
order by
    s_acctbal desc,
    n_name,
    s_name,
    p_partkey;
""")

_register(3, """
-- @(#)3.sql      2.1.8.1
-- TPC-H/TPC-R Shipping Priority Query (Q3)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    l_orderkey,
    sum(l_extendedprice * (1 - l_discount)) as revenue,
    o_orderdate,
    o_shippriority
from
    customer,
    orders,
    lineitem
where
    c_mktsegment = '[SEGMENT]'
    and c_custkey = o_custkey
    and l_orderkey = o_orderkey
    and o_orderdate < date '[DATE]'
    and l_shipdate > date '[DATE]'
group by
    l_orderkey,
    o_orderdate,
    o_shippriority
order by
    revenue desc,
    o_orderdate;
""")

_register(4, """
-- @(#)4.sql      2.1.8.1
-- TPC-H/TPC-R Order Priority Checking Query (Q4)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    o_orderpriority,
    count(*) as order_count
from
    orders
where
    o_orderdate >= date '[DATE]'
    and o_orderdate < date '[DATE]' + interval '3 month'
    and exists (
        select
            *
        from
            lineitem
        where
            l_orderkey = o_orderkey
            and l_commitdate < l_receiptdate
    )
group by
    o_orderpriority
order by
    o_orderpriority;
""")

_register(5, """
-- @(#)5.sql      2.1.8.1
-- TPC-H/TPC-R Local Supplier Volume Query (Q5)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    n_name,
    sum(l_extendedprice * (1 - l_discount)) as revenue
from
    customer,
    orders,
    lineitem,
    supplier,
    nation,
    region
where
    c_custkey = o_custkey
    and l_orderkey = o_orderkey
    and l_suppkey = s_suppkey
    and c_nationkey = s_nationkey
    and s_nationkey = n_nationkey
    and n_regionkey = r_regionkey
    and r_name = '[REGION]'
    and o_orderdate >= date '[DATE]'
    and o_orderdate < date '[DATE]' + interval '1 year'
group by
    n_name
order by
    revenue desc;
""")

_register(6, """
-- @(#)6.sql      2.1.8.1
-- TPC-H/TPC-R Forecasting Revenue Change Query (Q6)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    sum(l_extendedprice * l_discount) as revenue
from
    lineitem
where
    l_shipdate >= date '[DATE]'
    and l_shipdate < date '[DATE]' + interval '1 year'
    and l_discount between [DISCOUNT] - 0.01 and [DISCOUNT] + 0.01
    and l_quantity < [QUANTITY];
""")

_register(7, """
-- @(#)7.sql      2.1.8.1
-- TPC-H/TPC-R Volume Shipping Query (Q7)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    supp_nation,
    cust_nation,
    l_year,
    sum(volume) as revenue
from
    (
        select
            n1.n_name as supp_nation,
            n2.n_name as cust_nation,
            extract(year from l_shipdate) as l_year,
            l_extendedprice * (1 - l_discount) as volume
        from
            supplier,
            lineitem,
            orders,
            customer,
            nation n1,
            nation n2
        where
            s_suppkey = l_suppkey
            and o_orderkey = l_orderkey
            and c_custkey = o_custkey
            and s_nationkey = n1.n_nationkey
            and c_nationkey = n2.n_nationkey
            and (
                (n1.n_name = '[NATION1]' and n2.n_name = '[NATION2]')
                or (n1.n_name = '[NATION2]' and n2.n_name = '[NATION1]')
            )
            and l_shipdate between date '1995-01-01' and date '1996-12-31'
    ) as shipping
group by
    supp_nation,
    cust_nation,
    l_year
order by
    supp_nation,
    cust_nation,
    l_year;
""")

_register(8, """
-- @(#)8.sql      2.1.8.1
-- TPC-H/TPC-R National Market Share Query (Q8)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    o_year,
    sum(case
        when nation = '[NATION]' then volume
        else 0
    end) / sum(volume) as mkt_share
from
    (
        select
            extract(year from o_orderdate) as o_year,
            l_extendedprice * (1 - l_discount) as volume,
            n2.n_name as nation
        from
            part,
            supplier,
            lineitem,
            orders,
            customer,
            nation n1,
            nation n2,
            region
        where
            p_partkey = l_partkey
            and s_suppkey = l_suppkey
            and l_orderkey = o_orderkey
            and o_custkey = c_custkey
            and c_nationkey = n1.n_nationkey
            and n1.n_regionkey = r_regionkey
            and r_name = '[REGION]'
            and s_nationkey = n2.n_nationkey
            and o_orderdate between date '1995-01-01' and date '1996-12-31'
            and p_type = '[TYPE]'
    ) as all_nations
group by
    o_year
order by
    o_year;
""")

_register(9, """
-- @(#)9.sql      2.1.8.1
-- TPC-H/TPC-R Product Type Profit Measure Query (Q9)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    nation,
    o_year,
    sum(amount) as sum_profit
from
    (
        select
            n_name as nation,
            extract(year from o_orderdate) as o_year,
            l_extendedprice * (1 - l_discount) - ps_supplycost * l_quantity as amount
        from
            part,
            supplier,
            lineitem,
            partsupp,
            orders,
            nation
        where
            s_suppkey = l_suppkey
            and ps_suppkey = l_suppkey
            and ps_partkey = l_partkey
            and p_partkey = l_partkey
            and o_orderkey = l_orderkey
            and s_nationkey = n_nationkey
            and p_name like '%[COLOR]%'
    ) as profit
group by
    nation,
    o_year
order by
    nation,
    o_year desc;
""")

_register(10, """
-- @(#)10.sql     2.1.8.1
-- TPC-H/TPC-R Returned Item Reporting Query (Q10)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    c_custkey,
    c_name,
    sum(l_extendedprice * (1 - l_discount)) as revenue,
    c_acctbal,
    n_name,
    c_address,
    c_phone,
    c_comment
from
    customer,
    orders,
    lineitem,
    nation
where
    c_custkey = o_custkey
    and l_orderkey = o_orderkey
    and o_orderdate >= date '[DATE]'
    and o_orderdate < date '[DATE]' + interval '3 month'
    and l_returnflag = 'R'
    and c_nationkey = n_nationkey
group by
    c_custkey,
    c_name,
    c_acctbal,
    c_phone,
    n_name,
    c_address,
    c_comment
order by
    revenue desc;
""")

_register(11, """
-- @(#)11.sql      2.1.8.1
-- TPC-H/TPC-R Important Stock Identification Query (Q11)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    ps_partkey,
    sum(ps_supplycost * ps_availqty) as value
from
    partsupp,
    supplier,
    nation
where
    ps_suppkey = s_suppkey
    and s_nationkey = n_nationkey
    and n_name = '[NATION]'
group by
    ps_partkey having
        sum(ps_supplycost * ps_availqty) > (
            select
                sum(ps_supplycost * ps_availqty) * [FRACTION]
            from
                partsupp,
                supplier,
                nation
            where
                ps_suppkey = s_suppkey
                and s_nationkey = n_nationkey
                and n_name = '[NATION]'
        )
order by
    value desc;
""")

_register(12, """
-- @(#)12.sql      2.1.8.1
-- TPC-H/TPC-R Shipping Modes and Order Priority Query (Q12)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    l_shipmode,
    sum(case
        when o_orderpriority = '1-URGENT'
            or o_orderpriority = '2-HIGH'
        then 1
        else 0
    end) as high_line_count,
    sum(case
        when o_orderpriority <> '1-URGENT'
            and o_orderpriority <> '2-HIGH'
        then 1
        else 0
    end) as low_line_count
from
    orders,
    lineitem
where
    o_orderkey = l_orderkey
    and l_shipmode in ('[SHIPMODE1]', '[SHIPMODE2]')
    and l_commitdate < l_receiptdate
    and l_shipdate < l_commitdate
    and l_receiptdate >= date '[DATE]'
    and l_receiptdate < date '[DATE]' + interval '1 year'
group by
    l_shipmode
order by
    l_shipmode;
""")

_register(13, """
-- @(#)13.sql      2.1.8.1
-- TPC-H/TPC-R Customer Distribution Query (Q13)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    c_count,
    count(*) as custdist
from
    (
        select
            c_custkey,
            count(o_orderkey)
        from
            customer left outer join orders on
                c_custkey = o_custkey
                and o_comment not like '%[WORD1]%[WORD2]%'
        group by
            c_custkey
    ) as c_orders (c_custkey, c_count)
group by
    c_count
order by
    custdist desc,
    c_count desc;
""")

_register(14, """
-- @(#)14.sql      2.1.8.1
-- TPC-H/TPC-R Promotion Effect Query (Q14)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    100.00 * sum(case
        when p_type like 'PROMO%'
            then l_extendedprice * (1 - l_discount)
            else 0
        end) / sum(l_extendedprice * (1 - l_discount)) as promo_revenue
from
    lineitem,
    part
where
    l_partkey = p_partkey
    and l_shipdate >= date '[DATE]'
    and l_shipdate < date '[DATE]' + interval '1 month';
""")

_register(15, """
-- @(#)15.sql      2.1.8.1
-- TPC-H/TPC-R Top Supplier Query (Q15)
-- Functional Query Definition
-- Approved February 1998
""", """
create view revenue[STREAM] (supplier_no, total_revenue) as
select
    l_suppkey,
    sum(l_extendedprice * (1 - l_discount))
from
    lineitem
where
    l_shipdate >= date '[DATE]'
    and l_shipdate < date '[DATE]' + interval '3 month'
group by
    l_suppkey;

select
    s_suppkey,
    s_name,
    s_address,
    s_phone,
    total_revenue
from
    supplier,
    revenue[STREAM]
where
    s_suppkey = supplier_no
    and total_revenue = (
        select
            max(total_revenue)
        from
            revenue[STREAM]
    )
order by
    s_suppkey;

drop view revenue[STREAM];
""")

_register(16, """
-- @(#)16.sql      2.1.8.1
-- TPC-H/TPC-R Parts/Supplier Relationship Query (Q16)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    p_brand,
    p_type,
    p_size,
    count(distinct ps_suppkey) as supplier_cnt
from
    partsupp,
    part
where
    p_partkey = ps_partkey
    and p_brand <> '[BRAND]'
    and p_type not like '[TYPE]%'
    and p_size in ([SIZE1], [SIZE2], [SIZE3], [SIZE4], [SIZE5], [SIZE6], [SIZE7], [SIZE8])
    and ps_suppkey not in (
        select
            s_suppkey
        from
            supplier
        where
            s_comment like '%Customer%Complaints%'
    )
group by
    p_brand,
    p_type,
    p_size
order by
    supplier_cnt desc,
    p_brand,
    p_type,
    p_size;
""")

_register(17, """
-- @(#)17.sql     2.1.8.1
-- TPC-H/TPC-R Small-Quantity-Order Revenue Query (Q17)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    sum(l_extendedprice) / 7.0 as avg_yearly
from
    lineitem,
    part
where
    p_partkey = l_partkey
    and p_brand = '[BRAND]'
    and p_container = '[CONTAINER]'
    and l_quantity < (
        select
            0.2 * avg(l_quantity)
        from
            lineitem
        where
            l_partkey = p_partkey
    );
""")

_register(18, """
-- @(#)18.sql     2.1.8.1
-- TPC-H/TPC-R Large Volume Customer Query (Q18)
-- Function Query Definition
-- Approved February 1998
""", """
select
    c_name,
    c_custkey,
    o_orderkey,
    o_orderdate,
    o_totalprice,
    sum(l_quantity)
from
    customer,
    orders,
    lineitem
where
    o_orderkey in (
        select
            l_orderkey
        from
            lineitem
        group by
            l_orderkey having
                sum(l_quantity) > [QUANTITY]
    )
    and c_custkey = o_custkey
    and o_orderkey = l_orderkey
group by
    c_name,
    c_custkey,
    o_orderkey,
    o_orderdate,
    o_totalprice
order by
    o_totalprice desc,
    o_orderdate;
""")

_register(19, """
-- @(#)t9.sql      2.1.8.1
-- TPC-H/TPC-R Discounted Revenue Query (Q19)
-- Functional Query Definition
-- Approved February 1998
""", """
START TRANSACTION;

select
    sum(l_extendedprice* (1 - l_discount)) as revenue
from
    lineitem,
    part
where
    p_partkey = l_partkey
    and l_shipmode in ('AIR', 'AIR REG')
    and l_shipinstruct = 'DELIVER IN PERSON'
    and
    (
        (
            p_brand = '[BRAND1]'
            and p_container in ('SM CASE', 'SM BOX', 'SM PACK', 'SM PKG')
            and l_quantity >= [QUANTITY1] and l_quantity <= [QUANTITY1]+10
            and p_size between 1 and 5
        )
        or
        (
            p_brand = '[BRAND2]'
            and p_container in ('MED BAG', 'MED BOX', 'MED PKG', 'MED PACK')
            and l_quantity >= [QUANTITY2] and l_quantity <= [QUANTITY2]+10
            and p_size between 1 and 10
        )
        or
        (
            p_brand = '[BRAND3]'
            and p_container in ('LG CASE', 'LG BOX', 'LG PACK', 'LG PKG')
            and l_quantity >= [QUANTITY3] and l_quantity <= [QUANTITY3]+10
            and p_size between 1 and 15
        )
    );

COMMIT;
""")

_register(20, """
-- @(#)20.sql      2.1.8.1
-- TPC-H/TPC-R Potential Part Promotion Query (Q20)
-- Function Query Definition
-- Approved February 1998
""", """
select
    s_name,
    s_address
from
    supplier,
    nation
where
    s_suppkey in (
        select
            ps_suppkey
        from
            partsupp
        where
            ps_partkey in (
                select
                    p_partkey
                from
                    part
                where
                    p_name like '[COLOR]%'
            )
            and ps_availqty > (
                select
                    0.5 * sum(l_quantity)
                from
                    lineitem
                where
                    l_partkey = ps_partkey
                    and l_suppkey = ps_suppkey
                    and l_shipdate >= date '[DATE]'
                    and l_shipdate < date '[DATE]' + interval '1 year'
            )
    )
    and s_nationkey = n_nationkey
    and n_name = '[NATION]'
order by
    s_name;
""")

_register(21, """
-- @(#)21.sql      2.1.8.1
-- TPC-H/TPC-R Suppliers Who Kept Orders Waiting Query (Q21)
-- Functional Query Definition
-- Approved February 1998
""", """
select
    s_name,
    count(*) as numwait
from
    supplier,
    lineitem l1,
    orders,
    nation
where
    s_suppkey = l1.l_suppkey
    and o_orderkey = l1.l_orderkey
    and o_orderstatus = 'F'
    and l1.l_receiptdate > l1.l_commitdate
    and exists (
        select
            *
        from
            lineitem l2
        where
            l2.l_orderkey = l1.l_orderkey
            and l2.l_suppkey <> l1.l_suppkey
    )
    and not exists (
        select
            *
        from
            lineitem l3
        where
            l3.l_orderkey = l1.l_orderkey
            and l3.l_suppkey <> l1.l_suppkey
            and l3.l_receiptdate > l3.l_commitdate
    )
    and s_nationkey = n_nationkey
    and n_name = '[NATION]'
group by
    s_name
order by
    numwait desc,
    s_name;
""")

_register(22, """
-- @(#)22.sql      2.1.8.1
-- TPC-H/TPC-R Global Sales Opportunity Query (Q22)
-- Functional Query Definition
-- Approved February 1998
""", """
select
  centrycode,
  count(*) as numcust,
  sum(c_acctbal) as totacctbal
from
  (
    select
      substr(c_phone,1,2) as centrycode,
      c_acctbal
    from
      customer
    where
      substr(c_phone,1,2) in
        ('[I1]', '[I2]', '[I3]', '[I4]', '[I5]', '[I6]', '[I7]')
      and c_acctbal > (
        select
          avg(c_acctbal)
        from
          customer
        where
          c_acctbal > 0.00
          and substr(c_phone,1,2) in
            ('[I1]', '[I2]', '[I3]', '[I4]', '[I5]', '[I6]', '[I7]')
        )
      and not exists (
        select
          *
        from
          orders
        where
          o_custkey = c_custkey
      )
    ) as custsale
group by
  centrycode
order by
  centrycode;
""")


# --- parameter domains ---------------------------------------------------

def _dom() -> dict[str, tuple]:
    return datagen.value_domains()


def _month_starts(first: tuple[int, int], last: tuple[int, int]) -> list[str]:
    out = []
    y, m = first
    while (y, m) <= last:
        out.append(f"{y:04d}-{m:02d}-01")
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return out


def _jan1(rng: random.Random) -> str:
    return f"{rng.randint(1993, 1997)}-01-01"


def _brand(rng: random.Random) -> str:
    return f"Brand#{rng.randint(1, 5)}{rng.randint(1, 5)}"


def _nation(rng: random.Random) -> str:
    return rng.choice(_dom()["nations"])


def _q11_fraction(sf: float) -> str:
    return f"{0.0001 / sf:.10f}"


_SPEC_TABLE: dict[int, tuple[tuple[str, str, str], ...]] = {
    1: (("DELTA", "int", "64"),),
    2: (("SIZE", "int", "23"), ("TYPE", "text", "STEEL"), ("REGION", "text", "AFRICA")),
    3: (("SEGMENT", "text", "FURNITURE"), ("DATE", "date", "1995-03-01")),
    4: (("DATE", "date", "1993-03-01"),),
    5: (("REGION", "text", "AFRICA"), ("DATE", "date", "1995-01-01")),
    6: (("DATE", "date", "1995-01-01"), ("DISCOUNT", "money", "0.02"),
        ("QUANTITY", "int", "25")),
    7: (("NATION1", "text", "ALGERIA"), ("NATION2", "text", "JORDAN")),
    8: (("NATION", "text", "JORDAN"), ("REGION", "text", "MIDDLE EAST"),
        ("TYPE", "text", "PROMO PLATED BRASS")),
    9: (("COLOR", "text", "tan"),),
    10: (("DATE", "date", "1993-12-01"),),
    11: (("NATION", "text", "BRAZIL"), ("FRACTION", "number", "0.0001000000")),
    12: (("SHIPMODE1", "text", "FOB"), ("SHIPMODE2", "text", "AIR"),
         ("DATE", "date", "1997-01-01")),
    13: (("WORD1", "text", "special"), ("WORD2", "text", "deposits")),
    14: (("DATE", "date", "1998-01-01"),),
    15: (("DATE", "date", "1994-08-01"), ("STREAM", "stream", "0")),
    16: (("BRAND", "text", "Brand#41"), ("TYPE", "text", "LARGE BURNISHED"),
         ("SIZE1", "int", "26"), ("SIZE2", "int", "48"), ("SIZE3", "int", "45"),
         ("SIZE4", "int", "7"), ("SIZE5", "int", "41"), ("SIZE6", "int", "46"),
         ("SIZE7", "int", "31"), ("SIZE8", "int", "17")),
    17: (("BRAND", "text", "Brand#13"), ("CONTAINER", "text", "MED PACK")),
    18: (("QUANTITY", "int", "314"),),
    19: (("BRAND1", "text", "Brand#34"), ("BRAND2", "text", "Brand#51"),
         ("BRAND3", "text", "Brand#14"), ("QUANTITY1", "int", "9"),
         ("QUANTITY2", "int", "13"), ("QUANTITY3", "int", "23")),
    20: (("COLOR", "text", "royal"), ("DATE", "date", "1997-01-01"),
         ("NATION", "text", "EGYPT")),
    21: (("NATION", "text", "RUSSIA"),),
    22: (("I1", "text", "11"), ("I2", "text", "14"), ("I3", "text", "25"),
         ("I4", "text", "15"), ("I5", "text", "21"), ("I6", "text", "17"),
         ("I7", "text", "20")),
}


def _draw_q1(rng, sf):
    return {"DELTA": str(rng.randint(60, 120))}


def _draw_q2(rng, sf):
    return {
        "SIZE": str(rng.randint(1, 50)),
        "TYPE": rng.choice(("TIN", "NICKEL", "BRASS", "STEEL", "COPPER")),
        "REGION": rng.choice(_dom()["regions"]),
    }


def _draw_q3(rng, sf):
    day = rng.randint(1, 31)
    return {"SEGMENT": rng.choice(_dom()["segments"]), "DATE": f"1995-03-{day:02d}"}


def _draw_q4(rng, sf):
    return {"DATE": rng.choice(_month_starts((1993, 1), (1997, 10)))}


def _draw_q5(rng, sf):
    return {"REGION": rng.choice(_dom()["regions"]), "DATE": _jan1(rng)}


def _draw_q6(rng, sf):
    return {
        "DATE": _jan1(rng),
        "DISCOUNT": f"0.0{rng.randint(2, 9)}",
        "QUANTITY": str(rng.randint(24, 25)),
    }


def _draw_q7(rng, sf):
    a, b = rng.sample(_dom()["nations"], 2)
    return {"NATION1": a, "NATION2": b}


def _draw_q8(rng, sf):
    nations = _dom()["nation_regions"]
    regions = _dom()["regions"]
    name, region_key = rng.choice(nations)
    return {
        "NATION": name,
        "REGION": regions[region_key - 1],
        "TYPE": rng.choice(_dom()["part_types"]),
    }


def _draw_q9(rng, sf):
    return {"COLOR": rng.choice(_dom()["part_name_colors"])}


def _draw_q10(rng, sf):
    return {"DATE": rng.choice(_month_starts((1993, 2), (1995, 1)))}


def _draw_q11(rng, sf):
    return {"NATION": _nation(rng), "FRACTION": _q11_fraction(sf)}


def _draw_q12(rng, sf):
    a, b = rng.sample(_dom()["shipmodes"], 2)
    return {"SHIPMODE1": a, "SHIPMODE2": b, "DATE": _jan1(rng)}


def _draw_q13(rng, sf):
    return {
        "WORD1": rng.choice(("special", "pending", "unusual", "express")),
        "WORD2": rng.choice(("packages", "requests", "accounts", "deposits")),
    }


def _draw_q14(rng, sf):
    return {"DATE": rng.choice(_month_starts((1993, 1), (1998, 1)))}


def _draw_q15(rng, sf):
    return {"DATE": rng.choice(_month_starts((1993, 1), (1997, 10)))}


def _draw_q16(rng, sf):
    sizes = rng.sample(range(1, 51), 8)
    out = {
        "BRAND": _brand(rng),
        "TYPE": f"{rng.choice(('STANDARD', 'SMALL', 'MEDIUM', 'LARGE', 'ECONOMY', 'PROMO'))}"
                f" {rng.choice(('ANODIZED', 'BURNISHED', 'PLATED', 'POLISHED', 'BRUSHED'))}",
    }
    for i, size in enumerate(sizes, start=1):
        out[f"SIZE{i}"] = str(size)
    return out


def _draw_q17(rng, sf):
    return {"BRAND": _brand(rng), "CONTAINER": rng.choice(_dom()["containers"])}


def _draw_q18(rng, sf):
    return {"QUANTITY": str(rng.randint(312, 315))}


def _draw_q19(rng, sf):
    return {
        "BRAND1": _brand(rng), "BRAND2": _brand(rng), "BRAND3": _brand(rng),
        "QUANTITY1": str(rng.randint(1, 10)),
        "QUANTITY2": str(rng.randint(10, 20)),
        "QUANTITY3": str(rng.randint(20, 30)),
    }


def _draw_q20(rng, sf):
    return {
        "COLOR": rng.choice(_dom()["part_name_colors"]),
        "DATE": _jan1(rng),
        "NATION": _nation(rng),
    }


def _draw_q21(rng, sf):
    return {"NATION": _nation(rng)}


def _draw_q22(rng, sf):
    codes = rng.sample(range(10, 35), 7)
    return {f"I{i}": str(code) for i, code in enumerate(codes, start=1)}


_DRAWS = {
    1: _draw_q1, 2: _draw_q2, 3: _draw_q3, 4: _draw_q4, 5: _draw_q5,
    6: _draw_q6, 7: _draw_q7, 8: _draw_q8, 9: _draw_q9, 10: _draw_q10,
    11: _draw_q11, 12: _draw_q12, 13: _draw_q13, 14: _draw_q14, 15: _draw_q15,
    16: _draw_q16, 17: _draw_q17, 18: _draw_q18, 19: _draw_q19, 20: _draw_q20,
    21: _draw_q21, 22: _draw_q22,
}


def _build_templates() -> dict[int, QueryTemplate]:
    out = {}
    for qid in QUERY_IDS:
        specs = tuple(ParamSpec(n, k, v) for n, k, v in _SPEC_TABLE[qid])
        body = _HEADERS[qid] + "\n" + _BODIES[qid]
        out[qid] = QueryTemplate(qid, body, specs, _DRAWS[qid])
    return out


_TEMPLATES = _build_templates()

_PLACEHOLDER_RE = re.compile(r"\[[A-Z][A-Z0-9]*\]")


def templates() -> tuple[QueryTemplate, ...]:
    return tuple(_TEMPLATES[qid] for qid in QUERY_IDS)


def template(qid: int) -> QueryTemplate:
    try:
        return _TEMPLATES[qid]
    except KeyError:
        raise KeyError(f"no query template with id {qid}") from None


def _derived_rng(*parts) -> random.Random:
    digest = hashlib.blake2b(
        "|".join(str(p) for p in parts).encode("ascii"), digest_size=16
    ).digest()
    return random.Random(int.from_bytes(digest, "big"))


def stream_order(stream_id: int, seed: int = DEFAULT_SEED) -> StreamSchedule:
    """Stream 0 runs the pinned order; higher streams a seeded shuffle."""
    if stream_id < 0:
        raise ValueError("stream_id must be >= 0")
    if stream_id == 0:
        return StreamSchedule(0, STREAM_ZERO_ORDER)
    order = list(QUERY_IDS)
    _derived_rng(seed, "stream-order", stream_id).shuffle(order)
    return StreamSchedule(stream_id, tuple(order))


def substitute_params(
    template: QueryTemplate,
    stream_id: int,
    seed: int = DEFAULT_SEED,
    sf: float = 1.0,
) -> QueryInstance:
    """Instantiate one template for one stream.

    Stream 0 uses the pinned fixture values; other streams draw from the
    placeholder domains via a (seed, stream, query) substream.  ``sf``
    feeds scale-dependent parameters (the Q11 value fraction).
    """
    if stream_id < 0:
        raise ValueError("stream_id must be >= 0")
    if stream_id == 0:
        values = {s.name: s.stream0 for s in template.param_specs}
    else:
        rng = _derived_rng(seed, "params", stream_id, template.id)
        values = template.draw(rng, sf)
    values["STREAM"] = str(stream_id)
    for spec in template.param_specs:
        if spec.name not in values or values[spec.name] == "":
            raise ValueError(
                f"empty domain for placeholder [{spec.name}] in q{template.id}"
            )
    sql = template.body
    for name, value in values.items():
        sql = sql.replace(f"[{name}]", value)
    leftover = _PLACEHOLDER_RE.search(sql)
    if leftover:
        raise ValueError(
            f"unsubstituted placeholder {leftover.group(0)} in q{template.id}"
        )
    kept = tuple((s.name, values[s.name]) for s in template.param_specs)
    return QueryInstance(template.id, stream_id, sql, kept)


def stream_instances(
    stream_id: int, seed: int = DEFAULT_SEED, sf: float = 1.0
) -> list[QueryInstance]:
    """All 22 instances of a stream, in schedule order."""
    schedule = stream_order(stream_id, seed)
    return [
        substitute_params(template(qid), stream_id, seed, sf)
        for qid in schedule.order
    ]


def default_init(seed: int = DEFAULT_SEED) -> str:
    return (
        f"-- using {seed} as a seed to the RNG\n"
        "\\timing\n"
        '\\! echo "---Inicio teste---" >> log.txt\n'
        "\\! echo |date +%H:%M:%S >> log.txt\n"
    )


def default_complete() -> str:
    return (
        '\\! echo "----Fim teste----" >> log.txt\n'
        "\\! echo |date +%H:%M:%S >> log.txt\n"
    )


def _marker(qid: int, phase: str) -> str:
    return (
        f'\\! echo "---q{qid} {phase}---" >> log.txt\n'
        '\\! echo |date "+%H-%M-%S" >> log.txt\n'
    )


def render_stream(
    schedule: StreamSchedule,
    instances: Sequence[QueryInstance],
    init: Optional[str] = None,
    complete: Optional[str] = None,
) -> str:
    """Executable stream script: init, marker-wrapped queries, completion."""
    if init is None:
        init = default_init()
    if complete is None:
        complete = default_complete()
    by_id = {inst.template_id: inst for inst in instances}
    missing = [qid for qid in schedule.order if qid not in by_id]
    if missing:
        raise ValueError(f"no instance for scheduled queries: {missing}")
    parts = [init]
    for qid in schedule.order:
        sql = by_id[qid].sql
        if not sql.endswith("\n"):
            sql += "\n"
        parts.append("\n" + _marker(qid, "ini") + "\n" + sql + _marker(qid, "fim"))
    parts.append("\n" + complete)
    return "".join(parts)


def write_stream_files(
    out_dir: str | os.PathLike,
    stream_ids: Sequence[int],
    seed: int = DEFAULT_SEED,
    sf: float = 1.0,
) -> dict[int, tuple[str, str]]:
    """Write stream<NN>.sql plus its stream<NN>.par parameter sidecar."""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    written: dict[int, tuple[str, str]] = {}
    for sid in stream_ids:
        schedule = stream_order(sid, seed)
        instances = stream_instances(sid, seed, sf)
        script = render_stream(schedule, instances, default_init(seed))
        sql_path = target / f"stream{sid:02d}.sql"
        sql_path.write_text(script, encoding="ascii")
        par_lines = [f"-- parameter values for stream {sid} (seed {seed})"]
        for inst in instances:
            for name, value in inst.params:
                par_lines.append(f"q{inst.template_id} {name}={value}")
        par_path = target / f"stream{sid:02d}.par"
        par_path.write_text("\n".join(par_lines) + "\n", encoding="ascii")
        written[sid] = (str(sql_path), str(par_path))
    return written


@dataclass(frozen=True)
class EnvPaths:
    config_dir: str
    dist_file: str
    data_path: str
    query_dir: str


def resolve_env(
    config_dir: Optional[str] = None,
    dist_file: Optional[str] = None,
    data_path: Optional[str] = None,
    query_dir: Optional[str] = None,
) -> EnvPaths:
    """Effective paths: explicit argument > environment variable > default."""

    def pick(explicit: Optional[str], env_name: str, default: str) -> str:
        if explicit is not None:
            return explicit
        env = os.environ.get(env_name)
        if env:
            return env
        return default

    return EnvPaths(
        config_dir=pick(config_dir, "DSS_CONFIG", "."),
        dist_file=pick(dist_file, "DSS_DIST", "dists.dss"),
        data_path=pick(data_path, "DSS_PATH", "."),
        query_dir=pick(query_dir, "DSS_QUERY", "queries"),
    )


_Q19_DISTRIBUTED = """
select
    sum(l_extendedprice* (1 - l_discount)) as revenue
from
    lineitem,
    part
where
    (
        p_partkey = l_partkey
        and p_brand = '{b1}'
        and p_container in ('SM CASE', 'SM BOX', 'SM PACK', 'SM PKG')
        and l_quantity >= {q1} and l_quantity <= {q1}+10
        and p_size between 1 and 5
        and l_shipmode in ('AIR', 'AIR REG')
        and l_shipinstruct = 'DELIVER IN PERSON'
    )
    or
    (
        p_partkey = l_partkey
        and p_brand = '{b2}'
        and p_container in ('MED BAG', 'MED BOX', 'MED PKG', 'MED PACK')
        and l_quantity >= {q2} and l_quantity <= {q2}+10
        and p_size between 1 and 10
        and l_shipmode in ('AIR', 'AIR REG')
        and l_shipinstruct = 'DELIVER IN PERSON'
    )
    or
    (
        p_partkey = l_partkey
        and p_brand = '{b3}'
        and p_container in ('LG CASE', 'LG BOX', 'LG PACK', 'LG PKG')
        and l_quantity >= {q3} and l_quantity <= {q3}+10
        and p_size between 1 and 15
        and l_shipmode in ('AIR', 'AIR REG')
        and l_shipinstruct = 'DELIVER IN PERSON'
    );
""".strip("\n") + "\n"


def q19_distributed_form(instance: QueryInstance) -> str:
    """The pre-rewrite shape of a Q19 instance: every disjunct carries the
    join and shipping conjuncts that the factored form hoists out."""
    if instance.template_id != 19:
        raise ValueError("expects a q19 instance")
    params = dict(instance.params)
    return _Q19_DISTRIBUTED.format(
        b1=params["BRAND1"], b2=params["BRAND2"], b3=params["BRAND3"],
        q1=params["QUANTITY1"], q2=params["QUANTITY2"], q3=params["QUANTITY3"],
    )
