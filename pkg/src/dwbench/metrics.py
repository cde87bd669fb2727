"""The four benchmark metrics computed from timing records.

Power@Size is ``3600 * SF`` divided by the geometric mean of the 24 power
test intervals (22 query timings plus the two refresh timings).  The mean
is computed without ever forming the 24-term product in floating point:
each timing is split into mantissa and base-2 exponent, the exponents are
summed exactly as integers, and only the bounded mantissa product is done
in floats (sorted first, so the result is independent of input order).
This keeps the computation overflow/underflow-free and makes two algebraic
properties hold exactly, not just approximately: permuting the timings
never changes the result, and scaling every timing by a power of two
scales the result by exactly the inverse factor.

Throughput@Size is ``((S * 22 * 3600) / Ts) * SF``; the composite QphH is
the geometric mean of the two; price-per-QphH divides a total system price
by QphH.

Timings recorded at the timeout bound are accepted as-is; callers flag the
resulting metrics as lower bounds via ``MetricsInput.censored_count``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

__all__ = [
    "MetricsInput",
    "MetricsReport",
    "power_at_size",
    "throughput_at_size",
    "qphh_at_size",
    "price_per_qphh",
    "compute_report",
    "QUERIES_PER_STREAM",
]

QUERIES_PER_STREAM = 22
_POWER_TERMS = QUERIES_PER_STREAM + 2


def _check_timings(name: str, timings: Sequence[float], expect: int) -> None:
    if len(timings) != expect:
        raise ValueError(f"{name} must have {expect} entries, got {len(timings)}")
    for t in timings:
        if not math.isfinite(t) or t <= 0:
            raise ValueError(f"{name} timings must be positive and finite, got {t!r}")


def power_at_size(qi: Sequence[float], ri: Sequence[float], sf: float) -> float:
    """Single-session metric: 3600*SF over the 24-term geometric mean."""
    _check_timings("QI", qi, QUERIES_PER_STREAM)
    _check_timings("RI", ri, 2)
    if not math.isfinite(sf) or sf <= 0:
        raise ValueError(f"scale factor must be positive, got {sf!r}")

    mantissas: list[float] = []
    exp_sum = 0
    for t in list(qi) + list(ri):
        m, e = math.frexp(t)
        mantissas.append(m)
        exp_sum += e
    mantissas.sort()
    mantissa_product = 1.0
    for m in mantissas:
        mantissa_product *= m
    # Geometric mean = (prod mantissas)^(1/24) * 2^(exp_sum/24), with the
    # integer part of exp_sum/24 applied by exact exponent shifting.
    q, r = divmod(exp_sum, _POWER_TERMS)
    mean = math.ldexp(
        mantissa_product ** (1.0 / _POWER_TERMS) * 2.0 ** (r / _POWER_TERMS), q
    )
    return 3600.0 * sf / mean


def throughput_at_size(s: int, ts: float, sf: float) -> float:
    """Multi-session metric: ((S * 22 * 3600) / Ts) * SF."""
    if s < 1:
        raise ValueError(f"stream count must be >= 1, got {s!r}")
    if not math.isfinite(ts) or ts <= 0:
        raise ValueError(f"total elapsed must be positive, got {ts!r}")
    if not math.isfinite(sf) or sf <= 0:
        raise ValueError(f"scale factor must be positive, got {sf!r}")
    return (s * QUERIES_PER_STREAM * 3600.0 / ts) * sf


def qphh_at_size(power: float, throughput: float) -> float:
    """Composite metric: geometric mean of power and throughput."""
    if power < 0 or throughput < 0:
        raise ValueError("power and throughput must be >= 0")
    return math.sqrt(power * throughput)


def price_per_qphh(total_price: float, qphh: float) -> float:
    if qphh <= 0:
        raise ValueError(f"qphh must be positive, got {qphh!r}")
    if total_price < 0:
        raise ValueError(f"price must be >= 0, got {total_price!r}")
    return total_price / qphh


@dataclass(frozen=True)
class MetricsInput:
    """Everything the metric formulas consume, gathered from a full run."""

    qi: tuple[float, ...]
    ri: tuple[float, ...]
    s: int
    ts: float
    sf: float
    total_price: Optional[float] = None
    censored_count: int = 0


@dataclass(frozen=True)
class MetricsReport:
    power_at_size: float
    throughput_at_size: float
    qphh_at_size: float
    price_per_qphh: Optional[float] = None
    lower_bound_only: bool = False


def compute_report(inp: MetricsInput) -> MetricsReport:
    """All four metrics; flags lower-bound-only when timings were censored."""
    power = power_at_size(inp.qi, inp.ri, inp.sf)
    throughput = throughput_at_size(inp.s, inp.ts, inp.sf)
    qphh = qphh_at_size(power, throughput)
    price = None
    if inp.total_price is not None:
        price = price_per_qphh(inp.total_price, qphh)
    return MetricsReport(
        power_at_size=power,
        throughput_at_size=throughput,
        qphh_at_size=qphh,
        price_per_qphh=price,
        lower_bound_only=inp.censored_count > 0,
    )
