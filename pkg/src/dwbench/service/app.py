"""HTTP service wrapping the benchmark library.

The service exposes the pure functions (rewrite, metrics, bitmap advice,
cardinality checks) as request/response endpoints and manages benchmark runs
as background jobs with a small in-memory registry.  All computation happens
in the core package; this layer only validates payloads and moves data.
"""

from __future__ import annotations

import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .. import __version__
from .. import backend as backend_mod
from .. import bitmap, datagen, driver, metrics, report, rewrite, schema

app = FastAPI(
    title="dwbench",
    version=__version__,
    description="Decision-support benchmark harness service.",
)


# --------------------------------------------------------------------------
# Plain request/response endpoints.


class HealthResponse(BaseModel):
    status: str
    version: str


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


class RewriteRequest(BaseModel):
    sql: str


class RewriteResponse(BaseModel):
    sql: str
    changed: bool
    hoisted: list[str]
    residual_disjuncts: int


@app.post("/rewrite", response_model=RewriteResponse)
def rewrite_endpoint(req: RewriteRequest) -> RewriteResponse:
    try:
        rewritten, rep = rewrite.rewrite_query(req.sql)
    except rewrite.PredicateParseError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return RewriteResponse(
        sql=rewritten,
        changed=rep.changed,
        hoisted=list(rep.hoisted_text),
        residual_disjuncts=rep.residual_disjuncts,
    )


class MetricsRequest(BaseModel):
    qi: list[float] = Field(min_length=22, max_length=22)
    ri: list[float] = Field(min_length=2, max_length=2)
    s: int
    ts: float
    sf: float
    total_price: Optional[float] = None
    censored_count: int = 0


class MetricsResponse(BaseModel):
    power_at_size: float
    throughput_at_size: float
    qphh_at_size: float
    price_per_qphh: Optional[float] = None
    lower_bound_only: bool = False


def _metrics_response(rep: metrics.MetricsReport) -> MetricsResponse:
    return MetricsResponse(
        power_at_size=rep.power_at_size,
        throughput_at_size=rep.throughput_at_size,
        qphh_at_size=rep.qphh_at_size,
        price_per_qphh=rep.price_per_qphh,
        lower_bound_only=rep.lower_bound_only,
    )


@app.post("/metrics", response_model=MetricsResponse)
def metrics_endpoint(req: MetricsRequest) -> MetricsResponse:
    try:
        rep = metrics.compute_report(
            metrics.MetricsInput(
                qi=tuple(req.qi),
                ri=tuple(req.ri),
                s=req.s,
                ts=req.ts,
                sf=req.sf,
                total_price=req.total_price,
                censored_count=req.censored_count,
            )
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return _metrics_response(rep)


class CompositeRequest(BaseModel):
    power: float
    throughput: float
    total_price: Optional[float] = None


@app.post("/metrics/composite", response_model=MetricsResponse)
def composite_endpoint(req: CompositeRequest) -> MetricsResponse:
    try:
        qphh = metrics.qphh_at_size(req.power, req.throughput)
        price = (
            metrics.price_per_qphh(req.total_price, qphh)
            if req.total_price is not None
            else None
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return MetricsResponse(
        power_at_size=req.power,
        throughput_at_size=req.throughput,
        qphh_at_size=qphh,
        price_per_qphh=price,
    )


class BitmapAdviseRequest(BaseModel):
    distinct: int
    rows: int


class BitmapAdviseResponse(BaseModel):
    verdict: str
    eligible: bool
    ratio: float
    simple_bits_per_row: int
    encoded_bits_per_row: int


@app.post("/bitmap/advise", response_model=BitmapAdviseResponse)
def bitmap_advise(req: BitmapAdviseRequest) -> BitmapAdviseResponse:
    try:
        advice = bitmap.advise(req.distinct, req.rows)
        width = bitmap.code_width(req.distinct)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return BitmapAdviseResponse(
        verdict=advice.verdict,
        eligible=advice.eligible,
        ratio=advice.ratio,
        simple_bits_per_row=req.distinct,
        encoded_bits_per_row=width,
    )


class CardinalityResponse(BaseModel):
    sf: float
    expected: dict[str, str]


@app.get("/schema/cardinalities", response_model=CardinalityResponse)
def cardinalities(sf: float) -> CardinalityResponse:
    try:
        expected = {
            name: (
                f"{schema.lineitem_bounds(sf)[0]}..{schema.lineitem_bounds(sf)[1]}"
                if name == "lineitem"
                else str(schema.expected_cardinality(name, sf))
            )
            for name in schema.TABLE_NAMES
        }
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return CardinalityResponse(sf=sf, expected=expected)


class ValidateRequest(BaseModel):
    sf: float
    counts: dict[str, int]


class CardinalityCheckModel(BaseModel):
    table: str
    expected: str
    actual: int
    ok: bool


class ValidateResponse(BaseModel):
    ok: bool
    checks: list[CardinalityCheckModel]


@app.post("/schema/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        result = schema.validate_load(req.counts, req.sf)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return ValidateResponse(
        ok=result.ok,
        checks=[
            CardinalityCheckModel(
                table=c.table, expected=c.expected, actual=c.actual, ok=c.ok
            )
            for c in result.checks
        ],
    )


# --------------------------------------------------------------------------
# Benchmark runs as background jobs.


class RunRequest(BaseModel):
    sf: float = 0.01
    backend: str = "simulator"
    dsn: str = ""
    seed: int = datagen.DEFAULT_SEED
    timeout: float = driver.DEFAULT_TIMEOUT
    streams: Optional[int] = None
    phases: list[str] = Field(default_factory=lambda: list(report.ALL_PHASES))
    out: Optional[str] = None


class RunStatus(BaseModel):
    run_id: str
    status: str
    phases: list[str]
    sf: float
    partial: Optional[bool] = None
    error: Optional[str] = None
    metrics: Optional[MetricsResponse] = None


@dataclass
class _RunState:
    request: RunRequest
    status: str = "running"
    archive: Optional[report.RunArchive] = None
    error: str = ""
    thread: Optional[threading.Thread] = field(default=None, repr=False)


class RunRegistry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._runs: dict[str, _RunState] = {}

    def start(self, req: RunRequest) -> str:
        run_id = uuid.uuid4().hex[:12]
        state = _RunState(request=req)
        with self._lock:
            self._runs[run_id] = state

        def work() -> None:
            try:
                out_dir = req.out or tempfile.mkdtemp(prefix="dwbench-run-")
                cfg = driver.RunConfig(
                    sf=req.sf,
                    backend=backend_mod.BackendConfig(kind=req.backend, dsn=req.dsn),
                    seed=req.seed,
                    timeout=req.timeout,
                    stream_count_override=req.streams,
                    output_dir=out_dir,
                )
                archive = report.run_all(cfg, phases=tuple(req.phases))
                with self._lock:
                    state.archive = archive
                    state.status = "partial" if archive.partial else "complete"
            except Exception as exc:  # noqa: BLE001 - surface through the API
                with self._lock:
                    state.status = "error"
                    state.error = str(exc)

        thread = threading.Thread(target=work, name=f"run-{run_id}", daemon=True)
        state.thread = thread
        thread.start()
        return run_id

    def get(self, run_id: str) -> _RunState:
        with self._lock:
            if run_id not in self._runs:
                raise KeyError(run_id)
            return self._runs[run_id]

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._runs)


RUNS = RunRegistry()


def _status_of(run_id: str, state: _RunState) -> RunStatus:
    metrics_model = None
    if state.archive is not None and state.archive.metrics_report is not None:
        metrics_model = _metrics_response(state.archive.metrics_report)
    return RunStatus(
        run_id=run_id,
        status=state.status,
        phases=list(state.request.phases),
        sf=state.request.sf,
        partial=None if state.archive is None else state.archive.partial,
        error=state.error or None,
        metrics=metrics_model,
    )


@app.post("/runs", response_model=RunStatus, status_code=202)
def start_run(req: RunRequest) -> RunStatus:
    for phase in req.phases:
        if phase not in report.ALL_PHASES:
            raise HTTPException(status_code=422, detail=f"unknown phase: {phase}")
    if req.backend not in ("simulator", "sql_dbms"):
        raise HTTPException(status_code=422, detail=f"unknown backend: {req.backend}")
    run_id = RUNS.start(req)
    return _status_of(run_id, RUNS.get(run_id))


@app.get("/runs", response_model=list[RunStatus])
def list_runs() -> list[RunStatus]:
    return [_status_of(run_id, RUNS.get(run_id)) for run_id in RUNS.ids()]


@app.get("/runs/{run_id}", response_model=RunStatus)
def run_status(run_id: str) -> RunStatus:
    try:
        state = RUNS.get(run_id)
    except KeyError:
        raise HTTPException(status_code=404, detail="no such run") from None
    return _status_of(run_id, state)


@app.get("/runs/{run_id}/report", response_class=PlainTextResponse)
def run_report(run_id: str, format: str = "human") -> str:
    try:
        state = RUNS.get(run_id)
    except KeyError:
        raise HTTPException(status_code=404, detail="no such run") from None
    if state.archive is None:
        raise HTTPException(status_code=409, detail=f"run is {state.status}")
    try:
        return report.render_report(state.archive, format=format)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/runs/{run_id}/archive", response_class=PlainTextResponse)
def run_archive(run_id: str) -> str:
    try:
        state = RUNS.get(run_id)
    except KeyError:
        raise HTTPException(status_code=404, detail="no such run") from None
    if state.archive is None:
        raise HTTPException(status_code=409, detail=f"run is {state.status}")
    return report.dump_archive(state.archive)
