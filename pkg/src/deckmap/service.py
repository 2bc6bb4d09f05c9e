"""HTTP front end: the same analyses as the CLI behind a FastAPI app.

Every endpoint returns an AnalysisReport document ("deckmap/1") so clients
of the service and consumers of CLI --json files parse one format.  Images
travel base64-encoded inside the render report (or raw with ?format=ppm).

Run with:  uvicorn deckmap.service:app
"""

from __future__ import annotations

import base64
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import __version__
from .algebra import DEFAULT_PRECISION
from .deck import deck_group
from .detect import detect_higher_degree, detect_quadratic, shared_iterate_analysis
from .dynren import (
    DEFAULT_CYCLE_EPS,
    DEFAULT_MAX_ITER,
    DEFAULT_MAX_PERIOD,
    JuliaTarget,
    ParamFaTarget,
    ParamSigma2Target,
    RenderSpec,
    Window,
    render,
)
from .errors import DeckmapError
from .mapexpr import parse_constant, parse_map
from .ratmap import critical_data, postcritical_orbit
from .reports import (
    AnalysisReport,
    RenderSection,
    critical_section,
    deck_section,
    detection_section,
    error_model,
    map_echo,
    orbit_section,
    published_schema,
    shared_section,
)

app = FastAPI(title="deckmap", version=__version__)


class MapRequest(BaseModel):
    expr: str
    params: dict[str, str] = Field(default_factory=dict)
    precision: int = DEFAULT_PRECISION


class AnalyzeRequest(MapRequest):
    max_orbit: int = 64


class DeckRequest(MapRequest):
    k: int


class DetectRequest(MapRequest):
    k: int
    degree: int


class SharedRequest(BaseModel):
    expr1: str
    expr2: str
    params: dict[str, str] = Field(default_factory=dict)
    precision: int = DEFAULT_PRECISION
    max_k: int = 4


class RenderRequest(BaseModel):
    mode: Literal["julia", "param-fa", "param-sigma2"]
    expr: Optional[str] = None
    params: dict[str, str] = Field(default_factory=dict)
    center: tuple[float, float] = (0.0, 0.0)
    half_width: float = 4.0
    width: int = 256
    height: int = 256
    max_iter: int = DEFAULT_MAX_ITER
    max_period: int = DEFAULT_MAX_PERIOD
    cycle_eps: float = DEFAULT_CYCLE_EPS
    palette: str = "period"
    overlay_critical_orbits: bool = False
    workers: Optional[int] = None


class RenderResponse(BaseModel):
    report: AnalysisReport
    ppm_base64: str


def _bind(params: dict[str, str]):
    return {name: parse_constant(text) for name, text in params.items()}


def _guard(fn):
    try:
        return fn()
    except DeckmapError as exc:
        report = AnalysisReport(error=error_model(exc))
        raise HTTPException(
            status_code=400, detail=report.model_dump(by_alias=True, exclude_none=True)
        )


@app.get("/healthz")
def healthz():
    return {"status": "ok", "version": __version__}


@app.get("/schema")
def schema():
    return published_schema()


@app.post("/analyze", response_model=AnalysisReport, response_model_exclude_none=True)
def analyze(req: AnalyzeRequest):
    def run():
        f = parse_map(req.expr, _bind(req.params))
        cd = critical_data(f, precision=req.precision)
        report = AnalysisReport(map=map_echo(f), critical=critical_section(cd))
        if cd.bicritical:
            od = postcritical_orbit(f, max_len=req.max_orbit, precision=req.precision)
            report = report.model_copy(update={"orbit": orbit_section(od)})
        return report

    return _guard(run)


@app.post("/deck", response_model=AnalysisReport, response_model_exclude_none=True)
def deck(req: DeckRequest):
    def run():
        f = parse_map(req.expr, _bind(req.params))
        dr = deck_group(f, req.k, precision=req.precision)
        return AnalysisReport(map=map_echo(f), deck=deck_section(dr, req.k))

    return _guard(run)


@app.post("/detect", response_model=AnalysisReport, response_model_exclude_none=True)
def detect(req: DetectRequest):
    def run():
        F = parse_map(req.expr, _bind(req.params))
        if req.degree == 2:
            rep = detect_quadratic(F, req.k, precision=req.precision)
        else:
            rep = detect_higher_degree(F, req.degree, req.k, precision=req.precision)
        return AnalysisReport(map=map_echo(F), detection=detection_section(rep))

    return _guard(run)


@app.post("/shared", response_model=AnalysisReport, response_model_exclude_none=True)
def shared(req: SharedRequest):
    def run():
        bound = _bind(req.params)
        f = parse_map(req.expr1, bound)
        g = parse_map(req.expr2, bound)
        rep = shared_iterate_analysis(f, g, req.max_k, precision=req.precision)
        return AnalysisReport(maps=[map_echo(f), map_echo(g)], shared=shared_section(rep))

    return _guard(run)


def _build_spec(req: RenderRequest) -> RenderSpec:
    window = Window(complex(*req.center), req.half_width)
    if req.mode == "julia":
        if not req.expr:
            raise DeckmapError("julia mode needs an expression")
        target = JuliaTarget(parse_map(req.expr, _bind(req.params)), window)
    elif req.mode == "param-fa":
        target = ParamFaTarget(window)
    else:
        target = ParamSigma2Target(window)
    return RenderSpec(
        target=target,
        width=req.width,
        height=req.height,
        max_iter=req.max_iter,
        cycle_eps=req.cycle_eps,
        max_period=req.max_period,
        palette=req.palette,
        overlay_critical_orbits=req.overlay_critical_orbits,
    )


@app.post("/render", response_model=RenderResponse)
def render_endpoint(req: RenderRequest):
    def run():
        spec = _build_spec(req)
        result = render(spec, workers=req.workers)
        section = RenderSection(
            spec=result.metadata["spec"],
            atlas=result.metadata["atlas"],
            overlay_marks=result.metadata["overlay_marks"],
            elapsed_seconds=result.metadata["elapsed_seconds"],
            workers=result.metadata["workers"],
        )
        return RenderResponse(
            report=AnalysisReport(render=section),
            ppm_base64=base64.b64encode(result.ppm).decode("ascii"),
        )

    return _guard(run)


@app.post("/render.ppm")
def render_ppm(req: RenderRequest):
    def run():
        spec = _build_spec(req)
        result = render(spec, workers=req.workers)
        return Response(content=result.ppm, media_type="image/x-portable-pixmap")

    return _guard(run)
