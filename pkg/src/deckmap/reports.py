"""JSON report models (schema "deckmap/1") and their builders.

Both front ends (CLI and the HTTP service) emit the same AnalysisReport
document; exact numbers always serialize as strings like "-17/19" or
"1/2+3/4i", never as floats.  Numeric values carry explicit [re, im]
pairs and an exactness marker instead.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from .deck import DeckResult
from .detect import DetectionReport, SharedIterateReport
from .mobius import MobiusTransform
from .ratmap import (
    CriticalData,
    OrbitDescription,
    Point,
    RationalMap,
    SpherePoint,
)

SCHEMA_ID = "deckmap/1"


class PointModel(BaseModel):
    """A sphere point: exactly one of exact / approx / infinite is set."""

    exact: Optional[str] = None
    approx: Optional[tuple[float, float]] = None
    infinite: bool = False


class MapEcho(BaseModel):
    text: str
    numerator: list[str]
    denominator: list[str]
    degree: int


class CriticalSection(BaseModel):
    points: list[PointModel]
    multiplicities: list[int]
    values: list[PointModel]
    bicritical: bool
    critically_coalescing: Optional[bool] = None
    exact: bool


class OrbitSection(BaseModel):
    orbits: list[list[PointModel]]
    preperiods: list[Optional[int]]
    periods: list[Optional[int]]
    finite_postcritical: bool
    truncated: bool
    alpha: Optional[PointModel] = None
    m: Optional[int] = None
    exact: bool


class ElementModel(BaseModel):
    """A Moebius transform, exact entries as strings else float pairs."""

    entries: Optional[list[str]] = None
    entries_approx: Optional[list[tuple[float, float]]] = None
    certified: bool = False
    order: Optional[int] = None


class DeckSection(BaseModel):
    k: int
    iso_type: str
    order: int
    elements: list[ElementModel]
    base_points: list[str]
    special_pairs: Optional[list[list[PointModel]]] = None
    iso_from_certified_only: bool = False


class DetectionSection(BaseModel):
    case_label: str
    critical_points: list[PointModel]
    critical_values: list[PointModel]
    exact: bool
    evidence: dict[str, Any]


class SharedSection(BaseModel):
    minimal_k: Optional[int] = None
    cv_cp_agree: bool
    involution: Optional[ElementModel] = None
    symmetry_locus_member: bool
    second_iterate_equal: bool


class RenderSection(BaseModel):
    spec: dict[str, Any]
    atlas: Optional[list[dict[str, Any]]] = None
    overlay_marks: int = 0
    elapsed_seconds: float
    workers: int
    image_path: Optional[str] = None
    png_path: Optional[str] = None


class ErrorModel(BaseModel):
    kind: str
    message: str
    position: Optional[int] = None


class AnalysisReport(BaseModel):
    """Top-level report; sections are present iff they were requested."""

    model_config = ConfigDict(populate_by_name=True)

    schema_id: str = Field(default=SCHEMA_ID, alias="schema")
    map: Optional[MapEcho] = None
    maps: Optional[list[MapEcho]] = None
    critical: Optional[CriticalSection] = None
    orbit: Optional[OrbitSection] = None
    deck: Optional[DeckSection] = None
    detection: Optional[DetectionSection] = None
    shared: Optional[SharedSection] = None
    render: Optional[RenderSection] = None
    error: Optional[ErrorModel] = None

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, exclude_none=True, indent=2)


def published_schema() -> dict:
    return AnalysisReport.model_json_schema(by_alias=True)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def point_model(p: Point) -> PointModel:
    if isinstance(p, SpherePoint):
        if p.is_infinity:
            return PointModel(infinite=True)
        return PointModel(exact=str(p.finite))
    return PointModel(approx=(float(p.re), float(p.im)))


def map_echo(f: RationalMap) -> MapEcho:
    from .mapexpr import format_map

    return MapEcho(
        text=format_map(f),
        numerator=[str(c) for c in f.num.coeffs],
        denominator=[str(c) for c in f.den.coeffs],
        degree=f.degree,
    )


def critical_section(cd: CriticalData) -> CriticalSection:
    return CriticalSection(
        points=[point_model(p) for p, _ in cd.points],
        multiplicities=[m for _, m in cd.points],
        values=[point_model(v) for v in cd.values],
        bicritical=cd.bicritical,
        critically_coalescing=cd.critically_coalescing,
        exact=cd.exact,
    )


def orbit_section(od: OrbitDescription) -> OrbitSection:
    return OrbitSection(
        orbits=[[point_model(p) for p in orbit] for orbit in od.orbits],
        preperiods=list(od.preperiods),
        periods=list(od.periods),
        finite_postcritical=od.finite_postcritical,
        truncated=od.truncated,
        alpha=point_model(od.alpha) if od.alpha is not None else None,
        m=od.m,
        exact=od.exact,
    )


def element_model(e: MobiusTransform, certified: bool, order_bound: int) -> ElementModel:
    if e.exact:
        entries = [str(x) for x in e.entries()]
        approx = None
    else:
        entries = None
        approx = [(x.real, x.imag) for x in e.complex_entries()]
    return ElementModel(
        entries=entries,
        entries_approx=approx,
        certified=certified,
        order=e.order(order_bound),
    )


def deck_section(dr: DeckResult, k: int) -> DeckSection:
    bound = 2 * len(dr.group) + 1
    return DeckSection(
        k=k,
        iso_type=str(dr.group.iso_type),
        order=len(dr.group),
        elements=[
            element_model(e, c, bound)
            for e, c in zip(dr.group.elements, dr.certified)
        ],
        base_points=[str(b) for b in dr.base_points],
        special_pairs=(
            [[point_model(p) for p in pair] for pair in dr.special_pairs]
            if dr.special_pairs is not None
            else None
        ),
        iso_from_certified_only=dr.iso_from_certified_only,
    )


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def detection_section(rep: DetectionReport) -> DetectionSection:
    return DetectionSection(
        case_label=rep.case_label,
        critical_points=[point_model(p) for p in rep.critical_points],
        critical_values=[point_model(v) for v in rep.critical_values],
        exact=rep.exact,
        evidence=_json_safe(rep.evidence),
    )


def shared_section(rep: SharedIterateReport) -> SharedSection:
    inv = None
    if rep.involution_mu is not None:
        inv = element_model(rep.involution_mu, True, 3)
    return SharedSection(
        minimal_k=rep.minimal_k,
        cv_cp_agree=rep.cv_cp_agree,
        involution=inv,
        symmetry_locus_member=rep.symmetry_locus_member,
        second_iterate_equal=rep.second_iterate_equal,
    )


def error_model(exc: Exception) -> ErrorModel:
    position = getattr(exc, "position", None)
    return ErrorModel(kind=type(exc).__name__, message=str(exc), position=position)
