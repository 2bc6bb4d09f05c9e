"""Numeric dynamics and deterministic rendering.

Orbits run in homogeneous coordinates [u : v] on the sphere (renormalized
every step), so the point at infinity needs no special casing and nothing
overflows.  The chordal metric drives every proximity test.  Rendering is
vectorized per pixel row; rows may be computed by a thread pool but are
assembled in a fixed order, so output bytes do not depend on the worker
count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algebra import ComplexFloat
from .errors import InvalidArgument
from .ratmap import (
    INF,
    Point,
    RationalMap,
    SpherePoint,
    critical_data,
    point_to_extended,
    wronskian,
)

DEFAULT_MAX_ITER = 96
DEFAULT_MAX_PERIOD = 16
DEFAULT_CYCLE_EPS = 1e-9


# ---------------------------------------------------------------------------
# Homogeneous numeric evaluation
# ---------------------------------------------------------------------------


def _homog_coeffs(f: RationalMap) -> tuple[np.ndarray, np.ndarray, int]:
    d = f.degree
    p = np.zeros(d + 1, dtype=complex)
    q = np.zeros(d + 1, dtype=complex)
    for i, c in enumerate(f.num.coeffs):
        p[i] = c.to_complex()
    for i, c in enumerate(f.den.coeffs):
        q[i] = c.to_complex()
    return p, q, d


def _eval_homog(coeffs: np.ndarray, u, v, d: int):
    """sum_i coeffs[i] * u^i * v^(d-i), Horner in u with running v powers."""
    acc = coeffs[d] * np.ones_like(u)
    vp = np.ones_like(v)
    for i in range(d - 1, -1, -1):
        vp = vp * v
        acc = acc * u + coeffs[i] * vp
    return acc


def _normalize(u, v):
    m = np.maximum(np.abs(u), np.abs(v))
    m = np.where(m == 0, 1.0, m)
    return u / m, v / m


def _chordal_pairs(u1, v1, u2, v2):
    num = 2.0 * np.abs(u1 * v2 - v1 * u2)
    den = np.hypot(np.abs(u1), np.abs(v1)) * np.hypot(np.abs(u2), np.abs(v2))
    return num / den


def _point_to_homog(p: Point) -> tuple[complex, complex]:
    if isinstance(p, SpherePoint) and p.is_infinity:
        return (1 + 0j, 0j)
    z = point_to_extended(p)
    if abs(z) > 1:
        return (1 + 0j, 1 / z)
    return (z, 1 + 0j)


class _MapStepper:
    """Vectorized one-step evaluator [u:v] -> [P_h(u,v) : Q_h(u,v)]."""

    def __init__(self, f: RationalMap):
        self.p, self.q, self.d = _homog_coeffs(f)
        w = wronskian(f)
        self.w = np.zeros(2 * self.d - 1, dtype=complex)
        for i, c in enumerate(w.coeffs):
            self.w[i] = c.to_complex()

    def step(self, u, v):
        nu = _eval_homog(self.p, u, v, self.d)
        nv = _eval_homog(self.q, u, v, self.d)
        return _normalize(nu, nv)

    def spherical_derivative(self, u, v):
        """|f'| in the chordal metric; products of these over a cycle give
        the multiplier magnitude (the chart factors telescope away)."""
        wd = 2 * self.d - 2
        wval = _eval_homog(self.w, u, v, wd) if wd >= 0 else np.zeros_like(u)
        pv = _eval_homog(self.p, u, v, self.d)
        qv = _eval_homog(self.q, u, v, self.d)
        denom = np.abs(pv) ** 2 + np.abs(qv) ** 2
        return np.abs(wval) * (np.abs(u) ** 2 + np.abs(v) ** 2) / denom


# ---------------------------------------------------------------------------
# Attracting cycles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cycle:
    points: tuple[Point, ...]
    period: int
    multiplier: float


@dataclass(frozen=True)
class CycleAtlas:
    cycles: tuple[Cycle, ...]

    def all_points_homog(self) -> list[tuple[int, complex, complex]]:
        out = []
        for idx, cyc in enumerate(self.cycles):
            for p in cyc.points:
                u, v = _point_to_homog(p)
                out.append((idx, u, v))
        return out


def _homog_to_point(u: complex, v: complex) -> Point:
    if abs(v) <= 1e-14 * abs(u):
        return INF
    z = u / v
    return ComplexFloat.from_complex(z)


def find_attracting_cycles(
    f: RationalMap,
    seeds: list[Point] | None = None,
    max_iter: int = 2000,
    max_period: int = DEFAULT_MAX_PERIOD,
    cycle_eps: float = DEFAULT_CYCLE_EPS,
) -> CycleAtlas:
    """Attracting cycles found by iterating the critical orbits.

    Every attracting cycle attracts a critical orbit, so critical seeds see
    them all.  Near-periodicity within ``cycle_eps`` (chordal) after the
    burn-in marks a cycle; the multiplier magnitude is the product of
    spherical derivatives along it, and only magnitudes < 1 are kept.
    """
    if seeds is None:
        cd = critical_data(f, mode="numeric")
        seeds = [p for p, _ in cd.points]
    if not seeds:
        raise InvalidArgument("cycle search needs at least one seed")
    stepper = _MapStepper(f)
    cycles: list[Cycle] = []
    for seed in seeds:
        u0, v0 = _point_to_homog(seed)
        u = np.array([u0])
        v = np.array([v0])
        for _ in range(max_iter):
            u, v = stepper.step(u, v)
        tail_u = [u]
        tail_v = [v]
        for _ in range(max_period):
            u, v = stepper.step(u, v)
            tail_u.append(u)
            tail_v.append(v)
        period = None
        for p in range(1, max_period + 1):
            d = _chordal_pairs(
                tail_u[-1], tail_v[-1], tail_u[-1 - p], tail_v[-1 - p]
            )[0]
            if d < cycle_eps:
                period = p
                break
        if period is None:
            continue
        pts_uv = [(tail_u[-1 - j][0], tail_v[-1 - j][0]) for j in range(period)]
        mult = 1.0
        for cu, cv in pts_uv:
            mult *= float(
                stepper.spherical_derivative(np.array([cu]), np.array([cv]))[0]
            )
        if mult >= 1.0:
            continue
        pts = tuple(_homog_to_point(cu, cv) for cu, cv in reversed(pts_uv))
        if not _cycle_seen(cycles, pts_uv, cycle_eps):
            cycles.append(Cycle(pts, period, mult))
    return CycleAtlas(tuple(cycles))


def _cycle_seen(cycles: list[Cycle], pts_uv, eps: float) -> bool:
    for cyc in cycles:
        for p in cyc.points:
            pu, pv = _point_to_homog(p)
            for cu, cv in pts_uv:
                d = _chordal_pairs(
                    np.array([pu]), np.array([pv]), np.array([cu]), np.array([cv])
                )[0]
                if d < max(eps * 100, 1e-7):
                    return True
    return False


# ---------------------------------------------------------------------------
# Render specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Window:
    center: complex = 0j
    half_width: float = 4.0


@dataclass(frozen=True)
class JuliaTarget:
    map: RationalMap
    window: Window


@dataclass(frozen=True)
class ParamFaTarget:
    """Parameter plane of the coalescing family (z^2 - a)/(z^2 + a)."""

    window: Window = Window()


@dataclass(frozen=True)
class ParamSigma2Target:
    """Parameter plane of the symmetric family c(z + 1/z)."""

    window: Window = Window()


@dataclass(frozen=True)
class RenderSpec:
    target: JuliaTarget | ParamFaTarget | ParamSigma2Target
    width: int = 256
    height: int = 256
    max_iter: int = DEFAULT_MAX_ITER
    cycle_eps: float = DEFAULT_CYCLE_EPS
    max_period: int = DEFAULT_MAX_PERIOD
    palette: str = "period"
    overlay_critical_orbits: bool = False

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidArgument("image dimensions must be positive")
        if self.cycle_eps <= 0:
            raise InvalidArgument("cycle_eps must be positive")
        if self.max_period < 1:
            raise InvalidArgument("max_period must be >= 1")


@dataclass(frozen=True)
class RenderResult:
    ppm: bytes
    classes: np.ndarray  # per-pixel class indices, palette independent
    metadata: dict

    def to_png(self) -> bytes:
        """PNG encoding via Pillow, when installed."""
        from io import BytesIO

        from PIL import Image

        h, w = self.classes.shape
        rgb = np.frombuffer(_strip_ppm_header(self.ppm), dtype=np.uint8)
        img = Image.fromarray(rgb.reshape(h, w, 3), "RGB")
        buf = BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()


def _strip_ppm_header(ppm: bytes) -> bytes:
    idx = 0
    for _ in range(3):  # magic, dimensions, maxval
        idx = ppm.index(b"\n", idx) + 1
    return ppm[idx:]


_PALETTES = {
    # index 0 is always the unresolved class
    "period": [
        (0, 0, 0),
        (255, 140, 0),   # period 1: orange
        (255, 230, 60),  # period 2: yellow
        (80, 200, 120),
        (70, 130, 240),
        (180, 90, 220),
        (240, 90, 90),
        (90, 220, 220),
        (250, 250, 250),
        (160, 110, 70),
        (120, 160, 40),
        (200, 60, 140),
        (60, 100, 60),
        (230, 180, 120),
        (100, 60, 160),
        (170, 170, 170),
        (220, 220, 100),
    ],
    "classic": [
        (0, 0, 0),
        (66, 30, 15),
        (25, 7, 26),
        (9, 1, 47),
        (4, 4, 73),
        (0, 7, 100),
        (12, 44, 138),
        (24, 82, 177),
        (57, 125, 209),
        (134, 181, 229),
        (211, 236, 248),
        (241, 233, 191),
        (248, 201, 95),
        (255, 170, 0),
        (204, 128, 0),
        (153, 87, 0),
        (106, 52, 3),
    ],
    "gray": [(0, 0, 0)] + [(int(255 * i / 16),) * 3 for i in range(1, 17)],
}

_OVERLAY_RGB = (255, 255, 255)


def _palette_lut(name: str) -> np.ndarray:
    if name not in _PALETTES:
        raise InvalidArgument(f"unknown palette {name!r}")
    return np.array(_PALETTES[name], dtype=np.uint8)


def _pixel_grid_row(spec: RenderSpec, window: Window, row: int) -> np.ndarray:
    hw = window.half_width
    hh = hw * spec.height / spec.width
    xs = window.center.real - hw + (np.arange(spec.width) + 0.5) * (2 * hw / spec.width)
    y = window.center.imag + hh - (row + 0.5) * (2 * hh / spec.height)
    return xs + 1j * y


def _render_rows_julia(spec: RenderSpec, atlas: CycleAtlas, rows: range) -> np.ndarray:
    stepper = _MapStepper(spec.target.map)
    targets = atlas.all_points_homog()
    out = np.zeros((len(rows), spec.width, 2), dtype=np.int32)  # class, hit iter
    for i, row in enumerate(rows):
        z = _pixel_grid_row(spec, spec.target.window, row)
        u = z.astype(complex)
        v = np.ones_like(u)
        u, v = _normalize(u, v)
        cls = np.full(spec.width, -1, dtype=np.int32)
        hit = np.zeros(spec.width, dtype=np.int32)
        for it in range(spec.max_iter):
            u, v = stepper.step(u, v)
            pending = cls < 0
            if not pending.any():
                break
            for idx, tu, tv in targets:
                d = _chordal_pairs(u, v, tu, tv)
                newly = pending & (d < spec.cycle_eps * 10)
                cls[newly] = idx
                hit[newly] = it + 1
                pending &= ~newly
        out[i, :, 0] = cls + 1  # 0 = unresolved
        out[i, :, 1] = hit
    return out


def _render_rows_param(spec: RenderSpec, rows: range) -> np.ndarray:
    """Period coloring for the two one-parameter families."""
    is_fa = isinstance(spec.target, ParamFaTarget)
    out = np.zeros((len(rows), spec.width, 2), dtype=np.int32)
    for i, row in enumerate(rows):
        a = _pixel_grid_row(spec, spec.target.window, row)
        if is_fa:
            # seed with the critical value f_a(0) = -1
            u = np.full(spec.width, -1.0 + 0j)
            v = np.ones(spec.width, dtype=complex)

            def step(u, v):
                uu = u * u
                vv = a * (v * v)
                return _normalize(uu - vv, uu + vv)

        else:
            # seed with the critical point z = 1 of c(z + 1/z)
            u = np.ones(spec.width, dtype=complex)
            v = np.ones(spec.width, dtype=complex)

            def step(u, v):
                return _normalize(a * (u * u + v * v), u * v)

        for _ in range(spec.max_iter):
            u, v = step(u, v)
        tail_u = [u]
        tail_v = [v]
        for _ in range(spec.max_period):
            u, v = step(u, v)
            tail_u.append(u)
            tail_v.append(v)
        period = np.zeros(spec.width, dtype=np.int32)
        for p in range(1, spec.max_period + 1):
            d = _chordal_pairs(tail_u[-1], tail_v[-1], tail_u[-1 - p], tail_v[-1 - p])
            period = np.where((period == 0) & (d < spec.cycle_eps), p, period)
        out[i, :, 0] = period  # 0 = unresolved
    return out


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("DECKMAP_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _colorize(spec: RenderSpec, data: np.ndarray) -> np.ndarray:
    lut = _palette_lut(spec.palette)
    cls = data[:, :, 0] % len(lut)
    rgb = lut[cls]
    if isinstance(spec.target, JuliaTarget):
        hit = data[:, :, 1].astype(float)
        shade = np.where(
            data[:, :, 0] > 0, 0.35 + 0.65 * (1.0 - hit / max(spec.max_iter, 1)), 1.0
        )
        rgb = (rgb.astype(float) * shade[:, :, None]).astype(np.uint8)
    return rgb


def _overlay_orbits(spec: RenderSpec, rgb: np.ndarray) -> int:
    """Mark forward critical orbit points; returns the number of marks."""
    if not isinstance(spec.target, JuliaTarget):
        return 0
    f = spec.target.map
    cd = critical_data(f, mode="numeric")
    marks = 0
    win = spec.target.window
    hw = win.half_width
    hh = hw * spec.height / spec.width
    for p, _ in cd.points:
        z = point_to_extended(p)
        for _ in range(64):
            if z is None:
                z = f.eval_extended(z)
                continue
            col = (z.real - (win.center.real - hw)) / (2 * hw) * spec.width
            rowf = ((win.center.imag + hh) - z.imag) / (2 * hh) * spec.height
            ci, ri = int(col), int(rowf)
            if 0 <= ci < spec.width and 0 <= ri < spec.height:
                r0, r1 = max(0, ri - 1), min(spec.height, ri + 2)
                c0, c1 = max(0, ci - 1), min(spec.width, ci + 2)
                rgb[r0:r1, c0:c1] = _OVERLAY_RGB
                marks += 1
            z = f.eval_extended(z)
    return marks


def render(spec: RenderSpec, workers: int | None = None) -> RenderResult:
    """Render the spec to a P6 PPM with a JSON-ready metadata sidecar.

    Deterministic: the same spec yields identical bytes regardless of the
    worker count.
    """
    t0 = time.perf_counter()
    nworkers = _worker_count(workers)
    atlas = None
    if isinstance(spec.target, JuliaTarget):
        cd = critical_data(spec.target.map, mode="numeric")
        atlas = find_attracting_cycles(
            spec.target.map,
            [p for p, _ in cd.points],
            max_iter=max(spec.max_iter * 4, 512),
            max_period=spec.max_period,
            cycle_eps=spec.cycle_eps,
        )
        row_fn = lambda rows: _render_rows_julia(spec, atlas, rows)
    else:
        row_fn = lambda rows: _render_rows_param(spec, rows)

    blocks = []
    step = max(1, spec.height // (nworkers * 4))
    ranges = [range(r, min(r + step, spec.height)) for r in range(0, spec.height, step)]
    if nworkers == 1:
        blocks = [row_fn(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            blocks = list(pool.map(row_fn, ranges))
    data = np.concatenate(blocks, axis=0)

    rgb = _colorize(spec, data)
    marks = 0
    if spec.overlay_critical_orbits:
        marks = _overlay_orbits(spec, rgb)

    header = f"P6\n{spec.width} {spec.height}\n255\n".encode()
    ppm = header + rgb.tobytes()
    elapsed = time.perf_counter() - t0
    metadata = {
        "spec": _spec_echo(spec),
        "atlas": _atlas_echo(atlas),
        "overlay_marks": marks,
        "elapsed_seconds": elapsed,
        "workers": nworkers,
    }
    return RenderResult(ppm, data[:, :, 0].copy(), metadata)


def _spec_echo(spec: RenderSpec) -> dict:
    t = spec.target
    if isinstance(t, JuliaTarget):
        target = {
            "kind": "julia",
            "map": str(t.map),
            "window": _window_echo(t.window),
        }
    elif isinstance(t, ParamFaTarget):
        target = {"kind": "param-fa", "window": _window_echo(t.window)}
    else:
        target = {"kind": "param-sigma2", "window": _window_echo(t.window)}
    return {
        "target": target,
        "width": spec.width,
        "height": spec.height,
        "max_iter": spec.max_iter,
        "cycle_eps": spec.cycle_eps,
        "max_period": spec.max_period,
        "palette": spec.palette,
        "overlay_critical_orbits": spec.overlay_critical_orbits,
    }


def _window_echo(w: Window) -> dict:
    return {
        "center": [w.center.real, w.center.imag],
        "half_width": w.half_width,
    }


def _atlas_echo(atlas: CycleAtlas | None) -> list | None:
    if atlas is None:
        return None
    out = []
    for cyc in atlas.cycles:
        pts = []
        for p in cyc.points:
            if isinstance(p, SpherePoint) and p.is_infinity:
                pts.append("inf")
            else:
                z = point_to_extended(p)
                pts.append([z.real, z.imag])
        out.append({"points": pts, "period": cyc.period, "multiplier": cyc.multiplier})
    return out
