"""Command-line front end.

Thin by construction: every subcommand parses its arguments, calls the
library, assembles an AnalysisReport via the shared builders, prints a
human-readable summary, and optionally writes the JSON document.  Exit
status is 0 exactly when the report carries no error object.
"""

from __future__ import annotations

import argparse
import sys

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
    shared_section,
)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="bind a parameter (repeatable), e.g. --param a=2 or --param c=3/5",
    )
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION, metavar="BITS")
    p.add_argument("--json", metavar="PATH", help="write the JSON report here")
    p.add_argument("--seed", type=int, default=None, help="seed for sampling utilities")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="deckmap",
        description="exact analysis of rational maps on the Riemann sphere",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="critical data, coalescing flag, orbit scan")
    p.add_argument("expr")
    p.add_argument("--max-orbit", type=int, default=64)
    _add_common(p)

    p = sub.add_parser("deck", help="deck group of the k-th iterate")
    p.add_argument("expr")
    p.add_argument("--k", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("detect", help="recover critical data treating the map as a k-th iterate")
    p.add_argument("expr")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--deg", type=int, required=True, help="degree of the claimed root map")
    _add_common(p)

    p = sub.add_parser("shared", help="shared-iterate analysis of two maps")
    p.add_argument("expr1")
    p.add_argument("expr2")
    p.add_argument("--max-k", type=int, default=4)
    _add_common(p)

    p = sub.add_parser("render", help="render a Julia set or a parameter plane")
    p.add_argument("--mode", choices=["julia", "param-fa", "param-sigma2"], required=True)
    p.add_argument("--expr", help="map expression (julia mode)")
    p.add_argument("--out", required=True, metavar="PATH.ppm")
    p.add_argument("--png", metavar="PATH.png", help="also write a PNG (needs pillow)")
    p.add_argument("--center", type=float, default=0.0)
    p.add_argument("--center-im", type=float, default=0.0)
    p.add_argument("--half-width", type=float, default=4.0)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--max-period", type=int, default=DEFAULT_MAX_PERIOD)
    p.add_argument("--cycle-eps", type=float, default=DEFAULT_CYCLE_EPS)
    p.add_argument("--palette", default="period")
    p.add_argument("--overlay-critical-orbits", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    _add_common(p)
    return ap


def _parse_params(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep:
            raise DeckmapError(f"--param needs NAME=VALUE, got {pair!r}")
        out[name.strip()] = parse_constant(value.strip())
    return out


def _emit(report: AnalysisReport, json_path: str | None) -> int:
    if json_path:
        text = report.to_json()
        if json_path == "-":
            print(text)
        else:
            with open(json_path, "w") as fh:
                fh.write(text)
    return 1 if report.error is not None else 0


def _fmt_points(models) -> str:
    out = []
    for m in models:
        if m.infinite:
            out.append("inf")
        elif m.exact is not None:
            out.append(m.exact)
        else:
            out.append(f"{m.approx[0]:.9g}{m.approx[1]:+.9g}i")
    return "{" + ", ".join(out) + "}"


def _cmd_analyze(args) -> AnalysisReport:
    params = _parse_params(args.param)
    f = parse_map(args.expr, params)
    cd = critical_data(f, precision=args.precision)
    report = AnalysisReport(map=map_echo(f), critical=critical_section(cd))
    print(f"map: {report.map.text}")
    print(f"degree: {f.degree}")
    print(f"critical points: {_fmt_points(report.critical.points)}")
    print(f"critical values: {_fmt_points(report.critical.values)}")
    print(f"bicritical: {cd.bicritical}  coalescing: {cd.critically_coalescing}")
    if cd.bicritical:
        od = postcritical_orbit(f, max_len=args.max_orbit, precision=args.precision)
        report = report.model_copy(update={"orbit": orbit_section(od)})
        state = "finite" if od.finite_postcritical else "not finite within bound"
        print(f"postcritical set: {state}" + (f", m={od.m}" if od.m is not None else ""))
    return report


def _cmd_deck(args) -> AnalysisReport:
    params = _parse_params(args.param)
    f = parse_map(args.expr, params)
    dr = deck_group(f, args.k, precision=args.precision)
    report = AnalysisReport(map=map_echo(f), deck=deck_section(dr, args.k))
    d = report.deck
    print(f"deck group of iterate {args.k}: {d.iso_type} (order {d.order})")
    certified = sum(1 for e in d.elements if e.certified)
    print(f"certified elements: {certified}/{len(d.elements)}")
    for e in d.elements:
        body = e.entries if e.entries is not None else e.entries_approx
        print(f"  order {e.order}: {body} {'[certified]' if e.certified else '[numeric]'}")
    return report


def _cmd_detect(args) -> AnalysisReport:
    params = _parse_params(args.param)
    F = parse_map(args.expr, params)
    if args.deg == 2:
        rep = detect_quadratic(F, args.k, precision=args.precision)
    else:
        rep = detect_higher_degree(F, args.deg, args.k, precision=args.precision)
    report = AnalysisReport(map=map_echo(F), detection=detection_section(rep))
    print(f"case: {rep.case_label}")
    print(f"critical points: {_fmt_points(report.detection.critical_points)}")
    print(f"critical values: {_fmt_points(report.detection.critical_values)}")
    return report


def _cmd_shared(args) -> AnalysisReport:
    params = _parse_params(args.param)
    f = parse_map(args.expr1, params)
    g = parse_map(args.expr2, params)
    rep = shared_iterate_analysis(f, g, args.max_k, precision=args.precision)
    report = AnalysisReport(maps=[map_echo(f), map_echo(g)], shared=shared_section(rep))
    print(f"minimal shared iterate: {rep.minimal_k}")
    print(f"critical data agree: {rep.cv_cp_agree}")
    print(f"second iterates equal: {rep.second_iterate_equal}")
    print(f"symmetry locus member: {rep.symmetry_locus_member}")
    return report


def _cmd_render(args) -> AnalysisReport:
    params = _parse_params(args.param)
    window = Window(complex(args.center, args.center_im), args.half_width)
    if args.mode == "julia":
        if not args.expr:
            raise DeckmapError("julia mode needs --expr")
        target = JuliaTarget(parse_map(args.expr, params), window)
    elif args.mode == "param-fa":
        target = ParamFaTarget(window)
    else:
        target = ParamSigma2Target(window)
    spec = RenderSpec(
        target=target,
        width=args.width,
        height=args.height,
        max_iter=args.max_iter,
        cycle_eps=args.cycle_eps,
        max_period=args.max_period,
        palette=args.palette,
        overlay_critical_orbits=args.overlay_critical_orbits,
    )
    result = render(spec, workers=args.workers)
    with open(args.out, "wb") as fh:
        fh.write(result.ppm)
    png_path = None
    if args.png:
        with open(args.png, "wb") as fh:
            fh.write(result.to_png())
        png_path = args.png
    section = RenderSection(
        spec=result.metadata["spec"],
        atlas=result.metadata["atlas"],
        overlay_marks=result.metadata["overlay_marks"],
        elapsed_seconds=result.metadata["elapsed_seconds"],
        workers=result.metadata["workers"],
        image_path=args.out,
        png_path=png_path,
    )
    print(f"wrote {args.out} ({args.width}x{args.height})")
    if png_path:
        print(f"wrote {png_path}")
    return AnalysisReport(render=section)


_COMMANDS = {
    "analyze": _cmd_analyze,
    "deck": _cmd_deck,
    "detect": _cmd_detect,
    "shared": _cmd_shared,
    "render": _cmd_render,
}


def _shield_expressions(argv: list[str]) -> list[str]:
    """Keep argparse from eating expressions like '-(z^3-1)/(z^3+1)'.

    A leading space neutralizes the dash; the expression lexer skips it.
    """
    out = []
    for tok in argv:
        if (
            len(tok) > 1
            and tok[0] == "-"
            and not tok.startswith("--")
            and tok[1] in "(z0123456789."
        ):
            tok = " " + tok
        out.append(tok)
    return out


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = build_arg_parser().parse_args(_shield_expressions(argv))
    try:
        report = _COMMANDS[args.command](args)
    except DeckmapError as exc:
        report = AnalysisReport(error=error_model(exc))
        print(f"error: {exc}", file=sys.stderr)
    return _emit(report, args.json)


if __name__ == "__main__":
    sys.exit(main())
