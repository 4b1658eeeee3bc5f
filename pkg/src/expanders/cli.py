"""Command-line interface: ``expanders {solve,flow,density,spectrum,decay-fit,check-all}``.

Exit codes: 0 all checks pass, 1 computation finished but a check failed,
2 solver or domain failure, 3 input/output failure.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import sys
from pathlib import Path

import numpy as np

from . import __version__, density, flow, io, linop, profile
from .errors import (
    DomainError,
    ExpanderError,
    InsufficientDataError,
    IntegrationFailure,
    NotFoundError,
    ProfileFormatError,
)
from .geom import EquivariantRayPair

log = logging.getLogger("expanders")

EXIT_OK, EXIT_CHECK, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
NEAR_AREA_MINIMIZING = 1e-4

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_angle(text: str) -> float:
    """Radians, allowing ``pi`` and + - * / ( ), e.g. ``2*pi/3`` or ``-pi/2``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported angle expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"bad angle {text!r}: {exc}") from None


def parse_rays(text) -> EquivariantRayPair:
    if isinstance(text, (list, tuple)):
        parts = [str(p) for p in text]
    else:
        parts = str(text).split(",")
    if len(parts) != 2:
        raise ValueError(f"expected two angles 'phi_minus,phi_plus', got {text!r}")
    return EquivariantRayPair(parse_angle(parts[0]), parse_angle(parts[1]))


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [parse_angle(v) for v in str(text).split(",") if v.strip()]


def _centers(values) -> list[np.ndarray]:
    out = []
    for item in values:
        v = _floats(item)
        if len(v) != 4:
            raise ValueError(f"a centre needs four coordinates x1,y1,x2,y2, got {item!r}")
        out.append(np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]]))
    return out


def _check_not_area_minimizing(rays: EquivariantRayPair, tol: float):
    if rays.is_plane:
        return
    d = rays.separation
    if abs(d - math.pi / 2) < tol:
        raise DomainError(
            f"rays {rays.phi_minus:g},{rays.phi_plus:g} are within {tol:g} of the area-minimizing configuration"
        )


# --- provenance ----------------------------------------------------------------------


def _config(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _provenance(args, inputs=()) -> dict:
    cfg = _config(args)
    hashed = {k: v for k, v in cfg.items() if k not in ("out", "verbose")}
    parts = [json.dumps(hashed, sort_keys=True, default=str)] + [Path(p) for p in inputs]
    return {"config": cfg, "input_hash": io.content_hash(*parts), "version": __version__}


def _out(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# --- commands ------------------------------------------------------------------------


def cmd_solve(args) -> int:
    rays = parse_rays(args.rays)
    _check_not_area_minimizing(rays, args.sl_tolerance)
    out = _out(args)
    problem = profile.ShootingProblem(
        rays, tolerance=args.tolerance, radius=args.radius, step=args.step, method=args.method
    )
    try:
        curve = profile.shoot(problem)
    except NotFoundError as exc:
        io.write_json(out / "trace.json", {"error": str(exc), "trace": exc.trace, **_provenance(args)})
        raise
    rep = profile.accept(curve)
    try:
        found = profile.asymptotic_angles(curve, min_radius=min(3.0, args.radius / 2))
        angle_error = found.line_mismatch(rays)
    except InsufficientDataError:
        angle_error = None
    decay = None
    if not rays.is_plane:
        try:
            fit = profile.fit_decay(curve)
            decay = {"b": fit.b, "b_stderr": fit.b_stderr, "C": fit.C, "slope": fit.slope}
        except InsufficientDataError as exc:
            decay = {"error": str(exc)}
    io.write_profile_csv(out / "profile.csv", curve)
    meta = {
        "rays": rays.to_dict(),
        "tolerance": args.tolerance,
        "stepSize": args.step,
        "residual": rep.residual,
        "residual_tolerance": rep.residual_tol,
        "beta_theta_oscillation": rep.beta_theta_oscillation,
        "neck_radius": float(np.min(curve.r)),
        "asymptotic_angle_error": angle_error,
        "accepted": rep.accepted,
        "decay_fit": decay,
        **_provenance(args),
    }
    io.write_json(out / "profile.json", meta)
    print(f"residual={rep.residual:.3e} beta+theta osc={rep.beta_theta_oscillation:.3e} accepted={rep.accepted}")
    return EXIT_OK if rep.accepted else EXIT_CHECK


def cmd_flow(args) -> int:
    out = _out(args)
    snaps = _floats(args.snapshots) if args.snapshots else []
    if args.from_profile:
        exp = io.read_profile(args.from_profile)
        rep = flow.self_similarity_check(exp, args.tau_max)
        doc = {"taus": rep.taus, "defects": rep.defects, "max_defect": rep.max_defect,
               **_provenance(args, [args.from_profile])}
        io.write_json(out / "self_similarity.json", doc)
        print(f"self-similarity defect={rep.max_defect:.3e}")
        return EXIT_OK if rep.max_defect < args.defect_tolerance else EXIT_CHECK
    rays = parse_rays(args.rays)
    _check_not_area_minimizing(rays, args.sl_tolerance)
    if args.t_end not in snaps:
        snaps.append(args.t_end)
    run = flow.run_from_cone(
        rays, args.t_end, args.dt, args.neck, args.ds, args.radius, snapshot_times=snaps
    )
    for i, st in enumerate(run.snapshots):
        io.write_profile_csv(out / f"flow_{i:03d}.csv", st.curve)
    mu = flow.mu_conservation_check(run.snapshots + [run.state])
    manifest = {**run.manifest(), "mu_max": mu.max_abs_mu, **_provenance(args)}
    ok = mu.ok()
    if args.compare:
        ref = io.read_profile(args.compare)
        d = flow.hausdorff(run.state.points, ref.gamma, clip_radius=args.radius - 1)
        manifest["hausdorff_to_reference"] = d
        ok = ok and d < args.hausdorff_tolerance
        manifest["input_hash"] = io.content_hash(manifest["input_hash"], Path(args.compare))
    io.write_json(out / "manifest.json", manifest)
    print(f"flowed to t={run.state.t:g}; max |mu|={mu.max_abs_mu:.2e}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_density(args) -> int:
    out = _out(args)
    curve = io.read_profile(args.profile)
    rays = curve.rays if curve.rays is not None else profile.asymptotic_angles(curve)
    centers = _centers(args.center) if args.center else density.default_centers(curve)
    scales = _floats(args.scales) if args.scales else None
    times = _floats(args.times) if args.times else None
    sweep = density.density_sweep(curve, centers, scales, times)
    io.atomic_write_text(
        out / "density.csv",
        io.rows_to_csv(("x0_1", "x0_2", "x0_3", "x0_4", "l", "t", "theta"), sweep.rows),
    )
    mono = density.monotonicity_check(
        curve, centers, sorted(set(sweep.rows[:, 4])), sorted(set(sweep.rows[:, 5]))
    )
    summary = {
        **sweep.summary(),
        "monotonicity_max_excess": mono.max_violation,
        "monotonicity_violations": len(mono.violations),
        "rays": rays.to_dict(),
        **_provenance(args, [args.profile]),
    }
    io.write_json(out / "density.json", summary)
    print(f"sup theta={sweep.sup:.8f} margin below 2={sweep.margin_below_2:.3e}")
    return EXIT_OK if (sweep.sup < 2 and mono.ok) else EXIT_CHECK


def cmd_spectrum(args) -> int:
    out = _out(args)
    curve = io.read_profile(args.profile)
    radius = args.radius if args.radius is not None else float(min(curve.r[0], curve.r[-1]))
    records = []
    ok = True
    for k in range(args.max_mode + 1):
        grid = linop.OperatorGrid(curve, k, args.h, radius)
        rec = linop.spectrum_record(grid)
        st = linop.stability_check(grid)
        rec["sigma_min_refined"] = st.sigma_refined
        rec["sigma_min_l2"] = st.sigma_l2
        rec["stable"] = st.stable
        ok = ok and st.stable
        records.append(rec)
    io.write_json(out / "spectrum.json", {"records": records, **_provenance(args, [args.profile])})
    print(" ".join(f"k={r['mode']}:sigma={r['sigma_min']:.4f}" for r in records))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_decayfit(args) -> int:
    out = _out(args)
    curve = io.read_profile(args.profile)
    r_range = tuple(_floats(args.r_range)) if args.r_range else None
    fit = profile.fit_decay(curve, r_range)
    ok = fit.slope <= -0.25 + 0.02 and fit.exponential_preferred
    doc = {
        "b": fit.b,
        "b_stderr": fit.b_stderr,
        "C": fit.C,
        "slope": fit.slope,
        "rss_exponential": fit.rss_exponential,
        "rss_polynomial": fit.rss_polynomial,
        "exponential_preferred": fit.exponential_preferred,
        "n_points": fit.n_points,
        "r_range": fit.r_range,
        **_provenance(args, [args.profile]),
    }
    io.write_json(out / "decay_fit.json", doc)
    print(f"b={fit.b:.4f} +- {fit.b_stderr:.4f}, C={fit.C:.4g}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_check_all(args) -> int:
    from . import acceptance

    numbers = [int(v) for v in str(args.only).split(",")] if args.only else None
    results = acceptance.run_all(numbers)
    for r in results:
        print(r.line())
    if args.out:
        out = _out(args)
        io.write_json(
            out / "acceptance.json",
            {"results": [{"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
             **_provenance(args)},
        )
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


# --- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="expanders", description="Equivariant Lagrangian self-expanders in C^2.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--config", help="JSON file of option values; command-line flags take precedence")
        sp.add_argument("--out", default=out_default, help="output directory")

    sp = sub.add_parser("solve", help="shoot for the expander with given asymptotic rays")
    common(sp, "out/solve")
    sp.add_argument("--rays", required=False, default=None, help="phi_minus,phi_plus in radians (pi allowed)")
    sp.add_argument("--radius", type=float, default=profile.DEFAULT_RADIUS)
    sp.add_argument("--step", type=float, default=profile.DEFAULT_STEP)
    sp.add_argument("--tolerance", type=float, default=1e-10)
    sp.add_argument("--method", choices=("symmetric", "two-sided"), default="symmetric")
    sp.add_argument("--sl-tolerance", type=float, default=NEAR_AREA_MINIMIZING)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("flow", help="flow a mollified cone, or check self-similarity of a profile")
    common(sp, "out/flow")
    sp.add_argument("--rays", default=None)
    sp.add_argument("--t-end", type=float, default=0.5)
    sp.add_argument("--ds", type=float, default=flow.DEFAULT_DS)
    sp.add_argument("--dt", type=float, default=None, help="default 0.4 ds^2")
    sp.add_argument("--neck", type=float, default=0.05, help="desingularisation radius of the initial cone")
    sp.add_argument("--radius", type=float, default=profile.DEFAULT_RADIUS)
    sp.add_argument("--snapshots", default=None, help="comma-separated snapshot times")
    sp.add_argument("--compare", default=None, help="reference profile CSV for the Hausdorff check")
    sp.add_argument("--hausdorff-tolerance", type=float, default=5e-3)
    sp.add_argument("--from-profile", default=None, help="run the self-similarity check on this profile")
    sp.add_argument("--tau-max", type=float, default=0.25)
    sp.add_argument("--defect-tolerance", type=float, default=1e-2)
    sp.add_argument("--sl-tolerance", type=float, default=NEAR_AREA_MINIMIZING)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("density", help="Gaussian density sweep and monotonicity check")
    common(sp, "out/density")
    sp.add_argument("--profile", default=None)
    sp.add_argument("--center", action="append", help="x1,y1,x2,y2 (repeatable)")
    sp.add_argument("--scales", default=None)
    sp.add_argument("--times", default=None)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("spectrum", help="smallest singular values of the drift operator per mode")
    common(sp, "out/spectrum")
    sp.add_argument("--profile", default=None)
    sp.add_argument("--max-mode", type=int, default=4)
    sp.add_argument("--h", type=float, default=0.02)
    sp.add_argument("--radius", type=float, default=None)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("decay-fit", help="fit the decay rate of the graph potential")
    common(sp, "out/decay")
    sp.add_argument("--profile", default=None)
    sp.add_argument("--r-range", default=None)
    sp.set_defaults(func=cmd_decayfit)

    sp = sub.add_parser("check-all", help="run every acceptance check")
    common(sp, None)
    sp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    sp.set_defaults(func=cmd_check_all)
    return p


REQUIRED = {
    "solve": ("rays",),
    "density": ("profile",),
    "spectrum": ("profile",),
    "decay-fit": ("profile",),
}


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text())
        if not isinstance(cfg, dict):
            raise ProfileFormatError(f"{args.config}: top level must be an object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ProfileFormatError(f"{args.config}: unknown option(s) {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    for name in REQUIRED.get(args.command, ()):
        if getattr(args, name) is None:
            parser.error(f"{args.command}: --{name.replace('_', '-')} is required")
    if args.command == "flow" and not args.rays and not args.from_profile:
        parser.error("flow: give --rays or --from-profile")
    return args


def main(argv=None) -> int:
    try:
        args = _parse(argv)
    except (OSError, ProfileFormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ProfileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, NotFoundError, IntegrationFailure, InsufficientDataError, ExpanderError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
