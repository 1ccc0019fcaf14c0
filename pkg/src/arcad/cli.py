"""Command-line entry point: ``arcad validate|analyze|simulate|response``."""
import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .airframe import build_allocation_matrix, hover_feasible
from .dynamics import DivergenceError
from .scenario import (ParseError, UnknownChannelError, atomic_write, export_csv,
                       export_polytope, load_airframe, load_scenario, render_plots,
                       run_scenario, step_metrics)

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2


def _section_arg(text):
    axis, _, value = text.partition("=")
    axes = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
    if axis not in axes or not value:
        raise argparse.ArgumentTypeError("expected AXIS=VALUE with AXIS one of x, y, z")
    return axis, np.array(axes[axis]), float(value)


def cmd_validate(args):
    model = load_airframe(args.aircraft)
    hov = hover_feasible(model)
    print(f"ok: {model.n_rotors} rotors, mass {model.mass:g} kg")
    print("hover thrusts [N]: " + " ".join(f"{u:.4f}" for u in hov.hover_thrusts))
    return EXIT_OK


def cmd_analyze(args):
    model = load_airframe(args.aircraft)
    B = build_allocation_matrix(model)
    limits = model.thrust_limits
    force = analysis.wrench_set(B, limits, "force")
    if args.set == "force":
        poly = force
    elif args.set == "moment":
        poly = analysis.wrench_set(B, limits, "moment")
    else:
        poly = analysis.acceleration_set(force, model.mass)

    out = Path(args.out)
    export_polytope(poly, out / f"{args.set}_set.off")
    accel = analysis.acceleration_set(force, model.mass)
    rows = [
        ("set", args.set),
        ("affine_dimension", str(poly.affine_dimension)),
        ("vertices", str(len(poly.vertices))),
        ("facets", str(len(poly.faces))),
        ("volume", f"{poly.volume():.6g}"),
        ("rank", str(np.linalg.matrix_rank(B.matrix))),
        ("hover_feasible", str(hover_feasible(model, B).feasible).lower()),
        ("omni_acceleration_radius", f"{analysis.omni_radius(accel):.6g}"),
        ("lateral_force_radius", f"{analysis.lateral_force_radius(force, model.mass):.6g}"),
    ]
    if args.section is not None:
        name, axis, value = args.section
        sec = analysis.cross_section(poly, axis, value)
        atomic_write(out / f"section_{name}={value:g}.svg",
                     analysis.section_to_svg(sec, label=f"{args.set} set, {name} = {value:g}"))
        rows.append((f"section_{name}_area", f"{sec.area:.6g}"))
    width = max(len(k) for k, _ in rows)
    text = "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"
    atomic_write(out / "analysis.txt", text)
    atomic_write(out / "analysis.csv", "key,value\n" + "".join(f"{k},{v}\n" for k, v in rows))
    sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args):
    spec = load_scenario(args.scenario)
    log = run_scenario(spec)
    out = Path(args.out)
    export_csv(log, out / "log.csv")
    if args.plot:
        channels = [c.strip() for c in args.plot.split(",") if c.strip()]
        render_plots(log, channels, out / "plot.svg", spec.settling_band)
    print(f"wrote {len(log)} samples x {len(log.channels)} channels to {out / 'log.csv'}")
    return EXIT_OK


def cmd_response(args):
    spec = load_scenario(args.scenario)
    log = run_scenario(spec)
    m = step_metrics(log, args.signal, spec.settling_band)
    if m is None:
        log[args.signal]  # raises for unknown names
        print(f"no step setpoint found for {args.signal}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    atomic_write(out / "metrics.txt", analysis.metrics_text(m, args.signal))
    atomic_write(out / "metrics.csv", analysis.metrics_csv([(args.signal, m)]))
    render_plots(log, [args.signal], out / "response.svg", spec.settling_band)
    sys.stdout.write(analysis.metrics_text(m, args.signal))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="arcad", description="Multirotor design, simulation and analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate an airframe file")
    v.add_argument("--aircraft", required=True)
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="wrench-set analysis of an airframe")
    a.add_argument("--aircraft", required=True)
    a.add_argument("--set", choices=["force", "moment", "accel"], default="force")
    a.add_argument("--section", type=_section_arg, default=None, metavar="AXIS=VALUE")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="run a scenario and log its signals")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--plot", default=None, help="comma-separated channel list")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("response", help="step-response metrics of one signal")
    r.add_argument("--scenario", required=True)
    r.add_argument("--signal", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_response)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UnknownChannelError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except analysis.PolytopeDimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
