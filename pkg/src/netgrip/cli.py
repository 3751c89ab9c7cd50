"""netgrip command line: simulate, segment, calibrate, serve, plot, bench.

Exit codes: 0 success, 1 usage/format error, 2 physics/convergence failure.
"""

import argparse
import json
import os
import sys

from .errors import NetgripError, RunError, ScenarioError, TraceFormatError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    p = _Parser(prog="netgrip", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    sim = sub.add_parser("simulate", help="run a scenario, write telemetry/summary/mesh")
    sim.add_argument("scenario", help="scenario JSON path or bundled:<name>")
    sim.add_argument("out_dir")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--sample-rate", type=float, default=None)
    sim.add_argument("--stop-voltage", type=float, default=None)

    seg = sub.add_parser("segment", help="segment a trace CSV into grasp phases")
    seg.add_argument("trace_csv")
    seg.add_argument("out_json")

    cal = sub.add_parser("calibrate", help="emit the force/resistance/voltage table")
    cal.add_argument("out_csv")
    cal.add_argument("--f-max", type=float, default=10.0)
    cal.add_argument("--f-step", type=float, default=0.1)
    cal.add_argument("--r0", type=float, default=10_000.0)
    cal.add_argument("--r-sat", type=float, default=2_000.0)
    cal.add_argument("--f-c", type=float, default=1.0)
    cal.add_argument("--f-sat", type=float, default=5.0)
    cal.add_argument("--r-ref", type=float, default=10_000.0)

    srv = sub.add_parser("serve", help="live NDJSON bridge for the panel")
    srv.add_argument("scenario")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=7645)
    srv.add_argument("--speed", type=float, default=1.0)
    srv.add_argument("--max-seconds", type=float, default=None)

    plot = sub.add_parser("plot", help="render a mesh-frame JSON to a PNG")
    plot.add_argument("mesh_json")
    plot.add_argument("out_png")

    bench = sub.add_parser("bench", help="compare numba and numpy kernel backends")
    bench.add_argument("--nodes", type=int, default=2000)
    bench.add_argument("--repeats", type=int, default=50)
    return p


def _load_scenario(arg, seed=None, sample_rate=None, stop_voltage=None):
    from .scenario import load_bundled, load_scenario, scenario_from_dict

    if arg.startswith("bundled:"):
        sc = load_bundled(arg[len("bundled:"):])
        data = dict(sc.raw)
    else:
        if not os.path.exists(arg):
            raise _UsageError(f"scenario file not found: {arg}")
        sc = load_scenario(arg)
        data = dict(sc.raw)
    override = False
    if seed is not None:
        data["seed"] = seed
        override = True
    if sample_rate is not None:
        data["sample_rate_hz"] = sample_rate
        override = True
    if stop_voltage is not None:
        ctl = dict(data.get("control", {}))
        ctl["stop_voltage_v"] = stop_voltage
        data["control"] = ctl
        override = True
    if override:
        sc = scenario_from_dict(data, name=sc.name)
    return sc


def _cmd_simulate(args):
    from .control import run_scenario, write_outputs

    sc = _load_scenario(args.scenario, args.seed, args.sample_rate, args.stop_voltage)
    result = run_scenario(sc)
    paths = write_outputs(result, sc, args.out_dir)
    print(f"verdict: {result.verdict}")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_segment(args):
    from .phases import Trace, segment

    if not os.path.exists(args.trace_csv):
        raise _UsageError(f"trace file not found: {args.trace_csv}")
    trace = Trace.from_csv(args.trace_csv)
    report = segment(trace)
    with open(args.out_json, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    touched = sum(1 for s in report.sensors if s.touched)
    print(f"segmented {trace.n_sensors} sensors ({touched} touched) -> {args.out_json}")
    return 0


def _cmd_calibrate(args):
    from .sensing import CalibrationCurve, SensorSpec

    try:
        spec = SensorSpec(id=0, patch_nodes=(), r0=args.r0, r_sat=args.r_sat,
                          f_c=args.f_c, f_sat=args.f_sat, r_ref=args.r_ref)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    if args.f_max <= 0 or args.f_step <= 0:
        raise _UsageError("f-max and f-step must be positive")
    curve = CalibrationCurve.from_spec(spec, f_max=args.f_max, f_step=args.f_step)
    curve.to_csv(args.out_csv)
    print(f"{len(curve.table)} rows -> {args.out_csv}")
    return 0


def _cmd_serve(args):
    from .bridge import Bridge

    sc = _load_scenario(args.scenario)
    bridge = Bridge(sc, host=args.host, port=args.port, speed=args.speed,
                    max_seconds=args.max_seconds)
    try:
        print(f"serving {sc.name} on {args.host}:{args.port}", flush=True)
        bridge.serve_forever()
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_plot(args):
    if not os.path.exists(args.mesh_json):
        raise _UsageError(f"mesh frame not found: {args.mesh_json}")
    with open(args.mesh_json, "r", encoding="utf-8") as fh:
        frame = json.load(fh)
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    nodes = np.asarray(frame["nodes"])
    stress = np.asarray(frame["stress"])
    mag = np.sqrt(np.einsum("ij,ij->i", stress, stress))
    fig, axes = plt.subplots(1, 2, figsize=(10, 5))
    for ax, (i, j), title in ((axes[0], (0, 2), "x-z"), (axes[1], (0, 1), "x-y")):
        for a, b in frame["edges"]:
            ax.plot([nodes[a][i], nodes[b][i]], [nodes[a][j], nodes[b][j]],
                    color="0.8", lw=0.5, zorder=1)
        sc = ax.scatter(nodes[:, i], nodes[:, j], c=mag, s=12, cmap="viridis", zorder=2)
        ax.set_title(f"net {title} (stress magnitude)")
        ax.set_aspect("equal")
    fig.colorbar(sc, ax=axes, shrink=0.8, label="N/mm^2")
    fig.savefig(args.out_png, dpi=120)
    print(f"wrote {args.out_png}")
    return 0


def _cmd_bench(args):
    from .benchmarks import run_benchmark

    run_benchmark(n_nodes=args.nodes, repeats=args.repeats)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.cmd == "simulate":
            return _cmd_simulate(args)
        if args.cmd == "segment":
            return _cmd_segment(args)
        if args.cmd == "calibrate":
            return _cmd_calibrate(args)
        if args.cmd == "serve":
            return _cmd_serve(args)
        if args.cmd == "plot":
            return _cmd_plot(args)
        if args.cmd == "bench":
            return _cmd_bench(args)
        return 1
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ScenarioError, TraceFormatError) as exc:
        line = getattr(exc, "line", None)
        at = f" (line {line})" if line else ""
        print(f"format error{at}: {exc}", file=sys.stderr)
        return 1
    except RunError as exc:
        print(f"physics error: {exc} ({len(exc.frames)} frames completed)", file=sys.stderr)
        return 2
    except NetgripError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
