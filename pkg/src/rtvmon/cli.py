"""Command-line front end: ``generate``, ``run``, ``shadow`` and
``validate-descriptor``.

Exit codes: 0 success, 1 the stream ends in a specification violation,
2 usage, parse or configuration errors.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import descriptor as desc
from .belief import ZMode
from .errors import MonitorError
from .harness import DEFAULT_CHECKPOINTS, run_stream, shadow
from .monitor import Status
from .scenario import ScenarioConfig, TrajectoryConfig, generate, read_csv, sigma_oracle, write_csv

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def _checkpoints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_scenario_flags(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario", type=Path, help="CSV stream; generated from the flags below if omitted")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-total", type=int, default=1000)
    g.add_argument("--n-false", type=int, default=8)
    g.add_argument("--trajectory", choices=("line", "arc", "spline"), default="spline")
    g.add_argument("--magnitude", type=float, default=50.0, help="false-detection displacement (m)")
    g.add_argument("--noise-std", type=float, default=TrajectoryConfig.noise_std)


def _add_spec_flags(p):
    g = p.add_argument_group("monitor overrides")
    g.add_argument("--t-fp", type=float)
    g.add_argument("--c1", type=float)
    g.add_argument("--z-mode", choices=[m.value for m in ZMode])
    g.add_argument("--sigma", type=float, help="fixed sigma; overrides --sigma-source")
    g.add_argument(
        "--sigma-source", choices=("auto", "oracle", "calibrate"), default="auto",
        help="auto: ground-truth oracle when the stream has injected false detections, else calibrate",
    )
    g.add_argument("--calibration-steps", type=int)
    g.add_argument("--literal-variance", action="store_true",
                   help="read the calibrated standard deviation as sigma squared")


def build_parser():
    parser = argparse.ArgumentParser(prog="rtvmon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic labeled stream as CSV")
    _add_scenario_flags(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("run", help="monitor one stream")
    _add_scenario_flags(p)
    p.add_argument("--descriptor", type=Path, help="defaults to the bundled detector descriptor")
    _add_spec_flags(p)
    p.add_argument("--checkpoints", type=_checkpoints, default=DEFAULT_CHECKPOINTS)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("shadow", help="run monitor B in the shadow of monitor A")
    _add_scenario_flags(p)
    p.add_argument("--descriptor-a", type=Path, required=True)
    p.add_argument("--descriptor-b", type=Path, required=True)
    _add_spec_flags(p)
    p.add_argument("--checkpoints", type=_checkpoints, default=DEFAULT_CHECKPOINTS)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("validate-descriptor", help="check a descriptor and print its strategies")
    p.add_argument("path", type=Path)
    return parser


def _stream(args):
    if args.scenario is not None:
        return read_csv(args.scenario)
    cfg = ScenarioConfig(
        n_total=args.n_total, n_false=args.n_false, seed=args.seed,
        trajectory=TrajectoryConfig(kind=args.trajectory, noise_std=args.noise_std),
        perturbation_magnitude=args.magnitude,
    )
    return generate(cfg)


def _resolve_spec(descriptor_path, args, stream, passive_only=False):
    d = desc.load_descriptor(descriptor_path or desc.bundled_descriptor_path())
    assignment = desc.validate_descriptor(d)
    if passive_only and desc.Strategy.FALSIFICATION in assignment.values():
        raise desc.ParseError("shadow mode only accepts Direct or Surrogate strategies")
    bound = desc.bind_monitor(d, assignment)
    specs = [b for b in bound.values() if isinstance(b, desc.MonitorSpec)]
    if not specs:
        raise desc.UnknownEstimator(f"descriptor has no {desc.FP_RATE_ESTIMATOR!r} surrogate")
    spec = specs[0]
    overrides = {
        "t_fp": args.t_fp, "c1": args.c1, "z_mode": args.z_mode,
        "calibration_steps": args.calibration_steps,
    }
    if args.literal_variance:
        overrides["literal_variance"] = True
    if args.sigma is not None:
        overrides["sigma"] = args.sigma
    elif spec.sigma is None:
        source = args.sigma_source
        if source == "auto":
            source = "oracle" if stream.has_ground_truth and stream.n_false > 0 else "calibrate"
        if source == "oracle":
            overrides["sigma"] = sigma_oracle(stream, literal_variance=args.literal_variance or spec.literal_variance)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(spec, **overrides)


def _cmd_generate(args):
    write_csv(_stream(args), args.out)
    return EXIT_OK


def _cmd_run(args):
    stream = _stream(args)
    spec = _resolve_spec(args.descriptor, args, stream)
    report = run_stream(stream.detections, spec, args.checkpoints)
    report.write(args.out)
    summary = report.summary
    print(json.dumps({k: summary[k] for k in (
        "n_steps", "first_stable_accept_n", "total_violations", "final_rate_estimate", "final_status",
    )}))
    return EXIT_VIOLATION if summary["final_status"] == Status.VIOLATION.value else EXIT_OK


def _cmd_shadow(args):
    stream = _stream(args)
    spec_a = _resolve_spec(args.descriptor_a, args, stream, passive_only=True)
    spec_b = _resolve_spec(args.descriptor_b, args, stream, passive_only=True)
    result = shadow(stream.detections, spec_a, spec_b, args.checkpoints)
    result.write(args.out)
    print(json.dumps(result.summary))
    final = result.report_a.summary["final_status"]
    return EXIT_VIOLATION if final == Status.VIOLATION.value else EXIT_OK


def _cmd_validate(args):
    d = desc.load_descriptor(args.path)
    assignment = desc.validate_descriptor(d)
    desc.bind_monitor(d, assignment)
    print(json.dumps({name: s.value for name, s in assignment.items()}, indent=2))
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "run": _cmd_run,
    "shadow": _cmd_shadow,
    "validate-descriptor": _cmd_validate,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (MonitorError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
