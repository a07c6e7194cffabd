"""Command-line front end.

Subcommands: design, metrics, sweep, optimize, phase-sim, phase-solve.
Exit codes: 0 success, 1 domain error (single machine-parsable line on
stderr, prefixed "error:"), 2 usage error. Runs with identical flags and
seed write byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io as lio
from .coverage import (N_GRID_DEFAULT, N_SAMPLES_DEFAULT, fill_factor,
                       sample_unmodulated, scanning_range, sweep_designs,
                       sweep_workers_from_env)
from .design import (as_fraction, baseline_repeating_design, design_unmodulated,
                     repeat_period)
from .errors import DomainError, LissscanError
from .modulated import (ModulatedParams, OptimizeOptions, initial_params,
                        optimize, reference_pattern, synthesize_modulated)
from .phase import (DriftScenario, resonance_offset_for_phase_shift,
                    simulate_drift_control, solve_multitone)
from .scanner import ScannerConfig


@dataclass
class RunConfig:
    """Common per-invocation plumbing shared by the subcommands."""

    scanner: ScannerConfig | None
    seed: int
    out: Path | None


def _run_config(args: argparse.Namespace) -> RunConfig:
    scanner = lio.load_scanner(args.scanner) if getattr(args, "scanner", None) else None
    return RunConfig(scanner=scanner,
                     seed=getattr(args, "seed", 0),
                     out=Path(args.out) if getattr(args, "out", None) else None)


def _emit_json(payload: dict, out: Path | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _rational(text: str) -> Fraction:
    return as_fraction(text)


# ---------------------------------------------------------------- subcommands

def cmd_design(args: argparse.Namespace) -> int:
    run = _run_config(args)
    make = baseline_repeating_design if args.baseline else design_unmodulated
    design = make(_rational(args.r), args.m)
    periods = repeat_period(design.fx, design.fy, design.phix, design.phiy)
    payload = design.to_dict()
    payload["signal_period"] = str(periods.signal_period)
    payload["coverage_period"] = str(periods.coverage_period)
    _emit_json(payload, run.out)
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    run = _run_config(args)
    design = lio.load_design(args.design)
    if run.scanner is None:
        raise DomainError("metrics requires --scanner")
    pattern = sample_unmodulated(design, run.scanner, args.frame, args.n_samples)
    report = fill_factor(pattern, args.grid)
    payload = {"fill_factor": report.fill_factor, "r_max": report.r_max,
               "scanning_range": scanning_range(design, run.scanner)}
    _emit_json(payload, run.out)
    return 0


def _parse_m_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise DomainError(f"--m must be comma-separated integers, got {text!r}") from exc
    if not values:
        raise DomainError("--m must name at least one frame time")
    return values


def cmd_sweep(args: argparse.Namespace) -> int:
    run = _run_config(args)
    r_min, r_max, r_step = (_rational(args.r_min), _rational(args.r_max),
                            _rational(args.r_step))
    if r_step <= 0 or r_max < r_min:
        raise DomainError("need r_step > 0 and r_max >= r_min")
    r_grid = []
    r = r_min
    while r <= r_max:
        r_grid.append(r)
        r += r_step
    rows = sweep_designs(r_grid, _parse_m_list(args.m), config=run.scanner,
                         n_samples=args.n_samples, n_grid=args.grid,
                         workers=sweep_workers_from_env())
    if run.out is None:
        raise DomainError("sweep requires --out")
    with open(run.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "m", "rule", "fill_factor", "scanning_range", "status"])
        for row in rows:
            writer.writerow([repr(float(row.r)), row.m, row.rule,
                             "" if row.fill_factor is None else repr(row.fill_factor),
                             "" if row.scanning_range is None else repr(row.scanning_range),
                             row.status])
    return 0


def _positive_region_count(pattern, wmap) -> int:
    """Samples landing in patches with positive weight."""
    size = wmap.size
    ix = np.clip(((pattern.x + 1.0) * 0.5 * size).astype(int), 0, size - 1)
    iy = np.clip(((pattern.y + 1.0) * 0.5 * size).astype(int), 0, size - 1)
    return int(np.count_nonzero(wmap.w[ix, iy] > 0))


def cmd_optimize(args: argparse.Namespace) -> int:
    run = _run_config(args)
    if run.scanner is None:
        raise DomainError("optimize requires --scanner")
    wmap = lio.load_weight_map(args.roi)
    r = Fraction(run.scanner.fx_res) / Fraction(run.scanner.fy_res)
    cold = initial_params(r, m=args.m, n_tones=args.tones,
                          qx=run.scanner.qx, qy=run.scanner.qy,
                          y_single_tone=args.y_single_tone)
    if args.init:
        init = ModulatedParams.from_dict(json.loads(Path(args.init).read_text()))
    else:
        init = cold
    opts = OptimizeOptions(max_iters=args.max_iters, step=args.step,
                           threshold=args.threshold, seed=run.seed,
                           n_samples=args.n_samples, constraint=args.constraint)
    result = optimize(init, wmap, opts)
    optimized = synthesize_modulated(result.params, args.n_samples)
    reference = reference_pattern(r, m=args.m, config=run.scanner,
                                  n_samples=args.n_samples)
    payload = result.params.to_dict()
    payload.update({
        "fx_tone_freqs": result.params.fx_tones.tolist(),
        "fy_tone_freqs": result.params.fy_tones.tolist(),
        "final_loss": result.loss,
        "iterations": result.iterations,
        "converged": result.converged,
        "roi_density": _positive_region_count(optimized, wmap),
        "roi_density_reference": _positive_region_count(reference, wmap),
        "seed": run.seed,
    })
    if run.out is None:
        raise DomainError("optimize requires --out")
    _emit_json(payload, run.out)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss"])
            for i, loss in enumerate(result.loss_trace):
                writer.writerow([i, repr(float(loss))])
    return 0


def _drift_fn(spec: dict, f_drive: float, f_res: float, q: float, duration: float):
    kind = spec.get("type", "none")
    try:
        if kind == "none":
            return lambda t: t * 0.0
        if kind == "linear":
            rate = float(spec["rate_per_s"])
            return lambda t: rate * t
        if kind == "linear_total":
            total = float(spec["total_offset"])
            return lambda t: total * t / duration
        if kind == "phase_target":
            total = resonance_offset_for_phase_shift(f_drive, f_res, q, float(spec["target_deg"]))
            return lambda t: total * t / duration
    except KeyError as exc:
        raise DomainError(f"drift spec {kind!r} missing field {exc}") from exc
    raise DomainError(f"unknown drift type {kind!r}")


def cmd_phase_sim(args: argparse.Namespace) -> int:
    run = _run_config(args)
    if run.scanner is None:
        raise DomainError("phase-sim requires --scanner")
    try:
        spec = json.loads(Path(args.scenario).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"could not read scenario {args.scenario}: {exc}") from exc
    axis = spec.get("axis", "x")
    f_res, q = run.scanner.axis(axis)
    f_drive = float(spec.get("f_drive", f_res))
    if "frame_time" not in spec:
        raise DomainError(f"scenario {args.scenario} missing required field 'frame_time'")
    scenario = DriftScenario(
        drift_fn=_drift_fn(spec.get("drift", {}), f_drive, f_res, q, args.duration),
        frame_time=float(spec["frame_time"]),
        control_enabled=bool(spec.get("control_enabled", True)),
        measurement_noise_deg=float(spec.get("measurement_noise_deg", 0.0)))
    trace = simulate_drift_control(scenario, run.scanner, axis, f_drive,
                                   args.duration, seed=run.seed)
    if run.out is None:
        raise DomainError("phase-sim requires --out")
    with open(run.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "phase_error_deg", "corrected"])
        for t, err, corr in zip(trace.t, trace.phase_error_deg, trace.correction_deg):
            writer.writerow([repr(float(t)), repr(float(err)), repr(float(corr))])
    return 0


def cmd_phase_solve(args: argparse.Namespace) -> int:
    run = _run_config(args)
    try:
        data = json.loads(Path(args.samples).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"could not read samples {args.samples}: {exc}") from exc
    try:
        state = solve_multitone(data["x"], data["xq"], data["omegas"], data["frame_time"])
    except KeyError as exc:
        raise DomainError(f"samples file missing field {exc}") from exc
    payload = {"omegas": list(state.omegas), "amplitudes": list(state.amps),
               "phases_rad": list(state.phases)}
    _emit_json(payload, run.out)
    return 0


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lissscan",
                                     description="Resonant-scanner trajectory design toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="select a single-tone design near resonance")
    p.add_argument("--r", required=True, help="resonance ratio, decimal or p/q")
    p.add_argument("--m", required=True, type=int, help="frame time in y cycles")
    p.add_argument("--baseline", action="store_true",
                   help="use the every-frame repeating rule instead")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("metrics", help="fill-factor and scanning range of a design")
    p.add_argument("--design", required=True, help="design JSON (from the design command)")
    p.add_argument("--scanner", required=True, help="scanner config JSON")
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--n-samples", type=int, default=N_SAMPLES_DEFAULT)
    p.add_argument("--grid", type=int, default=N_GRID_DEFAULT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="evaluate both rules over an (r, m) grid")
    p.add_argument("--r-min", required=True)
    p.add_argument("--r-max", required=True)
    p.add_argument("--r-step", required=True)
    p.add_argument("--m", required=True, help="comma-separated frame times")
    p.add_argument("--scanner", help="scanner config JSON (quality factors)")
    p.add_argument("--n-samples", type=int, default=N_SAMPLES_DEFAULT)
    p.add_argument("--grid", type=int, default=N_GRID_DEFAULT)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="focus a multi-tone pattern on a weighted region")
    p.add_argument("--scanner", required=True)
    p.add_argument("--roi", required=True, help="weight map (PGM or CSV)")
    p.add_argument("--tones", type=int, default=5, choices=(3, 5))
    p.add_argument("--m", type=int, default=7)
    p.add_argument("--n-samples", type=int, default=500)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--constraint", default="rms", choices=("rms", "absolute"))
    p.add_argument("--y-single-tone", action="store_true")
    p.add_argument("--init", help="warm-start params JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output params JSON")
    p.add_argument("--trace", help="optional loss trace CSV")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("phase-sim", help="simulate drift of the oscillator phase")
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--scanner", required=True)
    p.add_argument("--duration", required=True, type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output trace CSV")
    p.set_defaults(func=cmd_phase_sim)

    p = sub.add_parser("phase-solve", help="recover 3-tone amplitudes and phases")
    p.add_argument("--samples", required=True, help="quadrature samples JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_phase_solve)

    return parser


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own message; keep its code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except LissscanError as exc:
        print(f"error:{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch())
