"""Command-line shell: load a scenario file, run one analysis command,
write CSV artifacts and a key-value + JSON report.

Exit codes: 0 success, 2 validation failure, 3 numerical failure,
4 infeasible inputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import noise as nz
from .detection import (
    measured_noise_ratio,
    select_measurement_frequency,
    simulate_shot_reference,
    simulate_zero_span,
    sweep_frequency,
)
from .errors import DomainError, ToolError
from .fitting import (
    PumpSweepPoint,
    fit_pump_sweep,
    grid_search_optimal_pump,
    loss_budget_report,
    optimal_pump_power,
    source_squeezing_estimate,
)
from .loop import bode, log_frequency_grid, select_shift_frequency, stability_margins
from .scenario import load_scenario

REPORT_SCHEMA_VERSION = 1

COMMANDS = (
    "simulate",
    "sweep",
    "bode",
    "margins",
    "select-freq",
    "fit",
    "optimize",
    "budget",
    "report",
)


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


class RunReport:
    """Accumulates results and warnings for one command invocation and can
    render itself as key-value text or JSON."""

    def __init__(self, command: str, digest: str, seed: int):
        self.data = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool_version": __version__,
            "command": command,
            "scenario_digest": digest,
            "seed": seed,
            "results": {},
            "warnings": [],
        }

    def add(self, key: str, value):
        self.data["results"][key] = value

    def warn(self, message: str):
        self.data["warnings"].append(message)

    def as_kv(self) -> str:
        lines = [
            f"tool_version = {self.data['tool_version']}",
            f"command = {self.data['command']}",
            f"scenario_digest = {self.data['scenario_digest']}",
            f"seed = {self.data['seed']}",
        ]
        lines += [f"{k} = {_fmt(v)}" for k, v in self.data["results"].items()]
        lines += [f"warning = {w}" for w in self.data["warnings"]]
        return "\n".join(lines) + "\n"

    def as_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def as_csv(self) -> str:
        lines = ["key,value"]
        lines += [f"{k},{_fmt(v)}" for k, v in self.data["results"].items()]
        return "\n".join(lines) + "\n"


def _write_trace_csv(path: Path, trace):
    lines = [f"# scenario_digest={trace.scenario_digest} seed={trace.seed} label={trace.label}"]
    lines.append("axis,value_dbm")
    lines += [f"{_fmt(a)},{_fmt(v)}" for a, v in zip(trace.axis, trace.values_dbm)]
    path.write_text("\n".join(lines) + "\n")


def _write_bode_csv(path: Path, points):
    lines = ["frequency_hz,gain_db,phase_deg"]
    lines += [f"{_fmt(p.frequency_hz)},{_fmt(p.gain_db)},{_fmt(p.phase_deg)}" for p in points]
    path.write_text("\n".join(lines) + "\n")


def _read_pump_sweep_csv(path: Path) -> list[PumpSweepPoint]:
    points = []
    for i, line in enumerate(path.read_text().splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if i == 0 and line.startswith("pump_w"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ToolError(f"{path}:{i + 1}: expected pump_w,squeezing_db,antisqueezing_db")
        points.append(
            PumpSweepPoint(
                pump_power_w=float(parts[0]),
                squeezing_db=float(parts[1]),
                anti_squeezing_db=float(parts[2]),
            )
        )
    return points


def _cmd_simulate(bundle, report, out_dir, args):
    s = bundle.scenario
    trace = simulate_zero_span(s)
    shot = simulate_shot_reference(s)
    _write_trace_csv(out_dir / "zero_span.csv", trace)
    _write_trace_csv(out_dir / "zero_span_shot.csv", shot)
    mean_db = 10.0 * math.log10(np.mean(10.0 ** (trace.values_dbm / 10.0)))
    shot_db = 10.0 * math.log10(np.mean(10.0 ** (shot.values_dbm / 10.0)))
    report.add("trace_points", s.analyzer.points)
    report.add("video_averages", s.analyzer.video_averages)
    report.add("trace_mean_dbm", mean_db)
    report.add("shot_mean_dbm", shot_db)
    report.add("relative_mean_db", mean_db - shot_db)
    locked, anti = measured_noise_ratio(s, s.analyzer.center_frequency_hz)
    report.add("model_locked_db", nz.to_db(locked))
    report.add("model_anti_db", nz.to_db(anti))


def _cmd_sweep(bundle, report, out_dir, args):
    sweep = sweep_frequency(
        bundle.scenario, bundle.sweep_f_min_hz, bundle.sweep_f_max_hz, bundle.sweep_points
    )
    for name, trace in (
        ("squeezed", sweep.squeezed),
        ("shot", sweep.shot),
        ("circuit", sweep.circuit),
        ("floor", sweep.floor),
    ):
        _write_trace_csv(out_dir / f"sweep_{name}.csv", trace)
    best = select_measurement_frequency(sweep)
    report.add("best_frequency_hz", best)
    report.add("max_clearance_db", float(np.max(sweep.clearance_db())))


def _cmd_bode(bundle, report, out_dir, args):
    grid = log_frequency_grid()
    for loop in bundle.loops:
        points = bode(loop, grid)
        _write_bode_csv(out_dir / f"bode_{loop.kind}.csv", points)
        report.add(f"{loop.kind}_points", len(points))


def _cmd_margins(bundle, report, out_dir, args):
    for loop in bundle.loops:
        m = stability_margins(loop)
        prefix = loop.kind
        report.add(f"{prefix}_phase_crossover_hz", m.phase_crossover_hz)
        report.add(f"{prefix}_gain_margin_db", m.gain_margin_db)
        report.add(f"{prefix}_gain_crossover_hz", m.gain_crossover_hz)
        report.add(f"{prefix}_phase_margin_deg", m.phase_margin_deg)
        if not m.stable:
            report.warn(f"{prefix}: loop margins indicate instability")


def _cmd_select_freq(bundle, report, out_dir, args):
    shift = select_shift_frequency(
        list(bundle.loops),
        list(bundle.shift_candidates_hz),
        min_gain_margin_db=bundle.min_gain_margin_db,
        min_phase_margin_deg=bundle.min_phase_margin_deg,
    )
    report.add("shift_frequency_hz", shift)
    from .loop import demod_frequency

    report.add("opa_probe_demod_hz", demod_frequency(shift, "opa_probe"))
    report.add("probe_lo_demod_hz", demod_frequency(shift, "probe_lo"))


def _cmd_fit(bundle, report, out_dir, args):
    if not args.data:
        raise DomainError("fit requires --data CSV (pump_w,squeezing_db,antisqueezing_db)")
    data = _read_pump_sweep_csv(Path(args.data))
    result = fit_pump_sweep(data, bounds=bundle.fit_bounds)
    report.add("transmittance", result.transmittance)
    report.add("shg_efficiency_per_watt", result.shg_efficiency)
    report.add("jitter_deg", result.jitter_deg)
    report.add("residual_db2", result.residual)
    report.add("iterations", result.iterations)
    report.add("converged", result.converged)


def _cmd_optimize(bundle, report, out_dir, args):
    s = bundle.scenario
    eta = s.opa.transmittance * s.detection_transmittance
    alpha = s.opa.shg_efficiency
    theta = s.jitter.theta
    op = optimal_pump_power(eta, alpha, theta, detection_transmittance=s.detection_transmittance)
    oracle = grid_search_optimal_pump(eta, alpha, theta)
    report.add("optimal_pump_w", op.pump_power_w)
    report.add("grid_oracle_pump_w", oracle)
    report.add("oracle_gap_w", abs(op.pump_power_w - oracle))
    report.add("predicted_squeezing_db", op.squeezing_db)
    report.add("predicted_anti_squeezing_db", op.anti_squeezing_db)
    report.add("source_squeezing_db", op.source_squeezing_db)


def _cmd_budget(bundle, report, out_dir, args):
    s = bundle.scenario
    rep = loss_budget_report(
        s.detection_budget, s.detector, s.analyzer.center_frequency_hz
    )
    for label, loss in rep.elements:
        report.add(f"loss_{label}", loss)
    report.add("circuit_equiv_loss", rep.circuit_equiv_loss)
    report.add("multiplicative_transmittance", rep.multiplicative_transmittance)
    report.add("additive_total_loss", rep.additive_total_loss)
    if rep.discrepancy > 1e-12:
        report.warn(
            f"additive total overstates the loss by {rep.discrepancy:.6f} "
            "versus multiplicative composition"
        )


def _cmd_report(bundle, report, out_dir, args):
    s = bundle.scenario
    locked, anti = measured_noise_ratio(s, s.analyzer.center_frequency_hz)
    report.add("measured_squeezing_db", nz.to_db(locked))
    report.add("measured_anti_squeezing_db", nz.to_db(anti))
    pair = nz.jitter_mix(
        nz.apply_loss(nz.opa_output_variances(s.opa), s.detection_transmittance), s.jitter
    )
    src = source_squeezing_estimate(pair, s.detection_transmittance)
    report.add("source_squeezing_db", nz.to_db(src.sq))
    report.add("source_anti_squeezing_db", nz.to_db(src.anti))
    _cmd_margins(bundle, report, out_dir, args)
    _cmd_budget(bundle, report, out_dir, args)


_DISPATCH = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "bode": _cmd_bode,
    "margins": _cmd_margins,
    "select-freq": _cmd_select_freq,
    "fit": _cmd_fit,
    "optimize": _cmd_optimize,
    "budget": _cmd_budget,
    "report": _cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opasim",
        description="Squeezed-light experiment simulator and design toolkit",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("scenario", help="scenario file path")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--out-dir", default=".", help="directory for artifacts")
    parser.add_argument("--format", choices=("csv", "kv"), default="kv",
                        help="stdout format for the report")
    parser.add_argument("--quiet", action="store_true", help="suppress stdout report")
    parser.add_argument("--data", default=None, help="pump-sweep CSV for the fit command")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        bundle = load_scenario(args.scenario)
        if args.seed is not None:
            bundle = dataclasses.replace(
                bundle,
                scenario=dataclasses.replace(
                    bundle.scenario,
                    analyzer=dataclasses.replace(bundle.scenario.analyzer, seed=args.seed),
                ),
            )
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report = RunReport(args.command, bundle.scenario.digest(), bundle.scenario.analyzer.seed)
        _DISPATCH[args.command](bundle, report, out_dir, args)
        (out_dir / f"{args.command.replace('-', '_')}_report.json").write_text(report.as_json())
        if not args.quiet:
            sys.stdout.write(report.as_csv() if args.format == "csv" else report.as_kv())
        return 0
    except ToolError as exc:
        sys.stderr.write(f"error [{exc.category}]: {exc}\n")
        return exc.exit_code


def main() -> None:
    sys.exit(run())
