"""Command line runner: parse a config, dispatch the experiment, write
artifacts (CSV/JSON/SVG plus a checksum manifest) deterministically."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (EXPERIMENTS, ConfigError, RunConfig, explain_config,
                     load_document, parse_config)
from .core import basis_state, dressed_transform
from .experiments import (ExperimentResult, FockTruncationError,
                          default_scan_points, run_comb, run_rabi,
                          run_ramsey, run_sideband_gate, scan_stirap)
from .output import write_artifacts

TAU = 2.0 * math.pi
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dressedion",
        description="Dressed-state ion qubit simulator: transfer, protected "
                    "gates, sideband coupling, output artifacts.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, spec in EXPERIMENTS.items():
        # argparse %-expands help strings, so literal % must be doubled
        p = sub.add_parser(name, help=spec.description.replace("%", "%%"),
                           description=spec.description)
        p.add_argument("--config", metavar="PATH",
                       help="YAML config document")
        p.add_argument("--seed", type=int, help="override the RNG seed")
        p.add_argument("--workers", type=int,
                       help="override the process count")
        p.add_argument("--out", help="override the artifact directory")
        p.add_argument("--explain", action="store_true",
                       help="print every effective value with its origin "
                            "and rationale, then exit")
    return parser


def _load_config(args) -> RunConfig:
    doc = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config: no such file {str(path)!r}")
        doc = load_document(path.read_text())
    config = parse_config(doc, experiment=args.experiment)
    overrides = {}
    for name in ("seed", "workers", "out"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        if "workers" in overrides and overrides["workers"] < 1:
            raise ConfigError("workers: must be >= 1")
        config = replace(config, user_keys=config.user_keys | set(overrides),
                         **overrides)
    return config


def _scan_points(config: RunConfig):
    if config.params["points"] is None:
        return default_scan_points()
    points = []
    for point in config.params["points"]:
        point = dict(point)
        if "detuning_split" in point:
            point["detuning_split"] = TAU * point["detuning_split"]
        points.append(point)
    return points


def _fig2_result(config: RunConfig) -> ExperimentResult:
    p = config.params
    points = [{"width_cycles": p["width_cycles"], "sep_cycles": sep,
               "substeps": p["substeps"]} for sep in p["separations"]]
    scan = scan_stirap(points, f_rabi=p["f_rabi"], spam=config.spam,
                       n_reps=p["n_reps"], seed=config.seed)
    series = {"fidelity": scan.series["fidelity"]}
    if "counts" in scan.series:
        series["counts"] = scan.series["counts"]
    return ExperimentResult(
        name="transfer_plateau", x=np.asarray(p["separations"], dtype=float),
        x_label="pulse separation (drive cycles)", y=scan.y,
        y_stderr=scan.y_stderr, series=series, fit=None,
        meta=dict(scan.meta, width_cycles=p["width_cycles"],
                  substeps=p["substeps"]))


def _comb_result(config: RunConfig) -> ExperimentResult:
    p = config.params
    omega = TAU * p["omega"]
    raw = run_comb(
        omega=omega,
        big_delta=None if p["big_delta"] is None else TAU * p["big_delta"],
        peak_rabi=None if p["peak_rabi"] is None else TAU * p["peak_rabi"])
    ref = raw["reference_shift"]
    y = np.array([raw["pair_differential_D_0prime"], raw["single_bare_0"]])
    return ExperimentResult(
        name="comb", x=np.array([0.0, 1.0]),
        x_label="case (0: symmetric pair, 1: single line)", y=y,
        y_stderr=np.zeros(2), series={"reference_shift": np.full(2, ref)},
        fit=None, meta={k: v for k, v in raw.items()})


def _run_custom(config: RunConfig) -> ExperimentResult:
    from .propagate import compile_schedule, ensemble_average, evolve
    from .schedule import (Schedule, StirapParams, _rf_gate_drives, pi_pulse,
                           stirap_hold, stirap_ramp_in, stirap_ramp_out)

    p = config.params
    segments = []
    t = 0.0
    for piece in p["pieces"]:
        kind = piece["type"]
        if kind == "pi":
            seg = pi_pulse(piece["transition"], TAU * piece["f_rabi"],
                           start=t, phase=piece["phase"],
                           fraction=piece["fraction"])
        else:
            sp = StirapParams(f_rabi=piece["f_rabi"],
                              width_cycles=piece["width_cycles"],
                              sep_cycles=piece["sep_cycles"],
                              substeps=piece["substeps"],
                              relative_phase=piece["relative_phase"],
                              width_convention=piece["width_convention"])
            if kind == "ramp_in":
                seg = stirap_ramp_in(sp).shifted(t)
            elif kind == "ramp_out":
                seg = stirap_ramp_out(sp, start=t)
            elif kind == "hold":
                seg = stirap_hold(sp, start=t, duration=piece["duration"])
            else:  # rf_pulse
                drives = _rf_gate_drives(sp, TAU * piece["rf_rabi"],
                                         TAU * piece["rf_detuning"])
                seg = stirap_hold(sp, start=t, duration=piece["duration"],
                                  extra_drives=drives)
        segments.append(seg)
        t = seg.end
    compiled = compile_schedule(Schedule(tuple(segments)))

    frame = dressed_transform(p["relative_phase"])

    def column(label):
        if label in ("0", "0'", "-1", "+1"):
            return basis_state(label)
        return frame.column(label)

    psi0 = column(p["initial_state"])
    obs = column(p["observable"])
    noise_model = config.noise.model() if config.noise else None
    if noise_model is None:
        traj = evolve(compiled, psi0, record_every=p["record_every"])
        times = np.asarray(traj.times)
        y = np.abs(np.asarray(traj.states) @ obs.conj()) ** 2
        stderr = np.zeros_like(y)
        n_traj = 1
    else:
        ens = ensemble_average(compiled, psi0, noise_model,
                               config.noise.n_traj, config.seed,
                               record_every=p["record_every"],
                               observables=[obs], workers=config.workers)
        times, y, stderr = ens.times, ens.mean[0], ens.stderr[0]
        n_traj = config.noise.n_traj
    return ExperimentResult(
        name="custom", x=times, x_label="time (s)", y=y, y_stderr=stderr,
        series={}, fit=None,
        meta={"initial_state": p["initial_state"],
              "observable": p["observable"],
              "relative_phase": p["relative_phase"],
              "n_pieces": len(p["pieces"]), "duration": float(t),
              "n_traj": n_traj, "seed": config.seed})


def run_experiment(config: RunConfig) -> ExperimentResult:
    """Dispatch a validated config to its driver (angular units inside)."""
    p = config.params
    noise = config.noise.model() if config.noise else None
    n_traj = config.noise.n_traj if config.noise else 1
    if config.experiment == "fig2":
        return _fig2_result(config)
    if config.experiment == "fig3a":
        return run_rabi(
            f_rabi=p["f_rabi"], rf_rabi=TAU * p["rf_rabi"],
            durations=np.asarray(p["durations"]), noise=noise,
            n_traj=n_traj, seed=config.seed, width_cycles=p["width_cycles"],
            spam=config.spam, n_reps=p["n_reps"], workers=config.workers)
    if config.experiment == "fig3b":
        return run_ramsey(
            f_rabi=p["f_rabi"], rf_rabi=TAU * p["rf_rabi"],
            rf_detuning=TAU * p["rf_detuning"],
            gaps=np.asarray(p["gaps"]), noise=noise, n_traj=n_traj,
            seed=config.seed, width_cycles=p["width_cycles"],
            spam=config.spam, n_reps=p["n_reps"], workers=config.workers,
            fit_model=p["fit_model"])
    if config.experiment == "stirap-scan":
        return scan_stirap(_scan_points(config), f_rabi=p["f_rabi"],
                           spam=config.spam, n_reps=p["n_reps"],
                           seed=config.seed)
    if config.experiment == "sideband":
        omega_g = None if p["omega_g"] is None else TAU * p["omega_g"]
        return run_sideband_gate(
            nu=TAU * p["nu"], eta=p["eta"],
            dressing_rabi=TAU * p["dressing_rabi"], omega_g=omega_g,
            n_fock=p["n_fock"], delta=TAU * p["delta"],
            n_steps_full=p["n_steps_full"], record_every=p["record_every"],
            top_level_limit=p["top_level_limit"])
    if config.experiment == "comb":
        return _comb_result(config)
    if config.experiment == "custom":
        return _run_custom(config)
    raise ConfigError(f"experiment: no runner for {config.experiment!r}")


def _headline(result: ExperimentResult) -> str:
    meta = result.meta
    if result.name == "sideband_gate":
        return (f"max |full-effective| = {meta['max_abs_difference']:.4f}, "
                f"bright leakage {meta['max_bright_population']:.4f} "
                f"(bound {meta['carrier_leakage_bound']:.4f})")
    if result.name == "comb":
        return (f"pair differential = {result.y[0]:.3e} rad/s, single line "
                f"= {result.y[1]:.3e} rad/s")
    if result.name == "custom":
        return (f"final {meta['observable']!r} population = "
                f"{float(result.y[-1]):.4f} after {meta['duration']:.4g} s")
    if result.name in ("stirap_scan", "transfer_plateau"):
        return (f"fidelity range [{result.y.min():.4f}, "
                f"{result.y.max():.4f}] over {len(result.y)} points")
    if result.fit is not None and result.fit.converged:
        parts = []
        if "frequency" in result.fit.params:
            parts.append(f"fitted frequency {result.fit.params['frequency']:.4f} Hz")
        if "tau" in result.fit.params:
            parts.append(f"fitted tau {result.fit.params['tau']:.4g} s")
        if parts:
            return ", ".join(parts)
    return f"mean level {float(np.mean(result.y)):.4f} over {len(result.y)} points"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.explain:
            for line in explain_config(config):
                print(line)
            return EXIT_OK
        result = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FockTruncationError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    paths = write_artifacts(config.out, result, config)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    print(f"{config.experiment}: {_headline(result)}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
