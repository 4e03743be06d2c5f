"""Measurement drivers: lifetime, Rabi, Ramsey, transfer scans, sideband gate.

Each driver assembles a pulse schedule, runs a noise ensemble, applies the
readout model, and returns an :class:`ExperimentResult` with a curve fit
where one is meaningful.

Scans over hold or drive duration reuse one simulation per trajectory
("record and branch"): the trunk (ramp-in plus the longest hold) is evolved
once with the state and noise value recorded at every requested duration,
then a short tail (ramp-out plus readout pulse) is branched from each record.
Tails are compiled once and re-phased to their branch time, which keeps
detuned rf tones coherent with the global clock, and each branch draws its
noise continuation from an independent stream keyed by (seed, trajectory,
branch), so results do not depend on worker count or branch order.

State chain: a resonant pi pulse moves |0> to |-1>, the half ramp carries
|-1> into the protected dressed state, the completing ramp carries it on to
|+1>, and a final pi pulse swaps |+1> with |0>.  A dark (|0>) readout
therefore means the protected state survived, so every curve here is a |0>
population, as measured.  Long holds use a coarser step than driven
segments: the per-step propagator is exact, so the step only has to resolve
the protection gap (12 steps per gap period keeps the zero-order-hold
spectral bias at the gap below 2.5 percent) and the noise correlation time.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DIM_BARE, basis_state, dressed_transform
from .fitting import FitResult, fit_curve
from .hamiltonian import (CombSpec, TrapMode, comb_stark_shifts,
                          sideband_channels)
from .noise import OUNoise, calibrate_bare_t2
from .propagate import (compile_schedule, compile_static, evolve,
                        sample_schedule_noise)
from .schedule import (Schedule, StirapParams, _rf_gate_drives, pi_pulse,
                       stirap_hold, stirap_ramp_in, stirap_ramp_out,
                       stirap_schedule)

TAU = 2.0 * math.pi

_MARK_TOL = 1e-9
_SHOT_SALT = 21511  # keeps the shot-sampling stream off the trajectory streams


class FockTruncationError(RuntimeError):
    """Motional population reached the top Fock level; results unusable."""


@dataclass(frozen=True)
class Spam:
    """State-preparation and measurement error model.

    prep_error: probability the preparation fully depolarizes over the four
        levels (a depolarized shot still lands in the readout channel with
        probability 1/4).
    dark_misread: probability the target outcome is read as its opposite.
    bright_misread: probability a non-target outcome is read as the target.
    """

    prep_error: float = 0.0
    dark_misread: float = 0.0
    bright_misread: float = 0.0

    def __post_init__(self):
        for name in ("prep_error", "dark_misread", "bright_misread"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")

    @property
    def total(self) -> float:
        return self.prep_error + self.dark_misread + self.bright_misread

    def apply(self, p):
        """Expected measured probability given true probability p."""
        p = np.asarray(p, dtype=float)
        good = p * (1.0 - self.dark_misread) + (1.0 - p) * self.bright_misread
        depol = 0.25 * (1.0 - self.dark_misread) + 0.75 * self.bright_misread
        out = (1.0 - self.prep_error) * good + self.prep_error * depol
        return float(out) if out.ndim == 0 else out

    def contrast_scale(self) -> float:
        """Slope of apply(): how much true contrast survives readout."""
        return (1.0 - self.prep_error) * (
            1.0 - self.dark_misread - self.bright_misread)


@dataclass(frozen=True)
class ExperimentResult:
    """One measured (or simulated) curve plus its fit and provenance."""

    name: str
    x: np.ndarray
    x_label: str
    y: np.ndarray
    y_stderr: np.ndarray
    series: dict = field(default_factory=dict)
    fit: FitResult | None = None
    meta: dict = field(default_factory=dict)


def _stream_rng(seed, *key):
    words = (int(seed),) + tuple(int(k) for k in key)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def _apply_readout(p_true, stderr, spam, n_reps, rng):
    """SPAM-distorted, optionally shot-sampled curve (y, y_err, counts)."""
    spam = spam or Spam()
    y = np.asarray(spam.apply(p_true), dtype=float)
    y_err = abs(spam.contrast_scale()) * np.asarray(stderr, dtype=float)
    counts = None
    if n_reps:
        counts = rng.binomial(int(n_reps), np.clip(y, 0.0, 1.0))
        y = counts / float(n_reps)
        y_err = np.sqrt(y * (1.0 - y) / float(n_reps))
    return y, y_err, counts


def _gap_step(p: StirapParams, steps_per_gap: int = 12) -> float:
    """Hold integration step resolving the dressed protection gap."""
    gap = p.crossing_rabi / math.sqrt(2.0)
    return TAU / (steps_per_gap * gap)


def _hold_pieces(p: StirapParams, t1: float, marks, rf=()):
    """Hold segments cut so every mark lands on a block boundary."""
    segs = []
    prev = 0.0
    for m in marks:
        if m < prev - _MARK_TOL:
            raise ValueError("scan durations must be nondecreasing")
        if m > prev + _MARK_TOL:
            segs.append(stirap_hold(p, t1 + prev, m - prev, extra_drives=rf))
            prev = m
    return segs


def _prep_and_ramp(p: StirapParams):
    """|0> -> |-1> pi pulse followed by the half ramp into the dressed state."""
    prep = pi_pulse("-1<->0", p.peak_rabi)
    ramp = stirap_ramp_in(p).shifted(prep.end)
    return prep, ramp


def _readout_tail(p: StirapParams, start: float) -> Schedule:
    """Ramp-out plus the |+1> -> |0> mapping pulse."""
    ramp = stirap_ramp_out(p, start)
    mapper = pi_pulse("+1<->0", p.peak_rabi, start=ramp.end)
    return Schedule((ramp, mapper))


def _branch_worker(args):
    (trunk, tails, mark_rows, psi0, model, seed, indices, vec) = args
    out = np.empty((len(indices), len(tails)))
    for row, t_idx in enumerate(indices):
        rng = _stream_rng(seed, t_idx, 0)
        noise = (sample_schedule_noise(trunk, model, rng)
                 if model is not None else None)
        traj = evolve(trunk, psi0, noise)
        for im, (tail, r_idx) in enumerate(zip(tails, mark_rows)):
            if model is not None:
                rng_b = _stream_rng(seed, t_idx, im + 1)
                noise_b = sample_schedule_noise(
                    tail, model, rng_b, x0=traj.noise_trace[r_idx])
            else:
                noise_b = None
            end = evolve(tail, traj.states[r_idx], noise_b)
            out[row, im] = abs(vec.conj() @ end.states[-1]) ** 2
    return indices, out


def _branch_scan(trunk, tails, mark_times, psi0, model, n_traj, seed, vec,
                 workers=1):
    """Mean and stderr of the tail observable at each branch point."""
    boundary_times = [trunk.start] + [b.end for b in trunk.blocks]
    mark_rows = []
    for t in mark_times:
        gaps = [abs(bt - t) for bt in boundary_times]
        i = int(np.argmin(gaps))
        if gaps[i] > _MARK_TOL * max(1.0, abs(t)):
            raise ValueError(f"branch time {t} is not a trunk block boundary")
        mark_rows.append(i)
    n_traj = 1 if model is None else int(n_traj)
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    indices = list(range(n_traj))
    if workers and workers > 1 and n_traj > 1:
        chunks = [indices[i::workers] for i in range(workers)]
        chunks = [c for c in chunks if c]
        args = [(trunk, tails, mark_rows, psi0, model, seed, c, vec)
                for c in chunks]
        pops = np.empty((n_traj, len(tails)))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, out in pool.map(_branch_worker, args):
                pops[idx] = out
    else:
        _, pops = _branch_worker(
            (trunk, tails, mark_rows, psi0, model, seed, indices, vec))
    mean = pops.mean(axis=0)
    if n_traj > 1:
        stderr = pops.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr, n_traj


def _duration_scan(p, durations, rf, noise, n_traj, seed, workers, hold_dt):
    """Shared trunk/tail assembly for hold- and drive-duration scans."""
    marks = np.asarray(durations, dtype=float)
    if marks.ndim != 1 or marks.size == 0:
        raise ValueError("need a 1-D array of scan durations")
    if marks.min() < 0:
        raise ValueError("scan durations must be >= 0")
    hold_dt = hold_dt or _gap_step(p)
    prep, ramp_in = _prep_and_ramp(p)
    t1 = ramp_in.end
    pieces = _hold_pieces(p, t1, marks, rf=rf)
    trunk = compile_schedule(Schedule((prep, ramp_in, *pieces)),
                             dt={"hold": hold_dt})
    base = compile_schedule(_readout_tail(p, t1 + marks[0]))
    tails = [base if m == marks[0] else base.shifted(m - marks[0])
             for m in marks]
    psi0 = basis_state("0")
    vec = basis_state("0")
    mean, stderr, used = _branch_scan(
        trunk, tails, t1 + marks, psi0, noise, n_traj, seed, vec, workers)
    return marks, mean, stderr, used, hold_dt


def _noise_meta(noise):
    if noise is None:
        return None
    return {"amplitude": noise.amplitude,
            "correlation_time": noise.correlation_time}


def calibrated_noise(t2: float = 5.3e-3, correlation_time: float = 100e-6,
                     n_traj: int = 400, seed: int = 20260815) -> OUNoise:
    """Zeeman noise whose bare-superposition coherence time equals t2."""
    amp = calibrate_bare_t2(t2, correlation_time, n_traj=n_traj, seed=seed)
    return OUNoise(amplitude=amp, correlation_time=correlation_time)


def run_lifetime(f_rabi: float = 36.5e3, holds=None, noise: OUNoise | None = None,
                 *, n_traj: int = 400, seed: int = 20260815,
                 width_cycles: float = 5, spam: Spam | None = None,
                 n_reps: int = 0, workers: int = 1, hold_dt: float | None = None,
                 fit: bool = True) -> ExperimentResult:
    """Protected-state survival vs hold time, with an exponential fit.

    The state is prepared adiabatically, parked at the crossing for each
    hold, ramped out, and read as the |0> population.
    """
    p = StirapParams(f_rabi=f_rabi, width_cycles=width_cycles,
                     relative_phase=math.pi)
    if holds is None:
        holds = np.linspace(0.2, 1.6, 8)
    x, mean, stderr, used, dt = _duration_scan(
        p, holds, (), noise, n_traj, seed, workers, hold_dt)
    y, y_err, counts = _apply_readout(
        mean, stderr, spam, n_reps, _stream_rng(seed, _SHOT_SALT))
    series = {"survival": mean, "survival_stderr": stderr}
    if counts is not None:
        series["counts"] = counts
    fitres = None
    if fit and x.size >= 6:
        sigma = y_err if np.any(y_err > 0) else None
        fitres = fit_curve("exponential", x, y, sigma=sigma)
    return ExperimentResult(
        name="lifetime", x=x, x_label="hold time (s)", y=y, y_stderr=y_err,
        series=series, fit=fitres,
        meta={"f_rabi": f_rabi, "n_traj": used, "seed": seed,
              "hold_dt": dt, "noise": _noise_meta(noise),
              "spam": None if spam is None else vars(spam).copy(),
              "n_reps": n_reps, "width_cycles": width_cycles})


def run_rabi(f_rabi: float = 31.8e3, rf_rabi: float = TAU * 500.0,
             durations=None, noise: OUNoise | None = None, *,
             n_traj: int = 100, seed: int = 20260815,
             width_cycles: float = 7, spam: Spam | None = None,
             n_reps: int = 0, workers: int = 1, hold_dt: float | None = None,
             fit: bool = True) -> ExperimentResult:
    """Rabi flopping between the protected state and |0'> during the hold.

    The rf pair addresses both rf transitions with the phases that couple
    the adiabatically prepared superposition; the |0> population then flops
    at sqrt(2) * rf_rabi / 2 pi.
    """
    if rf_rabi <= 0:
        raise ValueError("rf_rabi must be positive")
    p = StirapParams(f_rabi=f_rabi, width_cycles=width_cycles,
                     relative_phase=math.pi)
    flop_hz = math.sqrt(2.0) * rf_rabi / TAU
    if durations is None:
        durations = np.linspace(0.0, 4.0 / flop_hz, 41)
    rf = _rf_gate_drives(p, rf_rabi)
    x, mean, stderr, used, dt = _duration_scan(
        p, durations, rf, noise, n_traj, seed, workers, hold_dt)
    y, y_err, counts = _apply_readout(
        mean, stderr, spam, n_reps, _stream_rng(seed, _SHOT_SALT))
    series = {"population": mean, "population_stderr": stderr}
    if counts is not None:
        series["counts"] = counts
    fitres = None
    if fit and x.size >= 10:
        scale = (spam or Spam()).contrast_scale()
        guess = {"amplitude": 0.5 * scale, "frequency": flop_hz,
                 "phase": 0.5 * math.pi, "tau": 10.0 * float(x.max() or 1.0),
                 "offset": float(np.mean(y))}
        sigma = y_err if np.any(y_err > 0) else None
        fitres = fit_curve("damped_sinusoid", x, y, sigma=sigma, guess=guess)
    return ExperimentResult(
        name="rabi", x=x, x_label="rf duration (s)", y=y, y_stderr=y_err,
        series=series, fit=fitres,
        meta={"f_rabi": f_rabi, "rf_rabi": rf_rabi,
              "expected_frequency": flop_hz, "n_traj": used, "seed": seed,
              "hold_dt": dt, "noise": _noise_meta(noise),
              "spam": None if spam is None else vars(spam).copy(),
              "n_reps": n_reps, "width_cycles": width_cycles})


def run_ramsey(f_rabi: float = 37.3e3, rf_rabi: float = TAU * 200.0,
               rf_detuning: float = TAU * 144.4, gaps=None,
               noise: OUNoise | None = None, *, n_traj: int = 100,
               seed: int = 20260815, width_cycles: float = 7,
               spam: Spam | None = None, n_reps: int = 0, workers: int = 1,
               hold_dt: float | None = None, fit: bool = True,
               fit_model: str = "sinusoid") -> ExperimentResult:
    """Two pi/2 rf pulses split by a variable gap; fringes at rf_detuning.

    The second pulse is re-phased to its absolute start time, so the fringe
    in the gap duration appears at exactly the programmed detuning.
    """
    if rf_rabi <= 0:
        raise ValueError("rf_rabi must be positive")
    p = StirapParams(f_rabi=f_rabi, width_cycles=width_cycles,
                     relative_phase=math.pi)
    fringe_hz = rf_detuning / TAU
    if gaps is None:
        gaps = np.linspace(0.0, 4.0 / max(fringe_hz, 1.0), 49)
    marks = np.asarray(gaps, dtype=float)
    if marks.ndim != 1 or marks.size == 0:
        raise ValueError("need a 1-D array of gap durations")
    if marks.min() < 0:
        raise ValueError("gap durations must be >= 0")
    hold_dt = hold_dt or _gap_step(p)
    dt_map = {"hold": hold_dt}
    rf = _rf_gate_drives(p, rf_rabi, rf_detuning)
    t_half = math.pi / (2.0 * math.sqrt(2.0) * rf_rabi)
    prep, ramp_in = _prep_and_ramp(p)
    t1 = ramp_in.end
    pulse1 = stirap_hold(p, t1, t_half, extra_drives=rf)
    t_free = pulse1.end
    pieces = _hold_pieces(p, t_free, marks)
    trunk = compile_schedule(Schedule((prep, ramp_in, pulse1, *pieces)),
                             dt=dt_map)

    pulse2 = stirap_hold(p, t_free + marks[0], t_half, extra_drives=rf)
    tail_sched = Schedule((pulse2,)).then(_readout_tail(p, pulse2.end))
    base = compile_schedule(tail_sched, dt=dt_map)
    tails = [base if m == marks[0] else base.shifted(m - marks[0])
             for m in marks]
    psi0 = basis_state("0")
    vec = basis_state("0")
    mean, stderr, used = _branch_scan(
        trunk, tails, t_free + marks, psi0, noise, n_traj, seed, vec, workers)
    y, y_err, counts = _apply_readout(
        mean, stderr, spam, n_reps, _stream_rng(seed, _SHOT_SALT))
    series = {"population": mean, "population_stderr": stderr}
    if counts is not None:
        series["counts"] = counts
    fitres = None
    if fit and marks.size >= 2 * (4 if fit_model == "sinusoid" else 5):
        scale = (spam or Spam()).contrast_scale()
        guess = {"amplitude": 0.5 * scale, "frequency": fringe_hz,
                 "phase": -0.5 * math.pi, "offset": float(np.mean(y))}
        if fit_model == "damped_sinusoid":
            guess["tau"] = 10.0 * float(marks.max() or 1.0)
        sigma = y_err if np.any(y_err > 0) else None
        fitres = fit_curve(fit_model, marks, y, sigma=sigma, guess=guess)
    return ExperimentResult(
        name="ramsey", x=marks, x_label="free-evolution gap (s)",
        y=y, y_stderr=y_err, series=series, fit=fitres,
        meta={"f_rabi": f_rabi, "rf_rabi": rf_rabi,
              "rf_detuning": rf_detuning, "expected_frequency": fringe_hz,
              "n_traj": used, "seed": seed, "hold_dt": hold_dt,
              "noise": _noise_meta(noise),
              "spam": None if spam is None else vars(spam).copy(),
              "n_reps": n_reps, "width_cycles": width_cycles})


def _with_detuning_split(schedule: Schedule, split: float) -> Schedule:
    """Detune the two dressing tones by +/- split/2 (asymmetry robustness)."""
    segs = []
    for seg in schedule.segments:
        drives = []
        for d in seg.drives:
            if d.transition == "+1<->0":
                d = replace(d, detuning=+0.5 * split)
            elif d.transition == "-1<->0":
                d = replace(d, detuning=-0.5 * split)
            drives.append(d)
        segs.append(replace(seg, drives=tuple(drives)))
    return Schedule(tuple(segs), dict(schedule.markers))


def transfer_fidelity(f_rabi: float = 36.5e3, *, width_cycles: float = 5,
                      sep_cycles: float = 6, substeps: int = 10,
                      detuning_split: float = 0.0) -> float:
    """Noise-free |0> dark probability for the full prepare/read-out chain.

    Runs prep pulse, both ramps (no hold), and the mapping pulse, so the
    number reflects everything the plateau measurement is sensitive to
    except state-detection errors.
    """
    p = StirapParams(f_rabi=f_rabi, width_cycles=width_cycles,
                     sep_cycles=sep_cycles, substeps=substeps)
    prep, ramp_in = _prep_and_ramp(p)
    sched = Schedule((prep, ramp_in)).then(_readout_tail(p, ramp_in.end))
    if detuning_split:
        sched = _with_detuning_split(sched, detuning_split)
    compiled = compile_schedule(sched, dt={"rampIn": p.dt, "rampOut": p.dt})
    traj = evolve(compiled, basis_state("0"))
    return float(abs(basis_state("0").conj() @ traj.states[-1]) ** 2)


def scan_stirap(points, f_rabi: float = 36.5e3, *, spam: Spam | None = None,
                n_reps: int = 0, seed: int = 20260815) -> ExperimentResult:
    """Noise-free transfer fidelity over pulse-shape points.

    points: iterable of dicts with any of the keys width_cycles,
    sep_cycles, substeps, detuning_split (missing keys take the
    transfer_fidelity defaults).
    """
    points = [dict(pt) for pt in points]
    if not points:
        raise ValueError("need at least one scan point")
    allowed = {"width_cycles", "sep_cycles", "substeps", "detuning_split"}
    cols = {k: [] for k in allowed}
    fid = []
    for pt in points:
        unknown = set(pt) - allowed
        if unknown:
            raise ValueError(f"unknown scan keys {sorted(unknown)}")
        fid.append(transfer_fidelity(f_rabi, **pt))
        defaults = {"width_cycles": 5, "sep_cycles": 6, "substeps": 10,
                    "detuning_split": 0.0}
        for k in allowed:
            cols[k].append(pt.get(k, defaults[k]))
    fid = np.asarray(fid)
    y, y_err, counts = _apply_readout(
        fid, np.zeros_like(fid), spam, n_reps, _stream_rng(seed, _SHOT_SALT))
    series = {k: np.asarray(v) for k, v in cols.items()}
    series["fidelity"] = fid
    if counts is not None:
        series["counts"] = counts
    return ExperimentResult(
        name="stirap_scan", x=np.arange(len(points), dtype=float),
        x_label="scan point", y=y, y_stderr=y_err, series=series, fit=None,
        meta={"f_rabi": f_rabi, "seed": seed, "n_reps": n_reps,
              "spam": None if spam is None else vars(spam).copy()})


def default_scan_points():
    """Three one-dimensional bands around the reference pulse shape.

    Substep band at width 10, a width band along the scaled family
    sep = 1.5 * width (same waveform, stretched; the ratio sits mid-plateau
    of the separation band), and a separation band at width 10.
    """
    pts = [{"width_cycles": 10, "sep_cycles": 12, "substeps": s}
           for s in (10, 20, 40)]
    pts += [{"width_cycles": w, "sep_cycles": 1.5 * w}
            for w in (4, 6, 8, 10, 14, 20)]
    pts += [{"width_cycles": 10, "sep_cycles": s} for s in (10, 12, 15, 20)]
    return pts


# ---------------------------------------------------------------------------
# gradient-mediated sideband gate

def _mqg_channels(mode: TrapMode, dressing_rabi: float, rf_rabi: float,
                  rf_detuning: float):
    """Channel decomposition of the full gate model (4 * n_fock levels).

    Matches build_mqg exactly: motional + gradient static terms, a resonant
    dressing pair, and an equal-phase rf pair detuned by rf_detuning.
    """
    from .hamiltonian import gradient_operator, motional_operator

    n_fock = mode.n_fock
    iden = np.eye(n_fock)

    def lifted(transition):
        upper, lower = transition.split("<->")
        op = np.outer(basis_state(upper), basis_state(lower).conj())
        return np.kron(op, iden)

    static = motional_operator(mode) + gradient_operator(mode)
    channels = [
        (lifted("-1<->0"), 0.5 * dressing_rabi, 0.0, 0.0),
        (lifted("+1<->0"), 0.5 * dressing_rabi, 0.0, 0.0),
        (lifted("-1<->0'"), 0.5 * rf_rabi, rf_detuning, 0.0),
        (lifted("+1<->0'"), 0.5 * rf_rabi, rf_detuning, 0.0),
    ]
    return static, channels


def _fock_level_populations(states, n_fock):
    """Population per Fock level, summed over internal states."""
    probs = np.abs(np.asarray(states)) ** 2
    return probs.reshape(len(states), DIM_BARE, n_fock).sum(axis=1)


def run_sideband_gate(nu: float = TAU * 200e3, eta: float = 0.05,
                      dressing_rabi: float = TAU * 20e3,
                      omega_g: float | None = None, n_fock: int = 8,
                      *, delta: float = 0.0, n_steps_full: int = 20000,
                      record_every: int = 50,
                      top_level_limit: float = 1e-4) -> ExperimentResult:
    """Blue-sideband flop |0', 0> <-> |D, 1>: full model vs effective model.

    The full model keeps the motional mode, gradient, dressing pair, and
    equal-phase rf pair detuned to the gradient-shifted first sideband; the
    effective model is the first-order sideband coupling alone.  Aborts if
    the top Fock level acquires population above top_level_limit.
    """
    if omega_g is None:
        omega_g = dressing_rabi / 20.0
    mode = TrapMode.from_eta(nu=nu, eta=eta, n_fock=n_fock)
    kappa = math.sqrt(2.0) * eta * omega_g
    t_pi = math.pi / (2.0 * kappa)

    # effective model, integrated in the sideband frame; the step has to
    # resolve the sideband-tone phase nu*(1-eta^2)*dt << 1 or the piecewise
    # constant coefficients dilute the coupling by sinc(nu*dt/2)
    stat_eff, chan_eff = sideband_channels(mode, omega_g, delta,
                                           relative_phase=0.0)
    dt_eff = t_pi / float(n_steps_full)
    eff = compile_static(stat_eff, chan_eff, t_pi, dt_eff, name="effective")
    frame = dressed_transform(0.0)
    fock0 = np.zeros(n_fock)
    fock0[0] = 1.0
    psi0 = np.kron(frame.column("0'"), fock0)
    traj_eff = evolve(eff, psi0, record_every=record_every)

    # full model: rf on the gradient-shifted blue sideband
    rf_detuning = mode.nu * (1.0 - eta * eta) + delta
    stat_full, chan_full = _mqg_channels(mode, dressing_rabi,
                                         2.0 * omega_g, rf_detuning)
    dt_full = t_pi / float(n_steps_full)
    full = compile_static(stat_full, chan_full, t_pi, dt_full, name="full")
    traj_full = evolve(full, psi0, record_every=record_every)

    top = _fock_level_populations(traj_full.states, n_fock)[:, -1].max()
    if top > top_level_limit:
        raise FockTruncationError(
            f"top Fock level reached population {top:.2e} "
            f"(limit {top_level_limit:.0e}); increase n_fock")

    # rows of these are the |D, k> and |B, k> basis vectors
    dark = np.kron(frame.column("D"), np.eye(n_fock))
    bright = np.kron(frame.column("B"), np.eye(n_fock))

    def pops(states, rows):
        return (np.abs(np.asarray(states) @ rows.conj().T) ** 2).sum(axis=1)

    # effective samples land on the same grid only if strides match; resample
    times = traj_full.times
    p_full = pops(traj_full.states, dark)
    p_eff = np.interp(times, traj_eff.times, pops(traj_eff.states, dark))
    p_bright = pops(traj_full.states, bright)
    err = np.abs(p_full - p_eff)
    return ExperimentResult(
        name="sideband_gate", x=times, x_label="time (s)", y=p_full,
        y_stderr=np.zeros_like(p_full),
        series={"effective": p_eff, "difference": err, "bright": p_bright},
        fit=None,
        meta={"nu": nu, "eta": eta, "dressing_rabi": dressing_rabi,
              "omega_g": omega_g, "n_fock": n_fock, "delta": delta,
              "pi_time": t_pi, "max_abs_difference": float(err.max()),
              "max_bright_population": float(p_bright.max()),
              "carrier_leakage_bound": 4.0 * (omega_g / dressing_rabi) ** 2,
              "top_fock_population": float(top)})


def run_comb(omega: float = TAU * 36.5e3, big_delta: float | None = None,
             peak_rabi: float | None = None) -> dict:
    """Stark-shift budget for a +/- Delta comb line pair and a single line.

    Returns the paired residual differential shift on the protected pair,
    the single-line bare shift, and the Omega^2 / (2 Delta) reference scale.
    """
    if big_delta is None:
        big_delta = 10.0 * omega
    if peak_rabi is None:
        peak_rabi = omega
    pair = CombSpec(ion_count=2, zeeman_step=big_delta,
                    lines=((+big_delta, peak_rabi, 0.0),
                           (-big_delta, peak_rabi, 0.0)))
    single = CombSpec(ion_count=2, zeeman_step=big_delta,
                      lines=((+big_delta, peak_rabi, 0.0),))
    shifts_pair = comb_stark_shifts(pair, omega)
    shifts_single = comb_stark_shifts(single, omega)
    scale = peak_rabi**2 / (2.0 * big_delta)
    return {
        "omega": omega, "big_delta": big_delta, "peak_rabi": peak_rabi,
        "reference_shift": scale,
        "pair_differential_D_0prime": shifts_pair["differential_D_0prime"],
        "pair_bare_B": shifts_pair["bare"]["B"],
        "single_bare_B": shifts_single["bare"]["B"],
        "single_bare_0": shifts_single["bare"]["0"],
        "pair_dressed": shifts_pair["dressed"],
        "single_dressed": shifts_single["dressed"],
    }
