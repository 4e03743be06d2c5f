"""Pulse schedules: STIRAP ramps with holds, pi pulses, Rabi and Ramsey runs.

A Schedule is an ordered, contiguous tuple of Segments; each segment carries
the drive tones active in it.  Everything is expressed in global time: a
detuned tone's rotating phase exp(-i*(detuning*t + phase)) stays coherent
across segment boundaries, and envelopes are global-time callables, so two
adjacent segments sharing a drive agree exactly at the boundary.

The STIRAP pair uses Gaussian envelopes exp(-((t-center)/width)^2) where
width = pulseWidthCycles/f_rabi is the half-width at 1/e of amplitude
(`width_convention="full1e"` halves it), truncated three widths out.  For
transfer |-1> -> |+1> the |+1><->|0> tone leads (counter-intuitive order);
a hold freezes both envelopes at the crossing point, where the dark state
is the protected superposition.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace

import numpy as np

from .hamiltonian import DriveField, build_time_dependent

WIDTH_CONVENTIONS = ("half1e", "full1e")


@dataclass(frozen=True)
class ConstantEnvelope:
    value: float = 1.0

    def __call__(self, t):
        return self.value if np.isscalar(t) else np.full(np.shape(t), self.value)

    def shifted(self, dt: float) -> "ConstantEnvelope":
        return self

    def to_dict(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class GaussianEnvelope:
    """exp(-((t-center)/width)^2) inside [clip_lo, clip_hi], zero outside."""

    center: float
    width: float
    clip_lo: float
    clip_hi: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.clip_lo) & (t <= self.clip_hi)
        val = np.where(inside, np.exp(-(((t - self.center) / self.width) ** 2)), 0.0)
        return float(val) if val.ndim == 0 else val

    def shifted(self, dt: float) -> "GaussianEnvelope":
        return replace(self, center=self.center + dt,
                       clip_lo=self.clip_lo + dt, clip_hi=self.clip_hi + dt)

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "center": self.center, "width": self.width,
                "clip_lo": self.clip_lo, "clip_hi": self.clip_hi}


def envelope_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "constant":
        return ConstantEnvelope(value=data["value"])
    if kind == "gaussian":
        return GaussianEnvelope(center=data["center"], width=data["width"],
                                clip_lo=data["clip_lo"], clip_hi=data["clip_hi"])
    raise ValueError(f"unknown envelope kind {kind!r}")


@dataclass(frozen=True)
class Segment:
    """One contiguous stretch of the experiment with a fixed set of tones."""

    name: str
    start: float
    duration: float
    drives: tuple = ()

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment duration must be >= 0")

    @property
    def end(self) -> float:
        return self.start + self.duration

    def shifted(self, dt: float) -> "Segment":
        drives = tuple(
            replace(d, envelope=d.envelope.shifted(dt))
            if hasattr(d.envelope, "shifted") else d
            for d in self.drives)
        return replace(self, start=self.start + dt, drives=drives)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "start": self.start, "duration": self.duration,
            "drives": [
                {"transition": d.transition, "peak_rabi": d.peak_rabi,
                 "detuning": d.detuning, "phase": d.phase,
                 "envelope": (d.envelope.to_dict() if d.envelope is not None
                              else {"kind": "constant", "value": 1.0})}
                for d in self.drives],
        }


def _segment_from_dict(data: dict) -> Segment:
    drives = tuple(
        DriveField(d["transition"], d["peak_rabi"], d["detuning"], d["phase"],
                   envelope_from_dict(d["envelope"]))
        for d in data["drives"])
    return Segment(data["name"], data["start"], data["duration"], drives)


@dataclass(frozen=True)
class Schedule:
    segments: tuple
    markers: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        for left, right in zip(self.segments, self.segments[1:]):
            if abs(right.start - left.end) > 1e-12:
                raise ValueError(
                    f"segments {left.name!r} and {right.name!r} are not contiguous")
        for name, t in self.markers.items():
            if not (self.start - 1e-12 <= t <= self.end + 1e-12):
                raise ValueError(f"marker {name!r} at {t} outside schedule")

    @property
    def start(self) -> float:
        return self.segments[0].start

    @property
    def end(self) -> float:
        return self.segments[-1].end

    @property
    def duration(self) -> float:
        return self.end - self.start

    def then(self, tail: "Segment | Schedule", rename=None) -> "Schedule":
        """Append a segment or schedule, shifting it to start at this end."""
        if isinstance(tail, Segment):
            tail = Schedule((tail,))
        dt = self.end - tail.start
        segments = self.segments + tuple(s.shifted(dt) for s in tail.segments)
        markers = dict(self.markers)
        markers.update({k: v + dt for k, v in tail.markers.items()})
        return Schedule(segments, markers)

    def segment_at(self, t: float) -> Segment | None:
        starts = [s.start for s in self.segments]
        i = bisect_right(starts, t) - 1
        if i < 0 or t > self.segments[i].end:
            return None
        return self.segments[i]

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments],
                "markers": dict(self.markers)}

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        return cls(tuple(_segment_from_dict(s) for s in data["segments"]),
                   dict(data["markers"]))


def schedule_hamiltonian(schedule: Schedule, levels, frame: str = "multiRotatingRWA"):
    """Reference t -> 4x4 Hamiltonian for a schedule (slow path, for tests)."""
    builders = [build_time_dependent(levels, seg.drives, frame)
                for seg in schedule.segments]
    starts = [seg.start for seg in schedule.segments]
    ends = [seg.end for seg in schedule.segments]

    def hamiltonian(t: float) -> np.ndarray:
        i = bisect_right(starts, t) - 1
        if i < 0 or t > ends[i]:
            return np.zeros((4, 4), dtype=complex)
        return builders[i](t)

    return hamiltonian


@dataclass(frozen=True)
class StirapParams:
    """Discretization of the adiabatic-transfer pulse pair.

    Pulse width is width_cycles/f_rabi, separation sep_cycles/f_rabi, and
    the suggested integration step 1/(substeps*f_rabi).
    """

    f_rabi: float               # Hz, peak Rabi frequency / 2 pi
    width_cycles: int = 5
    sep_cycles: int = 6
    substeps: int = 10
    hold_time: float = 0.0
    relative_phase: float = 0.0
    width_convention: str = "half1e"

    def __post_init__(self):
        if self.f_rabi <= 0:
            raise ValueError("f_rabi must be positive")
        if self.width_cycles < 1 or self.substeps < 1:
            raise ValueError("width_cycles and substeps must be >= 1")
        if self.sep_cycles < 0 or self.hold_time < 0:
            raise ValueError("sep_cycles and hold_time must be >= 0")
        if self.width_convention not in WIDTH_CONVENTIONS:
            raise ValueError(f"width_convention must be one of {WIDTH_CONVENTIONS}")

    @property
    def peak_rabi(self) -> float:
        """Peak Rabi frequency in rad/s."""
        return 2.0 * math.pi * self.f_rabi

    @property
    def width(self) -> float:
        """Gaussian 1/e half-width in seconds."""
        w = self.width_cycles / self.f_rabi
        return w if self.width_convention == "half1e" else w / 2.0

    @property
    def separation(self) -> float:
        return self.sep_cycles / self.f_rabi

    @property
    def dt(self) -> float:
        """Suggested integration step."""
        return 1.0 / (self.substeps * self.f_rabi)

    @property
    def crossing_fraction(self) -> float:
        """Envelope value where the two Gaussians cross."""
        return math.exp(-((0.5 * self.separation / self.width) ** 2))

    @property
    def crossing_rabi(self) -> float:
        """Per-tone Rabi amplitude (rad/s) during a hold at the crossing."""
        return self.peak_rabi * self.crossing_fraction


def adiabaticity_ratio(p: StirapParams) -> float:
    """Dark-bright gap over mixing-angle sweep rate at the crossing.

    Values well above 1 put the transfer on the adiabatic plateau.  With
    coincident pulses (sep_cycles = 0) the mixing angle never moves and the
    ratio is infinite, but no transfer happens either.
    """
    if p.sep_cycles == 0:
        return math.inf
    gap = p.crossing_rabi / math.sqrt(2.0)
    sweep = p.separation / p.width**2
    return gap / sweep


def _gauss(p: StirapParams, center: float) -> GaussianEnvelope:
    return GaussianEnvelope(center=center, width=p.width,
                            clip_lo=center - 3 * p.width, clip_hi=center + 3 * p.width)


def _dressing_phases(p: StirapParams) -> tuple:
    # drive phases (0, -phi) realize the dressed frame at phi
    return 0.0, -p.relative_phase


def stirap_ramp_in(p: StirapParams) -> Segment:
    """Counter-intuitive ramp from t=0 up to the envelope crossing."""
    lead_center = 3 * p.width
    trail_center = lead_center + p.separation
    crossing = lead_center + 0.5 * p.separation
    phase_minus, phase_plus = _dressing_phases(p)
    drives = (
        DriveField("+1<->0", p.peak_rabi, phase=phase_plus,
                   envelope=_gauss(p, lead_center)),
        DriveField("-1<->0", p.peak_rabi, phase=phase_minus,
                   envelope=_gauss(p, trail_center)),
    )
    return Segment("rampIn", start=0.0, duration=crossing, drives=drives)


def stirap_hold(p: StirapParams, start: float, duration: float,
                extra_drives: tuple = ()) -> Segment:
    """Both dressing tones frozen at the crossing amplitude."""
    phase_minus, phase_plus = _dressing_phases(p)
    env = ConstantEnvelope(p.crossing_fraction)
    drives = (
        DriveField("+1<->0", p.peak_rabi, phase=phase_plus, envelope=env),
        DriveField("-1<->0", p.peak_rabi, phase=phase_minus, envelope=env),
    ) + tuple(extra_drives)
    return Segment("hold", start=start, duration=duration, drives=drives)


def stirap_ramp_out(p: StirapParams, start: float) -> Segment:
    """Completion of both Gaussians, resuming from the crossing at `start`."""
    lead_center = start - 0.5 * p.separation
    trail_center = start + 0.5 * p.separation
    phase_minus, phase_plus = _dressing_phases(p)
    drives = (
        DriveField("+1<->0", p.peak_rabi, phase=phase_plus,
                   envelope=_gauss(p, lead_center)),
        DriveField("-1<->0", p.peak_rabi, phase=phase_minus,
                   envelope=_gauss(p, trail_center)),
    )
    duration = trail_center + 3 * p.width - start
    return Segment("rampOut", start=start, duration=duration, drives=drives)


def stirap_schedule(p: StirapParams, gate_drive=None) -> Schedule:
    """Adiabatic transfer with an optional hold (and rf gate) at the crossing.

    Markers "T1"/"T2" bracket the hold.  With hold_time = 0 and no gate the
    two Gaussians run back to back.
    """
    ramp_in = stirap_ramp_in(p)
    t1 = ramp_in.end
    if gate_drive is not None and p.hold_time == 0:
        raise ValueError("a gate drive needs hold_time > 0 to act in")
    if p.hold_time == 0:
        segments = (ramp_in, stirap_ramp_out(p, t1))
        return Schedule(segments, markers={"T1": t1, "T2": t1})
    extra = (gate_drive,) if gate_drive is not None else ()
    hold = stirap_hold(p, t1, p.hold_time, extra)
    segments = (ramp_in, hold, stirap_ramp_out(p, hold.end))
    return Schedule(segments, markers={"T1": t1, "T2": hold.end})


def pi_pulse(transition: str, peak_rabi: float, start: float = 0.0,
             phase: float = 0.0, fraction: float = 1.0) -> Segment:
    """Rectangular resonant pulse rotating by pi (or a fraction of pi)."""
    if peak_rabi <= 0:
        raise ValueError("peak_rabi must be positive")
    duration = fraction * math.pi / peak_rabi
    drive = DriveField(transition, peak_rabi, phase=phase,
                       envelope=ConstantEnvelope())
    return Segment("piPulse", start=start, duration=duration, drives=(drive,))


def _rf_gate_drives(p: StirapParams, peak_rabi: float, detuning: float = 0.0):
    """rf pair coupling the protected dressed state for frame p.relative_phase."""
    phase_minus, phase_plus = _dressing_phases(p)
    return (
        DriveField("-1<->0'", peak_rabi, detuning, phase_minus),
        DriveField("+1<->0'", peak_rabi, detuning, phase_plus + math.pi),
    )


def rabi_schedule(p: StirapParams, rf_rabi: float, duration: float) -> Schedule:
    """Dressed-state Rabi drive held between transfer ramps.

    Uses the relative-phase-pi preparation, where equal rf phases couple the
    protected state, and drives |D> <-> |0'> for `duration`.
    """
    p = replace(p, relative_phase=math.pi, hold_time=max(duration, 0.0))
    ramp_in = stirap_ramp_in(p)
    segments = [ramp_in]
    t1 = ramp_in.end
    t = t1
    if duration > 0:
        rf = _rf_gate_drives(p, rf_rabi)
        hold = stirap_hold(p, t, duration, extra_drives=rf)
        segments.append(hold)
        t = hold.end
    segments.append(stirap_ramp_out(p, t))
    return Schedule(tuple(segments), markers={"T1": t1, "T2": t})


def ramsey_schedule(p: StirapParams, rf_detuning: float, t_r: float,
                    rf_rabi: float) -> Schedule:
    """pi/2 -- free evolution t_r -- pi/2 on the protected pair, in one hold.

    The rf tones sit rf_detuning away from the dressed resonance; fringes in
    t_r appear at exactly that detuning.  The pi/2 time follows from the
    dressed coupling rf_rabi/sqrt(2).
    """
    if rf_rabi <= 0:
        raise ValueError("rf_rabi must be positive")
    t_half = math.pi / (2.0 * math.sqrt(2.0) * rf_rabi)  # pi/2 on sin^2(g t)
    ramp_in = stirap_ramp_in(p)
    t1 = ramp_in.end
    rf = _rf_gate_drives(p, rf_rabi, rf_detuning)
    pulse1 = stirap_hold(p, t1, t_half, extra_drives=rf)
    free = stirap_hold(p, pulse1.end, t_r)
    free = replace(free, name="freeEvolution")
    pulse2 = stirap_hold(p, free.end, t_half, extra_drives=rf)
    ramp_out = stirap_ramp_out(p, pulse2.end)
    markers = {"T1": t1, "T2": pulse2.end,
               "freeStart": pulse1.end, "freeEnd": free.end}
    return Schedule((ramp_in, pulse1, free, pulse2, ramp_out), markers)


def boundary_discontinuities(schedule: Schedule) -> list:
    """Per-transition amplitude jumps at each internal boundary.

    Returns (boundary_time, transition, left, right) tuples; intentional
    steps (rf gates switching on) show up here too, so this is a diagnostic
    rather than a validator.
    """
    jumps = []
    for left, right in zip(schedule.segments, schedule.segments[1:]):
        t = left.end
        transitions = {d.transition for d in left.drives + right.drives}
        for tr in sorted(transitions):
            amp_l = sum(d.peak_rabi * d.envelope_at(t)
                        for d in left.drives if d.transition == tr)
            amp_r = sum(d.peak_rabi * d.envelope_at(t)
                        for d in right.drives if d.transition == tr)
            if abs(amp_l - amp_r) > 0:
                jumps.append((t, tr, amp_l, amp_r))
    return jumps
