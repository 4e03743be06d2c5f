"""Schedule compilation and time evolution.

A Schedule is compiled once into per-segment channel arrays: a static
hermitian part, a real diagonal that couples to the scalar noise process, and
per-drive complex coefficient series sampled at step midpoints in global time

    H(step s) = hstat + noise[s] * diag(zdiag)
                + sum_k coeffs[k, s] * mats[k] + h.c.

The kernel then applies the exact exponential of each step.  Because drive
phases are evaluated in global time at compile point, a compiled block can be
moved to a different start time only through `phase_shifted`, which rotates
each channel by exp(-i * detuning * shift); this is what keeps detuned-drive
phase coherence intact when branched experiment arms reuse a tail compiled at
a reference time.

Step-size guidance: the per-step exponential is exact, so dt is limited by
how fast envelopes and noise vary, not by the largest energy in H.  Smooth
Gaussian ramps follow the schedule's own suggested step; long holds under
Ornstein-Uhlenbeck noise need dt small against both the correlation time and
the dressing-gap period (piecewise-constant noise folds spectral weight at
multiples of 1/dt, and the sinc envelope of the zero-order hold must stay
near unity at the gap frequency).
"""

import math
from dataclasses import dataclass, replace
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.linalg import expm

from . import backend
from .core import (DIM_BARE, LABELS, ZEEMAN_DIAG, basis_state,
                   require_hermitian)
from .hamiltonian import _TRANSITION_LEVELS
from .noise import sample_ou

TAU = 2.0 * math.pi

_BOUNDARY_TOL = 1e-9


def step(h, psi, dt):
    """Exact exp(-i h dt) psi through a hermitian eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    require_hermitian(h, tol=1e-12 * max(1.0, float(np.abs(h).max())))
    if dt <= 0:
        raise ValueError("dt must be > 0")
    w, v = np.linalg.eigh(h)
    return v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))


# ---------------------------------------------------------------------------
# compiled representation

@dataclass(frozen=True)
class CompiledBlock:
    """One schedule segment lowered to kernel arrays."""

    name: str
    t0: float
    dt: float
    n_steps: int
    hstat: np.ndarray
    zdiag: np.ndarray
    coeffs: np.ndarray      # (n_channels, n_steps)
    mats: np.ndarray        # (n_channels, dim, dim)
    detunings: tuple        # rad/s per channel, needed to move the block

    @property
    def duration(self):
        return self.dt * self.n_steps

    @property
    def end(self):
        return self.t0 + self.duration

    @property
    def dim(self):
        return self.hstat.shape[0]

    def phase_shifted(self, t0_new):
        """Relocate to t0_new, keeping every drive's global-time phase law."""
        shift = t0_new - self.t0
        coeffs = self.coeffs * np.exp(
            -1j * np.asarray(self.detunings)[:, None] * shift) \
            if self.coeffs.size else self.coeffs
        return replace(self, t0=t0_new, coeffs=coeffs)


@dataclass(frozen=True)
class CompiledSchedule:
    blocks: tuple
    markers: dict

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("need at least one block")
        for a, b in zip(self.blocks, self.blocks[1:]):
            if abs(a.end - b.t0) > _BOUNDARY_TOL * max(1.0, abs(a.end)):
                raise ValueError(f"blocks {a.name!r}/{b.name!r} not contiguous")
            if a.dim != b.dim:
                raise ValueError("blocks disagree on dimension")

    @property
    def dim(self):
        return self.blocks[0].dim

    @property
    def start(self):
        return self.blocks[0].t0

    @property
    def end(self):
        return self.blocks[-1].end

    @property
    def n_steps(self):
        return sum(b.n_steps for b in self.blocks)

    def step_counts(self):
        return tuple(b.n_steps for b in self.blocks)

    def split_at(self, t):
        """Split on a block boundary at time t -> (head, tail)."""
        for idx in range(1, len(self.blocks)):
            if abs(self.blocks[idx].t0 - t) <= _BOUNDARY_TOL * max(1.0, abs(t)):
                head = CompiledSchedule(
                    self.blocks[:idx],
                    {k: v for k, v in self.markers.items() if v <= t})
                tail = CompiledSchedule(
                    self.blocks[idx:],
                    {k: v for k, v in self.markers.items() if v >= t})
                return head, tail
        raise ValueError(f"t={t} is not a block boundary")

    def shifted(self, delta):
        """Move the whole compiled schedule by delta seconds."""
        blocks = tuple(b.phase_shifted(b.t0 + delta) for b in self.blocks)
        markers = {k: v + delta for k, v in self.markers.items()}
        return CompiledSchedule(blocks, markers)


def _default_dt(segment):
    scales = [max(d.peak_rabi, abs(d.detuning)) for d in segment.drives]
    if not scales:
        return segment.duration
    return 1.0 / (50.0 * max(scales) / TAU)


def _coupling_matrix(transition):
    upper, lower = _TRANSITION_LEVELS[transition]
    return np.outer(basis_state(upper), basis_state(lower)).astype(complex)


def compile_schedule(schedule, dt=None, noise_diag=ZEEMAN_DIAG):
    """Lower a Schedule (multi-rotating frame) to kernel-ready blocks.

    dt: None for per-segment defaults, a scalar applied everywhere, or a
    mapping {segment name: dt} with optional "default" key.  The actual step
    divides each segment duration exactly (nearest count).  noise_diag is the
    diagonal the scalar noise trace multiplies; None disables the channel.
    """
    zdiag = (np.zeros(DIM_BARE) if noise_diag is None
             else np.asarray(noise_diag, dtype=float))
    blocks = []
    for seg in schedule.segments:
        if isinstance(dt, dict):
            dt_req = dt.get(seg.name, dt.get("default"))
        else:
            dt_req = dt
        if dt_req is None:
            dt_req = _default_dt(seg)
        n = max(1, round(seg.duration / dt_req))
        dt_seg = seg.duration / n
        t_mid = seg.start + (np.arange(n) + 0.5) * dt_seg
        n_ch = len(seg.drives)
        coeffs = np.zeros((max(n_ch, 1), n), dtype=complex)
        mats = np.zeros((max(n_ch, 1), DIM_BARE, DIM_BARE), dtype=complex)
        detunings = []
        for k, drive in enumerate(seg.drives):
            env = (np.ones(n) if drive.envelope is None
                   else np.array([drive.envelope(t) for t in t_mid]))
            coeffs[k] = (0.5 * drive.peak_rabi * env
                         * np.exp(-1j * (drive.detuning * t_mid + drive.phase)))
            mats[k] = _coupling_matrix(drive.transition)
            detunings.append(drive.detuning)
        if n_ch == 0:
            detunings.append(0.0)
        blocks.append(CompiledBlock(
            name=seg.name, t0=seg.start, dt=dt_seg, n_steps=n,
            hstat=np.zeros((DIM_BARE, DIM_BARE), dtype=complex), zdiag=zdiag,
            coeffs=coeffs, mats=mats, detunings=tuple(detunings)))
    return CompiledSchedule(tuple(blocks), dict(schedule.markers))


def compile_static(hstat, channels, duration, dt, *, t0=0.0, name="static",
                   zdiag=None, markers=None):
    """One-block schedule for hand-built models (e.g. sideband dynamics).

    channels: iterable of (mat, amplitude, detuning, phase); each contributes
    amplitude * exp(-i(detuning*t + phase)) * mat + h.c. (amplitude is the
    full coefficient, not halved).
    """
    hstat = np.asarray(hstat, dtype=complex)
    require_hermitian(hstat, tol=1e-12 * max(1.0, float(np.abs(hstat).max())))
    dim = hstat.shape[0]
    n = max(1, round(duration / dt))
    dt_blk = duration / n
    t_mid = t0 + (np.arange(n) + 0.5) * dt_blk
    chans = list(channels)
    n_ch = max(len(chans), 1)
    coeffs = np.zeros((n_ch, n), dtype=complex)
    mats = np.zeros((n_ch, dim, dim), dtype=complex)
    detunings = []
    for k, (mat, amp, det, phase) in enumerate(chans):
        coeffs[k] = amp * np.exp(-1j * (det * t_mid + phase))
        mats[k] = np.asarray(mat, dtype=complex)
        detunings.append(det)
    if not chans:
        detunings.append(0.0)
    zarr = np.zeros(dim) if zdiag is None else np.asarray(zdiag, dtype=float)
    block = CompiledBlock(name=name, t0=t0, dt=dt_blk, n_steps=n,
                          hstat=hstat, zdiag=zarr, coeffs=coeffs, mats=mats,
                          detunings=tuple(detunings))
    return CompiledSchedule((block,), dict(markers or {}))


# ---------------------------------------------------------------------------
# evolution drivers

@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray       # (n_samples, dim)
    noise_trace: np.ndarray  # rad/s, value during the step ending at times[i]


def sample_schedule_noise(compiled, model, rng, x0=None):
    """Per-block OU traces with continuation across block boundaries."""
    out = []
    x = x0
    for blk in compiled.blocks:
        trace = sample_ou(model, blk.n_steps, blk.dt, rng=rng, x0=x)
        out.append(trace)
        x = trace[-1]
    return out


def evolve(compiled, psi0, noise=None, record_every=0, backend_name=None):
    """Run a compiled schedule; returns a Trajectory.

    noise: list of per-block traces (rad/s, len == block step count) or None.
    record_every: snapshot stride in steps within each block (0 = endpoints
    only).  The initial and final states are always included.
    """
    psi = np.array(psi0, dtype=complex)
    if psi.shape != (compiled.dim,):
        raise ValueError(f"psi0 shape {psi.shape} != ({compiled.dim},)")
    if noise is not None and len(noise) != len(compiled.blocks):
        raise ValueError("need one noise trace per block")
    times = [compiled.start]
    states = [psi.copy()]
    ntrace = [0.0]
    for ib, blk in enumerate(compiled.blocks):
        trace = (np.zeros(blk.n_steps) if noise is None
                 else np.asarray(noise[ib], dtype=float))
        if trace.shape != (blk.n_steps,):
            raise ValueError(f"noise trace {ib} length {trace.shape} != "
                             f"({blk.n_steps},)")
        stride = record_every if 0 < record_every <= blk.n_steps else 0
        psi, snaps, _ = backend.evolve_channels(
            psi, blk.hstat, blk.zdiag, trace, blk.coeffs, blk.mats, blk.dt,
            stride=stride, backend=backend_name)
        if stride:
            n_snap = snaps.shape[0]
            for r in range(n_snap):
                times.append(blk.t0 + (r + 1) * stride * blk.dt)
                states.append(snaps[r])
                ntrace.append(trace[(r + 1) * stride - 1])
            if n_snap * stride == blk.n_steps:
                continue  # block end already sampled
        times.append(blk.end)
        states.append(psi.copy())
        ntrace.append(trace[-1] if blk.n_steps else 0.0)
    return Trajectory(np.asarray(times), np.asarray(states),
                      np.asarray(ntrace))


def _bare_observables():
    return tuple((lbl, basis_state(lbl)) for lbl in LABELS)


def _observable_matrix(observables, dim):
    obs = _bare_observables() if observables is None else tuple(observables)
    vecs = np.zeros((len(obs), dim), dtype=complex)
    labels = []
    for i, (lbl, vec) in enumerate(obs):
        v = np.asarray(vec, dtype=complex)
        if v.shape != (dim,):
            raise ValueError(f"observable {lbl!r} has shape {v.shape}")
        vecs[i] = v
        labels.append(lbl)
    return tuple(labels), vecs


@dataclass(frozen=True)
class EnsembleResult:
    times: np.ndarray
    labels: tuple
    mean: np.ndarray     # (n_obs, n_samples)
    stderr: np.ndarray   # (n_obs, n_samples)
    n_traj: int


def _trajectory_rng(seed, index):
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence((int(seed), int(index)))))


def _ensemble_worker(args):
    compiled, psi0, model, seed, indices, record_every, vecs = args
    pops = []
    for t_idx in indices:
        rng = _trajectory_rng(seed, t_idx)
        noise = (None if model is None
                 else sample_schedule_noise(compiled, model, rng))
        traj = evolve(compiled, psi0, noise, record_every)
        pops.append(np.abs(traj.states @ vecs.conj().T).T ** 2)
    return indices, np.asarray(pops), traj.times


def ensemble_average(compiled, psi0, noise_model, n_traj, seed, *,
                     record_every=0, observables=None, workers=1):
    """Mean and standard error of populations over noise realizations.

    Each trajectory draws its noise from an independent, deterministically
    derived stream (seed, trajectory index), and results are reduced in a
    fixed order, so any worker count yields identical output.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    labels, vecs = _observable_matrix(observables, compiled.dim)
    indices = list(range(n_traj))
    if workers and workers > 1:
        chunks = [indices[i::workers] for i in range(workers)]
        chunks = [c for c in chunks if c]
        args = [(compiled, psi0, noise_model, seed, c, record_every, vecs)
                for c in chunks]
        all_pops = [None] * n_traj
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, pops, times in pool.map(_ensemble_worker, args):
                for j, t_idx in enumerate(idx):
                    all_pops[t_idx] = pops[j]
        pops = np.asarray(all_pops, dtype=float)
    else:
        idx, pops, times = _ensemble_worker(
            (compiled, psi0, noise_model, seed, indices, record_every, vecs))
    mean = pops.mean(axis=0)
    if n_traj > 1:
        stderr = pops.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleResult(times=times, labels=labels, mean=mean,
                          stderr=stderr, n_traj=n_traj)


# ---------------------------------------------------------------------------
# master-equation cross-check

def _liouvillian(h, z, rate):
    dim = h.shape[0]
    iden = np.eye(dim)
    lu = -1j * (np.kron(iden, h) - np.kron(h.T, iden))
    if rate:
        zsq = z @ z
        lu = lu + rate * (np.kron(z.T.conj(), z)
                          - 0.5 * np.kron(iden, z.conj().T @ z)
                          - 0.5 * np.kron(zsq.T, iden))
    return lu


def lindblad_check(compiled, rho0, rate, record_every=0, observables=None):
    """Master-equation propagation with dephasing through each block's zdiag.

    The collapse operator is sqrt(rate) * diag(zdiag); rate in 1/s.  Returns
    (times, values) where values[i, j] = <obs_i> at times[j].  With rate 0
    this reduces to unitary von Neumann evolution and must match `evolve`.
    """
    labels, vecs = _observable_matrix(observables, compiled.dim)
    dim = compiled.dim
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"rho0 shape {rho.shape} != ({dim}, {dim})")
    times = [compiled.start]
    rhos = [rho.copy()]

    def record(t, r):
        times.append(t)
        rhos.append(r.copy())

    vec = rho.reshape(-1, order="F")
    for blk in compiled.blocks:
        z = np.diag(blk.zdiag).astype(complex)
        static = np.ptp(blk.coeffs, axis=1).max() < 1e-30 if blk.coeffs.size \
            else True
        if static:
            h = blk.hstat.copy()
            for k in range(blk.mats.shape[0]):
                c = blk.coeffs[k, 0] if blk.coeffs.size else 0.0
                h = h + c * blk.mats[k] + np.conj(c) * blk.mats[k].conj().T
            stepper = expm(_liouvillian(h, z, rate) * blk.dt)
            for s in range(blk.n_steps):
                vec = stepper @ vec
                if record_every and (s + 1) % record_every == 0:
                    record(blk.t0 + (s + 1) * blk.dt,
                           vec.reshape(dim, dim, order="F"))
        else:
            for s in range(blk.n_steps):
                h = blk.hstat.copy()
                for k in range(blk.mats.shape[0]):
                    c = blk.coeffs[k, s]
                    h = h + c * blk.mats[k] + np.conj(c) * blk.mats[k].conj().T
                vec = expm(_liouvillian(h, z, rate) * blk.dt) @ vec
                if record_every and (s + 1) % record_every == 0:
                    record(blk.t0 + (s + 1) * blk.dt,
                           vec.reshape(dim, dim, order="F"))
        if not record_every or blk.n_steps % record_every:
            record(blk.end, vec.reshape(dim, dim, order="F"))
    times_arr = np.asarray(times)
    values = np.empty((len(labels), len(times)), dtype=float)
    for i in range(len(labels)):
        v = vecs[i]
        values[i] = [float(np.real(v.conj() @ r @ v)) for r in rhos]
    return times_arr, values
