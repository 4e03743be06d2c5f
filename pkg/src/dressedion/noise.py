"""Stochastic magnetic-field fluctuations and drive noise.

The field noise is an Ornstein-Uhlenbeck process x(t) entering the
Hamiltonian as a differential shift x(t)*(|+1><+1| - |-1><-1|); the clock
states |0>, |0'> are untouched.  Traces use the exact discretization

    x[n+1] = x[n]*a + amplitude*sqrt(1 - a^2)*xi,   a = exp(-dt/tau_c)

with a stationary start, so statistics are step-size independent.  The value
x[n] is held constant over step n; splitting a trace and continuing from its
last value reproduces the unsplit trace sample for sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter


@dataclass(frozen=True)
class OUNoise:
    """Ornstein-Uhlenbeck field noise: stationary std and correlation time."""

    amplitude: float          # rad/s, std of the stationary distribution
    correlation_time: float   # seconds
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.correlation_time <= 0:
            raise ValueError("correlation_time must be positive")


@dataclass(frozen=True)
class DriveNoise:
    """Microwave drive imperfections: slow amplitude scale and phase walk.

    The amplitude error is quasi-static (one relative scale drawn per
    trajectory); the phase error is a Wiener walk at `phase_diffusion_rate`
    added to one dressing tone.  Both default to off.
    """

    relative_amplitude_sigma: float = 0.0
    phase_diffusion_rate: float = 0.0   # rad^2/s

    def __post_init__(self):
        if self.relative_amplitude_sigma < 0 or self.phase_diffusion_rate < 0:
            raise ValueError("noise strengths must be >= 0")


def sample_ou(model: OUNoise, n_steps: int, dt: float,
              rng: np.random.Generator | None = None,
              x0: float | None = None) -> np.ndarray:
    """OU trace of `n_steps` values spaced `dt`.

    With `x0` the first value is one exact conditional step of size `dt`
    from x0 (trace continuation); otherwise it is a stationary draw.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if rng is None:
        rng = np.random.default_rng(model.seed)
    sigma = model.amplitude
    if sigma == 0.0:
        rng.standard_normal(n_steps)  # keep stream position independent of amplitude
        return np.zeros(n_steps)
    if n_steps == 0:
        return np.empty(0)
    alpha = math.exp(-dt / model.correlation_time)
    kick = sigma * math.sqrt(1.0 - alpha * alpha)
    xi = rng.standard_normal(n_steps)
    # x[n] = alpha*x[n-1] + kick*xi[n] is an order-1 IIR filter
    trace = np.empty(n_steps)
    trace[0] = sigma * xi[0] if x0 is None else x0 * alpha + kick * xi[0]
    if n_steps > 1:
        trace[1:] = lfilter([1.0], [1.0, -alpha], kick * xi[1:], zi=[alpha * trace[0]])[0]
    return trace


def psd(model: OUNoise, frequency) -> np.ndarray:
    """Two-sided Lorentzian spectral density in rad^2/s^2 per Hz.

    S(f) = 2*amplitude^2*tau_c / (1 + (2 pi f tau_c)^2); integrating over all
    f (in Hz) returns the stationary variance.
    """
    tau = model.correlation_time
    f = np.asarray(frequency, dtype=float)
    return 2.0 * model.amplitude**2 * tau / (1.0 + (2.0 * np.pi * f * tau) ** 2)


def bare_dephasing_rate(model: OUNoise) -> float:
    """Fast-noise-limit decay rate of a bare |-1>/|+1> superposition.

    The differential phase accumulates at 2x(t), so contrast falls as
    exp(-4*amplitude^2*tau_c*t) once t >> tau_c.
    """
    return 4.0 * model.amplitude**2 * model.correlation_time


def _phase_variance(tau: float, t: np.ndarray) -> np.ndarray:
    """Var of int_0^t x dt' for a unit-amplitude OU process."""
    return 2.0 * tau * t - 2.0 * tau**2 * (1.0 - np.exp(-t / tau))


def bare_ramsey_contrast(model: OUNoise, times: np.ndarray) -> np.ndarray:
    """Analytic ensemble contrast of a bare +-1 superposition under OU noise."""
    var = 4.0 * model.amplitude**2 * _phase_variance(model.correlation_time, np.asarray(times))
    return np.exp(-0.5 * var)


def _simulated_unit_phases(correlation_time: float, times: np.ndarray,
                           n_traj: int, seed: int) -> np.ndarray:
    """Accumulated differential phases 2*int x dt for unit-amplitude noise."""
    dt = times[1] - times[0]
    rng = np.random.default_rng(seed)
    unit = OUNoise(amplitude=1.0, correlation_time=correlation_time)
    phases = np.empty((n_traj, len(times)))
    for k in range(n_traj):
        trace = sample_ou(unit, len(times), dt, rng=rng)
        phases[k] = 2.0 * dt * np.concatenate([[0.0], np.cumsum(trace[:-1])])
    return phases


def _crossing_time(times: np.ndarray, contrast: np.ndarray, level: float) -> float:
    below = np.nonzero(contrast < level)[0]
    if len(below) == 0 or below[0] == 0:
        raise ValueError("contrast curve does not cross the 1/e level cleanly")
    i = below[0]
    frac = (contrast[i - 1] - level) / (contrast[i - 1] - contrast[i])
    return float(times[i - 1] + frac * (times[i] - times[i - 1]))


def ou_decay_time_fitter(correlation_time: float):
    """Fitter mapping (times, contrast) to a 1/e time via the OU decay shape.

    Regresses ln(contrast) on the known phase-variance curve g(t) of OU
    dephasing and solves fitted_chi(t) = 1; using every point above the
    statistical floor makes this far less noisy than reading off the raw
    1/e crossing.
    """
    tau = correlation_time

    def fit(times, contrast) -> float:
        times = np.asarray(times)
        contrast = np.asarray(contrast)
        # fit only the contiguous head above 0.2: past the first crossing the
        # curve is statistical floor, and its large g would dominate the fit
        below = np.nonzero(contrast < 0.2)[0]
        last = int(below[0]) if len(below) else len(contrast)
        if last < 4:
            # decay faster than the grid resolves: the crossing time itself
            # is accurate enough to steer a search
            return float(times[min(last, len(times) - 1)])
        g = _phase_variance(tau, times[1:last])
        lnc = np.log(contrast[1:last])
        if not np.any(contrast[1:last] < 0.9):
            raise ValueError("contrast shows no usable decay in the window")
        beta = -np.sum(g * lnc) / np.sum(g * g)
        if beta <= 0:
            raise ValueError("contrast shows no decay")
        t_hi = 1.0 / (2.0 * tau * beta) + 10.0 * tau
        return brentq(lambda t: beta * _phase_variance(tau, np.array([t]))[0] - 1.0,
                      1e-15, 2.0 * t_hi)

    return fit


def calibrate_bare_t2(target_t2: float, correlation_time: float,
                      fitter=None, n_traj: int = 400, seed: int = 20260815) -> float:
    """Noise amplitude whose simulated bare Ramsey hits 1/e contrast at target_t2.

    Simulates unit-amplitude phase trajectories once and bisects the
    amplitude scale (common random numbers keep the objective monotone).
    `fitter` maps (times, contrast) to a decay time; the default regresses
    on the OU dephasing shape (see ou_decay_time_fitter).
    """
    if target_t2 <= 0:
        raise ValueError("target_t2 must be positive")
    if fitter is None:
        fitter = ou_decay_time_fitter(correlation_time)
    dt = min(correlation_time / 10.0, target_t2 / 400.0)
    times = np.arange(int(math.ceil(3.0 * target_t2 / dt))) * dt
    phases = _simulated_unit_phases(correlation_time, times, n_traj, seed)

    def t2_of(amplitude: float) -> float:
        contrast = np.abs(np.mean(np.exp(1j * amplitude * phases), axis=0))
        try:
            return fitter(times, contrast)
        except ValueError:
            return math.inf  # no crossing within the window: amplitude too small

    # analytic white/quasi-static interpolation gives a near-perfect seed
    var_unit = _phase_variance(correlation_time, np.array([target_t2]))[0]
    center = math.sqrt(1.0 / (2.0 * var_unit))
    lo, hi = center / 4.0, center * 4.0
    if not (t2_of(lo) > target_t2 > t2_of(hi)):
        raise ValueError("bisection range does not bracket the target")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if t2_of(mid) > target_t2:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_phase_walk(model: DriveNoise, n_steps: int, dt: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Wiener phase trace (starts at 0) for one dressing tone."""
    if model.phase_diffusion_rate == 0.0:
        return np.zeros(n_steps)
    kicks = math.sqrt(model.phase_diffusion_rate * dt) * rng.standard_normal(n_steps)
    kicks[0] = 0.0
    return np.cumsum(kicks)


def sample_amplitude_scale(model: DriveNoise, rng: np.random.Generator) -> float:
    """Per-trajectory quasi-static relative drive amplitude."""
    return 1.0 + model.relative_amplitude_sigma * rng.standard_normal()
