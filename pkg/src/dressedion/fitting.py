"""Least-squares curve fitting for decay and oscillation measurements.

Three canonical models cover every readout curve produced by the
experiment drivers:

``exponential``        a * exp(-x / tau) + c
``sinusoid``           a * sin(2 pi f x + phi) + c
``damped_sinusoid``    a * exp(-x / tau) * sin(2 pi f x + phi) + c

:func:`fit_curve` builds starting points automatically (spectral peak
for frequencies, log-linear regression for decay times), refines with
``scipy.optimize.least_squares``, and reports one-sigma parameter
uncertainties from the Jacobian.  Callers never need to hand-tune
initial guesses for well-sampled data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lombscargle

TAU = 2.0 * np.pi

_MODELS = ("exponential", "sinusoid", "damped_sinusoid")

_PARAM_NAMES = {
    "exponential": ("amplitude", "tau", "offset"),
    "sinusoid": ("amplitude", "frequency", "phase", "offset"),
    "damped_sinusoid": ("amplitude", "frequency", "phase", "tau", "offset"),
}


def _eval_model(model, x, p):
    if model == "exponential":
        a, tau, c = p
        return a * np.exp(-x / tau) + c
    if model == "sinusoid":
        a, f, phi, c = p
        return a * np.sin(TAU * f * x + phi) + c
    if model == "damped_sinusoid":
        a, f, phi, tau, c = p
        return a * np.exp(-x / tau) * np.sin(TAU * f * x + phi) + c
    raise ValueError(f"unknown model {model!r}")


@dataclass(frozen=True)
class FitResult:
    """Converged parameters and uncertainties for one fitted curve."""

    model: str
    params: dict
    sigma: dict
    residual_norm: float
    converged: bool
    n_points: int
    flags: tuple = field(default_factory=tuple)

    def evaluate(self, x):
        """Model prediction at ``x`` using the fitted parameters."""
        x = np.asarray(x, dtype=float)
        names = _PARAM_NAMES[self.model]
        return _eval_model(self.model, x, [self.params[k] for k in names])

    def __getitem__(self, name):
        return self.params[name]


def _frequency_candidates(x, y, n_peaks=3):
    """Plausible oscillation frequencies from the data's spectrum.

    Uses an FFT on uniform grids and a Lomb-Scargle periodogram
    otherwise.  Returns frequencies in the same inverse units as ``x``,
    strongest peak first; empty when no structure stands out.
    """
    span = x[-1] - x[0]
    if span <= 0 or x.size < 4:
        return []
    yc = y - y.mean()
    dx = np.diff(x)
    if np.allclose(dx, dx[0], rtol=1e-6, atol=0.0):
        power = np.abs(np.fft.rfft(yc)) ** 2
        freqs = np.fft.rfftfreq(x.size, dx[0])
        power[0] = 0.0
    else:
        # median gap sets the usable Nyquist scale on irregular grids
        f_hi = 0.5 / max(np.median(dx), 1e-300)
        f_lo = 0.5 / span
        freqs = np.linspace(f_lo, f_hi, min(8 * x.size, 4096))
        power = lombscargle(x, yc, TAU * freqs)
    order = np.argsort(power)[::-1]
    out = []
    for i in order[: 4 * n_peaks]:
        f = freqs[i]
        if f <= 0:
            continue
        # skip near-duplicates of an already accepted peak
        if any(abs(f - g) < 0.75 / span for g in out):
            continue
        out.append(float(f))
        if len(out) >= n_peaks:
            break
    return out


def _refine_frequency(x, y, f0):
    """Parabolic refinement of a spectral peak via local linear fits.

    For fixed frequency the sinusoid model is linear in
    (sin, cos, const) coefficients, so scan a small neighbourhood and
    keep the residual minimum.
    """
    span = x[-1] - x[0]
    best = (np.inf, f0, (0.0, 0.0, np.mean(y)))
    for f in f0 + np.linspace(-0.6, 0.6, 25) / span:
        if f <= 0:
            continue
        basis = np.column_stack(
            [np.sin(TAU * f * x), np.cos(TAU * f * x), np.ones_like(x)]
        )
        coef, res, *_ = np.linalg.lstsq(basis, y, rcond=None)
        cost = res[0] if res.size else np.sum((basis @ coef - y) ** 2)
        if cost < best[0]:
            best = (cost, f, tuple(coef))
    _, f, (ps, pc, c) = best
    amp = float(np.hypot(ps, pc))
    phi = float(np.arctan2(pc, ps))
    return f, amp, phi, float(c)


def _decay_guesses(x, y):
    """Candidate (amplitude, tau, offset) triples for an exponential."""
    span = max(x[-1] - x[0], 1e-300)
    ptp = np.ptp(y)
    tail = float(np.mean(y[max(y.size - 3, 0) :]))
    guesses = []
    for c0 in {tail, float(y.min()), float(y.mean())}:
        z = y - c0
        sign = 1.0 if z[0] >= 0 else -1.0
        mask = sign * z > max(ptp, 1e-300) * 1e-3
        if np.count_nonzero(mask) >= 3:
            slope, icept = np.polyfit(x[mask], np.log(sign * z[mask]), 1)
            if slope < 0:
                guesses.append((sign * np.exp(icept), -1.0 / slope, c0))
    guesses.append((y[0] - tail, span / 3.0, tail))
    guesses.append((y[0] - tail, span * 2.0, tail))
    return guesses


def _starting_points(model, x, y, user_guess):
    names = _PARAM_NAMES[model]
    starts = []
    if user_guess is not None:
        starts.append([float(user_guess[k]) for k in names])
    span = max(x[-1] - x[0], 1e-300)
    if model == "exponential":
        starts += [list(g) for g in _decay_guesses(x, y)]
    else:
        cands = _frequency_candidates(x, y) or [1.0 / span]
        for f0 in cands:
            f, amp, phi, c = _refine_frequency(x, y, f0)
            if model == "sinusoid":
                starts.append([amp, f, phi, c])
            else:
                for tau0 in (span * 10.0, span, span / 3.0):
                    starts.append([amp, f, phi, tau0, c])
    return starts


def _bounds(model):
    names = _PARAM_NAMES[model]
    lo = [-np.inf] * len(names)
    hi = [np.inf] * len(names)
    for i, name in enumerate(names):
        if name in ("tau", "frequency"):
            lo[i] = 1e-300
    return lo, hi


def _canonicalize(model, p):
    """Fold sign/phase redundancy: amplitude >= 0, phase in (-pi, pi]."""
    names = _PARAM_NAMES[model]
    p = dict(zip(names, p))
    if "phase" in p:
        if p["amplitude"] < 0:
            p["amplitude"] = -p["amplitude"]
            p["phase"] += np.pi
        p["phase"] = float((p["phase"] + np.pi) % TAU - np.pi)
    return [p[k] for k in names]


def fit_curve(model, x, y, sigma=None, guess=None):
    """Fit ``model`` to samples ``(x, y)`` and return a :class:`FitResult`.

    sigma: optional per-point standard errors used as inverse weights;
        zeros are floored to the smallest positive entry.
    guess: optional dict of starting parameters (same keys as the
        result) tried before the automatic starting points.

    Raises ValueError for unknown models or fewer than twice as many
    points as parameters.
    """
    if model not in _MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {_MODELS}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be matching 1-D arrays")
    order = np.argsort(x)
    x, y = x[order], y[order]
    names = _PARAM_NAMES[model]
    if x.size < 2 * len(names):
        raise ValueError(
            f"need at least {2 * len(names)} points to fit {model}, got {x.size}"
        )
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)[order]
        positive = sigma[sigma > 0]
        floor = positive.min() if positive.size else 1.0
        sigma = np.maximum(sigma, floor)
    weight = 1.0 if sigma is None else 1.0 / sigma

    def residual(p):
        return (_eval_model(model, x, p) - y) * weight

    lo, hi = _bounds(model)
    best = None
    for start in _starting_points(model, x, y, guess):
        p0 = np.clip(start, lo, hi)
        try:
            res = least_squares(
                residual, p0, bounds=(lo, hi), method="trf",
                x_scale="jac", ftol=1e-12, xtol=1e-12, gtol=1e-12,
                max_nfev=400 * len(names),
            )
        except (ValueError, np.linalg.LinAlgError):
            continue
        if best is None or res.cost < best.cost - 1e-30:
            best = res
    if best is None:
        raise RuntimeError(f"all starting points failed for model {model}")

    params = _canonicalize(model, best.x)
    dof = max(x.size - len(names), 1)
    scale = 2.0 * best.cost / dof
    cov = np.linalg.pinv(best.jac.T @ best.jac) * scale
    errors = np.sqrt(np.maximum(np.diag(cov), 0.0))

    flags = []
    if not best.success:
        flags.append("did_not_converge")
    pdict = dict(zip(names, (float(v) for v in params)))
    sdict = dict(zip(names, (float(v) for v in errors)))
    if "amplitude" in pdict:
        amp = pdict["amplitude"]
        degenerate = amp < 2.0 * sdict["amplitude"]
        resid_var = float(np.var(_eval_model(model, x, params) - y))
        if "phase" in pdict and resid_var > 0.0:
            # periodogram peak power vs ~1% false-alarm threshold: a fit
            # locked onto noise has amp^2 n / (4 var) of order log(n),
            # while a real oscillation sits orders of magnitude higher
            peak_power = amp * amp * x.size / (4.0 * resid_var)
            degenerate = degenerate or peak_power < np.log(x.size) + 6.0
        if degenerate:
            flags.append("amplitude_consistent_with_zero")
    return FitResult(
        model=model,
        params=pdict,
        sigma=sdict,
        residual_norm=float(np.sqrt(2.0 * best.cost)),
        converged=bool(best.success),
        n_points=int(x.size),
        flags=tuple(flags),
    )
