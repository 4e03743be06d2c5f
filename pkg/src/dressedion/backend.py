"""Kernel selection and the validated entry point for channel evolution.

At import time the compiled extension is preferred; the pure-numpy kernel is
the fallback so a source-only install stays functional.  `set_backend` exists
for tests and benchmarks that need to pin one implementation.
"""

import warnings

import numpy as np

from . import _kernel_py

try:  # pragma: no cover - exercised indirectly via backend_name()
    from . import _kernel
    _DEFAULT = "compiled"
except ImportError:  # pragma: no cover
    _kernel = None
    _DEFAULT = "python"

_active = _DEFAULT

WARN_DRIFT = _kernel_py.WARN_DRIFT
ABORT_DRIFT = _kernel_py.ABORT_DRIFT


class UnitarityError(RuntimeError):
    """Norm drift exceeded the abort budget; step size or inputs are broken."""


def available_backends():
    return ("python",) if _kernel is None else ("compiled", "python")


def backend_name():
    return _active


def set_backend(name):
    """Pin the kernel implementation ("compiled" or "python")."""
    global _active
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; "
                         f"have {available_backends()}")
    _active = name


def _impl(backend):
    name = _active if backend is None else backend
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available")
    return _kernel if name == "compiled" else _kernel_py


def evolve_channels(psi0, hstat, zdiag, noise, coeffs, mats, dt, *,
                    stride=0, renorm_every=1000, backend=None):
    """Evolve through the per-step channel Hamiltonian; see _kernel_py.

    Returns (psi, snapshots, max_norm_drift).  `snapshots` holds the state
    after every `stride`-th step (empty when stride=0).  Raises
    UnitarityError when the norm drift between renormalizations exceeds
    ABORT_DRIFT, and warns beyond WARN_DRIFT.
    """
    psi = np.array(psi0, dtype=np.complex128, order="C", copy=True)
    hstat = np.ascontiguousarray(hstat, dtype=np.complex128)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    coeffs = np.atleast_2d(np.ascontiguousarray(coeffs, dtype=np.complex128))
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    if mats.ndim == 2:
        mats = mats[np.newaxis]
    dim = psi.shape[0]
    n_steps = noise.shape[0]
    if hstat.shape != (dim, dim):
        raise ValueError(f"hstat shape {hstat.shape} != ({dim}, {dim})")
    if mats.shape[1:] != (dim, dim):
        raise ValueError(f"mats shape {mats.shape} incompatible with dim {dim}")
    if coeffs.shape != (mats.shape[0], n_steps):
        raise ValueError(f"coeffs shape {coeffs.shape} != "
                         f"({mats.shape[0]}, {n_steps})")
    if zdiag is None:
        zdiag_arr = None
    else:
        zdiag_arr = np.ascontiguousarray(zdiag, dtype=np.float64)
        if zdiag_arr.shape != (dim,):
            raise ValueError(f"zdiag shape {zdiag_arr.shape} != ({dim},)")
    if stride < 0:
        raise ValueError("stride must be >= 0")
    if renorm_every < 1:
        raise ValueError("renorm_every must be >= 1")
    n_snap = 0 if stride == 0 else n_steps // stride
    snaps = np.empty((n_snap, dim), dtype=np.complex128)
    drift = np.zeros(1, dtype=np.float64)
    status = _impl(backend).evolve_channels(
        psi, hstat, zdiag_arr, noise, coeffs, mats, float(dt),
        snaps, int(stride), int(renorm_every), drift)
    if status == 3:
        raise np.linalg.LinAlgError("eigendecomposition failed mid-evolution")
    if status == 2:
        raise UnitarityError(
            f"norm drift {drift[0]:.2e} exceeded {ABORT_DRIFT:.0e}; "
            "Hamiltonian inputs are inconsistent with exact stepping")
    if status == 1:
        warnings.warn(f"norm drift {drift[0]:.2e} exceeded the "
                      f"{WARN_DRIFT:.0e} budget", RuntimeWarning,
                      stacklevel=2)
    return psi, snaps, float(drift[0])
