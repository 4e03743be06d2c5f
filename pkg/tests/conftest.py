"""Shared numerical helpers for the test suite."""

import numpy as np
import pytest


def evolve_reference(hfun, psi, t0, t1, dt):
    """Midpoint exponential stepping of i dpsi/dt = H(t) psi.

    Slow but dependency-free; used as the independent oracle against which
    the compiled propagator is checked.
    """
    steps = int(round((t1 - t0) / dt))
    psi = np.asarray(psi, dtype=complex)
    t = t0
    for _ in range(steps):
        w, v = np.linalg.eigh(hfun(t + 0.5 * dt))
        psi = v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))
        t += dt
    return psi


@pytest.fixture
def evolve():
    return evolve_reference
