"""Pure-numpy propagation kernel.

Reference implementation of the channel-stepping loop; the compiled extension
in _kernel.pyx mirrors these semantics exactly.  The Hamiltonian at step s is

    H(s) = hstat + diag(noise[s] * zdiag)
           + sum_k coeffs[k, s] * mats[k] + conj(coeffs[k, s]) * mats[k]^dag

and the state advances by the exact exponential exp(-i H(s) dt) through a
hermitian eigendecomposition.  Every `renorm_every` steps (and at the end) the
norm is reset to one; the worst |norm - 1| seen is reported through
`drift_out[0]`.  Return status: 0 ok, 1 drift exceeded `WARN_DRIFT`, 2 drift
exceeded `ABORT_DRIFT` (the loop stops early in that case).

Callers are expected to go through `backend.evolve_channels`, which validates
shapes and dtypes; the kernels themselves trust their inputs.
"""

import numpy as np

WARN_DRIFT = 1e-6
ABORT_DRIFT = 1e-4


def evolve_channels(psi, hstat, zdiag, noise, coeffs, mats, dt,
                    snaps, stride, renorm_every, drift_out):
    """Advance `psi` in place through len(noise) steps; see module docstring."""
    n_steps = noise.shape[0]
    n_ch = mats.shape[0]
    # H += c*M + conj(c)*M^dag, accumulated as A = H directly here; the
    # compiled kernel builds conj(H) instead to feed LAPACK column-major.
    mats_dag = np.conj(np.transpose(mats, (0, 2, 1)))
    h = np.empty_like(hstat)
    status = 0
    max_drift = 0.0
    row = 0
    for s in range(n_steps):
        np.copyto(h, hstat)
        if zdiag is not None:
            h[np.diag_indices_from(h)] += noise[s] * zdiag
        for k in range(n_ch):
            c = coeffs[k, s]
            h += c * mats[k]
            h += np.conj(c) * mats_dag[k]
        w, v = np.linalg.eigh(h)
        psi[:] = v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))
        if (s + 1) % renorm_every == 0 or s == n_steps - 1:
            nrm = float(np.linalg.norm(psi))
            drift = abs(nrm - 1.0)
            if drift > max_drift:
                max_drift = drift
            psi /= nrm
            if drift > ABORT_DRIFT:
                status = 2
                break
            if drift > WARN_DRIFT:
                status = 1
        if stride > 0 and (s + 1) % stride == 0:
            snaps[row] = psi
            row += 1
    drift_out[0] = max_drift
    return status
