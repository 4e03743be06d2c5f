# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled propagation kernel; semantics documented in _kernel_py.py.

The per-step Hamiltonian is accumulated directly in conjugated form: LAPACK's
zheev reads the buffer column-major, and for hermitian H the C-order array
holding conj(H) is exactly H in column-major.  Eigenvectors then come back in
the rows of the same buffer (a[m, i] = <i|eigvec m>), which keeps both
transform loops contiguous.
"""

import numpy as np

from libc.math cimport cos, fabs, sin, sqrt
from scipy.linalg.cython_lapack cimport zheev

WARN_DRIFT = 1e-6
ABORT_DRIFT = 1e-4

cdef double _WARN = 1e-6
cdef double _ABORT = 1e-4


def evolve_channels(double complex[::1] psi,
                    double complex[:, ::1] hstat,
                    double[::1] zdiag,
                    double[::1] noise,
                    double complex[:, ::1] coeffs,
                    double complex[:, :, ::1] mats,
                    double dt,
                    double complex[:, ::1] snaps,
                    Py_ssize_t stride,
                    Py_ssize_t renorm_every,
                    double[::1] drift_out):
    cdef Py_ssize_t dim = hstat.shape[0]
    cdef Py_ssize_t n_steps = noise.shape[0]
    cdef Py_ssize_t n_ch = mats.shape[0]
    cdef int n = <int> dim
    cdef int lwork = 4 * n
    cdef int info = 0
    cdef char jobz = b'V'
    cdef char uplo = b'L'

    # channel nonzeros as flat triplet lists; most coupling matrices are
    # sparse (a single |upper><lower| element, or one sideband stripe)
    nz_i_l, nz_j_l, nz_v_l, starts_l = [], [], [], [0]
    base = np.asarray(hstat)
    for k in range(n_ch):
        ii, jj = np.nonzero(np.asarray(mats[k]))
        nz_i_l.extend(ii.tolist())
        nz_j_l.extend(jj.tolist())
        nz_v_l.extend(np.asarray(mats[k])[ii, jj].tolist())
        starts_l.append(len(nz_i_l))
    cdef long long[::1] nz_i = np.asarray(nz_i_l, dtype=np.int64)
    cdef long long[::1] nz_j = np.asarray(nz_j_l, dtype=np.int64)
    cdef double complex[::1] nz_v = np.asarray(nz_v_l, dtype=np.complex128)
    cdef long long[::1] starts = np.asarray(starts_l, dtype=np.int64)

    cdef double complex[:, ::1] hconj = np.conj(base)
    cdef double complex[:, ::1] a = np.empty((dim, dim), dtype=np.complex128)
    cdef double[::1] w = np.empty(dim, dtype=np.float64)
    cdef double complex[::1] work = np.empty(lwork, dtype=np.complex128)
    cdef double[::1] rwork = np.empty(max(1, 3 * dim - 2), dtype=np.float64)
    cdef double complex[::1] y = np.empty(dim, dtype=np.complex128)

    cdef Py_ssize_t s, i, j, k2, m, p, row = 0
    cdef int status = 0
    cdef double max_drift = 0.0, drift, nrm, x, ph
    cdef double complex c, cc, v, acc
    cdef bint has_z = zdiag is not None

    with nogil:
        for s in range(n_steps):
            # a = conj(H(s))
            for i in range(dim):
                for j in range(dim):
                    a[i, j] = hconj[i, j]
            if has_z:
                x = noise[s]
                for i in range(dim):
                    a[i, i] = a[i, i] + x * zdiag[i]
            for k2 in range(n_ch):
                c = coeffs[k2, s]
                cc = c.conjugate()
                for p in range(starts[k2], starts[k2 + 1]):
                    i = nz_i[p]
                    j = nz_j[p]
                    v = nz_v[p]
                    # H[i,j] += c*v and H[j,i] += conj(c*v), conjugated here
                    a[i, j] = a[i, j] + cc * v.conjugate()
                    a[j, i] = a[j, i] + c * v
            zheev(&jobz, &uplo, &n, &a[0, 0], &n, &w[0], &work[0], &lwork,
                  &rwork[0], &info)
            if info != 0:
                status = 3
                break
            # y = V^dag psi; eigvec m lives in row m of a
            for m in range(dim):
                acc = 0
                for i in range(dim):
                    acc = acc + a[m, i].conjugate() * psi[i]
                ph = -w[m] * dt
                y[m] = acc * (cos(ph) + 1j * sin(ph))
            for i in range(dim):
                acc = 0
                for m in range(dim):
                    acc = acc + a[m, i] * y[m]
                psi[i] = acc
            if (s + 1) % renorm_every == 0 or s == n_steps - 1:
                nrm = 0.0
                for i in range(dim):
                    nrm += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
                nrm = sqrt(nrm)
                drift = fabs(nrm - 1.0)
                if drift > max_drift:
                    max_drift = drift
                for i in range(dim):
                    psi[i] = psi[i] / nrm
                if drift > _ABORT:
                    status = 2
                    break
                if drift > _WARN:
                    status = 1
            if stride > 0 and (s + 1) % stride == 0:
                for i in range(dim):
                    snaps[row, i] = psi[i]
                row += 1
    drift_out[0] = max_drift
    return status
