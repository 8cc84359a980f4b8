# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled partial-trace kernels over bit-indexed registers.

Same contract as ``_fallback``: callers pass the precomputed gather table
(see ``kernels.gather_indices``), so the hot loops here are pure index
arithmetic and accumulation, with no temporary d x d copies.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def ptrace_state_gathered(const cnp.complex128_t[::1] amps,
                          const cnp.int64_t[::1] gather,
                          Py_ssize_t dk, Py_ssize_t dr):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = \
        np.zeros((dk, dk), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] o = out
    cdef Py_ssize_t k1, k2, r
    cdef cnp.complex128_t a1, a2
    for k1 in range(dk):
        for k2 in range(k1, dk):
            a1 = 0
            for r in range(dr):
                a1 = a1 + amps[gather[k1 * dr + r]] * amps[gather[k2 * dr + r]].conjugate()
            o[k1, k2] = a1
            if k2 != k1:
                o[k2, k1] = a1.conjugate()
    return out


def ptrace_density_gathered(const cnp.complex128_t[:, ::1] rho,
                            const cnp.int64_t[::1] gather,
                            Py_ssize_t dk, Py_ssize_t dr):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = \
        np.zeros((dk, dk), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] o = out
    cdef Py_ssize_t k1, k2, r
    cdef cnp.complex128_t acc
    for k1 in range(dk):
        for k2 in range(k1, dk):
            acc = 0
            for r in range(dr):
                acc = acc + rho[gather[k1 * dr + r], gather[k2 * dr + r]]
            o[k1, k2] = acc
            if k2 != k1:
                o[k2, k1] = acc.conjugate()
    return out


def ptrace_state_batch_gathered(const cnp.complex128_t[:, ::1] batch,
                                const cnp.int64_t[::1] gather,
                                Py_ssize_t dk, Py_ssize_t dr):
    cdef Py_ssize_t ns = batch.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = \
        np.zeros((ns, dk, dk), dtype=np.complex128)
    cdef cnp.complex128_t[:, :, ::1] o = out
    cdef Py_ssize_t s, k1, k2, r
    cdef cnp.complex128_t acc
    for s in range(ns):
        for k1 in range(dk):
            for k2 in range(k1, dk):
                acc = 0
                for r in range(dr):
                    acc = acc + batch[s, gather[k1 * dr + r]] * batch[s, gather[k2 * dr + r]].conjugate()
                o[s, k1, k2] = acc
                if k2 != k1:
                    o[s, k2, k1] = acc.conjugate()
    return out
