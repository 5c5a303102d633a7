# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused stepping kernels for renormalized matrix-product chains.

One pass per replica fuses atom gather, small-matrix multiply, Frobenius
renormalization and log-scale accumulation, avoiding the per-step temporary
arrays of the pure numpy fallback.  Semantics match slwalk.kernels.pure
exactly up to floating-point associativity.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()


def step_matrix_chains(
    double[:, :, ::1] atoms,
    long long[:, ::1] idx,
    double[:, :, ::1] dirs,
    double[::1] logs,
    Py_ssize_t t0,
    Py_ssize_t t1,
    bint right_mult=False,
):
    """Advance dirs/logs in place through steps [t0, t1).

    Left mode:  M <- atoms[idx[r, t]] @ M;  right mode: M <- M @ atoms[idx[r, t]].
    After each multiply M is rescaled to unit Frobenius norm and the log of
    the norm is added to logs[r].
    """
    cdef Py_ssize_t nrep = dirs.shape[0]
    cdef Py_ssize_t d = dirs.shape[1]
    cdef Py_ssize_t r, t, i, j, k, a
    cdef double acc, nrm2, inv
    scratch = np.empty((d, d), dtype=np.float64)
    cdef double[:, ::1] tmp = scratch

    with nogil:
        for r in range(nrep):
            for t in range(t0, t1):
                a = <Py_ssize_t> idx[r, t]
                nrm2 = 0.0
                if right_mult:
                    for i in range(d):
                        for j in range(d):
                            acc = 0.0
                            for k in range(d):
                                acc += dirs[r, i, k] * atoms[a, k, j]
                            tmp[i, j] = acc
                            nrm2 += acc * acc
                else:
                    for i in range(d):
                        for j in range(d):
                            acc = 0.0
                            for k in range(d):
                                acc += atoms[a, i, k] * dirs[r, k, j]
                            tmp[i, j] = acc
                            nrm2 += acc * acc
                inv = 1.0 / sqrt(nrm2)
                for i in range(d):
                    for j in range(d):
                        dirs[r, i, j] = tmp[i, j] * inv
                logs[r] += 0.5 * log(nrm2)


def step_vector_chains(
    double[:, :, ::1] atoms,
    long long[:, ::1] idx,
    double[:, ::1] vecs,
    double[::1] logs,
    Py_ssize_t t0,
    Py_ssize_t t1,
):
    """Advance unit-vector chains v <- atoms[idx[r, t]] @ v with
    renormalization; logs accumulates the log norms."""
    cdef Py_ssize_t nrep = vecs.shape[0]
    cdef Py_ssize_t d = vecs.shape[1]
    cdef Py_ssize_t r, t, i, k, a
    cdef double acc, nrm2, inv
    scratch = np.empty(d, dtype=np.float64)
    cdef double[::1] tmp = scratch

    with nogil:
        for r in range(nrep):
            for t in range(t0, t1):
                a = <Py_ssize_t> idx[r, t]
                nrm2 = 0.0
                for i in range(d):
                    acc = 0.0
                    for k in range(d):
                        acc += atoms[a, i, k] * vecs[r, k]
                    tmp[i] = acc
                    nrm2 += acc * acc
                inv = 1.0 / sqrt(nrm2)
                for i in range(d):
                    vecs[r, i] = tmp[i] * inv
                logs[r] += 0.5 * log(nrm2)


def step_vector_chain_trace(
    double[:, :, ::1] atoms,
    long long[::1] idx,
    double[::1] vec,
    Py_ssize_t t0,
    Py_ssize_t t1,
    double[::1] out_lognorms,
):
    """Single-trajectory vector chain recording the per-step log norm
    increments (the time-average Lyapunov estimator)."""
    cdef Py_ssize_t d = vec.shape[0]
    cdef Py_ssize_t t, i, k, a
    cdef double acc, nrm2, inv
    scratch = np.empty(d, dtype=np.float64)
    cdef double[::1] tmp = scratch

    with nogil:
        for t in range(t0, t1):
            a = <Py_ssize_t> idx[t]
            nrm2 = 0.0
            for i in range(d):
                acc = 0.0
                for k in range(d):
                    acc += atoms[a, i, k] * vec[k]
                tmp[i] = acc
                nrm2 += acc * acc
            inv = 1.0 / sqrt(nrm2)
            for i in range(d):
                vec[i] = tmp[i] * inv
            out_lognorms[t] = 0.5 * log(nrm2)
