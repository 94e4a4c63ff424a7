# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled round sampler; same contract as ``_sampling_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _search(const double[::1] cdf, double u) noexcept nogil:
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t n = cdf.shape[0]
    while k < n - 1 and not (u < cdf[k]):
        k += 1
    return k


cdef inline Py_ssize_t _search_row(const double[:, ::1] cdf, Py_ssize_t row,
                                   double u) noexcept nogil:
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t n = cdf.shape[1]
    while k < n - 1 and not (u < cdf[row, k]):
        k += 1
    return k


def _as_2d(eve_cdf):
    if eve_cdf is None or np.size(eve_cdf) == 0:
        return np.zeros((1, 1), dtype=np.float64), False
    return np.ascontiguousarray(eve_cdf, dtype=np.float64), True


def sample_rounds(u, alice_cdf, eve_cdf, bob_cdf, double loss=0.0):
    cdef const double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] ac = np.ascontiguousarray(alice_cdf, dtype=np.float64)
    cdef const double[:, ::1] bc = np.ascontiguousarray(bob_cdf, dtype=np.float64)
    ec_arr, has_eve_py = _as_2d(eve_cdf)
    cdef const double[:, ::1] ec = ec_arr
    cdef bint has_eve = has_eve_py
    cdef Py_ssize_t n = uu.shape[0], i, s, e, row
    cdef Py_ssize_t no_click = bc.shape[1] - 1
    alice = np.empty(n, dtype=np.int64)
    eve = np.empty(n, dtype=np.int64)
    bob = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] a_out = alice
    cdef cnp.int64_t[::1] e_out = eve
    cdef cnp.int64_t[::1] b_out = bob
    with nogil:
        for i in range(n):
            s = _search(ac, uu[i, 0])
            a_out[i] = s
            if has_eve:
                e = _search_row(ec, s, uu[i, 1])
                e_out[i] = e
                row = e
            else:
                e_out[i] = -1
                row = s
            if uu[i, 3] < loss:
                b_out[i] = no_click
            else:
                b_out[i] = _search_row(bc, row, uu[i, 2])
    return alice, eve, bob


def joint_histogram(u, alice_cdf, eve_cdf, bob_cdf, double loss=0.0):
    cdef const double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] ac = np.ascontiguousarray(alice_cdf, dtype=np.float64)
    cdef const double[:, ::1] bc = np.ascontiguousarray(bob_cdf, dtype=np.float64)
    ec_arr, has_eve_py = _as_2d(eve_cdf)
    cdef const double[:, ::1] ec = ec_arr
    cdef bint has_eve = has_eve_py
    cdef Py_ssize_t n = uu.shape[0], i, s, e, k, row
    cdef Py_ssize_t n_e = (ec.shape[1] if has_eve else 0) + 1
    cdef Py_ssize_t no_click = bc.shape[1] - 1
    counts = np.zeros((ac.shape[0], n_e, bc.shape[1]), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] c = counts
    with nogil:
        for i in range(n):
            s = _search(ac, uu[i, 0])
            if has_eve:
                e = _search_row(ec, s, uu[i, 1])
                row = e
                e = e + 1
            else:
                e = 0
                row = s
            if uu[i, 3] < loss:
                k = no_click
            else:
                k = _search_row(bc, row, uu[i, 2])
            c[s, e, k] += 1
    return counts
