# Compiled inner loops. Every function here has a numpy twin in
# _kernels_py.py with the same signature; kgcontrast.kernels picks one.
from libc.math cimport sqrt, exp, log, INFINITY

import numpy as np


def adagrad_rows(double[:, ::1] param, double[:, ::1] acc,
                 const long long[::1] rows, const double[:, ::1] grad,
                 double lr, double eps):
    cdef Py_ssize_t i, j, r
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t m = grad.shape[1]
    cdef double g, a
    with nogil:
        for i in range(n):
            r = rows[i]
            for j in range(m):
                g = grad[i, j]
                a = acc[r, j] + g * g
                acc[r, j] = a
                param[r, j] = param[r, j] - lr * g / (sqrt(a) + eps)


def scatter_add_rows(double[:, ::1] out, const long long[::1] rows,
                     const double[:, ::1] vals):
    cdef Py_ssize_t i, j, r
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t m = vals.shape[1]
    with nogil:
        for i in range(n):
            r = rows[i]
            for j in range(m):
                out[r, j] = out[r, j] + vals[i, j]


def filtered_ranks(const double[:, ::1] scores, const long long[::1] answers,
                   const long long[::1] slots, const long long[::1] fptr,
                   const long long[::1] fidx):
    cdef Py_ssize_t nq = scores.shape[0]
    cdef Py_ssize_t ne = scores.shape[1]
    cdef Py_ssize_t q, k, p, a, slot
    cdef long long cnt
    cdef double s
    out_arr = np.empty(nq, dtype=np.int64)
    cdef long long[::1] out = out_arr
    with nogil:
        for q in range(nq):
            a = answers[q]
            s = scores[q, a]
            if s != s:
                out[q] = ne
                continue
            cnt = 0
            for k in range(ne):
                if scores[q, k] >= s:
                    cnt += 1
            slot = slots[q]
            if slot >= 0:
                for p in range(fptr[slot], fptr[slot + 1]):
                    k = fidx[p]
                    if k != a and scores[q, k] >= s:
                        cnt -= 1
            out[q] = cnt
    return out_arr


def contrastive_coefficients(const double[:, ::1] sim,
                             const unsigned char[:, ::1] pos,
                             const long long[::1] self_col, double tau):
    # rows of sim/pos are anchors; self_col[i] is anchor i's own column
    cdef Py_ssize_t m = sim.shape[0]
    cdef Py_ssize_t n = sim.shape[1]
    cdef Py_ssize_t i, j, c
    cdef long long npos, nneg
    cdef double x, mx, z, lse, psum
    terms_arr = np.zeros(m, dtype=np.float64)
    counted_arr = np.zeros(m, dtype=np.uint8)
    w_arr = np.zeros((m, n), dtype=np.float64)
    cdef double[::1] terms = terms_arr
    cdef unsigned char[::1] counted = counted_arr
    cdef double[:, ::1] w = w_arr
    with nogil:
        for i in range(m):
            c = self_col[i]
            npos = 0
            nneg = 0
            psum = 0.0
            mx = -INFINITY
            for j in range(n):
                if j == c:
                    continue
                x = sim[i, j] / tau
                if pos[i, j]:
                    npos += 1
                    psum = psum + x
                else:
                    nneg += 1
                    if x > mx:
                        mx = x
            if npos == 0:
                continue
            counted[i] = 1
            if nneg == 0:
                continue
            z = 0.0
            for j in range(n):
                if j != c and not pos[i, j]:
                    x = exp(sim[i, j] / tau - mx)
                    w[i, j] = x
                    z = z + x
            lse = mx + log(z)
            terms[i] = lse - psum / npos
            for j in range(n):
                if j == c:
                    continue
                if pos[i, j]:
                    w[i, j] = -1.0 / (tau * npos)
                else:
                    w[i, j] = w[i, j] / (z * tau)
    return terms_arr, counted_arr, w_arr
