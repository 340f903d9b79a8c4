# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: half-plane clipping, envelope cells, tableau pivots."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef Py_ssize_t _clip(const double[:, ::1] src, Py_ssize_t k, double[:, ::1] dst,
                      double a, double b, double c, double tol):
    cdef Py_ssize_t idx, jdx, n = 0
    cdef double vp, vq, t, den
    cdef bint ip, iq
    if k == 0:
        return 0
    for idx in range(k):
        jdx = idx + 1
        if jdx == k:
            jdx = 0
        vp = src[idx, 0] * a + src[idx, 1] * b + c
        vq = src[jdx, 0] * a + src[jdx, 1] * b + c
        ip = vp <= tol
        iq = vq <= tol
        if ip:
            dst[n, 0] = src[idx, 0]
            dst[n, 1] = src[idx, 1]
            n += 1
        if ip != iq:
            den = vp - vq
            t = vp / den if den != 0.0 else 0.0
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            dst[n, 0] = src[idx, 0] + t * (src[jdx, 0] - src[idx, 0])
            dst[n, 1] = src[idx, 1] + t * (src[jdx, 1] - src[idx, 1])
            n += 1
    return n


def clip_halfplane(poly, double a, double b, double c, double tol):
    cdef const double[:, ::1] src = np.ascontiguousarray(poly, dtype=np.float64)
    cdef Py_ssize_t k = src.shape[0]
    out = np.empty((2 * k + 2, 2))
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t n = _clip(src, k, dst, a, b, c, tol)
    return out[:n].copy()


def envelope_cell(grads, offsets, Py_ssize_t i, domain, double tol):
    cdef const double[:, ::1] G = np.ascontiguousarray(grads, dtype=np.float64)
    cdef const double[::1] C = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef const double[:, ::1] dom = np.ascontiguousarray(domain, dtype=np.float64)
    cdef Py_ssize_t m = G.shape[0]
    cdef Py_ssize_t cap = dom.shape[0] + 2 * m + 4
    bufa = np.empty((cap, 2))
    bufb = np.empty((cap, 2))
    cdef double[:, ::1] A = bufa
    cdef double[:, ::1] B = bufb
    cdef double[:, ::1] tmp
    cdef Py_ssize_t k = dom.shape[0], j, r
    cdef double a, b, c, g
    for r in range(k):
        A[r, 0] = dom[r, 0]
        A[r, 1] = dom[r, 1]
    cur, other = bufa, bufb
    for j in range(m):
        if j == i:
            continue
        a = G[i, 0] - G[j, 0]
        b = G[i, 1] - G[j, 1]
        c = C[i] - C[j]
        g = sqrt(a * a + b * b)
        if g == 0.0:
            if c > 0.0:
                return np.zeros((0, 2))
            continue
        k = _clip(A, k, B, a / g, b / g, c / g, tol)
        if k == 0:
            return np.zeros((0, 2))
        tmp = A
        A = B
        B = tmp
        cur, other = other, cur
    return np.asarray(cur)[:k].copy()


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t c):
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1], i, j
    cdef double inv = 1.0 / T[r, c]
    cdef double f
    for j in range(n):
        T[r, j] *= inv
    T[r, c] = 1.0
    for i in range(m):
        if i == r:
            continue
        f = T[i, c]
        if f == 0.0:
            continue
        for j in range(n):
            T[i, j] -= f * T[r, j]
        T[i, c] = 0.0
