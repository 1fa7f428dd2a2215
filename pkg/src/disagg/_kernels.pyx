# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled projection kernels.

Same contracts as :mod:`disagg._fallback`; selected by :mod:`disagg.kernels`.
"""
from libc.math cimport fabs
from libcpp.algorithm cimport sort
from libcpp.vector cimport vector

import numpy as np


cdef inline double _clip(double v, double lo, double hi) noexcept nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef double _excess(const double* y, const double* l, const double* u,
                    double E, double tau, Py_ssize_t T) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t t
    for t in range(T):
        s += _clip(y[t] + tau, l[t], u[t])
    return s - E


cdef int _project_row(const double* y, const double* l, const double* u,
                      double E, double* out, Py_ssize_t T,
                      vector[double]& bp) noexcept nogil:
    cdef double sl = 0.0, su = 0.0, tol, lo, hi, mid, v, rest, tau
    cdef Py_ssize_t t, a, b, m, nfree
    for t in range(T):
        sl += l[t]
        su += u[t]
    tol = 1e-12 * (fabs(E) if fabs(E) > 1.0 else 1.0)
    if sl > E + tol or su < E - tol:
        return 1

    bp.clear()
    for t in range(T):
        bp.push_back(l[t] - y[t])
        bp.push_back(u[t] - y[t])
    sort(bp.begin(), bp.end())

    # first breakpoint index with g >= 0 (g is nondecreasing, g(last) >= 0)
    a = 0
    b = 2 * T - 1
    while a < b:
        m = (a + b) // 2
        if _excess(y, l, u, E, bp[m], T) >= 0.0:
            b = m
        else:
            a = m + 1

    if a == 0:
        tau = bp[0]
    else:
        lo = bp[a - 1]
        hi = bp[a]
        mid = 0.5 * (lo + hi)
        rest = E
        nfree = 0
        for t in range(T):
            v = y[t] + mid
            if v <= l[t]:
                rest -= l[t]
            elif v >= u[t]:
                rest -= u[t]
            else:
                rest -= y[t]
                nfree += 1
        if nfree > 0:
            tau = rest / nfree
        else:
            tau = lo
    for t in range(T):
        out[t] = _clip(y[t] + tau, l[t], u[t])
    return 0


def project_rows(double[:, ::1] Y, double[::1] E, double[:, ::1] L,
                 double[:, ::1] U, double[:, ::1] out):
    """Project every row of ``Y`` on its agent set; return -1 or the first infeasible row."""
    cdef Py_ssize_t N = Y.shape[0], T = Y.shape[1], n
    cdef vector[double] bp
    cdef int bad = -1
    bp.reserve(2 * T)
    with nogil:
        for n in range(N):
            if _project_row(&Y[n, 0], &L[n, 0], &U[n, 0], E[n], &out[n, 0], T, bp):
                bad = n
                break
    return bad


def apm_step(double[:, ::1] Y, double[::1] E, double[:, ::1] L,
             double[:, ::1] U, double[::1] p, double[:, ::1] X_out,
             double[:, ::1] Y_out, double[::1] nu_out):
    """One x-then-y double projection; returns -1 or the first infeasible row."""
    cdef Py_ssize_t N = Y.shape[0], T = Y.shape[1], n, t
    cdef vector[double] bp
    cdef int bad = -1
    bp.reserve(2 * T)
    with nogil:
        for n in range(N):
            if _project_row(&Y[n, 0], &L[n, 0], &U[n, 0], E[n], &X_out[n, 0], T, bp):
                bad = n
                break
        if bad < 0:
            for t in range(T):
                nu_out[t] = 0.0
            for n in range(N):
                for t in range(T):
                    nu_out[t] += X_out[n, t]
            for t in range(T):
                nu_out[t] = (p[t] - nu_out[t]) / N
            for n in range(N):
                for t in range(T):
                    Y_out[n, t] = X_out[n, t] + nu_out[t]
    return bad
