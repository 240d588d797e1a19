# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels; a line-by-line twin of ``_kernels_py``.

Scalar kernels reproduce the Python results bit for bit (same operation
order, built without floating-point contraction). Array kernels sum in a
plain loop and agree with the numpy reference to rounding.
"""

from libc.math cimport fabs, NAN

import numpy as np
cimport numpy as cnp

cnp.import_array()

GOLDEN = 0.3819660112501051
SQRT_EPS = 1.4901161193847656e-08

cdef double _GOLDEN = 0.3819660112501051
cdef double _SQRT_EPS = 1.4901161193847656e-08


cpdef double parabolic_vertex(double a, double fa, double b, double fb, double c, double fc):
    cdef double num = (b - a) * (b - a) * (fb - fc) - (b - c) * (b - c) * (fb - fa)
    cdef double den = (b - a) * (fb - fc) - (b - c) * (fb - fa)
    if den == 0.0:
        return NAN
    return b - 0.5 * num / den


def modified_brent_max(f, double lo, double hi, double xtol, int max_iter, double eps, bint shortcut):
    cdef double a = lo, b = hi
    cdef double x = a + _GOLDEN * (b - a)
    cdef double w = x, v = x
    cdef double fx = -<double>f(x)
    cdef double fw = fx, fv = fx
    cdef long nev = 1
    cdef double t_best = x
    cdef double f_best = -fx
    cdef bint lo_done = False, hi_done = False
    cdef double d = 0.0, e = 0.0
    cdef int it = 0
    cdef bint converged = False
    cdef double xm, tol1, tol2, r, q, p, etemp, u, fu
    cdef double end, probe, f_end, f_probe
    cdef bint golden
    while True:
        xm = 0.5 * (a + b)
        tol1 = _SQRT_EPS * fabs(x) + xtol / 3.0
        tol2 = 2.0 * tol1
        if fabs(x - xm) <= tol2 - 0.5 * (b - a):
            converged = True
            break
        if it >= max_iter:
            break
        golden = True
        if fabs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = fabs(q)
            etemp = e
            e = d
            if fabs(p) < fabs(0.5 * q * etemp) and p > q * (a - x) and p < q * (b - x):
                golden = False
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if xm >= x else -tol1
        if golden:
            e = (a - x) if x >= xm else (b - x)
            d = _GOLDEN * e
        if fabs(d) >= tol1:
            u = x + d
        elif d > 0.0:
            u = x + tol1
        else:
            u = x - tol1
        fu = -<double>f(u)
        nev += 1
        if -fu > f_best:
            f_best = -fu
            t_best = u
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v = w
            fv = fw
            w = x
            fw = fx
            x = u
            fx = fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v = w
                fv = fw
                w = u
                fw = fu
            elif fu <= fv or v == x or v == w:
                v = u
                fv = fu
        it += 1
        if shortcut and it == 1:
            if b == hi:
                end = hi
                probe = hi - eps
                hi_done = True
            else:
                end = lo
                probe = lo + eps
                lo_done = True
            f_end = f(end)
            f_probe = f(probe)
            nev += 2
            if f_probe > f_best:
                f_best = f_probe
                t_best = probe
            if f_end >= f_best:
                return end, f_end, nev, True, True
    if not lo_done and x - lo <= 2.0 * tol2:
        f_end = f(lo)
        nev += 1
        if f_end > f_best:
            f_best = f_end
            t_best = lo
    if not hi_done and hi - x <= 2.0 * tol2:
        f_end = f(hi)
        nev += 1
        if f_end > f_best:
            f_best = f_end
            t_best = hi
    return t_best, f_best, nev, converged, False


def choose_index(rates, double u):
    cdef const double[:] r = np.ascontiguousarray(rates, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0], i
    cdef double total = 0.0, target, acc = 0.0
    cdef long last = -1
    for i in range(n):
        total += r[i]
    if not total > 0.0:
        return -1
    target = u * total
    for i in range(n):
        if r[i] > 0.0:
            last = i
            acc += r[i]
            if acc > target:
                return i
    return last


def segment_moments(times, positions, velocities, double t_start, double t_end):
    cdef const double[:] T = np.ascontiguousarray(times, dtype=np.float64)
    cdef const double[:, :] X = np.ascontiguousarray(positions, dtype=np.float64)
    cdef const double[:, :] V = np.ascontiguousarray(velocities, dtype=np.float64)
    cdef Py_ssize_t n = T.shape[0], dim = X.shape[1], k, i, j
    ix_arr = np.zeros(dim)
    ixx_arr = np.zeros((dim, dim))
    cdef double[:] ix = ix_arr
    cdef double[:, :] ixx = ixx_arr
    cdef double s, e, L, L2, L3, total = 0.0
    cdef double[:] A = np.empty(dim)
    for k in range(n - 1):
        s = T[k] if T[k] > t_start else t_start
        e = T[k + 1] if T[k + 1] < t_end else t_end
        if not e > s:
            continue
        L = e - s
        L2 = L * L
        L3 = L2 * L / 3.0
        total += L
        for i in range(dim):
            A[i] = X[k, i] + V[k, i] * (s - T[k])
            ix[i] += A[i] * L + 0.5 * V[k, i] * L * L
        for i in range(dim):
            for j in range(dim):
                ixx[i, j] += (L * A[i] * A[j] + 0.5 * L2 * A[i] * V[k, j]
                              + 0.5 * L2 * V[k, i] * A[j] + L3 * V[k, i] * V[k, j])
    return ix_arr, ixx_arr, total


def positions_at(times, positions, velocities, grid):
    cdef const double[:] T = np.ascontiguousarray(times, dtype=np.float64)
    cdef const double[:, :] X = np.ascontiguousarray(positions, dtype=np.float64)
    cdef const double[:, :] V = np.ascontiguousarray(velocities, dtype=np.float64)
    cdef const double[:] G = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t n = T.shape[0], m = G.shape[0], dim = X.shape[1], g, i
    cdef Py_ssize_t k = 0
    out_arr = np.empty((m, dim))
    cdef double[:, :] out = out_arr
    cdef double dt
    for g in range(m):
        # grid is sorted; advance to the last node at or before G[g]
        if g > 0 and G[g] < G[g - 1]:
            k = 0
        while k + 1 < n and T[k + 1] <= G[g]:
            k += 1
        dt = G[g] - T[k]
        for i in range(dim):
            out[g, i] = X[k, i] + V[k, i] * dt
    return out_arr


def batch_means(samples, Py_ssize_t n_batches):
    cdef const double[:, :] Y = np.ascontiguousarray(np.atleast_2d(np.asarray(samples, dtype=np.float64).T).T)
    cdef Py_ssize_t n = Y.shape[0], dim = Y.shape[1]
    cdef Py_ssize_t b = n // n_batches
    cdef Py_ssize_t m = b * n_batches, k, i, j
    var_arr = np.zeros(dim)
    varb_arr = np.zeros(dim)
    cdef double[:] var = var_arr
    cdef double[:] var_b = varb_arr
    cdef double mean, acc, dev, bm, bmean
    for i in range(dim):
        mean = 0.0
        for k in range(m):
            mean += Y[k, i]
        mean /= m
        acc = 0.0
        for k in range(m):
            dev = Y[k, i] - mean
            acc += dev * dev
        var[i] = acc / (m - 1)
        acc = 0.0
        for j in range(n_batches):
            bm = 0.0
            for k in range(j * b, (j + 1) * b):
                bm += Y[k, i]
            bm /= b
            dev = bm - mean
            acc += dev * dev
        var_b[i] = acc / (n_batches - 1)
    return var_arr, varb_arr, b, m
