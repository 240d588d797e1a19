"""Pure-Python numeric kernels.

Reference implementation of the routines in ``_kernels.pyx``; the compiled
module must agree with these to the last bit (same operation order, no
fused multiply-add), which the backend parity tests check.
"""

import math

import numpy as np

GOLDEN = 0.3819660112501051  # (3 - sqrt(5)) / 2
SQRT_EPS = 1.4901161193847656e-08


def parabolic_vertex(a, fa, b, fb, c, fc):
    """Abscissa of the vertex of the parabola through three points.

    Returns ``nan`` when the points are collinear (zero denominator).
    """
    num = (b - a) * (b - a) * (fb - fc) - (b - c) * (b - c) * (fb - fa)
    den = (b - a) * (fb - fc) - (b - c) * (fb - fa)
    if den == 0.0:
        return math.nan
    return b - 0.5 * num / den


def modified_brent_max(f, lo, hi, xtol, max_iter, eps, shortcut):
    """Maximise ``f`` on ``[lo, hi]`` with bounded Brent and a monotone check.

    Brent runs on ``-f``. With ``shortcut`` set, after the first iteration the
    bracket end that did not move is tested: if ``f`` there is at least its
    value ``eps`` inside the interval and at least every value seen so far,
    the function is taken as monotone and that end is returned.

    Returns ``(t_best, f_best, nevals, converged, shortcut_taken)`` where
    ``f_best`` is the largest value of ``f`` at any evaluated point and
    ``t_best`` the point where it was seen.
    """
    a = lo
    b = hi
    x = a + GOLDEN * (b - a)
    w = x
    v = x
    fx = -f(x)
    fw = fx
    fv = fx
    nev = 1
    t_best = x
    f_best = -fx
    lo_done = False
    hi_done = False
    d = 0.0
    e = 0.0
    it = 0
    converged = False
    while True:
        xm = 0.5 * (a + b)
        tol1 = SQRT_EPS * abs(x) + xtol / 3.0
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            converged = True
            break
        if it >= max_iter:
            break
        golden = True
        if abs(e) > tol1:
            # parabola through (x, fx), (w, fw), (v, fv)
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            etemp = e
            e = d
            # accept only inside the bracket and shorter than half the step
            # before last
            if abs(p) < abs(0.5 * q * etemp) and p > q * (a - x) and p < q * (b - x):
                golden = False
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if xm >= x else -tol1
        if golden:
            e = (a - x) if x >= xm else (b - x)
            d = GOLDEN * e
        if abs(d) >= tol1:
            u = x + d
        elif d > 0.0:
            u = x + tol1
        else:
            u = x - tol1
        fu = -f(u)
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
            # approached from below and no larger value seen anywhere
            if f_end >= f_best:
                return end, f_end, nev, True, True
    # the interior search never samples the ends; look at an end it converged onto
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


def choose_index(rates, u):
    """Inverse-CDF multinomial draw over index-ordered cumulative rates.

    Returns -1 when every rate is zero.
    """
    n = len(rates)
    total = 0.0
    for i in range(n):
        total += rates[i]
    if not total > 0.0:
        return -1
    target = u * total
    acc = 0.0
    last = -1
    for i in range(n):
        r = rates[i]
        if r > 0.0:
            last = i
            acc += r
            if acc > target:
                return i
    return last


def segment_moments(times, positions, velocities, t_start, t_end):
    """Exact integrals of ``x`` and ``x x^T`` along a piecewise-linear path.

    Node ``k`` carries the velocity used on ``[times[k], times[k+1]]``. Only
    the part of the path inside ``[t_start, t_end]`` contributes. Returns
    ``(int_x, int_xx, duration)``.
    """
    times = np.asarray(times, dtype=float)
    X = np.asarray(positions, dtype=float)
    V = np.asarray(velocities, dtype=float)
    s = np.maximum(times[:-1], t_start)
    e = np.minimum(times[1:], t_end)
    L = np.where(e > s, e - s, 0.0)
    A = X[:-1] + V[:-1] * (s - times[:-1])[:, None]
    Vs = V[:-1]
    Lc = L[:, None]
    int_x = (A * Lc + 0.5 * Vs * Lc * Lc).sum(axis=0)
    int_xx = (
        np.einsum("k,ki,kj->ij", L, A, A)
        + 0.5 * np.einsum("k,ki,kj->ij", L * L, A, Vs)
        + 0.5 * np.einsum("k,ki,kj->ij", L * L, Vs, A)
        + np.einsum("k,ki,kj->ij", L * L * L / 3.0, Vs, Vs)
    )
    return int_x, int_xx, float(L.sum())


def positions_at(times, positions, velocities, grid):
    """Positions of a piecewise-linear path at sorted query times."""
    times = np.asarray(times, dtype=float)
    X = np.asarray(positions, dtype=float)
    V = np.asarray(velocities, dtype=float)
    grid = np.asarray(grid, dtype=float)
    k = np.searchsorted(times, grid, side="right") - 1
    k = np.clip(k, 0, times.shape[0] - 1)
    return X[k] + V[k] * (grid - times[k])[:, None]


def batch_means(samples, n_batches):
    """Per-column sample variance and variance of batch means.

    Uses the first ``n_batches * (n // n_batches)`` rows. Returns
    ``(var, var_batch, batch_size, n_used)``.
    """
    Y = np.asarray(samples, dtype=float)
    n = Y.shape[0]
    b = n // n_batches
    m = b * n_batches
    Y = Y[:m]
    var = Y.var(axis=0, ddof=1)
    means = Y.reshape(n_batches, b, -1).mean(axis=1)
    var_b = means.var(axis=0, ddof=1)
    return var, var_b, b, m
