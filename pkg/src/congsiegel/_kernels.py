"""Compiled lattice-point enumeration kernels.

Region codes: 0 disk (R), 1 rect (x_lo, x_hi, y_lo, y_hi), 2 annulus
(R_in, R_out). Filter modes: 0 all nonzero, 1 primitive, 2 primitive and
congruent to (r1, r2) mod N. Boundaries are closed.
"""

import math

import numpy as np
from numba import njit

DISK, RECT, ANNULUS = 0, 1, 2
ALL, PRIMITIVE, CLASS = 0, 1, 2
PSI_POWER, PSI_TABLE = 0, 1


@njit(cache=True, nogil=True)
def _gcd(a, b):
    a = abs(a)
    b = abs(b)
    while b:
        a, b = b, a % b
    return a


@njit(cache=True, nogil=True)
def _member(code, params, x, y):
    if code == DISK:
        return x * x + y * y <= params[0] * params[0]
    if code == RECT:
        return params[0] <= x <= params[1] and params[2] <= y <= params[3]
    r2 = x * x + y * y
    return params[0] * params[0] <= r2 <= params[1] * params[1]


@njit(cache=True, nogil=True)
def _bbox(code, params):
    if code == DISK:
        return -params[0], params[0], -params[0], params[0]
    if code == RECT:
        return params[0], params[1], params[2], params[3]
    return -params[1], params[1], -params[1], params[1]


@njit(cache=True, nogil=True)
def _interval(coef, offset, lo, hi):
    # {p : lo <= p*coef + offset <= hi}; unbounded when coef == 0
    if coef == 0.0:
        return -np.inf, np.inf
    a = (lo - offset) / coef
    b = (hi - offset) / coef
    if a > b:
        a, b = b, a
    return a, b


@njit(cache=True, nogil=True)
def _first_in_class(start, r, N):
    return start + ((r - start) % N)


@njit(cache=True, nogil=True)
def _scan(g11, g12, g21, g22, code, params, mode, r1, r2, N, out, collect):
    """Count (and optionally record) integer v = (p, q) with g v in the region."""
    xlo, xhi, ylo, yhi = _bbox(code, params)
    if xlo > xhi or ylo > yhi:
        return 0
    det = g11 * g22 - g12 * g21
    qmin = np.inf
    qmax = -np.inf
    for wx in (xlo, xhi):
        for wy in (ylo, yhi):
            qv = (-g21 * wx + g11 * wy) / det
            qmin = min(qmin, qv)
            qmax = max(qmax, qv)
    q_lo = int(math.floor(qmin)) - 1
    q_hi = int(math.ceil(qmax)) + 1
    step = 1
    if mode == CLASS:
        step = N
        q_lo = _first_in_class(q_lo, r2, N)
    count = 0
    q = q_lo
    while q <= q_hi:
        a1, b1 = _interval(g11, q * g12, xlo, xhi)
        a2, b2 = _interval(g21, q * g22, ylo, yhi)
        lo = max(a1, a2)
        hi = min(b1, b2)
        if lo <= hi + 2.0:
            p_lo = int(math.floor(lo)) - 1
            p_hi = int(math.ceil(hi)) + 1
            if mode == CLASS:
                p_lo = _first_in_class(p_lo, r1, N)
            p = p_lo
            while p <= p_hi:
                x = p * g11 + q * g12
                y = p * g21 + q * g22
                if _member(code, params, x, y):
                    ok = True
                    if mode == ALL:
                        ok = p != 0 or q != 0
                    elif _gcd(p, q) != 1:
                        ok = False
                    if ok:
                        if collect:
                            out[count, 0] = p
                            out[count, 1] = q
                        count += 1
                p += step
        q += step
    return count


@njit(cache=True, nogil=True)
def count_points(g, code, params, mode, r1, r2, N):
    dummy = np.empty((0, 2), dtype=np.int64)
    return _scan(g[0], g[1], g[2], g[3], code, params, mode, r1, r2, N, dummy, False)


@njit(cache=True, nogil=True)
def collect_points(g, code, params, mode, r1, r2, N, out):
    return _scan(g[0], g[1], g[2], g[3], code, params, mode, r1, r2, N, out, True)


@njit(cache=True, nogil=True)
def count_batch(G, scales, residues, N, mode, code, params):
    """Counts for many bases; row i uses the basis scales[i] * G[i]."""
    M = G.shape[0]
    out = np.empty(M, dtype=np.int64)
    dummy = np.empty((0, 2), dtype=np.int64)
    for i in range(M):
        s = scales[i]
        out[i] = _scan(
            s * G[i, 0], s * G[i, 1], s * G[i, 2], s * G[i, 3],
            code, params, mode, residues[i, 0], residues[i, 1], N, dummy, False,
        )
    return out


@njit(cache=True, nogil=True)
def count_disks_nested(g, radii, r1, r2, N):
    """Class-filtered primitive counts in each of the increasing disks radii."""
    R = radii[-1]
    params = np.array([R])
    xlo, xhi, ylo, yhi = -R, R, -R, R
    det = g[0] * g[3] - g[1] * g[2]
    qmin = np.inf
    qmax = -np.inf
    for wx in (xlo, xhi):
        for wy in (ylo, yhi):
            qv = (-g[2] * wx + g[0] * wy) / det
            qmin = min(qmin, qv)
            qmax = max(qmax, qv)
    q = _first_in_class(int(math.floor(qmin)) - 1, r2, N)
    q_hi = int(math.ceil(qmax)) + 1
    r_sq = radii * radii
    counts = np.zeros(radii.shape[0], dtype=np.int64)
    while q <= q_hi:
        a1, b1 = _interval(g[0], q * g[1], xlo, xhi)
        a2, b2 = _interval(g[2], q * g[3], ylo, yhi)
        lo = max(a1, a2)
        hi = min(b1, b2)
        if lo <= hi + 2.0:
            p = _first_in_class(int(math.floor(lo)) - 1, r1, N)
            p_hi = int(math.ceil(hi)) + 1
            while p <= p_hi:
                x = p * g[0] + q * g[1]
                y = p * g[2] + q * g[3]
                d2 = x * x + y * y
                if d2 <= r_sq[-1] and _gcd(p, q) == 1:
                    for k in range(radii.shape[0]):
                        if d2 <= r_sq[k]:
                            counts[k] += 1
                p += N
        q += N
    return counts


@njit(cache=True, nogil=True)
def psi_eval(kind, params, breaks, values, t):
    if kind == PSI_POWER:
        return params[0] * t ** (-params[1])
    i = np.searchsorted(breaks, t, side="right") - 1
    if i < 0:
        i = 0
    return values[i]


@njit(cache=True, nogil=True)
def count_khintchine_box(g11, g12, g22, T, kind, params, breaks, values, mode, r1, r2, N):
    """Points of the upper-triangular lattice [[g11, g12], [0, g22]] Z^2 in
    {|X| < psi(|Y|), 0 < |Y| <= T} with the given filter."""
    q_max = int(math.floor(T / abs(g22))) + 1
    count = 0
    for q in range(-q_max, q_max + 1):
        if q == 0:
            continue
        if mode == CLASS and (q - r2) % N != 0:
            continue
        Y = q * g22
        if abs(Y) > T:
            continue
        w = psi_eval(kind, params, breaks, values, abs(Y))
        a = (-w - q * g12) / g11
        b = (w - q * g12) / g11
        if a > b:
            a, b = b, a
        p = int(math.floor(a)) - 1
        if mode == CLASS:
            p = _first_in_class(p, r1, N)
        step = N if mode == CLASS else 1
        p_hi = int(math.ceil(b)) + 1
        while p <= p_hi:
            X = p * g11 + q * g12
            if abs(X) < w:
                if mode == ALL or _gcd(p, q) == 1:
                    count += 1
            p += step
    return count


@njit(cache=True, nogil=True)
def khintchine_counts(x, T_list, kind, params, breaks, values, mode, r1, r2, N):
    """Counts of (p, q) with |q x - p| < psi(|q|), 1 <= |q| <= T for each T
    in the increasing T_list, in one pass over q."""
    out = np.zeros(T_list.shape[0], dtype=np.int64)
    if T_list.shape[0] == 0:
        return out
    q_top = int(math.floor(T_list[-1]))
    k = 0
    running = 0
    for aq in range(1, q_top + 1):
        while k < T_list.shape[0] and T_list[k] < aq:
            out[k] = running
            k += 1
        w = psi_eval(kind, params, breaks, values, float(aq))
        for q in (aq, -aq):
            if mode == CLASS and (q - r2) % N != 0:
                continue
            c = q * x
            p = int(math.floor(c - w))
            p_hi = int(math.ceil(c + w))
            if mode == CLASS:
                p = _first_in_class(p, r1, N)
            step = N if mode == CLASS else 1
            while p <= p_hi:
                if abs(c - p) < w and (mode == ALL or _gcd(p, q) == 1):
                    running += 1
                p += step
    while k < T_list.shape[0]:
        out[k] = running
        k += 1
    return out
