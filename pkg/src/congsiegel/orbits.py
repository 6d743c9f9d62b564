"""Gamma(N)-orbit decomposition of determinant-n primitive pairs.

Everything here is exact integer arithmetic. Matrices are 2x2 tuples of
rows, ((a, b), (c, d)); the columns are the vectors v1 = (a, c), v2 = (b, d).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .arith import euler_phi, group_index
from .lattice import CongruenceCondition

Mat = tuple[tuple[int, int], tuple[int, int]]


def mat_mul(X: Mat, Y: Mat) -> Mat:
    (a, b), (c, d) = X
    (e, f), (g, h) = Y
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def mat_det(X: Mat) -> int:
    (a, b), (c, d) = X
    return a * d - b * c


def mat_mod(X: Mat, N: int) -> Mat:
    (a, b), (c, d) = X
    return ((a % N, b % N), (c % N, d % N))


def columns(X: Mat) -> tuple[tuple[int, int], tuple[int, int]]:
    (a, b), (c, d) = X
    return (a, c), (b, d)


def solve_crt(a: int, b: int, m: int, n: int) -> tuple[int, int] | None:
    """x = a (mod m), x = b (mod n) for possibly non-coprime moduli.

    Returns (x, lcm) with 0 <= x < lcm, or None when a != b mod gcd(m, n).
    """
    if m < 1 or n < 1:
        raise ValueError("moduli must be positive")
    g = math.gcd(m, n)
    if (a - b) % g:
        return None
    lcm = m // g * n
    # m*k = b - a (mod n)  =>  k = ((b - a)/g) * (m/g)^-1  (mod n/g)
    ng = n // g
    k = ((b - a) // g) * pow(m // g, -1, ng) % ng if ng > 1 else 0
    return (a + m * k) % lcm, lcm


def sl2z_orbit_reps(n: int) -> list[Mat]:
    """[[1, l], [0, n]] for 1 <= l <= |n|, gcd(l, n) = 1: one per SL2(Z)-orbit."""
    if n == 0:
        raise ValueError("n must be nonzero")
    return [((1, ell), (0, n)) for ell in range(1, abs(n) + 1) if math.gcd(ell, n) == 1]


@dataclass(frozen=True)
class CosetRep:
    residue: Mat
    lift: Mat


def _lift_sl2(M: Mat, N: int) -> Mat:
    """Integral matrix of determinant 1 reducing to M mod N."""
    (a, b), (c, d) = M
    if N == 1:
        return ((1, 0), (0, 1))
    # first column: a primitive integer vector congruent to (a, c)
    a1 = a if a else N
    for k in range(a1 + 1):
        c1 = c + k * N
        if math.gcd(a1, c1) == 1:
            break
    else:
        raise ArithmeticError(f"no primitive lift of column {(a, c)} mod {N}")
    # complete to an SL2(Z) matrix [[a1, b0], [c1, d0]]
    g, x, y = _xgcd(a1, c1)
    b0, d0 = -y, x
    assert a1 * d0 - b0 * c1 == 1
    # [[a1, b0],[c1, d0]]^-1 M = [[1, s],[0, 1]] mod N
    s = (d0 * b - b0 * d) % N
    lift = mat_mul(((a1, b0), (c1, d0)), ((1, s), (0, 1)))
    if mat_det(lift) != 1 or mat_mod(lift, N) != mat_mod(M, N):
        raise ArithmeticError(f"lift failed for {M} mod {N}")
    return lift


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def sl2_mod_elements(N: int) -> list[Mat]:
    """All of SL2(Z/NZ), lexicographic in (a, b, c, d)."""
    return [
        ((a, b), (c, d))
        for a, b, c, d in itertools.product(range(N), repeat=4)
        if (a * d - b * c) % N == 1 % N
    ]


def coset_reps_mod_N(N: int) -> list[CosetRep]:
    if N < 1:
        raise ValueError("N must be positive")
    if N > 12:
        raise ValueError("coset enumeration limited to N <= 12")
    reps = [CosetRep(M, _lift_sl2(M, N)) for M in sl2_mod_elements(N)]
    assert len(reps) == group_index(N)
    return reps


def in_gamma_N(G: Mat, N: int) -> bool:
    return mat_det(G) == 1 and mat_mod(G, N) == mat_mod(((1, 0), (0, 1)), N)


def same_gammaN_orbit(X: Mat, Y: Mat, N: int) -> bool:
    """True iff Y = gX for some g in Gamma(N); g = Y adj(X) / det X."""
    n = mat_det(X)
    if n == 0 or mat_det(Y) != n:
        raise ValueError("need det X == det Y != 0")
    (a, b), (c, d) = X
    adj = ((d, -b), (-c, a))
    num = mat_mul(Y, adj)
    if any(e % n for row in num for e in row):
        return False
    G = tuple(tuple(e // n for e in row) for row in num)
    return in_gamma_N(G, N)


def _candidates(N: int, sigma: CongruenceCondition, n: int, reps=None):
    """Matrices gamma_i [[1, l], [0, n]] with both columns = v0 (mod N)."""
    reps = coset_reps_mod_N(N) if reps is None else reps
    v0 = sigma.v0
    out = []
    for rep in reps:
        first_ok = (rep.lift[0][0] - v0[0]) % N == 0 and (rep.lift[1][0] - v0[1]) % N == 0
        for H in sl2z_orbit_reps(n):
            X = mat_mul(rep.lift, H)
            c1, c2 = columns(X)
            both = all((c[i] - v0[i]) % N == 0 for c in (c1, c2) for i in (0, 1))
            # columns agree mod N exactly when l = 1 (mod N), given the first column is in class
            if first_ok and n % N == 0:
                assert both == ((H[0][1] - 1) % N == 0), (rep, H)
            if both:
                out.append(X)
    return out


def _dedupe(cands, N: int) -> list[Mat]:
    classes: list[Mat] = []
    for X in cands:
        if not any(same_gammaN_orbit(R, X, N) for R in classes):
            classes.append(X)
    return classes


def count_orbits(N: int, sigma: CongruenceCondition, n: int, reps=None) -> int:
    """Number of Gamma(N)-orbits in D_n^(sigma) by explicit deduplication."""
    if N > 8 or abs(n) > 60:
        raise ValueError("count_orbits is limited to N <= 8, |n| <= 60")
    if sigma.N != N:
        raise ValueError("sigma modulus differs from N")
    return len(_dedupe(_candidates(N, sigma, n, reps), N))


def predicted_orbits(N: int, n: int) -> int:
    if n % N:
        return 0
    return N * euler_phi(abs(n)) // euler_phi(N)


def count_mixed_orbits(N: int, sigma1: CongruenceCondition, sigma2: CongruenceCondition, n: int, reps=None) -> int:
    """Empirical orbit count in D_n^(sigma1, sigma2); no closed form is asserted."""
    reps = coset_reps_mod_N(N) if reps is None else reps
    cands = []
    for rep in reps:
        for H in sl2z_orbit_reps(n):
            X = mat_mul(rep.lift, H)
            c1, c2 = columns(X)
            if all((c1[i] - sigma1.v0[i]) % N == 0 and (c2[i] - sigma2.v0[i]) % N == 0 for i in (0, 1)):
                cands.append(X)
    return len(_dedupe(cands, N))
