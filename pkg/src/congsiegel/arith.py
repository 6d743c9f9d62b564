"""Exact and high-precision arithmetic kernels.

Multiplicative functions, restricted zeta values zeta_N(d), the determinant
kernel Phi_N and the partial sums of the totient over multiples of N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

EPS = np.finfo(float).eps


def _check_positive(n: int, name: str = "n") -> int:
    if isinstance(n, bool) or int(n) != n:
        raise TypeError(f"{name} must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise ValueError(f"{name} must be >= 1, got {n}")
    return n


def prime_factors(n: int) -> list[int]:
    """Distinct prime divisors of |n| in increasing order (trial division)."""
    n = abs(int(n))
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out.append(n)
    return out


def factorize(n: int) -> dict[int, int]:
    n = abs(int(n))
    out: dict[int, int] = {}
    for p in prime_factors(n):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out[p] = e
    return out


@dataclass(frozen=True)
class FactorTable:
    """Smallest-prime-factor table for 1..limit, shared read-only."""

    limit: int
    smallest_prime_factor: np.ndarray

    @classmethod
    def build(cls, limit: int) -> "FactorTable":
        limit = _check_positive(limit, "limit")
        spf = np.zeros(limit + 1, dtype=np.int64)
        spf[1] = 1
        for p in range(2, math.isqrt(limit) + 1):
            if spf[p] == 0:
                block = spf[p * p :: p]
                block[block == 0] = p
        rest = np.nonzero(spf == 0)[0]
        spf[rest[rest >= 2]] = rest[rest >= 2]
        spf.setflags(write=False)
        return cls(limit, spf)

    def primes(self) -> np.ndarray:
        idx = np.arange(self.limit + 1)
        return idx[(idx >= 2) & (self.smallest_prime_factor == idx)]

    def factorize(self, n: int) -> dict[int, int]:
        if not 1 <= n <= self.limit:
            raise ValueError(f"{n} outside table range 1..{self.limit}")
        out: dict[int, int] = {}
        while n > 1:
            p = int(self.smallest_prime_factor[n])
            out[p] = out.get(p, 0) + 1
            n //= p
        return out

    def totients(self) -> np.ndarray:
        """phi(0..limit) as int64 (phi(0) set to 0)."""
        phi = np.arange(self.limit + 1, dtype=np.int64)
        for p in self.primes():
            phi[p::p] -= phi[p::p] // p
        phi[0] = 0
        return phi

    def mobius_values(self) -> np.ndarray:
        mu = np.ones(self.limit + 1, dtype=np.int64)
        for p in self.primes():
            mu[p::p] *= -1
            mu[p * p :: p * p] = 0
        mu[0] = 0
        return mu


@lru_cache(maxsize=8)
def factor_table(limit: int) -> FactorTable:
    return FactorTable.build(limit)


@lru_cache(maxsize=8)
def totient_table(limit: int) -> np.ndarray:
    phi = factor_table(limit).totients()
    phi.setflags(write=False)
    return phi


def euler_phi(n: int) -> int:
    n = _check_positive(n)
    out = n
    for p in prime_factors(n):
        out -= out // p
    return out


def mobius(n: int) -> int:
    n = _check_positive(n)
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def group_index(N: int) -> int:
    """[SL2(Z) : Gamma(N)] = N^3 prod_{p|N} (1 - p^-2), exactly."""
    N = _check_positive(N, "N")
    num, den = N**3, 1
    for p in prime_factors(N):
        num *= p * p - 1
        den *= p * p
    assert num % den == 0
    return num // den


def class_count(N: int) -> int:
    """N^2 prod_{p|N} (1 - p^-2): the number of admissible residues mod N."""
    return group_index(N) // _check_positive(N, "N")


# ---------------------------------------------------------------------------
# zeta values


@dataclass(frozen=True)
class ZetaNValue:
    N: int
    d: int
    value: float
    abs_error_bound: float


def _zeta_terms(d: int, tol: float) -> int:
    # tail midpoint error <= M^-d / 2, rounding handled separately
    m = math.ceil((1.0 / tol) ** (1.0 / d))
    return max(1000, min(m, 50_000_000))


@lru_cache(maxsize=64)
def riemann_zeta(d: int, tol: float = 1e-13) -> tuple[float, float]:
    """zeta(d) for integer d >= 2 as (value, abs_error_bound).

    Series to M terms, tail estimated by the midpoint of
    [int_{M+1}^inf, int_M^inf] x^-d dx.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    d = int(d)
    M = _zeta_terms(d, tol)
    n = np.arange(M, 0, -1, dtype=float)
    head = math.fsum(n ** (-d))
    hi = M ** (1 - d) / (d - 1)
    lo = (M + 1) ** (1 - d) / (d - 1)
    value = head + 0.5 * (hi + lo)
    # each term carries <= 2 ulp from the power; fsum is correctly rounded
    rounding = 2 * EPS * head + EPS * value
    return value, 0.5 * (hi - lo) + rounding


def zeta_N(N: int, d: int = 2, tol: float = 1e-12) -> ZetaNValue:
    """prod_{p not dividing N} (1 - p^-d)^-1, via zeta(d) prod_{p|N} (1 - p^-d)."""
    N = _check_positive(N, "N")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    z, err = riemann_zeta(d, tol / 4)
    factor = 1.0
    for p in prime_factors(N):
        factor *= 1.0 - float(p) ** (-d)
    value = z * factor
    bound = err * factor + 4 * EPS * value
    if bound > tol:
        raise ValueError(f"tol={tol} below attainable precision {bound:.3g}")
    return ZetaNValue(N, int(d), float(value), float(bound))


# ---------------------------------------------------------------------------
# S_N(m)


def s_N_m_enumerate(N: int, m: int) -> int:
    """#{1 <= l <= Nm : l = 1 mod N, gcd(l, Nm) = 1} by scanning l."""
    N = _check_positive(N, "N")
    m = _check_positive(m, "m")
    n = N * m
    return sum(1 for ell in range(1, n + 1) if ell % N == 1 % N and math.gcd(ell, n) == 1)


def s_N_m_formula(N: int, m: int) -> int:
    N = _check_positive(N, "N")
    m = _check_positive(m, "m")
    num, den = euler_phi(N * m), euler_phi(N)
    if num % den:
        raise ArithmeticError(f"phi({N}) does not divide phi({N * m})")
    return num // den


# ---------------------------------------------------------------------------
# totient sums over multiples of N


def _multiples_totient_sum(N: int, K: int) -> int:
    if K < N:
        return 0
    phi = totient_table(K)
    vals = phi[N::N]
    # sum <= K^2 / 2; int64 is safe well past K = 10^9
    if K > 3_000_000_000:
        return sum(int(v) for v in vals)
    return int(vals.sum(dtype=np.int64))


def phi_partial_sum(N: int, K: float) -> tuple[int, float]:
    """(sum_{n <= K, N|n} phi(n), (1/(zeta_N(2) N)) prod_{p|N}(1 - 1/p) K^2 / 2)."""
    N = _check_positive(N, "N")
    if not K > 1:
        raise ValueError(f"K must exceed 1, got {K!r}")
    exact = _multiples_totient_sum(N, math.floor(K))
    density = 1.0 / (zeta_N(N, 2).value * N)
    for p in prime_factors(N):
        density *= 1.0 - 1.0 / p
    return exact, density * K * K / 2


# ---------------------------------------------------------------------------
# Phi_N


@dataclass(frozen=True)
class PhiNValue:
    N: int
    x: float
    value: float
    abs_error_bound: float


@lru_cache(maxsize=32)
def _phi_kernel_constant(N: int) -> tuple[float, float]:
    """(N/phi(N)) sum_{n in N*Z>0} phi(n)/n^3 in closed form, with error bound.

    The Euler product gives sum_{N|n} phi(n) n^-3
      = zeta(2)/zeta(3) * phi(N)/N^3 * prod_{p|N} (1 - p^-3)^-1.
    """
    z2 = math.pi**2 / 6
    z3, e3 = riemann_zeta(3, 1e-17)
    c = z2 / z3 / (N * N)
    for p in prime_factors(N):
        c /= 1.0 - float(p) ** -3
    err = c * (e3 / z3 + 8 * EPS)
    return c, err


def _head_sum(N: int, upto: float) -> tuple[float, float]:
    """sum_{n in N*Z>0, n < upto} phi(n)/n^3 (float, correctly rounded), error bound."""
    k_max = math.ceil(upto / N) - 1
    if k_max < 1:
        return 0.0, 0.0
    n_hi = k_max * N
    phi = totient_table(max(n_hi, 2))
    n = np.arange(N, n_hi + 1, N, dtype=float)
    terms = phi[N : n_hi + 1 : N] / n**3
    s = math.fsum(terms)
    return s, 4 * EPS * s


def Phi_N(N: int, x: float, tol: float = 1e-7) -> PhiNValue:
    """|x| sum_{n in N*N, n >= |x|} N phi(n) / (phi(N) n^3).

    Evaluated as |x| (C_N - (N/phi(N)) sum_{n < |x|}), where C_N is the full
    series in closed form, so the cost is O(|x|/N) regardless of tol.
    """
    N = _check_positive(N, "N")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    ax = abs(float(x))
    if ax == 0.0:
        return PhiNValue(N, float(x), 0.0, 0.0)
    c, c_err = _phi_kernel_constant(N)
    head, h_err = _head_sum(N, ax)
    ratio = N / euler_phi(N)
    value = ax * (c - ratio * head)
    bound = ax * (c_err + ratio * h_err + 2 * EPS * c) + EPS * abs(value)
    if bound > tol:
        raise ValueError(f"tol={tol} below attainable precision {bound:.3g} at x={x}")
    return PhiNValue(N, float(x), float(max(value, 0.0)), float(bound))


def Phi_N_direct(N: int, x: float, tol: float = 1e-6, max_terms: int = 50_000_000) -> PhiNValue:
    """Reference evaluation of Phi_N by direct summation plus a tail bound.

    Uses phi(n) <= n: sum_{n > n_last, N|n} phi(n)/n^3 <= 1/(N n_last). The
    tail lies in [0, B], so the midpoint is returned with bound B/2.
    """
    N = _check_positive(N, "N")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    ax = abs(float(x))
    if ax == 0.0:
        return PhiNValue(N, float(x), 0.0, 0.0)
    phiN = euler_phi(N)
    k_first = max(1, math.ceil(ax / N))
    # B = ax / (phiN * n_last) <= 2 tol
    n_last = max(2 * ax, ax / (phiN * 2 * tol))
    k_last = max(k_first, math.ceil(n_last / N))
    if k_last - k_first > max_terms:
        raise ValueError(f"direct summation needs {k_last - k_first} terms; raise tol")
    phi = totient_table(k_last * N)
    n = np.arange(k_first * N, k_last * N + 1, N, dtype=float)
    s = math.fsum(phi[k_first * N : k_last * N + 1 : N] / n**3)
    B = ax / (phiN * k_last * N)
    scale = ax * N / phiN
    value = scale * s + B / 2
    bound = B / 2 + scale * 4 * EPS * s
    return PhiNValue(N, float(x), float(value), float(bound))


class PhiKernel:
    """Vectorised Phi_N on |x| <= x_max via a table of tail sums.

    Phi_N is |x| times a step function constant on ((k-1)N, kN].
    """

    def __init__(self, N: int, x_max: float):
        self.N = N = _check_positive(N, "N")
        self.x_max = float(x_max)
        k_max = max(1, math.ceil(self.x_max / N)) + 1
        c, self.c_err = _phi_kernel_constant(N)
        phi = totient_table(max(k_max * N, 2))
        n = np.arange(N, k_max * N + 1, N, dtype=float)
        terms = phi[N : k_max * N + 1 : N] / n**3
        head = np.concatenate([[0.0], np.cumsum(terms)[:-1]])
        # tails[k-1] = (N/phi(N)) sum_{j >= k} phi(jN)/(jN)^3
        self.tails = c - (N / euler_phi(N)) * head

    def __call__(self, x) -> np.ndarray:
        ax = np.abs(np.asarray(x, dtype=float))
        if np.any(ax > self.x_max):
            raise ValueError("argument beyond table range")
        k = np.maximum(1, np.ceil(ax / self.N)).astype(np.int64)
        return ax * self.tails[k - 1]

    def step_value(self, k: int) -> float:
        """The tail sum on ((k-1)N, kN]."""
        return float(self.tails[k - 1])
