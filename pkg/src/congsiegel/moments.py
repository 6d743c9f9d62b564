"""Siegel transforms with congruence conditions: Monte Carlo moments and the
numerical right-hand sides they are checked against."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _kernels as K
from .arith import PhiKernel, euler_phi, group_index, zeta_N
from .lattice import (
    Annulus,
    CongruenceCondition,
    Disk,
    Rect,
    Region,
    enumerate_points,
    max_abs_det,
    negated_overlap_area,
    region_area,
    sample_uniform,
)
from .parallel import map_blocks
from .randlat import LatticeSample, ConeSample, RngStream, sample_cone, sample_nu_N

Z_THRESHOLD = 4.0


@dataclass(frozen=True)
class Indicator:
    A: Region


TestFunction = Indicator


@dataclass
class MomentEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    elapsed_seconds: float = 0.0

    @classmethod
    def from_values(cls, values: np.ndarray, seed: int, elapsed: float = 0.0) -> "MomentEstimate":
        M = values.size
        if M < 2:
            raise ValueError("need at least two samples")
        return cls(float(values.mean()), float(values.std(ddof=1) / math.sqrt(M)), M, seed, elapsed)

    def to_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples,
                "seed": self.seed, "elapsed_seconds": self.elapsed_seconds}


@dataclass
class RhsValue:
    value: float
    abs_error_bound: float
    breakdown: dict = field(default_factory=dict)
    stderr: float = 0.0  # statistical part, when a component is itself Monte Carlo

    def __post_init__(self):
        if self.breakdown:
            assert abs(sum(self.breakdown.values()) - self.value) <= 1e-12 * max(1.0, abs(self.value))


@dataclass(frozen=True)
class MeasureConstants:
    zeta_N2: float
    zeta_err: float
    index: int
    nu_to_eta: float


def measure_constants(N: int) -> MeasureConstants:
    """nu_N = eta / (zeta_N(2) N^3)."""
    z = zeta_N(N, 2)
    return MeasureConstants(z.value, z.abs_error_bound, group_index(N), z.value * N**3)


def class_density(N: int) -> float:
    """1 / (zeta_N(2) N^2)."""
    return 1.0 / (zeta_N(N, 2).value * N * N)


# ---------------------------------------------------------------------------
# transforms and Monte Carlo


def _region_of(f) -> Region:
    return f.A if isinstance(f, Indicator) else f


def siegel_value(sample, sigma: CongruenceCondition, f, t: float = 1.0) -> int:
    """sum_{v = u v0 (mod N), v primitive} f(t^1/2 g v) for one nu_N sample.

    Returns the raw count; cone normalisations multiply by t or t^2.
    """
    if isinstance(sample, ConeSample):
        t = sample.t
        sample = sample.base
    if not 0 < t <= 1:
        raise ValueError("scale t must lie in (0, 1]")
    A = _region_of(f)
    (a, b), (c, d) = sample.twist
    N = sigma.N
    v = sigma.v0
    twisted = CongruenceCondition(((a * v[0] + b * v[1]) % N, (c * v[0] + d * v[1]) % N), N)
    g = sample.g if t == 1.0 else sample.g @ (math.sqrt(t) * np.eye(2))
    return enumerate_points(g, A, twisted)


def _counts(batch, sigma: CongruenceCondition, A: Region) -> np.ndarray:
    if isinstance(A, Rect) and A.empty:
        return np.zeros(len(batch), dtype=np.int64)
    scales = np.ones(len(batch)) if batch.t is None else np.sqrt(batch.t)
    return K.count_batch(batch.G, scales, batch.residues(sigma), sigma.N, K.CLASS, A.code, A.params)


_STATISTICS = {
    "first": (False, lambda c, t: c.astype(float)),
    "second": (False, lambda c, t: c.astype(float) ** 2),
    "cone-first": (True, lambda c, t: t * c),
    "cone-second": (True, lambda c, t: (t * c) ** 2),
}


def mc_values(kind: str, N: int, sigma: CongruenceCondition, f, M: int, seed: int,
              workers: int | None = None, stream: int = 0) -> np.ndarray:
    """Per-sample values of the chosen statistic, bit-identical for any worker count."""
    if sigma.N != N:
        raise ValueError("sigma modulus differs from N")
    cone, stat = _STATISTICS[kind]
    A = _region_of(f)
    rs = RngStream(seed, stream)

    def block(i: int, size: int) -> np.ndarray:
        gen = rs.block(i)
        batch = sample_cone(N, gen, size) if cone else sample_nu_N(N, gen, size)
        return stat(_counts(batch, sigma, A), batch.t)

    return map_blocks(block, M, workers)


def _mc(kind, N, sigma, f, M, seed, workers, stream):
    if M < 100:
        raise ValueError("need M >= 100 samples")
    t0 = time.perf_counter()
    vals = mc_values(kind, N, sigma, f, M, seed, workers, stream)
    return MomentEstimate.from_values(vals, seed, time.perf_counter() - t0)


def first_moment_mc(N, sigma, f, M, seed, workers=None, stream=0) -> MomentEstimate:
    return _mc("first", N, sigma, f, M, seed, workers, stream)


def second_moment_mc(N, sigma, f, M, seed, workers=None, stream=0) -> MomentEstimate:
    return _mc("second", N, sigma, f, M, seed, workers, stream)


def cone_first_moment_mc(N, sigma, f, M, seed, workers=None, stream=0) -> MomentEstimate:
    return _mc("cone-first", N, sigma, f, M, seed, workers, stream)


def cone_second_moment_mc(N, sigma, f, M, seed, workers=None, stream=0) -> MomentEstimate:
    return _mc("cone-second", N, sigma, f, M, seed, workers, stream)


def first_moment_theory(N: int, sigma: CongruenceCondition, A: Region) -> float:
    return region_area(_region_of(A)).value * class_density(N)


cone_first_moment_theory = first_moment_theory


# ---------------------------------------------------------------------------
# eta integrals
#
# With g = [[1,0],[c,1]] [[a,b],[0,1/a]], g J_n has columns v1 = (a, ca) and
# v2 = (nb, n(cb + 1/a)). For fixed (a, c), v2 runs along the line
# det(v1, w) = n at speed |n||v1|/|a|; integrating b exactly and using
# da dc = dv1/|a| leaves
#     int 1_A(v1) 1_A(v2) d eta = (1/|n|) int_A chord_A(v1, n) / |v1| dv1,
# chord_A(v1, n) being the length of A on that line.


def _disk_chord(r, dist):
    return 2.0 * np.sqrt(np.maximum(r * r - dist * dist, 0.0))


def _rect_chord(A: Rect, v1x: float, v1y: float, n: float) -> float:
    r2 = v1x * v1x + v1y * v1y
    if r2 == 0.0:
        return 0.0
    r = math.sqrt(r2)
    w0 = (-n * v1y / r2, n * v1x / r2)
    u = (v1x / r, v1y / r)
    lo, hi = -math.inf, math.inf
    for k, (a, b) in enumerate(((A.x_lo, A.x_hi), (A.y_lo, A.y_hi))):
        if u[k] == 0.0:
            if not a <= w0[k] <= b:
                return 0.0
            continue
        s1, s2 = (a - w0[k]) / u[k], (b - w0[k]) / u[k]
        lo, hi = max(lo, min(s1, s2)), min(hi, max(s1, s2))
    return max(hi - lo, 0.0)


def eta_integral_disk_closed(R: float, n: float) -> float:
    """Closed form for the disk: (4 pi/|n|)(sqrt(R^4 - n^2) - |n| arccos(|n|/R^2))."""
    an = abs(n)
    if an >= R * R:
        return 0.0
    return 4 * math.pi / an * (math.sqrt(R**4 - an * an) - an * math.acos(an / (R * R)))


def eta_integral(A: Region, n: float, epsabs: float = 1e-10, epsrel: float = 1e-10) -> tuple[float, float]:
    """int_{SL2(R)} 1_A x 1_A (g J_n) d eta(g), as (value, error estimate)."""
    if n == 0:
        raise ValueError("n must be nonzero")
    an = abs(float(n))
    if an > max_abs_det(A):
        return 0.0, 0.0
    if isinstance(A, (Disk, Annulus)):
        r_in, r_out = (0.0, A.R) if isinstance(A, Disk) else (A.R_in, A.R_out)

        def radial(rho):
            dist = an / rho
            return _disk_chord(r_out, dist) - _disk_chord(r_in, dist)

        lo = max(r_in, an / r_out)
        if lo >= r_out:
            return 0.0, 0.0
        pts = [an / r_in] if r_in > 0 and lo < an / r_in < r_out else None
        val, err = integrate.quad(radial, lo, r_out, points=pts, epsabs=epsabs, epsrel=epsrel, limit=200)
        c = 2 * math.pi / an
        return c * val, c * err
    if isinstance(A, Rect):
        if A.empty:
            return 0.0, 0.0

        def integrand(vy, vx):
            r = math.hypot(vx, vy)
            return 0.0 if r == 0 else _rect_chord(A, vx, vy, n) / r

        opts = {"limit": 200, "epsabs": max(epsabs, 1e-8), "epsrel": max(epsrel, 1e-7)}
        with warnings.catch_warnings():
            # roundoff notices from the kinked chord; the estimate is still returned
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.nquad(integrand, [(A.y_lo, A.y_hi), (A.x_lo, A.x_hi)], opts=[opts, opts])
        return val / an, err / an
    raise ValueError("eta_integral supports Disk, Annulus and Rect")


def eta_integral_slab_mc(A: Region, n: float, eps: float, M: int, seed: int) -> tuple[float, float]:
    """Independent estimate: area(A)^2 E[1{|det - n| <= eps} / |det|] / (2 eps) over A x A."""
    gen = RngStream(seed, 1).generator()
    v1 = sample_uniform(A, gen, M)
    v2 = sample_uniform(A, gen, M)
    det = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
    w = np.where(np.abs(det - n) <= eps, 1.0 / np.abs(det), 0.0) / (2 * eps)
    area2 = region_area(A).value ** 2
    return area2 * w.mean(), area2 * w.std(ddof=1) / math.sqrt(M)


# ---------------------------------------------------------------------------
# right-hand sides

KERNEL_NORMALIZATIONS = ("orbit", "stated")


def second_moment_coefficient(N: int, n: int, normalization: str = "orbit") -> float:
    """Weight of the eta integral at determinant n in the flat second moment.

    'orbit': (N phi(n)/phi(N) orbits) x (nu_N = eta/(zeta_N(2) N^3))
             = phi(n) / (zeta_N(2) N^2 phi(N)).
    'stated': phi(n) / (zeta_N(2) N^3 phi(N)).
    """
    if normalization not in KERNEL_NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {KERNEL_NORMALIZATIONS}")
    power = 2 if normalization == "orbit" else 3
    return euler_phi(abs(n)) / (zeta_N(N, 2).value * N**power * euler_phi(N))


def sign_closed(sigma: CongruenceCondition) -> bool:
    """True iff -v0 = v0 (mod N), i.e. v and -v share the class (N <= 2)."""
    return all((2 * c) % sigma.N == 0 for c in sigma.v0)


def diagonal_term(N: int, sigma: CongruenceCondition, A: Region, half: bool = False) -> float:
    """Pairs w = v and, when the class is closed under negation, w = -v."""
    c = class_density(N) / (2 if half else 1)
    overlap = negated_overlap_area(A) if sign_closed(sigma) else 0.0
    return c * (region_area(A).value + overlap)


def second_moment_rhs(N: int, sigma: CongruenceCondition, A: Region, tol: float = 1e-8,
                      normalization: str = "orbit") -> RhsValue:
    A = _region_of(A)
    n_max = math.floor(max_abs_det(A))
    kernel, err = 0.0, 0.0
    terms = {}
    for n in range(N, n_max + 1, N):
        for sn in (n, -n):
            val, e = eta_integral(A, sn, epsabs=tol / (4 * max(n_max, 1)))
            w = second_moment_coefficient(N, sn, normalization)
            terms[sn] = val
            kernel += w * val
            err += w * e
    diag = diagonal_term(N, sigma, A)
    rhs = RhsValue(kernel + diag, err, {"kernel": kernel, "diagonal": diag})
    rhs.eta_terms = terms
    return rhs


def cone_kernel_mc(N: int, A: Region, M: int, seed: int, stream: int = 7) -> tuple[float, float]:
    """int_{A x A} Phi_N(det(v1, v2)) dv1 dv2 by uniform pairs, as (value, stderr)."""
    A = _region_of(A)
    area = region_area(A).value
    if area == 0.0:
        return 0.0, 0.0
    phi = PhiKernel(N, max_abs_det(A))
    rs = RngStream(seed, stream)

    def block(i, size):
        gen = rs.block(i)
        v1 = sample_uniform(A, gen, size)
        v2 = sample_uniform(A, gen, size)
        return phi(v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])

    vals = map_blocks(block, M, 1, block=65536)
    return area**2 * float(vals.mean()), area**2 * float(vals.std(ddof=1)) / math.sqrt(M)


def cone_kernel_quad(N: int, A: Region, epsabs: float = 1e-7) -> tuple[float, float]:
    """Same integral through the determinant density |x| eta_integral(A, x):
    int Phi_N(x) |x| I(x) dx, split where Phi_N jumps."""
    A = _region_of(A)
    D = max_abs_det(A)
    if D == 0.0:
        return 0.0, 0.0
    phi = PhiKernel(N, D)
    total, err = 0.0, 0.0
    for sign in (1.0, -1.0):
        k = 1
        while (k - 1) * N < D:
            lo, hi = (k - 1) * N, min(k * N, D)
            S = phi.step_value(k)

            def f(x, S=S):
                return S * x * x * eta_integral(A, sign * x, epsabs=1e-11)[0]

            v, e = integrate.quad(f, lo, hi, epsabs=epsabs, limit=100)
            total += v
            err += e
            k += 1
    return total, err


def cone_second_moment_rhs(N: int, sigma: CongruenceCondition, A: Region, tol: float = 1e-6,
                           half_factor: bool = True, method: str = "mc", M: int = 2_000_000,
                           seed: int = 0) -> RhsValue:
    """(1/(zeta_N(2) N^3)) int Phi_N(det) 1_A x 1_A + c (area + vol(A n -A)),
    c = 1/(2 zeta_N(2) N^2) with half_factor, else 1/(zeta_N(2) N^2)."""
    A = _region_of(A)
    pref = 1.0 / (zeta_N(N, 2).value * N**3)
    if method == "mc":
        k, se = cone_kernel_mc(N, A, M, seed)
        k_err = 0.0
    elif method == "quad":
        k, k_err = cone_kernel_quad(N, A, epsabs=tol)
        se = 0.0
    else:
        raise ValueError("method must be 'mc' or 'quad'")
    kernel = pref * k
    diag = diagonal_term(N, sigma, A, half=half_factor)
    return RhsValue(kernel + diag, pref * k_err, {"kernel": kernel, "diagonal": diag}, stderr=pref * se)


# ---------------------------------------------------------------------------
# comparisons


@dataclass
class Check:
    name: str
    theory: float
    observed: float
    stderr: float
    z: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"name": self.name, "theory": self.theory, "observed": self.observed,
             "stderr_or_bound": self.stderr, "z_or_ratio": self.z, "pass": self.passed}
        d.update(self.extra)
        return d


def z_check(name: str, theory: float, est: MomentEstimate, theory_se: float = 0.0,
            threshold: float = Z_THRESHOLD, rel_floor: float = 0.0) -> Check:
    """Pass iff |obs - theory| <= max(threshold * se, rel_floor * |theory|),
    se combining both standard errors in quadrature."""
    se = math.hypot(est.stderr, theory_se)
    diff = est.mean - theory
    z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
    ok = abs(diff) <= max(threshold * se, rel_floor * abs(theory))
    return Check(name, theory, est.mean, se, z, bool(ok))
