"""Congruence conditions, lattice bases, test regions and exact point counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate

from . import _kernels as K
from .arith import class_count


@dataclass(frozen=True)
class CongruenceCondition:
    """sigma = (v0, N): primitive vectors congruent to v0 mod N.

    v0 is stored reduced mod N; gcd(v0_1, v0_2, N) must be 1.
    """

    v0: tuple[int, int]
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"modulus must be a positive integer, got {self.N!r}")
        a, b = (int(c) % self.N for c in self.v0)
        if math.gcd(math.gcd(a, b), self.N) != 1:
            raise ValueError(f"gcd(v0, N) != 1 for v0={tuple(self.v0)}, N={self.N}")
        object.__setattr__(self, "v0", (a, b))
        object.__setattr__(self, "N", int(self.N))

    def __str__(self):
        return f"(({self.v0[0]},{self.v0[1]}),{self.N})"

    def to_dict(self) -> dict:
        return {"v0": list(self.v0), "N": self.N}

    @classmethod
    def from_dict(cls, d: dict) -> "CongruenceCondition":
        return cls(tuple(d["v0"]), d["N"])


@dataclass(frozen=True)
class Basis:
    a11: float
    a12: float
    a21: float
    a22: float

    @classmethod
    def identity(cls) -> "Basis":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_matrix(cls, m) -> "Basis":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def flat(self) -> np.ndarray:
        return np.array([self.a11, self.a12, self.a21, self.a22])

    def __matmul__(self, other) -> "Basis":
        other = other.matrix if isinstance(other, Basis) else np.asarray(other, dtype=float)
        return Basis.from_matrix(self.matrix @ other)


# ---------------------------------------------------------------------------
# psi


@dataclass(frozen=True)
class PowerLaw:
    """psi(t) = c t^-alpha."""

    c: float
    alpha: float

    def __post_init__(self):
        if not self.c > 0 or self.alpha < 0:
            raise ValueError("PowerLaw needs c > 0 and alpha >= 0")

    def __call__(self, t):
        return self.c * np.asarray(t, dtype=float) ** (-self.alpha)

    @property
    def non_increasing(self) -> bool:
        return True

    @property
    def divergent_sum(self) -> bool:
        return self.alpha <= 1

    def integral(self, T: float) -> tuple[float, float]:
        """int_0^T psi with the quadrature error estimate."""
        if self.alpha >= 1:
            return math.inf, 0.0
        if T <= 0:
            return 0.0, 0.0
        # algebraic weight (t - 0)^-alpha handles the endpoint singularity
        val, err = integrate.quad(
            lambda t: self.c, 0.0, T, weight="alg", wvar=(-self.alpha, 0.0)
        )
        return val, err

    def kernel_args(self):
        return K.PSI_POWER, np.array([self.c, self.alpha]), np.zeros(1), np.zeros(1)

    def to_dict(self):
        return {"type": "power", "c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class Table:
    """Step function: psi(t) = values[i] on [breakpoints[i], breakpoints[i+1])."""

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.shape != v.shape or b.size == 0:
            raise ValueError("breakpoints and values must be non-empty and of equal length")
        if np.any(np.diff(b) <= 0) or np.any(v <= 0):
            raise ValueError("breakpoints must increase and values be positive")
        object.__setattr__(self, "breakpoints", tuple(b.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    def __call__(self, t):
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.values)
        i = np.searchsorted(b, np.asarray(t, dtype=float), side="right") - 1
        return v[np.maximum(i, 0)]

    @property
    def non_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    @property
    def divergent_sum(self) -> bool:
        return True  # constant beyond the last breakpoint

    def integral(self, T: float) -> tuple[float, float]:
        b = list(self.breakpoints) + [math.inf]
        total = 0.0
        lo = 0.0
        for i, v in enumerate(self.values):
            hi = min(b[i + 1], T)
            if hi > lo:
                total += v * (hi - lo)
            lo = max(lo, hi)
        return total, 0.0

    def kernel_args(self):
        return (
            K.PSI_TABLE,
            np.zeros(2),
            np.asarray(self.breakpoints, dtype=float),
            np.asarray(self.values, dtype=float),
        )

    def to_dict(self):
        return {"type": "table", "breakpoints": list(self.breakpoints), "values": list(self.values)}


PsiSpec = Union[PowerLaw, Table]


def psi_from_dict(d: dict) -> PsiSpec:
    if d["type"] == "power":
        return PowerLaw(float(d["c"]), float(d["alpha"]))
    if d["type"] == "table":
        return Table(tuple(d["breakpoints"]), tuple(d["values"]))
    raise ValueError(f"unknown psi type {d['type']!r}")


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Disk:
    R: float

    code = K.DISK

    @property
    def params(self):
        return np.array([self.R], dtype=float)

    def contains(self, x, y):
        return np.asarray(x) ** 2 + np.asarray(y) ** 2 <= self.R**2

    def bbox(self):
        return (-self.R, self.R, -self.R, self.R)

    @property
    def symmetric(self):
        return True

    def to_dict(self):
        return {"type": "disk", "R": self.R}


@dataclass(frozen=True)
class Rect:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    code = K.RECT

    @property
    def params(self):
        return np.array([self.x_lo, self.x_hi, self.y_lo, self.y_hi], dtype=float)

    @property
    def empty(self):
        return self.x_lo >= self.x_hi or self.y_lo >= self.y_hi

    def contains(self, x, y):
        x, y = np.asarray(x), np.asarray(y)
        return (self.x_lo <= x) & (x <= self.x_hi) & (self.y_lo <= y) & (y <= self.y_hi)

    def bbox(self):
        return (self.x_lo, self.x_hi, self.y_lo, self.y_hi)

    @property
    def symmetric(self):
        return self.x_lo == -self.x_hi and self.y_lo == -self.y_hi

    def to_dict(self):
        return {"type": "rect", "x_lo": self.x_lo, "x_hi": self.x_hi, "y_lo": self.y_lo, "y_hi": self.y_hi}


@dataclass(frozen=True)
class Annulus:
    R_in: float
    R_out: float

    code = K.ANNULUS

    def __post_init__(self):
        if not 0 <= self.R_in <= self.R_out:
            raise ValueError("annulus needs 0 <= R_in <= R_out")

    @property
    def params(self):
        return np.array([self.R_in, self.R_out], dtype=float)

    def contains(self, x, y):
        r2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
        return (self.R_in**2 <= r2) & (r2 <= self.R_out**2)

    def bbox(self):
        return (-self.R_out, self.R_out, -self.R_out, self.R_out)

    @property
    def symmetric(self):
        return True

    def to_dict(self):
        return {"type": "annulus", "R_in": self.R_in, "R_out": self.R_out}


@dataclass(frozen=True)
class KhintchineBox:
    """{(x, y) : |x| < psi(|y|), 0 < |y| <= T}.

    Strict in x and excludes y = 0, matching the Diophantine count
    |q x - p| < psi(|q|), 1 <= |q| <= T.
    """

    psi: PsiSpec
    T: float

    code = None

    def contains(self, x, y):
        x, ay = np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float))
        with np.errstate(divide="ignore"):
            w = np.where(ay > 0, self.psi(np.where(ay > 0, ay, 1.0)), 0.0)
        return (ay > 0) & (ay <= self.T) & (np.abs(x) < w)

    @property
    def symmetric(self):
        return True

    def to_dict(self):
        return {"type": "khintchine", "psi": self.psi.to_dict(), "T": self.T}


Region = Union[Disk, Rect, Annulus, KhintchineBox]


def region_from_dict(d: dict) -> Region:
    kind = d.get("type")
    if kind == "disk":
        return Disk(float(d["R"]))
    if kind == "rect":
        return Rect(float(d["x_lo"]), float(d["x_hi"]), float(d["y_lo"]), float(d["y_hi"]))
    if kind == "annulus":
        return Annulus(float(d["R_in"]), float(d["R_out"]))
    if kind == "khintchine":
        return KhintchineBox(psi_from_dict(d["psi"]), float(d["T"]))
    raise ValueError(f"unknown region type {kind!r}")


def parse_region(text: str) -> Region:
    """'disk:R', 'rect:xlo,xhi,ylo,yhi', 'annulus:Rin,Rout', 'khintchine:c,alpha,T'."""
    kind, _, rest = text.partition(":")
    try:
        vals = [float(v) for v in rest.split(",")] if rest else []
        if kind == "disk" and len(vals) == 1:
            return Disk(vals[0])
        if kind == "rect" and len(vals) == 4:
            return Rect(*vals)
        if kind == "annulus" and len(vals) == 2:
            return Annulus(*vals)
        if kind == "khintchine" and len(vals) == 3:
            return KhintchineBox(PowerLaw(vals[0], vals[1]), vals[2])
    except ValueError as exc:
        raise ValueError(f"bad region {text!r}: {exc}") from None
    raise ValueError(f"bad region {text!r}")


def region_radius(A: Region) -> float:
    """max |v| over the region."""
    if isinstance(A, Disk):
        return A.R
    if isinstance(A, Annulus):
        return A.R_out
    if isinstance(A, Rect):
        return max(math.hypot(x, y) for x in (A.x_lo, A.x_hi) for y in (A.y_lo, A.y_hi))
    raise ValueError("region has unbounded support")


def max_abs_det(A: Region) -> float:
    """max |det(v1, v2)| over v1, v2 in A."""
    if isinstance(A, (Disk, Annulus)):
        return region_radius(A) ** 2
    if isinstance(A, Rect):
        if A.empty:
            return 0.0
        corners = [(x, y) for x in (A.x_lo, A.x_hi) for y in (A.y_lo, A.y_hi)]
        # det is bilinear, so the max over a box pair is attained at corners
        return max(abs(a[0] * b[1] - a[1] * b[0]) for a in corners for b in corners)
    raise ValueError("unsupported region")


# ---------------------------------------------------------------------------
# operations


def is_primitive(v) -> bool:
    return math.gcd(abs(int(v[0])), abs(int(v[1]))) == 1


def in_class(v, sigma: CongruenceCondition) -> bool:
    N = sigma.N
    return is_primitive(v) and (int(v[0]) - sigma.v0[0]) % N == 0 and (int(v[1]) - sigma.v0[1]) % N == 0


def list_congruence_classes(N: int) -> list[CongruenceCondition]:
    out = [
        CongruenceCondition((m, n), N)
        for m in range(N)
        for n in range(N)
        if math.gcd(math.gcd(m, n), N) == 1
    ]
    assert len(out) == class_count(N)
    return out


def _filter_args(filt):
    """'all' | 'primitive' | CongruenceCondition -> (mode, r1, r2, N)."""
    if isinstance(filt, CongruenceCondition):
        return K.CLASS, filt.v0[0], filt.v0[1], filt.N
    if filt == "primitive":
        return K.PRIMITIVE, 0, 0, 1
    if filt == "all":
        return K.ALL, 0, 0, 1
    raise ValueError(f"unknown filter {filt!r}")


def _as_basis(g) -> Basis:
    return g if isinstance(g, Basis) else Basis.from_matrix(g)


def enumerate_points(g, A: Region, filt="primitive", return_points: bool = False):
    """Exact count of integer v passing the filter with g v in A.

    'all' counts nonzero v. With return_points, also returns the (p, q) array
    in row-major order over q, then p.
    """
    g = _as_basis(g)
    if abs(g.det) < 1e-12:
        raise ValueError("singular basis")
    mode, r1, r2, N = _filter_args(filt)
    if isinstance(A, KhintchineBox):
        if g.a21 != 0.0:
            raise ValueError("KhintchineBox is unbounded near y = 0; need an upper-triangular basis")
        kind, params, breaks, values = A.psi.kernel_args()
        n = K.count_khintchine_box(
            g.a11, g.a12, g.a22, float(A.T), kind, params, breaks, values, mode, r1, r2, N
        )
        if return_points:
            raise NotImplementedError("point lists are available for Disk/Rect/Annulus")
        return int(n)
    if A.code is None:
        raise ValueError("unbounded region")
    if isinstance(A, Rect) and A.empty:
        return (0, np.empty((0, 2), dtype=np.int64)) if return_points else 0
    flat = g.flat()
    n = int(K.count_points(flat, A.code, A.params, mode, r1, r2, N))
    if not return_points:
        return n
    out = np.empty((n, 2), dtype=np.int64)
    K.collect_points(flat, A.code, A.params, mode, r1, r2, N, out)
    return n, out


@dataclass(frozen=True)
class AreaValue:
    value: float
    abs_error_bound: float = 0.0


def region_area(A: Region) -> AreaValue:
    if isinstance(A, Disk):
        return AreaValue(math.pi * A.R**2)
    if isinstance(A, Annulus):
        return AreaValue(math.pi * (A.R_out**2 - A.R_in**2))
    if isinstance(A, Rect):
        return AreaValue(0.0 if A.empty else (A.x_hi - A.x_lo) * (A.y_hi - A.y_lo))
    if isinstance(A, KhintchineBox):
        # both signs of y, width 2 psi(|y|)
        val, err = A.psi.integral(A.T)
        return AreaValue(4 * val, 4 * err)
    raise ValueError("unsupported region")


def negated_overlap_area(A: Region) -> float:
    """vol(A n -A)."""
    if A.symmetric:
        return region_area(A).value
    if isinstance(A, Rect):
        w = min(A.x_hi, -A.x_lo) - max(A.x_lo, -A.x_hi)
        h = min(A.y_hi, -A.y_lo) - max(A.y_lo, -A.y_hi)
        return max(w, 0.0) * max(h, 0.0)
    raise ValueError("unsupported region")


def sample_uniform(A: Region, rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform points in a bounded region by rejection from its bounding box."""
    xlo, xhi, ylo, yhi = A.bbox()
    out = np.empty((0, 2))
    while out.shape[0] < size:
        need = size - out.shape[0]
        pts = np.column_stack(
            [rng.uniform(xlo, xhi, 2 * need + 16), rng.uniform(ylo, yhi, 2 * need + 16)]
        )
        pts = pts[A.contains(pts[:, 0], pts[:, 1])]
        out = np.vstack([out, pts])
    return out[:size]
