"""Counting experiments: random-lattice disk counts and Diophantine counts
with a congruence condition on (p, q)."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .arith import zeta_N
from .lattice import Basis, CongruenceCondition, Disk, KhintchineBox, PowerLaw, PsiSpec, Rect, enumerate_points
from .parallel import map_items
from .randlat import RngStream, sample_nu_N

SCHMIDT_FIELDS = ("seed", "lattice_id", "V", "count", "predicted", "norm_err")
KHINTCHINE_FIELDS = ("seed", "x", "T", "count", "predicted", "ratio")

SCHMIDT_STREAM = 11
KHINTCHINE_STREAM = 13


@dataclass(frozen=True)
class RegionFamily:
    """Nested regions of a fixed shape scaled to the given volumes.

    shape is 'disk' or 'rect'; rectangles are centred with width/height = aspect.
    """

    volumes: tuple[float, ...]
    shape: str = "disk"
    aspect: float = 1.0

    def __post_init__(self):
        v = tuple(float(x) for x in self.volumes)
        if any(x < 0 for x in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("volumes must be non-negative and strictly increasing")
        if self.shape not in ("disk", "rect"):
            raise ValueError("shape must be 'disk' or 'rect'")
        object.__setattr__(self, "volumes", v)

    def region(self, V: float):
        if self.shape == "disk":
            return Disk(math.sqrt(V / math.pi))
        h = math.sqrt(V / self.aspect)
        w = self.aspect * h
        return Rect(-w / 2, w / 2, -h / 2, h / 2)


@dataclass(frozen=True)
class CountRecord:
    seed: int
    lattice_id: int
    V: float
    count: int
    predicted: float
    norm_err: float

    def row(self):
        return asdict(self)


def envelope(V: float, psi_exponent: float = 0.0, psi_argument: str = "volume") -> float:
    """V^1/2 (log V)^2 psi^1/2 with psi(s) = s^psi_exponent; exponent 0 gives psi = 1.

    psi_argument picks s = V or s = log V.
    """
    if V <= 1:
        return math.nan
    s = V if psi_argument == "volume" else math.log(V)
    return math.sqrt(V) * math.log(V) ** 2 * s ** (psi_exponent / 2)


def sample_lattices(N: int, sigma: CongruenceCondition, count: int, seed: int):
    """count bases from nu_N, each with its twisted class residue."""
    batch = sample_nu_N(N, RngStream(seed, SCHMIDT_STREAM).generator(), count)
    return batch.G, batch.residues(sigma)


def schmidt_experiment(N: int, sigma: CongruenceCondition, family: RegionFamily, lattices, seed: int = 0,
                       workers: int | None = None, psi_exponent: float = 0.0,
                       psi_argument: str = "volume") -> list[list[CountRecord]]:
    """Exact class counts in each region of the family, per lattice.

    lattices is a sample count (drawn from nu_N with the given seed) or a
    list of explicit bases (taken with the untwisted class).
    """
    if sigma.N != N:
        raise ValueError("sigma modulus differs from N")
    if family.volumes and family.volumes[-1] > 1e8:
        raise ValueError("volumes beyond 1e8 are out of range")
    if psi_exponent and psi_exponent <= 1 and psi_argument == "volume":
        warnings.warn("psi(s) = s^a needs a > 1 for a convergent reciprocal integral", stacklevel=2)
    if isinstance(lattices, int):
        G, res = sample_lattices(N, sigma, lattices, seed)
    else:
        G = np.array([b.flat() if isinstance(b, Basis) else np.asarray(b, float).ravel() for b in lattices])
        res = np.tile(np.array(sigma.v0, dtype=np.int64), (len(G), 1))
    dens = 1.0 / (zeta_N(N, 2).value * N * N)
    vols = np.array(family.volumes)

    def run(i):
        if family.shape == "disk":
            counts = K.count_disks_nested(G[i], np.sqrt(vols / math.pi), res[i, 0], res[i, 1], N)
        else:
            cls = CongruenceCondition((int(res[i, 0]), int(res[i, 1])), N)
            counts = [enumerate_points(Basis(*G[i]), family.region(V), cls) if V > 0 else 0 for V in vols]
        out = []
        for V, c in zip(vols, counts):
            pred = float(V * dens)
            err = float(abs(int(c) - pred)) / envelope(V, psi_exponent, psi_argument) if V > 1 else math.nan
            out.append(CountRecord(seed, i, float(V), int(c), pred, err))
        return out

    return map_items(run, range(len(G)), workers)


def khintchine_predicted(N: int, psi: PsiSpec, T: float) -> float:
    """sum_{1 <= t <= T} psi(t) / (zeta_N(2) N^2)."""
    if T < 1:
        return 0.0
    s = math.fsum(np.asarray(psi(np.arange(1, math.floor(T) + 1)), dtype=float).tolist())
    return s / (zeta_N(N, 2).value * N * N)


def khintchine_area_predicted(N: int, psi: PsiSpec, T: float) -> float:
    """Density times the area of {|x| < psi(|y|), 1 <= |y| <= T} with psi
    taken as a step function on integers: 4 sum psi / (zeta_N(2) N^2)."""
    return 4.0 * khintchine_predicted(N, psi, T)


@dataclass(frozen=True)
class KhintchineRecord:
    seed: int
    x: float
    T: float
    count: int
    predicted: float
    ratio: float

    def row(self):
        return asdict(self)


def khintchine_count(x: float, T_list, psi: PsiSpec, sigma: CongruenceCondition | None = None) -> np.ndarray:
    T = np.asarray(T_list, dtype=float)
    if np.any(np.diff(T) < 0):
        raise ValueError("T_list must be non-decreasing")
    kind, params, breaks, values = psi.kernel_args()
    if sigma is None:
        mode, r1, r2, N = K.PRIMITIVE, 0, 0, 1
    else:
        mode, r1, r2, N = K.CLASS, sigma.v0[0], sigma.v0[1], sigma.N
    return K.khintchine_counts(float(x), T, kind, params, breaks, values, mode, r1, r2, N)


def khintchine_bruteforce(x: float, T: int, psi: PsiSpec, sigma: CongruenceCondition | None = None) -> int:
    """Scan every (p, q) with 1 <= |q| <= T and |p| <= |q x| + psi(1) + 1."""
    n = 0
    for q in range(-int(T), int(T) + 1):
        if q == 0:
            continue
        w = float(psi(abs(q)))
        bound = int(abs(q * x) + float(psi(1)) + 1)
        for p in range(-bound, bound + 1):
            if not abs(q * x - p) < w or math.gcd(p, q) != 1:
                continue
            if sigma is not None and ((p - sigma.v0[0]) % sigma.N or (q - sigma.v0[1]) % sigma.N):
                continue
            n += 1
    return n


def khintchine_geometric(x: float, T: float, psi: PsiSpec, sigma: CongruenceCondition | None = None) -> int:
    """The same count as lattice points of [[1, -x], [0, 1]] Z^2 in KhintchineBox(psi, T)."""
    return enumerate_points(Basis(1.0, -float(x), 0.0, 1.0), KhintchineBox(psi, T), sigma or "primitive")


def draw_x(count: int, seed: int) -> np.ndarray:
    """count reals uniform on (0, 1)."""
    u = RngStream(seed, KHINTCHINE_STREAM).generator().random(count)
    return np.where(u == 0.0, 0.5, u)


def khintchine_experiment(N: int, sigma: CongruenceCondition, psi: PsiSpec, T_list, x_source, seed: int = 0,
                          workers: int | None = None) -> list[list[KhintchineRecord]]:
    """Counts for each x and T. x_source is a count (seeded uniform x) or explicit reals."""
    if sigma.N != N:
        raise ValueError("sigma modulus differs from N")
    T = sorted(float(t) for t in T_list)
    if T and T[-1] > 1e7:
        raise ValueError("T beyond 1e7 is out of range")
    if not psi.non_increasing:
        raise ValueError("psi must be non-increasing")
    if not psi.divergent_sum:
        warnings.warn("psi has a convergent sum; the asymptotic does not apply", stacklevel=2)
    xs = draw_x(x_source, seed) if isinstance(x_source, int) else np.asarray(x_source, dtype=float)
    preds = [khintchine_predicted(N, psi, t) for t in T]

    def run(x):
        counts = khintchine_count(x, T, psi, sigma)
        return [
            KhintchineRecord(seed, float(x), t, int(c), p, (c / p) if p > 0 else math.nan)
            for t, c, p in zip(T, counts, preds)
        ]

    return map_items(run, xs.tolist(), workers)


def write_csv(path, fields, records) -> None:
    with open(path, "w", newline="") as fh:
        write_rows(fh, fields, records)


def write_rows(fh, fields, records) -> None:
    w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: fmt(v) for k, v in r.row().items()})


def fmt(v):
    if isinstance(v, float):
        return repr(v) if not math.isfinite(v) else format(v, ".17g")
    return v
