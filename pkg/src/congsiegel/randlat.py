"""Seeded Haar sampling on SL2(R)/Gamma(N) and on its cone (0,1] x SL2(R)/Gamma(N).

A point g Gamma(N) is represented as (g, u): g runs over a fundamental domain
of SL2(R)/SL2(Z) and u is a uniform element of SL2(Z/NZ). For any lift
gamma of u, the transform at g gamma over the class v0 equals the transform
at g over the class u v0 (mod N), so no integral lift is needed when
evaluating Siegel transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Basis, CongruenceCondition

SQRT3_2 = math.sqrt(0.75)
_KEY_SALT = 0x5DEECE66D


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: (seed, stream_index, block) fixes every draw."""

    seed: int
    stream_index: int = 0

    def block(self, index: int) -> np.random.Generator:
        mask = (1 << 64) - 1
        key = np.array([self.seed & mask, _KEY_SALT], dtype=np.uint64)
        counter = np.array([0, 0, index & mask, self.stream_index & mask], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def generator(self) -> np.random.Generator:
        return self.block(0)


@dataclass
class LatticeBatch:
    """M draws from nu_N; G rows are (g11, g12, g21, g22), twist rows (a, b, c, d) mod N."""

    N: int
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    G: np.ndarray
    twist: np.ndarray
    t: np.ndarray | None = None

    def __len__(self):
        return self.G.shape[0]

    def residues(self, sigma: CongruenceCondition) -> np.ndarray:
        """Twisted class residues u v0 mod N, one row per sample."""
        a, b, c, d = self.twist.T
        v1, v2 = sigma.v0
        return np.column_stack([(a * v1 + b * v2) % self.N, (c * v1 + d * v2) % self.N]).astype(np.int64)


@dataclass(frozen=True)
class LatticeSample:
    g: Basis
    twist: tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class ConeSample:
    t: float
    base: LatticeSample


def accept_prob(x):
    """Acceptance for the x-marginal, density prop. to (1 - x^2)^-1/2 on [-1/2, 1/2]."""
    return SQRT3_2 / np.sqrt(1.0 - np.asarray(x, dtype=float) ** 2)


def shape_basis(x, y, theta) -> np.ndarray:
    """Rot(theta) [[y^-1/2, x y^-1/2], [0, y^1/2]] as rows of (g11, g12, g21, g22).

    The columns span the unimodular lattice with shape x + iy (the first
    column is a shortest vector when x + iy lies in the fundamental domain).
    """
    x, y, theta = (np.asarray(a, dtype=float) for a in (x, y, theta))
    s = np.sqrt(y)
    c, sn = np.cos(theta), np.sin(theta)
    b11, b12, b22 = 1.0 / s, x / s, s
    return np.stack([c * b11, c * b12 - sn * b22, sn * b11, sn * b12 + c * b22], axis=-1)


def sample_modular_surface(gen: np.random.Generator, size: int):
    """(x, y, theta, G) with (x, y) ~ dx dy / y^2 on the modular fundamental domain."""
    xs = np.empty(0)
    while xs.size < size:
        need = size - xs.size
        m = int(need * 1.12) + 8
        x = gen.uniform(-0.5, 0.5, m)
        u = gen.random(m)
        xs = np.concatenate([xs, x[u < accept_prob(x)]])
    x = xs[:size]
    # conditional density of y given x is prop. to y^-2 on [sqrt(1 - x^2), inf)
    y = np.sqrt(1.0 - x * x) / (1.0 - gen.random(size))
    theta = gen.uniform(0.0, 2 * math.pi, size)
    return x, y, theta, shape_basis(x, y, theta)


def sample_coset(N: int, gen: np.random.Generator, size: int, method: str = "rejection") -> np.ndarray:
    """Uniform elements of SL2(Z/NZ) as rows (a, b, c, d)."""
    if N == 1:
        return np.tile(np.array([1, 0, 0, 1], dtype=np.int64), (size, 1))
    if method == "table":
        from .orbits import sl2_mod_elements

        table = np.array([[a, b, c, d] for (a, b), (c, d) in sl2_mod_elements(N)], dtype=np.int64)
        return table[gen.integers(0, len(table), size)]
    out = np.empty((0, 4), dtype=np.int64)
    while out.shape[0] < size:
        need = size - out.shape[0]
        m = need * N + 16
        cand = gen.integers(0, N, (m, 4), dtype=np.int64)
        det = (cand[:, 0] * cand[:, 3] - cand[:, 1] * cand[:, 2]) % N
        out = np.vstack([out, cand[det == 1]])
    return out[:size]


def sample_nu_N(N: int, gen: np.random.Generator, size: int) -> LatticeBatch:
    x, y, theta, G = sample_modular_surface(gen, size)
    return LatticeBatch(N, x, y, theta, G, sample_coset(N, gen, size))


def sample_cone(N: int, gen: np.random.Generator, size: int) -> LatticeBatch:
    batch = sample_nu_N(N, gen, size)
    batch.t = 1.0 - gen.random(size)  # (0, 1]
    return batch


def batch_item(batch: LatticeBatch, i: int) -> LatticeSample | ConeSample:
    a, b, c, d = (int(v) for v in batch.twist[i])
    base = LatticeSample(Basis(*batch.G[i]), ((a, b), (c, d)))
    return base if batch.t is None else ConeSample(float(batch.t[i]), base)


def twisted_class(sigma: CongruenceCondition, u) -> CongruenceCondition:
    (a, b), (c, d) = u
    N = sigma.N
    if (a * d - b * c) % N != 1 % N:
        raise ValueError("u is not in SL2(Z/NZ)")
    v1, v2 = sigma.v0
    return CongruenceCondition(((a * v1 + b * v2) % N, (c * v1 + d * v2) % N), N)
