import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from congsiegel.lattice import CongruenceCondition
from congsiegel.orbits import sl2_mod_elements
from congsiegel.randlat import (
    RngStream,
    accept_prob,
    batch_item,
    sample_cone,
    sample_coset,
    sample_modular_surface,
    sample_nu_N,
    shape_basis,
    twisted_class,
)


def test_streams_are_reproducible_and_distinct():
    a = RngStream(5, 0).block(3).random(4)
    assert np.array_equal(a, RngStream(5, 0).block(3).random(4))
    assert not np.array_equal(a, RngStream(5, 1).block(3).random(4))
    assert not np.array_equal(a, RngStream(5, 0).block(4).random(4))
    assert not np.array_equal(a, RngStream(6, 0).block(3).random(4))


@given(st.floats(-0.5, 0.5), st.floats(0.8, 50), st.floats(0, 2 * math.pi))
def test_shape_basis_is_unimodular(x, y, th):
    g = shape_basis(x, y, th)
    assert g[0] * g[3] - g[1] * g[2] == pytest.approx(1.0, rel=1e-12)


def test_acceptance_probability_bounds():
    assert accept_prob(0.0) == pytest.approx(math.sqrt(0.75))
    assert accept_prob(0.5) == pytest.approx(1.0)


def test_samples_in_fundamental_domain():
    x, y, th, G = sample_modular_surface(RngStream(1).generator(), 20_000)
    assert np.all(np.abs(x) <= 0.5) and np.all(x * x + y * y >= 1 - 1e-12)
    assert np.all((th >= 0) & (th < 2 * math.pi))


def test_height_tail():
    # P(y >= 2) = (3 / pi) int_2^inf dy / y^2 = 3 / (2 pi)
    _, y, _, _ = sample_modular_surface(RngStream(2).generator(), 200_000)
    p = 3 / (2 * math.pi)
    assert abs((y >= 2).mean() - p) <= 4 * math.sqrt(p * (1 - p) / y.size)


@pytest.mark.parametrize("N,method", [(2, "rejection"), (3, "rejection"), (3, "table")])
def test_coset_sampler_uniform(N, method):
    elems = {e: i for i, e in enumerate(sl2_mod_elements(N))}
    draws = sample_coset(N, RngStream(3).generator(), 30_000, method)
    idx = [elems[((a, b), (c, d))] for a, b, c, d in draws]
    assert stats.chisquare(np.bincount(idx, minlength=len(elems))).pvalue > 1e-3


def test_nu_N_batches():
    b = sample_nu_N(2, RngStream(4).generator(), 100)
    assert len(b) == 100 and b.t is None
    res = b.residues(CongruenceCondition((1, 0), 2))
    assert np.array_equal(res, b.twist[:, [0, 2]] % 2)
    c = sample_cone(2, RngStream(4).generator(), 100)
    assert np.all((c.t > 0) & (c.t <= 1))
    item = batch_item(c, 0)
    assert item.t == c.t[0] and item.base.g.det == pytest.approx(1.0)


def test_twisted_class():
    s = CongruenceCondition((1, 0), 3)
    assert twisted_class(s, ((2, 0), (1, 2))).v0 == (2, 1)
    with pytest.raises(ValueError):
        twisted_class(s, ((1, 0), (0, 2)))
