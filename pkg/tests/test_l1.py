from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from dyadic_transport.blocks import zeta
from dyadic_transport.l1 import L1Params, l1_boundary_density, l1_chain, l1_density, l1_density_cubes, l1_support_samples, l1_velocity
from dyadic_transport.schedule import Phase, l1_checkpoints

P = L1Params(depth=6)


def same(got, want):
    # the oracle multiplies float powers, so values may differ in the last bits; zeros must agree exactly
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=0)


def naive_density(t, x, depth, params=P, base=True):
    """Direct recursion on the defining rules, one point at a time."""
    nu, d, beta = params.nu, params.d, params.beta
    if np.any(np.abs(x) > 0.5):
        return 0.0
    if t == 1.0:
        return 1.0
    if depth == 0:
        return 1.0 if base else 0.0
    i = 1
    while not t < l1_checkpoints(beta, i)[2]:
        i += 1
    lo, mid, hi = l1_checkpoints(beta, i)
    n = 2**i
    c = (np.minimum(np.floor((x + 0.5) * n), n - 1) + 0.5) / n - 0.5
    if t < mid:
        s = min(1.0, (mid - t) / (mid - lo))
        return 2.0 ** (nu * d * i) * naive_density(s, (x - c) * 2.0 ** ((1 + nu) * i), depth - 1, params, base)
    s = (t - mid) / (hi - mid)
    m = (1 - zeta(s)) * 2.0 ** (-nu * i) + zeta(s)
    y = (x - c) * n
    k = (np.clip(np.floor((y / m + 0.5) * 2), 0, 1) + 0.5) / 2 - 0.5
    side = 2.0 ** (-nu * (i + 1)) / 2
    return 2.0 ** (nu * d * (i + 1)) if np.all(np.abs(y - m * k) <= side / 2) else 0.0


def test_chain_shapes():
    assert l1_chain(1.0, P).end == "terminal"
    c = l1_chain(0.0, P)
    assert [sp.phase for sp in c.levels] == [Phase.E] and c.end == "terminal"
    mid = l1_checkpoints(0.8, 1)[1]
    c = l1_chain(mid + 0.01, P)
    assert c.end == "block" and c.levels[-1].interval == 1


def test_density_matches_naive_recursion(rng):
    for t in rng.uniform(0, 1, 25):
        x = rng.uniform(-0.55, 0.55, (40, 2))
        same(l1_density(t, x, P), [naive_density(t, p, P.depth) for p in x])
    # points placed on the support, where the recursion goes deep
    for t in rng.uniform(0, 1, 10):
        x = l1_support_samples(t, P, 40, rng)
        if len(x):
            same(l1_density(t, x, P), [naive_density(t, p, P.depth) for p in x])


def test_drop_base_is_zero_iterate(rng):
    drop = L1Params(depth=2, base="drop")
    for t in rng.uniform(0, 1, 20):
        x = rng.uniform(-0.5, 0.5, (30, 2))
        same(l1_density(t, x, drop), [naive_density(t, p, 2, drop, base=False) for p in x])


def test_boundary_values():
    grid = (np.stack(np.meshgrid(np.arange(64), np.arange(64), indexing="ij"), -1).reshape(-1, 2) + 0.5) / 64 - 0.5
    assert np.array_equal(l1_density(0.0, grid, P), l1_boundary_density("in", P).evaluate(grid))
    assert np.all(l1_density(1.0, grid, P) == 1.0)
    assert l1_boundary_density("in", P).mass() == 1
    with pytest.raises(ValueError):
        l1_boundary_density("mid", P)


def test_ensemble_mass_exact(rng):
    for t in rng.uniform(0, 1, 10):
        assert l1_density_cubes(t, L1Params(depth=4)).mass() == Fraction(1)


def test_velocity_vanishes_off_support(rng):
    t = l1_checkpoints(0.8, 1)[1] + 0.5 * (l1_checkpoints(0.8, 1)[2] - l1_checkpoints(0.8, 1)[1])
    x = rng.uniform(-0.5, 0.5, (4000, 2))
    v, _ = l1_velocity(t, x, P)
    live = np.any(v != 0, axis=1)
    assert 0 < live.sum() < len(x)
    samples = l1_support_samples(t, P, 500, rng)
    assert np.any(l1_velocity(t, samples, P)[0] != 0)


def test_params_validation():
    with pytest.raises(ValueError):
        L1Params(nu=1.0)
    with pytest.raises(ValueError):
        L1Params(base="keep")
    with pytest.raises(ValueError):
        L1Params(d=1)
