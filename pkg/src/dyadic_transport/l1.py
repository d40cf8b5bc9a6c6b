"""Single-scale construction: velocity and density with L^1 (but no better) densities.

On the contracting half E_i of the i-th time gap every generation-i cell holds a
time-reversed, shrunken copy of the whole solution; on the spreading half O_i a
building block spreads the cubes of each cell back out. Evaluators unroll that
self-similarity iteratively with a depth budget; the budget-N unrolling from a
zero velocity is the N-th iterate of the defining map.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .blocks import BlockParams, block_cubes, block_density, block_velocity
from .ensemble import CubeEnsemble, Placement, as_fraction, pow2
from .geometry import all_centers, cell_centers, in_unit_cube
from .schedule import Phase, SchedulePoint, l1_locate

BASES = ("freeze", "drop")


@dataclass(frozen=True)
class L1Params:
    d: int = 2
    beta: float = 0.8
    nu: float = 2.3
    depth: int = 8
    base: str = "freeze"
    alpha: float | None = None
    p: float | None = None
    s_time: float | None = None
    q: float | None = None

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.nu > 1.0:
            # the spreading block needs 2 * 2^(-nu (i+1)) < 2^(-nu i)
            raise ValueError(f"nu must exceed 1, got {self.nu}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if self.base not in BASES:
            raise ValueError(f"base must be one of {BASES}, got {self.base!r}")

    @property
    def nu_q(self) -> Fraction:
        return as_fraction(self.nu)

    def block(self, i: int) -> BlockParams:
        return BlockParams.dyadic(1, -self.nu_q * i, -self.nu_q * (i + 1))

    def zoom_exponent(self, i: int) -> Fraction:
        return (1 + self.nu_q) * i


@dataclass(frozen=True)
class Chain:
    """x-independent descent for one time: located levels and how the descent ended."""

    levels: tuple[SchedulePoint, ...]
    end: str  # "block", "terminal" or "budget"


def l1_chain(t: float, params: L1Params) -> Chain:
    levels = []
    t_loc = float(t)
    budget = params.depth
    while True:
        if t_loc >= 1.0:
            return Chain(tuple(levels), "terminal")
        if budget == 0:
            return Chain(tuple(levels), "budget")
        sp = l1_locate(params.beta, t_loc)
        levels.append(sp)
        if sp.phase is Phase.O:
            return Chain(tuple(levels), "block")
        t_loc = sp.s
        budget -= 1


def _points(x, d):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {d}")
    return pts, single


def l1_velocity(t: float, x, params: L1Params):
    """Velocity and spatial Jacobian at time t for a point or an (n, d) array of points."""
    pts, single = _points(x, params.d)
    n, d = pts.shape
    v = np.zeros((n, d))
    jac = np.zeros((n, d, d))
    chain = l1_chain(t, params)
    rows = np.arange(n)
    y = pts
    amp, zoom = 1.0, 1.0
    for sp in chain.levels:
        keep = in_unit_cube(y)
        rows, y = rows[keep], y[keep]
        if rows.size == 0:
            break
        i = sp.interval
        c = cell_centers(i, y)
        if sp.phase is Phase.E:
            f = pow2(params.zoom_exponent(i))
            amp *= -sp.scale / f
            y = (y - c) * f
            zoom *= f
        else:
            f = 2.0**i
            vb, jb = block_velocity(sp.s, (y - c) * f, params.block(i))
            coef = amp * sp.scale / f
            v[rows] = coef * vb
            jac[rows] = (coef * f * zoom) * jb
    return (v[0], jac[0]) if single else (v, jac)


def l1_density(t: float, x, params: L1Params):
    """Density at time t; values are exact powers of two (or 0)."""
    pts, single = _points(x, params.d)
    n, d = pts.shape
    out = np.zeros(n)
    chain = l1_chain(t, params)
    rows = np.arange(n)
    y = pts
    lexp = Fraction(0)
    nud = params.nu_q * d
    for sp in chain.levels:
        keep = in_unit_cube(y)
        rows, y = rows[keep], y[keep]
        i = sp.interval
        c = cell_centers(i, y)
        if sp.phase is Phase.E:
            lexp += nud * i
            y = (y - c) * pow2(params.zoom_exponent(i))
        else:
            hit = block_density(sp.s, (y - c) * 2.0**i, params.block(i)) > 0
            out[rows[hit]] = pow2(lexp + nud * (i + 1))
            return float(out[0]) if single else out
    if chain.end == "terminal" or params.base == "freeze":
        out[rows[in_unit_cube(y)]] = pow2(lexp)
    return float(out[0]) if single else out


def l1_boundary_density(which: str, params: L1Params) -> CubeEnsemble:
    """Initial configuration (2^d concentrated cubes) or final one (the unit cube)."""
    d = params.d
    if which == "out":
        return CubeEnsemble.unit(d)
    if which == "in":
        return CubeEnsemble.from_cubes(all_centers(1, d), -(1 + params.nu_q), params.nu_q * d)
    raise ValueError(f"which must be 'in' or 'out', got {which!r}")


def l1_density_cubes(t: float, params: L1Params) -> CubeEnsemble:
    chain = l1_chain(t, params)
    d = params.d
    nud = params.nu_q * d
    if chain.end == "block":
        sp = chain.levels[-1]
        i = sp.interval
        node = CubeEnsemble(d, placements=(Placement(block_cubes(sp.s, params.block(i), d), Fraction(-i), nud * (i + 1), grid=i),))
        levels = chain.levels[:-1]
    else:
        node = CubeEnsemble.unit(d) if chain.end == "terminal" or params.base == "freeze" else CubeEnsemble.empty(d)
        levels = chain.levels
    for sp in reversed(levels):
        i = sp.interval
        node = CubeEnsemble(d, placements=(Placement(node, -params.zoom_exponent(i), nud * i, grid=i),))
    return node


def l1_support_samples(t: float, params: L1Params, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random points where the velocity at time t can be nonzero (empty if it vanishes identically)."""
    chain = l1_chain(t, params)
    d = params.d
    if chain.end != "block":
        return np.zeros((0, d))
    sp = chain.levels[-1]
    bp = params.block(sp.interval)
    m = bp.spread(sp.s)
    k = rng.integers(0, 2**d, n)
    local = m * all_centers(1, d)[k] + rng.uniform(-1.0, 1.0, (n, d)) * bp.side
    y = cell_offsets(sp.interval, d, n, rng) + local / 2.0**sp.interval
    for level in reversed(chain.levels[:-1]):
        i = level.interval
        y = cell_offsets(i, d, n, rng) + y / pow2(params.zoom_exponent(i))
    return y


def cell_offsets(generation: int, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    j = rng.integers(0, 2**generation, (n, d))
    return (j + 0.5) / 2.0**generation - 0.5
