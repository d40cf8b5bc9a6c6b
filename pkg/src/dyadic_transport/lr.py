"""Asynchronous construction: a sequence of velocities w_i and densities rho_i.

Time [0, 1] is cut into 2^(eta d) slots; during slot k only the generation-eta
cell c_k evolves while the other cells sit still (cells before k already spread
to value 1, cells after k still concentrated). Inside slot k:

  T1  the cell holds a reversed, shrunken copy of component 1,
  T2  a building block spreads 2^(eta d) cubes,
  T3  the cell holds a zoomed copy of component i + 1.

Component i is evaluated by unrolling these rules with a depth budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .blocks import BlockParams, block_cubes, block_density, block_velocity
from .ensemble import CubeEnsemble, CubeGroup, Placement, as_fraction, pow2
from .geometry import all_centers, cell_centers, cell_indices, in_unit_cube
from .schedule import Phase, SchedulePoint, lr_checkpoints, lr_locate

BASES = ("freeze", "drop")


@dataclass(frozen=True)
class LrParams:
    d: int = 2
    beta: float = 0.8
    nu: float = 2.3
    eta: int = 2
    depth: int = 8
    base: str = "freeze"
    sign: int = -1  # prefactor sign on T1; -1 transports, +1 is the literal printed formula
    p: float | None = None
    r: float | None = None
    q: float | None = None

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.nu > 1.0:
            raise ValueError(f"nu must exceed 1, got {self.nu}")
        if not (isinstance(self.eta, int) and self.eta >= 1):
            raise ValueError(f"eta must be a positive integer, got {self.eta}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if self.base not in BASES:
            raise ValueError(f"base must be one of {BASES}, got {self.base!r}")
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")

    @property
    def nu_q(self) -> Fraction:
        return as_fraction(self.nu)

    @property
    def gamma1(self) -> float | None:
        return None if self.p is None else self.nu * (1 - self.d / self.p)

    @property
    def gamma2(self) -> float | None:
        return None if self.r is None else self.nu * self.d * (1 - 1 / self.r)

    @property
    def gamma3(self) -> float | None:
        return None if self.q is None else self.nu * self.d * (1 - 1 / self.q)

    def block(self, i: int) -> BlockParams:
        return BlockParams.dyadic(self.eta, -self.nu_q * i, -self.nu_q * (i + 1))

    def concentrated_exponent(self, i: int) -> Fraction:
        """log2 of the side of the concentrated cube of component i."""
        return -(self.eta + self.nu_q * i)


@dataclass(frozen=True)
class Level:
    point: SchedulePoint
    component: int


@dataclass(frozen=True)
class Chain:
    levels: tuple[Level, ...]
    end: str  # "block", "terminal" or "budget"
    component: int  # component in force when the descent stopped
    orientation: str  # last descent: "none", "reversed" or "forward"


def lr_chain(i: int, t: float, params: LrParams) -> Chain:
    if i < 1:
        raise ValueError(f"component index must be >= 1, got {i}")
    levels = []
    comp, t_loc, budget, orient = i, float(t), params.depth, "none"
    while True:
        if t_loc >= 1.0:
            return Chain(tuple(levels), "terminal", comp, orient)
        if budget == 0:
            return Chain(tuple(levels), "budget", comp, orient)
        sp = lr_locate(params.beta, params.eta, params.d, t_loc)
        levels.append(Level(sp, comp))
        if sp.phase is Phase.T2:
            return Chain(tuple(levels), "block", comp, orient)
        if sp.phase is Phase.T1:
            comp, orient = 1, "reversed"
        else:
            comp, orient = comp + 1, "forward"
        t_loc = sp.s
        budget -= 1


def _points(x, d):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {d}")
    return pts, single


def lr_velocity(i: int, t: float, x, params: LrParams):
    """Component i of the velocity and its Jacobian at time t."""
    pts, single = _points(x, params.d)
    n, d = pts.shape
    eta = params.eta
    v = np.zeros((n, d))
    jac = np.zeros((n, d, d))
    chain = lr_chain(i, t, params)
    centers = all_centers(eta, d)
    rows = np.arange(n)
    y = pts
    amp, zoom = 1.0, 1.0
    for level in chain.levels:
        sp, comp = level.point, level.component
        k = sp.interval
        keep = in_unit_cube(y)
        rows, y = rows[keep], y[keep]
        active = cell_indices(eta, y) == k
        rows, y = rows[active], y[active]
        if rows.size == 0:
            break
        c = centers[k - 1]
        if sp.phase is Phase.T1:
            f = pow2(-params.concentrated_exponent(comp))
            amp *= params.sign * sp.scale / f
        elif sp.phase is Phase.T3:
            f = 2.0**eta
            amp *= sp.scale / f
        else:
            f = 2.0**eta
            vb, jb = block_velocity(sp.s, (y - c) * f, params.block(comp))
            coef = amp * sp.scale / f
            v[rows] = coef * vb
            jac[rows] = (coef * f * zoom) * jb
            break
        y = (y - c) * f
        zoom *= f
    return (v[0], jac[0]) if single else (v, jac)


def lr_density(i: int, t: float, x, params: LrParams):
    """Component i of the density at time t; values are exact powers of two (or 0)."""
    pts, single = _points(x, params.d)
    n, d = pts.shape
    eta = params.eta
    nud = params.nu_q * d
    out = np.zeros(n)
    chain = lr_chain(i, t, params)
    centers = all_centers(eta, d)
    rows = np.arange(n)
    y = pts
    lexp = Fraction(0)

    def concentrated(rows, y, comp, lexp):
        small = pow2(params.concentrated_exponent(comp))
        hit = np.all(np.abs(y - cell_centers(eta, y)) <= small / 2, axis=1)
        out[rows[hit]] = pow2(lexp + nud * comp)

    for level in chain.levels:
        sp, comp = level.point, level.component
        k = sp.interval
        keep = in_unit_cube(y)
        rows, y = rows[keep], y[keep]
        kk = cell_indices(eta, y)
        out[rows[kk < k]] = pow2(lexp)
        later = kk > k
        concentrated(rows[later], y[later], comp, lexp)
        active = kk == k
        rows, y = rows[active], y[active]
        c = centers[k - 1]
        if sp.phase is Phase.T1:
            lexp += nud * comp
            y = (y - c) * pow2(-params.concentrated_exponent(comp))
        elif sp.phase is Phase.T3:
            y = (y - c) * 2.0**eta
        else:
            hit = block_density(sp.s, (y - c) * 2.0**eta, params.block(comp)) > 0
            out[rows[hit]] = pow2(lexp + nud * (comp + 1))
            return float(out[0]) if single else out
    keep = in_unit_cube(y)
    rows, y = rows[keep], y[keep]
    if chain.end == "terminal" or (params.base == "freeze" and chain.orientation != "forward"):
        out[rows] = pow2(lexp)
    elif params.base == "freeze":
        concentrated(rows, y, chain.component, lexp)
    return float(out[0]) if single else out


def lr_boundary_density(which: str, params: LrParams, i: int = 1) -> CubeEnsemble:
    """``in``: 2^(eta d) concentrated cubes of component i; ``out``: the unit cube."""
    d = params.d
    if which == "out":
        return CubeEnsemble.unit(d)
    if which == "in":
        if i < 1:
            raise ValueError(f"component index must be >= 1, got {i}")
        return CubeEnsemble.from_cubes(all_centers(params.eta, d), params.concentrated_exponent(i), params.nu_q * d * i)
    raise ValueError(f"which must be 'in' or 'out', got {which!r}")


def concentrated_cube(params: LrParams, i: int) -> CubeEnsemble:
    """Single concentrated cube of component i centered at the origin."""
    return CubeEnsemble.from_cubes(np.zeros((1, params.d)), params.concentrated_exponent(i), params.nu_q * params.d * i)


def lr_density_cubes(i: int, t: float, params: LrParams) -> CubeEnsemble:
    chain = lr_chain(i, t, params)
    d, eta = params.d, params.eta
    nud = params.nu_q * d
    centers = all_centers(eta, d)

    if chain.end == "block":
        last = chain.levels[-1]
        comp = last.component
        child = block_cubes(last.point.s, params.block(comp), d)
        active = Placement(child, Fraction(-eta), nud * (comp + 1), offsets=centers[last.point.interval - 1 : last.point.interval])
        node = _slot_node(params, last, active)
        levels = chain.levels[:-1]
    else:
        if chain.end == "terminal" or (params.base == "freeze" and chain.orientation != "forward"):
            node = CubeEnsemble.unit(d)
        elif params.base == "freeze":
            node = lr_boundary_density("in", params, chain.component)
        else:
            node = CubeEnsemble.empty(d)
        levels = chain.levels
    for level in reversed(levels):
        sp, comp = level.point, level.component
        offsets = centers[sp.interval - 1 : sp.interval]
        if sp.phase is Phase.T1:
            active = Placement(node, params.concentrated_exponent(comp), nud * comp, offsets=offsets)
        else:
            active = Placement(node, Fraction(-eta), Fraction(0), offsets=offsets)
        node = _slot_node(params, level, active)
    return node


def _slot_node(params: LrParams, level: Level, active: Placement) -> CubeEnsemble:
    d, eta = params.d, params.eta
    k, comp = level.point.interval, level.component
    centers = all_centers(eta, d)
    groups = []
    if k > 1:
        groups.append(CubeGroup(centers[: k - 1], pow2(Fraction(-eta)), Fraction(-eta), Fraction(0)))
    if k < len(centers):
        ls = params.concentrated_exponent(comp)
        groups.append(CubeGroup(centers[k:], pow2(ls), ls, params.nu_q * d * comp))
    return CubeEnsemble(d, tuple(groups), (active,))


def lr_support_samples(i: int, t: float, params: LrParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random points where component i of the velocity at time t can be nonzero."""
    chain = lr_chain(i, t, params)
    d, eta = params.d, params.eta
    if chain.end != "block":
        return np.zeros((0, d))
    last = chain.levels[-1]
    bp = params.block(last.component)
    m = bp.spread(last.point.s)
    centers = all_centers(eta, d)
    k = rng.integers(0, len(centers), n)
    y = (m * centers[k] + rng.uniform(-1.0, 1.0, (n, d)) * bp.side) / 2.0**eta
    y = centers[last.point.interval - 1] + y
    for level in reversed(chain.levels[:-1]):
        sp = level.point
        f = pow2(-params.concentrated_exponent(level.component)) if sp.phase is Phase.T1 else 2.0**eta
        y = centers[sp.interval - 1] + y / f
    return y


def nested_block_time(params: LrParams, generation: int, k: int, s: float) -> float:
    """Time at which component 1 descends through slot k with T3 (generation - 1 times), then runs T2 of slot k at local time s.

    The block then moving belongs to component ``generation``.
    """
    if generation < 1:
        raise ValueError(f"generation must be >= 1, got {generation}")
    if not 0.0 <= s < 1.0:
        raise ValueError(f"local time must lie in [0, 1), got {s}")
    t1, mid, t2, tinf = lr_checkpoints(params.beta, params.eta, params.d, k)
    t = mid + s * (t2 - mid)
    for _ in range(generation - 1):
        t = t2 + t * (tinf - t2)
    return t


def nested_cell(params: LrParams, generation: int, k: int) -> tuple[np.ndarray, float]:
    """Center and side of the cell that holds the generation-th nested copy in slot k."""
    c = all_centers(params.eta, params.d)[k - 1]
    center = np.zeros(params.d)
    side = 1.0
    for _ in range(generation - 1):
        center = center + side * c
        side /= 2.0**params.eta
    return center, side
