"""Exact piecewise-constant densities as trees of cube groups.

A density built by the recursive constructions is a disjoint union of
constant-value cubes, but near the accumulation times their number explodes
(a generation-10 pull-back alone has 2^20 copies in the plane). The tree keeps
that union implicit: leaves are groups of equal cubes, inner nodes place a
sub-tree at a list of offsets (or at every center of a dyadic generation) after
scaling it by a power of two and multiplying its values by a power of two.

All log2 sides and values are exact rationals, so masses come out exact whenever
each leaf's d*log2(side) + log2(value) is an integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import all_centers, cell_centers, in_unit_cube


def as_fraction(x) -> Fraction:
    """Exact rational for a user-facing real (2.3 becomes 23/10, not its binary expansion)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def pow2(exponent: Fraction) -> float:
    return 2.0 ** float(exponent)


def exact_pow2(exponent: Fraction) -> Fraction | float:
    if exponent.denominator == 1:
        e = exponent.numerator
        return Fraction(2**e) if e >= 0 else Fraction(1, 2 ** (-e))
    return 2.0 ** float(exponent)


@dataclass(frozen=True, eq=False)
class CubeGroup:
    """Equal cubes of side ``side`` carrying the value 2^log2_value."""

    centers: np.ndarray
    side: float
    log2_side: Fraction
    log2_value: Fraction
    moving: bool = False  # cubes that travel while the time varies

    @property
    def value(self) -> float:
        return pow2(self.log2_value)


@dataclass(frozen=True, eq=False)
class Placement:
    """Copies of ``child`` mapped by y -> offset + 2^log2_scale y, values times 2^log2_gain.

    Either ``offsets`` lists the copy centers or ``grid`` names a dyadic
    generation whose every cell holds one copy.
    """

    child: "CubeEnsemble"
    log2_scale: Fraction
    log2_gain: Fraction
    offsets: np.ndarray | None = None
    grid: int | None = None

    def __post_init__(self) -> None:
        if (self.offsets is None) == (self.grid is None):
            raise ValueError("give exactly one of offsets or grid")

    def copies(self, d: int) -> int:
        return 2 ** (self.grid * d) if self.grid is not None else len(self.offsets)

    @property
    def zoom(self) -> float:
        return pow2(-self.log2_scale)

    def offset_array(self, d: int) -> np.ndarray:
        return all_centers(self.grid, d) if self.grid is not None else self.offsets


@dataclass(frozen=True, eq=False)
class CubeEnsemble:
    d: int
    groups: tuple[CubeGroup, ...] = ()
    placements: tuple[Placement, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def empty(d: int) -> "CubeEnsemble":
        return CubeEnsemble(d)

    @staticmethod
    def unit(d: int, log2_value: Fraction = Fraction(0)) -> "CubeEnsemble":
        group = CubeGroup(np.zeros((1, d)), 1.0, Fraction(0), Fraction(log2_value))
        return CubeEnsemble(d, (group,))

    @staticmethod
    def from_cubes(centers, log2_side, log2_value, side: float | None = None, moving: bool = False) -> "CubeEnsemble":
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        log2_side = as_fraction(log2_side)
        side = pow2(log2_side) if side is None else float(side)
        group = CubeGroup(centers, side, log2_side, as_fraction(log2_value), moving)
        return CubeEnsemble(centers.shape[1], (group,))

    # -- size and exact integrals -------------------------------------------------

    def count(self) -> int:
        """Number of leaf cubes (may be astronomically large; never materialised)."""
        if "count" not in self._cache:
            n = sum(len(g.centers) for g in self.groups)
            n += sum(p.copies(self.d) * p.child.count() for p in self.placements)
            self._cache["count"] = n
        return self._cache["count"]

    def _leaf_terms(self, weight_side: Fraction, weight_value: Fraction):
        """Yield (multiplicity, exponent) with exponent = weight_side*log2 side + weight_value*log2 value."""
        stack = [(self, Fraction(0), Fraction(0), 1)]
        while stack:
            ens, ls, lv, mult = stack.pop()
            for g in ens.groups:
                yield mult * len(g.centers), weight_side * (g.log2_side + ls) + weight_value * (g.log2_value + lv)
            for p in ens.placements:
                stack.append((p.child, ls + p.log2_scale, lv + p.log2_gain, mult * p.copies(ens.d)))

    def mass(self) -> Fraction | float:
        """Sum of value * volume; exact rational when every leaf exponent is integral."""
        total: Fraction | float = Fraction(0)
        inexact = []
        for mult, e in self._leaf_terms(Fraction(self.d), Fraction(1)):
            term = exact_pow2(e)
            if isinstance(term, Fraction):
                total += mult * term
            else:
                inexact.append(mult * term)
        if inexact:
            return float(total) + math.fsum(inexact)
        return total

    def power_integral(self, r: float) -> float:
        """Integral of value^r over the support."""
        rq = as_fraction(r)
        return math.fsum(mult * pow2(e) for mult, e in self._leaf_terms(Fraction(self.d), rq))

    def lr_norm(self, r: float) -> float:
        if r == math.inf:
            return self.max_value()
        if r < 1:
            raise ValueError(f"L^r norm needs r >= 1, got {r}")
        return self.power_integral(r) ** (1.0 / r)

    def support_measure(self) -> Fraction | float:
        total: Fraction | float = Fraction(0)
        for mult, e in self._leaf_terms(Fraction(self.d), Fraction(0)):
            total = total + mult * exact_pow2(e)
        return total

    def max_value(self) -> float:
        values = [pow2(e) for mult, e in self._leaf_terms(Fraction(0), Fraction(1)) if mult]
        return max(values, default=0.0)

    def value_exponents(self) -> set[Fraction]:
        return {e for mult, e in self._leaf_terms(Fraction(0), Fraction(1)) if mult}

    # -- pointwise evaluation -------------------------------------------------------

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, self.d)
        values, _ = self._evaluate(flat, Fraction(0))
        return values.reshape(pts.shape[:-1])

    def _evaluate(self, pts: np.ndarray, lv: Fraction) -> tuple[np.ndarray, np.ndarray]:
        # values are 2^(exact exponent sum), matching the pointwise evaluators bit for bit
        n = len(pts)
        values = np.zeros(n)
        hit = np.zeros(n, dtype=bool)
        for g in self.groups:
            free = np.flatnonzero(~hit)
            if free.size == 0:
                break
            sub = pts[free]
            for c in g.centers:
                inside = np.all(np.abs(sub - c) <= g.side / 2, axis=1)
                if inside.any():
                    rows = free[inside]
                    values[rows] = pow2(g.log2_value + lv)
                    hit[rows] = True
                    keep = ~inside
                    free, sub = free[keep], sub[keep]
                    if free.size == 0:
                        break
        for p in self.placements:
            free = np.flatnonzero(~hit)
            if free.size == 0:
                break
            zoom = p.zoom
            child_lv = lv + p.log2_gain
            if p.grid is not None:
                sub = pts[free]
                ok = in_unit_cube(sub)
                free, sub = free[ok], sub[ok]
                local = (sub - cell_centers(p.grid, sub)) * zoom
                v, h = p.child._evaluate(local, child_lv)
                values[free[h]] = v[h]
                hit[free[h]] = True
            else:
                half = pow2(p.log2_scale) / 2
                for o in p.offsets:
                    sub = pts[free]
                    near = np.all(np.abs(sub - o) <= half, axis=1)
                    if not near.any():
                        continue
                    rows = free[near]
                    v, h = p.child._evaluate((sub[near] - o) * zoom, child_lv)
                    values[rows[h]] = v[h]
                    hit[rows[h]] = True
                    free = np.flatnonzero(~hit)
        return values, hit

    # -- explicit expansion -----------------------------------------------------------

    def flatten(self, limit: int = 2_000_000):
        """Explicit (centers, sides, values) arrays; refuses to expand beyond ``limit`` cubes."""
        return self.flatten_moving(limit)[:3]

    def flatten_moving(self, limit: int = 2_000_000, _lv: Fraction = Fraction(0)):
        """Like ``flatten`` with a fourth boolean array marking moving cubes."""
        if self.count() > limit:
            raise ValueError(f"ensemble has {self.count()} cubes, above the limit {limit}")
        centers, sides, values, moving = [], [], [], []
        for g in self.groups:
            centers.append(g.centers)
            sides.append(np.full(len(g.centers), g.side))
            values.append(np.full(len(g.centers), pow2(g.log2_value + _lv)))
            moving.append(np.full(len(g.centers), g.moving))
        for p in self.placements:
            cc, ss, vv, mm = p.child.flatten_moving(limit, _lv + p.log2_gain)
            if len(cc) == 0:
                continue
            scale = pow2(p.log2_scale)
            offsets = p.offset_array(self.d)
            centers.append((offsets[:, None, :] + scale * cc[None, :, :]).reshape(-1, self.d))
            sides.append(np.tile(ss * scale, len(offsets)))
            values.append(np.tile(vv, len(offsets)))
            moving.append(np.tile(mm, len(offsets)))
        if not centers:
            return np.zeros((0, self.d)), np.zeros(0), np.zeros(0), np.zeros(0, dtype=bool)
        return np.concatenate(centers), np.concatenate(sides), np.concatenate(values), np.concatenate(moving)
