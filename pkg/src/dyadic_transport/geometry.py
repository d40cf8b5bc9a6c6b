"""Axis-aligned cubes and dyadic cell indexing inside the unit cube [-1/2, 1/2]^d."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Cube:
    """Closed axis-aligned cube given by its center and side length."""

    center: tuple[float, ...]
    side: float

    def __post_init__(self) -> None:
        if not self.side > 0:
            raise ValueError(f"cube side must be positive, got {self.side}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return self.side ** self.d

    def contains(self, x) -> bool | np.ndarray:
        return cube_contains(self, x)


def cube_contains(cube: Cube, x) -> bool | np.ndarray:
    """Closed-box membership; accepts a single point or an (n, d) array."""
    pts = np.asarray(x, dtype=float)
    inside = np.all(np.abs(pts - np.asarray(cube.center)) <= cube.side / 2, axis=-1)
    return bool(inside) if inside.ndim == 0 else inside


def _check_index(eta: int, k: int, d: int) -> None:
    if eta < 1 or d < 1:
        raise ValueError(f"need eta >= 1 and d >= 1, got eta={eta}, d={d}")
    if not 1 <= k <= 2 ** (eta * d):
        raise ValueError(f"index k={k} outside 1..{2 ** (eta * d)}")


def digits_of_index(eta: int, k: int, d: int) -> tuple[int, ...]:
    """Base-2^eta digits (j_1, ..., j_d) of k - 1, least significant first."""
    _check_index(eta, k, d)
    base = 2**eta
    rest = k - 1
    digits = []
    for _ in range(d):
        rest, j = divmod(rest, base)
        digits.append(j)
    return tuple(digits)


def index_of_digits(eta: int, digits) -> int:
    base = 2**eta
    k = 0
    for j in reversed(tuple(digits)):
        if not 0 <= j < base:
            raise ValueError(f"digit {j} outside 0..{base - 1}")
        k = k * base + int(j)
    return k + 1


def center_of_index(eta: int, k: int, d: int) -> np.ndarray:
    """Center of the k-th generation-eta dyadic cell (k is 1-based)."""
    j = np.asarray(digits_of_index(eta, k, d), dtype=float)
    n = 2.0**eta
    return (j - (n - 1) / 2) / n


@lru_cache(maxsize=64)
def _centers_table(eta: int, d: int) -> np.ndarray:
    n = 2**eta
    # row k-1 holds c_k; the first coordinate varies fastest
    grids = np.meshgrid(*([np.arange(n)] * d), indexing="ij")
    digits = np.stack([g.ravel(order="F") for g in grids], axis=1).astype(float)
    table = (digits + 0.5) / n - 0.5  # same rounding as cell_centers
    table.setflags(write=False)
    return table


def all_centers(eta: int, d: int) -> np.ndarray:
    """All 2^(eta d) generation-eta centers, row k-1 holding c_k."""
    if eta * d > 24:
        raise ValueError("refusing to materialise more than 2^24 centers")
    return _centers_table(eta, d)


def cell_digits(eta: int, points) -> np.ndarray:
    """Half-open cell digits of points, clamped so the closed upper face maps to the last cell."""
    pts = np.asarray(points, dtype=float)
    n = 2**eta
    j = np.floor((pts + 0.5) * n)
    return np.clip(j, 0, n - 1).astype(np.int64)


def cell_centers(eta: int, points) -> np.ndarray:
    """Center of the (clamped) generation-eta cell holding each point."""
    n = 2.0**eta
    return (cell_digits(eta, points) + 0.5) / n - 0.5


def index_of_point(eta: int, x, d: int | None = None) -> int | None:
    """Index k of the half-open cell holding x, or None outside [-1/2, 1/2)^d."""
    pts = np.asarray(x, dtype=float).reshape(-1)
    if d is not None and pts.size != d:
        raise ValueError(f"point has {pts.size} coordinates, expected {d}")
    if np.any(pts < -0.5) or np.any(pts >= 0.5):
        return None
    n = 2**eta
    digits = np.floor((pts + 0.5) * n).astype(np.int64)
    return index_of_digits(eta, np.minimum(digits, n - 1))


def cell_indices(eta: int, points) -> np.ndarray:
    """Vectorised 1-based cell index (clamped, half-open) for an (n, d) array."""
    j = cell_digits(eta, points)
    weights = (2**eta) ** np.arange(j.shape[-1], dtype=np.int64)
    return j @ weights + 1


def in_unit_cube(points) -> np.ndarray:
    return np.all(np.abs(np.asarray(points)) <= 0.5, axis=-1)
