"""Smooth divergence-free building block: rigid translation of small cubes.

The profile ``b_field`` equals a prescribed direction on [-1, 1]^d, vanishes
outside [-5/4, 5/4]^d and is exactly divergence-free. Translating a cube of
side lam from A0 to A1 uses the profile rescaled to width 0.8 lam, which keeps
the plateau over the moving cube and the support inside the concentric cube of
side 2 lam. The spreading block moves 2^(eta d) such cubes at once, from the
contracted grid a * c_k to the dyadic centers c_k.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import expit

from .ensemble import CubeEnsemble, as_fraction, pow2
from .geometry import all_centers, cell_centers

PROFILE_SCALE = 0.8


def transition(u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smooth step h(u) = psi(u) / (psi(u) + psi(1 - u)), psi(u) = exp(-1/u), with h' and h''."""
    u = np.asarray(u, dtype=float)
    h = np.where(u >= 1.0, 1.0, 0.0)
    dh = np.zeros_like(u)
    d2h = np.zeros_like(u)
    inner = (u > 0.0) & (u < 1.0)
    if np.any(inner):
        w = u[inner]
        a = 1.0 / w
        b = 1.0 / (1.0 - w)
        g = a - b
        hi = expit(-g)
        hh = hi * expit(g)  # h (1 - h) without cancellation
        big = a * a + b * b
        h[inner] = hi
        dh[inner] = hh * big
        d2h[inner] = dh[inner] * (1.0 - 2.0 * hi) * big + hh * (2.0 * b**3 - 2.0 * a**3)
    return h, dh, d2h


def zeta(t, order: int = 0):
    """Time cutoff: 0 up to 1/3, 1 from 2/3 on."""
    h = transition(3.0 * np.asarray(t, dtype=float) - 1.0)
    out = h[order] * 3.0**order
    return float(out) if out.ndim == 0 else out


def plateau(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Space cutoff phi with phi', phi'': 1 on [-1, 1], 0 outside [-5/4, 5/4]."""
    x = np.asarray(x, dtype=float)
    h, dh, d2h = transition(5.0 - 4.0 * np.abs(x))
    return h, -4.0 * np.sign(x) * dh, 16.0 * d2h


def _profile(y: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sum_l w_l F_l(y) and its Jacobian, where F_l is the stream-function field equal to e_l on the plateau.

    F_l lives in the (l, m) coordinate plane, m = l + 1 mod d, with stream
    function y_m * prod_j phi(y_j): component l is its m-derivative and
    component m minus its l-derivative.
    """
    n, d = y.shape
    f, f1, f2 = plateau(y)
    w = np.broadcast_to(w, (n, d))

    def prod_except(*skip):
        out = np.ones(n)
        for j in range(d):
            if j not in skip:
                out = out * f[:, j]
        return out

    full = prod_except()
    grad = np.empty((n, d))
    hess = np.empty((n, d, d))
    for j in range(d):
        rest = prod_except(j)
        grad[:, j] = f1[:, j] * rest
        hess[:, j, j] = f2[:, j] * rest
        for k in range(j + 1, d):
            hess[:, j, k] = hess[:, k, j] = f1[:, j] * f1[:, k] * prod_except(j, k)

    v = np.zeros((n, d))
    jac = np.zeros((n, d, d))
    for l in range(d):
        m = (l + 1) % d
        wl = w[:, l][:, None]
        ym = y[:, m]
        v[:, l] += w[:, l] * (full + ym * grad[:, m])
        v[:, m] += w[:, l] * (-ym * grad[:, l])
        row_l = grad + ym[:, None] * hess[:, m, :]
        row_l[:, m] += grad[:, m]
        row_m = -(grad[:, l][:, None] * (np.arange(d) == m) + ym[:, None] * hess[:, l, :])
        # the diagonal pair cancels exactly: d_l of comp l is minus d_m of comp m
        row_m[:, m] = -(grad[:, l] + ym * hess[:, l, m])
        row_l[:, l] = grad[:, l] + ym * hess[:, m, l]
        jac[:, l, :] += wl * row_l
        jac[:, m, :] += wl * row_m
    return v, jac


def _as_points(x, d: int | None = None) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if d is not None and pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {d}")
    return pts, single


def _shape(v, jac, single):
    return (v[0], jac[0]) if single else (v, jac)


def b_field(x, xi) -> tuple[np.ndarray, np.ndarray]:
    """Divergence-free profile equal to the unit vector ``xi`` on [-1, 1]^d."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise ValueError("direction must be a vector of dimension >= 2")
    if abs(np.linalg.norm(xi) - 1.0) > 1e-10:
        raise ValueError(f"direction must be a unit vector, |xi| = {np.linalg.norm(xi)}")
    pts, single = _as_points(x, xi.size)
    return _shape(*_profile(pts, xi), single)


@dataclass(frozen=True)
class TranslationSpec:
    A0: tuple[float, ...]
    A1: tuple[float, ...]
    lam: float

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"cube side must be positive, got {self.lam}")
        if len(self.A0) != len(self.A1):
            raise ValueError("endpoints have different dimensions")
        object.__setattr__(self, "A0", tuple(map(float, self.A0)))
        object.__setattr__(self, "A1", tuple(map(float, self.A1)))

    def position(self, t: float) -> np.ndarray:
        z = zeta(t)
        return np.asarray(self.A0) * (1.0 - z) + np.asarray(self.A1) * z


def translation_velocity(t: float, x, spec: TranslationSpec):
    """Velocity carrying the cube Q(A0, lam) rigidly onto Q(A1, lam) during t in [1/3, 2/3]."""
    pts, single = _as_points(x, len(spec.A0))
    n, d = pts.shape
    delta = np.asarray(spec.A1) - np.asarray(spec.A0)
    speed = zeta(t, 1)
    if speed == 0.0 or not np.any(delta):
        return _shape(np.zeros((n, d)), np.zeros((n, d, d)), single)
    width = PROFILE_SCALE * spec.lam
    v, jac = _profile((pts - spec.position(t)) / width, delta)
    return _shape(speed * v, (speed / width) * jac, single)


def translation_density(t: float, x, spec: TranslationSpec):
    pts, single = _as_points(x, len(spec.A0))
    inside = np.all(np.abs(pts - spec.position(t)) <= spec.lam / 2, axis=1).astype(float)
    return float(inside[0]) if single else inside


@dataclass(frozen=True)
class BlockParams:
    """Spreading block: cubes of side s / 2^eta travel from a * c_k to c_k. Needs 0 < 2s < a < 1.

    ``log2_s`` (exact, optional) lets cube ensembles report exact masses.
    """

    eta: int
    a: float
    s: float
    log2_s: Fraction | None = None

    def __post_init__(self) -> None:
        if self.eta < 1:
            raise ValueError(f"eta must be a positive integer, got {self.eta}")
        if not 0.0 < 2.0 * self.s < self.a < 1.0:
            raise ValueError(f"block parameters need 0 < 2s < a < 1, got a={self.a}, s={self.s}")

    @classmethod
    def dyadic(cls, eta: int, log2_a, log2_s) -> "BlockParams":
        log2_a, log2_s = as_fraction(log2_a), as_fraction(log2_s)
        return cls(eta, pow2(log2_a), pow2(log2_s), log2_s)

    @property
    def side(self) -> float:
        return self.s / 2**self.eta

    @property
    def log2_side(self) -> Fraction:
        if self.log2_s is not None:
            return self.log2_s - self.eta
        return Fraction(np.log2(self.s)) - self.eta

    def spread(self, t: float) -> float:
        """Factor m(t) with cube k centered at m(t) c_k."""
        z = zeta(t)
        return (1.0 - z) * self.a + z


def block_velocity(t: float, x, p: BlockParams, d: int | None = None):
    """Sum of the 2^(eta d) translation fields; only the summand owning x's cell is evaluated."""
    pts, single = _as_points(x, d)
    n, dim = pts.shape
    speed = zeta(t, 1)
    if speed == 0.0:
        return _shape(np.zeros((n, dim)), np.zeros((n, dim, dim)), single)
    m = p.spread(t)
    # supports sit strictly inside the cells of the grid scaled by m
    c = cell_centers(p.eta, pts / m)
    width = PROFILE_SCALE * p.side
    v, jac = _profile((pts - m * c) / width, (1.0 - p.a) * c)
    return _shape(speed * v, (speed / width) * jac, single)


def block_density(t: float, x, p: BlockParams, d: int | None = None):
    pts, single = _as_points(x, d)
    m = p.spread(t)
    c = cell_centers(p.eta, pts / m)
    inside = np.all(np.abs(pts - m * c) <= p.side / 2, axis=1).astype(float)
    return float(inside[0]) if single else inside


def block_centers(t: float, p: BlockParams, d: int) -> np.ndarray:
    return p.spread(t) * all_centers(p.eta, d)


def block_cubes(t: float, p: BlockParams, d: int) -> CubeEnsemble:
    return CubeEnsemble.from_cubes(block_centers(t, p, d), p.log2_side, Fraction(0), side=p.side, moving=True)
