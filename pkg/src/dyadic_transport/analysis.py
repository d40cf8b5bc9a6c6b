"""Norms, weak-form residuals, contraction constants and parameter selection."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from .ensemble import CubeEnsemble
from .geometry import Cube

EPS = np.finfo(float).eps
UNIT = Cube((0.0, 0.0), 1.0)

# ---------------------------------------------------------------------------
# norms


def mass(ens: CubeEnsemble):
    return ens.mass()


def lr_norm_exact(ens: CubeEnsemble, r: float) -> float:
    return ens.lr_norm(r)


def grid_points(resolution: int, domain: Cube | None = None, d: int | None = None) -> tuple[np.ndarray, float]:
    """Cell midpoints of a uniform grid over ``domain`` and the cell volume."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if domain is None:
        domain = Cube((0.0,) * (d or 2), 1.0)
    h = domain.side / resolution
    axis = (np.arange(resolution) + 0.5) * h - domain.side / 2
    mesh = np.meshgrid(*[axis + c for c in domain.center], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts, h**domain.d


def _chunks(pts: np.ndarray, size: int = 1 << 18):
    for start in range(0, len(pts), size):
        yield pts[start : start + size]


def lr_norm_grid(field: Callable, r: float, resolution: int, domain: Cube | None = None, d: int = 2) -> float:
    """Midpoint-rule L^r norm of a scalar field given as points -> values."""
    pts, vol = grid_points(resolution, domain, d)
    if r == math.inf:
        return max(float(np.max(np.abs(field(c)))) for c in _chunks(pts))
    total = math.fsum(float(np.sum(np.abs(field(c)) ** r)) for c in _chunks(pts))
    return (total * vol) ** (1.0 / r)


def w1p_seminorm_grid(field: Callable, p: float, resolution: int, domain: Cube | None = None, d: int = 2) -> float:
    """Midpoint-rule L^p norm of the Frobenius magnitude of the Jacobian.

    ``field`` maps points to (values, jacobians).
    """
    pts, vol = grid_points(resolution, domain, d)
    parts = []
    for c in _chunks(pts):
        _, jac = field(c)
        mag = np.sqrt(np.sum(jac.reshape(len(c), -1) ** 2, axis=1))
        parts.append(float(np.sum(mag**p)))
    return (math.fsum(parts) * vol) ** (1.0 / p)


def holder_estimate(f: Callable, alpha: float, samples: int, d: int = 2, seed: int = 0, levels: int = 20) -> float:
    """Lower estimate of the C^alpha seminorm from difference quotients at dyadic scales.

    Sample j draws x in the unit cube, a direction and a scale 2^-l; the j-th
    sample does not depend on the total count, so the estimate is monotone in it.
    """
    rng = np.random.default_rng(seed)
    raw = rng.uniform(size=(samples, 2 * d + 1))
    x = raw[:, :d] - 0.5
    direction = raw[:, d : 2 * d] - 0.5
    norms = np.linalg.norm(direction, axis=1)
    direction = direction / np.where(norms > 0, norms, 1.0)[:, None]
    step = 2.0 ** -np.floor(raw[:, 2 * d] * levels)
    y = x + step[:, None] * direction
    fx = np.asarray(f(x), dtype=float).reshape(samples, -1)
    fy = np.asarray(f(y), dtype=float).reshape(samples, -1)
    dist = np.linalg.norm(y - x, axis=1)
    quotient = np.linalg.norm(fx - fy, axis=1) / dist**alpha
    return float(np.max(quotient, initial=0.0))


# ---------------------------------------------------------------------------
# test functions and exact integration against cube ensembles


@dataclass(frozen=True)
class TestFunction:
    name: str
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]


def _bump(x, width=0.35):
    g = np.exp(-np.sum(x * x, axis=1) / (2 * width**2))
    return g, -x / width**2 * g[:, None]


def _times_bump(name, poly, dpoly):
    def value(x):
        return poly(x) * _bump(x)[0]

    def grad(x):
        b, db = _bump(x)
        return dpoly(x) * b[:, None] + poly(x)[:, None] * db

    return TestFunction(name, value, grad)


def test_dictionary(d: int = 2) -> list[TestFunction]:
    """Ten smooth test functions: polynomials and trigonometric factors times a Gaussian bump."""

    def e(l):
        out = np.zeros(d)
        out[l % d] = 1.0
        return out

    a, b = 0, 1 % d
    tau = 2 * np.pi

    def lin(l):
        return (lambda x: x[:, l]), (lambda x: np.broadcast_to(e(l), x.shape).copy())

    specs = [
        ("bump", lambda x: np.ones(len(x)), lambda x: np.zeros_like(x)),
        ("x1", *lin(a)),
        ("x2", *lin(b)),
        ("x1*x2", lambda x: x[:, a] * x[:, b], lambda x: x[:, b][:, None] * e(a) + x[:, a][:, None] * e(b)),
        ("x1^2-x2^2", lambda x: x[:, a] ** 2 - x[:, b] ** 2, lambda x: 2 * x[:, a][:, None] * e(a) - 2 * x[:, b][:, None] * e(b)),
        ("x1^3", lambda x: x[:, a] ** 3, lambda x: 3 * x[:, a][:, None] ** 2 * e(a)),
        ("sin(2pi x1)", lambda x: np.sin(tau * x[:, a]), lambda x: tau * np.cos(tau * x[:, a])[:, None] * e(a)),
        ("cos(2pi x2)", lambda x: np.cos(tau * x[:, b]), lambda x: -tau * np.sin(tau * x[:, b])[:, None] * e(b)),
        (
            "sin(4pi x1)cos(2pi x2)",
            lambda x: np.sin(2 * tau * x[:, a]) * np.cos(tau * x[:, b]),
            lambda x: (2 * tau * np.cos(2 * tau * x[:, a]) * np.cos(tau * x[:, b]))[:, None] * e(a)
            - (tau * np.sin(2 * tau * x[:, a]) * np.sin(tau * x[:, b]))[:, None] * e(b),
        ),
        (
            "cos(2pi(x1+x2))",
            lambda x: np.cos(tau * (x[:, a] + x[:, b])),
            lambda x: -tau * np.sin(tau * (x[:, a] + x[:, b]))[:, None] * (e(a) + e(b)),
        ),
    ]
    return [_times_bump(*s) for s in specs]


def localized(fn: TestFunction, center, scale: float) -> TestFunction:
    """x -> fn((x - center) / scale), for probing one small region."""
    center = np.asarray(center, dtype=float)
    return TestFunction(
        f"{fn.name}@{scale:.3g}",
        lambda x: fn.value((x - center) / scale),
        lambda x: fn.grad((x - center) / scale) / scale,
    )


def _quadrature_points(centers, sides, splits, order: int):
    """Tensor Gauss-Legendre nodes on every cube, cube j cut into splits[j]^d sub-cells."""
    d = centers.shape[1]
    nodes, weights = np.polynomial.legendre.leggauss(order)
    all_pts, all_w, owner = [], [], []
    for m in np.unique(splits):
        sel = np.flatnonzero(splits == m)
        sub = (np.arange(m) + 0.5) / m - 0.5  # sub-cell centers in units of the side
        local = (sub[:, None] + nodes[None, :] / (2 * m)).ravel()
        lw = np.tile(weights / (2 * m), m)
        grid = np.stack(np.meshgrid(*([local] * d), indexing="ij"), -1).reshape(-1, d)
        gw = np.prod(np.stack(np.meshgrid(*([lw] * d), indexing="ij"), -1).reshape(-1, d), axis=1)
        pts = centers[sel, None, :] + sides[sel, None, None] * grid[None, :, :]
        w = (sides[sel, None] ** d) * gw[None, :]
        all_pts.append(pts.reshape(-1, d))
        all_w.append(w.ravel())
        owner.append(np.repeat(sel, len(gw)))
    if not all_pts:
        return np.zeros((0, d)), np.zeros(0), np.zeros(0, dtype=int)
    return np.concatenate(all_pts), np.concatenate(all_w), np.concatenate(owner)


@dataclass
class CubeQuadrature:
    """Quadrature nodes over the cubes of an ensemble.

    Moving cubes are cut into sub-cells of side at most 1/resolution. Static
    cubes keep a single cell: their contributions to a time difference cancel
    exactly and the velocity vanishes on them.
    """

    points: np.ndarray
    weights: np.ndarray  # value * quadrature weight
    l1: float

    @classmethod
    def build(cls, ens: CubeEnsemble, resolution: int | None = None, order: int = 2, limit: int = 2_000_000):
        centers, sides, values, moving = ens.flatten_moving(limit)
        splits = np.ones(len(sides), dtype=int)
        if resolution is not None:
            fine = np.maximum(1, np.ceil(sides * resolution - 1e-9)).astype(int)
            splits = np.where(moving, fine, 1)
        pts, w, owner = _quadrature_points(centers, sides, splits, order)
        l1 = float(np.sum(values * sides ** ens.d)) if len(values) else 0.0
        return cls(pts, values[owner] * w, l1)

    def terms(self, f: Callable) -> np.ndarray:
        if len(self.points) == 0:
            return np.zeros(0)
        return self.weights * np.asarray(f(self.points), dtype=float)


def cube_integrals(ens: CubeEnsemble, integrand: Callable, resolution: int | None = None, order: int = 2, limit: int = 2_000_000):
    """Per-node terms of the integral of rho * integrand."""
    return CubeQuadrature.build(ens, resolution, order, limit).terms(integrand)


def integrate(ens: CubeEnsemble, integrand: Callable, resolution: int | None = None, order: int = 2) -> float:
    return math.fsum(cube_integrals(ens, integrand, resolution, order))


# ---------------------------------------------------------------------------
# weak form of the continuity equation

WEAK_SIGN = 1  # d/dt int rho phi = WEAK_SIGN * int rho v . grad phi


@dataclass(frozen=True)
class ResidualParts:
    rate: float  # central difference of int rho phi
    flux: float  # WEAK_SIGN * int rho v . grad phi
    scale: float  # ||rho||_1 * sup|v| * sup|grad phi|
    floor: float  # rounding floor of the normalised residual

    @property
    def value(self) -> float:
        diff = abs(self.rate - self.flux)
        if self.scale == 0.0:
            return 0.0 if diff == 0.0 else math.inf
        return diff / self.scale


def weak_residual_parts(
    density_cubes: Callable[[float], CubeEnsemble],
    velocity: Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]],
    phis: Sequence[TestFunction],
    t: float,
    dt: float,
    resolution: int,
    signature: Callable[[float], Hashable] | None = None,
    sign: int = WEAK_SIGN,
    order: int = 2,
    limit: int = 2_000_000,
) -> list[ResidualParts]:
    """Residuals of d/dt int rho phi = sign * int rho v . grad phi at time t, one per test function.

    The time derivative is a central difference with step dt. ``signature``
    maps a time to its descent path; a stencil that changes path is rejected.
    """
    if signature is not None:
        if len({signature(t - dt), signature(t), signature(t + dt)}) != 1:
            raise ValueError(f"stencil [{t - dt}, {t + dt}] crosses a phase boundary")
    plus = CubeQuadrature.build(density_cubes(t + dt), resolution, order, limit)
    minus = CubeQuadrature.build(density_cubes(t - dt), resolution, order, limit)
    mid = CubeQuadrature.build(density_cubes(t), resolution, order, limit)
    v, _ = velocity(t, mid.points)
    vmax = float(np.max(np.linalg.norm(v, axis=1), initial=0.0))
    out = []
    for phi in phis:
        a, b = plus.terms(phi.value), minus.terms(phi.value)
        rate = math.fsum(np.concatenate([a, -b])) / (2 * dt)
        g = phi.grad(mid.points) if len(mid.points) else np.zeros((0, mid.points.shape[1]))
        terms = mid.weights * np.sum(v * g, axis=1)
        flux = sign * math.fsum(terms)
        gmax = float(np.max(np.linalg.norm(g, axis=1), initial=0.0))
        scale = mid.l1 * vmax * gmax
        rounding = 8 * EPS * ((float(np.sum(np.abs(a))) + float(np.sum(np.abs(b)))) / (2 * dt) + float(np.sum(np.abs(terms))))
        out.append(ResidualParts(rate, flux, scale, rounding / scale if scale > 0 else 0.0))
    return out


def weak_residual(density_cubes, velocity, phi: TestFunction, t, dt, resolution, signature=None, sign: int = WEAK_SIGN) -> float:
    """Normalised weak-form residual for one test function."""
    return weak_residual_parts(density_cubes, velocity, [phi], t, dt, resolution, signature, sign)[0].value


# ---------------------------------------------------------------------------
# divergence


def divergence_check(velocity: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]], samples: np.ndarray) -> float:
    """Max |trace J| of the analytic Jacobian over the sample points."""
    if len(samples) == 0:
        return 0.0
    _, jac = velocity(samples)
    return float(np.max(np.abs(np.trace(jac, axis1=1, axis2=2))))


@dataclass(frozen=True)
class FdDivergence:
    ratio: float  # max |central-difference divergence| / gradient scale
    checked: int
    skipped: int  # points whose length scale is below float resolution


def fd_divergence(velocity: Callable, samples: np.ndarray, rel_step: float = 1e-5, min_step: float = 1e-11) -> FdDivergence:
    """Central-difference divergence measured against the gradient scale of the sampled field.

    The gradient scale is max |J| over the samples and the step is rel_step
    times the length scale max|v| / max|J|. Pointwise |J| is not used as the
    reference: it vanishes to all orders at the edge of every plateau, where
    no finite step resolves it. If the step would fall below ``min_step`` the
    samples are too deep for global coordinates and are skipped.
    """
    n = len(samples)
    if n == 0:
        return FdDivergence(0.0, 0, 0)
    v, jac = velocity(samples)
    gscale = float(np.max(np.sqrt(np.sum(jac.reshape(n, -1) ** 2, axis=1))))
    vscale = float(np.max(np.linalg.norm(v, axis=1)))
    if gscale == 0.0:
        return FdDivergence(0.0, n, 0)
    h = rel_step * vscale / gscale
    if h < min_step:
        return FdDivergence(0.0, 0, n)
    div = np.zeros(n)
    for l in range(samples.shape[1]):
        up, down = samples.copy(), samples.copy()
        up[:, l] += h
        down[:, l] -= h
        span = up[:, l] - down[:, l]  # step actually taken after rounding
        div += (velocity(up)[0][:, l] - velocity(down)[0][:, l]) / span
    return FdDivergence(float(np.max(np.abs(div))) / gscale, n, 0)


def fd_divergence_check(velocity: Callable, samples: np.ndarray, rel_step: float = 1e-5) -> float:
    return fd_divergence(velocity, samples, rel_step).ratio


# ---------------------------------------------------------------------------
# closed-form constants


def nu0_strict(beta: float) -> float:
    return 1.0 + beta - math.log2(2.0**beta - 1.0)


def nu0_loose(beta: float) -> float:
    return 1.0 - math.log2(2.0**beta - 1.0)


def q_upper(d: int, eta: float, nu: float, beta: float) -> float:
    den = eta * d + nu * d + beta - eta
    return math.inf if den <= 0 else (eta * d + nu * d) / den


@dataclass(frozen=True)
class ContractionConstants:
    f_constant: float
    f_sup_factor: float
    g_y_constant: float
    g_z_constant: float
    gamma1: float
    gamma2: float
    gamma3: float

    @property
    def f_contracts(self) -> bool:
        return self.f_constant * self.f_sup_factor < 1

    @property
    def g_contracts(self) -> bool:
        return self.g_y_constant < 1 and self.g_z_constant * self.f_sup_factor < 1


def contraction_constants(d: int, beta: float, nu: float, eta: float, p: float, r: float, q: float) -> ContractionConstants:
    """Constants of the asynchronous construction's maps with the default weights."""
    gamma1 = nu * (1 - d / p)
    gamma2 = nu * d * (1 - 1 / r)
    gamma3 = nu * d * (1 - 1 / q)
    return ContractionConstants(
        f_constant=2.0 ** (gamma1 + eta * d - eta * d / p + beta),
        f_sup_factor=max(2.0 ** (1 - nu) / (2.0**beta - 1), 1.0),
        g_y_constant=2.0 ** (-eta * d / r + gamma2),
        g_z_constant=2.0 ** (gamma3 - eta * (1 + d / q) + beta + eta * d),
        gamma1=gamma1,
        gamma2=gamma2,
        gamma3=gamma3,
    )


def lr_inequalities(d: int, beta: float, nu: float, eta: float, p: float, r: float, q: float) -> dict[str, bool]:
    return {
        "p_range": p < (eta + nu) * d / (eta * d + nu + beta),
        "r_range": r < (eta + nu) / nu,
        "q_range": 1 < q < q_upper(d, eta, nu, beta),
        "nu_above_nu0": nu > nu0_strict(beta),
    }


@dataclass(frozen=True)
class L1ContractionConstants:
    f_w1p: float
    f_holder: float | None
    g_time_integrable: float | None
    g_lipschitz: float | None


def _sup_geometric(first: float, slope: float) -> float:
    """sup over i >= 1 of 2^(first + slope (i - 1))."""
    if slope > 0:
        return math.inf
    return 2.0**first


def l1_contraction_constants(d: int, beta: float, nu: float, p: float, alpha: float | None = None, q: float | None = None, s_time: float | None = None) -> L1ContractionConstants:
    """Largest per-interval Lipschitz constants of the single-scale maps."""
    lg = math.log2(2.0**beta - 1.0)

    # 1 / (tau_i^mid - tau_i) = 2^(1 + beta i - lg)
    def inv_gap(i):
        return 1.0 + beta * i - lg

    f_w1p = _sup_geometric(inv_gap(1) - nu * d / p, beta - nu * d / p)
    f_holder = None
    if alpha is not None:
        vals = []
        for i in range(1, 200):
            e = -(1 + nu) * i + inv_gap(i) + alpha * max(inv_gap(i), (1 + nu) * i)
            vals.append(e)
        f_holder = 2.0 ** max(vals) if vals[-1] <= vals[-2] else math.inf
    g_lip = None
    if q is not None:
        qp = q / (q - 1)
        g_lip = _sup_geometric(inv_gap(1) - (1 + nu) * (1 - d / qp), beta - (1 + nu) * (1 - d / qp))
    g_time = None if s_time is None else 2.0 ** (-1.0 / s_time)
    return L1ContractionConstants(f_w1p, f_holder, g_time, g_lip)


def l1_inequalities(d: int, beta: float, nu: float, p: float, alpha: float | None = None, q: float | None = None) -> dict[str, bool]:
    out = {
        "p_range": p < nu * d / (nu + beta),
        "nu_above_nu0": nu > nu0_loose(beta),
        "nu_at_least_2": nu >= 2,
    }
    if alpha is not None:
        out["alpha_range"] = alpha < (1 - beta) / (1 + nu)
    if q is not None:
        out["q_range"] = q > 1 and nu * d / (1 - beta) < q / (q - 1)
    return out


# ---------------------------------------------------------------------------
# heuristic bounds


def heuristic_density_bound(d: int, eta: float, nu: float, r: float) -> float:
    """2^(eta d) * sum_i x^i with x = 2^(nu d - (eta + nu) d / r)."""
    x = 2.0 ** (nu * d - (eta + nu) * d / r)
    if x >= 1:
        return math.inf
    return 2.0 ** (eta * d) * x / (1 - x)


def heuristic_velocity_bound(d: int, beta: float, eta: float, nu: float, p: float, i: int) -> float:
    return 2.0 ** (i * beta + i * (eta * d + nu) - i * (eta + nu) * d / p)


def heuristic_density_ratio(d: int, eta: float, nu: float, r: float) -> float:
    return 2.0 ** (nu * d - (eta + nu) * d / r)


def heuristic_velocity_ratio(d: int, beta: float, eta: float, nu: float, p: float) -> float:
    return heuristic_velocity_bound(d, beta, eta, nu, p, 1)


# ---------------------------------------------------------------------------
# parameter selection


def sharp_margin(d: int, p: float, r: float) -> float:
    return 1 / p + (d - 1) / (d * r) - 1


@dataclass(frozen=True)
class FeasibilityReport:
    d: int
    p: float
    r: float
    margin: float
    feasible: bool
    verdicts: dict[str, bool] = field(default_factory=dict)
    beta: float | None = None
    p_bar: float | None = None
    r_bar: float | None = None
    eta_tilde: float | None = None
    nu_tilde: float | None = None
    eta: int | None = None
    nu: float | None = None
    q: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    gamma3: float | None = None
    nu0: float | None = None
    constants: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def feasibility(d: int, p: float, r: float, beta: float = 0.5, max_halvings: int = 200) -> FeasibilityReport:
    """Pick (beta, eta, nu, q) for the target exponents (p, r), or report infeasibility.

    (1/p, (d-1)/(d r)) is scaled by a common factor toward the line where the
    sharp margin vanishes, halving the margin until the extra condition
    3 r_bar margin_bar < beta / d holds. Then nu_tilde, eta_tilde solve the two
    threshold equations, eta is rounded up and nu rescaled to keep r_bar.
    """
    if d < 2 or p < 1 or r < 1:
        raise ValueError(f"need d >= 2 and p, r >= 1, got d={d}, p={p}, r={r}")
    margin = sharp_margin(d, p, r)
    if margin <= 0:
        return FeasibilityReport(d, p, r, margin, False, {"sharp_range": False})
    u, w = 1 / p, (d - 1) / (d * r)
    target = margin
    for _ in range(max_halvings):
        target /= 2
        kappa = (1 + target) / (u + w)
        p_bar, r_bar = 1 / (kappa * u), (d - 1) / (d * kappa * w)
        if 3 * r_bar * target < beta / d:
            break
    else:  # pragma: no cover - the margin halves geometrically
        raise RuntimeError("parameter search did not terminate")
    margin_bar = sharp_margin(d, p_bar, r_bar)
    nu_tilde = beta / (r_bar * d * margin_bar)
    eta_tilde = nu_tilde * (r_bar - 1)
    eta = max(1, math.ceil(eta_tilde))
    nu = eta / (r_bar - 1)
    q = (1 + q_upper(d, eta, nu, beta)) / 2
    consts = contraction_constants(d, beta, nu, eta, p, r, q)
    verdicts = {
        "sharp_range": True,
        **lr_inequalities(d, beta, nu, eta, p, r, q),
        "extra_condition": 3 * r_bar * margin_bar < beta / d and p_bar > p and r_bar > r and nu_tilde > 3,
    }
    verdicts["contraction"] = consts.f_contracts and consts.g_contracts
    return FeasibilityReport(
        d, p, r, margin, all(verdicts.values()), verdicts,
        beta=beta, p_bar=p_bar, r_bar=r_bar, eta_tilde=eta_tilde, nu_tilde=nu_tilde,
        eta=eta, nu=nu, q=q, gamma1=consts.gamma1, gamma2=consts.gamma2, gamma3=consts.gamma3,
        nu0=nu0_strict(beta),
        constants={
            "f_constant": consts.f_constant,
            "f_sup_factor": consts.f_sup_factor,
            "g_y_constant": consts.g_y_constant,
            "g_z_constant": consts.g_z_constant,
        },
    )


# ---------------------------------------------------------------------------
# negative-norm estimate


def dual_norm_grid(grad: Callable, qprime: float, resolution: int = 256, d: int = 2, half_width: float = 2.0) -> float:
    pts, vol = grid_points(resolution, Cube((0.0,) * d, 2 * half_width))
    g = np.linalg.norm(grad(pts), axis=1)
    return float((np.sum(g**qprime) * vol) ** (1 / qprime))


def wminus1q_lipschitz_estimate(
    density_cubes: Callable[[float], CubeEnsemble],
    dictionary: Sequence[TestFunction],
    times: Sequence[float],
    q: float,
    d: int = 2,
    resolution: int | None = None,
) -> float:
    """Lower estimate of sup |int (rho(t) - rho(s)) phi| / (|t - s| ||grad phi||_{q'}) over the dictionary."""
    qprime = q / (q - 1)
    norms = [dual_norm_grid(fn.grad, qprime, d=d) for fn in dictionary]
    times = sorted(times)
    quads = [CubeQuadrature.build(density_cubes(t), resolution) for t in times]
    best = 0.0
    for (t0, e0), (t1, e1) in zip(zip(times, quads), zip(times[1:], quads[1:])):
        for fn, nrm in zip(dictionary, norms):
            diff = abs(math.fsum(np.concatenate([e1.terms(fn.value), -e0.terms(fn.value)])))
            best = max(best, diff / (t1 - t0) / nrm)
    return best


@dataclass(frozen=True)
class NormReport:
    t: float
    norm_exact: float
    norm_grid: float
    mass: float
    w1p: float
    depth: int
    resolution: int
