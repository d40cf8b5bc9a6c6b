"""Command-line driver: norm series, density snapshots, feasibility, invariant suites, point evaluation."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Hashable

import numpy as np

from . import analysis
from .blocks import BlockParams, block_cubes, block_density, block_velocity
from .ensemble import CubeEnsemble
from .geometry import Cube
from .l1 import L1Params, l1_chain, l1_density, l1_density_cubes, l1_support_samples, l1_velocity
from .lr import LrParams, lr_chain, lr_density, lr_density_cubes, lr_support_samples, lr_velocity

WORKERS_ENV = "DYADIC_TRANSPORT_WORKERS"
MODES = ("l1", "lr", "block")
SUITES = ("divergence", "mass", "weakform", "scaling", "selfsimilar", "contraction", "bounds")
CSV_COLUMNS = ("t", "norm_exact", "norm_grid", "mass", "w1p", "depth")


# ---------------------------------------------------------------------------
# a velocity/density pair behind one interface


@dataclass(frozen=True)
class Model:
    """A velocity field and the density it transports, as functions of (t, x)."""

    name: str
    d: int
    velocity: Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]]
    density: Callable[[float, np.ndarray], np.ndarray]
    density_cubes: Callable[[float], CubeEnsemble]
    signature: Callable[[float], Hashable]
    support_samples: Callable[[float, int, np.random.Generator], np.ndarray]
    depth: int = 0
    clock_rate: Callable[[float], float] = lambda t: 1.0  # d(innermost local time)/dt


def l1_model(params: L1Params) -> Model:
    return Model(
        "l1",
        params.d,
        lambda t, x: l1_velocity(t, x, params),
        lambda t, x: l1_density(t, x, params),
        lambda t: l1_density_cubes(t, params),
        lambda t: tuple((sp.interval, sp.phase.value) for sp in l1_chain(t, params).levels),
        lambda t, n, rng: l1_support_samples(t, params, n, rng),
        params.depth,
        lambda t: math.prod(sp.scale for sp in l1_chain(t, params).levels),
    )


def lr_model(params: LrParams, i: int = 1) -> Model:
    return Model(
        "lr",
        params.d,
        lambda t, x: lr_velocity(i, t, x, params),
        lambda t, x: lr_density(i, t, x, params),
        lambda t: lr_density_cubes(i, t, params),
        lambda t: tuple((lv.point.interval, lv.point.phase.value, lv.component) for lv in lr_chain(i, t, params).levels),
        lambda t, n, rng: lr_support_samples(i, t, params, n, rng),
        params.depth,
        lambda t: math.prod(lv.point.scale for lv in lr_chain(i, t, params).levels),
    )


def block_model(params: BlockParams, d: int = 2) -> Model:
    def samples(t, n, rng):
        from .geometry import all_centers

        centers = all_centers(params.eta, d)
        k = rng.integers(0, len(centers), n)
        return params.spread(t) * centers[k] + rng.uniform(-1.0, 1.0, (n, d)) * params.side

    return Model(
        "block",
        d,
        lambda t, x: block_velocity(t, x, params, d),
        lambda t, x: block_density(t, x, params, d),
        lambda t: block_cubes(t, params, d),
        lambda t: (),
        samples,
        0,
    )


def reversed_model(model: Model) -> Model:
    """u(t) = -w(1 - t) carrying rho(1 - t)."""

    def velocity(t, x):
        v, j = model.velocity(1.0 - t, x)
        return -v, -j

    return Model(
        model.name + "-reversed",
        model.d,
        velocity,
        lambda t, x: model.density(1.0 - t, x),
        lambda t: model.density_cubes(1.0 - t),
        lambda t: model.signature(1.0 - t),
        lambda t, n, rng: model.support_samples(1.0 - t, n, rng),
        model.depth,
        lambda t: model.clock_rate(1.0 - t),
    )


def default_block_params(eta: int = 2, nu: float = 2.3, i: int = 1) -> BlockParams:
    nu_q = Fraction(repr(nu))
    return BlockParams.dyadic(eta, -nu_q * i, -nu_q * (i + 1))


def build_model(args) -> Model:
    if args.mode == "l1":
        model = l1_model(L1Params(d=args.d, beta=args.beta, nu=args.nu, depth=args.depth, base=args.base, p=args.p, q=args.q))
    elif args.mode == "lr":
        sign = -1 if args.sign == "auto" else 1
        params = LrParams(d=args.d, beta=args.beta, nu=args.nu, eta=args.eta, depth=args.depth, base=args.base, sign=sign, p=args.p, r=args.r, q=args.q)
        model = lr_model(params, args.i)
    else:
        model = block_model(default_block_params(args.eta, args.nu, args.i), args.d)
    return reversed_model(model) if getattr(args, "reverse", False) else model


# ---------------------------------------------------------------------------
# sampling


def sample_times(n: int, model: Model | None = None, offset: float = 1e-6, lo: float = 0.0, hi: float = 1.0) -> list[float]:
    """n midpoint times in (lo, hi), nudged so a stencil of +-offset*spacing stays inside one phase."""
    if n < 1:
        raise ValueError(f"need at least one time, got {n}")
    step = (hi - lo) / n
    delta = offset * step
    out = []
    for j in range(n):
        t = lo + (j + 0.5) * step
        if model is not None:
            for _ in range(64):
                if model.signature(t - delta) == model.signature(t + delta):
                    break
                t += 2 * delta
        out.append(t)
    return out


def stable_times(n: int, model: Model, dt: float, max_cubes: int = 200_000, max_local_step: float = 0.02, tries: int = 200) -> list[float]:
    """One time per stratum ((j + u) / n) where a +-dt stencil is meaningful.

    Accepted times keep the descent path constant on [t - dt, t + dt], move the
    innermost local clock by at most ``max_local_step`` and need at most
    ``max_cubes`` cubes. Offsets u run through a golden-ratio sequence starting
    at 1/2; strata with no acceptable offset are skipped.
    """
    golden = (math.sqrt(5) - 1) / 2
    out = []
    for j in range(n):
        for m in range(tries):
            u = (0.5 + m * golden) % 1.0
            t = (j + u) / n
            if not dt < t < 1 - dt:
                continue
            sig = model.signature(t)
            if sig != model.signature(t - dt) or sig != model.signature(t + dt):
                continue
            if dt * model.clock_rate(t) > max_local_step:
                continue
            if model.density_cubes(t).count() > max_cubes:
                continue
            out.append(t)
            break
    return out


# ---------------------------------------------------------------------------
# norm series


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    norm_exact: float
    norm_grid: float
    mass: float
    w1p: float
    depth: int


def norm_record(model: Model, t: float, r: float, p: float, grid: int) -> TimeSeriesRecord:
    ens = model.density_cubes(t)
    exact = ens.lr_norm(r)
    gridded = analysis.lr_norm_grid(ens.evaluate, r, grid, d=model.d)
    w1p = analysis.w1p_seminorm_grid(lambda x: model.velocity(t, x), p, grid, d=model.d)
    return TimeSeriesRecord(t, exact, gridded, float(ens.mass()), w1p, model.depth)


def _record_task(job):
    args, t = job
    return norm_record(build_model(args), t, args.r, args.p, args.grid)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def norm_series(args) -> list[TimeSeriesRecord]:
    model = build_model(args)
    times = sample_times(args.times)  # norms need no stencil, so no nudging
    jobs = [(args, t) for t in times]
    n = worker_count()
    if n == 1:
        return [_record_task(j) for j in jobs]
    with ProcessPoolExecutor(n) as pool:
        return list(pool.map(_record_task, jobs))  # map keeps the input order


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        w.writerow([repr(getattr(rec, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# snapshots


def raster(model: Model, t: float, grid: int) -> np.ndarray:
    """Density on grid x grid cell midpoints, row 0 at the top (largest x2)."""
    if model.d != 2:
        raise ValueError("snapshots need d = 2")
    pts, _ = analysis.grid_points(grid, d=2)
    values = model.density_cubes(t).evaluate(pts).reshape(grid, grid)  # [i1, i2]
    return values.T[::-1]


def pgm_bytes(values: np.ndarray) -> bytes:
    top = float(np.max(values))
    if top > 0:
        scaled = np.log2(values + 1.0) / math.log2(top + 1.0)
    else:
        scaled = np.zeros_like(values)
    pix = np.clip(np.round(255 * scaled), 0, 255).astype(np.uint8)
    h, w = pix.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


# ---------------------------------------------------------------------------
# verification suites


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.tolerance - self.value


def _le(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol))


def suite_divergence(model: Model, args) -> list[Check]:
    rng = np.random.default_rng(args.seed)
    worst, worst_fd = 0.0, 0.0
    for t in rng.uniform(0, 1, args.times):
        pts = model.support_samples(float(t), 50, rng)
        worst = max(worst, analysis.divergence_check(lambda x: model.velocity(float(t), x), pts))
        worst_fd = max(worst_fd, analysis.fd_divergence_check(lambda x: model.velocity(float(t), x), pts[:10]))
    return [_le("max |trace J|", worst, 1e-10), _le("max |fd div| / |J|", worst_fd, 1e-4)]


def suite_mass(model: Model, args) -> list[Check]:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for t in rng.uniform(0, 1, args.times):
        m = model.density_cubes(float(t)).mass()
        worst = max(worst, abs(float(m - 1)) if isinstance(m, Fraction) else abs(m - 1.0))
    return [_le("max |mass - 1|", worst, 0.0 if args.base == "freeze" else 1.0)]


def suite_weakform(model: Model, args) -> list[Check]:
    tests = analysis.test_dictionary(model.d)
    worst = 0.0
    for t in stable_times(args.times, model, 1e-4):
        parts = analysis.weak_residual_parts(model.density_cubes, model.velocity, tests, t, 1e-4, args.grid, model.signature)
        worst = max([worst] + [p.value for p in parts])
    return [_le("max normalised weak residual", worst, 0.05)]


def suite_scaling(model: Model, args) -> list[Check]:
    p = args.p or 1.2
    # one cube per cell with a wide profile, so the gradient annulus is resolved on the grid
    bp = BlockParams.dyadic(1, -1, Fraction(-5, 2))

    def field(m):
        f = 2.0**m
        return lambda x: (lambda vj: (vj[0], f * vj[1]))(block_velocity(0.5, f * x, bp, 2))

    # offset domains keep grid midpoints off the symmetry planes
    base = analysis.w1p_seminorm_grid(field(0), p, args.grid, Cube((0.0031, -0.0017), 0.95))
    out = []
    for m in (1, 2, 3):
        got = analysis.w1p_seminorm_grid(field(m), p, args.grid, Cube((0.0031 / 2.0**m, -0.0017 / 2.0**m), 0.95 / 2.0**m))
        out.append(_le(f"relative scaling error m={m}", abs(got / (base * 2.0 ** (m * (1 - 2 / p))) - 1), 0.02))
    return out


def suite_selfsimilar(model: Model, args) -> list[Check]:
    rng = np.random.default_rng(args.seed)
    mismatches = 0
    for t in rng.uniform(0, 1, args.times):
        pts = rng.uniform(-0.55, 0.55, (200, model.d))
        mismatches += int(np.sum(model.density(float(t), pts) != model.density_cubes(float(t)).evaluate(pts)))
    return [_le("pointwise mismatches", mismatches, 0)]


def suite_contraction(model: Model, args) -> list[Check]:
    p = args.p or 1.2
    r = args.r or 1.5
    q = args.q or (1 + analysis.q_upper(args.d, args.eta, args.nu, args.beta)) / 2
    c = analysis.contraction_constants(args.d, args.beta, args.nu, args.eta, p, r, q)
    return [
        _le("F constant", c.f_constant * c.f_sup_factor, np.nextafter(1.0, 0.0)),
        _le("G constant on densities", c.g_y_constant, np.nextafter(1.0, 0.0)),
        _le("G constant on time derivatives", c.g_z_constant * c.f_sup_factor, np.nextafter(1.0, 0.0)),
    ]


def suite_bounds(model: Model, args) -> list[Check]:
    r = args.r or 1.5
    bound = analysis.heuristic_density_bound(args.d, args.eta, args.nu, r)
    worst = max(model.density_cubes(t).lr_norm(r) for t in sample_times(args.times))
    return [_le(f"max exact L^{r} norm vs heuristic bound", worst, bound)]


SUITE_FUNCS = {
    "divergence": suite_divergence,
    "mass": suite_mass,
    "weakform": suite_weakform,
    "scaling": suite_scaling,
    "selfsimilar": suite_selfsimilar,
    "contraction": suite_contraction,
    "bounds": suite_bounds,
}


# ---------------------------------------------------------------------------
# commands


def _write(args, payload: str | bytes) -> None:
    if args.out in (None, "-"):
        if isinstance(payload, bytes):
            sys.stdout.buffer.write(payload)
        else:
            sys.stdout.write(payload)
        return
    mode = "wb" if isinstance(payload, bytes) else "w"
    kwargs = {} if isinstance(payload, bytes) else {"encoding": "utf-8", "newline": ""}
    with open(args.out, mode, **kwargs) as fh:
        fh.write(payload)


def cmd_norm_series(args) -> int:
    records = norm_series(args)
    if args.format == "json":
        _write(args, json.dumps({"config": _config(args), "records": [asdict(r) for r in records]}, indent=2) + "\n")
    elif args.format == "csv":
        _write(args, records_csv(records))
    else:
        raise ValueError("norm-series writes csv or json")
    return 0


def cmd_snapshot(args) -> int:
    model = build_model(args)
    values = raster(model, args.t, args.grid)
    if args.format == "pgm":
        _write(args, pgm_bytes(values))
    elif args.format == "json":
        _write(args, json.dumps({"config": _config(args), "t": args.t, "values": values.tolist()}) + "\n")
    else:
        buf = io.StringIO()
        np.savetxt(buf, values, delimiter=",", fmt="%.17g")
        _write(args, buf.getvalue())
    return 0


def cmd_feasibility(args) -> int:
    p = args.p if args.p is not None else 1.2
    r = args.r if args.r is not None else 1.5
    report = analysis.feasibility(args.d, p, r)
    _write(args, json.dumps(report.to_dict(), indent=2) + "\n")
    return 0 if report.feasible else 2


def cmd_verify(args) -> int:
    if args.suite not in SUITE_FUNCS:
        raise ValueError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    checks = SUITE_FUNCS[args.suite](build_model(args), args)
    ok = all(c.passed for c in checks)
    if args.format == "json":
        _write(args, json.dumps({"suite": args.suite, "passed": ok, "checks": [dict(asdict(c), margin=c.margin) for c in checks]}, indent=2) + "\n")
    else:
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (tolerance {c.tolerance:.6g}, margin {c.margin:.3g})" for c in checks]
        _write(args, "\n".join(lines) + "\n")
    return 0 if ok else 1


def cmd_eval(args) -> int:
    model = build_model(args)
    x = np.array([float(v) for v in args.x.split(",")])
    v, jac = model.velocity(args.t, x)
    doc = {
        "mode": args.mode,
        "t": args.t,
        "x": x.tolist(),
        "velocity": v.tolist(),
        "jacobian": jac.tolist(),
        "density": float(model.density(args.t, x)),
        "phase_trace": [list(level) for level in model.signature(args.t)],
    }
    _write(args, json.dumps(doc, indent=2) + "\n")
    return 0


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out")}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=MODES, default="lr")
    common.add_argument("--d", type=int, default=2)
    common.add_argument("--beta", type=float, default=0.8)
    common.add_argument("--nu", type=float, default=2.3)
    common.add_argument("--eta", type=int, default=2)
    common.add_argument("--i", type=int, default=1, help="component (lr) or block generation (block)")
    common.add_argument("--p", type=float, default=None)
    common.add_argument("--r", type=float, default=None)
    common.add_argument("--q", type=float, default=None)
    common.add_argument("--depth", type=int, default=8)
    common.add_argument("--grid", type=int, default=128)
    common.add_argument("--times", type=int, default=200)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (stdout if omitted)")
    common.add_argument("--base", choices=("freeze", "drop"), default="freeze")
    common.add_argument("--sign", choices=("auto", "paper"), default="auto", help="sign of the time-reversed velocity: auto (-1) transports the density, the other choice uses +1")
    common.add_argument("--reverse", action="store_true", help="use u(t) = -w(1 - t) with rho(1 - t)")

    parser = argparse.ArgumentParser(prog="dyadic-transport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm-series", parents=[common], help="norms of rho(t) at sampled times")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_norm_series)

    p = sub.add_parser("snapshot", parents=[common], help="density raster at one time")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--format", choices=("pgm", "csv", "json"), default="pgm")
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("feasibility", parents=[common], help="parameter selection for (d, p, r)")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", parents=[common], help="velocity, Jacobian, density and phase trace at (t, x)")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", required=True, help="comma-separated coordinates")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "norm-series":
        args.r = 1.5 if args.r is None else args.r
        args.p = 1.2 if args.p is None else args.p
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
