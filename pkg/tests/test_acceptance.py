"""Acceptance criteria 1-10, each at its stated tolerance, one PASS/FAIL line per criterion."""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import ACCEPTANCE
from dyadic_transport import analysis as an
from dyadic_transport import cli
from dyadic_transport.blocks import BlockParams, b_field, block_centers, block_cubes, block_density, block_velocity
from dyadic_transport.geometry import Cube
from dyadic_transport.l1 import L1Params, l1_boundary_density, l1_density, l1_density_cubes
from dyadic_transport.lr import (
    LrParams,
    lr_boundary_density,
    lr_density,
    lr_density_cubes,
    lr_velocity,
    nested_block_time,
)

D, BETA, NU, ETA, R = 2, 0.8, 2.3, 2, 1.5
DEFAULT_BLOCK = cli.default_block_params(ETA, NU, 1)


def report(n: int, ok: bool, detail: str, started: float) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{time.perf_counter() - started:.1f}s]"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def grid(n: int) -> np.ndarray:
    pts, _ = an.grid_points(n, d=2)
    return pts


# ---------------------------------------------------------------------------


def test_criterion_01_divergence_free():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    trace, fd, checked, skipped, total = 0.0, 0.0, 0, 0, 0

    def record(vel, pts):
        nonlocal trace, fd, checked, skipped, total
        total += len(pts)
        trace = max(trace, an.divergence_check(vel, pts))
        r = an.fd_divergence(vel, pts)
        fd, checked, skipped = max(fd, r.ratio), checked + r.checked, skipped + r.skipped

    for _ in range(50):  # b_field, random directions
        xi = rng.normal(size=2)
        xi /= np.linalg.norm(xi)
        record(lambda x: b_field(x, xi), rng.uniform(-1.3, 1.3, (50, 2)))
    block = cli.block_model(DEFAULT_BLOCK)
    for t in rng.uniform(1 / 3, 2 / 3, 125):
        record(lambda x: block.velocity(t, x), block.support_samples(t, 20, rng))
    models = [cli.l1_model(L1Params(depth=8))] + [cli.lr_model(LrParams(depth=8), i) for i in (1, 2, 3)]
    for model in models:
        got = 0
        while got < 2500:
            t = float(rng.uniform(0, 1))
            pts = model.support_samples(t, 20, rng)
            if len(pts):
                record(lambda x: model.velocity(t, x), pts)
                got += len(pts)
    ok = total >= 10_000 and trace <= 1e-10 and fd <= 1e-4 and checked >= total // 2
    report(1, ok, f"max|trace J|={trace:.1e} (tol 1e-10), fd/|J|={fd:.1e} (tol 1e-4) on {checked}/{total} points ({skipped} below float resolution)", t0)


def test_criterion_02_building_block_contract():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    p = DEFAULT_BLOCK
    # plateau
    plateau_err = 0.0
    for _ in range(20):
        xi = rng.normal(size=2)
        xi /= np.linalg.norm(xi)
        v, _ = b_field(rng.uniform(-1, 1, (500, 2)), xi)
        plateau_err = max(plateau_err, float(np.max(np.abs(v - xi))))
    # static outside the middle third
    x = rng.uniform(-0.5, 0.5, (5000, 2))
    still = all(np.all(block_velocity(t, x, p, 2)[0] == 0) for t in np.r_[np.linspace(0, 1 / 3, 7), np.linspace(2 / 3, 1, 7)])
    # support and level-set measures at 2048^2
    n = 2048
    h = 1.0 / n
    pts = grid(n)
    t = 0.5
    v, _ = block_velocity(t, pts, p, 2)
    support = np.count_nonzero(np.any(v != 0, axis=1)) * h**2
    support_bound = 2**2 * p.s**2
    level = np.count_nonzero(block_density(t, pts, p, 2) == 1.0) * h**2
    cells = 2 ** (ETA * 2)
    lam = p.side
    level_tol = cells * ((lam + 2 * h) ** 2 - lam**2)
    # rigid transport of tracked points
    c = block_centers(0.0, p, 2)
    starts = np.repeat(c, 13, axis=0)[:200] + rng.uniform(-0.5, 0.5, (200, 2)) * lam
    owner = np.repeat(np.arange(len(c)), 13)[:200]
    sol = solve_ivp(lambda s, y: block_velocity(s, y.reshape(-1, 2), p, 2)[0].ravel(), (0.0, 1.0), starts.ravel(), method="DOP853", rtol=1e-12, atol=1e-14)
    end = sol.y[:, -1].reshape(-1, 2)
    target = starts + (block_centers(1.0, p, 2) - c)[owner]
    ode_err = float(np.max(np.abs(end - target)))
    ok = plateau_err <= 1e-12 and still and support <= support_bound and abs(level - p.s**2) <= level_tol and ode_err <= 1e-6
    report(
        2,
        ok,
        f"plateau err={plateau_err:.1e}, static outside [1/3,2/3]={still}, support={support:.3e}<= {support_bound:.3e}, "
        f"level set={level:.4e} vs s^d={p.s**2:.4e} (tol {level_tol:.1e}), ODE err={ode_err:.1e}",
        t0,
    )


def test_criterion_03_boundary_conditions():
    t0 = time.perf_counter()
    pts = grid(512)
    ok = True
    for depth in (1, 8):
        params = LrParams(depth=depth)
        for i in (1, 2, 3):
            ok &= np.array_equal(lr_density(i, 0.0, pts, params), lr_boundary_density("in", params, i).evaluate(pts))
            ok &= np.array_equal(lr_density(i, 1.0, pts, params), lr_boundary_density("out", params).evaluate(pts))
        lp = L1Params(depth=depth)
        ok &= np.array_equal(l1_density(0.0, pts, lp), l1_boundary_density("in", lp).evaluate(pts))
        ok &= np.array_equal(l1_density(1.0, pts, lp), l1_boundary_density("out", lp).evaluate(pts))
    report(3, bool(ok), "rho(0)=rho_in and rho(1)=rho_out exactly on 512^2 (lr i<=3 and l1, depth 1 and 8)", t0)


def test_criterion_04_mass_conservation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    times = rng.uniform(0, 1, 50)
    exact = True
    for depth in (4, 8):
        for t in times:
            exact &= l1_density_cubes(t, L1Params(depth=depth)).mass() == Fraction(1)
            exact &= lr_density_cubes(1, t, LrParams(depth=depth)).mass() == Fraction(1)
    monotone = True
    mean = []
    for depth in range(0, 9):
        defs = [1 - l1_density_cubes(t, L1Params(depth=depth, base="drop")).mass() for t in times]
        defs += [1 - lr_density_cubes(1, t, LrParams(depth=depth, base="drop")).mass() for t in times]
        if mean:
            monotone &= all(a <= b for a, b in zip(defs, prev))
        prev = defs
        mean.append(float(sum(defs)) / len(defs))
    monotone &= all(a > b for a, b in zip(mean, mean[1:]))
    report(4, bool(exact and monotone), f"freeze mass == 1 exactly at 50 times (depth 4, 8); drop deficit by depth {[round(m, 4) for m in mean]}", t0)


def _max_norm(model, times, r):
    return max(model.density_cubes(t).lr_norm(r) for t in times)


def test_criterion_05_l1_blow_up():
    t0 = time.perf_counter()
    shallow, deep = L1Params(depth=4), L1Params(depth=8)
    times = cli.sample_times(200)
    m4 = max(l1_density_cubes(t, shallow).lr_norm(R) for t in times)
    masses = [l1_density_cubes(t, deep).mass() for t in times]
    m8 = max(l1_density_cubes(t, deep).lr_norm(R) for t in times)
    ok = m8 >= 2 * m4 and all(m == 1 for m in masses)
    report(5, ok, f"max L^3/2: depth 4 {m4:.3e}, depth 8 {m8:.3e} (ratio {m8 / m4:.1f} >= 2); L^1 == 1 exactly at all 200 times", t0)


def test_criterion_06_lr_bounded():
    t0 = time.perf_counter()
    bound = an.heuristic_density_bound(D, ETA, NU, R)
    assert bound == pytest.approx(13.404264687602907, rel=1e-14)  # geometric-series closed form
    times = cli.sample_times(200)
    m4 = max(lr_density_cubes(1, t, LrParams(depth=4)).lr_norm(R) for t in times)
    m8 = max(lr_density_cubes(1, t, LrParams(depth=8)).lr_norm(R) for t in times)
    ok = m8 <= 13.40 and m4 <= 13.40 and abs(m8 - m4) <= 0.05 * m8
    report(6, ok, f"max L^3/2: depth 4 {m4:.4f}, depth 8 {m8:.4f} (<= 13.40; bound {bound:.4f}; rel diff {abs(m8 - m4) / m8:.1e})", t0)


def _refinement(model, phis, times):
    worst, worst_ratio, nonzero = 0.0, math.inf, 0
    for t in times:
        coarse = an.weak_residual_parts(model.density_cubes, model.velocity, phis, t, 1e-4, 1024, model.signature)
        fine = an.weak_residual_parts(model.density_cubes, model.velocity, phis, t, 5e-5, 2048, model.signature)
        for a, b in zip(coarse, fine):
            worst = max(worst, a.value)
            if b.value <= 10 * b.floor:
                continue  # already at the rounding floor
            nonzero += 1
            worst_ratio = min(worst_ratio, a.value / b.value)
    return worst, worst_ratio, nonzero


def test_criterion_07_weak_form():
    t0 = time.perf_counter()
    phis = an.test_dictionary(2)
    lr = cli.lr_model(LrParams(depth=6), 1)
    pairs = {
        "block": cli.block_model(DEFAULT_BLOCK),
        "l1": cli.l1_model(L1Params(depth=6)),
        "lr": lr,
        "reversed": cli.reversed_model(lr),
    }
    ok, parts = True, []
    for name, model in pairs.items():
        times = cli.stable_times(20, model, 1e-4)
        worst, ratio, nonzero = _refinement(model, phis, times)
        good = len(times) == 20 and worst <= 0.05 and ratio >= 2
        ok &= good
        parts.append(f"{name}: max {worst:.1e}, min halving ratio {ratio:.2f} over {nonzero} nonzero")
    report(7, bool(ok), "; ".join(parts), t0)


def _generation_norms(params, p, r, generations, k=6, s=0.5, resolution=128):
    """Per-generation norms of component 1: moving cubes in L^r and the velocity gradient in L^p."""
    out = []
    for g in generations:
        t = nested_block_time(params, g, k, s)
        centers, sides, values, moving = lr_density_cubes(1, t, params).flatten_moving()
        dens = float(np.sum(values[moving] ** r * sides[moving] ** params.d)) ** (1 / r)
        total = 0.0
        for c, side in zip(centers[moving], sides[moving]):
            # each moving cube's velocity lives in the concentric cube of twice its side
            total += an.w1p_seminorm_grid(lambda x: lr_velocity(1, t, x, params), p, resolution, Cube(c, 2 * side)) ** p
        out.append((dens, total ** (1 / p)))
    return out


def test_criterion_08_scaling_laws():
    t0 = time.perf_counter()
    p = 1.2
    wide = BlockParams.dyadic(1, -1, Fraction(-5, 2))  # resolvable at 1024
    base = an.w1p_seminorm_grid(lambda x: block_velocity(0.5, x, wide, 2), p, 1024)
    scale_err = 0.0
    for m in (1, 2, 3):
        f = 2.0**m
        g = lambda x: (lambda vj: (vj[0], f * vj[1]))(block_velocity(0.5, f * x, wide, 2))
        got = an.w1p_seminorm_grid(g, p, 1024, Cube((0.0031 / f, -0.0017 / f), 0.95 / f))
        scale_err = max(scale_err, abs(got / (base * 2 ** (m * (1 - 2 / p))) - 1))

    params = LrParams(depth=8)
    norms = _generation_norms(params, p, R, (1, 2, 3))
    want_rho = an.heuristic_density_ratio(D, ETA, NU, R)
    want_v = an.heuristic_velocity_ratio(D, BETA, ETA, NU, p)
    rho_dev = [abs(b[0] / a[0] / want_rho - 1) for a, b in zip(norms, norms[1:])]
    v_dev = [abs(b[1] / a[1] / want_v - 1) for a, b in zip(norms, norms[1:])]
    ok = scale_err <= 0.02 and max(rho_dev) <= 0.10 and max(v_dev) <= 0.10
    report(
        8,
        ok,
        f"W1p rescaling err {scale_err:.1e} (tol 2e-2); per-step density ratio dev {['%.1e' % x for x in rho_dev]}, "
        f"velocity ratio dev {['%.3f' % x for x in v_dev]} (tol 0.10)",
        t0,
    )


def test_criterion_09_contraction_feasibility():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    agree = 0
    for _ in range(200):
        d = int(rng.integers(2, 5))
        beta = float(rng.uniform(0.05, 0.95))
        nu = float(rng.uniform(1.1, 6))
        eta = int(rng.integers(1, 6))
        p, r = (float(v) for v in rng.uniform(1, 2.5, 2))
        q = float(rng.uniform(1.001, 2.5))
        c = an.contraction_constants(d, beta, nu, eta, p, r, q)
        ineq = an.lr_inequalities(d, beta, nu, eta, p, r, q)
        agree += (
            (c.f_constant < 1) == ineq["p_range"]
            and (c.g_y_constant < 1) == ineq["r_range"]
            and (c.g_z_constant < 1) == (q < an.q_upper(d, eta, nu, beta))
            and (not ineq["nu_above_nu0"] or c.f_sup_factor == 1.0)
        )
    good = an.feasibility(2, 1.2, 1.5)
    bad = an.feasibility(2, 2, 2)
    ok = agree == 200 and good.feasible and all(good.verdicts.values()) and abs(good.margin - 1 / 6) < 1e-12 and not bad.feasible
    report(9, ok, f"{agree}/200 tuples coherent; feasibility(2,1.2,1.5) margin {good.margin:.6f} all gates {all(good.verdicts.values())}; (2,2,2) feasible={bad.feasible}", t0)


def test_criterion_10_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    mismatches, total = 0, 0
    lp, rp = L1Params(depth=8), LrParams(depth=8)
    for j in range(100):
        t = float(rng.uniform(0, 1))
        x = rng.uniform(-0.55, 0.55, (100, 2))
        if j % 2 == 0:
            got, want = l1_density(t, x, lp), l1_density_cubes(t, lp).evaluate(x)
        else:
            i = 1 + (j // 2) % 3
            got, want = lr_density(i, t, x, rp), lr_density_cubes(i, t, rp).evaluate(x)
        mismatches += int(np.sum(got != want))
        total += len(x)
    # grid vs exact under resolution doubling, against the count-of-midpoints bound
    ens_list = [lr_boundary_density("in", rp, 1), block_cubes(0.5, DEFAULT_BLOCK, 2), l1_density_cubes(0.4, L1Params(depth=2))]
    within = True
    errs = []
    for ens in ens_list:
        exact = ens.power_integral(R)
        c, s, v = ens.flatten()
        row = []
        for n in (128, 256, 512, 1024):
            h = 1 / n
            approx = an.lr_norm_grid(ens.evaluate, R, n) ** R
            bound = float(np.sum(v**R * ((s + h) ** 2 - s**2)))
            within &= abs(approx - exact) <= bound
            row.append(abs(approx - exact) / exact)
        errs.append(row)
    ok = mismatches == 0 and total == 10_000 and within
    report(10, bool(ok), f"{mismatches} mismatches in {total} points; grid L^r errors within first-order bound {within}, rel errors {[['%.1e' % e for e in r] for r in errs]}", t0)
