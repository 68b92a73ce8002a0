"""Property suites runnable from the CLI: each returns (name, ok, detail) rows."""

import math

import numpy as np

from .errors import ConfigurationError
from .kernels import PhysicsParams, moments
from .planner import CostModelInput, comm_time_2d, factor_pairs, optimal_grid
from .sim import SimConfig, run
from .velocity_set import build_velocity_set, gaussian_moment


def suite_moments():
    rows = []
    for name in ("D2Q37", "D2Q9"):
        vs = build_velocity_set(name)
        c = vs.c.astype(float)
        worst_odd = 0.0
        worst_even = 0.0
        max_order = 8 if name == "D2Q37" else 4
        odd_order = 5 if name == "D2Q37" else 3
        for a in range(max_order + 1):
            for b in range(max_order + 1 - a):
                m = float(np.sum(vs.w * c[:, 0] ** a * c[:, 1] ** b))
                if a % 2 or b % 2:
                    if a + b <= odd_order:
                        worst_odd = max(worst_odd, abs(m))
                else:
                    expect = gaussian_moment(a, b, vs.cs2)
                    worst_even = max(worst_even, abs(m - expect))
        ok = worst_odd < 1e-12 and worst_even < 1e-12
        rows.append((f"moments[{name}]", ok,
                     f"odd={worst_odd:.2e} even={worst_even:.2e}"))
        rest = vs.w.copy()
        rho, ux, uy, T = moments(rest[:, None], vs)
        ok2 = (abs(rho[0] - 1) < 1e-14 and abs(ux[0]) < 1e-14
               and abs(T[0] - vs.cs2) < 1e-13)
        rows.append((f"rest-state[{name}]", ok2,
                     f"rho={rho[0]:.16f} T={T[0]:.16f} cs2={vs.cs2:.16f}"))
    return rows


def suite_conservation(Lx=32, Ly=32, steps=100, model="D2Q37"):
    cfg = SimConfig(Lx=Lx, Ly=Ly, model=model, tiling="1d", Np=1,
                    schedule="staged", steps=0, walls=False, periodic_y=True,
                    params=PhysicsParams(tau=0.8),
                    init="random", init_kwargs={"seed": 7})
    r0 = run(cfg)
    vs = build_velocity_set(model)
    c = vs.c.astype(float)

    def totals(f):
        mass = float(np.sum(f))
        px = float(sum(c[l, 0] * np.sum(f[l]) for l in range(vs.Q)))
        py = float(sum(c[l, 1] * np.sum(f[l]) for l in range(vs.Q)))
        return mass, px, py

    m0, px0, py0 = totals(r0.populations)
    cfg_run = SimConfig(Lx=Lx, Ly=Ly, model=model, tiling="1d", Np=1,
                        schedule="staged", steps=steps, walls=False,
                        periodic_y=True, params=PhysicsParams(tau=0.8),
                        init="random", init_kwargs={"seed": 7})
    r1 = run(cfg_run)
    m1, px1, py1 = totals(r1.populations)
    scale = abs(m0)
    dm = abs(m1 - m0) / scale
    dp = max(abs(px1 - px0), abs(py1 - py0)) / scale
    ok = dm < 1e-12 and dp < 1e-12
    return [(f"conservation[{model} {Lx}x{Ly} {steps} steps]", ok,
             f"mass drift={dm:.2e} momentum drift={dp:.2e}")]


def suite_rank_invariance(Lx=32, Ly=32, steps=20, model="D2Q37"):
    params = PhysicsParams(tau=0.8, gy=-1e-4, Twall_top=0.6, Twall_bot=0.75)
    variants = [("Np1 staged", "1d", 1, "staged"),
                ("Np4 1d overlapped", "1d", 4, "overlapped"),
                ("Np4 2x2 overlapped", (2, 2), 4, "overlapped"),
                ("Np4 2x2 staged", (2, 2), 4, "staged")]
    states = {}
    for label, tiling, Np, schedule in variants:
        cfg = SimConfig(Lx=Lx, Ly=Ly, model=model, tiling=tiling, Np=Np,
                        schedule=schedule, steps=steps, walls=True,
                        params=params, init="random", init_kwargs={"seed": 3})
        states[label] = run(cfg).populations
    ref = states["Np1 staged"]
    rows = []
    for label, state in states.items():
        if label == "Np1 staged":
            continue
        ok = np.array_equal(ref, state)
        diff = 0.0 if ok else float(np.max(np.abs(ref - state)))
        rows.append((f"rank-invariance[{label}]", ok, f"max diff={diff:.2e}"))
    return rows


def suite_planner_oracle(max_np=64, tuples=20, seed=0):
    rng = np.random.default_rng(seed)
    worst_int = True
    worst_real = 0.0
    for _ in range(tuples):
        Lx = int(rng.integers(64, 8192))
        Ly = int(rng.integers(64, 8192))
        Bx = float(rng.uniform(1e8, 1e10))
        By = float(rng.uniform(1e8, 1e10))
        S = float(rng.uniform(8, 512))
        inp0 = CostModelInput(Lx, Ly, 1, Bx, By, beta=1e-8, S=S)
        for Np in range(1, max_np + 1):
            inp = CostModelInput(Lx, Ly, Np, Bx, By, beta=1e-8, S=S)
            real, best = optimal_grid(inp)
            brute = min(factor_pairs(Np), key=lambda p: comm_time_2d(inp, *p))
            if comm_time_2d(inp, *best) != comm_time_2d(inp, *brute):
                worst_int = False
            R = math.sqrt(Lx * By / (Ly * Bx))
            exp = (math.sqrt(Np) * R, math.sqrt(Np) / R)
            worst_real = max(worst_real,
                             abs(real[0] - exp[0]) / exp[0],
                             abs(real[1] - exp[1]) / exp[1])
    ok = worst_int and worst_real < 1e-10
    return [(f"planner-oracle[Np<={max_np}]", ok,
             f"integer match={worst_int} real err={worst_real:.2e}")]


def suite_taylor_green(L=64, steps=2000, tau=0.8):
    vs = build_velocity_set("D2Q9")
    nu = vs.cs2 * (tau - 0.5)
    k2 = 2.0 * (2.0 * np.pi / L) ** 2
    expected_rate = 2.0 * nu * k2
    energies = []
    for n in (0, steps):
        cfg_n = SimConfig(Lx=L, Ly=L, model="D2Q9", tiling="1d", Np=1,
                          schedule="staged", steps=n, walls=False,
                          periodic_y=True, params=PhysicsParams(tau=tau),
                          init="taylor-green")
        res = run(cfg_n)
        m = res.macro
        energies.append(float(np.sum(m.rho * (m.ux ** 2 + m.uy ** 2)) / 2.0))
    rate = -np.log(energies[1] / energies[0]) / steps
    rel = abs(rate - expected_rate) / expected_rate
    ok = rel < 0.02
    return [(f"taylor-green[{L}^2 {steps} steps]", ok,
             f"rate={rate:.3e} expected={expected_rate:.3e} rel err={rel:.2%}")]


SUITES = {
    "moments": suite_moments,
    "conservation": suite_conservation,
    "rank-invariance": suite_rank_invariance,
    "planner-oracle": suite_planner_oracle,
    "taylor-green": suite_taylor_green,
}


def run_suite(name):
    try:
        suite = SUITES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return suite()
