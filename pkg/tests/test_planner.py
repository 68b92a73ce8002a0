import math

import numpy as np
import pytest

from thermolb import (BandwidthTable, CostModelInput, brent_bound,
                      comm_time_2d, optimal_grid, predict_1d,
                      predict_1d_overlap, predict_2d, predict_2d_overlap,
                      scaling_curve, surface_over_volume)
from thermolb.planner import DEFAULT_S, factor_pairs
from thermolb.errors import ContractViolation, UnsupportedCaseError


def make_input(Lx=3600, Ly=3600, Np=16, Bx=4e9, By=1e9, beta=1e-8, S=None):
    return CostModelInput(Lx, Ly, Np, Bx, By, beta,
                          DEFAULT_S if S is None else S)


# ----------------------------------------------------------------- basics --

def test_default_payload_size():
    assert DEFAULT_S == 208


def test_surface_over_volume_values():
    assert surface_over_volume(16, 1) == 16
    assert surface_over_volume(16, 2) == 8
    assert surface_over_volume(1, 2) == 2
    with pytest.raises(ContractViolation):
        surface_over_volume(4, 3)


def test_factor_pairs():
    assert factor_pairs(12) == [(1, 12), (2, 6), (3, 4), (4, 3), (6, 2), (12, 1)]
    assert factor_pairs(1) == [(1, 1)]


def test_bandwidth_table_interp():
    t = BandwidthTable([1e3, 1e6], [1e8, 1e9])
    assert t.at(1e3) == 1e8
    assert t.at(1e6) == 1e9
    assert t.at(5e5) == pytest.approx(np.interp(5e5, [1e3, 1e6], [1e8, 1e9]))
    # clamped outside the table
    assert t.at(1.0) == 1e8
    assert t.at(1e9) == 1e9
    with pytest.raises(ContractViolation):
        BandwidthTable([], [])
    with pytest.raises(ContractViolation):
        BandwidthTable([1, 2], [3])


def test_input_validation():
    with pytest.raises(ContractViolation):
        make_input(Np=0)
    with pytest.raises(ContractViolation):
        CostModelInput(10, 10, 2, 1e9, 1e9, beta=0.0)


# ---------------------------------------------------------- comm_time_2d ---

def test_comm_time_formula_by_hand():
    inp = make_input(Lx=1000, Ly=2000, Np=8, Bx=2e9, By=1e9, S=208)
    got = comm_time_2d(inp, 2, 4)
    want = 208 * (2000 / (1e9 * 4) + 1000 / (2e9 * 2))
    assert got == pytest.approx(want, rel=1e-15)
    with pytest.raises(ContractViolation):
        comm_time_2d(inp, 3, 3)


def test_comm_time_scales_inversely_with_bandwidth():
    a = comm_time_2d(make_input(Bx=1e9, By=1e9), 4, 4)
    b = comm_time_2d(make_input(Bx=2e9, By=2e9), 4, 4)
    assert a == pytest.approx(2 * b, rel=1e-14)


# ----------------------------------------------------------- optimal_grid --

def test_optimal_grid_square_equal_bandwidth():
    inp = make_input(Bx=1e9, By=1e9, Np=16)
    real, best = optimal_grid(inp)
    assert real[0] == pytest.approx(4.0)
    assert real[1] == pytest.approx(4.0)
    assert best == (4, 4)


def test_real_optimum_formula():
    inp = make_input(Lx=7200, Ly=3600, Np=36, Bx=4e9, By=1e9)
    real, _ = optimal_grid(inp)
    R = math.sqrt(7200 * 1e9 / (3600 * 4e9))
    assert real[0] == pytest.approx(6 * R, rel=1e-12)
    assert real[1] == pytest.approx(6 / R, rel=1e-12)
    assert real[0] * real[1] == pytest.approx(36, rel=1e-12)


def test_real_optimum_is_stationary():
    # perturbing the continuous grid away from the optimum never lowers T_C
    inp = make_input(Bx=4e9, By=1e9, Np=64)
    (rx, ry), _ = optimal_grid(inp)

    def tc(nx):
        ny = inp.Np / nx
        return inp.S * (inp.Ly / (1e9 * ny) + inp.Lx / (4e9 * nx))

    base = tc(rx)
    for eps in (0.9, 0.99, 1.01, 1.1):
        assert tc(rx * eps) >= base - 1e-18


def test_best_integer_grid_is_brute_force_min():
    inp = make_input(Lx=1000, Ly=3000, Np=24, Bx=3e9, By=1e9)
    _, best = optimal_grid(inp)
    times = {p: comm_time_2d(inp, *p) for p in factor_pairs(24)}
    assert times[best] == min(times.values())


# --------------------------------------------------------------- predict ---

def test_predict_1d_by_hand():
    inp = make_input(Lx=100, Ly=200, Np=4, Bx=1e9, By=1e9, beta=1e-8, S=208)
    p = predict_1d(inp)
    T_P = 1e-8 * 20000 / 4
    T_C = T_P * (2 * 208 * 200 / (1e-8 * 1e9)) * 4 / 20000
    assert p.T_P == pytest.approx(T_P)
    assert p.T_C == pytest.approx(T_C, rel=1e-14)
    assert p.T_total == pytest.approx(T_P + T_C, rel=1e-14)
    assert p.grid == (4, 1)
    assert p.scale_violation == pytest.approx(p.T_total / T_P, rel=1e-14)


def test_predict_2d_closed_form_vs_grid_eval():
    # the closed form counts both faces per direction, the per-grid comm time
    # one transfer per boundary, so at the real optimum with uniform
    # bandwidth the closed-form T_C is exactly twice the explicit one
    inp = make_input(Lx=2048, Ly=2048, Np=16, Bx=1e9, By=1e9)
    closed = predict_2d(inp)
    explicit = predict_2d(inp, grid=(4, 4))
    assert closed.T_C == pytest.approx(2 * explicit.T_C, rel=1e-12)
    assert closed.T_P == explicit.T_P
    # by-hand value of the closed form
    want = 4 * 208 * math.sqrt(inp.N / 16) / 1e9
    assert closed.T_C == pytest.approx(want, rel=1e-13)


def test_scale_violation_at_least_one():
    for Np in (1, 2, 8, 64):
        inp = make_input(Np=Np)
        assert predict_1d(inp).scale_violation >= 1.0
        assert predict_2d(inp).scale_violation >= 1.0


def test_infinite_bandwidth_limit():
    inp = make_input(Bx=1e30, By=1e30)
    p = predict_2d(inp, grid=(4, 4))
    assert p.T_C < 1e-20
    assert p.scale_violation == pytest.approx(1.0, abs=1e-12)


def test_2d_beats_1d_at_scale():
    # for large Np the 2-D surface/volume advantage must show up in the model
    inp = make_input(Lx=4096, Ly=4096, Np=256, Bx=1e9, By=1e9)
    assert predict_2d(inp, grid=(16, 16)).T_total < predict_1d(inp).T_total


# ---------------------------------------------------------------- overlap --

def test_overlap_never_slower():
    for Np in (2, 4, 16, 144):
        inp = make_input(Lx=3600, Ly=3600, Np=Np)
        assert predict_1d_overlap(inp).T_total <= predict_1d(inp).T_total * (1 + 1e-12)


def test_overlap_hides_comm_when_bulk_dominates():
    # big tile, fast network: total collapses to the compute time
    inp = make_input(Lx=4000, Ly=4000, Np=4, Bx=1e11, By=1e11, beta=1e-7)
    p = predict_1d_overlap(inp)
    assert p.T_total == pytest.approx(inp.beta * inp.N / inp.Np, rel=1e-9)


def test_overlap_comm_bound_when_network_slow():
    # tiny tile, slow network: border + comm dominates
    inp = make_input(Lx=128, Ly=128, Np=64, Bx=1e6, By=1e6)
    p = predict_1d_overlap(inp)
    comm = p.T_C
    border = inp.beta * inp.N / inp.Np * 6.0 * inp.Ly * inp.Np / inp.N
    assert p.T_total == pytest.approx(comm + border, rel=1e-12)


def test_2d_overlap_square_only():
    with pytest.raises(UnsupportedCaseError):
        predict_2d_overlap(make_input(Lx=100, Ly=200))
    p = predict_2d_overlap(make_input(Lx=3600, Ly=3600, Np=16))
    assert p.grid == (4.0, 4.0)
    assert p.T_total > 0


def test_2d_overlap_by_hand():
    inp = make_input(Lx=1024, Ly=1024, Np=16, Bx=2e9, By=1e9, beta=1e-8, S=208)
    p = predict_2d_overlap(inp)
    root = math.sqrt(16 / 1024 ** 2)
    border = 12 * root
    cy = 2 * 208 / (1e-8 * 1e9) * root
    cx = 2 * 208 / (1e-8 * 2e9) * root
    T = 1e-8 * 1024 ** 2 / 16 * (max(1 - border, cy) + cx + border)
    assert p.T_total == pytest.approx(T, rel=1e-13)


# ------------------------------------------------------------ brent bound --

def test_brent_bound_values():
    assert brent_bound(1.0, 1, 1) == 1.0
    assert brent_bound(2.0, 100, 1) == pytest.approx(2.0 * 100)
    assert brent_bound(2.0, 100, 100) == pytest.approx(2.0 * (1 + 99 / 100))
    with pytest.raises(ContractViolation):
        brent_bound(0.0, 10, 2)


def test_free_communication_matches_brent_shape():
    # with S=0 the model is beta*N/Np; Brent is w*(1+(N-1)/Np); both scale
    # like 1/Np at large N and meet at the w = beta identification up to the
    # additive 1 in the bound
    inp = make_input(S=0.0, Np=32)
    p = predict_1d(inp)
    assert p.T_C == 0.0
    bound = brent_bound(inp.beta, inp.N, inp.Np)
    assert p.T_total <= bound
    assert bound / p.T_total == pytest.approx(1 + (inp.Np - 1) / inp.N,
                                              rel=1e-10)


# ---------------------------------------------------------- scaling curve --

def test_scaling_curve_rows():
    inp = make_input(Lx=512, Ly=512, Np=1)
    rows = scaling_curve(inp, [1, 4, 6])
    by_np = {}
    for row in rows:
        by_np.setdefault(row[0], []).append(row[1])
    # 1d + one 2d per factor pair + 1d_overlap + 2d_overlap (square lattice)
    assert sorted(by_np[1]) == sorted(["1d", "2d", "1d_overlap", "2d_overlap"])
    assert by_np[4].count("2d") == 3
    assert by_np[6].count("2d") == 4
    for row in rows:
        Np, _, nx, ny, T_total, work, violation = row
        assert work == pytest.approx(Np * T_total, rel=1e-14)
        assert violation >= 1.0 or row[1].endswith("overlap")


def test_scaling_curve_nonsquare_skips_2d_overlap():
    rows = scaling_curve(make_input(Lx=256, Ly=512, Np=1), [4])
    assert all(r[1] != "2d_overlap" for r in rows)
    assert any(r[1] == "1d_overlap" for r in rows)
