"""End-to-end acceptance checks. Each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from numpy.polynomial import hermite

from luttrap import couplings as cp
from luttrap.cli import main
from luttrap.constants import CR53, LI6, MU_B, polar_molecule
from luttrap.edoracle import oracle_report
from luttrap.observables import density, duality_check, free_density, friedel_metrics
from luttrap.occupations import (
    first_order_coefficient,
    occ_im1,
    occupation_matrix,
    particle_hole_violation,
    sum_rule,
)
from luttrap.trapmodel import InteractionModel, derive_trap

N = 10
TRAP = derive_trap(N)
PANEL = [("IM2", a) for a in (1.0, -1.0)] + [("IM1", a) for a in (0.5, -0.5, 1.0, -1.0)]


def model_of(kind, a):
    if kind == "IM2":
        return InteractionModel.im2_from_alpha(a, 0.3, 0.4)
    return InteractionModel.im1_from_alpha(a)


def report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


@pytest.fixture(scope="module")
def panel_matrices():
    out = {}
    for kind, a in PANEL:
        t0 = time.perf_counter()
        occ = occupation_matrix(TRAP, model_of(kind, a))
        out[kind, a] = (occ, time.perf_counter() - t0)
    return out


def test_sum_rule(panel_matrices):
    worst, slowest = 0.0, 0.0
    for occ, dt in panel_matrices.values():
        worst = max(worst, abs(sum_rule(occ).residual))
        slowest = max(slowest, dt)
    ok = worst <= 1e-6 and slowest < 10
    assert report("sum rule", ok, f"max residual {worst:.2e}, slowest model {slowest:.2f} s")


def test_particle_hole(panel_matrices):
    worst = max(particle_hole_violation(occ) for occ, _ in panel_matrices.values())
    assert report("particle-hole", worst <= 1e-7, f"max violation {worst:.2e}")


def _textbook_density(n_max, v):
    total = np.zeros_like(v)
    for n in range(n_max):
        c = np.zeros(n + 1)
        c[n] = 1.0
        norm = 1.0 / math.sqrt(2.0 ** n * math.factorial(n) * math.sqrt(math.pi))
        total += (norm * hermite.hermval(v, c) * np.exp(-v ** 2 / 2)) ** 2
    return total


def test_free_gas_limit():
    grid = np.linspace(-12, 12, 4001)
    occ = occupation_matrix(TRAP, InteractionModel.free())
    prof = density(TRAP, occ, grid)
    ref = _textbook_density(N, grid)
    pointwise = float(np.max(np.abs(prof.values - ref)))
    mismatch = float(np.max(np.abs(free_density(N, grid) - ref)))
    integral = abs(prof.integral - N)
    ok = pointwise <= 1e-10 and mismatch <= 1e-10 and integral <= 1e-8
    assert report("free gas", ok, f"pointwise {pointwise:.1e}, integral error {integral:.1e}")


def test_friedel_figure():
    t0 = time.perf_counter()
    grid = np.linspace(-8, 8, 4001)
    free = free_density(N, grid)
    outside = np.abs(grid) > math.sqrt(2 * N - 1)
    ratios, gains = {}, {}
    for a in (1.0, -1.0):
        occ = occupation_matrix(TRAP, model_of("IM2", a), M_max=20)
        prof = density(TRAP, occ, grid)
        ratios[a] = friedel_metrics(prof, TRAP).ratio_to_free
        gains[a] = np.trapezoid(prof.values[outside] - free[outside], grid[outside])
    dt = time.perf_counter() - t0
    ok = ratios[1.0] > 1.5 and ratios[-1.0] < 0.3 and gains[1.0] > 0 and gains[-1.0] > 0 and dt < 60
    detail = (f"ratios {ratios[1.0]:.3f} / {ratios[-1.0]:.3f}, "
              f"outside excess {gains[1.0]:.3e} / {gains[-1.0]:.3e}, {dt:.1f} s")
    assert report("Friedel figure", ok, detail)


def test_duality():
    devs = {a: duality_check(TRAP, a).max_deviation for a in (0.1, 0.5, 1.0)}
    ok = max(devs.values()) <= 1e-6
    assert report("duality", ok, ", ".join(f"a1={a}: {d:.1e}" for a, d in devs.items()))


@pytest.mark.parametrize("kind", ["im1", "im2"])
def test_closed_forms_vs_general(kind):
    worst = 0.0
    for a in (1.0, -1.0, 0.5, -0.5):
        model = model_of(kind.upper(), a)
        fast = occupation_matrix(TRAP, model, method=kind)
        slow = occupation_matrix(TRAP, model, method="general")
        worst = max(worst, max(abs(fast.entries[k] - slow.entries[k]) for k in fast.entries))
    assert report(f"{kind} vs general", worst <= 1e-6, f"max difference {worst:.1e}")


def test_first_order_slope():
    eps = 1e-5
    plus, minus = InteractionModel.im1_from_alpha(eps), InteractionModel.im1_from_alpha(-eps)
    worst = 0.0
    for M in range(1, 2 * N):
        fd = (occ_im1(TRAP, plus, M, 1, tol=1e-13) - occ_im1(TRAP, minus, M, 1, tol=1e-13)) / (2 * eps)
        # d alpha_1 / d V_b(1) = 1/2 at zero coupling; zero entries use the unit scale
        exact = 2 * first_order_coefficient(N, M, 1)
        worst = max(worst, abs(fd - exact) / max(abs(exact), 1.0))
    assert report("first-order slope", worst <= 1e-4, f"max relative deviation {worst:.1e}")


def test_exact_diagonalization():
    t0 = time.perf_counter()
    rep = oracle_report(6, InteractionModel.im1_from_alpha(0.3), sizes=((4, 8), (6, 10)), m_cut=1)
    dt = time.perf_counter() - t0
    devs = [r.max_diag for r in rep.runs]
    levels = [r.hi - r.lo + 1 for r in rep.runs]
    ok = rep.monotone and devs[-1] < 0.02 and min(levels) >= 16 and dt < 300
    assert report("exact diagonalization", ok, f"levels {levels}, max_diag {devs}, {dt:.1f} s")


def test_prefactors():
    checks = {}
    t1, t2 = derive_trap(10_000), derive_trap(20_000)
    d1 = cp.estimate_v1(cp.dipole_potential(MU_B, t1), t1).prefactor
    d2 = cp.estimate_v1(cp.dipole_potential(MU_B, t2), t2).prefactor
    checks["dipole magnitude"] = (1 / 3 <= d1 / -3e-3 <= 3, f"{d1:.3e}")
    checks["dipole scaling"] = (abs(d2 / d1 - 2) <= 1e-10 * 2, f"{d2 / d1:.12f}")

    A = cp.a_from_c6(LI6.c6_au)
    w1 = cp.estimate_v1(cp.vdw_potential(A, t1), t1).prefactor
    w2 = cp.estimate_v1(cp.vdw_potential(A, t2), t2).prefactor
    checks["vdw magnitude"] = (1 / 3 <= w1 / -6e-7 <= 3, f"{w1:.3e}")
    checks["vdw scaling"] = (abs(w2 / w1 / 2 ** 2.5 - 1) <= 1e-10, f"{w2 / w1:.12f}")

    cr = cp.species_enhancement(LI6, CR53)
    checks["Cr/Li factor"] = (abs(cr / 9.4e2 - 1) <= 0.2, f"{cr:.1f}")
    pol = cp.species_enhancement(LI6, polar_molecule(LI6.mass))
    checks["polar factor"] = (abs(pol / 1e5 - 1) <= 0.2, f"{pol:.3e}")

    for name, (ok, detail) in checks.items():
        report(f"prefactor {name}", ok, detail)
    failed = [name for name, (ok, _) in checks.items() if not ok]
    assert not failed, f"failed sub-checks: {failed}"


def test_matrix_element_oracle():
    pot = cp.gaussian_potential(1.0, 0.7)
    worst, forbidden = 0.0, 0.0
    for m in range(7):
        for p in range(7):
            for q in range(7):
                for n in range(7):
                    val = cp.matrix_element_exact(pot, m, p, q, n).value
                    if (m + n + p + q) % 2:
                        forbidden = max(forbidden, abs(val))
                    elif m <= q and p <= n:
                        ref = cp.matrix_element_direct(pot, m, p, q, n)
                        # relative error, with an absolute floor for vanishing elements
                        worst = max(worst, abs(val - ref) / max(abs(ref), 1e-12))
    trap = derive_trap(10)
    vdw = cp.vdw_potential(cp.a_from_c6(LI6.c6_au), trap)
    fourier = max(abs(cp.numeric_fourier(vdw.real_space, kd / vdw.d, vdw.d) / vdw.fourier(kd / vdw.d) - 1)
                  for kd in (0.1, 0.5, 1.0, 2.0, 4.0))
    ok = worst <= 1e-6 and forbidden == 0.0 and fourier <= 1e-8
    assert report("matrix elements", ok,
                  f"max relative {worst:.1e}, forbidden max {forbidden}, Fourier {fourier:.1e}")


def test_cli_determinism(tmp_path):
    args = ["density", "--set", 'model={"kind":"IM2","alpha0":1.0,"r_gamma":0.3,"r_alpha":0.4}',
            "--set", "figure.enabled=true", "--set", "trap.N=10"]
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [main(args + ["--out", str(p)]) for p in paths]
    same = paths[0].read_bytes() == paths[1].read_bytes()
    assert report("CLI determinism", codes == [0, 0] and same, f"exit codes {codes}, identical {same}")
