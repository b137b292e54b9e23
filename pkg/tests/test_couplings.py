import math

import numpy as np
import pytest

from luttrap import couplings as cp
from luttrap.constants import ALPHA_S, CR53, LI6, MU_B, polar_molecule
from luttrap.trapmodel import derive_trap

GAUSS = cp.gaussian_potential(1.0, 0.7)


@pytest.fixture(scope="module")
def dipole100():
    return cp.dipole_potential(MU_B, derive_trap(100))


def test_parity_forbidden_is_exact_zero():
    e = cp.matrix_element_exact(GAUSS, 0, 0, 1, 2)
    assert e.value == 0.0


def test_ground_element_matches_real_space():
    e = cp.matrix_element_exact(GAUSS, 0, 0, 0, 0)
    assert e.value == pytest.approx(cp.matrix_element_direct(GAUSS, 0, 0, 0, 0), rel=1e-10)


@pytest.mark.parametrize("idx", [(1, 2, 3, 0), (2, 4, 0, 2), (5, 1, 3, 3), (6, 6, 2, 4), (0, 5, 4, 3)])
def test_real_space_oracle(idx):
    exact = cp.matrix_element_exact(GAUSS, *idx).value
    assert exact == pytest.approx(cp.matrix_element_direct(GAUSS, *idx), rel=1e-8, abs=1e-13)


def test_index_symmetries():
    a = cp.matrix_element_exact(GAUSS, 1, 2, 5, 4).value
    assert cp.matrix_element_exact(GAUSS, 5, 2, 1, 4).value == a
    assert cp.matrix_element_exact(GAUSS, 1, 4, 5, 2).value == a


def test_contact_shift_invariance():
    shifted = GAUSS.shifted(3.7)
    for idx in [(0, 0, 0, 0), (1, 2, 3, 0), (4, 4, 6, 6)]:
        assert cp.matrix_element_exact(shifted, *idx).value == pytest.approx(
            cp.matrix_element_exact(GAUSS, *idx).value, rel=1e-12, abs=1e-15
        )


def test_custom_potential_subtracts_infinity():
    pot = cp.custom_potential(lambda k: 2.0 + np.exp(-np.asarray(k) ** 2))
    assert pot.v_infinity == 2.0
    assert pot.v_eff(50.0) == 0.0


def test_dipole_limits():
    trap = derive_trap(100)
    pot = cp.dipole_potential(MU_B, trap)
    assert pot.d == pytest.approx(math.sqrt(1 / 100) / trap.alpha)
    assert pot.strength < 0
    assert pot.fourier(1e-9 / pot.d) == pytest.approx(pot.strength, rel=1e-6)
    assert abs(pot.fourier(200 / pot.d)) < 1e-80
    with pytest.raises(ValueError):
        cp.dipole_potential(MU_B, trap, lam=1.5)


def test_dipole_fourier_numeric():
    trap = derive_trap(10)
    pot = cp.dipole_potential(MU_B, trap)
    for kd in (0.5, 1.0, 2.0):
        k = kd / pot.d
        assert cp.numeric_fourier(pot.real_space, k, pot.d) == pytest.approx(pot.fourier(k), rel=1e-8)


def test_vdw_fourier():
    trap = derive_trap(10)
    A = cp.a_from_c6(1389.0)
    pot = cp.vdw_potential(A, trap)
    assert pot.fourier(0.0) == pytest.approx(-(3 * math.pi / 8) * A / pot.d ** 5, rel=1e-15)
    for kd in (0.5, 1.0, 2.0):
        k = kd / pot.d
        assert cp.numeric_fourier(pot.real_space, k, pot.d) == pytest.approx(pot.fourier(k), rel=1e-8)
    big = pot.fourier(40 / pot.d) / pot.fourier(0.0)
    assert big < 1e-14
    with pytest.raises(ValueError):
        cp.vdw_potential(-1.0, trap)


def test_asymptotic_odd_dr_zero(dipole100):
    assert cp.matrix_element_asymptotic(dipole100, 100, 100, 2, 1).value == 0.0
    assert cp.matrix_element_asymptotic(dipole100, 100, 100, 2, 3).value == 0.0


def test_asymptotic_vs_exact_m100(dipole100):
    exact = cp.matrix_element_exact(dipole100, 100, 100, 102, 102).value
    asym = cp.matrix_element_asymptotic(dipole100, 100, 100, 2, 0).value
    assert asym == pytest.approx(exact, rel=0.15)


def test_asymptotic_q_independence(dipole100):
    vals = [cp.matrix_element_asymptotic(dipole100, 400, 400, Q, 0).value for Q in (1, 2, 3, 4)]
    assert max(vals) - min(vals) < 0.1 * abs(np.mean(vals))


def test_asymptotic_regime_warning(dipole100):
    with pytest.warns(RuntimeWarning):
        cp.matrix_element_asymptotic(dipole100, 10, 10, 2, 0)


def test_bessel_form_runs(dipole100):
    e = cp.matrix_element_asymptotic(dipole100, 100, 110, 2, 0, form="bessel")
    exact = cp.matrix_element_exact(dipole100, 100, 110, 102, 112).value
    assert e.method == "bessel_asymptotic"
    assert e.value == pytest.approx(exact, rel=0.05)


def test_weak_dependence_along_fermi_edge(dipole100):
    vals = [cp.matrix_element_exact(dipole100, m, m, m + 2, m + 2).value for m in (91, 95, 100, 105, 109)]
    assert (max(vals) - min(vals)) / abs(np.mean(vals)) < 0.2


def test_same_sign_for_dr_zero(dipole100):
    vals = [cp.matrix_element_exact(dipole100, m, p, m + Q, p + Q).value
            for m in (95, 100) for p in (95, 100) for Q in (1, 2, 4)]
    assert all(v < 0 for v in vals)


def test_alternating_signs_asymptotic(dipole100):
    vals = [cp.matrix_element_asymptotic(dipole100, 100, 100, 2, dR).value for dR in (0, 2, 4, 6)]
    signs = np.sign(vals)
    assert np.all(signs[1:] == -signs[:-1])


def test_exact_elements_weaken_with_dr(dipole100):
    vals = [abs(cp.matrix_element_exact(dipole100, 100, 100, 102, 102 + dR).value) for dR in (0, 2, 4)]
    assert vals[0] > vals[1] > vals[2]


def test_dipole_estimate_scaling():
    a = cp.estimate_v1(cp.dipole_potential(MU_B, derive_trap(10_000)), derive_trap(10_000))
    b = cp.estimate_v1(cp.dipole_potential(MU_B, derive_trap(20_000)), derive_trap(20_000))
    assert b.prefactor / a.prefactor == pytest.approx(2.0, rel=1e-10)
    assert 0.3 < a.integral < 1.5


def test_vdw_estimate_scaling():
    t1, t2 = derive_trap(10_000), derive_trap(40_000)
    A = cp.a_from_c6(LI6.c6_au)
    a = cp.estimate_v1(cp.vdw_potential(A, t1), t1)
    b = cp.estimate_v1(cp.vdw_potential(A, t2), t2)
    assert b.prefactor / a.prefactor == pytest.approx(4 ** 2.5, rel=1e-10)


def test_dipole_prefactor_closed_form():
    trap = derive_trap(10_000)
    est = cp.estimate_v1(cp.dipole_potential(MU_B, trap), trap)
    from luttrap.constants import HBAR, MU0
    closed = -(MU0 * MU_B ** 2 * LI6.mass * trap.alpha * trap.N) / (math.sqrt(2) * math.pi ** 3 * HBAR ** 2)
    assert est.prefactor == pytest.approx(closed, rel=1e-12)


def test_estimate_rejects_far_pairs():
    trap = derive_trap(100)
    with pytest.raises(ValueError):
        cp.estimate_v1(cp.dipole_potential(MU_B, trap), trap, m=100, p=200)


def test_species_enhancement():
    assert cp.species_enhancement(LI6, LI6) == 1.0
    assert cp.species_enhancement(LI6, CR53) == pytest.approx(36 * (CR53.mass / LI6.mass) ** 1.5)
    pol = polar_molecule(LI6.mass)
    assert cp.species_enhancement(LI6, pol) == pytest.approx((0.8 / ALPHA_S) ** 2, rel=1e-9)


def test_panel_csv():
    els = cp.element_panel(GAUSS, [(0, 0, 0, 0), (0, 0, 1, 2)])
    text = cp.panel_to_csv(els)
    lines = text.splitlines()
    assert lines[0] == "m,p,q,n,value,method"
    assert lines[2] == "0,0,1,2,0.0,exact"
