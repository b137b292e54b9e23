"""Four-fermion matrix elements of realistic pair potentials in the oscillator
basis, effective 1D dipole and van der Waals potentials, and the coupling
estimates that map them onto the single-mode model.

Potentials are described by their Fourier transform V~(k) [J m] with k in
1/m.  A potential may carry the trap's ``alpha`` and ``hbar*omega`` so that
matrix elements come out in units of hbar*omega_l; without a trap both are 1
and everything is in oscillator units.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .constants import A0, HARTREE, MU0
from .occupations import QuadratureError
from .specfun import bessel_j, bessel_k1, laguerre_function

GL_ORDER = 24
_GL = np.polynomial.legendre.leggauss(GL_ORDER)
_GL2 = np.polynomial.legendre.leggauss(2 * GL_ORDER)


@dataclass(frozen=True)
class PotentialSpec:
    """Even, real pair potential given in momentum space.

    ``amplitude`` is the factor pulled out in front of the coupling
    estimate: V0 for the dipole form, -(pi/8) A/d^5 for van der Waals.
    ``strength`` keeps the constant the user supplied (V0 or A).
    """

    kind: str
    fourier: Callable
    v_infinity: float = 0.0
    d: float = 0.0
    strength: float = 0.0
    amplitude: float = 1.0
    lam: float = 1.0
    alpha: float = 1.0
    energy_unit: float = 1.0
    real_space: Callable | None = field(default=None, compare=False)

    def v_eff(self, k):
        """V~(k) - V~(inf): the contact part removed."""
        return self.fourier(np.abs(np.asarray(k, dtype=float))) - self.v_infinity

    def shifted(self, c):
        """Same potential with a constant added to V~ (a contact term)."""
        f = self.fourier
        return PotentialSpec(self.kind, lambda k: f(k) + c, self.v_infinity + c, self.d,
                             self.strength, self.amplitude, self.lam, self.alpha, self.energy_unit)


def custom_potential(fourier, v_infinity=None, real_space=None, alpha=1.0, energy_unit=1.0):
    if v_infinity is None:
        v_infinity = float(fourier(np.array(np.inf)))
    amp = float(fourier(np.array(0.0))) - v_infinity
    return PotentialSpec("custom", fourier, v_infinity, 0.0, amp, amp, 1.0, alpha, energy_unit, real_space)


def gaussian_potential(g=1.0, sigma=1.0, alpha=1.0, energy_unit=1.0):
    """V(z) = g exp(-z^2 / 2 sigma^2); a smooth test potential."""
    pre = g * sigma * math.sqrt(2 * math.pi)
    return PotentialSpec(
        "custom",
        lambda k: pre * np.exp(-0.5 * (np.asarray(k) * sigma) ** 2),
        0.0, sigma, g, pre, 1.0, alpha, energy_unit,
        lambda z: g * np.exp(-0.5 * (np.asarray(z) / sigma) ** 2),
    )


def _lam(trap, lam):
    lam = 1.0 / trap.N if lam is None else float(lam)
    if not 0 < lam <= 1:
        raise ValueError(f"aspect ratio must lie in (0, 1], got {lam}")
    return lam


def _xk1(x):
    """x K_1(x), continued to 1 at x = 0."""
    x = np.abs(np.asarray(x, dtype=float))
    pos = x > 0
    return np.where(pos, x * bessel_k1(np.where(pos, x, 1.0)), 1.0)


def dipole_potential(mu, trap, lam=None):
    """Aligned magnetic dipoles in a channel of width d = sqrt(lam)/alpha.

    V(z) = -(mu0/2pi) mu^2 / (z^2 + d^2)^(3/2), V~(k) = V0 (kd) K_1(kd),
    V0 = -(mu0/pi) mu^2 alpha^2 / lam.  ``lam`` defaults to 1/N (filled trap).
    """
    lam = _lam(trap, lam)
    d = math.sqrt(lam) / trap.alpha
    V0 = -(MU0 / math.pi) * mu ** 2 * trap.alpha ** 2 / lam
    c = MU0 * mu ** 2 / (2 * math.pi)
    return PotentialSpec(
        "dipole", lambda k: V0 * _xk1(np.asarray(k) * d), 0.0, d, V0, V0, lam,
        trap.alpha, trap.hbar_omega,
        lambda z: -c / (np.asarray(z) ** 2 + d * d) ** 1.5,
    )


def a_from_c6(c6_au):
    """Effective 1D coefficient A [J m^6] from C6 in atomic units: A = C6 E_h a0^6 / 2."""
    return 0.5 * c6_au * HARTREE * A0 ** 6


def vdw_shape(kd):
    kd = np.abs(np.asarray(kd, dtype=float))
    return np.exp(-kd) * (3 + 3 * kd + kd * kd)


def vdw_potential(A, trap, lam=None, d=None):
    """V(z) = -A/(z^2+d^2)^3, V~(k) = -(pi/8)(A/d^5) e^{-kd}(3 + 3kd + k^2 d^2)."""
    if not A > 0:
        raise ValueError("A must be positive")
    lam = _lam(trap, lam)
    d = math.sqrt(lam) / trap.alpha if d is None else float(d)
    if not d > 0:
        raise ValueError("d must be positive")
    amp = -(math.pi / 8) * A / d ** 5
    return PotentialSpec(
        "vdw", lambda k: amp * vdw_shape(np.asarray(k) * d), 0.0, d, A, amp, lam,
        trap.alpha, trap.hbar_omega,
        lambda z: -A / (np.asarray(z) ** 2 + d * d) ** 3,
    )


def numeric_fourier(real_space, k, length=1.0):
    """2 int_0^inf cos(kz) V(z) dz by QUADPACK's Fourier-weighted rule.

    The integral is done in z/length with V scaled to O(1), so SI-sized
    inputs do not fall under the absolute tolerance.
    """
    scale = abs(float(real_space(0.0))) or 1.0

    def g(t):
        return real_space(length * t) / scale

    with warnings.catch_warnings():
        # late cycles underflow to zero and QUADPACK flags them; harmless here
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if k == 0:
            val, _ = integrate.quad(g, 0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=500)
        else:
            val, _ = integrate.quad(g, 0, np.inf, weight="cos", wvar=k * length,
                                    epsabs=1e-15, epsrel=1e-13, limlst=200)
    return 2.0 * val * scale * length


# ---- panel quadrature ------------------------------------------------------

def _gl(f, lo, hi, rule):
    x, w = rule
    mid = 0.5 * (lo + hi)[:, None]
    half = 0.5 * (hi - lo)[:, None]
    vals = f(mid + half * x[None, :])
    return (vals * w).sum(axis=1) * half[:, 0], (np.abs(vals) * w).sum(axis=1) * half[:, 0]


def panel_quad(f, a, b, width, rtol=1e-10, max_depth=12):
    """Integrate a vectorized ``f`` over [a, b] on panels of about ``width``.

    Each panel is done with Gauss-Legendre of two orders; panels whose
    estimates disagree are bisected.  Returns (value, error, n_panels).
    """
    n = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n + 1)
    lo, hi = edges[:-1], edges[1:]
    total = err = 0.0
    done = 0
    for depth in range(max_depth + 1):
        coarse, _ = _gl(f, lo, hi, _GL)
        fine, absval = _gl(f, lo, hi, _GL2)
        if depth == 0:
            scale = float(absval.sum())
        e = np.abs(fine - coarse)
        limit = rtol * max(scale, 1e-300) / max(len(lo), 1)
        ok = e <= limit
        total += float(fine[ok].sum())
        err += float(e[ok].sum())
        done += int(ok.sum())
        if ok.all():
            return total, err, done
        if depth == max_depth:
            bad = np.flatnonzero(~ok)
            raise QuadratureError(
                f"{bad.size} panels unresolved, e.g. [{lo[bad[0]]:.4g}, {hi[bad[0]]:.4g}] "
                f"error {e[bad[0]]:.3g} > {limit:.3g}"
            )
        mid = 0.5 * (lo[~ok] + hi[~ok])
        lo, hi = np.concatenate([lo[~ok], mid]), np.concatenate([mid, hi[~ok]])


# ---- matrix elements ------------------------------------------------------

@dataclass(frozen=True)
class MatrixElement:
    indices: tuple
    value: float
    method: str
    error: float = 0.0


def parity_factor(m, p, q, n):
    return (-1) ** (q - p) + (-1) ** (n - m)


def matrix_element_exact(pot, m, p, q, n, rtol=1e-10):
    """V(m,p;q,n) from the one-dimensional Laguerre-product integral.

    Indices are reordered to q >= m, n >= p using the m<->q, p<->n symmetry.
    With v = u^2 the integrand becomes 2 f_m^(Q)(u) f_p^(R)(u) V_eff(alpha sqrt2 u),
    f the normalized Laguerre functions, which is smooth at u = 0.
    """
    idx = (m, p, q, n)
    if min(idx) < 0:
        raise ValueError("indices must be non-negative")
    if q < m:
        m, q = q, m
    if n < p:
        p, n = n, p
    par = parity_factor(m, p, q, n)
    if par == 0:
        return MatrixElement(idx, 0.0, "exact")
    Q, R = q - m, n - p
    phase = (-1) ** ((m + n + p + q) // 2)
    a = pot.alpha
    top = max(m, p)
    umax = math.sqrt(4 * top + 2 * (Q + R) + 80)
    width = math.pi / (2 * math.sqrt(top + 1))

    def f(u):
        return 2 * laguerre_function(m, Q, u) * laguerre_function(p, R, u) * pot.v_eff(a * math.sqrt(2) * u)

    val, err, _ = panel_quad(f, 0.0, umax, width, rtol)
    pre = phase * par / math.sqrt(2) * a / (2 * math.pi) / pot.energy_unit
    return MatrixElement(idx, pre * val, "exact", abs(pre) * err)


def matrix_element_direct(pot, m, p, q, n, extent=12.0, points=1201):
    """Brute-force real-space double integral, an oracle for small indices.

    Works in oscillator units (requires ``pot.real_space`` and alpha = 1).
    """
    from .specfun import psi_table

    if pot.real_space is None:
        raise ValueError("potential has no real-space form")
    x = np.linspace(-extent, extent, points)
    h = x[1] - x[0]
    phi = psi_table(max(m, p, q, n), x)
    V = pot.real_space(x[:, None] - x[None, :])
    left = phi[m] * phi[q]
    right = phi[p] * phi[n]
    return float(left @ V @ right) * h * h / pot.energy_unit


def _regime_warning(m, p, Q, dR):
    if min(m, p) < 25 * max(Q, 1) ** 2:
        warnings.warn(f"asymptotic form used outside m,p >= 25 Q^2 (m={m}, p={p}, Q={Q})",
                      RuntimeWarning, stacklevel=3)
    if Q == 0 and dR == 0:
        warnings.warn("Q = R = 0 is outside the asymptotic form's scope", RuntimeWarning, stacklevel=3)


def matrix_element_asymptotic(pot, m, p, Q, dR, a=1.0, form="cosine", rtol=1e-9):
    """Large-index approximation to V(m, p; m+Q, p+Q+dR).

    ``form="cosine"``: (alpha/(pi^2 sqrt2)) cos(pi dR/2) int_a^inf du/u e^{-u^2/4}
    V_eff(alpha u/sqrt2) [cos(u(sqrt m - sqrt p)) + (-1)^Q sin(u(sqrt m + sqrt p))].
    ``form="bessel"``: the intermediate Bessel-function integral.
    """
    R = Q + dR
    if R < 0:
        raise ValueError("Q + dR must be non-negative")
    _regime_warning(m, p, Q, dR)
    idx = (m, p, m + Q, p + R)
    al = pot.alpha
    if form == "cosine":
        if dR % 2:
            return MatrixElement(idx, 0.0, "cosine_asymptotic")
        sm, sp = math.sqrt(m), math.sqrt(p)
        sign = (-1) ** Q

        def f(u):
            return (np.exp(-0.25 * u * u) / u * pot.v_eff(al * u / math.sqrt(2))
                    * (np.cos(u * (sm - sp)) + sign * np.sin(u * (sm + sp))))

        val, err, _ = panel_quad(f, a, a + 16.0, math.pi / (2 * (sm + sp + 1)), rtol)
        pre = al / (math.pi ** 2 * math.sqrt(2)) * (-1) ** (dR // 2) / pot.energy_unit
        return MatrixElement(idx, pre * val, "cosine_asymptotic", abs(pre) * err)
    if form == "bessel":
        par = (-1) ** Q + (-1) ** R
        if par == 0:
            return MatrixElement(idx, 0.0, "bessel_asymptotic")
        sm, sp = 2 * math.sqrt(m), 2 * math.sqrt(p)

        def f(u):
            return 2 * np.exp(-u * u) * pot.v_eff(al * math.sqrt(2) * u) * bessel_j(Q, sm * u) * bessel_j(R, sp * u)

        val, err, _ = panel_quad(f, 0.0, 9.0, math.pi / (sm + sp + 1), rtol)
        pre = (-1) ** ((Q + R) // 2) * par / math.sqrt(2) * al / (2 * math.pi) / pot.energy_unit
        return MatrixElement(idx, pre * val, "bessel_asymptotic", abs(pre) * err)
    raise ValueError(f"unknown form {form!r}")


def element_panel(pot, indices, method="exact"):
    out = []
    for m, p, q, n in indices:
        if method == "exact":
            out.append(matrix_element_exact(pot, m, p, q, n))
        else:
            form = "cosine" if method == "cosine_asymptotic" else "bessel"
            out.append(matrix_element_asymptotic(pot, m, p, q - m, (n - p) - (q - m), form=form))
    return out


def panel_to_csv(elements):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "p", "q", "n", "value", "method"])
    for e in elements:
        w.writerow([*e.indices, repr(float(e.value)), e.method])
    return buf.getvalue()


# ---- coupling estimates ---------------------------------------------------

@dataclass(frozen=True)
class CouplingEstimate:
    """V(1) in units of hbar*omega_l, split as prefactor * integral."""

    value: float
    prefactor: float
    integral: float
    m: int
    p: int


def estimate_v1(pot, trap, m=None, p=None, a=1.0):
    """Near-Fermi-edge coupling from the cosine form without its sin term.

    prefactor = amplitude * alpha / (pi^2 sqrt2) / (hbar omega);
    integral  = int_a^inf du/u e^{-u^2/4} [V_eff(alpha u/sqrt2)/amplitude] cos(u(sqrt m - sqrt p)).
    """
    m = trap.N if m is None else m
    p = trap.N if p is None else p
    if abs(math.sqrt(m) - math.sqrt(p)) > 1:
        raise ValueError("estimate is meant for |sqrt m - sqrt p| <= 1")
    diff = math.sqrt(m) - math.sqrt(p)
    amp = pot.amplitude

    def f(u):
        return np.exp(-0.25 * u * u) / u * (pot.v_eff(trap.alpha * u / math.sqrt(2)) / amp) * np.cos(u * diff)

    integral, _, _ = panel_quad(f, a, a + 16.0, 0.5, 1e-12)
    prefactor = amp * trap.alpha / (math.pi ** 2 * math.sqrt(2)) / trap.hbar_omega
    return CouplingEstimate(prefactor * integral, prefactor, integral, m, p)


def species_enhancement(reference, candidate):
    """(mu2/mu1)^2 (m2/m1)^(3/2); electric dipoles via their magnetic equivalent d*c."""
    mu1, mu2 = reference.magnetic_equivalent(), candidate.magnetic_equivalent()
    return (mu2 / mu1) ** 2 * (candidate.mass / reference.mass) ** 1.5
