"""Trap scales, interaction models and Bogoliubov coupling constants.

All interaction energies are dimensionless, in units of hbar*omega_l.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR, LI6

DEFAULT_OMEGA = 2 * math.pi * 10.0
DEFAULT_MASS = LI6.mass


class ModelInvalidError(ValueError):
    """Raised when an interaction violates |V_b| < |hbar w + V_a|."""


@dataclass(frozen=True)
class TrapConfig:
    N: int
    omega_l: float
    mass: float
    alpha: float = field(init=False)
    l: float = field(init=False)
    L_F: float = field(init=False)
    eps_F: float = field(init=False)
    k_F: float = field(init=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.omega_l > 0 or not self.mass > 0:
            raise ValueError("omega_l and mass must be positive")
        alpha = math.sqrt(self.mass * self.omega_l / HBAR)
        root = math.sqrt(2 * self.N - 1)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "l", 1.0 / alpha)
        object.__setattr__(self, "L_F", root / alpha)
        object.__setattr__(self, "eps_F", HBAR * self.omega_l * (self.N - 0.5))
        object.__setattr__(self, "k_F", alpha * root)

    @property
    def hbar_omega(self):
        return HBAR * self.omega_l

    def k_F_from_energy(self):
        """k_F = sqrt(2 m eps_F) / hbar, the second route to the same number."""
        return math.sqrt(2 * self.mass * self.eps_F) / HBAR

    def to_dict(self):
        return {
            "N": self.N,
            "omega_l": self.omega_l,
            "mass": self.mass,
            "alpha": self.alpha,
            "l": self.l,
            "L_F": self.L_F,
            "eps_F": self.eps_F,
            "k_F": self.k_F,
        }

    @classmethod
    def from_dict(cls, d):
        trap = cls(d["N"], float(d.get("omega_l", DEFAULT_OMEGA)), float(d.get("mass", DEFAULT_MASS)))
        for key in ("alpha", "l", "L_F", "eps_F", "k_F"):
            if key in d and not math.isclose(d[key], getattr(trap, key), rel_tol=1e-9):
                raise ValueError(f"inconsistent derived field {key}: {d[key]} != {getattr(trap, key)}")
        return trap


def derive_trap(N, omega_l=DEFAULT_OMEGA, mass=DEFAULT_MASS):
    return TrapConfig(N, omega_l, mass)


def default_decay_rates(N):
    """(r_gamma, r_alpha): 0.3 and 0.4 at N = 10, scaled as sqrt(10/N)."""
    f = math.sqrt(10.0 / N)
    return 0.3 * f, 0.4 * f


def gamma_from_alpha(alpha):
    """Solve gamma (1 + gamma) = alpha^2 for gamma >= 0."""
    return 0.5 * (math.sqrt(1.0 + 4.0 * alpha * alpha) - 1.0)


def alpha_from_gamma(gamma, sign=1.0):
    return math.copysign(math.sqrt(gamma * (1.0 + gamma)), sign) if gamma > 0 else 0.0


def symmetric_v_from_gamma(gamma, sign=1.0):
    """V with V_a = V_b = V that produces gamma = sinh^2(zeta)."""
    zeta = math.copysign(math.asinh(math.sqrt(gamma)), sign)
    return 0.5 * math.expm1(4 * zeta)


def v_from_k(K):
    return 0.5 * (1.0 / (K * K) - 1.0)


@dataclass(frozen=True)
class CouplingPoint:
    m: int
    Va: float
    Vb: float
    gamma_m: float
    alpha_m: float
    zeta_m: float
    K_m: float
    eps_m: float
    Z_gamma: float | None = None
    Z_alpha: float | None = None


def bogoliubov(Va, Vb):
    """Return (zeta, K, gamma, alpha, eps) for one mode.

    Raises ModelInvalidError unless |V_b| < 1 + V_a (strictly).
    """
    x = 1.0 + Va
    if not abs(Vb) < abs(x):
        raise ModelInvalidError(f"consistency violated: |V_b|={abs(Vb):.6g} >= |1+V_a|={abs(x):.6g}")
    if x <= 0:
        raise ModelInvalidError(f"renormalized level spacing 1+V_a={x:.6g} is not positive")
    zeta = 0.5 * math.atanh(Vb / x)
    K = math.sqrt((x - Vb) / (x + Vb))
    s = math.sinh(zeta)
    gamma = s * s
    alpha = 0.5 * math.sinh(2 * zeta)
    eps = math.sqrt((x - Vb) * (x + Vb))
    return zeta, K, gamma, alpha, eps


@dataclass(frozen=True)
class InteractionModel:
    """One of the supported interaction parameterizations.

    kind is "Free", "IM1" (single mode, V_a = V_b = v1 at m = 1), "IM2"
    (exponentially decaying gamma_m and alpha_m) or "Custom" (tabulated
    V_a(m), V_b(m) for m = 1..len(table)).
    """

    kind: str
    v1: float = 0.0
    gamma0: float = 0.0
    sign: int = 1
    r_gamma: float = 0.0
    r_alpha: float = 0.0
    Va: tuple = ()
    Vb: tuple = ()

    def __post_init__(self):
        if self.kind not in ("Free", "IM1", "IM2", "Custom"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "IM2":
            if self.gamma0 < 0:
                raise ValueError("gamma0 must be >= 0")
            if self.sign not in (1, -1):
                raise ValueError("sign must be +1 or -1")
            if not (self.r_gamma > 0 and self.r_alpha > 0):
                raise ValueError("IM2 decay rates r_gamma, r_alpha must be > 0")
        if self.kind == "Custom":
            object.__setattr__(self, "Va", tuple(float(v) for v in self.Va))
            object.__setattr__(self, "Vb", tuple(float(v) for v in self.Vb))
            if len(self.Va) != len(self.Vb):
                raise ValueError("Va and Vb tables must have equal length")

    # constructors

    @classmethod
    def free(cls):
        return cls("Free")

    @classmethod
    def im1(cls, v1):
        return cls("IM1", v1=float(v1))

    @classmethod
    def im1_from_alpha(cls, alpha1):
        """IM1 whose Bogoliubov alpha_1 equals ``alpha1``."""
        if alpha1 == 0:
            return cls("IM1", v1=0.0)
        two_zeta = math.asinh(2 * alpha1)
        return cls("IM1", v1=v_from_k(math.exp(-two_zeta)))

    @classmethod
    def im2(cls, gamma0, sign=1, r_gamma=0.3, r_alpha=0.4):
        return cls("IM2", gamma0=float(gamma0), sign=int(sign), r_gamma=float(r_gamma), r_alpha=float(r_alpha))

    @classmethod
    def im2_from_alpha(cls, alpha0, r_gamma=None, r_alpha=None, N=10):
        rg, ra = default_decay_rates(N)
        sign = -1 if alpha0 < 0 else 1
        return cls.im2(
            gamma_from_alpha(alpha0),
            sign,
            rg if r_gamma is None else r_gamma,
            ra if r_alpha is None else r_alpha,
        )

    @classmethod
    def custom(cls, Va, Vb):
        return cls("Custom", Va=tuple(Va), Vb=tuple(Vb))

    # per-mode quantities

    @property
    def alpha0(self):
        return alpha_from_gamma(self.gamma0, self.sign)

    @property
    def Z_gamma(self):
        return 2.0 * math.sinh(0.5 * self.r_gamma) ** 2

    @property
    def Z_alpha(self):
        return 2.0 * math.sinh(0.25 * self.r_alpha) ** 2

    def potentials(self, m):
        """(V_a(m), V_b(m)) in units of hbar*omega_l."""
        if m < 1:
            raise ValueError("mode index m must be >= 1")
        if self.kind == "Free":
            return 0.0, 0.0
        if self.kind == "IM1":
            return (self.v1, self.v1) if m == 1 else (0.0, 0.0)
        if self.kind == "IM2":
            g = math.exp(-self.r_gamma * m) * self.gamma0
            v = symmetric_v_from_gamma(g, self.sign) if g > 0 else 0.0
            return v, v
        if m <= len(self.Va):
            return self.Va[m - 1], self.Vb[m - 1]
        return 0.0, 0.0

    def couplings(self, m):
        """(gamma_m, alpha_m) entering the W-function."""
        if self.kind == "IM2":
            return (
                math.exp(-self.r_gamma * m) * self.gamma0,
                math.exp(-0.5 * self.r_alpha * m) * self.alpha0,
            )
        _, _, g, a, _ = bogoliubov(*self.potentials(m))
        return g, a

    def coupling_table(self, m_cut):
        """Arrays gamma[m-1], alpha[m-1] for m = 1..m_cut."""
        g = np.zeros(m_cut)
        a = np.zeros(m_cut)
        for m in range(1, m_cut + 1):
            g[m - 1], a[m - 1] = self.couplings(m)
        return g, a

    def last_active_mode(self):
        """Largest m with nonzero potentials, or None for infinitely many."""
        if self.kind == "Free":
            return 0
        if self.kind == "IM1":
            return 1 if self.v1 != 0 else 0
        if self.kind == "Custom":
            return len(self.Va)
        return None

    @property
    def model_id(self):
        if self.kind == "Free":
            return "Free"
        if self.kind == "IM1":
            return f"IM1(v1={self.v1:.12g})"
        if self.kind == "IM2":
            return (
                f"IM2(gamma0={self.gamma0:.12g},sign={self.sign:+d},"
                f"r_gamma={self.r_gamma:.12g},r_alpha={self.r_alpha:.12g})"
            )
        return f"Custom(M={len(self.Va)})"

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "IM1":
            d["v1"] = self.v1
        elif self.kind == "IM2":
            d.update(gamma0=self.gamma0, sign=self.sign, r_gamma=self.r_gamma, r_alpha=self.r_alpha)
        elif self.kind == "Custom":
            d.update(Va=list(self.Va), Vb=list(self.Vb))
        return d

    @classmethod
    def from_dict(cls, d, N=10):
        """Build a model from a JSON-style dict.

        IM1 accepts ``v1`` or ``alpha1``; IM2 accepts ``gamma0`` + ``sign`` or
        ``alpha0``, with decay rates defaulting to the N-scaled values.
        """
        d = dict(d)
        kind = d.pop("kind")
        if kind == "Free":
            model = cls.free()
        elif kind == "IM1":
            if "alpha1" in d:
                model = cls.im1_from_alpha(float(d.pop("alpha1")))
            else:
                model = cls.im1(float(d.pop("v1")))
        elif kind == "IM2":
            rg, ra = d.pop("r_gamma", None), d.pop("r_alpha", None)
            if "alpha0" in d:
                model = cls.im2_from_alpha(float(d.pop("alpha0")), rg, ra, N=N)
            else:
                drg, dra = default_decay_rates(N)
                model = cls.im2(
                    float(d.pop("gamma0")),
                    int(d.pop("sign", 1)),
                    drg if rg is None else rg,
                    dra if ra is None else ra,
                )
        elif kind == "Custom":
            model = cls.custom(d.pop("Va"), d.pop("Vb"))
        else:
            raise ValueError(f"unknown model kind {kind!r}")
        if d:
            raise ValueError(f"unknown model fields: {sorted(d)}")
        return model


def coupling_at(model, m):
    """Bogoliubov parameters of mode ``m``.

    For IM2 the returned alpha_m is the model's exponential ansatz, not
    sgn(V) sqrt(gamma_m (1 + gamma_m)).
    """
    if m < 1:
        raise ValueError("mode index m must be >= 1")
    Va, Vb = model.potentials(m)
    zeta, K, gamma, alpha, eps = bogoliubov(Va, Vb)
    zg = za = None
    if model.kind == "IM2":
        gamma, alpha = model.couplings(m)
        zg, za = model.Z_gamma, model.Z_alpha
    return CouplingPoint(m, Va, Vb, gamma, alpha, zeta, K, eps, zg, za)


@dataclass(frozen=True)
class ValidationReport:
    model_id: str
    m_max: int
    consistent: list
    stability: np.ndarray
    monotone_tail: bool
    stable: bool
    first_below_tol: int | None

    @property
    def ok(self):
        return all(self.consistent) and self.stable

    def first_violation(self):
        for m, good in enumerate(self.consistent, start=1):
            if not good:
                return m
        return None

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "m_max": self.m_max,
            "consistent": list(self.consistent),
            "stability": [float(x) for x in self.stability],
            "monotone_tail": self.monotone_tail,
            "stable": self.stable,
            "first_below_tol": self.first_below_tol,
            "ok": self.ok,
        }


def validate_model(model, m_max, tol=1e-6):
    """Check consistency per mode and the decay of sqrt(m) V_b / (1 + V_a)."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    consistent = []
    seq = np.zeros(m_max)
    for m in range(1, m_max + 1):
        Va, Vb = model.potentials(m)
        x = 1.0 + Va
        consistent.append(bool(abs(Vb) < abs(x) and x > 0) or (Va == 0 and Vb == 0))
        seq[m - 1] = math.sqrt(m) * Vb / x if x != 0 else math.inf
    mags = np.abs(seq)
    tail = mags[m_max // 2:]
    monotone = bool(np.all(np.diff(tail) <= 1e-15 * np.maximum(tail[:-1], 1e-300))) if tail.size > 1 else True
    below = np.nonzero(mags < tol)[0]
    first = None
    # first index after which the sequence stays below tol
    for idx in below:
        if np.all(mags[idx:] < tol):
            first = int(idx) + 1
            break
    stable = bool(mags[-1] < tol and monotone)
    return ValidationReport(model.model_id, m_max, consistent, seq, monotone, stable, first)
