"""One-body expectation values <c+_{M-p} c_{M+p}> of the trapped Luttinger model.

Three routes are provided:

* ``occ_im1``: single s-integral with a modified Bessel factor (one mode);
* ``occ_im2``: (t, s) double integral with closed-form power factors;
* ``occ_general``: exp(-W) on a 2D periodic grid, W from the truncated
  mode series.  Slow but model agnostic; used to cross-check the other two.

All integrands are 2*pi periodic and analytic, so every integral uses the
periodic trapezoidal rule on the grid ``2*pi*j/n``.  The error estimate is
the change from the n/2 subgrid, which comes for free because it is a
subset of the n-point grid.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .specfun import bessel_ie, dirichlet_kernel
from .trapmodel import InteractionModel, ModelInvalidError, bogoliubov

DEFAULT_TOL = 1e-9
MAX_NODES = 1 << 14
MAX_NODES_2D = 4096
M_CUT_CAP = 10_000


class QuadratureError(RuntimeError):
    """The trapezoidal estimate did not reach the requested tolerance."""


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float
    nodes: int


def nodes(n):
    return 2.0 * np.pi * np.arange(n) / n


def base_nodes(N, M, p):
    """Node count 16*max(|M+1/2-N|, p, 8), rounded up to a power of two."""
    need = 16 * max(abs(M + 0.5 - N), p, 8)
    return 1 << math.ceil(math.log2(need))


def free_value(N, M, p):
    if p:
        return 0.0
    return 1.0 if M < N else 0.0


# ---------------------------------------------------------------------------
# IM1


def _im1_params(model):
    if model.kind == "Free":
        return 0.0, 0.0
    if model.kind != "IM1":
        raise ValueError(f"occ_im1 needs an IM1 model, got {model.kind}")
    _, _, g, a, _ = bogoliubov(model.v1, model.v1)
    return g, a


def im1_profile(gamma1, alpha1, p, s):
    """exp(-2 gamma1 (1 - cos s)) I_p(2 alpha1 (1 - cos s))."""
    x = 1.0 - np.cos(s)
    arg = 2.0 * alpha1 * x
    return np.exp(-2.0 * gamma1 * x + np.abs(arg)) * bessel_ie(p, arg)


def _im1_block(N, gamma1, alpha1, Ms, p, n):
    s = nodes(n)
    f = im1_profile(gamma1, alpha1, p, s)
    D = np.array([dirichlet_kernel(M + 0.5 - N, s) for M in Ms])
    full = D @ f / n
    half = D[:, ::2] @ f[::2] / (n // 2)
    delta = 0.5 if p == 0 else 0.0
    return delta - full, np.abs(full - half)


def occ_im1(trap, model, M, p, tol=DEFAULT_TOL, full=False):
    """<c+_{M-p} c_{M+p}> for the single-mode model."""
    if p < 0 or M - p < 0:
        raise ValueError("need p >= 0 and M - p >= 0")
    g, a = _im1_params(model)
    n = base_nodes(trap.N, M, p)
    while True:
        val, err = _im1_block(trap.N, g, a, [M], p, n)
        if err[0] <= tol:
            break
        if n >= MAX_NODES:
            raise QuadratureError(f"IM1 entry ({M},{p}) error {err[0]:.2e} at {n} nodes")
        n *= 2
    est = Estimate(float(val[0]), float(err[0]), n)
    return est if full else est.value


# ---------------------------------------------------------------------------
# IM2


def im2_kernel(model, n):
    """G(t, s) of the IM2 double integral on the n x n periodic grid.

    G = [1+Z_a-cos t]^(-a0) (Z_g / [1+Z_g-cos s])^(g0)
        [(1+Z_a-cos(t-s)) (1+Z_a-cos(t+s))]^(a0/2)
    """
    if model.kind != "IM2":
        raise ValueError(f"occ_im2 needs an IM2 model, got {model.kind}")
    zg, za = model.Z_gamma, model.Z_alpha
    if zg <= 0 or za <= 0:
        raise ValueError("IM2 requires r_gamma, r_alpha > 0")
    g0, a0 = model.gamma0, model.alpha0
    x = nodes(n)
    c = np.cos(x)
    # cos(t +- s) on the grid is cos of index (i +- j) mod n
    idx = np.arange(n)
    lag = 1.0 + za - c[(idx[:, None] - idx[None, :]) % n]
    lead = 1.0 + za - c[(idx[:, None] + idx[None, :]) % n]
    outer = (1.0 + za - c) ** (-a0)
    inner = (zg / (1.0 + zg - c)) ** g0
    return outer[:, None] * inner[None, :] * (lag * lead) ** (0.5 * a0)


def _kernel_block(N, G, Ms, ps, n):
    """cos(p t)^T G D_a(s) / n^2 for all (p, M), plus the n/2 subgrid change."""
    x = nodes(n)
    C = np.array([np.cos(p * x) for p in ps])
    D = np.array([dirichlet_kernel(M + 0.5 - N, x) for M in Ms])
    full = C @ G @ D.T / (n * n)
    half = C[:, ::2] @ G[::2, ::2] @ D[:, ::2].T / ((n // 2) ** 2)
    delta = np.array([0.5 if p == 0 else 0.0 for p in ps])[:, None]
    return delta - full, np.abs(full - half)


def occ_im2(trap, model, M, p, tol=1e-8, full=False):
    """<c+_{M-p} c_{M+p}> for the exponentially decaying model."""
    if p < 0 or M - p < 0:
        raise ValueError("need p >= 0 and M - p >= 0")
    if model.gamma0 == 0:
        est = Estimate(free_value(trap.N, M, p), 0.0, 0)
        return est if full else est.value
    n = max(256, base_nodes(trap.N, M, p))
    while True:
        G = im2_kernel(model, n)
        val, err = _kernel_block(trap.N, G, [M], [p], n)
        if err[0, 0] <= tol:
            break
        if n >= MAX_NODES_2D:
            raise QuadratureError(f"IM2 entry ({M},{p}) error {err[0, 0]:.2e} at {n} nodes")
        n *= 2
    est = Estimate(float(val[0, 0]), float(err[0, 0]), n)
    return est if full else est.value


# ---------------------------------------------------------------------------
# generic W-function route


@dataclass(frozen=True)
class WFunction:
    """W(s, sigma) = 2 sum_m (1/m) [gamma_m - alpha_m cos(m sigma)] (1 - cos(m s)).

    Here s = u - v and sigma = u + v.  ``tail_bound`` bounds the dropped
    part of sum_m (gamma_m + |alpha_m|) / m beyond ``m_cut``.
    """

    gamma: np.ndarray
    alpha: np.ndarray
    tail_bound: float = 0.0

    @property
    def m_cut(self):
        return len(self.gamma)

    def __call__(self, s, sigma):
        s = np.asarray(s, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        m = np.arange(1, self.m_cut + 1).reshape((-1,) + (1,) * np.broadcast(s, sigma).ndim)
        terms = (self.gamma.reshape(m.shape) - self.alpha.reshape(m.shape) * np.cos(m * sigma)) * (
            1.0 - np.cos(m * s)
        )
        return 2.0 * np.sum(terms / m, axis=0)

    def grid(self, n):
        """W on the n x n grid, indexed [sigma_i, s_j]."""
        x = nodes(n)
        m = np.arange(1, self.m_cut + 1)
        cosmx = np.cos(np.outer(m, x))
        g_series = (self.gamma / m) @ cosmx
        a_series = (self.alpha / m) @ cosmx
        g0 = np.sum(self.gamma / m)
        idx = np.arange(n)
        plus = a_series[(idx[:, None] + idx[None, :]) % n]
        minus = a_series[(idx[:, None] - idx[None, :]) % n]
        return 2.0 * (g0 - g_series)[None, :] - 2.0 * (a_series[:, None] - 0.5 * (plus + minus))


def w_function(couplings, m_cut=None, eps=1e-12):
    """Build a WFunction from a model or a (gamma, alpha) table pair."""
    if isinstance(couplings, InteractionModel):
        last = couplings.last_active_mode()
        if last is not None:
            g, a = couplings.coupling_table(max(last, 1))
            return WFunction(g, a, 0.0) if m_cut is None else _truncate(g, a, m_cut)
        g, a = couplings.coupling_table(M_CUT_CAP)
    else:
        g, a = (np.asarray(c, dtype=float) for c in couplings)
    if m_cut is None:
        mags = np.abs(g) + np.abs(a)
        big = np.nonzero(mags >= eps)[0]
        m_cut = int(big[-1]) + 1 if big.size else 1
    return _truncate(g, a, min(m_cut, M_CUT_CAP))


def _truncate(g, a, m_cut):
    m = np.arange(1, len(g) + 1)
    tail = float(np.sum((np.abs(g[m_cut:]) + np.abs(a[m_cut:])) / m[m_cut:]))
    # geometric continuation past the end of the table
    if len(g) > 2 and (abs(g[-1]) + abs(a[-1])) > 0:
        t1, t0 = abs(g[-1]) + abs(a[-1]), abs(g[-2]) + abs(a[-2])
        ratio = t1 / t0 if t0 > 0 else 1.0
        tail += t1 / len(g) * (ratio / (1 - ratio) if ratio < 1 else math.inf)
    return WFunction(np.array(g[:m_cut], dtype=float), np.array(a[:m_cut], dtype=float), tail)


@dataclass(frozen=True)
class GeneralEstimate(Estimate):
    m_cut: int = 0
    tail_bound: float = 0.0
    flagged: bool = False


def occ_general(trap, couplings, M, p, m_cut=None, tol=DEFAULT_TOL, full=False):
    """<c+_{M-p} c_{M+p}> from exp(-W) with the truncated mode series.

    ``couplings`` is an InteractionModel or a pair of arrays
    (gamma_m, alpha_m) for m = 1, 2, ...
    """
    if p < 0 or M - p < 0:
        raise ValueError("need p >= 0 and M - p >= 0")
    W = couplings if isinstance(couplings, WFunction) else w_function(couplings, m_cut)
    n = max(256, base_nodes(trap.N, M, p))
    while True:
        val, err = _kernel_block(trap.N, np.exp(-W.grid(n)), [M], [p], n)
        if err[0, 0] <= tol or n >= MAX_NODES_2D:
            break
        n *= 2
    flagged = bool(W.tail_bound >= 1e-10 or err[0, 0] > tol)
    est = GeneralEstimate(float(val[0, 0]), float(err[0, 0]), n, W.m_cut, W.tail_bound, flagged)
    return est if full else est.value


# ---------------------------------------------------------------------------
# first-order perturbation theory


def first_order_coefficient(N, M, p):
    """d<c+_{M-p} c_{M+p}>/dV_b(1) at zero coupling with V_a(1) = 0.

    Only p = 1 survives, and the s-integral of the Dirichlet kernel against
    (1 - cos s) is nonzero only for a = M + 1/2 - N = +-1/2.
    """
    if p != 1:
        return 0.0
    a = M + 0.5 - N
    # (1/2pi) int D_a = sgn(a)/2; (1/2pi) int D_a cos s = sgn(a)/2 for |a| >= 3/2
    integral = 0.5 * math.copysign(1.0, a) * (1.0 if abs(a) < 1.0 else 0.0)
    # alpha_1 -> V_b(1) / 2, I_1(x) ~ x/2 with x = 2 alpha_1 (1 - cos s)
    return -0.5 * integral


def occ_first_order(trap, vb1, M, p):
    return free_value(trap.N, M, p) + vb1 * first_order_coefficient(trap.N, M, p)


# ---------------------------------------------------------------------------
# matrix assembly


@dataclass(frozen=True)
class OccupationMatrix:
    """<c+_{M-p} c_{M+p}> for 0 <= M-p and M+p <= M_max.

    ``entries`` maps (M, p) -> value; (M, p) stands for both orderings of
    the operator pair.  Odd index differences are identically zero and not
    stored.
    """

    N: int
    M_max: int
    model_id: str
    entries: dict
    quadrature_meta: dict = field(default_factory=dict)

    def entry(self, M, p):
        p = abs(p)
        if (M, p) in self.entries:
            return self.entries[(M, p)]
        if M - p < 0 or M + p > self.M_max:
            raise KeyError(f"entry ({M},{p}) outside 0 <= M-p, M+p <= {self.M_max}")
        raise KeyError((M, p))

    def element(self, m, n):
        """<c+_m c_n> with arbitrary level indices."""
        if (n - m) % 2:
            return 0.0
        return self.entry((m + n) // 2, abs(n - m) // 2)

    def P(self, M):
        return self.entry(M, 0)

    def diagonal(self):
        return np.array([self.entries[(M, 0)] for M in range(self.M_max + 1)])

    def dense(self):
        n = self.M_max + 1
        out = np.zeros((n, n))
        for (M, p), v in self.entries.items():
            out[M - p, M + p] = out[M + p, M - p] = v
        return out

    def to_dict(self):
        return {
            "N": self.N,
            "M_max": self.M_max,
            "model_id": self.model_id,
            "entries": [[M, p, v] for (M, p), v in sorted(self.entries.items())],
            "quadrature_meta": self.quadrature_meta,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        entries = {(int(M), int(p)): float(v) for M, p, v in d["entries"]}
        return cls(int(d["N"]), int(d["M_max"]), d["model_id"], entries, d.get("quadrature_meta", {}))


def index_panel(M_max):
    return [(M, p) for M in range(M_max + 1) for p in range(0, M + 1) if M + p <= M_max]


def _assemble(N, Ms_by_p, block, n_start, tol, n_cap):
    """Run ``block(Ms, p, n)`` per p, doubling n until every entry meets tol."""
    n = n_start
    while True:
        vals, errs = {}, {}
        for p, Ms in Ms_by_p.items():
            v, e = block(Ms, p, n)
            for M, vv, ee in zip(Ms, v, e):
                vals[(M, p)] = float(vv)
                errs[(M, p)] = float(ee)
        worst = max(errs.values()) if errs else 0.0
        if worst <= tol or n >= n_cap:
            return vals, worst, n
        n *= 2


def occupation_matrix(trap, model, M_max=None, method="auto", tol=None, m_cut=None):
    """All entries with M + p <= M_max (default 2N) for the given model.

    method: "auto" (closed form for IM1/IM2, generic W otherwise),
    "im1", "im2" or "general".
    """
    N = trap.N
    if M_max is None:
        M_max = 2 * N
    if M_max < N - 1:
        raise ValueError("M_max must be >= N - 1")
    # reject invalid models up front with a model error
    if model.kind in ("IM1", "Custom"):
        for m in range(1, (model.last_active_mode() or 0) + 1):
            bogoliubov(*model.potentials(m))
    if method == "auto":
        method = {"IM1": "im1", "IM2": "im2", "Free": "free"}.get(model.kind, "general")
    panel = index_panel(M_max)
    Ms_by_p = {}
    for M, p in panel:
        Ms_by_p.setdefault(p, []).append(M)
    n_start = 1 << math.ceil(math.log2(16 * max(N + 0.5, M_max + 0.5 - N, M_max, 8)))
    meta = {"method": method}

    if method == "free":
        entries = {(M, p): free_value(N, M, p) for M, p in panel}
        return OccupationMatrix(N, M_max, model.model_id, entries, {"method": "free", "nodes": 0, "error": 0.0})

    if method == "im1":
        g, a = _im1_params(model)
        tol = DEFAULT_TOL if tol is None else tol
        vals, worst, n = _assemble(
            N, Ms_by_p, lambda Ms, p, n: _im1_block(N, g, a, Ms, p, n), n_start, tol, MAX_NODES
        )
    elif method in ("im2", "general"):
        tol = (1e-8 if method == "im2" else DEFAULT_TOL) if tol is None else tol
        W = w_function(model, m_cut) if method == "general" else None
        if W is not None:
            meta.update(m_cut=W.m_cut, tail_bound=W.tail_bound)
        n = max(256, n_start)
        while True:
            kern = im2_kernel(model, n) if method == "im2" else np.exp(-W.grid(n))
            ps = sorted(Ms_by_p)
            Ms = list(range(M_max + 1))
            v, e = _kernel_block(N, kern, Ms, ps, n)
            vals, errs = {}, {}
            for i, p in enumerate(ps):
                for M in Ms_by_p[p]:
                    vals[(M, p)] = float(v[i, M])
                    errs[(M, p)] = float(e[i, M])
            worst = max(errs.values())
            if worst <= tol or n >= MAX_NODES_2D:
                break
            n *= 2
    else:
        raise ValueError(f"unknown method {method!r}")
    if worst > tol:
        raise QuadratureError(f"{method}: estimated error {worst:.2e} > {tol:.1e} at {n} nodes")
    meta.update(nodes=n, error=worst, tol=tol)
    return OccupationMatrix(N, M_max, model.model_id, vals, meta)


def occupation_matrix_pointwise(trap, model, M_max=None, workers=4):
    """Entry-by-entry construction through the scalar routines, run concurrently.

    Much slower than ``occupation_matrix``; kept as an independent assembly path.
    """
    M_max = 2 * trap.N if M_max is None else M_max
    fn = {"IM1": occ_im1, "IM2": occ_im2}.get(model.kind)
    if fn is None:
        fn = lambda t, m, M, p: occ_general(t, m, M, p)  # noqa: E731
    panel = index_panel(M_max)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(lambda mp: fn(trap, model, *mp), panel))
    return OccupationMatrix(trap.N, M_max, model.model_id, dict(zip(panel, values)), {"method": "pointwise"})


# ---------------------------------------------------------------------------
# symmetry and sum-rule diagnostics


def particle_hole_violation(occ):
    """Max violation of entry(2N-1-M, p) = -entry(M, p) (p > 0) and
    P(2N-1-M) = 1 - P(M) over all computed pairs."""
    worst = 0.0
    for (M, p), v in occ.entries.items():
        partner = (2 * occ.N - 1 - M, p)
        if partner not in occ.entries:
            continue
        w = occ.entries[partner]
        worst = max(worst, abs(v + w - (1.0 if p == 0 else 0.0)))
    return worst


@dataclass(frozen=True)
class SumRule:
    N: int
    closed_sum: float
    truncated_sum: float
    tail_above: float

    @property
    def residual(self):
        return self.closed_sum - self.N


def sum_rule(occ):
    """Occupation sum over the particle-hole window 0..2N-1.

    Levels above M_max inside the window are filled in as 1 - P(2N-1-M).
    ``tail_above`` is the computed weight at M >= 2N; by particle-hole
    symmetry it equals the hole weight of the filled levels below n = 0.
    """
    N = occ.N
    total = 0.0
    for M in range(2 * N):
        if M <= occ.M_max:
            total += occ.P(M)
        else:
            total += 1.0 - occ.P(2 * N - 1 - M)
    diag = occ.diagonal()
    return SumRule(N, total, float(diag.sum()), float(diag[2 * N:].sum()) if occ.M_max >= 2 * N else 0.0)


def anomalous_depletion(trap, model, depth):
    """Sum of 1 - P(j) over the fictitious levels j = -depth..-1."""
    N = trap.N
    Ms = list(range(-depth, 0))
    if model.kind == "IM1":
        g, a = _im1_params(model)
        n = 1 << math.ceil(math.log2(16 * (N + depth + 1)))
        v, _ = _im1_block(N, g, a, Ms, 0, n)
    elif model.kind == "IM2":
        n = max(256, 1 << math.ceil(math.log2(16 * (N + depth + 1))))
        v, _ = _kernel_block(N, im2_kernel(model, n), Ms, [0], n)
        v = v[0]
    else:
        n = max(256, 1 << math.ceil(math.log2(16 * (N + depth + 1))))
        v, _ = _kernel_block(N, np.exp(-w_function(model).grid(n)), Ms, [0], n)
        v = v[0]
    return float(np.sum(1.0 - np.asarray(v)))


@dataclass(frozen=True)
class FermiSumReport:
    N: int
    Q: int
    value: float
    expected: float
    closed_form_mismatch: float

    @property
    def deviation(self):
        return abs(self.value - self.expected)


def fermi_sum_identity_check(N, Q, f=None, n=None):
    """Integrate sum_{M=0}^{Q} D_{M+1/2-N}(s) against f over a period / (2 pi).

    The expected weight is f(0) ((Q+1)/2 - N).  The direct term-by-term sum
    is also compared with its closed form
    [cos(N s) - cos((Q+1-N) s)] / (4 sin^2(s/2)).
    """
    if Q <= 2 * N - 1:
        raise ValueError("need Q >= 2N")
    if f is None:
        f = lambda s: np.ones_like(s)  # noqa: E731
    n = n or (1 << math.ceil(math.log2(8 * (Q + 2))))
    s = nodes(n)
    kern = np.zeros(n)
    for M in range(Q + 1):
        kern += dirichlet_kernel(M + 0.5 - N, s)
    sh = np.sin(0.5 * s)
    ok = np.abs(sh) > 1e-8
    closed = np.empty(n)
    closed[ok] = (np.cos(N * s[ok]) - np.cos((Q + 1 - N) * s[ok])) / (4 * sh[ok] ** 2)
    closed[~ok] = 0.5 * ((Q + 1 - N) ** 2 - N ** 2)
    mismatch = float(np.max(np.abs(kern - closed)))
    value = float(np.sum(kern * f(s)) / n)
    f0 = float(np.atleast_1d(f(np.zeros(1)))[0])
    return FermiSumReport(N, Q, value, f0 * ((Q + 1) / 2 - N), mismatch)


__all__ = [
    "Estimate",
    "GeneralEstimate",
    "ModelInvalidError",
    "OccupationMatrix",
    "QuadratureError",
    "SumRule",
    "WFunction",
    "anomalous_depletion",
    "fermi_sum_identity_check",
    "first_order_coefficient",
    "occ_first_order",
    "occ_general",
    "occ_im1",
    "occ_im2",
    "occupation_matrix",
    "particle_hole_violation",
    "sum_rule",
    "w_function",
]
