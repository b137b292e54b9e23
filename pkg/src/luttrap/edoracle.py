"""Exact diagonalization of the truncated fermionic Hamiltonian.

The single-particle levels n = lo..hi include ``depth = -lo`` fictitious
levels below n = 0 with the linear spectrum continued (n + 1/2).  They are
filled in the reference state and stand in for the anomalous vacuum.

The interaction is written with the density operators
rho(m) = sum_p c+_{p+m} c_p restricted to the level window:

    H = sum_n (n + 1/2) n_n
        + 1/2 sum_{m <= m_cut} [ V_a(m) (rho(m) rho(-m) + rho(-m) rho(m))
                                + V_b(m) (rho(m)^2 + rho(-m)^2) ]

Energies are in units of hbar*omega_l.
"""

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .occupations import OccupationMatrix, occupation_matrix
from .trapmodel import InteractionModel, derive_trap

DENSE_LIMIT = 4000


class BasisTooSmall(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def _parity(states, L):
    lv = np.arange(L)
    return (((states[:, None] >> lv[None, :]) & 1) @ lv) % 2


@dataclass(frozen=True)
class FockBasis:
    """All N_tot-fermion configurations of levels lo..hi as sorted bitmasks.

    Bit i of a state refers to level lo + i.  With ``parity_sector`` the
    basis is restricted to states whose summed level index has the parity of
    the reference state; the Hamiltonian never leaves that sector.
    """

    lo: int
    hi: int
    N_tot: int
    states: np.ndarray
    parity_sector: bool = False

    @classmethod
    def build(cls, lo, hi, N_tot, parity_sector=False, parity=None):
        L = hi - lo + 1
        if L > 62:
            raise ValueError("at most 62 levels are supported")
        if not 0 <= N_tot <= L:
            raise ValueError("N_tot out of range")
        states = np.array(
            [sum(1 << i for i in occ) for occ in combinations(range(L), N_tot)], dtype=np.int64
        )
        states.sort()
        if parity_sector:
            want = sum(range(N_tot)) % 2 if parity is None else parity
            states = states[_parity(states, L) == want]
        return cls(lo, hi, N_tot, states, parity_sector)

    def complement(self):
        """The opposite-parity sector of the same window (self for a full basis)."""
        if not self.parity_sector:
            return self
        own = int(_parity(self.states[:1], self.n_levels)[0])
        return FockBasis.build(self.lo, self.hi, self.N_tot, True, 1 - own)

    @property
    def n_levels(self):
        return self.hi - self.lo + 1

    @property
    def dim(self):
        return len(self.states)

    @property
    def levels(self):
        return np.arange(self.lo, self.hi + 1)

    @property
    def reference(self):
        return (1 << self.N_tot) - 1

    def index(self, state):
        i = int(np.searchsorted(self.states, state))
        if i >= self.dim or self.states[i] != state:
            raise KeyError(state)
        return i

    def occupations(self):
        lv = np.arange(self.n_levels)
        return ((self.states[:, None] >> lv[None, :]) & 1).astype(float)


def hop(basis, a, b, target=None):
    """c+_a c_b on every basis state (bit indices a, b).

    Returns (rows, cols, signs): <rows| c+_a c_b |cols> = signs, with rows
    indexing ``target`` (default: the same basis).
    """
    target = basis if target is None else target
    s = basis.states
    if a == b:
        occ = ((s >> b) & 1).astype(bool)
        idx = np.nonzero(occ)[0]
        return idx, idx, np.ones(idx.size)
    ok = (((s >> b) & 1) == 1) & (((s >> a) & 1) == 0)
    src = np.nonzero(ok)[0]
    st = s[src]
    lo, hi = min(a, b), max(a, b)
    between = ((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)
    nsign = np.bitwise_count(st & between).astype(np.int64)
    new = st ^ (1 << a) ^ (1 << b)
    dst = np.searchsorted(target.states, new)
    keep = dst < target.dim
    keep[keep] &= target.states[dst[keep]] == new[keep]
    return dst[keep], src[keep], np.where(nsign[keep] % 2, -1.0, 1.0)


def density_operator(basis, m, target=None):
    """Sparse rho(m) = sum_p c+_{p+m} c_p inside the window, m >= 1.

    Maps ``basis`` into ``target`` (default: the same basis).
    """
    target = basis if target is None else target
    rows, cols, vals = [], [], []
    for b in range(basis.n_levels - m):
        r, c, v = hop(basis, b + m, b, target)
        rows.append(r)
        cols.append(c)
        vals.append(v)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(target.dim, basis.dim)
    )


@dataclass
class ManyBodyOperator:
    matrix: sparse.csr_matrix
    basis: FockBasis
    dropped_bilinears: int = 0
    hermitian: bool = True

    def hermiticity_residual(self):
        d = (self.matrix - self.matrix.T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0


def build_hamiltonian(basis, model, m_cut=1, trap=None):
    """Sparse many-body Hamiltonian on ``basis`` (trap is accepted for symmetry
    with the other modules; energies never leave hbar*omega units)."""
    if m_cut < 1:
        raise ValueError("m_cut must be >= 1")
    if m_cut >= basis.n_levels:
        raise BasisTooSmall(
            f"m_cut={m_cut} needs more than {basis.n_levels} levels; "
            f"{2 * sum(range(1, m_cut + 1))} boundary bilinears would be dropped"
        )
    e = basis.occupations() @ (basis.levels + 0.5)
    H = sparse.diags(e).tocsr()
    dropped = 0
    for m in range(1, m_cut + 1):
        Va, Vb = model.potentials(m)
        if Va == 0 and Vb == 0:
            continue
        # rho(m) restricted to a parity sector leaves it for odd m
        other = basis.complement() if m % 2 else basis
        out = density_operator(basis, m, other)  # basis -> other
        back = density_operator(other, m, basis)  # other -> basis
        # rho(-m) = rho(m)^T; each rho(+-m) loses m terms at either window end
        dropped += 2 * m
        H = H + 0.5 * (
            Va * (back @ back.T + out.T @ out) + Vb * (back @ out + out.T @ back.T)
        )
    H = H.tocsr()
    H = 0.5 * (H + H.T)
    H.eliminate_zeros()
    return ManyBodyOperator(H.tocsr(), basis, dropped)


@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray
    gap: float
    residual: float
    method: str


def ground_state(H, tol=1e-10, dense_limit=DENSE_LIMIT):
    """Lowest eigenpair (dense below ``dense_limit``, Lanczos above).

    The eigenvector sign is fixed by making its largest component positive.
    """
    A = H.matrix
    dim = A.shape[0]
    if dim < 1:
        raise ValueError("empty basis")
    if dim <= dense_limit:
        w, v = np.linalg.eigh(A.toarray())
        E, x = w[0], v[:, 0]
        gap = float(w[1] - w[0]) if dim > 1 else math.inf
        method = "dense"
    else:
        v0 = np.zeros(dim)
        v0[H.basis.index(H.basis.reference)] = 1.0
        v0 += 1e-3 * np.cos(np.arange(dim))
        w, v = eigsh(A, k=2, which="SA", v0=v0, tol=1e-13, maxiter=20 * dim)
        order = np.argsort(w)
        E, x = w[order[0]], v[:, order[0]]
        gap = float(w[order[1]] - w[order[0]])
        method = "lanczos"
    x = x / np.linalg.norm(x)
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    res = float(np.linalg.norm(A @ x - E * x))
    if res > tol:
        raise ConvergenceError(f"ground-state residual {res:.2e} > {tol:.1e}")
    return GroundState(float(E), x, gap, res, method)


def one_body_matrix(state, basis):
    """<c+_i c_j> over all levels of the window, indexed by bit position."""
    L = basis.n_levels
    rho = np.zeros((L, L))
    for i in range(L):
        for j in range(i, L):
            r, c, v = hop(basis, i, j)
            rho[i, j] = rho[j, i] = float(np.sum(state[r] * v * state[c]))
    return rho


@dataclass(frozen=True)
class EDTable:
    """ED one-body matrix with level labels, plus run metadata."""

    lo: int
    hi: int
    N: int
    rho: np.ndarray
    energy: float
    gap: float
    dim: int
    dropped_bilinears: int

    def element(self, m, n):
        return float(self.rho[m - self.lo, n - self.lo])

    def in_range(self, m):
        return self.lo <= m <= self.hi


def run_ed(N, model, above, depth=4, m_cut=1, parity_sector=True):
    """Diagonalize N physical fermions with ``depth`` filled levels below 0
    and levels up to N - 1 + above."""
    lo, hi = -depth, N - 1 + above
    basis = FockBasis.build(lo, hi, N + depth, parity_sector=parity_sector)
    H = build_hamiltonian(basis, model, m_cut)
    gs = ground_state(H)
    rho = one_body_matrix(gs.vector, basis)
    return EDTable(lo, hi, N, rho, gs.energy, gs.gap, basis.dim, H.dropped_bilinears)


@dataclass(frozen=True)
class ComparisonReport:
    lo: int
    hi: int
    dim: int
    window: tuple
    max_diag: float
    rms_diag: float
    max_offdiag: float
    dropped_bilinears: int

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def fermi_window(N):
    half = N // 2
    return tuple(range(max(0, N - half), N + half + 1))


def compare_to_luttinger(ed, occ, window=None):
    """Deviation between ED and Luttinger occupations near the Fermi edge."""
    if occ.N != ed.N:
        raise ValueError("ED table and occupation matrix have different N")
    window = tuple(window) if window is not None else fermi_window(ed.N)
    diag = np.array([ed.element(M, M) - occ.P(M) for M in window])
    off = []
    for M in window:
        for p in range(1, M + 1):
            if M + p > occ.M_max or not ed.in_range(M + p):
                break
            off.append(ed.element(M - p, M + p) - occ.entry(M, p))
    return ComparisonReport(
        ed.lo,
        ed.hi,
        ed.dim,
        window,
        float(np.max(np.abs(diag))),
        float(np.sqrt(np.mean(diag ** 2))),
        float(np.max(np.abs(off))) if off else 0.0,
        ed.dropped_bilinears,
    )


@dataclass
class OracleReport:
    N: int
    model: dict
    m_cut: int
    runs: list = field(default_factory=list)

    @property
    def monotone(self):
        devs = [r.max_diag for r in self.runs]
        return all(b < a for a, b in zip(devs, devs[1:]))

    def to_dict(self):
        return {
            "N": self.N,
            "model": self.model,
            "m_cut": self.m_cut,
            "runs": [r.to_dict() for r in self.runs],
            "monotone": self.monotone,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def oracle_report(N, model, sizes=((4, 8), (6, 10)), m_cut=1, window=None):
    """Run ED for each (depth, above) pair and compare with the Luttinger
    occupations of the same model."""
    trap = derive_trap(N)
    occ = occupation_matrix(trap, model, M_max=2 * N + max(a for _, a in sizes))
    rep = OracleReport(N, model.to_dict(), m_cut)
    for depth, above in sizes:
        ed = run_ed(N, model, above, depth, m_cut)
        rep.runs.append(compare_to_luttinger(ed, occ, window))
    return rep


__all__ = [
    "BasisTooSmall",
    "ComparisonReport",
    "ConvergenceError",
    "EDTable",
    "FockBasis",
    "GroundState",
    "InteractionModel",
    "ManyBodyOperator",
    "OccupationMatrix",
    "OracleReport",
    "build_hamiltonian",
    "compare_to_luttinger",
    "density_operator",
    "ground_state",
    "one_body_matrix",
    "oracle_report",
    "run_ed",
]
