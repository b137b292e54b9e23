"""Real-space density, momentum density and Friedel-oscillation metrics."""

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .occupations import occupation_matrix
from .specfun import psi_table
from .trapmodel import InteractionModel


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class Profile:
    """A sampled dimensionless profile.

    For ``kind="density"`` the grid is v = z/l and values are n*l; for
    ``kind="momentum"`` the grid is kappa = k/alpha and values are p*alpha.
    """

    kind: str
    grid: np.ndarray
    values: np.ndarray
    N: int
    model_id: str
    M_max: int
    coarse: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def integral(self):
        return float(np.trapezoid(self.values, self.grid))

    def to_csv(self, header=None):
        buf = io.StringIO()
        label = "v" if self.kind == "density" else "kappa"
        for key, val in (header or self.header()).items():
            buf.write(f"# {key}: {val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([label, self.kind])
        for x, y in zip(self.grid, self.values):
            w.writerow([repr(float(x)), repr(float(y))])
        return buf.getvalue()

    def header(self):
        return {
            "kind": self.kind,
            "N": self.N,
            "model_id": self.model_id,
            "M_max": self.M_max,
            "integral": repr(self.integral),
        }

    def to_dict(self):
        return {
            **self.header(),
            "integral": self.integral,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "coarse": self.coarse,
            "meta": self.meta,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def default_grid(N, points=2048, extent=1.5):
    half = extent * math.sqrt(2 * N - 1)
    return np.linspace(-half, half, points)


def _check_grid(grid, N):
    """True when the spacing cannot resolve the 2 k_F oscillation."""
    if len(grid) < 2:
        return True
    return float(np.max(np.diff(grid))) > math.pi / (4 * math.sqrt(2 * N - 1))


def _assemble(occ, grid, alternating):
    grid = np.asarray(grid, dtype=float)
    phi = psi_table(occ.M_max, grid)
    out = np.zeros_like(grid)
    for (M, p), e in occ.entries.items():
        if p == 0:
            out += phi[M] ** 2 * e
        else:
            sign = -1.0 if (alternating and p % 2) else 1.0
            out += 2.0 * sign * e * phi[M - p] * phi[M + p]
    return out


def _profile(kind, trap, occ, grid, alternating):
    grid = np.asarray(grid if grid is not None else default_grid(trap.N), dtype=float)
    coarse = _check_grid(grid, trap.N)
    if coarse:
        warnings.warn(f"{kind} grid spacing does not resolve 2k_F", RuntimeWarning, stacklevel=3)
    vals = _assemble(occ, grid, alternating)
    return Profile(kind, grid, vals, occ.N, occ.model_id, occ.M_max, coarse, dict(occ.quadrature_meta))


def density(trap, occ, grid=None):
    """n(v) l = sum_M phi_M^2 P(M) + 2 sum_{M,p>=1} phi_{M-p} phi_{M+p} <c+_{M-p} c_{M+p}>."""
    return _profile("density", trap, occ, grid, alternating=False)


def momentum(trap, occ, grid=None):
    """p(kappa) alpha: the density sum with (-1)^p on the off-diagonal terms."""
    return _profile("momentum", trap, occ, grid, alternating=True)


def free_density(N, grid):
    phi = psi_table(N - 1, np.asarray(grid, dtype=float))
    return np.sum(phi ** 2, axis=0)


@dataclass(frozen=True)
class DualityReport:
    alpha1: float
    max_deviation: float
    tol: float

    @property
    def passed(self):
        return self.max_deviation <= self.tol


def duality_check(trap, alpha1, grid=None, M_max=None, tol=1e-6):
    """Compare p(kappa; alpha1) with n(v = kappa; -alpha1) for the single-mode model.

    The model is specified by its coupling alpha1, since the sign flip acts on
    alpha1 (gamma1 depends only on |alpha1|).
    """
    grid = default_grid(trap.N) if grid is None else grid
    plus = occupation_matrix(trap, InteractionModel.im1_from_alpha(alpha1), M_max)
    minus = occupation_matrix(trap, InteractionModel.im1_from_alpha(-alpha1), M_max)
    p = momentum(trap, plus, grid)
    n = density(trap, minus, grid)
    return DualityReport(alpha1, float(np.max(np.abs(p.values - n.values))), tol)


@dataclass(frozen=True)
class FriedelMetrics:
    amplitude: float
    ratio_to_free: float
    period_estimate: float
    free_amplitude: float


def _moving_average(y, width):
    if width < 1:
        return y.copy()
    kernel = np.ones(width) / width
    pad = width // 2
    ypad = np.pad(y, (pad, width - 1 - pad), mode="reflect")
    return np.convolve(ypad, kernel, mode="valid")


def _oscillation(grid, values, N):
    period = math.pi / math.sqrt(2 * N - 1)
    h = float(np.mean(np.diff(grid)))
    width = max(1, int(round(period / h)))
    resid = values - _moving_average(values, width)
    window = np.abs(grid) < 0.5 * math.sqrt(2 * N - 1)
    r = resid[window]
    amp = float(r.max() - r.min())
    g = grid[window]
    crossings = g[:-1][np.sign(r[:-1]) * np.sign(r[1:]) < 0]
    # one full period spans two sign changes
    per = float(2 * np.mean(np.diff(crossings))) if crossings.size > 2 else float("nan")
    return amp, per


def friedel_metrics(profile, trap):
    """Peak-to-trough of the 2k_F ripple in |v| < L_F/(2l).

    The ripple is the profile minus its own moving average over one Friedel
    period pi/(k_F l); the same is done for the free gas on the same grid.
    """
    if profile.kind != "density":
        raise ValueError("friedel_metrics expects a density profile")
    if _check_grid(profile.grid, trap.N):
        raise GridTooCoarse("grid does not resolve the 2k_F oscillation")
    amp, per = _oscillation(profile.grid, profile.values, trap.N)
    free_amp, _ = _oscillation(profile.grid, free_density(trap.N, profile.grid), trap.N)
    return FriedelMetrics(amp, amp / free_amp, per, free_amp)
