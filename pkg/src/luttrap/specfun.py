"""Special-function kernels.

Normalized oscillator functions are generated by the three-term recurrence
with the Gaussian folded in, so no Hermite polynomial is ever formed
explicitly.  The recurrence carries a running log-scale so that very high
orders (n ~ 10^4) far from the origin neither overflow nor flush to zero
inside the classically allowed region.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

PI_QUARTER = np.pi ** -0.25

_RESCALE = 1e150
_BIG = 1e100
_LOG_BIG = math.log(_BIG)


@dataclass(frozen=True)
class HermiteFunctionTable:
    """Values ``psi_n(z) * sqrt(l)`` for ``n = 0..n_max`` at ``x = alpha*z``.

    ``values`` has shape ``(n_max + 1,) + np.shape(x)``.
    """

    n_max: int
    x: np.ndarray
    values: np.ndarray


def psi_table(n_max, x):
    """Return the array of dimensionless oscillator functions phi_n(x).

    phi_n(x) = (2^n n! sqrt(pi))^(-1/2) exp(-x^2/2) H_n(x), n = 0..n_max.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    x = np.asarray(x, dtype=float)
    shape = x.shape
    xf = np.atleast_1d(x).ravel()

    mant = np.empty((n_max + 1, xf.size))
    logs = np.empty((n_max + 1, xf.size))
    # mantissa/log-scale pairs: phi_n = mant[n] * exp(logs[n])
    log_scale = -0.5 * xf * xf
    prev = np.zeros_like(xf)
    cur = np.full_like(xf, PI_QUARTER)
    mant[0] = cur
    logs[0] = log_scale
    for n in range(n_max):
        nxt = xf * np.sqrt(2.0 / (n + 1)) * cur - np.sqrt(n / (n + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            f = np.where(big, np.abs(cur), 1.0)
            cur = cur / f
            prev = prev / f
            log_scale = log_scale + np.log(f)
        mant[n + 1] = cur
        logs[n + 1] = log_scale

    with np.errstate(under="ignore", over="ignore"):
        # split exp() so a huge log-scale against a tiny mantissa is safe
        out = np.sign(mant) * np.exp(np.log(np.abs(mant) + 1e-300 * (mant == 0)) + logs)
    out[mant == 0] = 0.0
    return out.reshape((n_max + 1,) + shape)


def psi_row(n_max, x):
    x = np.asarray(x, dtype=float)
    return HermiteFunctionTable(n_max=n_max, x=x, values=psi_table(n_max, x))


def laguerre_assoc(m, Q, v):
    """Associated Laguerre polynomial L_m^(Q)(v) by upward recurrence in m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    v = np.asarray(v, dtype=float)
    prev = np.ones_like(v)
    if m == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + Q - v
    for k in range(1, m):
        prev, cur = cur, ((2 * k + 1 + Q - v) * cur - (k + Q) * prev) / (k + 1)
    return cur if np.ndim(cur) else float(cur)


def laguerre_function(m, Q, u):
    """Normalized Laguerre function sqrt(m!/(m+Q)!) u^Q exp(-u^2/2) L_m^(Q)(u^2).

    Bounded by O(1) for all u; the recurrence is rescaled in log space so
    that indices of several hundred neither overflow nor underflow.
    """
    u = np.abs(np.asarray(u, dtype=float))
    v = u * u
    prev = np.ones_like(v)
    cur = prev if m == 0 else 1.0 + Q - v
    logs = np.zeros_like(v)
    for k in range(1, m):
        prev, cur = cur, ((2 * k + 1 + Q - v) * cur - (k + Q) * prev) / (k + 1)
        big = np.abs(cur) > _BIG
        if np.any(big):
            prev = np.where(big, prev / _BIG, prev)
            cur = np.where(big, cur / _BIG, cur)
            logs = logs + big * _LOG_BIG
    with np.errstate(divide="ignore"):
        lu = np.log(u)
    norm = 0.5 * (math.lgamma(m + 1) - math.lgamma(m + Q + 1))
    expo = logs - 0.5 * v + norm + (Q * lu if Q else 0.0)
    val = cur * np.exp(expo)
    return val if val.ndim else float(val)


def bessel_j(order, x):
    return special.jv(order, x)


def bessel_i(order, x):
    """Modified Bessel I_p(x) for integer p; odd orders are odd in x."""
    x = np.asarray(x, dtype=float)
    val = special.iv(order, np.abs(x))
    if order % 2:
        val = np.where(x < 0, -val, val)
    return val if val.ndim else float(val)


def bessel_ie(order, x):
    """Exponentially scaled I_p(x) * exp(-|x|), same sign convention."""
    x = np.asarray(x, dtype=float)
    val = special.ive(order, np.abs(x))
    if order % 2:
        val = np.where(x < 0, -val, val)
    return val if val.ndim else float(val)


def bessel_k1(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("K_1 requires x > 0")
    val = special.k1(x)
    return val if val.ndim else float(val)


def dirichlet_kernel(a, s):
    """sin(a s) / (2 sin(s/2)), with the value ``a`` at s = 0.

    ``a`` is a half-integer, so the kernel is a finite cosine sum and
    2*pi periodic.
    """
    s = np.asarray(s, dtype=float)
    half = np.sin(0.5 * s)
    small = np.abs(half) < 1e-12
    safe = np.where(small, 1.0, half)
    val = np.where(small, a * np.cos(a * s) / np.cos(0.5 * s), np.sin(a * s) / (2.0 * safe))
    return val if val.ndim else float(val)
