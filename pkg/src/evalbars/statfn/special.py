"""Special functions and univariate distribution helpers.

All functions accept scalars or numpy arrays and broadcast; scalar inputs give
Python floats back. The regularized incomplete beta and its inverse are
implemented here (continued fraction plus a safeguarded Newton iteration)
because the posterior and Clopper-Pearson bounds hit very lopsided shape
parameters. Gamma-function and normal/t primitives come from ``scipy.special``.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

from evalbars.errors import DomainError

_FPMIN = 1e-300
_CF_EPS = 1e-16
_CF_MAXIT = 50_000
_TINY = float(np.nextafter(0.0, 1.0))
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("log_gamma requires x > 0")
    return _out(_sp.gammaln(x))


def log_beta(a, b):
    """``log B(a, b)`` for positive ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("log_beta requires a > 0 and b > 0")
    return _out(_sp.betaln(a, b))


def _fix(v: np.ndarray) -> np.ndarray:
    return np.where(np.abs(v) < _FPMIN, _FPMIN, v)


def _betacf(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    # Converged entries are frozen; iterating them further only adds roundoff.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 / _fix(1.0 - qab * x / qap)
    h = d.copy()
    idx = np.arange(x.size)
    for m in range(1, _CF_MAXIT + 1):
        ai, bi, xi = a[idx], b[idx], x[idx]
        ci, di = c[idx], d[idx]
        m2 = 2.0 * m
        aa = m * (bi - m) * xi / ((qam[idx] + m2) * (ai + m2))
        di = 1.0 / _fix(1.0 + aa * di)
        ci = _fix(1.0 + aa / ci)
        hi = h[idx] * di * ci
        aa = -(ai + m) * (qab[idx] + m) * xi / ((ai + m2) * (qap[idx] + m2))
        di = 1.0 / _fix(1.0 + aa * di)
        ci = _fix(1.0 + aa / ci)
        delta = di * ci
        h[idx] = hi * delta
        c[idx] = ci
        d[idx] = di
        idx = idx[np.abs(delta - 1.0) >= _CF_EPS]
        if idx.size == 0:
            break
    return h


def _reg_inc_beta(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(np.shape(x), np.shape(a), np.shape(b))
    x, a, b = (np.array(np.broadcast_to(v, shape), dtype=float).ravel() for v in (x, a, b))
    out = np.empty(x.shape, dtype=float)
    out[x <= 0.0] = 0.0
    out[x >= 1.0] = 1.0
    inner = (x > 0.0) & (x < 1.0)
    if np.any(inner):
        xi, ai, bi = x[inner], a[inner], b[inner]
        flip = xi > ai / (ai + bi)
        xs = np.where(flip, 1.0 - xi, xi)
        as_ = np.where(flip, bi, ai)
        bs = np.where(flip, ai, bi)
        log_front = as_ * np.log(xs) + bs * np.log1p(-xs) - _sp.betaln(as_, bs)
        val = np.exp(log_front) * _betacf(as_, bs, xs) / as_
        val = np.where(flip, 1.0 - val, val)
        out[inner] = np.clip(val, 0.0, 1.0)
    return out.reshape(shape)


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function ``I_x(a, b)``.

    Uses the continued-fraction expansion on whichever side of ``a/(a+b)``
    converges, via the symmetry ``I_x(a, b) = 1 - I_{1-x}(b, a)``.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise DomainError("reg_inc_beta requires 0 <= x <= 1")
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("reg_inc_beta requires a > 0 and b > 0")
    return _out(_reg_inc_beta(x, a, b))


def _initial_guess(p: np.ndarray, a: np.ndarray, b: np.ndarray, lbeta: np.ndarray) -> np.ndarray:
    # Normal-approximation start when both shapes are >= 1, otherwise the
    # leading power-law behaviour of whichever tail p falls in.
    big = (a >= 1.0) & (b >= 1.0)
    pp = np.where(p < 0.5, p, 1.0 - p)
    t = np.sqrt(-2.0 * np.log(pp))
    z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
    z = np.where(p < 0.5, -z, z)
    al = (z * z - 3.0) / 6.0
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = z * np.sqrt(al + h) / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h))
        x_big = a / (a + b * np.exp(2.0 * w))
        lt = a * np.log(a / (a + b)) - np.log(a)
        lu = b * np.log(b / (a + b)) - np.log(b)
        lw = np.logaddexp(lt, lu)
        left = np.log(p) < lt - lw
        x_left = np.exp((np.log(a) + lw + np.log(p)) / a)
        x_right = -np.expm1((np.log(b) + lw + np.log1p(-p)) / b)
    x_small = np.where(left, x_left, x_right)
    x = np.where(big, x_big, x_small)
    return np.where(np.isfinite(x), x, a / (a + b))


def _beta_quantile(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(np.shape(p), np.shape(a), np.shape(b))
    p, a, b = (np.array(np.broadcast_to(v, shape), dtype=float).ravel() for v in (p, a, b))
    lbeta = _sp.betaln(a, b)
    lo = np.zeros_like(p)
    hi = np.ones_like(p)
    x = np.clip(_initial_guess(p, a, b, lbeta), 1e-300, 1.0 - 1e-16)
    active = np.ones(p.shape, dtype=bool)
    for _ in range(2000):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        xa, pa, aa, ba = x[idx], p[idx], a[idx], b[idx]
        f = _reg_inc_beta(xa, aa, ba) - pa
        lo[idx] = np.where(f <= 0.0, xa, lo[idx])
        hi[idx] = np.where(f >= 0.0, xa, hi[idx])
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            log_pdf = (aa - 1.0) * np.log(xa) + (ba - 1.0) * np.log1p(-xa) - lbeta[idx]
            step = f / np.exp(log_pdf)
            # Halley correction using d(log pdf)/dx.
            curv = (aa - 1.0) / xa - (ba - 1.0) / (1.0 - xa)
            xn = xa - step / np.maximum(1.0 - 0.5 * np.clip(step * curv, -1.0, 1.0), 0.5)
        la, ha = lo[idx], hi[idx]
        # Judge convergence on the raw Newton step: once it drops below
        # roundoff it may land on a bracket end and must not trigger bisection.
        done = (
            (f == 0.0)
            | (np.abs(xn - xa) <= 2e-15 * np.maximum(xa, 1e-300))
            | (ha - la <= 2e-15 * np.maximum(ha, 1e-300))
        )
        outside = ~np.isfinite(xn) | (xn <= la) | (xn >= ha)
        bad = ~done & outside
        xn = np.where(bad, 0.5 * (la + ha), np.where(done & outside, xa, xn))
        x[idx] = xn
        active[idx[done]] = False
    # Quantiles closer to 0 or 1 than a double can express snap to the
    # nearest interior double.
    return np.clip(x, _TINY, _BELOW_ONE).reshape(shape)


def beta_quantile(p, a, b):
    """Inverse of :func:`reg_inc_beta` in ``x``: the ``p``-quantile of ``Beta(a, b)``."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("beta_quantile requires 0 < p < 1")
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("beta_quantile requires a > 0 and b > 0")
    return _out(_beta_quantile(p, a, b))


def std_normal_cdf(x):
    """Standard normal CDF."""
    return _out(_sp.ndtr(np.asarray(x, dtype=float)))


def std_normal_quantile(p):
    """Standard normal quantile function for ``0 < p < 1``."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    return _out(_sp.ndtri(p))


def student_t_quantile(p, nu):
    """Quantile of Student's t with ``nu >= 1`` degrees of freedom."""
    p = np.asarray(p, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(~(nu >= 1)):
        raise DomainError("student_t_quantile requires nu >= 1")
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("student_t_quantile requires 0 < p < 1")
    return _out(_sp.stdtrit(nu, p))


def betabinom_logpmf(k, n, a, b):
    """Log pmf of the Beta-Binomial distribution ``BetaBin(n, a, b)`` at ``k``."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(k < 0) or np.any(n < 0) or np.any(k > n):
        raise DomainError("betabinom_logpmf requires 0 <= k <= n")
    if np.any(k != np.floor(k)) or np.any(n != np.floor(n)):
        raise DomainError("betabinom_logpmf requires integer k and n")
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("betabinom_logpmf requires a > 0 and b > 0")
    log_choose = _sp.gammaln(n + 1.0) - _sp.gammaln(k + 1.0) - _sp.gammaln(n - k + 1.0)
    return _out(log_choose + _sp.betaln(k + a, n - k + b) - _sp.betaln(a, b))
