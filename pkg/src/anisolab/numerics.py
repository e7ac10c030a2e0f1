"""Shared low-level numerics: log-domain arithmetic and bracketed bisection.

Everything here works elementwise on numpy arrays as well as on python
floats.  Log-domain helpers keep sums and differences of hugely scaled
positive quantities representable: the construction module produces
breakpoints beyond exp(1000), so all structural arithmetic is carried on
(log t, log f(t)) pairs.
"""

from __future__ import annotations

import numpy as np


class RangeError(ValueError):
    """Raised when a value-domain result is not representable in a double."""


class BracketError(RuntimeError):
    """Raised when bracket expansion fails to enclose a sign change."""


def logaddexp_many(*logs):
    """log(sum(exp(l) for l in logs)), elementwise, overflow safe."""
    out = logs[0]
    for l in logs[1:]:
        out = np.logaddexp(out, l)
    return out


def logsubexp(la, lb):
    """log(exp(la) - exp(lb)) for la >= lb, elementwise.

    Returns -inf where the operands coincide to rounding.
    """
    la = np.asarray(la, dtype=float)
    lb = np.asarray(lb, dtype=float)
    diff = lb - la
    with np.errstate(divide="ignore", invalid="ignore"):
        out = la + np.log1p(-np.exp(diff))
    out = np.where(diff >= 0.0, -np.inf, out)
    if out.ndim == 0:
        return float(out)
    return out


def log1p_exp(x):
    """log(1 + exp(x)) without overflow (elementwise)."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0.0, x + np.log1p(np.exp(-np.abs(x))), np.log1p(np.exp(np.minimum(x, 0.0))))
    if out.ndim == 0:
        return float(out)
    return out


def log_of_tplus1(logt):
    """log(t + 1) given log t, stable for any magnitude of t."""
    return log1p_exp(logt)


def log_diff_of_args(logt, log_t0):
    """log(t - t0) given logs of t > t0 >= 0, elementwise; -inf at equality."""
    return logsubexp(logt, log_t0)


def safe_exp(logv):
    """exp(logv) mapping overflow to +inf rather than raising."""
    logv = np.asarray(logv, dtype=float)
    with np.errstate(over="ignore"):
        out = np.exp(logv)
    if out.ndim == 0:
        return float(out)
    return out


def value_from_log(logv):
    """exp(logv) raising RangeError on overflow (scalar only)."""
    if logv > 709.0:
        raise RangeError(f"value exp({logv:.6g}) exceeds double range")
    return float(np.exp(logv))


def bisect_increasing(f, lo, hi, rtol=1e-12, max_iter=200):
    """Root of a nondecreasing scalar function on a bracketing interval.

    ``f(lo) <= 0 <= f(hi)`` is required.  Stops when the bracket width falls
    below ``rtol * max(1, |mid|)``.
    """
    flo, fhi = f(lo), f(hi)
    if flo > 0.0 or fhi < 0.0:
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r},{fhi!r}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * max(1.0, abs(mid)):
            return mid
        fm = f(mid)
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expand_bracket_increasing(f, start, step=1.0, factor=2.0, max_steps=200):
    """Bracket the root of a nondecreasing f starting at ``start``.

    Walks right (and left) in geometrically growing steps until a sign
    change is enclosed; returns (lo, hi).
    """
    f0 = f(start)
    if f0 == 0.0:
        return start, start
    lo = hi = start
    s = step
    if f0 < 0.0:
        for _ in range(max_steps):
            hi = lo + s
            if f(hi) >= 0.0:
                return lo, hi
            lo, s = hi, s * factor
        raise BracketError("rightward bracket expansion exhausted")
    for _ in range(max_steps):
        lo = hi - s
        if f(lo) <= 0.0:
            return lo, hi
        hi, s = lo, s * factor
    raise BracketError("leftward bracket expansion exhausted")


def bisect_increasing_arrays(f, lo, hi, rtol=1e-12, max_iter=200):
    """Vectorized bisection: f maps arrays to arrays, nondecreasing per lane."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        width = hi - lo
        if np.all(width <= rtol * np.maximum(1.0, np.abs(mid))):
            return mid
        fm = f(mid)
        take_lo = fm < 0.0
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    return 0.5 * (lo + hi)
