"""One-dimensional Young functions with log-domain evaluation.

A Young function here is even, convex, vanishes exactly at zero and is
finite; an N-function additionally grows superlinearly at infinity and is
o(t) near zero.  Only the branch t >= 0 is represented; callers fold the
sign.  Two representations coexist behind one small protocol
(``log_value`` / ``log_derivative`` on log-arguments, ``value`` /
``derivative`` on plain arguments, all elementwise-vectorized):

* closed forms (pure powers, power-log products, power-exp products),
* :class:`PiecewiseYoungFn1D`, an ordered list of pieces split at
  log-domain breakpoints, the carrier for the glued competing functions.

Breakpoints grow like exp(poly(k)) under the inductive gluing, far past
double range, so every structural computation runs on (log t, log f(t))
pairs; plain values are produced only on demand and overflow is reported
via :class:`~anisolab.numerics.RangeError`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    RangeError,
    bisect_increasing,
    expand_bracket_increasing,
    log_diff_of_args,
    log_of_tplus1,
    safe_exp,
    value_from_log,
)

__all__ = [
    "PowerFn",
    "PowerLogFn",
    "PowerLogBaseFn",
    "PowerExpFn",
    "Piece",
    "PiecewiseYoungFn1D",
    "eval1d",
    "eval1d_log",
    "derivative1d",
    "inverse1d",
    "inverse1d_log",
    "check_convex",
    "doubling_indices",
    "is_doubling",
    "nfunction_report",
    "ConvexityReport",
]


def _as_log_args(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("arguments must be >= 0; evenness is folded by the caller")
    with np.errstate(divide="ignore"):
        return np.log(t)


def _scalarize(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# closed forms


class PowerFn:
    """coef * t**p, the lower reference curve of the construction."""

    kind = "power"

    def __init__(self, p, coef=1.0):
        if p < 1.0:
            raise ValueError("power exponent must be >= 1")
        if coef <= 0.0:
            raise ValueError("coefficient must be positive")
        self.p = float(p)
        self.coef = float(coef)

    def log_value(self, logt):
        logt = np.asarray(logt, dtype=float)
        return _scalarize(np.log(self.coef) + self.p * logt)

    def log_derivative(self, logt):
        logt = np.asarray(logt, dtype=float)
        if self.p == 1.0:
            out = np.full_like(logt, np.log(self.coef))
        else:
            with np.errstate(invalid="ignore"):
                out = np.log(self.coef * self.p) + (self.p - 1.0) * logt
            out = np.where(np.isneginf(logt), -np.inf, out)
        return _scalarize(out)

    def value(self, t):
        return _scalarize(safe_exp(self.log_value(_as_log_args(t))))

    def derivative(self, t):
        return _scalarize(safe_exp(self.log_derivative(_as_log_args(t))))


class PowerLogFn:
    """t**p * log(t+1)**alpha, the upper reference curve of the construction."""

    kind = "powerlog"

    def __init__(self, p, alpha):
        if p < 1.0 or alpha <= 0.0:
            raise ValueError("need p >= 1 and alpha > 0")
        self.p = float(p)
        self.alpha = float(alpha)

    def log_value(self, logt):
        logt = np.asarray(logt, dtype=float)
        lg = log_of_tplus1(logt)  # log(t+1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.p * logt + self.alpha * np.log(lg)
        out = np.where(np.isneginf(logt), -np.inf, out)
        return _scalarize(out)

    def log_derivative(self, logt):
        # d/dt [t^p L^a] = p t^{p-1} L^a + a t^p L^{a-1} / (t+1),  L = log(t+1)
        logt = np.asarray(logt, dtype=float)
        lg = log_of_tplus1(logt)
        with np.errstate(divide="ignore", invalid="ignore"):
            loglg = np.log(lg)
            t1 = np.log(self.p) + (self.p - 1.0) * logt + self.alpha * loglg
            t2 = np.log(self.alpha) + self.p * logt + (self.alpha - 1.0) * loglg - lg
            out = np.logaddexp(t1, t2)
        out = np.where(np.isneginf(logt), -np.inf, out)
        return _scalarize(out)

    def value(self, t):
        return _scalarize(safe_exp(self.log_value(_as_log_args(t))))

    def derivative(self, t):
        return _scalarize(safe_exp(self.log_derivative(_as_log_args(t))))


class PowerLogBaseFn:
    """t**p * log(base+t)**delta with base > 1 (Trudinger-style factor)."""

    kind = "powerlogbase"

    def __init__(self, p, delta, base):
        if p < 1.0 or base <= 1.0:
            raise ValueError("need p >= 1 and base > 1")
        if p == 1.0 and delta <= 0.0:
            raise ValueError("p == 1 requires delta > 0 for superlinearity")
        self.p = float(p)
        self.delta = float(delta)
        self.base = float(base)

    def _log_logbase(self, logt):
        # log(log(base+t)); log(base+t) = logaddexp(log base, log t)
        lbt = np.logaddexp(np.log(self.base), logt)
        return lbt, np.log(lbt)

    def log_value(self, logt):
        logt = np.asarray(logt, dtype=float)
        _, loglg = self._log_logbase(logt)
        out = self.p * logt + self.delta * loglg
        out = np.where(np.isneginf(logt), -np.inf, out)
        return _scalarize(out)

    def log_derivative(self, logt):
        logt = np.asarray(logt, dtype=float)
        lbt, loglg = self._log_logbase(logt)
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.log(self.p) + (self.p - 1.0) * logt + self.delta * loglg
            if self.delta == 0.0:
                out = t1
            elif self.delta > 0.0:
                t2 = np.log(self.delta) + self.p * logt + (self.delta - 1.0) * loglg - lbt
                out = np.logaddexp(t1, t2)
            else:
                from .numerics import logsubexp

                t2 = np.log(-self.delta) + self.p * logt + (self.delta - 1.0) * loglg - lbt
                out = logsubexp(t1, t2)
        out = np.where(np.isneginf(logt), -np.inf, out)
        return _scalarize(out)

    def value(self, t):
        return _scalarize(safe_exp(self.log_value(_as_log_args(t))))

    def derivative(self, t):
        return _scalarize(safe_exp(self.log_derivative(_as_log_args(t))))


class PowerExpFn:
    """coef * t**p * exp(t).  Not doubling; solvers reject it."""

    kind = "powerexp"

    def __init__(self, p, coef=1.0):
        if p < 1.0 or coef <= 0.0:
            raise ValueError("need p >= 1 and coef > 0")
        self.p = float(p)
        self.coef = float(coef)

    def log_value(self, logt):
        logt = np.asarray(logt, dtype=float)
        out = np.log(self.coef) + self.p * logt + safe_exp(logt)
        out = np.where(np.isneginf(logt), -np.inf, out)
        return _scalarize(out)

    def log_derivative(self, logt):
        logt = np.asarray(logt, dtype=float)
        t = safe_exp(logt)
        with np.errstate(invalid="ignore"):
            out = np.log(self.coef) + (self.p - 1.0) * logt + np.log(self.p + t) + t
        out = np.where(np.isneginf(logt), -np.inf, out)
        return _scalarize(out)

    def value(self, t):
        return _scalarize(safe_exp(self.log_value(_as_log_args(t))))

    def derivative(self, t):
        return _scalarize(safe_exp(self.log_derivative(_as_log_args(t))))


# ---------------------------------------------------------------------------
# pieces


@dataclass(frozen=True)
class Piece:
    """One segment of a piecewise function, valid on [from_logt, next).

    kind "power"    : coef * t**p
    kind "powerlog" : t**p * log(t+1)**alpha
    kind "linear"   : f_a + slope * (t - t_a), stored as
                      (log_slope, anchor_logt, anchor_logf) so enormous
                      slopes and anchors stay representable.
    """

    kind: str
    params: dict

    def _fn(self):
        if self.kind == "power":
            return PowerFn(self.params["p"], self.params.get("coef", 1.0))
        if self.kind == "powerlog":
            return PowerLogFn(self.params["p"], self.params["alpha"])
        raise ValueError(f"unknown closed piece kind {self.kind!r}")

    def log_value(self, logt):
        if self.kind == "linear":
            ls = self.params["log_slope"]
            at = self.params["anchor_logt"]
            af = self.params["anchor_logf"]
            logt = np.asarray(logt, dtype=float)
            with np.errstate(invalid="ignore"):
                out = np.logaddexp(af, ls + log_diff_of_args(logt, at))
            out = np.where(logt <= at, af, out)
            return _scalarize(out)
        return self._fn().log_value(logt)

    def log_derivative(self, logt):
        if self.kind == "linear":
            logt = np.asarray(logt, dtype=float)
            out = np.full_like(logt, self.params["log_slope"])
            return _scalarize(out)
        return self._fn().log_derivative(logt)

    @staticmethod
    def power(p, coef=1.0):
        return Piece("power", {"p": float(p), "coef": float(coef)})

    @staticmethod
    def powerlog(p, alpha):
        return Piece("powerlog", {"p": float(p), "alpha": float(alpha)})

    @staticmethod
    def linear(log_slope, anchor_logt, anchor_logf):
        return Piece(
            "linear",
            {
                "log_slope": float(log_slope),
                "anchor_logt": float(anchor_logt),
                "anchor_logf": float(anchor_logf),
            },
        )


class PiecewiseYoungFn1D:
    """Piecewise Young function: pieces glued at increasing log breakpoints.

    ``pieces[i]`` is active on [breakpoints[i-1], breakpoints[i]) in log-t,
    with the first piece reaching down to t = 0 and the last continuing to
    infinity.  Construction asserts continuity at every splice (relative
    mismatch <= ctol in log-value).
    """

    CONTINUITY_TOL = 1e-9

    def __init__(self, pieces, breakpoints_logt, trace=None, _validate=True):
        if len(pieces) != len(breakpoints_logt) + 1:
            raise ValueError("need exactly one more piece than breakpoints")
        self.pieces = list(pieces)
        self.breakpoints_logt = np.asarray(breakpoints_logt, dtype=float)
        self.trace = dict(trace or {})
        if len(self.breakpoints_logt) and np.any(np.diff(self.breakpoints_logt) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if _validate:
            self._check_continuity()

    def _check_continuity(self):
        for i, b in enumerate(self.breakpoints_logt):
            left = self.pieces[i].log_value(b)
            right = self.pieces[i + 1].log_value(b)
            scale = max(1.0, abs(left), abs(right))
            if not np.isclose(left, right, rtol=0.0, atol=self.CONTINUITY_TOL * scale):
                raise ValueError(
                    f"discontinuous splice at logt={b:.6g}: {left!r} vs {right!r}"
                )

    def _piece_index(self, logt):
        return np.searchsorted(self.breakpoints_logt, logt, side="right")

    def _dispatch(self, logt, method):
        logt = np.asarray(logt, dtype=float)
        scalar = logt.ndim == 0
        flat = np.atleast_1d(logt).astype(float)
        out = np.empty_like(flat)
        idx = self._piece_index(flat)
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if np.any(m):
                out[m] = getattr(piece, method)(flat[m])
        return float(out[0]) if scalar else out.reshape(logt.shape)

    def log_value(self, logt):
        return self._dispatch(logt, "log_value")

    def log_derivative(self, logt):
        return self._dispatch(logt, "log_derivative")

    def value(self, t):
        return _scalarize(safe_exp(self.log_value(_as_log_args(t))))

    def derivative(self, t):
        return _scalarize(safe_exp(self.log_derivative(_as_log_args(t))))

    # -- serialization ------------------------------------------------------

    def to_json_dict(self):
        pieces = []
        froms = [None] + [float(b) for b in self.breakpoints_logt]
        for piece, fb in zip(self.pieces, froms):
            d = {"kind": piece.kind, "from_logt": fb}
            d.update(piece.params)
            if piece.kind == "linear":
                # plain slope/intercept only when they fit in a double
                ls = piece.params["log_slope"]
                at = piece.params["anchor_logt"]
                af = piece.params["anchor_logf"]
                if ls < 700.0 and at < 700.0 and af < 700.0:
                    slope = float(np.exp(ls))
                    d["slope"] = slope
                    d["intercept"] = float(np.exp(af) - slope * np.exp(at))
                else:
                    d["slope"] = None
                    d["intercept"] = None
            pieces.append(d)
        return {"pieces": pieces, "trace": self.trace}

    @classmethod
    def from_json_dict(cls, data):
        pieces, breaks = [], []
        for i, pd in enumerate(data["pieces"]):
            kind = pd["kind"]
            if kind == "power":
                pieces.append(Piece.power(pd["p"], pd.get("coef", 1.0)))
            elif kind == "powerlog":
                pieces.append(Piece.powerlog(pd["p"], pd["alpha"]))
            elif kind == "linear":
                pieces.append(
                    Piece.linear(pd["log_slope"], pd["anchor_logt"], pd["anchor_logf"])
                )
            else:
                raise ValueError(f"unknown piece kind {kind!r}")
            if i > 0:
                breaks.append(pd["from_logt"])
        return cls(pieces, breaks, trace=data.get("trace"))


# ---------------------------------------------------------------------------
# operations


def eval1d(f, t):
    """Evaluate f at t >= 0 in the value domain.

    Raises :class:`RangeError` when the value overflows a double; use
    :func:`eval1d_log` past that range.
    """
    if np.ndim(t) == 0:
        if t < 0.0:
            raise ValueError("t must be >= 0")
        if t == 0.0:
            return 0.0
        return value_from_log(f.log_value(float(np.log(t))))
    v = f.value(t)
    if np.any(np.isinf(v)):
        raise RangeError("value overflow; evaluate through eval1d_log")
    return v


def eval1d_log(f, logt):
    """log f(t) from log t; the log-domain path, valid at any scale."""
    return f.log_value(logt)


def derivative1d(f, t):
    """Right-derivative of the active piece at t >= 0."""
    if np.ndim(t) == 0:
        if t < 0.0:
            raise ValueError("t must be >= 0")
        if t == 0.0:
            return 0.0
        return value_from_log(f.log_derivative(float(np.log(t))))
    return f.derivative(t)


def inverse1d(f, y, rtol=1e-12):
    """Monotone inverse by bracketed bisection on the log scale."""
    if y < 0.0:
        raise ValueError("Young functions are nonnegative; y must be >= 0")
    if y == 0.0:
        return 0.0
    return float(np.exp(inverse1d_log(f, float(np.log(y)), rtol=rtol)))


def inverse1d_log(f, logy, rtol=1e-12):
    """log t such that log f(t) = logy, by bisection in log t."""

    def g(logt):
        return f.log_value(logt) - logy

    lo, hi = expand_bracket_increasing(g, 0.0, step=4.0)
    return bisect_increasing(g, lo, hi, rtol=rtol)


@dataclass
class ConvexityReport:
    ok: bool
    worst_logt: float = np.nan
    worst_violation: float = 0.0  # log-slope decrease observed (nats)
    samples: int = 0


def _sample_logts(f, per_piece, span=(-6.0, 6.0)):
    """Log-t sample grid: dense inside each piece plus breakpoint straddles."""
    if isinstance(f, PiecewiseYoungFn1D) and len(f.breakpoints_logt):
        edges = np.concatenate(
            (
                [min(span[0], f.breakpoints_logt[0] - 3.0)],
                f.breakpoints_logt,
                [f.breakpoints_logt[-1] + 3.0],
            )
        )
    else:
        edges = np.array(span, dtype=float)
    chunks = []
    for a, b in zip(edges[:-1], edges[1:]):
        chunks.append(np.linspace(a, b, max(per_piece, 3), endpoint=False))
    chunks.append(edges[-1:])
    return np.unique(np.concatenate(chunks))


def check_convex(f, samples_per_piece=64, rel_slack=1e-8):
    """Convexity via nondecreasing difference quotients of sampled secants.

    Quotients are compared on the log scale, where relative slack in the
    value domain maps to additive slack in nats.
    """
    if samples_per_piece < 3:
        raise ValueError("need at least 3 samples per piece")
    logts = _sample_logts(f, samples_per_piece)
    logfs = f.log_value(logts)
    # log of (f(t_{i+1}) - f(t_i)) / (t_{i+1} - t_i)
    from .numerics import logsubexp

    with np.errstate(invalid="ignore"):
        log_slopes = logsubexp(logfs[1:], logfs[:-1]) - logsubexp(logts[1:], logts[:-1])
    good = np.isfinite(log_slopes)
    ls = log_slopes[good]
    pos = logts[1:][good]
    if len(ls) < 2:
        return ConvexityReport(ok=True, samples=len(logts))
    drops = ls[:-1] - ls[1:]  # positive where the slope decreased
    worst = int(np.argmax(drops))
    slack = rel_slack + 64.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(ls[:-1]))
    ok = bool(np.all(drops <= slack))
    return ConvexityReport(
        ok=ok,
        worst_logt=float(pos[worst]),
        worst_violation=float(max(drops[worst], 0.0)),
        samples=len(logts),
    )


def doubling_indices(f, log_lo, log_hi, n=512):
    """(i_est, s_est): min/max log-log difference quotients over the range."""
    logts = np.linspace(float(log_lo), float(log_hi), int(n))
    logfs = f.log_value(logts)
    slopes = np.diff(logfs) / np.diff(logts)
    slopes = slopes[np.isfinite(slopes)]
    return float(np.min(slopes)), float(np.max(slopes))


def is_doubling(f, log_lo=1.0, log_hi=40.0, growth_tol=1.10):
    """Heuristic doubling test: s_est must not grow under range extension."""
    _, s1 = doubling_indices(f, log_lo, log_hi)
    _, s2 = doubling_indices(f, log_lo, 2.0 * log_hi)
    return bool(np.isfinite(s2) and s2 <= growth_tol * s1)


def nfunction_report(f, log_lo=-10.0, log_hi=10.0, n=64):
    """Sampled N-function ratios: f(t)/t at both ends of the range."""
    logts = np.linspace(log_lo, log_hi, n)
    ratio_log = f.log_value(logts) - logts
    return {
        "ratio_at_zero": float(safe_exp(ratio_log[0])),
        "ratio_at_infinity": float(safe_exp(ratio_log[-1])),
        "superlinear": bool(ratio_log[-1] > ratio_log[0] + 1.0),
        "vanishing_slope_at_zero": bool(ratio_log[0] < ratio_log[-1] - 1.0),
    }
