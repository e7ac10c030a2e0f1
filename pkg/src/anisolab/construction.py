"""Inductive construction of three competing piecewise Young functions.

Two reference curves drive everything: a lower power curve
``lo(t) = t**p`` and an upper curve ``hi(t) = t**p * log(t+1)**alpha``.
Three functions start as (lo, lo, hi) and, cycle by cycle, trade places:
the current top function descends to the lower curve along a tangent
line while one of the bottom two climbs that same line up to the upper
curve.  Between maneuvers the top function runs far ahead of the other
two, and the schedule of breakpoints is chosen so that, at the end of
cycle k, the leader exceeds k times the sum of the other two evaluated
at k-fold arguments.  Those per-cycle margins are the incomparability
certificates: they grow without bound, so no pair of constants can make
the sum of two functions dominate the third.

Feasibility notes baked into the code (both are properties of the two
reference curves, not implementation choices):

* ``hi < lo`` on (0, e-1), so a tangent from (t, lo(t)) to the upper
  graph exists only once t >= e-1; maneuvers therefore launch from
  ``max(t_k, 2)``.  The very first cycle starts its tangent at 2 even
  though the schedule origin stays at t_0 = 1.
* for p == 1 the descent line never re-meets the lower curve (its slope
  exceeds 1 everywhere); the construction reports this as a
  :class:`ConstructionError` at the s_k root.

All schedule arithmetic is in log coordinates; breakpoints reach
exp(1000) within a handful of cycles.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    BracketError,
    bisect_increasing,
    expand_bracket_increasing,
    logsubexp,
)
from .young1d import Piece, PiecewiseYoungFn1D, PowerFn, PowerLogFn

__all__ = [
    "ConstructionError",
    "CertificateError",
    "CycleRecord",
    "CertificateRecord",
    "TripleBuild",
    "tangent_point",
    "next_breakpoint",
    "build_triple",
    "incomparability_certificate",
    "certificate_margin",
    "envelope_report",
]

MANEUVER_MIN_LOGT = float(np.log(2.0))  # tangent feasibility needs t > e-1
LOG_GRID_STEP = 2.0**-10  # breakpoints snap up to this log grid
MAX_CYCLES = 12


class ConstructionError(RuntimeError):
    def __init__(self, message, cycle=None):
        super().__init__(message if cycle is None else f"cycle {cycle}: {message}")
        self.cycle = cycle


class CertificateError(AssertionError):
    """A constructed certificate margin came out negative."""


def _snap_up(logt):
    return float(np.ceil(logt / LOG_GRID_STEP) * LOG_GRID_STEP)


@dataclass
class CycleRecord:
    k: int
    logt: float  # cycle start t_k
    logtau: float  # maneuver launch point (== logt except possibly k = 0)
    logh: float  # tangency point
    logs: float  # line re-meets the lower curve
    logt_next: float
    heavy_index: int  # stored index (0-based) on the upper curve at t_{k+1}
    permutation: tuple  # stored indices playing (role1, role2, role3)
    log_margin: float = np.nan


@dataclass
class CertificateRecord:
    cycle: int
    heavy_index: int
    logt_next: float
    log_margin: float


@dataclass
class TripleBuild:
    p: float
    alpha: float
    cycles: int
    phi: tuple  # three PiecewiseYoungFn1D
    schedule: list
    lower: PowerFn = field(default=None)
    upper: PowerLogFn = field(default=None)

    def to_json_dict(self):
        return {
            "p": self.p,
            "alpha": self.alpha,
            "cycles": self.cycles,
            "phi": [f.to_json_dict() for f in self.phi],
            "schedule": [
                {
                    "k": r.k,
                    "logt": r.logt,
                    "logtau": r.logtau,
                    "logh": r.logh,
                    "logs": r.logs,
                    "logt_next": r.logt_next,
                    "heavy_index": r.heavy_index,
                    "permutation": list(r.permutation),
                    "log_margin": r.log_margin,
                }
                for r in self.schedule
            ],
        }

    @classmethod
    def from_json_dict(cls, data):
        phi = tuple(PiecewiseYoungFn1D.from_json_dict(d) for d in data["phi"])
        schedule = [
            CycleRecord(
                k=r["k"],
                logt=r["logt"],
                logtau=r["logtau"],
                logh=r["logh"],
                logs=r["logs"],
                logt_next=r["logt_next"],
                heavy_index=r["heavy_index"],
                permutation=tuple(r["permutation"]),
                log_margin=r.get("log_margin", np.nan),
            )
            for r in data["schedule"]
        ]
        build = cls(
            p=data["p"],
            alpha=data["alpha"],
            cycles=data["cycles"],
            phi=phi,
            schedule=schedule,
        )
        build.lower = PowerFn(build.p)
        build.upper = PowerLogFn(build.p, build.alpha)
        return build

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def schedule_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(
                ["k", "logt_k", "logh_k", "logs_k", "logt_next", "heavy_index", "log_margin"]
            )
            for r in self.schedule:
                w.writerow(
                    [
                        r.k,
                        repr(r.logt),
                        repr(r.logh),
                        repr(r.logs),
                        repr(r.logt_next),
                        r.heavy_index + 1,
                        repr(r.log_margin),
                    ]
                )


# ---------------------------------------------------------------------------
# schedule steps


def tangent_point(logt_k, p, alpha, rtol=1e-12):
    """Tangency point h and the tangent-line piece launched from (t_k, lo(t_k)).

    Solves hi(h) - hi'(h) (h - t_k) = lo(t_k) for h > t_k, a strictly
    decreasing left side, by monotone bracket expansion in log h and
    bisection.  Requires lo(t_k) <= hi(t_k); otherwise no tangent from the
    launch point exists and a :class:`ConstructionError` is raised.

    Returns ``(logh, line)`` with ``line`` a linear :class:`Piece` anchored
    at the launch point whose slope is hi'(h).
    """
    lower = PowerFn(p)
    upper = PowerLogFn(p, alpha)
    target = lower.log_value(logt_k)
    if upper.log_value(logt_k) < target:
        raise ConstructionError(
            f"tangent infeasible at logt={logt_k:.6g}: upper curve below lower"
        )

    def gap(logh):
        # log[hi'(h) (h - t_k) + lo(t_k)] - log hi(h); increasing in logh
        spent = np.logaddexp(
            upper.log_derivative(logh) + logsubexp(logh, logt_k), target
        )
        return spent - upper.log_value(logh)

    try:
        lo, hi = expand_bracket_increasing(gap, logt_k + 1e-9, step=0.5)
        logh = bisect_increasing(gap, lo, hi, rtol=rtol)
    except BracketError as exc:
        raise ConstructionError(f"tangent bracket not found: {exc}") from exc
    line = Piece.linear(
        log_slope=upper.log_derivative(logh),
        anchor_logt=logt_k,
        anchor_logf=target,
    )
    return logh, line


def _line_meets_lower(line, p, logh, rtol=1e-12):
    """First s > h with line(s) = lo(s); the line sits above lo on (t_k, s)."""
    lower = PowerFn(p)

    def gap(logs):
        return lower.log_value(logs) - line.log_value(logs)

    try:
        lo, hi = expand_bracket_increasing(gap, logh + 1e-9, step=0.5)
        return bisect_increasing(gap, lo, hi, rtol=rtol)
    except BracketError as exc:
        raise ConstructionError(
            f"descent line never re-meets the lower curve (p == 1?): {exc}"
        ) from exc


def next_breakpoint(logs_k, k, p, alpha):
    """First breakpoint after cycle k, snapped up to the log grid.

    The growth condition is log(t+1)**alpha >= 2 (k+1) k**(p+1); the
    2(k+1) factor over the minimal k**(p+1) needed for a bare certificate
    makes every margin equal log(k+1) when the condition binds, hence
    positive and strictly increasing in k.
    """
    floor_logt = max(np.log(k + 1.0), logs_k + LOG_GRID_STEP)
    if k > 0:
        rhs = 2.0 * (k + 1.0) * float(k) ** (p + 1.0)
        log_tp1 = rhs ** (1.0 / alpha)  # log(t+1) >= this
        # log t from log(t+1): t = exp(R) - 1
        growth_logt = log_tp1 + float(np.log1p(-np.exp(-log_tp1)))
        floor_logt = max(floor_logt, growth_logt)
    return _snap_up(floor_logt)


def _roles_for(heavy):
    """Stored indices playing (role1, role2, role3); role3 is the leader."""
    if heavy == 2:
        return (0, 1, 2)
    if heavy == 1:
        return (2, 0, 1)
    return (1, 2, 0)


def build_triple(p, alpha, cycles):
    """Run the inductive construction for the given number of cycles.

    Root-finding failures surface as :class:`ConstructionError` carrying
    the cycle index.  The returned build holds the three functions, the
    full schedule with certificate margins, and the reference curves.
    """
    if p < 1.0 or alpha <= 0.0:
        raise ValueError("need p >= 1 and alpha > 0")
    if not 0 <= cycles <= MAX_CYCLES:
        raise ValueError(f"cycles must lie in [0, {MAX_CYCLES}]")

    lower = PowerFn(p)
    upper = PowerLogFn(p, alpha)
    pieces = [[Piece.power(p)], [Piece.power(p)], [Piece.powerlog(p, alpha)]]
    breaks = [[], [], []]
    heavy = 2
    logt = 0.0  # t_0 = 1
    schedule = []

    def append_piece(idx, from_logt, piece):
        breaks[idx].append(from_logt)
        pieces[idx].append(piece)

    for k in range(cycles):
        roles = _roles_for(heavy)
        r1, r2, r3 = roles
        logtau = max(logt, MANEUVER_MIN_LOGT)
        try:
            logh, line = tangent_point(logtau, p, alpha)
            logs = _line_meets_lower(line, p, logh)
        except ConstructionError as exc:
            raise ConstructionError(str(exc), cycle=k) from exc
        logt_next = next_breakpoint(logs, k, p, alpha)
        if not (logt <= logtau < logh < logs < logt_next):
            raise ConstructionError(
                f"schedule not increasing: {logt}, {logtau}, {logh}, {logs}, {logt_next}",
                cycle=k,
            )
        # climber: lower curve -> line -> upper curve
        append_piece(r2, logtau, line)
        append_piece(r2, logh, Piece.powerlog(p, alpha))
        # leader: upper curve -> line -> lower curve
        append_piece(r3, logh, line)
        append_piece(r3, logs, Piece.power(p))
        # role1 stays on the lower curve: no new pieces
        margin = certificate_margin(upper, lower, lower, k, logt_next, p)
        schedule.append(
            CycleRecord(
                k=k,
                logt=logt,
                logtau=logtau,
                logh=logh,
                logs=logs,
                logt_next=logt_next,
                heavy_index=r2,
                permutation=roles,
                log_margin=margin,
            )
        )
        heavy = r2
        logt = logt_next

    phi = tuple(
        PiecewiseYoungFn1D(
            pieces[i],
            breaks[i],
            trace={"stored_index": i, "p": p, "alpha": alpha, "cycles": cycles},
        )
        for i in range(3)
    )
    return TripleBuild(
        p=p, alpha=alpha, cycles=cycles, phi=phi, schedule=schedule, lower=lower, upper=upper
    )


# ---------------------------------------------------------------------------
# certificates


def certificate_margin(heavy_fn, light_a, light_b, k, logt_next, p=None):
    """Log margin of  heavy(t_{k+1}) >= k [light_a + light_b](k t_{k+1}).

    The lights are evaluated as the cycle leaves them: on the lower curve,
    extended past t_{k+1} by the same formula.  k = 0 has an empty right
    side and gets margin +inf.
    """
    lhs = heavy_fn.log_value(logt_next)
    if k == 0:
        return float(np.inf)
    logk = float(np.log(k))
    arg = logk + logt_next
    rhs = logk + np.logaddexp(light_a.log_value(arg), light_b.log_value(arg))
    return float(lhs - rhs)


def incomparability_certificate(build, require_nonnegative=True):
    """Per-cycle certificate records for a finished build.

    With at least three cycles every stored index holds the leading
    position somewhere, so all six pairwise domination directions are
    blocked by some certificate.  A negative margin indicates a
    construction bug and raises :class:`CertificateError` unless
    ``require_nonnegative`` is off.
    """
    if build.cycles < 3:
        raise ValueError("need K >= 3 so each index leads at least once")
    records = []
    for rec in build.schedule:
        if rec.k == 0:
            continue
        margin = certificate_margin(
            build.upper, build.lower, build.lower, rec.k, rec.logt_next
        )
        if require_nonnegative and margin < 0.0:
            raise CertificateError(
                f"certificate violated at cycle {rec.k}: margin {margin:.3g}"
            )
        records.append(
            CertificateRecord(
                cycle=rec.k,
                heavy_index=rec.heavy_index,
                logt_next=rec.logt_next,
                log_margin=margin,
            )
        )
    return records


def envelope_report(build, n_samples=1000, logt_lo=-3.0, logt_hi=None):
    """Check min/max of the triple against the two reference envelopes.

    The reference curves cross at t = e-1 (below it the upper curve runs
    under the power curve), so the envelopes are the pointwise min and max
    of the two reference formulas.  Beyond the crossing this is exactly
    "min is the power curve, max is the log-weighted curve".
    """
    if logt_hi is None:
        logt_hi = build.schedule[-1].logt_next + 2.0 if build.schedule else 6.0
    logts = np.linspace(logt_lo, logt_hi, n_samples)
    vals = np.stack([f.log_value(logts) for f in build.phi])
    tri_min, tri_max = vals.min(axis=0), vals.max(axis=0)
    ref_lo = build.lower.log_value(logts)
    ref_hi = build.upper.log_value(logts)
    env_min = np.minimum(ref_lo, ref_hi)
    env_max = np.maximum(ref_lo, ref_hi)
    tol = 1e-9
    min_err = float(np.max(np.abs(tri_min - env_min)))
    max_err = float(np.max(np.abs(tri_max - env_max)))
    inside = bool(
        np.all(vals >= env_min[None, :] - tol) and np.all(vals <= env_max[None, :] + tol)
    )
    return {
        "min_matches_lower_envelope": min_err <= tol,
        "max_matches_upper_envelope": max_err <= tol,
        "all_between_envelopes": inside,
        "min_log_error": min_err,
        "max_log_error": max_err,
        "samples": int(n_samples),
    }
