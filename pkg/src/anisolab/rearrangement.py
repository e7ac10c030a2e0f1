"""Sublevel-set geometry: areas by polar ray casting and the radial rearrangement.

Sublevel sets of a convex function vanishing at the origin are convex and
star-shaped about 0, so the boundary is a single radius per angle and the
area is the polar integral (1/2) * integral of rho(theta)^2.  Radii come
from bisection on log Phi along each ray, which keeps the machinery exact
at levels whose radii overflow doubles.

The radial rearrangement maps each level t to the radius s(t) of the disk
with the same sublevel area; the resulting monotone table is the
isotropic function with matching sublevel measures, feeding the Sobolev
conjugate pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RangeError, bisect_increasing_arrays
from .tables import MonotoneTable
from .young1d import inverse1d_log

__all__ = [
    "LevelSetProfile",
    "ray_radii_log",
    "log_sublevel_area",
    "sublevel_area",
    "phi_circ",
    "verify_levelset_bounds",
    "verify_growth_envelope",
]

LOG_PI = float(np.log(np.pi))


def ray_radii_log(phi, log_t, n_angles, rtol=1e-10):
    """log rho(theta_i) with Phi(rho * omega) = t, per uniform angle."""
    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    ux, uy = np.cos(theta), np.sin(theta)

    def f(logr):
        return phi.log_value_dir(ux, uy, logr) - log_t

    lo = np.full(n_angles, -700.0)
    hi = np.full(n_angles, max(1.0, log_t))
    for _ in range(64):
        bad = f(hi) < 0.0
        if not np.any(bad):
            break
        hi = np.where(bad, hi + 100.0, hi)
    else:
        raise ValueError("ray not bracketed; Phi not coercive along some direction")
    if np.any(f(lo) > 0.0):
        raise ValueError("level too small to bracket above rho = exp(-700)")
    return bisect_increasing_arrays(f, lo, hi, rtol=rtol)


def log_sublevel_area(phi, log_t, n_angles=2048, rtol=1e-10, adaptive=True):
    """log of the sublevel-set area at level t, angular quadrature refined
    until the relative change under angle doubling falls below 1e-6."""

    def one(m):
        logr = ray_radii_log(phi, log_t, m, rtol=rtol)
        # log( (1/2) * sum rho_i^2 * dtheta )
        two = 2.0 * logr
        mx = float(np.max(two))
        s = mx + np.log(np.sum(np.exp(two - mx)))
        return s + np.log(np.pi / m)

    area = one(n_angles)
    if adaptive:
        for _ in range(4):
            refined = one(2 * n_angles)
            if abs(refined - area) <= 1e-6:
                return refined
            n_angles *= 2
            area = refined
    return area


def sublevel_area(phi, t, n_angles=2048, rtol=1e-10, adaptive=True):
    """|{Phi <= t}| as a float; RangeError past double range."""
    if t <= 0.0:
        raise ValueError("level must be positive")
    la = log_sublevel_area(phi, float(np.log(t)), n_angles, rtol=rtol, adaptive=adaptive)
    if la > 709.0:
        raise RangeError("area exceeds double range; use log_sublevel_area")
    return float(np.exp(la))


@dataclass
class LevelSetProfile:
    log_t: np.ndarray
    log_area: np.ndarray


def level_profile(phi, log_t_grid, n_angles=2048, adaptive=False):
    las = np.array([log_sublevel_area(phi, lt, n_angles, adaptive=adaptive) for lt in log_t_grid])
    return LevelSetProfile(log_t=np.asarray(log_t_grid, dtype=float), log_area=las)


def phi_circ(phi, t_grid, n_angles=2048, adaptive=False):
    """Radial rearrangement table: s_j = sqrt(A(t_j)/pi), value t_j."""
    log_t = np.log(np.asarray(t_grid, dtype=float))
    prof = level_profile(phi, log_t, n_angles=n_angles, adaptive=adaptive)
    if np.any(np.diff(prof.log_area) <= 0.0):
        raise RuntimeError("sublevel areas not strictly increasing")
    log_s = 0.5 * (prof.log_area - LOG_PI)
    return MonotoneTable(log_s, log_t)


def verify_levelset_bounds(build, t_list, n_angles=2048):
    """Sandwich check for the constructed sum at the given levels.

    lower:  (pi/4) * inv_hi(t/3)^2
    upper:  (4p/(p+1)) * hi'(inv_hi(t))^(1/p) * inv_hi(t)^(1/p + 1)

    Everything is compared in logs; the report records both bounds, the
    area, and the tightness ratios.
    """
    from .aniso2d import constructed_triple_fn

    phi2d = constructed_triple_fn(build)
    hi = build.upper
    p = build.p
    rows = []
    for t in t_list:
        log_t = float(np.log(t))
        log_area = log_sublevel_area(phi2d, log_t, n_angles, adaptive=False)
        log_tau3 = inverse1d_log(hi, log_t - np.log(3.0))
        log_lower = np.log(np.pi / 4.0) + 2.0 * log_tau3
        log_tau = inverse1d_log(hi, log_t)
        log_upper = (
            np.log(4.0 * p / (p + 1.0))
            + hi.log_derivative(log_tau) / p
            + (1.0 / p + 1.0) * log_tau
        )
        rows.append(
            {
                "t": float(t),
                "log_area": float(log_area),
                "log_lower": float(log_lower),
                "log_upper": float(log_upper),
                "lower_ok": bool(log_lower <= log_area + 1e-9),
                "upper_ok": bool(log_area <= log_upper + 1e-9),
                "lower_slack_nats": float(log_area - log_lower),
                "upper_slack_nats": float(log_upper - log_area),
            }
        )
    return {"ok": all(r["lower_ok"] and r["upper_ok"] for r in rows), "rows": rows}


def _envelope_constant(build, log_t_grid, profile):
    p, a = build.p, build.alpha
    lt = np.asarray(log_t_grid, dtype=float)
    la = profile.log_area
    loglog = np.log(np.log1p(np.exp(lt)))  # log log(t+1), t moderate here
    log_low_model = (2.0 / p) * lt - (2.0 * a / p) * loglog
    log_up_model = (2.0 / p) * lt - (a / p) * loglog
    c_low = float(np.max(log_low_model - la))  # need A >= model / C
    c_up = float(np.max(la - log_up_model))  # need A <= C * model
    return float(np.exp(max(c_low, c_up, 0.0)))


def verify_growth_envelope(build, t_list, n_angles=2048):
    """Smallest C with  model_low/C <= A(t) <= C * model_up  over the list,
    plus the same fit on a doubled log-range for the stability check."""
    from .aniso2d import constructed_triple_fn

    phi2d = constructed_triple_fn(build)
    log_t = np.log(np.asarray(t_list, dtype=float))
    prof = level_profile(phi2d, log_t, n_angles=n_angles)
    c_fit = _envelope_constant(build, log_t, prof)
    log_t2 = np.linspace(log_t[0], 2.0 * log_t[-1] - log_t[0], 2 * len(log_t))
    prof2 = level_profile(phi2d, log_t2, n_angles=n_angles)
    c_fit2 = _envelope_constant(build, log_t2, prof2)
    return {
        "C": c_fit,
        "C_doubled_range": c_fit2,
        "relative_change": abs(c_fit2 - c_fit) / c_fit,
        "stable_within_20pct": bool(abs(c_fit2 - c_fit) <= 0.2 * c_fit),
    }
