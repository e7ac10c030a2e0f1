"""Measure-data experiments: mollified solves, truncation bounds, uniqueness.

The operator is the variational one, A = grad Phi, so each approximate
problem -div A(grad u) = h_s with zero boundary is the Euler-Lagrange
equation of a convex energy and is solved by the shared descent engine.
A measure is atoms plus a density, optionally with an explicit
(f, G) decomposition whose action f - div G is discretely exact against
the forward-difference pairing.

The uniqueness experiment drives two genuinely different approximation
sequences (kernel family and flux-truncation scheme differ) at geometric
scales toward the same measure and reports two trend curves: the L1
distance between same-stage solutions and the monotonicity-gap integral

    int_{|T_l uA - T_l uB| <= t} (A(grad uA) - A(grad uB)) . grad(uA - uB)

whose integrand is nonnegative cellwise for convex Phi.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .descent import minimize_projected
from .gridfield import GridField2D, divergence_of, forward_gradient
from .sobolev import luxemburg_norm_gradient, modular_scalar, modular_vector

__all__ = [
    "DiscreteMeasure",
    "ApproxSequence",
    "SolveReport",
    "truncate",
    "mollify_measure",
    "solve_weak",
    "euler_lagrange_residual",
    "truncation_bounds_check",
    "modular_distance_scalar",
    "modular_distance_vector",
    "uniqueness_experiment",
]


@dataclass
class DiscreteMeasure:
    """Atoms (x, y, weight) plus an optional density and (f, G) split.

    ``flux`` is a pair of cell arrays (Gx, Gy) matched to the forward
    gradient, so mu = f + div G holds exactly in the discrete pairing
    sum(mu phi) = sum(f phi) - sum(G . grad phi).
    """

    atoms: list = field(default_factory=list)
    density: GridField2D | None = None
    flux: tuple | None = None

    def grid(self):
        if self.density is not None:
            return self.density
        raise ValueError("measure carries no grid; supply one explicitly")

    def node_values(self, base=None):
        """Node density: atoms binned to nearest node plus the density."""
        g = base or self.grid()
        vals = np.zeros_like(g.values)
        n, h = g.n, g.h
        for x, y, w in self.atoms:
            i = int(round((x - g.x0) / h))
            j = int(round((y - g.y0) / h))
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"atom at ({x}, {y}) outside the grid")
            vals[i, j] += w / (h * h)
        if self.density is not None:
            vals = vals + self.density.values
        return vals

    def total_variation(self, base=None):
        g = base or self.grid()
        tv = sum(abs(w) for _, _, w in self.atoms)
        if self.density is not None:
            tv += float(np.sum(np.abs(self.density.values))) * g.cell_area
        return tv

    def action(self, test):
        """sum(mu * phi) h^2 against a test GridField2D."""
        vals = self.node_values(test)
        return float(np.sum(vals * test.values)) * test.cell_area

    def decomposition_action(self, test):
        """sum(f phi) h^2 - sum(G . grad phi) h^2 from the explicit split."""
        if self.flux is None:
            raise ValueError("measure has no (f, G) decomposition")
        f_vals = self.density.values if self.density is not None else 0.0
        out = float(np.sum(f_vals * test.values)) * test.cell_area
        gx, gy = forward_gradient(test.values, test.h)
        out -= float(np.sum(self.flux[0] * gx + self.flux[1] * gy)) * test.cell_area
        # atoms sit outside (f, G); add their direct action
        for x, y, w in self.atoms:
            i = int(round((x - test.x0) / test.h))
            j = int(round((y - test.y0) / test.h))
            out += w * test.values[i, j]
        return out


def truncate(f, k):
    """Symmetric clamp to [-k, k], nodewise."""
    if k <= 0.0:
        raise ValueError("truncation level must be positive")
    out = f.copy()
    out.values = np.clip(f.values, -k, k)
    return out


def _kernel_profile(kind, r2_over_eps2):
    if kind == "gaussian":
        return np.exp(-4.0 * r2_over_eps2)  # std = eps/(2 sqrt 2): support ~ eps
    if kind == "bump":
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(
                r2_over_eps2 < 1.0,
                np.exp(1.0 - 1.0 / np.maximum(1e-300, 1.0 - r2_over_eps2)),
                0.0,
            )
    raise ValueError(f"unknown kernel {kind!r}")


def mollify_measure(measure, eps, kernel, base, smooth_density=False):
    """Smooth data field approximating the measure at scale eps.

    Atoms become normalized kernel blobs (discrete mass exactly the atom
    weight; blobs clipped by the boundary are renormalized with a
    warning).  The density passes through untouched unless
    ``smooth_density`` is set, in which case it is convolved with the same
    kernel (that is what an approximation sequence of smooth data does).
    """
    if eps < 2.0 * base.h:
        raise ValueError("mollification scale must be at least two grid cells")
    n, h = base.n, base.h
    ax = base.axis()
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    out = np.zeros((n, n))
    for x, y, w in measure.atoms:
        r2 = ((X - x) ** 2 + (Y - y) ** 2) / (eps * eps)
        blob = _kernel_profile(kernel, r2)
        support_radius = eps
        if (
            x - support_radius < ax[0]
            or x + support_radius > ax[-1]
            or y - support_radius < ax[0]
            or y + support_radius > ax[-1]
        ):
            warnings.warn("atom support clipped at the boundary; blob renormalized")
        mass = float(np.sum(blob)) * h * h
        out += (w / mass) * blob
    if measure.density is not None:
        if smooth_density:
            from numpy.lib.stride_tricks import sliding_window_view

            kr = int(np.ceil(eps / h)) + 1
            off = np.arange(-kr, kr + 1) * h
            OX, OY = np.meshgrid(off, off, indexing="ij")
            patch = _kernel_profile(kernel, (OX**2 + OY**2) / (eps * eps))
            patch = patch / (float(np.sum(patch)) * h * h)
            padded = np.pad(measure.density.values, kr, mode="constant")
            windows = sliding_window_view(padded, patch.shape)
            out += np.einsum("ijkl,kl->ij", windows, patch) * h * h
        else:
            out += measure.density.values
    return GridField2D(out, h, base.x0, base.y0)


# ---------------------------------------------------------------------------
# weak solves


def solve_weak(phi, f_field, flux=None, rel_tol=1e-9, window=50, max_iter=120_000, u0=None):
    """Minimizer of sum(Phi(grad u) - f u + G . grad u) h^2, zero boundary."""
    from .capacity import NonDoublingError, needs_preconditioner, secant_preconditioner

    if not phi.is_doubling():
        raise NonDoublingError("weak solver requires doubling growth")
    h = f_field.h
    n = f_field.n
    area = h * h
    f_vals = f_field.values
    gx_flux, gy_flux = (None, None) if flux is None else flux
    boundary = np.zeros((n, n), dtype=bool)
    boundary[0, :] = boundary[-1, :] = boundary[:, 0] = boundary[:, -1] = True

    def energy(u):
        gx, gy = forward_gradient(u, h)
        e = float(np.sum(phi.value(gx, gy))) - float(np.sum(f_vals * u))
        if gx_flux is not None:
            e += float(np.sum(gx_flux * gx + gy_flux * gy))
        return e * area

    def grad(u):
        gx, gy = forward_gradient(u, h)
        ax, ay = phi.grad(gx, gy)
        if gx_flux is not None:
            ax, ay = ax + gx_flux, ay + gy_flux
        return (-divergence_of(ax, ay, h, n) - f_vals) * area

    def project(u):
        u[boundary] = 0.0
        return u

    if u0 is None:
        u0 = np.zeros((n, n))
    res = minimize_projected(
        energy,
        grad,
        project,
        u0,
        rel_tol=rel_tol,
        window=window,
        max_iter=max_iter,
        precond=secant_preconditioner(phi, h) if needs_preconditioner(phi) else None,
    )
    out = GridField2D(res.u, h, f_field.x0, f_field.y0)
    out.iterations = res.iterations
    out.objective = res.objective
    return out


def euler_lagrange_residual(phi, u, f_field, flux=None):
    """Nodewise div A(grad u) + f on interior nodes (zero at the solution)."""
    gx, gy = forward_gradient(u.values, u.h)
    ax, ay = phi.grad(gx, gy)
    if flux is not None:
        ax, ay = ax + flux[0], ay + flux[1]
    r = divergence_of(ax, ay, u.h, u.n) + f_field.values
    return r[1:-1, 1:-1]


# ---------------------------------------------------------------------------
# diagnostics


def truncation_bounds_check(solutions, k_list, phi, stability=0.30):
    """Fit C0 = max_k |grad T_k u_s|_Phi / k per stage; flag instability.

    The verdict is ok when every stage constant sits within ``stability``
    of the median across stages.
    """
    table = []
    stage_c0 = []
    for s, u in enumerate(solutions):
        worst = 0.0
        for k in k_list:
            norm = luxemburg_norm_gradient(truncate(u, k), phi)
            table.append({"stage": s, "k": float(k), "norm": norm, "ratio": norm / k})
            worst = max(worst, norm / k)
        stage_c0.append(worst)
    med = float(np.median(stage_c0))
    ok = all(abs(c - med) <= stability * med for c in stage_c0)
    return {"ok": ok, "C0": float(max(stage_c0)), "per_stage": stage_c0, "table": table}


def modular_distance_scalar(u, v, fn, lambda_grid, tol=1e-3):
    """Smallest grid lambda with sum fn(|u-v|/lambda) h^2 <= tol."""
    diff = np.abs(u.values - v.values)
    for lam in sorted(lambda_grid):
        if modular_scalar(diff / lam, fn, u.cell_area) <= tol:
            return float(lam)
    return float("inf")


def modular_distance_vector(gx, gy, phi, cell_area, lambda_grid, tol=1e-3):
    for lam in sorted(lambda_grid):
        if modular_vector(gx / lam, gy / lam, phi, cell_area) <= tol:
            return float(lam)
    return float("inf")


@dataclass
class ApproxSequence:
    kernel: str
    scales: list
    flux_scheme: str = "none"  # "none" | "sup-truncation" | "smooth-cutoff"


@dataclass
class SolveReport:
    l1_gaps: list
    gap_integrals: list
    f_l1_errors: dict
    stages: int
    solutions_a: list
    solutions_b: list
    truncation: dict | None = None
    flux_modular_distances: dict | None = None

    @property
    def limit_candidate(self):
        return self.solutions_a[-1]

    def gaps_decreasing(self):
        return bool(np.all(np.diff(self.l1_gaps) < 0.0))

    def gap_integrals_decreasing(self):
        return bool(np.all(np.diff(self.gap_integrals) < 0.0))


def _stage_flux(measure, scheme, stage_index, base):
    if measure.flux is None or scheme == "none":
        return None
    gx, gy = measure.flux
    if scheme == "sup-truncation":
        level = 2.0 ** (stage_index + 1) * max(
            1e-12, float(np.median(np.abs(np.concatenate([gx.ravel(), gy.ravel()]))))
        )
        return np.clip(gx, -level, level), np.clip(gy, -level, level)
    if scheme == "smooth-cutoff":
        n1 = gx.shape[0]
        ax = np.linspace(0.0, 1.0, n1)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        w = 1.0 / (stage_index + 2.0)
        cut = np.clip(np.minimum.reduce([X, Y, 1 - X, 1 - Y]) / w, 0.0, 1.0)
        return gx * cut, gy * cut
    raise ValueError(f"unknown flux scheme {scheme!r}")


def _gap_integral(phi, ua, ub, t, l, h):
    ta, tb = np.clip(ua.values, -l, l), np.clip(ub.values, -l, l)
    sel = np.abs(ta - tb)[:-1, :-1] <= t  # cell flag at the base node
    gxa, gya = forward_gradient(ua.values, h)
    gxb, gyb = forward_gradient(ub.values, h)
    axa, aya = phi.grad(gxa, gya)
    axb, ayb = phi.grad(gxb, gyb)
    integrand = (axa - axb) * (gxa - gxb) + (aya - ayb) * (gya - gyb)
    if np.min(integrand) < -1e-12 * max(1.0, float(np.max(np.abs(integrand)))):
        raise AssertionError("monotonicity gap integrand went negative")
    return float(np.sum(integrand[sel])) * h * h


def uniqueness_experiment(
    phi,
    measure,
    seq_a,
    seq_b,
    base,
    gap_t=0.05,
    gap_l=1.0,
    rel_tol=1e-9,
    k_list=None,
    conj_phi=None,
    lambda_grid=(2.0**-12, 2.0**-8, 2.0**-4, 1.0, 16.0, 256.0),
):
    """Solve both approximation sequences and report the two trend curves.

    Preconditions checked numerically: each sequence's data converges to
    the measure's density part in L1, every stage's data mass stays below
    twice the measure's total variation, and when distinct flux stages are
    used with a supplied conjugate function their modular distances to the
    limit flux must not grow.  Raises on setup violations.
    """
    if len(seq_a.scales) != len(seq_b.scales):
        raise ValueError("sequences must share the stage count")
    stages = len(seq_a.scales)
    sols = {"a": [], "b": []}
    f_errors = {"a": [], "b": []}
    flux_dists = {"a": [], "b": []}
    target = measure.node_values(base)
    tv_bound = 2.0 * measure.total_variation(base) + 1e-12
    for name, seq in (("a", seq_a), ("b", seq_b)):
        prev = None
        for s, eps in enumerate(seq.scales):
            h_field = mollify_measure(measure, eps, seq.kernel, base, smooth_density=True)
            if float(np.sum(np.abs(h_field.values))) * base.cell_area > tv_bound:
                raise ValueError(f"sequence {name}: stage {s} mass exceeds 2 |mu|")
            flux = _stage_flux(measure, seq.flux_scheme, s, base)
            u = solve_weak(phi, h_field, flux=flux, rel_tol=rel_tol, u0=prev)
            sols[name].append(u)
            prev = u.values.copy()
            f_errors[name].append(
                float(np.sum(np.abs(h_field.values - target))) * base.cell_area
            )
            if flux is not None and conj_phi is not None:
                flux_dists[name].append(
                    modular_distance_vector(
                        flux[0] - measure.flux[0],
                        flux[1] - measure.flux[1],
                        conj_phi,
                        base.cell_area,
                        lambda_grid,
                    )
                )
        if stages >= 3 and not f_errors[name][-1] <= f_errors[name][0]:
            raise ValueError(f"sequence {name}: data does not approach the measure")
        if len(flux_dists[name]) >= 2 and flux_dists[name][-1] > flux_dists[name][0]:
            raise ValueError(f"sequence {name}: flux does not approach modularly")
    l1_gaps = [
        float(np.sum(np.abs(ua.values - ub.values))) * base.cell_area
        for ua, ub in zip(sols["a"], sols["b"])
    ]
    gaps = [
        _gap_integral(phi, ua, ub, gap_t, gap_l, base.h)
        for ua, ub in zip(sols["a"], sols["b"])
    ]
    report = SolveReport(
        l1_gaps=l1_gaps,
        gap_integrals=gaps,
        f_l1_errors=f_errors,
        stages=stages,
        solutions_a=sols["a"],
        solutions_b=sols["b"],
        flux_modular_distances=flux_dists if any(flux_dists.values()) else None,
    )
    if k_list is not None:
        report.truncation = truncation_bounds_check(sols["a"], k_list, phi)
    return report
