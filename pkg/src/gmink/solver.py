"""
Discrete L_p Gaussian Minkowski problem.

Given atoms ``(u_i, mu_i)`` and ``p >= 1`` we look for support numbers
``h`` such that the polytope ``[h]`` with facet normals ``u_i`` has
``S_{p,gamma}([h], {u_i}) = mu_i`` for every i and Gaussian volume at
least 1/2.  The system is solved by damped Newton iteration started from a
large ball; iterates whose Gaussian volume drops below ``branch_floor``
are rejected by the line search, which keeps the iteration on the
large-volume branch where the solution is unique.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn
from scipy.special import ndtr

from .convex import Polytope, body_from_dict, body_to_dict, max_radial, support_of, wulff_shape
from .errors import (
    BranchViolation,
    DomainError,
    FacetVanished,
    InfeasibleHemisphere,
    NoConvergence,
    NoRoot,
    NoValidBranch,
)
from .gaussian import H_FLOOR, SQRT2PI, gaussian_volume, lp_surface_measure
from .sphere import in_closed_hemisphere

log = logging.getLogger(__name__)

HALF = 0.5
BRANCH_SLACK = 1e-9


@dataclass
class SolverConfig:
    residual_tol: float = 1e-9
    max_iterations: int = 200
    damping: float = 1.0
    initialization: str = "large_ball"
    initial_radius: float = 3.0
    max_initial_radius: float = 6.0
    initial_body: Polytope | None = None
    jacobian: str = "auto"
    fd_step: float = 1e-6
    branch_floor: float = 0.45

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.initialization not in ("large_ball", "given_body"):
            raise ValueError(f"unknown initialization {self.initialization!r}")
        if self.initialization == "given_body" and self.initial_body is None:
            raise ValueError("given_body initialization needs initial_body")
        if self.jacobian not in ("auto", "finite_difference", "n2_analytic"):
            raise ValueError(f"unknown jacobian {self.jacobian!r}")


@dataclass
class SolverReport:
    solution: Polytope
    residual: float
    gauss_volume: float
    iterations: int
    p: float
    branch_note: str = ""
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "p": self.p,
            "residual": self.residual,
            "gauss_volume": self.gauss_volume,
            "iterations": self.iterations,
            "branch_note": self.branch_note,
            "inradius": float(np.min(self.solution.support_numbers[self.solution.active])),
            "circumradius": max_radial(self.solution)[0],
            "solution": body_to_dict(self.solution),
            "trace": self.trace,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            solution=body_from_dict(data["solution"]),
            residual=float(data["residual"]),
            gauss_volume=float(data["gauss_volume"]),
            iterations=int(data["iterations"]),
            p=float(data["p"]),
            branch_note=data.get("branch_note", ""),
            trace=list(data.get("trace", [])),
        )


# --------------------------------------------------------------------------
# residual and Jacobian


def _masses(ctx, body, p):
    return lp_surface_measure(ctx, body, p).masses


def _clamped(dim, dirs, h):
    """Wulff shape with redundant support numbers lowered onto the body."""
    body = wulff_shape(dim, dirs, h)
    if body.redundant.any():
        h = np.where(body.redundant, np.minimum(h, body.support_values), h)
        body = wulff_shape(dim, dirs, h)
    return body, h


def _analytic_jacobian_2d(dirs, h, p):
    """
    d(mass_i)/d(h_j) for a planar polytope whose facets are all (at least
    weakly) active, neighbours taken in angular order.
    """
    m = len(h)
    order = np.argsort(np.arctan2(dirs[:, 1], dirs[:, 0]))
    ang = np.arctan2(dirs[order, 1], dirs[order, 0])
    hs = h[order]
    nxt = np.roll(np.arange(m), -1)
    prv = np.roll(np.arange(m), 1)
    alpha = (np.roll(ang, -1) - ang) % (2.0 * np.pi)
    beta = (ang - np.roll(ang, 1)) % (2.0 * np.pi)
    s_b = (hs[nxt] - hs * np.cos(alpha)) / np.sin(alpha)
    s_a = (hs * np.cos(beta) - hs[prv]) / np.sin(beta)
    c = np.exp(-0.5 * hs * hs) / SQRT2PI
    phi_b = np.exp(-0.5 * s_b * s_b) / SQRT2PI
    phi_a = np.exp(-0.5 * s_a * s_a) / SQRT2PI
    gauss = c * np.clip(ndtr(s_b) - ndtr(s_a), 0.0, None)

    d_self = -hs * gauss + c * (-phi_b / np.tan(alpha) - phi_a / np.tan(beta))
    d_next = c * phi_b / np.sin(alpha)
    d_prev = c * phi_a / np.sin(beta)
    scale = hs ** (1.0 - p)
    d_self = scale * d_self + (1.0 - p) * hs ** (-p) * gauss

    jac = np.zeros((m, m))
    idx = np.arange(m)
    np.add.at(jac, (idx, idx), d_self)
    np.add.at(jac, (idx, nxt), scale * d_next)
    np.add.at(jac, (idx, prv), scale * d_prev)
    # back to the caller's ordering
    inv = np.empty(m, dtype=int)
    inv[order] = idx
    return jac[np.ix_(inv, inv)]


def _fd_jacobian(ctx, dirs, h, p, base, step):
    m = len(h)
    jac = np.zeros((m, m))
    for i in range(m):
        eps = step * h[i]
        hh = h.copy()
        hh[i] -= eps
        body = wulff_shape(ctx.dim, dirs, hh)
        jac[:, i] = (base - _masses(ctx, body, p)) / eps
    return jac


def _jacobian(ctx, cfg, dirs, h, p, masses):
    kind = cfg.jacobian
    if kind == "auto":
        kind = "n2_analytic" if ctx.dim == 2 else "finite_difference"
    if kind == "n2_analytic":
        if ctx.dim != 2:
            raise ValueError("analytic Jacobian is available for n = 2 only")
        return _analytic_jacobian_2d(dirs, h, p)
    return _fd_jacobian(ctx, dirs, h, p, masses, cfg.fd_step)


# --------------------------------------------------------------------------
# Newton


def _newton(ctx, dirs, target, p, h0, cfg):
    h = np.asarray(h0, dtype=float).copy()
    body, h = _clamped(ctx.dim, dirs, h)
    masses = _masses(ctx, body, p)
    gam = gaussian_volume(ctx, body)
    trace = []
    rejected_low = 0
    floor = H_FLOOR if p > 1 else 0.0

    for it in range(cfg.max_iterations + 1):
        resid = masses - target
        res = float(np.max(np.abs(resid)))
        trace.append({"residual": res, "gauss_volume": gam, "max_radial": max_radial(body)[0]})
        if res <= cfg.residual_tol:
            body, h, gam, res = _polish(ctx, cfg, dirs, target, p, body, h, gam, res)
            trace[-1].update(residual=res, gauss_volume=gam, max_radial=max_radial(body)[0])
            return body, h, gam, it, trace, "converged", rejected_low
        if it == cfg.max_iterations:
            break

        jac = _jacobian(ctx, cfg, dirs, h, p, masses)
        try:
            step = np.linalg.solve(jac, resid)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, resid, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            step = np.linalg.lstsq(jac, resid, rcond=None)[0]

        alpha = cfg.damping
        accepted = False
        while alpha >= 1e-12:
            trial = h - alpha * step
            if np.min(trial) <= floor:
                alpha *= 0.5
                continue
            try:
                t_body, trial = _clamped(ctx.dim, dirs, trial)
            except DomainError:
                alpha *= 0.5
                continue
            t_gam = gaussian_volume(ctx, t_body)
            if t_gam < cfg.branch_floor:
                rejected_low += 1
                alpha *= 0.5
                continue
            t_masses = _masses(ctx, t_body, p)
            t_res = float(np.max(np.abs(t_masses - target)))
            if t_res <= (1.0 - 1e-4 * alpha) * res:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return body, h, gam, it, trace, "stalled", rejected_low
        h, body, masses, gam = trial, t_body, t_masses, t_gam

    return body, h, gam, cfg.max_iterations, trace, "max_iterations", rejected_low


def _polish(ctx, cfg, dirs, target, p, body, h, gam, res, steps=3):
    """Extra full Newton steps after the tolerance is met, kept while they help.

    Facets far from the origin carry little mass, so a residual at the
    tolerance can still leave their support numbers loose.
    """
    for _ in range(steps):
        masses = _masses(ctx, body, p)
        jac = _jacobian(ctx, cfg, dirs, h, p, masses)
        try:
            trial = h - np.linalg.solve(jac, masses - target)
            t_body, trial = _clamped(ctx.dim, dirs, trial)
        except (np.linalg.LinAlgError, DomainError):
            break
        t_res = float(np.max(np.abs(_masses(ctx, t_body, p) - target)))
        if not t_res < res:
            break
        h, body, res = trial, t_body, t_res
        gam = gaussian_volume(ctx, body)
    return body, h, gam, res


def _validate_measure(mu):
    if mu.kind != "discrete":
        raise ValueError("the solver expects a discrete measure")
    dirs = np.asarray(mu.directions, dtype=float)
    if len(mu) < mu.dim + 1 or in_closed_hemisphere(dirs):
        raise InfeasibleHemisphere("measure atoms lie in a closed hemisphere; no bounded body exists")
    if np.any(mu.masses <= 0.0):
        raise DomainError("all atom masses must be positive")
    gram = dirs @ dirs.T
    np.fill_diagonal(gram, -1.0)
    if np.max(gram) > 1.0 - 1e-12:
        raise DomainError("atom directions must be distinct")
    return dirs


def solve_discrete(ctx, mu, p, cfg=None):
    """
    Find the polytope with ``S_{p,gamma}(K, .) = mu`` and ``gamma(K) >= 1/2``.

    Raises
    ------
    InfeasibleHemisphere
        Atoms lie in a closed hemisphere.
    BranchViolation
        Newton converged, but only to a body of Gaussian volume below 1/2.
    FacetVanished
        Converged with a facet that carries no mass.
    NoConvergence
        No start produced a converged iterate.
    """
    cfg = cfg or SolverConfig()
    if p < 1:
        raise ValueError("p must be at least 1")
    if mu.dim != ctx.dim:
        raise ValueError("measure and context dimensions differ")
    dirs = _validate_measure(mu)
    target = np.asarray(mu.masses)

    radii = np.arange(cfg.initial_radius, cfg.max_initial_radius + 1e-9, 1.0)
    starts = [(f"ball R0={r:g}", np.full(len(dirs), r)) for r in radii]
    if cfg.initialization == "given_body":
        # the ball starts remain as fallbacks
        starts.insert(0, ("given body", support_of(cfg.initial_body, dirs)))

    notes, low_branch, last = [], None, None
    for label, h0 in starts:
        body, h, gam, its, trace, status, rejected = _newton(ctx, dirs, target, p, h0, cfg)
        rep = SolverReport(body, trace[-1]["residual"], gam, its, p, "", trace)
        if rejected:
            notes.append(f"{label}: rejected {rejected} trial iterate(s) with gamma < {cfg.branch_floor}")
        last = rep
        if status != "converged":
            notes.append(f"{label}: {status} after {its} iterations (residual {rep.residual:.3e})")
            log.debug("start %s %s", label, status)
            continue
        if gam < HALF - BRANCH_SLACK:
            notes.append(f"{label}: converged to gamma = {gam:.6f} < 1/2")
            low_branch = rep
            continue
        if body.redundant.any():
            idx = int(np.flatnonzero(body.redundant)[0])
            rep.branch_note = "; ".join(notes)
            raise FacetVanished(f"facet {idx} is redundant at convergence", report=rep, index=idx)
        notes.append(f"{label}: converged, gamma = {gam:.6f}")
        rep.branch_note = "; ".join(notes)
        return rep

    if low_branch is None:
        # without the volume floor, look for the small-volume branch so the
        # failure can be reported as a branch violation rather than divergence
        label, h0 = starts[0]
        probe = replace(cfg, branch_floor=0.0)
        body, h, gam, its, trace, status, _ = _newton(ctx, dirs, target, p, h0, probe)
        if status == "converged" and gam < HALF - BRANCH_SLACK and not body.redundant.any():
            notes.append(f"{label} without volume floor: converged to gamma = {gam:.6f} < 1/2")
            low_branch = SolverReport(body, trace[-1]["residual"], gam, its, p, "", trace)

    if low_branch is not None:
        low_branch.branch_note = "; ".join(notes)
        raise BranchViolation(
            f"solution found only on the small-volume branch (gamma = {low_branch.gauss_volume:.6f})",
            report=low_branch,
        )
    last.branch_note = "; ".join(notes)
    raise NoConvergence("Newton iteration did not converge from any start", report=last)


def verify_solution(ctx, report, mu, p, facet_order=None):
    """Recompute the measure of a reported body (finer facet rule in 3-D) and
    summarise its deviation from ``mu``."""
    order = facet_order or 2 * ctx.facet_order
    masses = lp_surface_measure(ctx, report.solution, p, facet_order=order).masses
    diff = masses - np.asarray(mu.masses)
    gam = gaussian_volume(ctx, report.solution)
    return {
        "max_deviation": float(np.max(np.abs(diff))),
        "total_variation": float(np.sum(np.abs(diff))),
        "gauss_volume": gam,
        "branch_ok": bool(gam >= HALF - BRANCH_SLACK),
    }


# --------------------------------------------------------------------------
# rotationally symmetric case


class BallSolution(NamedTuple):
    radius: float
    note: dict


def ball_profile(r, p, dim):
    """Total L_p Gaussian surface measure of ``r B_n``: ``n w_n r^(n-p) e^(-r^2/2) / (2 pi)^(n/2)``."""
    c = 2.0 ** (1.0 - dim / 2.0) / gamma_fn(dim / 2.0)
    return c * r ** (dim - p) * np.exp(-0.5 * r * r)


def solve_ball(ctx, total_mass, p, dim):
    """
    Radii r with ``ball_profile(r) = total_mass``, selecting the one whose ball
    has Gaussian volume at least 1/2 (the larger one if both qualify).
    """
    if total_mass <= 0:
        raise ValueError("total mass must be positive")
    a = dim - p

    def g(r):
        return ball_profile(r, p, dim) - total_mass

    def upper_root(lo):
        hi = max(2.0 * lo, 1.0)
        while g(hi) > 0:
            hi *= 2.0
        return brentq(g, lo, hi, xtol=1e-15)

    if a > 0:
        peak = np.sqrt(a)
        top = ball_profile(peak, p, dim)
        if total_mass > top * (1.0 + 1e-12):
            raise NoRoot(f"total mass {total_mass} exceeds the profile maximum {top}")
        if abs(total_mass - top) <= 1e-12 * top:
            roots = [peak]
        else:
            roots = [brentq(g, 0.0, peak, xtol=1e-15), upper_root(peak)]
    elif a == 0:
        c0 = ball_profile(0.0, p, dim)
        if total_mass >= c0:
            raise NoRoot(f"total mass {total_mass} is not below the profile value {c0} at r = 0")
        roots = [upper_root(1e-300)]
    else:
        lo = 1.0
        while g(lo) < 0:
            lo *= 0.5
        roots = [upper_root(lo)]

    volumes = [ctx.ball_volume(r) for r in roots]
    valid = [r for r, v in zip(roots, volumes) if v >= HALF - BRANCH_SLACK]
    note = {
        "roots": [float(r) for r in roots],
        "gauss_volumes": [float(v) for v in volumes],
        "count": len(roots),
        "ambiguous": len(valid) > 1,
    }
    if not valid:
        raise NoValidBranch(f"no root has Gaussian volume >= 1/2 (roots {note['roots']})", roots=roots)
    r = max(valid)
    note["selected"] = float(r)
    return BallSolution(float(r), note)
