"""
Continuity experiments for the L_p Gaussian Minkowski problem.

Two families are supported:

* measure continuity -- a fixed body ``K0`` is described by its measure
  ``mu0``; seeded perturbations ``mu_i`` of size ``delta_i`` are solved and
  the solutions compared with ``K0``;
* exponent continuity -- the measure ``mu = S_{p0}(K0, .)`` is held fixed
  while the exponent ``p_i`` approaches ``p0``.

Weak convergence of measures is proxied by a fixed family of Lipschitz test
functions (:class:`WeakDistanceRule`).
"""

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .convex import Polytope, as_polytope, hausdorff_distance, max_radial
from .errors import DomainError, SolverError
from .gaussian import SphereMeasure, gaussian_volume, lp_surface_measure
from .solver import solve_discrete
from .sphere import build_grid

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "index",
    "delta_or_p",
    "weak_distance",
    "hausdorff_distance",
    "gauss_volume",
    "max_radial",
    "iterations",
)


# --------------------------------------------------------------------------
# weak distance


def _hinge_directions(dim, count):
    if dim == 2:
        t = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack((np.cos(t), np.sin(t)))
    return np.array(build_grid(3, count).nodes)


@dataclass(frozen=True)
class WeakDistanceRule:
    """
    Finite test family: the constant 1, the coordinates ``u_j``, the products
    ``u_j u_k`` (j <= k) and the hinges ``(u . d)_+`` for fixed directions ``d``.

    ``distance(mu, nu)`` is the largest absolute difference of integrals over
    the family.
    """

    dim: int = 2
    hinge_count: int = 16
    products: bool = True

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"unsupported dimension {self.dim}")
        if self.hinge_count < 0:
            raise ValueError("hinge_count must be nonnegative")

    @property
    def hinges(self):
        return _hinge_directions(self.dim, self.hinge_count) if self.hinge_count else np.zeros((0, self.dim))

    def features(self, u):
        """Values of every test function at the rows of ``u``, shape (N, F)."""
        u = np.asarray(u, dtype=float)
        cols = [np.ones(len(u)), *u.T]
        if self.products:
            for j in range(self.dim):
                for k in range(j, self.dim):
                    cols.append(u[:, j] * u[:, k])
        cols.extend(np.maximum(u @ self.hinges.T, 0.0).T)
        return np.column_stack(cols)

    def moments(self, mu):
        return mu.masses @ self.features(mu.directions)

    def distance(self, mu, nu):
        if mu.dim != self.dim or nu.dim != self.dim:
            raise ValueError(f"dimension mismatch: rule {self.dim}, measures {mu.dim} and {nu.dim}")
        return float(np.max(np.abs(self.moments(mu) - self.moments(nu))))

    def to_dict(self):
        return asdict(self)


def weak_distance(mu, nu, rule=None):
    """Weak-convergence proxy between two measures on the same sphere."""
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    rule = rule or WeakDistanceRule(mu.dim)
    return rule.distance(mu, nu)


# --------------------------------------------------------------------------
# records


@dataclass
class ExperimentRecord:
    index: int
    delta_or_p: float
    weak_distance: float
    hausdorff_distance: float
    gauss_volume: float
    max_radial: float
    iterations: int
    min_support: float
    residual: float = 0.0
    solution: Polytope = field(default=None, repr=False, compare=False)

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


def _record(ctx, index, param, weak, body, K0, report, grid):
    body = as_polytope(body)
    return ExperimentRecord(
        index=index,
        delta_or_p=float(param),
        weak_distance=float(weak),
        hausdorff_distance=hausdorff_distance(body, K0, grid),
        gauss_volume=float(report.gauss_volume),
        max_radial=max_radial(body)[0],
        iterations=int(report.iterations),
        # the inradius about the origin; for a polytope the smallest active support number
        min_support=float(np.min(body.support_numbers[body.active])),
        residual=float(report.residual),
        solution=body,
    )


def _threads():
    try:
        return max(1, int(os.environ.get("GMINK_THREADS", "1")))
    except ValueError:
        return 1


def _run_all(jobs, func):
    """Evaluate ``func(i, job)`` for each job in order; failures carry the index."""

    def wrapped(item):
        i, job = item
        try:
            return func(i, job)
        except SolverError as exc:
            exc.record_index = i
            exc.args = (f"record {i}: {exc.args[0] if exc.args else exc}",)
            raise

    items = list(enumerate(jobs))
    n = _threads()
    if n == 1 or len(items) < 2:
        return [wrapped(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(wrapped, items))


# --------------------------------------------------------------------------
# measure perturbations


def _rotate(u, angles, axes):
    """Rotate unit vectors by ``angles`` (n = 2) or about the unit ``axes`` (n = 3)."""
    if u.shape[1] == 2:
        c, s = np.cos(angles), np.sin(angles)
        return np.column_stack((c * u[:, 0] - s * u[:, 1], s * u[:, 0] + c * u[:, 1]))
    # Rodrigues with axes orthogonal to u
    v = np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * np.cross(axes, u)
    return v / np.linalg.norm(v, axis=1)[:, None]


@dataclass(frozen=True)
class JitterPattern:
    """A fixed seeded pattern in [-1, 1]; ``apply(mu, delta)`` scales it by ``delta``."""

    mass: np.ndarray
    angle: np.ndarray
    axes: np.ndarray

    @classmethod
    def draw(cls, mu, seed):
        rng = np.random.default_rng(seed)
        m = len(mu)
        mass = rng.uniform(-1.0, 1.0, m)
        angle = rng.uniform(-1.0, 1.0, m)
        axes = np.zeros((m, mu.dim))
        if mu.dim == 3:
            w = rng.normal(size=(m, 3))
            w -= np.sum(w * mu.directions, axis=1)[:, None] * mu.directions
            axes = w / np.linalg.norm(w, axis=1)[:, None]
        return cls(mass, angle, axes)

    def apply(self, mu, delta):
        if delta == 0:
            return mu
        masses = mu.masses * (1.0 + delta * self.mass)
        dirs = _rotate(mu.directions, delta * self.angle, self.axes)
        return SphereMeasure(mu.dim, dirs, masses)


def perturb_measure(mu, delta, seed=0):
    """``mu`` with masses scaled by ``1 + delta * e_j`` and directions turned by
    ``delta * a_j`` radians, for a seeded pattern ``e, a`` in [-1, 1]."""
    return JitterPattern.draw(mu, seed).apply(mu, delta)


def halving_schedule(start=0.1, stop=1e-4):
    """``start, start/2, ...`` down to the first value not above ``stop``."""
    out = [float(start)]
    while out[-1] > stop:
        out.append(out[-1] / 2.0)
    return out


def run_measure_continuity(ctx, K0, p, schedule, cfg=None, seed=0, rule=None, grid=None):
    """
    Solve the perturbed problems ``S_p(K_i) = mu_i`` with
    ``mu_i = perturb(S_p(K0), delta_i)`` and compare each ``K_i`` with ``K0``.

    A single jitter pattern (drawn from ``seed``) is used for the whole
    schedule, so the ``mu_i`` lie on one ray through ``mu0``.
    """
    K0 = as_polytope(K0)
    if p < 1:
        raise ValueError("p must be at least 1")
    if any(d < 0 for d in schedule):
        raise ValueError("perturbation sizes must be nonnegative")
    if gaussian_volume(ctx, K0) < 0.5 - 1e-9:
        raise DomainError("reference body has Gaussian volume below 1/2")
    rule = rule or WeakDistanceRule(ctx.dim)
    grid = grid or build_grid(ctx.dim)
    mu0 = lp_surface_measure(ctx, K0, p)
    pattern = JitterPattern.draw(mu0, seed)

    def one(i, delta):
        mu = pattern.apply(mu0, delta)
        rep = solve_discrete(ctx, mu, p, cfg)
        rec = _record(ctx, i, delta, rule.distance(mu, mu0), rep.solution, K0, rep, grid)
        log.info("delta=%g d_H=%.3e weak=%.3e", delta, rec.hausdorff_distance, rec.weak_distance)
        return rec

    return _run_all(schedule, one)


def run_p_continuity(ctx, K0, p0, schedule, cfg=None, rule=None, grid=None):
    """
    Hold ``mu = S_{p0}(K0, .)`` fixed and solve ``S_{p_i}(K_i) = mu``.

    The recorded weak distance compares ``S_{p0}(K_i)`` with ``mu``.
    """
    K0 = as_polytope(K0)
    if p0 < 1:
        raise ValueError("p0 must be at least 1")
    for q in schedule:
        if not 1.0 <= q < 2.0 * p0:
            raise ValueError(f"exponent {q} outside [1, 2 p0)")
    if gaussian_volume(ctx, K0) < 0.5 - 1e-9:
        raise DomainError("reference body has Gaussian volume below 1/2")
    rule = rule or WeakDistanceRule(ctx.dim)
    grid = grid or build_grid(ctx.dim)
    mu = lp_surface_measure(ctx, K0, p0)

    def one(i, q):
        rep = solve_discrete(ctx, mu, q, cfg)
        weak = rule.distance(lp_surface_measure(ctx, rep.solution, p0), mu)
        return _record(ctx, i, q, weak, rep.solution, K0, rep, grid)

    return _run_all(schedule, one)


def uniform_measure(dim, total, resolution=None):
    """Equal atoms at the nodes of the default grid with the given total."""
    grid = build_grid(dim, resolution)
    w = np.asarray(grid.weights)
    return SphereMeasure(dim, np.array(grid.nodes), total * w / w.sum())


# --------------------------------------------------------------------------
# reporting


def _fmt(x):
    return str(x) if isinstance(x, (int, np.integer)) else f"{float(x):.17g}"


def summarize(records):
    out = {"records": len(records)}
    if not records:
        return out
    for name in CSV_COLUMNS[2:]:
        vals = [getattr(r, name) for r in records]
        out[name] = {"min": min(vals), "max": max(vals), "final": vals[-1]}
    out["min_support"] = min(r.min_support for r in records)
    out["delta_or_p"] = [r.delta_or_p for r in records]
    return out


def summary_path(destination):
    root, _ = os.path.splitext(os.fspath(destination))
    return root + ".summary.json"


def emit_report(records, destination, extra=None):
    """
    Write one CSV row per record plus ``<stem>.summary.json``.

    Returns the pair of paths written.
    """
    destination = os.fspath(destination)
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in sorted(records, key=lambda r: r.index):
            writer.writerow([_fmt(v) for v in rec.row()])
    summary = summarize(sorted(records, key=lambda r: r.index))
    if extra:
        summary.update(extra)
    spath = summary_path(destination)
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return destination, spath
