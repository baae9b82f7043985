"""
Convex bodies with the origin in their interior.

Two representations are used.  A :class:`Polytope` is a Wulff shape
``{x : x.u_i <= f_i}`` with its facet geometry worked out; it is the
workhorse of every measure and solver routine.  A :class:`SupportFunction`
holds samples of a smooth support function on a circle grid and is used
where the smooth formulas (Monge-Ampere density, smooth Gaussian volume)
are wanted.

Facet enumeration goes through the dual point set ``u_i / f_i``: a
constraint is irredundant exactly when its dual point is a vertex of the
convex hull of all dual points, and every hull facet corresponds to a
primal vertex.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateBodyError, HemisphereError, NotSupportFunctionError
from .sphere import SphericalGrid, build_grid, in_closed_hemisphere

GEOM_TOL = 1e-10
UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Polytope:
    """
    Intersection of the half-spaces ``x . normals[i] <= support_numbers[i]``.

    ``facets[i]`` holds the boundary polygon of facet i in counter-clockwise
    order (two endpoints when dim = 2).  A redundant constraint keeps its
    entry in ``normals`` and ``support_numbers`` but is flagged in
    ``redundant``; its facet degenerates to the vertex touching the
    supporting line/plane.
    """

    dim: int
    normals: np.ndarray
    support_numbers: np.ndarray
    vertices: np.ndarray
    facets: tuple
    redundant: np.ndarray

    def __post_init__(self):
        for arr in (self.normals, self.support_numbers, self.vertices, self.redundant):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.support_numbers)

    @cached_property
    def support_values(self):
        """Actual support function at the constraint normals (<= support_numbers)."""
        return support_of(self, self.normals)

    @property
    def active(self):
        return ~self.redundant

    def facet_sizes(self):
        """Length (dim = 2) or area (dim = 3) of every facet; zero when redundant."""
        sizes = np.zeros(len(self))
        for i, poly in enumerate(self.facets):
            if self.redundant[i]:
                continue
            if self.dim == 2:
                sizes[i] = np.linalg.norm(poly[1] - poly[0])
            else:
                sizes[i] = _polygon_area_3d(poly, self.normals[i])
        return sizes

    def scaled(self, factor):
        return wulff_shape(self.dim, self.normals, self.support_numbers * factor)


@dataclass(frozen=True, eq=False)
class SupportFunction:
    """Samples ``values[k] = h(u_k)`` of a support function on a grid."""

    grid: SphericalGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.grid),):
            raise ValueError("support values must match the grid")
        if not np.all(values > 0):
            raise DegenerateBodyError("support values must be strictly positive")
        object.__setattr__(self, "values", values)
        values.setflags(write=False)

    @property
    def dim(self):
        return self.grid.dim

    @cached_property
    def polytope(self):
        """Wulff shape of the samples (circumscribed polytope)."""
        return wulff_shape(self.dim, self.grid.nodes, self.values)

    def defect(self):
        """Largest gap between the samples and the support of their Wulff shape.

        Zero (up to rounding) for genuine support functions; positive values
        flag samples that are not sublinear.
        """
        return float(np.max(self.values - self.polytope.support_values))

    def derivatives(self):
        """First and second angular derivatives by periodic central differences."""
        self._require_circle()
        h = self.values
        dt = self.grid.spacing
        hp = (np.roll(h, -1) - np.roll(h, 1)) / (2.0 * dt)
        hpp = (np.roll(h, -1) - 2.0 * h + np.roll(h, 1)) / dt ** 2
        return hp, hpp

    def boundary_points(self):
        """Points ``h u + h' u_perp`` of the boundary with outer normal u."""
        self._require_circle()
        hp, _ = self.derivatives()
        u = self.grid.nodes
        perp = np.column_stack((-u[:, 1], u[:, 0]))
        return self.values[:, None] * u + hp[:, None] * perp

    def curvature_radius(self, tol=1e-8):
        """``h'' + h``; raises when clearly negative (not a support function)."""
        _, hpp = self.derivatives()
        rho = hpp + self.values
        if np.min(rho) < -tol:
            k = int(np.argmin(rho))
            raise NotSupportFunctionError(f"h'' + h = {rho[k]:.3e} < 0 at node {k}")
        return np.clip(rho, 0.0, None)

    def _require_circle(self):
        if self.dim != 2:
            raise ValueError("smooth support-function formulas are implemented for n = 2")


@dataclass(frozen=True, eq=False)
class RadialFunction:
    grid: SphericalGrid
    values: np.ndarray


# --------------------------------------------------------------------------
# construction


def wulff_shape(dim, normals, f_values):
    """
    Polytope ``{x : x . u_i <= f_i for all i}``.

    Raises
    ------
    HemisphereError
        The normals lie in a closed hemisphere, so the intersection is unbounded.
    DegenerateBodyError
        Some ``f_i <= 0``; the origin would not be interior.
    """
    u = np.array(normals, dtype=float, ndmin=2)
    f = np.array(f_values, dtype=float).reshape(-1)
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}")
    if u.shape != (len(f), dim):
        raise ValueError(f"normals have shape {u.shape}, expected ({len(f)}, {dim})")
    norms = np.linalg.norm(u, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError("normals must be unit vectors")
    u = u / norms[:, None]
    if not np.all(np.isfinite(f)):
        raise ValueError("support numbers must be finite")
    if np.any(f <= 0.0):
        raise DegenerateBodyError("all support numbers must be positive (origin interior)")
    if in_closed_hemisphere(u):
        raise HemisphereError("normals lie in a closed hemisphere; the Wulff shape is unbounded")

    if dim == 2:
        vertices, facets, redundant = _wulff_2d(u, f)
    else:
        vertices, facets, redundant = _wulff_3d(u, f)
    return Polytope(dim, u, f, vertices, tuple(facets), redundant)


def _hull_2d(points):
    """Indices of the strict convex hull vertices, counter-clockwise (monotone chain)."""
    order = np.lexsort((points[:, 1], points[:, 0])).tolist()
    xs = points[:, 0].tolist()
    ys = points[:, 1].tolist()

    def turns_left(o, a, b):
        ax, ay = xs[a] - xs[o], ys[a] - ys[o]
        bx, by = xs[b] - xs[o], ys[b] - ys[o]
        cross = ax * by - ay * bx
        return cross > 1e-13 * ((ax * ax + ay * ay) * (bx * bx + by * by)) ** 0.5

    def chain(indices):
        out = []
        for i in indices:
            while len(out) >= 2 and not turns_left(out[-2], out[-1], i):
                out.pop()
            out.append(i)
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    return lower[:-1] + upper[:-1]


def _lines_meet(ui, fi, uj, fj):
    """Intersection points of the line pairs ``x.ui = fi``, ``x.uj = fj`` (row-wise)."""
    det = ui[:, 0] * uj[:, 1] - ui[:, 1] * uj[:, 0]
    x = (fi * uj[:, 1] - fj * ui[:, 1]) / det
    y = (fj * ui[:, 0] - fi * uj[:, 0]) / det
    return np.column_stack((x, y))


def _wulff_2d(u, f):
    dual = u / f[:, None]
    hull = _hull_2d(dual)
    # rotate so the chain starts at the smallest angle (deterministic layout)
    ang = np.arctan2(u[hull, 1], u[hull, 0]) % (2.0 * np.pi)
    start = int(np.argmin(ang))
    hull = np.array(hull[start:] + hull[:start])
    nxt = np.roll(hull, -1)
    verts = _lines_meet(u[hull], f[hull], u[nxt], f[nxt])
    m = len(f)
    redundant = np.ones(m, dtype=bool)
    redundant[hull] = False
    ends = np.empty((m, 2, 2))
    ends[hull, 0] = np.roll(verts, 1, axis=0)
    ends[hull, 1] = verts
    red = np.flatnonzero(redundant)
    if len(red):
        top = verts[np.argmax(verts @ u[red].T, axis=0)]
        ends[red, 0] = top
        ends[red, 1] = top
    return verts, list(ends), redundant


def _dedupe_points(points, tol):
    """Drop points within ``tol * (1 + |x|)`` of an earlier one, keeping order."""
    from scipy.spatial import cKDTree

    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return points
    radius = tol * (1.0 + np.linalg.norm(points, axis=1))
    near = cKDTree(points).query_ball_point(points, radius)
    keep = np.ones(len(points), dtype=bool)
    for i, group in enumerate(near):
        if keep[i]:
            for j in group:
                if j > i:
                    keep[j] = False
    return points[keep]


def _order_polygon(points, normal):
    centre = points.mean(axis=0)
    e1 = points[0] - centre
    if np.linalg.norm(e1) < 1e-15:
        return points
    e1 = e1 - np.dot(e1, normal) * normal
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    rel = points - centre
    ang = np.arctan2(rel @ e2, rel @ e1)
    return points[np.argsort(ang)]


def _polygon_area_3d(poly, normal):
    if len(poly) < 3:
        return 0.0
    total = np.zeros(3)
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        total += np.cross(a, b)
    return 0.5 * abs(float(np.dot(total, normal)))


def _wulff_3d(u, f):
    from scipy.spatial import ConvexHull, QhullError

    dual = u / f[:, None]
    try:
        hull = ConvexHull(dual)
    except QhullError as exc:
        raise DegenerateBodyError(f"facet enumeration failed: {exc}") from exc
    eq = hull.equations
    if np.max(eq[:, -1]) >= 0.0:
        raise HemisphereError("origin is not interior to the dual hull")
    primal = -eq[:, :3] / eq[:, 3:4]
    vertices = _dedupe_points(primal, 1e-9)

    m = len(f)
    redundant = np.ones(m, dtype=bool)
    redundant[hull.vertices] = False
    incident = [[] for _ in range(m)]
    for s, simplex in enumerate(hull.simplices):
        for i in simplex:
            incident[i].append(s)
    facets = [None] * m
    for i in range(m):
        if redundant[i]:
            top = vertices[int(np.argmax(vertices @ u[i]))]
            facets[i] = top[None, :]
            continue
        pts = _dedupe_points(primal[incident[i]], 1e-9)
        if len(pts) < 3:
            redundant[i] = True
            facets[i] = pts[:1]
            continue
        facets[i] = _order_polygon(pts, u[i])
    return vertices, facets, redundant


# --------------------------------------------------------------------------
# evaluation


def as_polytope(body):
    if isinstance(body, Polytope):
        return body
    if isinstance(body, SupportFunction):
        return body.polytope
    raise TypeError(f"expected Polytope or SupportFunction, got {type(body).__name__}")


def support_of(body, u):
    """Support function ``max_{x in K} x . u`` for one direction or an (N, dim) array."""
    verts = as_polytope(body).vertices
    u = np.asarray(u, dtype=float)
    vals = verts @ u.T
    return np.max(vals, axis=0)


def radial_of(body, u):
    """Radial function ``max{lam > 0 : lam u in K}``, vectorised over rows of ``u``."""
    poly = as_polytope(body)
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    cos = u @ poly.normals.T
    with np.errstate(divide="ignore"):
        ratio = np.where(cos > GEOM_TOL, poly.support_numbers[None, :] / cos, np.inf)
    rho = ratio.min(axis=1)
    if np.any(~np.isfinite(rho)):
        raise DegenerateBodyError("no facet faces the requested direction; body is inconsistent")
    return float(rho[0]) if single else rho


def support_on(body, grid):
    """Support values at the grid nodes (samples reused when they live on that grid)."""
    if isinstance(body, SupportFunction) and _same_grid(body.grid, grid):
        return np.asarray(body.values)
    return support_of(body, grid.nodes)


def radial_function(body, grid):
    return RadialFunction(grid, radial_of(body, grid.nodes))


def _same_grid(a, b):
    return a is b or (a.dim == b.dim and a.resolution == b.resolution)


def _shared_grid(a, b, grid):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if grid is None:
        grid = build_grid(a.dim)
    return grid


def hausdorff_distance(a, b, grid=None):
    """Sup-norm gap of support functions over the nodes of a shared grid."""
    grid = _shared_grid(a, b, grid)
    return float(np.max(np.abs(support_on(a, grid) - support_on(b, grid))))


def radial_distance(a, b, grid=None):
    grid = _shared_grid(a, b, grid)
    return float(np.max(np.abs(radial_of(a, grid.nodes) - radial_of(b, grid.nodes))))


def max_radial(body):
    """Circumradius about the origin and a direction attaining it."""
    if isinstance(body, SupportFunction) and body.dim == 2:
        pts = body.boundary_points()
    else:
        pts = as_polytope(body).vertices
    norms = np.linalg.norm(pts, axis=1)
    k = int(np.argmax(norms))
    return float(norms[k]), pts[k] / norms[k]


def polar_body(body):
    """Polar body; its facets are normal to the vertices of ``body``."""
    poly = as_polytope(body)
    if np.min(poly.support_values) <= GEOM_TOL:
        raise DegenerateBodyError("origin is not interior; polar body is unbounded")
    v = poly.vertices
    r = np.linalg.norm(v, axis=1)
    return wulff_shape(poly.dim, v / r[:, None], 1.0 / r)


def body_normals(body):
    if isinstance(body, SupportFunction):
        return np.asarray(body.grid.nodes)
    return np.asarray(body.normals)


def unique_directions(*arrays, decimals=12):
    stacked = np.vstack(arrays)
    _, idx = np.unique(np.round(stacked, decimals) + 0.0, axis=0, return_index=True)
    return stacked[np.sort(idx)]


def lp_combination(p, s, K, t, L, grid=None):
    """
    L_p Minkowski combination: Wulff shape of ``(s h_K^p + t h_L^p)^(1/p)``.

    The Wulff shape is taken over the union of both bodies' normals and the
    working grid.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if K.dim != L.dim:
        raise ValueError("dimension mismatch")
    if grid is None:
        grid = build_grid(K.dim)
    dirs = unique_directions(body_normals(K), body_normals(L), grid.nodes)
    combo = s * support_of(K, dirs) ** p + t * support_of(L, dirs) ** p
    if np.min(combo) <= 0.0:
        raise DegenerateBodyError("combined support function is not positive everywhere")
    return wulff_shape(K.dim, dirs, combo ** (1.0 / p))


def lebesgue_volume(body):
    """Lebesgue measure, from the cone decomposition ``sum h_i |F_i| / n``."""
    poly = as_polytope(body)
    return float(np.sum(poly.support_numbers * poly.facet_sizes()) / poly.dim)


# --------------------------------------------------------------------------
# standard bodies


def square(half_width=1.0):
    normals = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    return wulff_shape(2, normals, np.full(4, float(half_width)))


def box(lower, upper):
    """Axis-aligned box ``prod [lower_j, upper_j]`` (must contain the origin)."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    dim = len(lower)
    eye = np.eye(dim)
    normals = np.vstack((eye, -eye))
    return wulff_shape(dim, normals, np.concatenate((upper, -lower)))


def cube(half_width=1.0, dim=3):
    return box(np.full(dim, -half_width), np.full(dim, half_width))


def ball_polytope(dim, radius=1.0, resolution=None):
    """Circumscribed polytope of ``radius * B_n`` with facet normals on a grid."""
    grid = build_grid(dim, resolution)
    return wulff_shape(dim, grid.nodes, np.full(len(grid), float(radius)))


def ball_support(radius=1.0, resolution=None):
    grid = build_grid(2, resolution)
    return SupportFunction(grid, np.full(len(grid), float(radius)))


def random_polytope(rng, dim=2, n_facets=(5, 12), support_range=(0.4, 2.0), max_radius=None):
    """
    Random Wulff shape with its redundant constraints removed.

    Normals are redrawn until they surround the origin; with ``max_radius``
    bodies reaching outside ``max_radius * B_n`` are redrawn as well.
    """
    while True:
        m = int(rng.integers(n_facets[0], n_facets[1] + 1))
        u = rng.normal(size=(m, dim))
        u /= np.linalg.norm(u, axis=1)[:, None]
        if in_closed_hemisphere(u, tol=1e-3):
            continue
        h = rng.uniform(*support_range, size=m)
        body = wulff_shape(dim, u, h)
        if body.redundant.any():
            body = wulff_shape(dim, u[body.active], h[body.active])
        if max_radius is not None and max_radial(body)[0] > max_radius:
            continue
        return body


# --------------------------------------------------------------------------
# JSON


def body_to_dict(body):
    poly = as_polytope(body)
    return {
        "dim": poly.dim,
        "normals": poly.normals.tolist(),
        "support_numbers": poly.support_numbers.tolist(),
    }


def body_from_dict(data):
    try:
        dim = int(data["dim"])
        normals = np.asarray(data["normals"], dtype=float)
        h = np.asarray(data["support_numbers"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed body record: {exc}") from exc
    if normals.ndim != 2 or normals.shape[1] != dim:
        raise ValueError("normals must be a list of dim-vectors")
    bad = np.flatnonzero(np.abs(np.linalg.norm(normals, axis=1) - 1.0) > UNIT_TOL)
    if len(bad):
        raise ValueError(f"normal {int(bad[0])} is not a unit vector")
    return wulff_shape(dim, normals, h)
