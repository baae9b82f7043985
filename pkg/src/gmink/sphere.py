"""
Direction sets and quadrature rules on the unit circle and the 2-sphere.

Every integral over the sphere in this package is a weighted sum over the
nodes of a :class:`SphericalGrid`.  For n = 2 the nodes are equally spaced
angles (the periodic trapezoid rule); for n = 3 they form a Fibonacci
spiral with equal weights.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_RESOLUTION = {2: 720, 3: 2000}
GOLDEN = (1.0 + 5.0 ** 0.5) / 2.0


def sphere_area(dim):
    """Surface measure of S^{dim-1}."""
    if dim == 2:
        return 2.0 * np.pi
    if dim == 3:
        return 4.0 * np.pi
    raise ValueError(f"unsupported dimension {dim}")


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Quadrature nodes ``nodes`` (N, dim) with positive ``weights`` (N,)."""

    dim: int
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.weights)

    @property
    def angles(self):
        """Polar angles of the nodes (n = 2 only)."""
        if self.dim != 2:
            raise ValueError("angles are defined for circle grids only")
        return np.arctan2(self.nodes[:, 1], self.nodes[:, 0]) % (2.0 * np.pi)

    @property
    def spacing(self):
        if self.dim != 2:
            raise ValueError("uniform spacing is defined for circle grids only")
        return 2.0 * np.pi / self.resolution


def build_grid(dim, resolution=None):
    """
    Deterministic quadrature grid on S^{dim-1}.

    Parameters
    ----------
    dim : int
        2 or 3.
    resolution : int, optional
        Number of nodes, at least 4.  Defaults to 720 (circle) or 2000 (sphere).
    """
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}; expected 2 or 3")
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[dim]
    resolution = int(resolution)
    if resolution < 4:
        raise ValueError(f"resolution {resolution} too small; need at least 4")

    if dim == 2:
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        nodes = np.column_stack((np.cos(theta), np.sin(theta)))
        # exact axis values so that symmetric test bodies hit their normals
        nodes[np.abs(nodes) < 1e-15] = 0.0
        weights = np.full(resolution, 2.0 * np.pi / resolution)
    else:
        k = np.arange(resolution, dtype=float) + 0.5
        z = 1.0 - 2.0 * k / resolution
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = 2.0 * np.pi * k / GOLDEN
        nodes = np.column_stack((r * np.cos(phi), r * np.sin(phi), z))
        nodes /= np.linalg.norm(nodes, axis=1)[:, None]
        weights = np.full(resolution, 4.0 * np.pi / resolution)
    return SphericalGrid(dim, resolution, nodes, weights)


def integrate(grid, f):
    """
    Quadrature sum ``sum_k w_k f(u_k)``.

    ``f`` is either a callable mapping the (N, dim) node array to N values,
    or an array of N values already sampled at the nodes.
    """
    values = f(grid.nodes) if callable(f) else f
    values = np.asarray(values, dtype=float)
    if values.shape != grid.weights.shape:
        raise ValueError(f"integrand has shape {values.shape}, expected {grid.weights.shape}")
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ValueError(f"integrand is not finite at node {bad}")
    return float(np.dot(grid.weights, values))


def in_closed_hemisphere(directions, tol=1e-12):
    """
    True when all ``directions`` lie in some closed hemisphere.

    Equivalently the origin is not an interior point of their convex hull.
    """
    u = np.asarray(directions, dtype=float)
    if u.ndim != 2 or len(u) == 0:
        return True
    dim = u.shape[1]
    if len(u) <= dim:
        return True
    if dim == 2:
        ang = np.sort(np.arctan2(u[:, 1], u[:, 0]))
        gaps = np.diff(np.concatenate((ang, [ang[0] + 2.0 * np.pi])))
        return bool(gaps.max() >= np.pi - tol)
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(u)
    except QhullError:
        return True
    # equations: normal . x + offset <= 0 inside; origin interior iff all offsets < 0
    return bool(np.max(hull.equations[:, -1]) >= -tol)
