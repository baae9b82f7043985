"""
Gaussian volume and (L_p) Gaussian surface area measures.

For a polytope in the plane everything is closed form: facet masses are
differences of the normal CDF along each edge, and the Gaussian volume of
the cone over an edge is an Owen's T expression.  In three dimensions the
facet integrals use fan triangulation with a collapsed Gauss-Legendre rule,
and the volume is obtained from the divergence theorem applied to the
radial field ``x G(|x|) / |x|^3``, whose divergence is the Gaussian density.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import ndtr, owens_t

from .convex import Polytope, SupportFunction, as_polytope, lp_combination, support_of
from .errors import DegenerateBodyError, DomainError, HemisphereError
from .sphere import build_grid

SQRT2PI = np.sqrt(2.0 * np.pi)
H_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class GaussianContext:
    """
    Quadrature data shared by all Gaussian computations in one dimension.

    The radial rule is composite Gauss-Legendre on ``[0, 1]`` and gets
    rescaled to ``[0, rho]`` for each radial integral.
    """

    dim: int = 2
    r_max: float = 8.0
    panels: int = 8
    order: int = 16
    facet_order: int = 12
    _xi: np.ndarray = field(init=False, repr=False)
    _wi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"unsupported dimension {self.dim}")
        if self.r_max < 8.0:
            raise ValueError("r_max must be at least 8")
        x, w = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(0.0, 1.0, self.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        xi = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wi = (half[:, None] * w[None, :]).ravel()
        object.__setattr__(self, "_xi", xi)
        object.__setattr__(self, "_wi", wi)
        full = float(self.radial_integral(np.array([self.r_max]))[0])
        exact = 2.0 ** (self.dim / 2.0 - 1.0) * gamma_fn(self.dim / 2.0)
        if abs(full - exact) > 1e-10:
            raise ValueError(f"radial rule is too coarse: {full} vs {exact}")

    @property
    def normalization(self):
        return SQRT2PI ** (-self.dim)

    def radial_integral(self, rho):
        """``int_0^rho t^(n-1) exp(-t^2/2) dt`` for an array of radii."""
        rho = np.minimum(np.asarray(rho, dtype=float), self.r_max)
        t = rho[..., None] * self._xi
        vals = t ** (self.dim - 1) * np.exp(-0.5 * t * t)
        return rho * (vals @ self._wi)

    def ball_volume(self, radius):
        """Gaussian volume of ``radius * B_n``."""
        area = 2.0 * np.pi if self.dim == 2 else 4.0 * np.pi
        return float(self.normalization * area * self.radial_integral(np.array([radius]))[0])


def default_context(dim):
    return GaussianContext(dim=dim)


@dataclass(frozen=True, eq=False)
class SphereMeasure:
    """
    Finite Borel measure on the sphere as weighted atoms.

    ``kind`` is ``"discrete"`` for polytope facet measures and ``"grid"``
    when ``masses[k] = density(u_k) * w_k`` on a quadrature grid.
    """

    dim: int
    directions: np.ndarray
    masses: np.ndarray
    kind: str = "discrete"

    def __post_init__(self):
        u = np.array(self.directions, dtype=float, ndmin=2)
        m = np.array(self.masses, dtype=float).reshape(-1)
        if u.shape != (len(m), self.dim):
            raise ValueError("directions and masses do not match")
        if np.any(m < 0.0) or not np.all(np.isfinite(m)):
            raise ValueError("masses must be finite and nonnegative")
        object.__setattr__(self, "directions", u)
        object.__setattr__(self, "masses", m)
        u.setflags(write=False)
        m.setflags(write=False)

    def __len__(self):
        return len(self.masses)

    @property
    def total(self):
        return float(self.masses.sum())

    def integrate(self, f):
        """``int f dmu`` for a callable acting on an (N, dim) direction array."""
        return float(np.dot(self.masses, f(self.directions)))

    def hemisphere_witness(self, grid=None):
        """``min_u sum_j (u . v_j)_+ m_j`` over grid directions; positive when the
        measure is not concentrated on a closed hemisphere."""
        g, _ = cosine_lower_bound(self, 1.0, grid)
        return g

    def to_dict(self):
        return {
            "dim": self.dim,
            "atoms": [{"u": u.tolist(), "mass": float(m)} for u, m in zip(self.directions, self.masses)],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            dim = int(data["dim"])
            atoms = data["atoms"]
            u = np.array([a["u"] for a in atoms], dtype=float).reshape(len(atoms), dim)
            m = np.array([a["mass"] for a in atoms], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed measure record: {exc}") from exc
        bad = np.flatnonzero(np.abs(np.linalg.norm(u, axis=1) - 1.0) > 1e-9)
        if len(bad):
            raise ValueError(f"atom {int(bad[0])} direction is not a unit vector")
        return cls(dim, u, m)


# --------------------------------------------------------------------------
# quadrature helpers


def _normal_mass(a, b):
    """``Phi(b) - Phi(a)`` without cancellation in the upper tail."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.where(a > 0.0, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a))


def _edge_coordinates(poly):
    """Foot distance ``h`` and signed edge endpoints ``s_a <= s_b`` for every facet (n = 2)."""
    u = poly.normals
    tangent = np.column_stack((-u[:, 1], u[:, 0]))
    ends = np.array(poly.facets)
    s_a = np.einsum("ij,ij->i", ends[:, 0, :], tangent)
    s_b = np.einsum("ij,ij->i", ends[:, 1, :], tangent)
    h = np.where(poly.redundant, poly.support_values, poly.support_numbers)
    return h, s_a, s_b


def _triangle_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wts = np.outer(w, w) * xi
    # x = a (1 - xi) + b xi (1 - eta) + c xi eta, area element 2|T| xi
    coef = np.column_stack(((1.0 - xi).ravel(), (xi * (1.0 - eta)).ravel(), (xi * eta).ravel()))
    return coef, wts.ravel()


def facet_integrals(poly, func, order):
    """``int_{F_i} func(x) dA`` for every facet of a 3-polytope (zero when redundant)."""
    coef, wts = _triangle_rule(order)
    tris, owner = [], []
    for i, pts in enumerate(poly.facets):
        if poly.redundant[i] or len(pts) < 3:
            continue
        for k in range(1, len(pts) - 1):
            tris.append((pts[0], pts[k], pts[k + 1]))
            owner.append(i)
    out = np.zeros(len(poly))
    if not tris:
        return out
    tris = np.array(tris)
    area2 = np.linalg.norm(np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 1]), axis=1)
    pts = np.einsum("qk,tkd->tqd", coef, tris)
    vals = func(pts.reshape(-1, 3)).reshape(len(tris), -1)
    per_tri = area2 * (vals @ wts)
    np.add.at(out, np.array(owner), per_tri)
    return out


# --------------------------------------------------------------------------
# volume


def gaussian_volume(ctx, body):
    """Gaussian probability content of a convex body containing the origin."""
    if body.dim != ctx.dim:
        raise ValueError("context and body dimensions differ")
    if isinstance(body, SupportFunction):
        return _smooth_volume_2d(ctx, body)
    poly = as_polytope(body)
    if poly.dim == 2:
        return _polygon_volume(poly)
    return _polytope_volume_3d(ctx, poly)


def _polygon_volume(poly):
    h, s_a, s_b = _edge_coordinates(poly)
    act = poly.active
    h, s_a, s_b = h[act], s_a[act], s_b[act]
    # cone over an edge: (1/2pi) int (1 - exp(-h^2 / (2 cos^2 psi))) dpsi = angle/2pi - Owen's T
    angle = np.arctan2(s_b, h) - np.arctan2(s_a, h)
    cone = angle / (2.0 * np.pi) - (owens_t(h, s_b / h) - owens_t(h, s_a / h))
    return float(np.sum(cone))


def _polytope_volume_3d(ctx, poly):
    def integrand(x):
        r = np.linalg.norm(x, axis=1)
        return ctx.radial_integral(r) / r ** 3

    per_facet = facet_integrals(poly, integrand, ctx.facet_order)
    return float(ctx.normalization * np.sum(poly.support_numbers * per_facet))


def _smooth_volume_2d(ctx, sf):
    # polar angle of the boundary point moves at rate h (h + h'') / r^2
    hp, _ = sf.derivatives()
    rho = sf.curvature_radius()
    r2 = sf.values ** 2 + hp ** 2
    inner = ctx.radial_integral(np.sqrt(r2))
    dphi = sf.values * rho / r2
    return float(ctx.normalization * np.dot(sf.grid.weights, inner * dphi))


# --------------------------------------------------------------------------
# surface measures


def ma_density(h, p, node=None):
    """
    Density of the L_p Gaussian surface area measure of a smooth planar body,
    ``exp(-(h'^2 + h^2)/2) h^(1-p) (h'' + h) / (2 pi)`` per unit angle.
    """
    if h.dim != 2:
        raise ValueError("Monge-Ampere density is implemented for n = 2")
    hp, _ = h.derivatives()
    rho = h.curvature_radius()
    dens = np.exp(-0.5 * (hp ** 2 + h.values ** 2)) * h.values ** (1.0 - p) * rho / (2.0 * np.pi)
    return dens if node is None else float(dens[node])


def gauss_surface_measure(ctx, body):
    """Gaussian surface area measure: one atom per facet (zero mass when redundant)."""
    return lp_surface_measure(ctx, body, 1.0)


def _gauss_facet_masses(ctx, poly, facet_order=None):
    if poly.dim == 2:
        h, s_a, s_b = _edge_coordinates(poly)
        m = np.exp(-0.5 * h * h) * _normal_mass(s_a, np.maximum(s_a, s_b)) / SQRT2PI
        return np.where(poly.redundant, 0.0, m)
    order = facet_order or ctx.facet_order
    dens = facet_integrals(poly, lambda x: np.exp(-0.5 * np.sum(x * x, axis=1)), order)
    return ctx.normalization * dens


def lp_surface_measure(ctx, body, p, facet_order=None):
    """
    L_p Gaussian surface area measure ``h^(1-p) dS_gamma``.

    Raises :class:`DegenerateBodyError` for p > 1 when the origin is closer
    than ``1e-6`` to a facet plane.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if body.dim != ctx.dim:
        raise ValueError("context and body dimensions differ")
    if isinstance(body, SupportFunction):
        dens = ma_density(body, p)
        return SphereMeasure(2, body.grid.nodes, dens * body.grid.weights, kind="grid")
    poly = as_polytope(body)
    h = poly.support_numbers
    if p > 1 and np.min(h[poly.active]) < H_FLOOR:
        raise DegenerateBodyError("origin too close to the boundary for h^(1-p)")
    masses = _gauss_facet_masses(ctx, poly, facet_order)
    if p != 1:
        masses = np.where(poly.redundant, 0.0, masses * h ** (1.0 - p))
    return SphereMeasure(poly.dim, poly.normals, masses)


def atom_support(body):
    """Support values at the atom directions of the body's own measure."""
    if isinstance(body, SupportFunction):
        return np.asarray(body.values)
    return np.asarray(as_polytope(body).support_numbers)


# --------------------------------------------------------------------------
# functionals


def phi_functional(ctx, body, p):
    """``-(1/(p gamma)) int h^p dS_p + log gamma``; the pairing does not depend on p."""
    gam = gaussian_volume(ctx, body)
    if gam <= 0.0:
        raise DomainError("Gaussian volume is not positive")
    h = atom_support(body)
    s_p = lp_surface_measure(ctx, body, p)
    pairing = float(np.dot(h ** p, s_p.masses))
    collapsed = float(np.dot(h, gauss_surface_measure(ctx, body).masses))
    if abs(pairing - collapsed) > 1e-12 * max(1.0, abs(collapsed)):
        raise RuntimeError(f"p-collapse identity violated: {pairing} vs {collapsed}")
    return -pairing / (p * gam) + float(np.log(gam))


def minkowski_gap(ctx, K, L, p):
    """
    ``(1/p) int (h_L^p - h_K^p) dS_p(K) - gamma(K) log(gamma(L)/gamma(K))``.

    Nonnegative for every pair, zero exactly when K = L.
    """
    s_p = lp_surface_measure(ctx, K, p)
    h_k = atom_support(K)
    h_l = support_of(L, s_p.directions)
    g_k = gaussian_volume(ctx, K)
    g_l = gaussian_volume(ctx, L)
    lhs = float(np.dot(h_l ** p - h_k ** p, s_p.masses)) / p
    return lhs - g_k * float(np.log(g_l / g_k))


def cosine_lower_bound(measure, p, grid=None):
    """Minimum over grid directions of ``sum_j (u . v_j)_+^p m_j`` and its argmin."""
    if grid is None:
        grid = build_grid(measure.dim)
    cos = np.clip(grid.nodes @ measure.directions.T, 0.0, None)
    g = (cos ** p) @ measure.masses
    k = int(np.argmin(g))
    return float(g[k]), np.array(grid.nodes[k])


@dataclass
class VariationalReport:
    p: float
    pairing: float
    rows: list

    @property
    def max_rel_error(self):
        return max(r["rel_error"] for r in self.rows)


def variational_check(ctx, K, L, p, t_steps, grid=None):
    """
    Compare difference quotients of ``t -> gamma(K +_p t L)`` at 0 with the
    measure pairing ``(1/p) int h_L^p dS_p(K)``.

    Each row carries the central, forward and backward quotients; errors are
    reported for the central one.
    """
    s_p = lp_surface_measure(ctx, K, p)
    pairing = float(np.dot(support_of(L, s_p.directions) ** p, s_p.masses)) / p

    def vol(t):
        try:
            return gaussian_volume(ctx, lp_combination(p, 1.0, K, t, L, grid))
        except (DegenerateBodyError, HemisphereError) as exc:
            raise DomainError(f"combination invalid at t = {t}: {exc}") from exc

    g0 = vol(0.0)
    rows = []
    for t in t_steps:
        gp, gm = vol(t), vol(-t)
        central = (gp - gm) / (2.0 * t)
        err = abs(central - pairing)
        rows.append(
            {
                "t": float(t),
                "central": central,
                "forward": (gp - g0) / t,
                "backward": (g0 - gm) / t,
                "abs_error": err,
                "rel_error": err / abs(pairing),
            }
        )
    return VariationalReport(p, pairing, rows)

