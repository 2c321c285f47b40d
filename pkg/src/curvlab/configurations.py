"""Products of a compact group over finite point sets, metrized by Green's
matrices.

Evaluating maps at a finite configuration V of points sends the mapping
group onto a product of copies of K; the pushed-forward metric on the
product algebra is the inverse of the Green's matrix of P^s restricted to
V, tensored with the Lie inner product.  Everything is exactly finite
dimensional here: the bracket acts sitewise, curvature comes from the
generic engine, and the lower-bound scans just tabulate extremal relative
Ricci eigenvalues over parameter grids.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .domains import greens_function
from .engine import DenseMetric, FiniteBackend, MetrizedAlgebra
from .liealg import LieAlgebraData

CONDITION_LIMIT = 1e12


class IllConditionedError(ValueError):
    """Green's matrix too close to singular for a trustworthy metric."""


@dataclass
class Configuration:
    """A finite point set with its Green's-matrix metric on (+)_V k."""

    domain: str
    points: np.ndarray
    s: float
    m0: float
    algebra: LieAlgebraData
    greens_matrix: np.ndarray = field(init=False)
    greens_inverse: np.ndarray = field(init=False)
    condition_number: float = field(init=False)
    geometry: MetrizedAlgebra = field(init=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        ndim = 1 if self.domain == "circle" else 2
        if pts.shape[1] != ndim:
            pts = pts.reshape(-1, ndim)
        self.points = pts
        n = len(pts)
        if n < 1:
            raise ValueError("need at least one point")
        if self.m0 <= 0:
            raise ValueError("configuration metrics need a positive mass")
        if 2 * self.s <= ndim:
            raise ValueError(f"need 2s > dim for finite diagonal (s={self.s})")
        for i in range(n):
            for j in range(i + 1, n):
                d = pts[i] - pts[j]
                if np.allclose(np.cos(d), 1.0) and np.allclose(np.sin(d), 0.0):
                    raise ValueError(f"coincident points {i} and {j}")

        g = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                g[i, j] = g[j, i] = greens_function(
                    self.domain, pts[i], pts[j], self.s, self.m0)
        self.greens_matrix = g
        try:
            chol = scipy.linalg.cho_factor(g, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise IllConditionedError("Green's matrix is not positive definite") from exc
        self.condition_number = float(np.linalg.cond(g))
        if self.condition_number > CONDITION_LIMIT:
            raise IllConditionedError(
                f"Green's matrix condition number {self.condition_number:.3e}")
        self.greens_inverse = scipy.linalg.cho_solve(chol, np.eye(n))
        self.greens_inverse = 0.5 * (self.greens_inverse + self.greens_inverse.T)

        metric = DenseMetric(np.kron(self.greens_inverse, self.algebra.inner_gram))
        self.geometry = MetrizedAlgebra(FiniteBackend(self._site_structure()), metric)

    def _site_structure(self):
        # sitewise bracket: c[(v,a),(w,b),(u,c)] = delta_{v=w=u} c_lie[a,b,c]
        n = len(self.points)
        d = self.algebra.dim
        c = np.zeros((n * d, n * d, n * d))
        for v in range(n):
            sl = slice(v * d, (v + 1) * d)
            c[sl, sl, sl] = self.algebra.structure
        return c

    @property
    def dim(self):
        return len(self.points) * self.algebra.dim

    def site_vector(self, site, lie_vector):
        out = np.zeros((len(self.points), self.algebra.dim))
        out[site] = np.asarray(lie_vector, dtype=float)
        return out.ravel()

    def ricci(self, y, z):
        """Exact finite-dimensional Ricci pairing (trace of x -> R(x,y)z)."""
        return self.geometry.ricci_full(y, z)

    def ricci_matrix(self):
        return self.geometry.ricci_bilinear_matrix()

    def relative_ricci_eigenvalues(self):
        """Eigenvalues of Ricci relative to the metric (scale-invariant)."""
        ric = self.ricci_matrix()
        gram = self.geometry.metric.dense_gram()
        return scipy.linalg.eigvalsh(0.5 * (ric + ric.T), gram)


def build_configuration(domain, points, s, m0, algebra=None):
    """Construct the Green's-matrix configuration model; validates spacing,
    convergence range, and conditioning at build time."""
    from . import liealg
    return Configuration(domain=domain, points=np.asarray(points, dtype=float),
                         s=float(s), m0=float(m0),
                         algebra=algebra or liealg.su2())


def lattice_points(domain, count, spacing):
    """count points at the given spacing along a lattice: arc positions
    i * spacing on the circle, an i * spacing diagonal-free square grid walk
    on the torus (row-major over the nearest square)."""
    if domain == "circle":
        if count * spacing > 2 * math.pi:
            raise ValueError("points wrap around the circle")
        return np.array([[i * spacing] for i in range(count)])
    side = math.ceil(math.sqrt(count))
    if side * spacing > 2 * math.pi:
        raise ValueError("points wrap around the torus")
    pts = []
    for i in range(count):
        pts.append([(i % side) * spacing, (i // side) * spacing])
    return np.array(pts)


def load_point_file(path):
    """Point-set file: one coordinate tuple per line, whitespace separated."""
    pts = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            pts.append([float(tok) for tok in line.split()])
    if not pts:
        raise ValueError(f"{path}: no points")
    return np.asarray(pts)


def ricci_lower_bound_scan(domain, point_counts, spacings, s_values, m0_values,
                           algebra=None):
    """Minimum relative Ricci eigenvalue over a parameter grid (exploratory).

    Each cell reports min eig of metric^{-1} Ricci for the lattice
    configuration; ill-conditioned cells are flagged and skipped, nothing is
    asserted.  Returns a list of row dicts in deterministic grid order.
    """
    rows = []
    for count in point_counts:
        for spacing in spacings:
            for s in s_values:
                for m0 in m0_values:
                    row = {"domain": domain, "n_points": int(count),
                           "spacing": float(spacing), "s": float(s),
                           "m0": float(m0), "min_rel_ricci": float("nan"),
                           "max_rel_ricci": float("nan"),
                           "condition_number": float("nan"), "flag": ""}
                    try:
                        pts = lattice_points(domain, count, spacing)
                        conf = build_configuration(domain, pts, s, m0,
                                                   algebra=algebra)
                        eigs = conf.relative_ricci_eigenvalues()
                        row["min_rel_ricci"] = float(np.min(eigs))
                        row["max_rel_ricci"] = float(np.max(eigs))
                        row["condition_number"] = conf.condition_number
                    except (IllConditionedError, ValueError) as exc:
                        row["flag"] = type(exc).__name__
                    rows.append(row)
    return rows
