"""Curvature of left-invariant metrics on metrized Lie algebras.

Everything here is expressed through two backend primitives on an
N-dimensional coefficient space:

    ad(x)   -- matrix of y -> [x, y]
    coad(u) -- matrix C(u) with C(u) y = ad_y^T u

plus a metric (Gram matrix, possibly in Kronecker-factored form).  The
adjoint of ad_x with respect to the metric is the generic sandwich
M^{-1} ad(x)^T M; the Levi-Civita connection, the curvature operator (in
three algebraically equivalent forms, cross-checked at runtime), sectional
curvature and the full Ricci trace are built on top.  The same code serves
finite Lie algebras, truncated Fourier-mode algebras, and configuration
products; backends may return dense or sparse ad matrices.
"""

import numpy as np
import scipy.linalg
import scipy.sparse

from .liealg import LieAlgebraData

CROSS_CHECK_TOL = 1e-10


class InternalConsistencyError(RuntimeError):
    """Two algebraically equivalent curvature formulas disagreed.

    Signals an implementation or transcription bug, never a data condition.
    """


def _dense(a):
    return a.toarray() if scipy.sparse.issparse(a) else np.asarray(a)


class DenseMetric:
    """Inner product given by an explicit symmetric positive definite Gram matrix."""

    def __init__(self, gram):
        gram = np.asarray(gram, dtype=float)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ValueError(f"metric Gram must be square, got {gram.shape}")
        if np.max(np.abs(gram - gram.T)) > 1e-12 * max(1.0, np.max(np.abs(gram))):
            raise ValueError("metric Gram is not symmetric")
        self.gram = 0.5 * (gram + gram.T)
        try:
            self._chol = scipy.linalg.cho_factor(self.gram, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise ValueError("metric Gram is not positive definite") from exc
        self.dim = gram.shape[0]

    def apply(self, v):
        return self.gram @ v

    def solve(self, v):
        return scipy.linalg.cho_solve(self._chol, v)

    def inner(self, u, v):
        return float(np.asarray(u) @ self.gram @ np.asarray(v))

    def norm(self, v):
        return float(np.sqrt(max(self.inner(v, v), 0.0)))

    def apply_matrix(self, a):
        return self.gram @ a

    def solve_matrix(self, a):
        return scipy.linalg.cho_solve(self._chol, a)

    def orthonormal_columns(self):
        """Columns form a metric-orthonormal basis (inverse Cholesky transpose)."""
        lower = np.linalg.cholesky(self.gram)
        return scipy.linalg.solve_triangular(lower, np.eye(self.dim), lower=True).T

    def dense_gram(self):
        return self.gram


class KronMetric:
    """Gram matrix diag(mode_weights) (x) lie_gram on a (modes x Lie) space.

    Vectors are flattened mode-major: v[(m, a)] = v2[m, a].ravel().  The
    factored form keeps large-model metric operations exact per entry (pure
    scalings plus a small dense solve), avoiding ill-conditioned dense
    factorizations when the mode weights span many orders of magnitude.
    """

    def __init__(self, mode_weights, lie_gram):
        self.mode_weights = np.asarray(mode_weights, dtype=float)
        if np.any(self.mode_weights <= 0):
            raise ValueError("mode weights must be positive")
        self.lie_gram = np.asarray(lie_gram, dtype=float)
        self.lie_dim = self.lie_gram.shape[0]
        self._lie_chol = scipy.linalg.cho_factor(self.lie_gram, lower=True)
        self.n_modes = len(self.mode_weights)
        self.dim = self.n_modes * self.lie_dim

    def _2d(self, v):
        return np.asarray(v, dtype=float).reshape(self.n_modes, self.lie_dim)

    def apply(self, v):
        return (self.mode_weights[:, None] * (self._2d(v) @ self.lie_gram)).ravel()

    def solve(self, v):
        out = scipy.linalg.cho_solve(self._lie_chol, self._2d(v).T).T
        return (out / self.mode_weights[:, None]).ravel()

    def inner(self, u, v):
        return float(np.asarray(u) @ self.apply(v))

    def norm(self, v):
        return float(np.sqrt(max(self.inner(v, v), 0.0)))

    def apply_matrix(self, a):
        a3 = np.asarray(a, dtype=float).reshape(self.n_modes, self.lie_dim, -1)
        out = np.einsum("ab,mbc->mac", self.lie_gram, a3)
        out *= self.mode_weights[:, None, None]
        return out.reshape(a.shape)

    def solve_matrix(self, a):
        a3 = np.asarray(a, dtype=float).reshape(self.n_modes, self.lie_dim, -1)
        flat = a3.transpose(1, 0, 2).reshape(self.lie_dim, -1)
        solved = scipy.linalg.cho_solve(self._lie_chol, flat)
        out = solved.reshape(self.lie_dim, self.n_modes, -1).transpose(1, 0, 2)
        out = out / self.mode_weights[:, None, None]
        return out.reshape(a.shape)

    def orthonormal_columns(self):
        lower = np.linalg.cholesky(self.lie_gram)
        lie_cols = scipy.linalg.solve_triangular(lower, np.eye(self.lie_dim), lower=True).T
        scale = scipy.sparse.diags(1.0 / np.sqrt(self.mode_weights))
        return scipy.sparse.kron(scale, lie_cols).toarray()

    def dense_gram(self):
        return np.kron(np.diag(self.mode_weights), self.lie_gram)


class FiniteBackend:
    """Backend for an explicit structure-constant tensor c[i,j,k]."""

    def __init__(self, structure):
        if isinstance(structure, LieAlgebraData):
            structure = structure.structure
        self.structure = np.asarray(structure, dtype=float)
        self.dim = self.structure.shape[0]

    def ad(self, x):
        return np.einsum("i,ijk->kj", np.asarray(x, dtype=float), self.structure)

    def coad(self, u):
        return np.einsum("ijk,k->ji", self.structure, np.asarray(u, dtype=float))


class MetrizedAlgebra:
    """A bracket backend plus an inner product; curvature machinery on top.

    The curvature convention is R(x, y) = [nabla_x, nabla_y] - nabla_[x,y].
    Every curvature evaluation is cross-checked against the fully expanded
    term list; a disagreement beyond tolerance raises
    InternalConsistencyError (this is the guard against transcription
    errors in the long expansions).
    """

    def __init__(self, backend, metric, validate=True):
        self.backend = backend
        self.metric = metric
        if backend.dim != metric.dim:
            raise ValueError(f"backend dim {backend.dim} != metric dim {metric.dim}")
        self.dim = backend.dim
        if validate:
            self._validate_bracket()

    def _validate_bracket(self, tol=1e-10, samples=8, seed=20240917):
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            x, y, z = rng.standard_normal((3, self.dim))
            anti = self.bracket(x, y) + self.bracket(y, x)
            jac = (self.bracket(x, self.bracket(y, z))
                   + self.bracket(y, self.bracket(z, x))
                   + self.bracket(z, self.bracket(x, y)))
            scale = max(1.0, np.max(np.abs(x)), np.max(np.abs(y)), np.max(np.abs(z))) ** 3
            if np.max(np.abs(anti)) > tol * scale or np.max(np.abs(jac)) > tol * scale:
                raise ValueError("backend bracket violates antisymmetry or Jacobi")

    # -- basic operations ---------------------------------------------------

    def ad(self, x):
        return self.backend.ad(x)

    def bracket(self, x, y):
        return self.backend.ad(x) @ np.asarray(y, dtype=float)

    def ad_star(self, x):
        """Matrix of the metric adjoint of ad_x: M^{-1} ad(x)^T M."""
        adx = _dense(self.backend.ad(x))
        return self._solve_matrix(self._apply_matrix(adx).T)

    def ad_star_apply(self, x, v):
        """ad_x^* applied to a vector: M^{-1} ad(x)^T (M v)."""
        adx = self.backend.ad(x)
        return self.metric.solve(adx.T @ self.metric.apply(np.asarray(v, dtype=float)))

    def ad_star_arg_apply(self, v, x):
        """The swapped-slot adjoint ad_x^*(v) as a function of x: M^{-1} C(M v) x."""
        cu = self.backend.coad(self.metric.apply(np.asarray(v, dtype=float)))
        return self.metric.solve(cu @ np.asarray(x, dtype=float))

    def ad_star_arg_operator(self, v):
        """Dense matrix of x -> ad_x^*(v)."""
        cu = _dense(self.backend.coad(self.metric.apply(np.asarray(v, dtype=float))))
        return self._solve_matrix(cu)

    def _solve_matrix(self, a):
        if hasattr(self.metric, "solve_matrix"):
            return self.metric.solve_matrix(np.asarray(a, dtype=float))
        out = np.empty_like(a, dtype=float)
        for j in range(a.shape[1]):
            out[:, j] = self.metric.solve(a[:, j])
        return out

    def _apply_matrix(self, a):
        if hasattr(self.metric, "apply_matrix"):
            return self.metric.apply_matrix(np.asarray(a, dtype=float))
        out = np.empty_like(a, dtype=float)
        for j in range(a.shape[1]):
            out[:, j] = self.metric.apply(a[:, j])
        return out

    # -- connection ----------------------------------------------------------

    def levi_civita(self, x, y):
        """nabla_x(y) = 1/2 ([x,y] - ad_x^*(y) - ad_y^*(x))."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return 0.5 * (self.bracket(x, y) - self.ad_star_apply(x, y)
                      - self.ad_star_apply(y, x))

    def nabla_operator(self, x):
        """Dense matrix of v -> nabla_x(v)."""
        adx = _dense(self.backend.ad(x))
        star = self._solve_matrix(self._apply_matrix(adx).T)
        arg = self.ad_star_arg_operator(x)
        return 0.5 * (adx - star - arg)

    def covariant_slot_operator(self, v):
        """Dense matrix of x -> nabla_x(v) (the connection read in its subscript)."""
        adv = _dense(self.backend.ad(v))
        star_v = self._solve_matrix(self._apply_matrix(adv).T)
        arg_v = self.ad_star_arg_operator(v)
        return 0.5 * (-adv - arg_v - star_v)

    # -- curvature: three forms ----------------------------------------------

    def curvature_direct(self, x, y, z):
        """R(x,y)z = nabla_x(nabla_y z) - nabla_y(nabla_x z) - nabla_[x,y] z."""
        w = self.levi_civita(y, z)
        u = self.levi_civita(x, z)
        return (self.levi_civita(x, w) - self.levi_civita(y, u)
                - self.levi_civita(self.bracket(x, y), z))

    def curvature_term_expansion(self, x, y, z):
        """The fully expanded 1/4, -1/4, -1/2 term list for R(x,y)z.

        astar(a, v) below is ad_a^*(v); the first argument is always the
        subscript.
        """
        br, astar = self.bracket, self.ad_star_apply

        def quarter_group(a, b, c):
            # the expansion of 4 * nabla_a(nabla_b c)
            w = br(b, c) - astar(b, c) - astar(c, b)
            return (br(a, br(b, c)) - br(a, astar(b, c)) - br(a, astar(c, b))
                    - astar(a, br(b, c)) + astar(a, astar(b, c)) + astar(a, astar(c, b))
                    - astar(w, a))

        xy = br(x, y)
        last = br(xy, z) - astar(xy, z) - astar(z, xy)
        return 0.25 * quarter_group(x, y, z) - 0.25 * quarter_group(y, x, z) - 0.5 * last

    def curvature_commutator_grouping(self, x, y, z):
        """The commutator-organized form of the same tensor (needs Jacobi)."""
        br, astar = self.bracket, self.ad_star_apply
        xy = br(x, y)
        line_a = -br(xy, z) - astar(br(y, z), x) + astar(br(x, z), y)
        line_b = (-(br(x, astar(y, z)) - astar(y, br(x, z)))
                  + (br(y, astar(x, z)) - astar(x, br(y, z)))
                  + (astar(x, astar(y, z)) - astar(y, astar(x, z))))
        line_c = (-br(x, astar(z, y)) + astar(x, astar(z, y))
                  + br(y, astar(z, x)) - astar(y, astar(z, x)))
        line_d = (astar(astar(y, z), x) + astar(astar(z, y), x)
                  - astar(astar(x, z), y) - astar(astar(z, x), y))
        line_e = astar(xy, z) + astar(z, xy)
        return 0.25 * (line_a + line_b + line_c + line_d) + 0.5 * line_e

    def curvature(self, x, y, z, check_tol=CROSS_CHECK_TOL):
        """Curvature with the always-on cross-check between the direct and
        expanded forms; returns the direct evaluation."""
        direct = self.curvature_direct(x, y, z)
        expanded = self.curvature_term_expansion(x, y, z)
        scale = max(1.0, float(np.max(np.abs(direct))))
        dev = float(np.max(np.abs(direct - expanded)))
        if dev > check_tol * scale:
            raise InternalConsistencyError(
                f"curvature forms disagree by {dev:.3e} (scale {scale:.3e})")
        return direct

    def curvature_operator(self, x, y):
        """Dense matrix of z -> R(x,y)z."""
        nx = self.nabla_operator(x)
        ny = self.nabla_operator(y)
        nxy = self.nabla_operator(self.bracket(x, y))
        return nx @ ny - ny @ nx - nxy

    def first_slot_operator(self, y, z):
        """Dense matrix of x -> R(x,y)z (the operator whose trace is Ricci)."""
        w = self.levi_civita(y, z)
        n_w = self.covariant_slot_operator(w)
        n_z = self.covariant_slot_operator(z)
        ny = self.nabla_operator(y)
        ady = _dense(self.backend.ad(y))
        return n_w - ny @ n_z + n_z @ ady

    # -- scalar invariants ----------------------------------------------------

    def sectional(self, x, y):
        """Unnormalized sectional curvature <R(x,y)y, x>."""
        return self.metric.inner(self.curvature_direct(x, y, y), x)

    def ricci_full(self, y, z, method="operator"):
        """Full Ricci trace Ric(y,z) = trace(x -> R(x,y)z).

        method "sum" runs the literal definition over a Cholesky-orthonormal
        basis (the reference oracle); "operator" takes the matrix trace of
        the first-slot operator (equal, basis-free, and much faster).
        """
        if method == "operator":
            return float(np.trace(self.first_slot_operator(y, z)))
        if method == "sum":
            basis = self.metric.orthonormal_columns()
            total = 0.0
            for i in range(self.dim):
                xi = basis[:, i]
                total += self.metric.inner(self.curvature_direct(xi, y, z), xi)
            return float(total)
        raise ValueError(f"unknown method {method!r}")

    def ricci_bilinear_matrix(self):
        """Ricci as a bilinear form on the basis: Ric[i,j] = Ric(e_i, e_j).

        Dense-only; intended for finite algebras and configuration products.
        """
        eye = np.eye(self.dim)
        nabla_ops = np.stack([self.nabla_operator(eye[:, i]) for i in range(self.dim)])
        slot_ops = np.stack([self.covariant_slot_operator(eye[:, j]) for j in range(self.dim)])
        ad_ops = np.stack([_dense(self.backend.ad(eye[:, i])) for i in range(self.dim)])
        # trace(x -> nabla_x v) is linear in v; nabla_ops[i][:, j] = nabla_{e_i} e_j
        slot_trace_per_basis = np.einsum("kii->k", slot_ops)
        slot_traces = np.einsum("ikj,k->ij", nabla_ops, slot_trace_per_basis)
        term2 = np.einsum("aij,bji->ab", nabla_ops, slot_ops)
        term3 = np.einsum("bij,aji->ab", slot_ops, ad_ops)
        return slot_traces - term2 + term3


def metrized_from_lie_algebra(algebra, metric_gram=None, validate=True):
    """Convenience wrapper: a finite Lie algebra with an explicit metric.

    Default metric is the algebra's Ad-invariant inner product (bi-invariant
    geometry).
    """
    gram = algebra.inner_gram if metric_gram is None else np.asarray(metric_gram, float)
    return MetrizedAlgebra(FiniteBackend(algebra), DenseMetric(gram), validate=validate)
