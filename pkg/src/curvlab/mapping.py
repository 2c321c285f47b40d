"""Truncated algebras of maps from S^1 or T^2 into a compact Lie algebra.

The model space is span(modes up to an ambient cutoff) tensor the Lie
algebra, metrized by <x, y> = <<P^s x, y>> with P = Laplacian + m0^2, i.e.
the Gram matrix is diag((|k|^2 + m0^2)^s) (x) inner_gram.  Working at an
ambient cutoff of three times the nominal one keeps every bracket and
triple composition of cutoff-limited data exact: a bracket of degree-N
inputs has degree <= 2N and the curvature expressions nest three deep.

Because the metric has the Green-operator form <x,y> = <<G^{-1} x, y>>,
the adjoint of ad_x collapses to the sandwich -G ad_x G^{-1}, and the
curvature operator condenses to a five-term commutator expression in
G, G^{-1} and ad matrices.  Both are assembled here and cross-checked
against the generic engine.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .domains import ModeBasis, SpectralOperator
from .engine import KronMetric, MetrizedAlgebra, _dense
from .liealg import LieAlgebraData

AMBIENT_FACTOR = 3


class MappingBackend:
    """ad and coad matrices of the truncated mapping algebra.

    Vectors are mode-major: v[(m, a)] = v2[m, a].ravel(), where m runs over
    Fourier modes and a over the Lie-algebra basis.  With x = sum_a X_a (x) e_a,

        ad(x)  = sum_a mult(X_a) (x) ad_{e_a}
        coad(u) = sum_c mult(U_c) (x) K_c^T,   K_c[a, b] = c[a, b, c]

    where mult(W) is the (symmetric) multiplication operator of the mode
    basis; both identities follow from [X (x) a, Y (x) b] = XY (x) [a, b]
    and the total symmetry of the triple product integral of orthonormal
    real modes.
    """

    def __init__(self, basis: ModeBasis, algebra: LieAlgebraData):
        self.basis = basis
        self.algebra = algebra
        self.lie_dim = algebra.dim
        self.dim = basis.n_modes * self.lie_dim
        eye = np.eye(self.lie_dim)
        self._ad_lie = [algebra.ad_matrix(eye[a]) for a in range(self.lie_dim)]
        self._coad_lie = [algebra.structure[:, :, c].T for c in range(self.lie_dim)]

    def components(self, v):
        return np.asarray(v, dtype=float).reshape(self.basis.n_modes, self.lie_dim)

    def _assemble(self, v, lie_factors):
        comps = self.components(v)
        total = None
        for a in range(self.lie_dim):
            if not np.any(comps[:, a]):
                continue
            if not np.any(lie_factors[a]):
                continue
            block = scipy.sparse.kron(self.basis.multiplication_matrix(comps[:, a]),
                                      scipy.sparse.csr_matrix(lie_factors[a]),
                                      format="csr")
            total = block if total is None else total + block
        if total is None:
            return scipy.sparse.csr_matrix((self.dim, self.dim))
        return total

    def ad(self, x):
        return self._assemble(x, self._ad_lie)

    def coad(self, u):
        return self._assemble(u, self._coad_lie)


@dataclass
class ProbeResult:
    """Least-squares decay fit of curvature applied to single high modes."""
    slope: float
    intercept: float
    frequencies: np.ndarray
    ratios: np.ndarray
    degenerate: bool
    unreliable_window: bool


class TruncatedGroupModel:
    """Finite-dimensional model of maps(domain, K) with the P^s metric."""

    def __init__(self, domain, algebra, cutoff, s, m0,
                 ambient_factor=AMBIENT_FACTOR):
        if cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        self.domain = domain
        self.algebra = algebra
        self.cutoff = int(cutoff)
        self.ambient_factor = int(ambient_factor)
        self.ambient_cutoff = self.cutoff * self.ambient_factor
        self.s = float(s)
        self.m0 = float(m0)
        include_constant = m0 > 0
        self.basis = ModeBasis(domain, self.ambient_cutoff, include_constant)
        self.spectral = SpectralOperator(self.basis, s=self.s, m0=self.m0)
        self.backend = MappingBackend(self.basis, algebra)
        self.lie_dim = algebra.dim
        self.dim = self.backend.dim
        self.metric = KronMetric(self.spectral.forward_multipliers, algebra.inner_gram)
        self.geometry = MetrizedAlgebra(self.backend, self.metric, validate=False)
        self._g = self.spectral.inverse_multipliers
        self._ginv = self.spectral.forward_multipliers

    # -- vectors ---------------------------------------------------------------

    def vector(self, freq, parity, lie_vector):
        """Coefficient vector of (basis mode) tensor (Lie algebra element)."""
        lie_vector = np.asarray(lie_vector, dtype=float)
        if lie_vector.shape == ():
            idx = int(lie_vector)
            lie_vector = np.zeros(self.lie_dim)
            lie_vector[idx] = 1.0
        out = np.zeros((self.basis.n_modes, self.lie_dim))
        out[self.basis.index_of(freq, parity)] = lie_vector
        return out.ravel()

    def factored_vector(self, function_coeffs, lie_vector):
        """Coefficient vector of X (x) a for a mode-coefficient function X."""
        return np.outer(np.asarray(function_coeffs, float),
                        np.asarray(lie_vector, float)).ravel()

    def mode_mask(self, max_axis_freq):
        return np.repeat(self.basis.indices_within(max_axis_freq), self.lie_dim)

    def project(self, v, max_axis_freq):
        out = np.array(v, dtype=float)
        out[~self.mode_mask(max_axis_freq)] = 0.0
        return out

    def max_axis_freq(self, v):
        comps = np.any(self.backend.components(v) != 0.0, axis=1)
        if not np.any(comps):
            return 0
        return int(np.max(self.basis.axis_freq[comps]))

    def metric_norm(self, v):
        return self.metric.norm(v)

    # -- Green-operator scalings -------------------------------------------------

    def scale_green(self, v):
        """Apply G = P^{-s} (diagonal in modes, identity on the Lie factor)."""
        return (self.backend.components(v) * self._g[:, None]).ravel()

    def scale_green_inverse(self, v):
        """Apply G^{-1} = P^s."""
        return (self.backend.components(v) * self._ginv[:, None]).ravel()

    def sandwich_matrix(self, a):
        """G a G^{-1} for a matrix on the model space (exact row/column scaling)."""
        d_g = np.repeat(self._g, self.lie_dim)
        d_ginv = np.repeat(self._ginv, self.lie_dim)
        if scipy.sparse.issparse(a):
            return scipy.sparse.diags(d_g) @ a @ scipy.sparse.diags(d_ginv)
        return d_g[:, None] * a * d_ginv[None, :]

    def gform_ad_star(self, x):
        """The sandwich form -G ad_x G^{-1} of the metric adjoint of ad_x."""
        return -self.sandwich_matrix(self.backend.ad(x))

    # -- condensed curvature -------------------------------------------------------

    def _condensed_parts(self, x, y):
        # ad matrices of x, y and of the lowered vectors G^{-1} x = P^s x.
        ad_x = self.backend.ad(x)
        ad_y = self.backend.ad(y)
        ad_gx = self.backend.ad(self.scale_green_inverse(x))
        ad_gy = self.backend.ad(self.scale_green_inverse(y))
        xy = ad_x @ np.asarray(y, dtype=float)
        ad_gxy = self.backend.ad(self.scale_green_inverse(xy))
        return ad_x, ad_y, ad_gx, ad_gy, ad_gxy

    def condensed_curvature_apply(self, x, y, z, project_to=None):
        """R(x, y) z via the condensed five-term commutator identity

            4 R(x,y) = [F_y, F_x] + 2 [ad_y, G ad_{G^{-1}x}]
                       - 2 [ad_x, G ad_{G^{-1}y}]
                       + 2 [G ad_{G^{-1}x}, G ad_{G^{-1}y}]
                       + 2 G ad_{G^{-1}[x,y]},

        with F_x = G([G^{-1}, ad_x] - ad_{G^{-1}x}).  All products are taken
        at the ambient cutoff; pass project_to to orthogonally project the
        result back to a sub-cutoff.
        """
        apply = self.condensed_curvature_operator(x, y)
        out = apply(z)
        if project_to is not None:
            out = self.project(out, project_to)
        return out

    def condensed_curvature_operator(self, x, y):
        """The condensed operator as a reusable closure (the five ad matrices
        are built once, so sweeping many z is cheap)."""
        ad_x, ad_y, ad_gx, ad_gy, ad_gxy = self._condensed_parts(x, y)
        g, ginv = self.scale_green, self.scale_green_inverse

        def conj_x(v):
            return g(ad_x @ ginv(v))

        def conj_y(v):
            return g(ad_y @ ginv(v))

        def lower_x(v):
            return g(ad_gx @ v)

        def lower_y(v):
            return g(ad_gy @ v)

        def f_x(v):
            return ad_x @ v - conj_x(v) - lower_x(v)

        def f_y(v):
            return ad_y @ v - conj_y(v) - lower_y(v)

        def apply(z):
            z = np.asarray(z, dtype=float)
            t1 = f_y(f_x(z)) - f_x(f_y(z))
            t2 = ad_y @ lower_x(z) - lower_x(ad_y @ z)
            t3 = ad_x @ lower_y(z) - lower_y(ad_x @ z)
            t4 = lower_x(g(ad_gy @ z)) - lower_y(g(ad_gx @ z))
            t5 = g(ad_gxy @ z)
            return 0.25 * (t1 + 2.0 * t2 - 2.0 * t3 + 2.0 * t4 + 2.0 * t5)

        return apply

    def condensed_curvature_matrix(self, x, y):
        """Dense matrix of the condensed curvature operator (ambient basis)."""
        ad_x, ad_y, ad_gx, ad_gy, ad_gxy = (
            _dense(m) for m in self._condensed_parts(x, y))
        sw = self.sandwich_matrix
        d_g = np.repeat(self._g, self.lie_dim)
        lower_x = d_g[:, None] * ad_gx     # G ad_{G^{-1}x}
        lower_y = d_g[:, None] * ad_gy
        f_x = ad_x - sw(ad_x) - lower_x
        f_y = ad_y - sw(ad_y) - lower_y
        t1 = f_y @ f_x - f_x @ f_y
        t2 = ad_y @ lower_x - lower_x @ ad_y
        t3 = ad_x @ lower_y - lower_y @ ad_x
        t4 = lower_x @ lower_y - lower_y @ lower_x
        t5 = d_g[:, None] * ad_gxy
        return 0.25 * (t1 + 2.0 * t2 - 2.0 * t3 + 2.0 * t4 + 2.0 * t5)

    def leading_block_identities(self, x, y):
        """The three equivalent forms of the slowest-decaying curvature block.

        Assembles the -ad_[x,y] + [ad_x, G ad_y G^{-1}] + [G ad_x G^{-1}, ad_y]
        - G ad_[x,y] G^{-1} block directly and as the two closed commutator
        rewritings that exhibit its order drop; returns the maximum pairwise
        entrywise deviation on the cutoff block, where all products are exact.
        """
        ad_x = _dense(self.backend.ad(x))
        ad_y = _dense(self.backend.ad(y))
        xy = ad_x @ np.asarray(y, dtype=float)
        ad_xy = _dense(self.backend.ad(xy))
        sw = self.sandwich_matrix
        direct = (-ad_xy + ad_x @ sw(ad_y) - sw(ad_y) @ ad_x
                  + sw(ad_x) @ ad_y - ad_y @ sw(ad_x) - sw(ad_xy))

        a_x = ad_x - sw(ad_x)   # G [G^{-1}, ad_x]
        a_y = ad_y - sw(ad_y)
        form1 = a_y @ a_x - a_x @ a_y

        d_g = np.repeat(self._g, self.lie_dim)
        d_ginv = np.repeat(self._ginv, self.lie_dim)

        def comm_g(a):      # [G, a]
            return d_g[:, None] * a - a * d_g[None, :]

        def comm_ginv(a):   # [G^{-1}, a]
            return d_ginv[:, None] * a - a * d_ginv[None, :]

        form2 = (comm_g(ad_x) @ comm_ginv(ad_y) - comm_g(ad_y) @ comm_ginv(ad_x))

        mask = self.mode_mask(self.cutoff)
        idx = np.nonzero(mask)[0]
        blocks = [m[np.ix_(idx, idx)] for m in (direct, form1, form2)]
        dev = max(np.max(np.abs(blocks[0] - blocks[1])),
                  np.max(np.abs(blocks[0] - blocks[2])),
                  np.max(np.abs(blocks[1] - blocks[2])))
        return float(dev)

    def adjoint_identity_deviation(self, x):
        """Max entrywise gap between the generic metric adjoint of ad_x and
        the sandwich -G ad_x G^{-1}."""
        generic = self.geometry.ad_star(x)
        sandwich = _dense(self.gform_ad_star(x))
        return float(np.max(np.abs(generic - sandwich)))

    def order_decay_probe(self, x, y, window, lie_direction=0):
        """Decay of ||R(x,y) e_k (x) a|| / ||e_k (x) a|| across a frequency window.

        Returns the least-squares slope of log(ratio) against log(1 + |k|);
        norms are taken in the model metric.  The window is flagged
        unreliable when the probe frequencies plus the frequencies of x and
        y leave the nominal cutoff (decay would then reflect truncation, not
        the operator).
        """
        kmin, kmax = window
        fx = self.max_axis_freq(x)
        fy = self.max_axis_freq(y)
        unreliable = (kmax + fx + fy) > self.cutoff
        lie_vec = np.zeros(self.lie_dim)
        lie_vec[lie_direction] = 1.0
        apply = self.condensed_curvature_operator(x, y)
        freqs, ratios = [], []
        for m in range(self.basis.n_modes):
            k = self.basis.eucl_freq[m]
            if k < kmin or k > kmax:
                continue
            z = np.zeros((self.basis.n_modes, self.lie_dim))
            z[m] = lie_vec
            z = z.ravel()
            rz = apply(z)
            ratios.append(self.metric_norm(rz) / self.metric_norm(z))
            freqs.append(k)
        freqs = np.asarray(freqs)
        ratios = np.asarray(ratios)
        if len(ratios) < 2 or np.max(ratios) < 1e-14:
            return ProbeResult(slope=float("nan"), intercept=float("nan"),
                               frequencies=freqs, ratios=ratios,
                               degenerate=True, unreliable_window=unreliable)
        slope, intercept = np.polyfit(np.log1p(freqs), np.log(ratios), 1)
        return ProbeResult(slope=float(slope), intercept=float(intercept),
                           frequencies=freqs, ratios=ratios,
                           degenerate=False, unreliable_window=unreliable)
