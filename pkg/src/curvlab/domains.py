"""Fourier mode algebra on the circle and the flat 2-torus.

The real eigenbasis of the Laplacian, {1, sqrt(2) cos(k.x), sqrt(2) sin(k.x)},
orthonormal in L^2(dV/vol), is the coordinate system for every truncated
operator in this package.  Products of basis modes expand exactly into a
finite set of basis modes (product-to-sum identities), so multiplication
operators, brackets, and commutators are assembled without quadrature.

Frequencies live on the integer lattice; on the torus a single
representative of {k, -k} carries the (cos, sin) pair, chosen so the first
nonzero component is positive.  Cutoffs are per-axis (max-norm) throughout.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.sparse

SQRT2 = math.sqrt(2.0)


class TruncationError(ValueError):
    """Raised when a request would exceed the ambient frequency cutoff."""


class DiagonalDivergenceError(ValueError):
    """Green's function evaluated on the diagonal outside its convergence range."""


def _is_canonical(freq):
    for component in freq:
        if component > 0:
            return True
        if component < 0:
            return False
    return False


class ModeBasis:
    """Orthonormal real Fourier basis of L^2(domain, dV/vol) up to a cutoff.

    domain: "circle" or "torus"; cutoff: max frequency per axis;
    include_constant: drop the constant mode to model the quotient by
    constant maps (required when the mass is zero).
    """

    def __init__(self, domain, cutoff, include_constant=True):
        if domain not in ("circle", "torus"):
            raise ValueError(f"unknown domain {domain!r}")
        if cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        self.domain = domain
        self.cutoff = int(cutoff)
        self.include_constant = bool(include_constant)
        self.ndim = 1 if domain == "circle" else 2
        self.volume = (2.0 * math.pi) ** self.ndim

        freqs = [np.zeros(self.ndim, dtype=int)] if include_constant else []
        parities = [0] if include_constant else []  # 0 const, 1 cos, 2 sin
        for rep in self._representatives():
            freqs.append(rep)
            parities.append(1)
            freqs.append(rep)
            parities.append(2)
        self.freqs = np.array(freqs, dtype=int).reshape(len(freqs), self.ndim)
        self.parities = np.array(parities, dtype=np.int8)
        self.n_modes = len(parities)

        self.axis_freq = np.max(np.abs(self.freqs), axis=1)
        self.eucl_freq = np.sqrt(np.sum(self.freqs.astype(float) ** 2, axis=1))
        self.laplace_eigenvalues = np.sum(self.freqs.astype(float) ** 2, axis=1)

        self._build_complex_rep()
        self._build_lookup()

    def _representatives(self):
        n = self.cutoff
        reps = []
        if self.ndim == 1:
            for k in range(1, n + 1):
                reps.append(np.array([k]))
        else:
            for k1 in range(-n, n + 1):
                for k2 in range(-n, n + 1):
                    f = (k1, k2)
                    if _is_canonical(f):
                        reps.append(np.array(f))
            reps.sort(key=lambda f: (max(abs(f[0]), abs(f[1])), f[0], f[1]))
        return reps

    def _build_complex_rep(self):
        # Each real mode as <=2 complex exponentials: amp * exp(i f.x).
        n = self.n_modes
        self.comp_freqs = np.zeros((n, 2, self.ndim), dtype=int)
        self.comp_amps = np.zeros((n, 2), dtype=complex)
        for m in range(n):
            f = self.freqs[m]
            p = self.parities[m]
            if p == 0:
                self.comp_amps[m, 0] = 1.0
            elif p == 1:
                self.comp_freqs[m, 0] = f
                self.comp_freqs[m, 1] = -f
                self.comp_amps[m] = [1.0 / SQRT2, 1.0 / SQRT2]
            else:
                self.comp_freqs[m, 0] = f
                self.comp_freqs[m, 1] = -f
                self.comp_amps[m] = [-1.0j / SQRT2, 1.0j / SQRT2]

    def _build_lookup(self):
        # Integer-encoded frequency -> (cos index, sin index) over the range
        # reachable by products of two in-basis frequencies.
        self._lookup_halfwidth = 2 * self.cutoff
        width = 2 * self._lookup_halfwidth + 1
        size = width**self.ndim
        self._cos_index = np.full(size, -1, dtype=int)
        self._sin_index = np.full(size, -1, dtype=int)
        enc = self._encode(self.freqs)
        for m in range(self.n_modes):
            p = self.parities[m]
            if p == 0:
                self._cos_index[enc[m]] = m
            elif p == 1:
                self._cos_index[enc[m]] = m
            else:
                self._sin_index[enc[m]] = m

    def _encode(self, freqs):
        h = self._lookup_halfwidth
        width = 2 * h + 1
        shifted = freqs + h
        if self.ndim == 1:
            return shifted[..., 0]
        return shifted[..., 0] * width + shifted[..., 1]

    def index_of(self, freq, parity):
        """Index of the mode with the given frequency tuple and parity ("const"/"cos"/"sin")."""
        f = np.atleast_1d(np.asarray(freq, dtype=int))
        if f.shape != (self.ndim,):
            raise ValueError(f"frequency {freq!r} has wrong dimension")
        if np.max(np.abs(f)) > self.cutoff:
            raise TruncationError(f"frequency {tuple(f)} beyond cutoff {self.cutoff}")
        enc = int(self._encode(f[None, :])[0])
        idx = self._sin_index[enc] if parity == "sin" else self._cos_index[enc]
        if idx < 0:
            raise ValueError(f"no mode with frequency {tuple(f)} and parity {parity}")
        if parity == "const" and self.parities[idx] != 0:
            raise ValueError("constant mode requested via nonzero frequency")
        return int(idx)

    def values(self, points):
        """Mode values at sample points; returns (n_modes, n_points)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.ndim:
            pts = pts.T
        phase = self.freqs.astype(float) @ pts.T  # (n_modes, n_points)
        out = np.empty_like(phase)
        out[self.parities == 0] = 1.0
        out[self.parities == 1] = SQRT2 * np.cos(phase[self.parities == 1])
        out[self.parities == 2] = SQRT2 * np.sin(phase[self.parities == 2])
        return out

    def evaluate(self, coefficients, points):
        """Evaluate a coefficient vector as a function at sample points."""
        coefficients = np.asarray(coefficients, dtype=float)
        return coefficients @ self.values(points)

    def indices_within(self, max_axis_freq):
        """Boolean mask of modes with per-axis frequency <= max_axis_freq."""
        return self.axis_freq <= max_axis_freq

    def project(self, coefficients, max_axis_freq):
        """Zero all coefficients beyond the per-axis cutoff (orthogonal projection)."""
        if max_axis_freq > self.cutoff:
            raise TruncationError(
                f"projection target {max_axis_freq} exceeds ambient cutoff {self.cutoff}")
        out = np.array(coefficients, dtype=float)
        out[~self.indices_within(max_axis_freq)] = 0.0
        return out

    def _complex_pairs(self, coefficients):
        coefficients = np.asarray(coefficients, dtype=float)
        nz = np.nonzero(coefficients)[0]
        freqs = self.comp_freqs[nz].reshape(-1, self.ndim)
        amps = (coefficients[nz, None] * self.comp_amps[nz]).reshape(-1)
        keep = amps != 0
        return freqs[keep], amps[keep]

    def multiplication_matrix(self, coefficients):
        """Sparse matrix of pointwise multiplication by the given function.

        Exact on every product whose frequency stays within the basis; higher
        frequencies are orthogonally projected out (ambient truncation).
        The result is symmetric because the basis is orthonormal.
        """
        wf, wa = self._complex_pairs(coefficients)
        if len(wa) == 0:
            return scipy.sparse.csr_matrix((self.n_modes, self.n_modes))
        bf = self.comp_freqs.reshape(self.n_modes * 2, self.ndim)
        ba = self.comp_amps.reshape(self.n_modes * 2)
        cols = np.repeat(np.arange(self.n_modes), 2)

        freq = wf[:, None, :] + bf[None, :, :]          # (nw, 2n, ndim)
        amp = wa[:, None] * ba[None, :]                 # (nw, 2n)
        col = np.broadcast_to(cols[None, :], amp.shape)

        freq = freq.reshape(-1, self.ndim)
        amp = amp.reshape(-1)
        col = col.reshape(-1)
        keep = amp != 0
        freq, amp, col = freq[keep], amp[keep], col[keep]

        in_range = np.max(np.abs(freq), axis=1) <= self._lookup_halfwidth
        freq, amp, col = freq[in_range], amp[in_range], col[in_range]
        enc = self._encode(freq)
        cos_rows = self._cos_index[enc]
        sin_rows = self._sin_index[enc]

        is_zero = ~np.any(freq, axis=1)
        canonical = np.zeros(len(amp), dtype=bool)
        lead = freq[:, 0]
        canonical |= lead > 0
        if self.ndim == 2:
            canonical |= (lead == 0) & (freq[:, 1] > 0)

        rows_list, vals_list, cols_list = [], [], []
        sel = is_zero & (cos_rows >= 0)
        rows_list.append(cos_rows[sel])
        vals_list.append(np.real(amp[sel]))
        cols_list.append(col[sel])
        sel = canonical & (cos_rows >= 0)
        rows_list.append(cos_rows[sel])
        vals_list.append(SQRT2 * np.real(amp[sel]))
        cols_list.append(col[sel])
        sel = canonical & (sin_rows >= 0)
        rows_list.append(sin_rows[sel])
        vals_list.append(-SQRT2 * np.imag(amp[sel]))
        cols_list.append(col[sel])

        rows = np.concatenate(rows_list)
        vals = np.concatenate(vals_list)
        cols_all = np.concatenate(cols_list)
        keep = np.abs(vals) > 1e-15
        mat = scipy.sparse.coo_matrix(
            (vals[keep], (rows[keep], cols_all[keep])),
            shape=(self.n_modes, self.n_modes))
        return mat.tocsr()

    def multiply_project(self, f, g, target_cutoff):
        """Exact product of two coefficient vectors, projected to a sub-cutoff."""
        if target_cutoff > self.cutoff:
            raise TruncationError(
                f"target cutoff {target_cutoff} exceeds ambient cutoff {self.cutoff}")
        product = self.multiplication_matrix(f) @ np.asarray(g, dtype=float)
        return self.project(product, target_cutoff)

    def product_coefficients(self, m1, m2):
        """Expansion of the product of two basis modes as (index, coefficient) pairs."""
        e1 = np.zeros(self.n_modes)
        e1[m1] = 1.0
        col = self.multiplication_matrix(e1)[:, m2].toarray().ravel()
        nz = np.nonzero(col)[0]
        return [(int(i), float(col[i])) for i in nz]

    def exact_gram(self):
        """Gram matrix of the basis in L^2(dV/vol), from the exponential expansion.

        Exact trigonometric integration: <exp(i f.x), exp(i g.x)> = delta_{f,g}.
        """
        n = self.n_modes
        gram = np.zeros((n, n))
        enc = self._encode(self.comp_freqs.reshape(-1, self.ndim)).reshape(n, 2)
        for a in range(n):
            for b in range(n):
                acc = 0.0j
                for i in range(2):
                    for j in range(2):
                        if self.comp_amps[a, i] != 0 and self.comp_amps[b, j] != 0 \
                                and enc[a, i] == enc[b, j]:
                            acc += self.comp_amps[a, i] * np.conj(self.comp_amps[b, j])
                gram[a, b] = acc.real
        return gram


@dataclass(frozen=True)
class SpectralOperator:
    """Fourier multipliers of P^s and P^{-s} for P = Laplacian + mass^2.

    With zero mass the constant mode must be excluded from the basis (the
    multiplier would vanish there); the model then lives on the quotient by
    constant maps.
    """

    base: ModeBasis
    s: float
    m0: float

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("exponent s must be positive")
        if self.m0 < 0:
            raise ValueError("mass must be nonnegative")
        if self.m0 == 0 and self.base.include_constant:
            raise ValueError("zero mass requires the constant mode to be excluded")

    @property
    def forward_multipliers(self):
        """Per-mode multipliers of P^s (the inverse metric operator)."""
        return (self.base.laplace_eigenvalues + self.m0**2) ** self.s

    @property
    def inverse_multipliers(self):
        """Per-mode multipliers of P^{-s} (the Green operator)."""
        return (self.base.laplace_eigenvalues + self.m0**2) ** (-self.s)


def _circle_heat(delta, t):
    """Heat kernel on the circle at separation delta, normalized to integrate to 1 (dV)."""
    if t < 1.0:
        n = np.arange(-8, 9)
        return float(np.sum(np.exp(-((delta + 2 * math.pi * n) ** 2) / (4 * t)))
                     / math.sqrt(4 * math.pi * t))
    k = np.arange(1, 40)
    return float((1.0 + 2.0 * np.sum(np.exp(-(k**2) * t) * np.cos(k * delta)))
                 / (2 * math.pi))


def greens_function(domain, v, w, s, m0, include_constant=None):
    """Green's function of P^s = (Laplacian + m0^2)^s with kernel convention
    (P^{-s} f)(v) = integral G(v, w) f(w) dV(w).

    Equals (1/vol) * sum_k phi_k(v) phi_k(w) (|k|^2 + m0^2)^{-s}.  The series
    is resummed through the heat-kernel integral
    G = (1/Gamma(s)) int_0^inf t^{s-1} e^{-m0^2 t} p_t(v, w) dt,
    which converges to quadrature accuracy for every admissible (s, m0)
    without astronomically large mode sums.  With m0 = 0 the constant mode is
    excluded (Green's function on the quotient by constants).
    """
    ndim = 1 if domain == "circle" else 2
    if domain not in ("circle", "torus"):
        raise ValueError(f"unknown domain {domain!r}")
    if include_constant is None:
        include_constant = m0 > 0
    if m0 == 0 and include_constant:
        raise ValueError("zero mass requires excluding the constant mode")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    delta = v - w
    on_diagonal = np.allclose(np.cos(delta), 1.0) and np.allclose(np.sin(delta), 0.0)
    if 2 * s <= ndim and on_diagonal:
        raise DiagonalDivergenceError(
            f"G(v, v) diverges for 2s <= dim ({2 * s} <= {ndim})")

    volume = (2 * math.pi) ** ndim
    subtract = (1.0 / volume) if not include_constant else 0.0

    def kernel(t):
        p = 1.0
        for d in range(ndim):
            p *= _circle_heat(delta[d], t)
        return p - subtract

    def integrand(x):
        t = math.exp(x)
        return math.exp(s * x - m0**2 * t) * kernel(t)

    # Integrand decays like exp(rate * x) as x -> -inf (rate = s - dim/2 on
    # the diagonal, faster off it) and at least like exp(-t) or exp(-m0^2 t)
    # as x -> +inf; the limits keep both truncation errors below 1e-13.
    rate = s - 0.5 * ndim if on_diagonal else s
    lower = -max(64.0, 32.0 / max(rate, 0.05))
    upper = max(4.0, math.log(40.0 / max(m0**2, 0.025)))
    val, _ = scipy.integrate.quad(integrand, lower, 0.0, epsabs=1e-13,
                                  epsrel=1e-12, limit=500)
    val2, _ = scipy.integrate.quad(integrand, 0.0, upper, epsabs=1e-13,
                                   epsrel=1e-12, limit=500)
    return (val + val2) / math.gamma(s)


def greens_series(domain, v, w, s, m0, max_freq, include_constant=None):
    """Direct truncated eigenfunction sum for the Green's function, with an
    integral-comparison bound on the dropped tail.

    Returns (value, tail_bound).  The oracle counterpart of greens_function:
    feasible when the tail bound reaches tolerance at a moderate cutoff.
    """
    ndim = 1 if domain == "circle" else 2
    if include_constant is None:
        include_constant = m0 > 0
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    delta = v - w
    volume = (2 * math.pi) ** ndim

    if ndim == 1:
        k = np.arange(1, max_freq + 1)
        total = np.sum(2.0 * np.cos(k * delta[0]) * (k**2 + m0**2) ** (-s))
        if include_constant:
            total += (m0**2) ** (-s)
        # sum_{k>K} 2 (k^2+m0^2)^{-s} <= 2 int_K^inf x^{-2s} dx
        tail = 2.0 * max_freq ** (1 - 2 * s) / (2 * s - 1) if 2 * s > 1 else np.inf
        return total / volume, tail / volume
    k1, k2 = np.meshgrid(np.arange(-max_freq, max_freq + 1),
                         np.arange(-max_freq, max_freq + 1), indexing="ij")
    lam = k1**2 + k2**2
    phase = np.cos(k1 * delta[0] + k2 * delta[1])
    weights = (lam + m0**2.0) ** (-s)
    mask = np.ones_like(lam, dtype=bool)
    if not include_constant:
        mask[(k1 == 0) & (k2 == 0)] = False
    total = np.sum(phase[mask] * weights[mask])
    # shells |k|_inf = r > K hold 8r lattice points with |k|^2 >= r^2
    tail = 8.0 * max_freq ** (2 - 2 * s) / (2 * s - 2) if s > 1 else np.inf
    return total / volume, tail / volume
