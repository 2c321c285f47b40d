"""Homogeneous symbol calculus on the cotangent bundle of the flat 2-torus.

A symbol is a finite sum of terms (trigonometric-polynomial base
coefficient) x (monomial in p1, p2) x |p|^{2a} with a real power a; all
terms of one symbol share the total degree (monomial degree + 2a).
Poisson brackets, products, and fiber integrals over the unit momentum
circle are computed exactly: trig polynomials multiply through their
complex exponential coefficients, and circle moments of monomials have a
closed double-factorial form.

Sign convention: brackets follow {f, g} = sum_i (df/dx_i dg/dp_i -
df/dp_i dg/dx_i), so that the leading symbol of [P^s, Y] is
-2s |p|^{2s-2} (p . grad Y), matching the closed-form curvature residue.
The conjugated matrix evaluation e^{-ipx} A e^{ipx} of a double-commutator
operator carries the usual factor i per commutator relative to this real
convention; the consistency check accounts for the resulting (-1).
"""

import math
from dataclasses import dataclass

import numpy as np

from .domains import SQRT2

DEGREE_TOL = 1e-9


class SymbolError(ValueError):
    """Raised for inhomogeneous inputs or unsupported degrees."""


def _canonical(freq):
    if freq[0] > 0 or (freq[0] == 0 and freq[1] > 0):
        return True
    return False


class TrigPoly:
    """Real trigonometric polynomial on the 2-torus.

    Stored as complex exponential coefficients {k: c_k} over integer
    frequencies with the Hermitian redundancy removed (only canonical k and
    the constant are kept); products are exact convolutions.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = {}
        if coeffs:
            for k, v in coeffs.items():
                self._add(tuple(int(c) for c in k), complex(v))

    def _add(self, k, v):
        if v == 0:
            return
        if k == (0, 0):
            self.coeffs[k] = self.coeffs.get(k, 0.0) + v.real
        elif _canonical(k):
            self.coeffs[k] = self.coeffs.get(k, 0.0) + v
        else:
            mk = (-k[0], -k[1])
            self.coeffs[mk] = self.coeffs.get(mk, 0.0) + v.conjugate()
        key = k if (k == (0, 0) or _canonical(k)) else (-k[0], -k[1])
        if key in self.coeffs and abs(self.coeffs[key]) < 1e-300:
            del self.coeffs[key]

    @classmethod
    def constant(cls, value):
        return cls({(0, 0): value})

    @classmethod
    def cosine(cls, freq, amplitude=1.0):
        # one-sided storage: the mirror coefficient is implied by conjugation
        out = cls()
        out._add(tuple(int(c) for c in freq), amplitude / 2.0)
        return out

    @classmethod
    def sine(cls, freq, amplitude=1.0):
        out = cls()
        out._add(tuple(int(c) for c in freq), amplitude / 2.0j)
        return out

    @classmethod
    def random(cls, rng, max_freq=2, scale=1.0):
        out = cls()
        for k1 in range(-max_freq, max_freq + 1):
            for k2 in range(-max_freq, max_freq + 1):
                if (k1, k2) == (0, 0) or not _canonical((k1, k2)):
                    continue
                out._add((k1, k2), scale * (rng.standard_normal()
                                            + 1j * rng.standard_normal()))
        return out

    def _pairs(self):
        for k, v in self.coeffs.items():
            yield k, v
            if k != (0, 0):
                yield (-k[0], -k[1]), v.conjugate()

    def __add__(self, other):
        out = TrigPoly()
        out.coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out.coeffs[k] = out.coeffs.get(k, 0.0) + v
        out._prune()
        return out

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, factor):
        out = TrigPoly()
        out.coeffs = {k: v * factor for k, v in self.coeffs.items()}
        return out

    def _prune(self, tol=0.0):
        self.coeffs = {k: v for k, v in self.coeffs.items()
                       if abs(v) > tol}

    def __mul__(self, other):
        # full two-sided convolution, then drop the redundant mirror half
        raw = {}
        for k1, v1 in self._pairs():
            for k2, v2 in other._pairs():
                k = (k1[0] + k2[0], k1[1] + k2[1])
                raw[k] = raw.get(k, 0.0) + v1 * v2
        out = TrigPoly()
        for k, v in raw.items():
            if k == (0, 0):
                out.coeffs[k] = v.real
            elif _canonical(k) and v != 0:
                out.coeffs[k] = v
        out._prune(1e-300)
        return out

    def dx(self, axis):
        out = TrigPoly()
        for k, v in self.coeffs.items():
            out._add(k, 1j * k[axis] * v)
        return out

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.zeros(pts.shape[0], dtype=float)
        for k, v in self._pairs():
            phase = pts[:, 0] * k[0] + pts[:, 1] * k[1]
            vals += (v * np.exp(1j * phase)).real
        return vals if len(vals) > 1 else float(vals[0])

    def integral(self):
        """Integral over the torus with the raw area form (volume 4 pi^2)."""
        return float(self.coeffs.get((0, 0), 0.0).real) * (2.0 * math.pi) ** 2

    def is_zero(self, tol=0.0):
        return all(abs(v) <= tol for v in self.coeffs.values())

    def max_abs_coeff(self):
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def to_mode_coefficients(self, basis):
        """Coefficients in an orthonormal real ModeBasis on the torus."""
        out = np.zeros(basis.n_modes)
        for k, v in self.coeffs.items():
            if k == (0, 0):
                out[basis.index_of([0, 0], "const")] = v.real
            else:
                out[basis.index_of(list(k), "cos")] = SQRT2 * v.real
                out[basis.index_of(list(k), "sin")] = -SQRT2 * v.imag
        return out


def fiber_moment(i, j):
    """Closed-form circle moment: integral of cos^i sin^j over [0, 2pi)."""
    if i < 0 or j < 0:
        raise SymbolError("negative monomial exponents")
    if i % 2 or j % 2:
        return 0.0
    num = _double_factorial(i - 1) * _double_factorial(j - 1)
    return 2.0 * math.pi * num / _double_factorial(i + j)


def _double_factorial(n):
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@dataclass(frozen=True)
class _Term:
    base: TrigPoly
    mono: tuple  # (i, j) exponents of p1, p2
    power: float  # exponent a in |p|^{2a}

    @property
    def degree(self):
        return self.mono[0] + self.mono[1] + 2.0 * self.power


class HomogeneousSymbol:
    """Finite sum of (trig base) x p1^i p2^j x |p|^{2a} terms of equal degree."""

    def __init__(self, terms=()):
        merged = {}
        for term in terms:
            if term.base.is_zero():
                continue
            key = (term.mono, round(term.power, 12))
            if key in merged:
                merged[key] = _Term(merged[key].base + term.base, term.mono,
                                    term.power)
            else:
                merged[key] = term
        self.terms = [t for t in merged.values() if not t.base.is_zero()]
        degrees = {round(t.degree, 9) for t in self.terms}
        if len(degrees) > 1:
            raise SymbolError(f"inhomogeneous symbol: degrees {sorted(degrees)}")

    @property
    def degree(self):
        if not self.terms:
            return None
        return self.terms[0].degree

    def is_zero(self):
        return not self.terms

    @classmethod
    def momentum_power(cls, a):
        """|p|^{2a}."""
        return cls([_Term(TrigPoly.constant(1.0), (0, 0), float(a))])

    @classmethod
    def multiplication(cls, base):
        """A function on the torus viewed as a degree-zero symbol."""
        return cls([_Term(base, (0, 0), 0.0)])

    def __add__(self, other):
        return HomogeneousSymbol(self.terms + other.terms)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, factor):
        return HomogeneousSymbol([_Term(t.base.scaled(factor), t.mono, t.power)
                                  for t in self.terms])

    def __mul__(self, other):
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                out.append(_Term(t1.base * t2.base,
                                 (t1.mono[0] + t2.mono[0], t1.mono[1] + t2.mono[1]),
                                 t1.power + t2.power))
        return HomogeneousSymbol(out)

    def dp(self, axis):
        """Momentum derivative; |p|^{2a} contributes 2a p_axis |p|^{2(a-1)}."""
        out = []
        for t in self.terms:
            i, j = t.mono
            exp = t.mono[axis]
            if exp:
                lowered = (i - 1, j) if axis == 0 else (i, j - 1)
                out.append(_Term(t.base.scaled(float(exp)), lowered, t.power))
            if t.power != 0.0:
                raised = (i + 1, j) if axis == 0 else (i, j + 1)
                out.append(_Term(t.base.scaled(2.0 * t.power), raised,
                                 t.power - 1.0))
        return HomogeneousSymbol(out)

    def dx(self, axis):
        return HomogeneousSymbol([_Term(t.base.dx(axis), t.mono, t.power)
                                  for t in self.terms])

    def poisson(self, other):
        """{f, g} = sum_i (df/dx_i dg/dp_i - df/dp_i dg/dx_i)."""
        out = HomogeneousSymbol()
        for axis in (0, 1):
            out = out + self.dx(axis) * other.dp(axis)
            out = out - self.dp(axis) * other.dx(axis)
        return out

    def evaluate(self, point, momentum):
        point = np.asarray(point, dtype=float)
        momentum = np.asarray(momentum, dtype=float)
        p_sq = float(momentum @ momentum)
        total = 0.0
        for t in self.terms:
            total += (t.base.evaluate(point[None, :])
                      * momentum[0] ** t.mono[0] * momentum[1] ** t.mono[1]
                      * p_sq ** t.power)
        return total

    def fiber_circle_integral(self, point=None):
        """Integrate over the unit circle in the momentum fiber (degree -2 only).

        With point=None the base stays symbolic and a ResidueDensity is
        returned; with a point the density is evaluated there.
        """
        if self.is_zero():
            if point is None:
                return ResidueDensity(TrigPoly(), 0.0)
            return 0.0
        if abs(self.degree + 2.0) > DEGREE_TOL:
            raise SymbolError(
                f"fiber integral needs degree -2, got {self.degree}")
        density = TrigPoly()
        for t in self.terms:
            moment = fiber_moment(*t.mono)
            if moment:
                density = density + t.base.scaled(moment)
        if point is not None:
            return float(density.evaluate(np.asarray(point)[None, :]))
        return ResidueDensity(density, density.integral())

    def text_form(self):
        """Canonical sorted rendering for golden-file comparisons."""
        lines = []
        for t in sorted(self.terms, key=lambda t: (t.power, t.mono)):
            base = ", ".join(
                f"{k}: {v.real:+.12g}{v.imag:+.12g}j"
                for k, v in sorted(t.base.coeffs.items()))
            lines.append(f"p1^{t.mono[0]} p2^{t.mono[1]} |p|^(2*{t.power:.12g})"
                         f" * {{{base}}}")
        return "\n".join(lines) if lines else "0"


@dataclass(frozen=True)
class ResidueDensity:
    """Fiber-circle integral of a degree-(-2) symbol: a function on the base
    plus its integral over the torus."""
    density: TrigPoly
    integral: float


def commutator_principal_symbol(power_symbol, base):
    """Leading symbol of [P^s-type multiplier, multiplication-by-base]."""
    return power_symbol.poisson(HomogeneousSymbol.multiplication(base))


def curvature_leading_symbol(y_base, z_base, s):
    """Degree-(-2) leading symbol of the Lie-traced curvature operator
    G [G^{-1}, Y] G [Z, G^{-1}] + 2 G [[G^{-1}, Y], Z] on the flat torus.

    Built generically from Poisson brackets and leading-order products; no
    coefficient is hard-coded, so the closed-form expansion is a theorem
    this function is tested against.
    """
    if s <= 0:
        raise SymbolError("exponent s must be positive")
    g = HomogeneousSymbol.momentum_power(-s)
    ginv = HomogeneousSymbol.momentum_power(s)
    sym_y = HomogeneousSymbol.multiplication(y_base)
    sym_z = HomogeneousSymbol.multiplication(z_base)
    bracket_y = ginv.poisson(sym_y)          # [G^{-1}, Y]
    bracket_z_rev = sym_z.poisson(ginv)      # [Z, G^{-1}]
    term1 = g * bracket_y * g * bracket_z_rev
    term2 = (g * bracket_y.poisson(sym_z)).scaled(2.0)
    total = term1 + term2
    if total.is_zero():
        return total
    if abs(total.degree + 2.0) > DEGREE_TOL:
        raise SymbolError(f"leading symbol has degree {total.degree}, expected -2")
    return total


def wodzicki_residue(symbol):
    """Integral of the degree-(-2) component over the unit cosphere bundle."""
    return symbol.fiber_circle_integral().integral


def dirichlet_pairing(y_base, z_base):
    """integral of dY wedge *dZ = <grad Y, grad Z> over the torus, exactly."""
    grad = (y_base.dx(0) * z_base.dx(0)) + (y_base.dx(1) * z_base.dx(1))
    return grad.integral()


def surface_ricci(y_base, z_base, lie_b, lie_c, s, algebra):
    """Wodzicki-regularized Ricci pairing of y = Y (x) b and z = Z (x) c.

    Equals -1/4 kappa(b, c) times the residue of the Lie-traced curvature
    symbol; the mass never enters (only the leading symbol survives).
    """
    kappa = algebra.killing_form(lie_b, lie_c)
    residue = wodzicki_residue(curvature_leading_symbol(y_base, z_base, s))
    return -0.25 * kappa * residue


def surface_ricci_closed_form(y_base, z_base, lie_b, lie_c, s, algebra):
    """The closed-form counterpart -pi s^2 kappa(b,c) integral dY ^ *dZ,
    computed by exact trigonometric integration (independent of the symbol
    pipeline)."""
    kappa = algebra.killing_form(lie_b, lie_c)
    return -math.pi * s * s * kappa * dirichlet_pairing(y_base, z_base)


def conformal_pairing(y_base, z_base, lie_b, lie_c, algebra):
    """The reference inner product -kappa(b,c) integral dY ^ *dZ (the
    conformally invariant pairing on maps modulo constants)."""
    return -algebra.killing_form(lie_b, lie_c) * dirichlet_pairing(y_base, z_base)


# -- matrix-side consistency ---------------------------------------------------


def conjugated_plane_wave_value(basis, s, m0, y_coeffs, z_coeffs, momentum, point):
    """e^{-ip.x} (A e^{ip.x})(x0) for the truncated operator
    A = G [G^{-1}, Y] G [Z, G^{-1}] + 2 G [[G^{-1}, Y], Z] on a torus mode
    basis; complex-valued."""
    momentum = np.asarray(momentum, dtype=int)
    lam = basis.laplace_eigenvalues + m0**2
    g = lam ** (-s)
    ginv = lam ** s
    my = basis.multiplication_matrix(y_coeffs)
    mz = basis.multiplication_matrix(z_coeffs)

    def comm_y(v):          # [G^{-1}, Y] v
        return ginv * (my @ v) - my @ (ginv * v)

    def comm_z_rev(v):      # [Z, G^{-1}] v
        return mz @ (ginv * v) - ginv * (mz @ v)

    wave = np.zeros(basis.n_modes, dtype=complex)
    wave[basis.index_of(list(momentum), "cos")] = 1.0 / SQRT2
    wave[basis.index_of(list(momentum), "sin")] = 1.0j / SQRT2
    image = (g * comm_y(g * comm_z_rev(wave))
             + 2.0 * g * (comm_y(mz @ wave) - mz @ comm_y(wave)))
    point = np.asarray(point, dtype=float)
    values = basis.values(point[None, :])[:, 0]
    phase = np.exp(-1.0j * float(momentum @ point))
    return phase * complex(image @ values)


def plane_wave_symbol_error(s, m0, y_base, z_base, momenta, point, margin=4):
    """Deviation of the conjugated matrix evaluation from the leading symbol.

    The matrix side is the honest operator symbol, which for this
    double-commutator combination equals minus the real-Poisson-bracket
    assembly (factor i per commutator, i^2 = -1); the comparison applies
    that factor.  Returns (|p| array, error array).
    """
    from .domains import ModeBasis

    sym = curvature_leading_symbol(y_base, z_base, s)
    max_p = int(max(int(np.max(np.abs(np.asarray(m)))) for m in momenta))
    max_f = 0
    for base in (y_base, z_base):
        for k in base.coeffs:
            max_f = max(max_f, abs(k[0]), abs(k[1]))
    basis = ModeBasis("torus", max_p + 2 * max_f + margin)
    yc = y_base.to_mode_coefficients(basis)
    zc = z_base.to_mode_coefficients(basis)
    norms, errors = [], []
    for p in momenta:
        p = np.asarray(p, dtype=int)
        numeric = conjugated_plane_wave_value(basis, s, m0, yc, zc, p, point)
        symbolic = -sym.evaluate(point, p.astype(float))
        norms.append(float(np.linalg.norm(p)))
        errors.append(abs(numeric - symbolic))
    return np.asarray(norms), np.asarray(errors)
