"""Compact Lie algebra data: structure constants, brackets, Killing form.

An algebra is stored basis-explicitly as a rank-3 array of structure
constants c[i,j,k], meaning [e_i, e_j] = sum_k c[i,j,k] e_k, together with
the Gram matrix of an Ad-invariant inner product.  Everything downstream
(curvature, truncated mapping algebras, configuration products) consumes
only this data, so the module is representation-free: su(2) and su(3) are
built in, arbitrary algebras load from a plain-text structure-constant
file.
"""

from dataclasses import dataclass, field

import numpy as np

IDENTITY_TOL = 1e-12


class AlgebraError(ValueError):
    """Raised when supplied structure constants or metrics are inconsistent."""


def _check_vector(x, dim, name="vector"):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise AlgebraError(f"{name} has shape {x.shape}, expected ({dim},)")
    return x


@dataclass(frozen=True)
class LieAlgebraData:
    """Structure constants plus Ad-invariant inner product of a compact algebra.

    Attributes:
        structure: (dim, dim, dim) array, c[i,j,k] as above.
        inner_gram: (dim, dim) symmetric positive definite Gram matrix of the
            Ad-invariant inner product.
        killing_gram: (dim, dim) Killing form kappa(e_i, e_j) = tr(ad_i ad_j),
            computed from the structure constants.
    """

    structure: np.ndarray
    inner_gram: np.ndarray
    killing_gram: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.structure, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise AlgebraError(f"structure constants must be cubic, got shape {c.shape}")
        object.__setattr__(self, "structure", c)
        n = c.shape[0]

        if np.max(np.abs(c + c.transpose(1, 0, 2))) > IDENTITY_TOL:
            raise AlgebraError("structure constants are not antisymmetric in (i, j)")

        # Jacobi: sum over cyclic permutations of the nested bracket.
        jac = (np.einsum("ijm,mkl->ijkl", c, c)
               + np.einsum("jkm,mil->ijkl", c, c)
               + np.einsum("kim,mjl->ijkl", c, c))
        if np.max(np.abs(jac)) > IDENTITY_TOL:
            raise AlgebraError(f"Jacobi identity fails by {np.max(np.abs(jac)):.3e}")

        b = np.asarray(self.inner_gram, dtype=float)
        if b.shape != (n, n):
            raise AlgebraError(f"inner_gram has shape {b.shape}, expected ({n}, {n})")
        if np.max(np.abs(b - b.T)) > IDENTITY_TOL:
            raise AlgebraError("inner_gram is not symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (b + b.T))) <= 0:
            raise AlgebraError("inner_gram is not positive definite")
        object.__setattr__(self, "inner_gram", b)

        # Ad-invariance: <<[a,x], y>> + <<x, [a,y]>> = 0 for all basis triples.
        inv = np.einsum("aik,kj->aij", c, b)
        if np.max(np.abs(inv + inv.transpose(0, 2, 1))) > IDENTITY_TOL:
            raise AlgebraError("inner_gram is not Ad-invariant")

        kappa = np.einsum("ikl,jlk->ij", c, c)
        object.__setattr__(self, "killing_gram", kappa)

    @property
    def dim(self):
        return self.structure.shape[0]

    def bracket(self, x, y):
        """Bracket [x, y] of two coefficient vectors."""
        x = _check_vector(x, self.dim, "x")
        y = _check_vector(y, self.dim, "y")
        return np.einsum("i,j,ijk->k", x, y, self.structure)

    def ad_matrix(self, x):
        """Matrix of y -> [x, y]."""
        x = _check_vector(x, self.dim, "x")
        return np.einsum("i,ijk->kj", x, self.structure)

    def coad_matrix(self, u):
        """Matrix C(u) with C(u) y = ad_y^T u (transpose in Euclidean coordinates).

        Entrywise C(u)[j, i] = sum_k c[i,j,k] u[k]; antisymmetric in (i, j).
        """
        u = _check_vector(u, self.dim, "u")
        return np.einsum("ijk,k->ji", self.structure, u)

    def killing_form(self, x, y):
        """kappa(x, y) = trace(ad_x ad_y)."""
        x = _check_vector(x, self.dim, "x")
        y = _check_vector(y, self.dim, "y")
        return float(x @ self.killing_gram @ y)

    def inner(self, x, y):
        """Ad-invariant inner product <<x, y>>."""
        x = _check_vector(x, self.dim, "x")
        y = _check_vector(y, self.dim, "y")
        return float(x @ self.inner_gram @ y)


def from_structure(structure, inner="killing"):
    """Build LieAlgebraData from structure constants.

    inner: "killing" uses -kappa (positive definite on compact semisimple
    algebras), "euclidean" uses the identity Gram matrix (needed when the
    Killing form is degenerate, e.g. abelian algebras), or an explicit
    (dim, dim) matrix.
    """
    c = np.asarray(structure, dtype=float)
    n = c.shape[0]
    if isinstance(inner, str):
        if inner == "killing":
            kappa = np.einsum("ikl,jlk->ij", c, c)
            gram = -kappa
        elif inner == "euclidean":
            gram = np.eye(n)
        else:
            raise AlgebraError(f"unknown inner product option {inner!r}")
    else:
        gram = np.asarray(inner, dtype=float)
    return LieAlgebraData(structure=c, inner_gram=gram)


def su2():
    """su(2) in the cyclic basis [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e2.

    Killing form is -2 I; default inner product is -kappa = 2 I.
    """
    c = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        c[i, j, k] = 1.0
        c[j, i, k] = -1.0
    return from_structure(c, inner="killing")


def _gell_mann():
    l = np.zeros((8, 3, 3), dtype=complex)
    l[0][0, 1] = l[0][1, 0] = 1
    l[1][0, 1] = -1j
    l[1][1, 0] = 1j
    l[2][0, 0] = 1
    l[2][1, 1] = -1
    l[3][0, 2] = l[3][2, 0] = 1
    l[4][0, 2] = -1j
    l[4][2, 0] = 1j
    l[5][1, 2] = l[5][2, 1] = 1
    l[6][1, 2] = -1j
    l[6][2, 1] = 1j
    l[7][0, 0] = l[7][1, 1] = 1 / np.sqrt(3)
    l[7][2, 2] = -2 / np.sqrt(3)
    return l


def su3_defining_basis():
    """Skew-hermitian 3x3 matrices T_a = i*lambda_a/2 spanning su(3)."""
    return 0.5j * _gell_mann()


def structure_from_matrices(mats):
    """Extract structure constants from a matrix basis of a real algebra.

    Commutators are expanded in the basis using the (real) Frobenius pairing;
    the basis matrices must be linearly independent.
    """
    mats = np.asarray(mats)
    n = mats.shape[0]
    # Gram of Re tr(A B^H); real because the basis spans a real subspace.
    gram = np.real(np.einsum("aij,bji->ab", mats, mats.conj().transpose(0, 2, 1)))
    c = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            rhs = np.real(np.einsum("bij,ij->b", mats.conj(), comm))
            c[i, j] = np.linalg.solve(gram, rhs)
    # Clean float noise so antisymmetry/Jacobi hold to strict tolerance.
    c[np.abs(c) < 1e-13] = 0.0
    return c


def su3():
    """su(3) in the standard skew-hermitian basis i*lambda_a/2.

    Structure constants are extracted from explicit 3x3 commutators, so the
    defining representation is the oracle for all bracket values.
    """
    c = structure_from_matrices(su3_defining_basis())
    return from_structure(c, inner="killing")


def abelian(n):
    """n-dimensional abelian algebra with the Euclidean inner product."""
    return from_structure(np.zeros((n, n, n)), inner="euclidean")


def load_structure_file(path, inner="killing"):
    """Read structure constants from text: header "dim N", lines "i j k value".

    Indices are 0-based; omitted entries are zero.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("dim"):
        raise AlgebraError(f"{path}: first line must be 'dim N'")
    try:
        n = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise AlgebraError(f"{path}: malformed header {lines[0]!r}") from exc
    c = np.zeros((n, n, n))
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise AlgebraError(f"{path}: malformed line {ln!r}")
        i, j, k = (int(p) for p in parts[:3])
        if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
            raise AlgebraError(f"{path}: index out of range in {ln!r}")
        c[i, j, k] = float(parts[3])
    return from_structure(c, inner=inner)


def save_structure_file(path, algebra):
    """Write the nonzero structure constants in the load_structure_file format."""
    c = algebra.structure
    n = algebra.dim
    with open(path, "w") as fh:
        fh.write(f"dim {n}\n")
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if c[i, j, k] != 0.0:
                        fh.write(f"{i} {j} {k} {float(c[i, j, k])!r}\n")
