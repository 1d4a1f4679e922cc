"""Homogeneous constant-coefficient differential operators and their symbols.

An operator maps R^d-valued fields on R^n to R^l-valued fields and is a sum
of order-k terms ``sum_{|alpha| = k} B_alpha d^alpha`` with constant
coefficient matrices B_alpha.  Its Fourier symbol is the matrix polynomial
``B[xi] = sum_{|alpha| = k} B_alpha xi^alpha``.

Conventions used throughout the package:

* Matrix-valued fibers are flattened row-major: entry (i, j) of an n x n
  matrix sits at flat index ``i * n + j``.
* Matrix curls and divergences act row-wise (each row of the matrix field
  is treated as a vector field).  This follows the Lewintan-Neff usage and
  is echoed in report metadata, since other conventions exist.
* Pointwise "part maps" (sym, dev, tr, skew, ...) are plain matrices acting
  on the flattened fiber; their kernels and the associated orthogonal
  projectors are extracted by SVD with a fixed relative cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "MultiIndex",
    "OperatorSpec",
    "SymbolMatrix",
    "PartMap",
    "multiindex_enumerate",
    "eval_symbol",
    "symbol_on_frequencies",
    "catalog_operator",
    "catalog_partmap",
    "restrict_symbol",
    "CATALOG_OPERATORS",
    "CATALOG_PARTMAPS",
    "OPERATOR_ALIASES",
    "CONVENTIONS",
]

# Relative singular-value cutoff for kernel extraction from part maps.
KERNEL_CUTOFF = 1e-10

# Echoed into machine-readable reports so the convention choices are on record.
CONVENTIONS = {
    "fiber_flattening": "row-major",
    "matrix_curl": "row-wise",
    "matrix_divergence": "row-wise",
    "torus_domain": "[0, 2*pi)^n, zero-mean fields stand in for compact support",
}


@dataclass(frozen=True)
class MultiIndex:
    """A multi-index alpha = (alpha_1, ..., alpha_n) of partial derivatives."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if len(exps) == 0:
            raise ValueError("multi-index needs at least one exponent")
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in multi-index {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def dimension(self) -> int:
        return len(self.exponents)

    @property
    def order(self) -> int:
        return sum(self.exponents)

    def power(self, xi: np.ndarray) -> np.ndarray:
        """xi^alpha = prod_j xi_j^alpha_j, broadcast over leading axes of xi."""
        xi = np.asarray(xi)
        out = np.ones(xi.shape[:-1], dtype=xi.dtype)
        for j, e in enumerate(self.exponents):
            if e:
                out = out * xi[..., j] ** e
        return out

    def multiplicity(self) -> int:
        """Number of ordered derivative tuples collapsing to this index, |alpha|!/alpha!."""
        num = math.factorial(self.order)
        for e in self.exponents:
            num //= math.factorial(e)
        return num

    def __str__(self):
        return "(" + ",".join(str(e) for e in self.exponents) + ")"


def multiindex_enumerate(n: int, k: int) -> list[MultiIndex]:
    """All multi-indices of order k in n variables.

    Ordered with the first variable strongest (so (1,0) precedes (0,1));
    the count is C(n+k-1, k).
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if k < 0:
        raise ValueError(f"order must be >= 0, got {k}")

    def rec(dims, total):
        if dims == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in rec(dims - 1, total - first):
                yield (first,) + rest

    return [MultiIndex(e) for e in rec(n, k)]


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A homogeneous order-k operator given by its coefficient family.

    Coefficients map MultiIndex -> (l, d) matrix; absent indices mean zero.
    A spec with d == 0 is vacuous (arises from restricting to a trivial
    kernel); a spec whose stored coefficients are all zero is the zero
    operator (arises from restriction when ker(A) sits inside every
    symbol kernel).
    """

    name: str
    n: int
    d: int
    l: int
    k: int
    coeffs: Mapping[MultiIndex, np.ndarray]

    def __post_init__(self):
        if self.n < 1 or self.l < 1 or self.k < 0 or self.d < 0:
            raise ValueError(
                f"bad operator dimensions n={self.n}, d={self.d}, l={self.l}, k={self.k}"
            )
        frozen = {}
        for alpha, mat in self.coeffs.items():
            if alpha.dimension != self.n:
                raise ValueError(f"multi-index {alpha} has dimension != n={self.n}")
            if alpha.order != self.k:
                raise ValueError(f"multi-index {alpha} has order != k={self.k}")
            arr = np.asarray(mat)
            if arr.shape != (self.l, self.d):
                raise ValueError(
                    f"coefficient for {alpha} has shape {arr.shape}, expected {(self.l, self.d)}"
                )
            if not np.iscomplexobj(arr):
                arr = arr.astype(float)
            arr = arr.copy()
            arr.setflags(write=False)
            frozen[alpha] = arr
        object.__setattr__(self, "coeffs", frozen)

    @property
    def is_vacuous(self) -> bool:
        return self.d == 0

    @property
    def is_zero(self) -> bool:
        return all(not np.any(m) for m in self.coeffs.values())

    @property
    def is_complex(self) -> bool:
        return any(np.iscomplexobj(m) for m in self.coeffs.values())

    def coefficient(self, alpha: MultiIndex) -> np.ndarray:
        mat = self.coeffs.get(alpha)
        if mat is None:
            return np.zeros((self.l, self.d))
        return mat


@dataclass(frozen=True, eq=False)
class SymbolMatrix:
    """The symbol B[xi] evaluated at one frequency."""

    entries: np.ndarray
    frequency: np.ndarray


def eval_symbol(spec: OperatorSpec, xi) -> SymbolMatrix:
    """Evaluate B[xi] = sum_alpha B_alpha xi^alpha at a single frequency.

    xi may be real or complex of length n; the result is real whenever both
    xi and the coefficients are real, and degree-k homogeneous in xi.
    """
    xi = np.asarray(xi)
    if xi.shape != (spec.n,):
        raise ValueError(f"frequency has shape {xi.shape}, expected ({spec.n},)")
    entries = symbol_on_frequencies(spec, xi[None, :])[0]
    return SymbolMatrix(entries=entries, frequency=xi.copy())


def symbol_on_frequencies(spec: OperatorSpec, freqs: np.ndarray) -> np.ndarray:
    """Evaluate the symbol on an array of frequencies, shape (..., n) -> (..., l, d)."""
    freqs = np.asarray(freqs)
    if freqs.shape[-1] != spec.n:
        raise ValueError(f"frequency array last axis {freqs.shape[-1]} != n={spec.n}")
    dtype = complex if (np.iscomplexobj(freqs) or spec.is_complex) else float
    if not np.iscomplexobj(freqs) and freqs.dtype != float:
        freqs = freqs.astype(float)
    out = np.zeros(freqs.shape[:-1] + (spec.l, spec.d), dtype=dtype)
    for alpha, mat in spec.coeffs.items():
        out += alpha.power(freqs)[..., None, None] * mat
    return out


@dataclass(frozen=True, eq=False)
class PartMap:
    """A pointwise linear map A : R^d -> R^N with its kernel geometry.

    Carries the orthonormal kernel basis (d x dim ker), the orthogonal
    projectors onto ker(A) and its complement, and the comparison constant
    1/sigma_min_nonzero(A) realizing |P_perp v| <= C_A |A v|.
    """

    name: str
    matrix: np.ndarray
    kernel_basis: np.ndarray
    proj_ker: np.ndarray
    proj_perp: np.ndarray
    injectivity_constant: float

    @classmethod
    def from_matrix(cls, matrix, name: str = "", cutoff: float = KERNEL_CUTOFF) -> "PartMap":
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2:
            raise ValueError("part map must be a 2-d matrix")
        _, d = mat.shape
        if d == 0:
            raise ValueError("part map needs a positive source dimension")
        _, s, vh = np.linalg.svd(mat)
        if s.size and s[0] > 0:
            rank = int(np.sum(s > cutoff * s[0]))
        else:
            rank = 0
        kernel_basis = vh[rank:].T.copy()
        proj_ker = kernel_basis @ kernel_basis.T
        proj_perp = np.eye(d) - proj_ker
        c = 1.0 / s[rank - 1] if rank > 0 else math.inf
        for arr in (mat, kernel_basis, proj_ker, proj_perp):
            arr.setflags(write=False)
        return cls(
            name=name or "partmap",
            matrix=mat,
            kernel_basis=kernel_basis,
            proj_ker=proj_ker,
            proj_perp=proj_perp,
            injectivity_constant=float(c),
        )

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[1]

    @property
    def rank(self) -> int:
        return self.d - self.kernel_dim

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply A pointwise; works on any (..., d) array."""
        return values @ self.matrix.T


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

def _levi(i, j, k):
    if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        return 1.0
    if (i, j, k) in ((0, 2, 1), (2, 1, 0), (1, 0, 2)):
        return -1.0
    return 0.0


def _unit_indices(n):
    return [MultiIndex(tuple(1 if j == m else 0 for j in range(n))) for m in range(n)]


def _build_gradient(n):
    coeffs = {}
    for m, alpha in enumerate(_unit_indices(n)):
        mat = np.zeros((n, 1))
        mat[m, 0] = 1.0
        coeffs[alpha] = mat
    return OperatorSpec("gradient", n=n, d=1, l=n, k=1, coeffs=coeffs)


def _build_divergence(n):
    coeffs = {}
    for m, alpha in enumerate(_unit_indices(n)):
        mat = np.zeros((1, n))
        mat[0, m] = 1.0
        coeffs[alpha] = mat
    return OperatorSpec("divergence", n=n, d=n, l=1, k=1, coeffs=coeffs)


def _build_sym_gradient(n):
    # eps(u)_{ij} = (d_j u_i + d_i u_j) / 2, target flattened row-major
    coeffs = {}
    for m, alpha in enumerate(_unit_indices(n)):
        mat = np.zeros((n * n, n))
        for i in range(n):
            for j in range(n):
                row = i * n + j
                if j == m:
                    mat[row, i] += 0.5
                if i == m:
                    mat[row, j] += 0.5
        coeffs[alpha] = mat
    return OperatorSpec("sym_gradient", n=n, d=n, l=n * n, k=1, coeffs=coeffs)


def _build_curl_vector(n):
    if n != 3:
        raise ValueError("curl_vector requires n = 3")
    coeffs = {}
    for a, alpha in enumerate(_unit_indices(3)):
        mat = np.zeros((3, 3))
        for i in range(3):
            for b in range(3):
                mat[i, b] = _levi(i, a, b)
        coeffs[alpha] = mat
    return OperatorSpec("curl_vector", n=3, d=3, l=3, k=1, coeffs=coeffs)


def _build_curl_matrix_rowwise(n):
    # (Curl P)_{ij} = eps_{jab} d_a P_{ib}: the curl of each row of P
    if n != 3:
        raise ValueError("curl_matrix_rowwise requires n = 3")
    coeffs = {}
    for a, alpha in enumerate(_unit_indices(3)):
        mat = np.zeros((9, 9))
        for i in range(3):
            for j in range(3):
                for b in range(3):
                    mat[3 * i + j, 3 * i + b] = _levi(j, a, b)
        coeffs[alpha] = mat
    return OperatorSpec("curl_matrix_rowwise", n=3, d=9, l=9, k=1, coeffs=coeffs)


def _build_div_matrix_rowwise(n):
    # (Div P)_i = sum_a d_a P_{ia}: the divergence of each row of P
    coeffs = {}
    for a, alpha in enumerate(_unit_indices(n)):
        mat = np.zeros((n, n * n))
        for i in range(n):
            mat[i, i * n + a] = 1.0
        coeffs[alpha] = mat
    return OperatorSpec("div_matrix_rowwise", n=n, d=n * n, l=n, k=1, coeffs=coeffs)


def _build_sym_curl_matrix(n):
    if n != 3:
        raise ValueError("sym_curl_matrix requires n = 3")
    curl = _build_curl_matrix_rowwise(3)
    sym = catalog_partmap("sym", 3).matrix
    coeffs = {alpha: sym @ mat for alpha, mat in curl.coeffs.items()}
    return OperatorSpec("sym_curl_matrix", n=3, d=9, l=9, k=1, coeffs=coeffs)


CATALOG_OPERATORS = {
    "gradient": _build_gradient,
    "sym_gradient": _build_sym_gradient,
    "curl_vector": _build_curl_vector,
    "curl_matrix_rowwise": _build_curl_matrix_rowwise,
    "divergence": _build_divergence,
    "div_matrix_rowwise": _build_div_matrix_rowwise,
    "sym_curl_matrix": _build_sym_curl_matrix,
}

OPERATOR_ALIASES = {
    "grad": "gradient",
    "eps": "sym_gradient",
    "sym_grad": "sym_gradient",
    "curl": "curl_matrix_rowwise",
    "curl3": "curl_matrix_rowwise",
    "curlvec": "curl_vector",
    "div": "divergence",
    "symcurl": "sym_curl_matrix",
}

CATALOG_PARTMAPS = ("sym", "dev", "tr", "skew", "identity", "zero")

PARTMAP_ALIASES = {
    "id": "identity",
    "trace": "tr",
    "deviatoric": "dev",
}


def catalog_operator(name: str, n: int) -> OperatorSpec:
    """Build a catalog operator by name; curl variants require n = 3."""
    key = OPERATOR_ALIASES.get(name, name)
    builder = CATALOG_OPERATORS.get(key)
    if builder is None:
        raise KeyError(
            f"unknown catalog operator {name!r}; known: {sorted(CATALOG_OPERATORS)}"
        )
    return builder(n)


def catalog_partmap(name: str, n: int, dim: int | None = None) -> PartMap:
    """Build a standard pointwise map on the n x n matrix fiber.

    sym/dev/tr/skew act on flattened n x n matrices (d = n^2); identity and
    zero default to the same fiber but accept an explicit dim.
    """
    key = PARTMAP_ALIASES.get(name, name)
    if key not in CATALOG_PARTMAPS:
        raise KeyError(f"unknown part map {name!r}; known: {sorted(CATALOG_PARTMAPS)}")
    d = n * n if dim is None else dim
    if key == "identity":
        mat = np.eye(d)
    elif key == "zero":
        mat = np.zeros((1, d))
    else:
        if dim is not None and dim != n * n:
            raise ValueError(f"{key} acts on the n x n matrix fiber, dim must be {n * n}")
        d = n * n
        mat = np.zeros((d, d))
        if key == "tr":
            mat = np.zeros((1, d))
            for i in range(n):
                mat[0, i * n + i] = 1.0
        else:
            for i in range(n):
                for j in range(n):
                    row = i * n + j
                    if key == "sym":
                        mat[row, i * n + j] += 0.5
                        mat[row, j * n + i] += 0.5
                    elif key == "skew":
                        mat[row, i * n + j] += 0.5
                        mat[row, j * n + i] -= 0.5
                    elif key == "dev":
                        mat[row, i * n + j] += 1.0
                        if i == j:
                            for a in range(n):
                                mat[row, a * n + a] -= 1.0 / n
    return PartMap.from_matrix(mat, name=key)


def restrict_symbol(spec: OperatorSpec, part: PartMap) -> OperatorSpec:
    """The operator restricted to fields with values in ker(A).

    Coefficients become B_alpha @ kernel_basis with source dimension
    dim ker(A); a trivial kernel yields a vacuous (d = 0) spec.
    """
    if part.d != spec.d:
        raise ValueError(
            f"part map acts on R^{part.d} but operator source is R^{spec.d}"
        )
    kb = part.kernel_basis
    coeffs = {alpha: mat @ kb for alpha, mat in spec.coeffs.items()}
    return OperatorSpec(
        name=f"{spec.name}|ker({part.name})",
        n=spec.n,
        d=kb.shape[1],
        l=spec.l,
        k=spec.k,
        coeffs=coeffs,
    )
