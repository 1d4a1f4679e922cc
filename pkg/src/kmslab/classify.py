"""Sampled classification of operator symbols on the unit sphere.

Ellipticity, constant rank and the cancelling property are decided by dense
deterministic sampling of the (real or complex) unit sphere with explicit
relative tolerances.  C-ellipticity is likewise a sampled verdict: sampling
can refute it (by exhibiting a near-singular complex frequency) or support
it heuristically, never prove it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .operators import CONVENTIONS, OperatorSpec, PartMap, restrict_symbol, symbol_on_frequencies

__all__ = [
    "SphereSampling",
    "ClassificationReport",
    "CEllipticVerdict",
    "classify",
    "classify_on_kernel",
    "is_c_elliptic",
    "subspace_intersection",
]

DEFAULT_SAMPLE_COUNT = 2048
DEFAULT_SEED = 1729
DEFAULT_TOL = 1e-8

# Eigenvalues of P_U P_V P_U this close to 1 count toward dim(U cap V).
INTERSECTION_EIGTOL = 1e-8


@dataclass(frozen=True, eq=False)
class SphereSampling:
    """Deterministic quasi-uniform unit vectors on S^{n-1} (real or complex)."""

    count: int
    seed: int
    complex_mode: bool
    points: np.ndarray

    def __post_init__(self):
        norms = np.linalg.norm(self.points, axis=1)
        if self.points.shape[0] and np.max(np.abs(norms - 1.0)) > 1e-14:
            raise ValueError("sampling points must have unit norm")

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @classmethod
    def standard(
        cls,
        n: int,
        count: int = DEFAULT_SAMPLE_COUNT,
        seed: int = DEFAULT_SEED,
        complex_mode: bool = False,
    ) -> "SphereSampling":
        """Low-discrepancy sphere sampling plus the 2n coordinate directions.

        A scrambled Halton sequence is pushed through the inverse normal CDF
        and normalized; the construction is reproducible from (count, seed).
        """
        if n < 1 or count < 1:
            raise ValueError("need n >= 1 and count >= 1")
        dims = 2 * n if complex_mode else n
        halton = qmc.Halton(d=dims, scramble=True, seed=seed)
        raw = halton.random(count)
        z = ndtri(np.clip(raw, 1e-12, 1.0 - 1e-12))
        if complex_mode:
            pts = z[:, :n] + 1j * z[:, n:]
        else:
            pts = z
        axes = np.concatenate([np.eye(n), -np.eye(n)], axis=0)
        if complex_mode:
            axes = axes.astype(complex)
        pts = np.concatenate([pts, axes], axis=0)
        norms = np.linalg.norm(pts, axis=1)
        norms[norms == 0] = 1.0
        pts = pts / norms[:, None]
        pts.setflags(write=False)
        return cls(count=pts.shape[0], seed=seed, complex_mode=complex_mode, points=pts)

    def describe(self) -> dict:
        return {"count": self.count, "seed": self.seed, "complex_mode": self.complex_mode}


@dataclass(frozen=True, eq=False)
class CEllipticVerdict:
    """Sampled C-ellipticity verdict with the worst frequency seen."""

    is_c_elliptic: bool
    witness: np.ndarray | None
    min_singular_value: float
    max_singular_value: float
    refined: bool

    def to_dict(self) -> dict:
        return {
            "is_c_elliptic": self.is_c_elliptic,
            "verdict_kind": "sampled",
            "witness": None
            if self.witness is None
            else [[float(z.real), float(z.imag)] for z in self.witness],
            "min_singular_value": self.min_singular_value,
            "max_singular_value": self.max_singular_value,
            "refined": self.refined,
        }


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    """Machine-readable outcome of a sampled symbol classification."""

    operator: str
    n: int
    d: int
    l: int
    k: int
    tol: float
    sampling: dict
    min_singular_value: float | None
    max_singular_value: float | None
    rank_histogram: dict
    common_rank: int | None
    residual_image_dim: int
    residual_dim_trace: tuple
    is_elliptic: bool
    is_constant_rank: bool
    is_cancelling: bool
    vacuous: bool = False
    c_ellipticity: CEllipticVerdict | None = None
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "n": self.n,
            "d": self.d,
            "l": self.l,
            "k": self.k,
            "tol": self.tol,
            "sampling": dict(self.sampling),
            "min_singular_value": self.min_singular_value,
            "max_singular_value": self.max_singular_value,
            "rank_histogram": {str(r): int(c) for r, c in sorted(self.rank_histogram.items())},
            "common_rank": self.common_rank,
            "residual_image_dim": int(self.residual_image_dim),
            "is_elliptic": self.is_elliptic,
            "is_constant_rank": self.is_constant_rank,
            "is_cancelling": self.is_cancelling,
            "is_c_elliptic": None if self.c_ellipticity is None else self.c_ellipticity.to_dict(),
            "vacuous": self.vacuous,
            "conventions": dict(self.conventions),
        }


def subspace_intersection(basis_u: np.ndarray, basis_v: np.ndarray, eigtol: float = INTERSECTION_EIGTOL) -> np.ndarray:
    """Orthonormal basis of U cap V from orthonormal bases of U and V.

    Uses the projector-product spectrum: eigenvectors of P_U P_V P_U with
    eigenvalue within eigtol of 1 span the intersection.
    """
    if basis_u.shape[1] == 0 or basis_v.shape[1] == 0:
        return np.zeros((basis_u.shape[0], 0))
    pu = basis_u @ basis_u.conj().T
    pv = basis_v @ basis_v.conj().T
    m = pu @ pv @ pu
    w, vecs = np.linalg.eigh((m + m.conj().T) / 2.0)
    keep = w > 1.0 - eigtol
    return vecs[:, keep]


def _vacuous_report(spec, sampling, tol):
    return ClassificationReport(
        operator=spec.name,
        n=spec.n,
        d=spec.d,
        l=spec.l,
        k=spec.k,
        tol=tol,
        sampling=sampling.describe(),
        min_singular_value=None,
        max_singular_value=None,
        rank_histogram={0: sampling.count},
        common_rank=0,
        residual_image_dim=0,
        residual_dim_trace=(0,),
        is_elliptic=True,
        is_constant_rank=True,
        is_cancelling=True,
        vacuous=True,
    )


def classify(
    spec: OperatorSpec,
    sampling: SphereSampling | None = None,
    tol: float = DEFAULT_TOL,
) -> ClassificationReport:
    """Classify ellipticity, constant rank and cancelling by sphere sampling.

    Per-frequency ranks use the relative threshold tol * sigma_max(xi); the
    ellipticity verdict compares the global minimum singular value against
    tol times the global maximum.  The residual image dimension is computed
    by iteratively intersecting the sampled images, stopping early at zero.
    """
    if sampling is None:
        sampling = SphereSampling.standard(spec.n)
    if sampling.n != spec.n:
        raise ValueError(f"sampling dimension {sampling.n} != operator dimension {spec.n}")
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    if spec.is_vacuous:
        return _vacuous_report(spec, sampling, tol)

    symbols = symbol_on_frequencies(spec, sampling.points)
    u, s, _ = np.linalg.svd(symbols)
    per_max = s[:, 0]
    # smallest of d singular values; a wide matrix (l < d) is never injective
    if spec.l >= spec.d:
        per_min = s[:, -1]
    else:
        per_min = np.zeros(s.shape[0])
    ranks = np.sum(s > tol * per_max[:, None], axis=1)

    global_max = float(np.max(per_max))
    global_min = float(np.min(per_min))
    hist_vals, hist_counts = np.unique(ranks, return_counts=True)
    rank_histogram = {int(r): int(c) for r, c in zip(hist_vals, hist_counts)}
    is_constant_rank = len(rank_histogram) == 1
    common_rank = int(hist_vals[0]) if is_constant_rank else None
    is_elliptic = global_min > tol * global_max

    basis = None
    trace = []
    for i in range(s.shape[0]):
        r = int(ranks[i])
        image = u[i][:, :r]
        if basis is None:
            basis = image
        else:
            basis = subspace_intersection(basis, image)
        trace.append(basis.shape[1])
        if basis.shape[1] == 0:
            break
    residual_dim = trace[-1] if trace else spec.l

    return ClassificationReport(
        operator=spec.name,
        n=spec.n,
        d=spec.d,
        l=spec.l,
        k=spec.k,
        tol=tol,
        sampling=sampling.describe(),
        min_singular_value=global_min,
        max_singular_value=global_max,
        rank_histogram=rank_histogram,
        common_rank=common_rank,
        residual_image_dim=residual_dim,
        residual_dim_trace=tuple(trace),
        is_elliptic=is_elliptic,
        is_constant_rank=is_constant_rank,
        is_cancelling=residual_dim == 0,
    )


def classify_on_kernel(
    spec: OperatorSpec,
    part: PartMap,
    sampling: SphereSampling | None = None,
    tol: float = DEFAULT_TOL,
) -> ClassificationReport:
    """Classify the operator restricted to fields valued in ker(A)."""
    return classify(restrict_symbol(spec, part), sampling=sampling, tol=tol)


def _sigma_min(spec, point):
    s = np.linalg.svd(symbol_on_frequencies(spec, point[None])[0], compute_uv=False)
    if spec.l >= spec.d and s.size:
        return float(s[-1])
    return 0.0


def is_c_elliptic(
    spec: OperatorSpec,
    sampling: SphereSampling | None = None,
    tol: float = DEFAULT_TOL,
    refine_steps: int = 0,
) -> CEllipticVerdict:
    """Sampled C-ellipticity check over the complex unit sphere.

    True when sigma_min(B[xi]) stays above tol * sigma_max at every sample.
    With refine_steps > 0 the worst samples are polished by a deterministic
    Nelder-Mead descent of sigma_min over the sphere, which sharpens the
    refutation power; the verdict remains a sampled one either way.
    """
    if sampling is None:
        sampling = SphereSampling.standard(spec.n, complex_mode=True)
    if not sampling.complex_mode:
        raise ValueError("C-ellipticity requires a complex-mode sampling")
    if sampling.n != spec.n:
        raise ValueError(f"sampling dimension {sampling.n} != operator dimension {spec.n}")
    if spec.is_vacuous:
        return CEllipticVerdict(True, None, float("inf"), 0.0, refined=False)

    symbols = symbol_on_frequencies(spec, sampling.points)
    s = np.linalg.svd(symbols, compute_uv=False)
    per_max = s[:, 0]
    per_min = s[:, -1] if spec.l >= spec.d else np.zeros(s.shape[0])
    global_max = float(np.max(per_max))
    order = np.argsort(per_min)
    best_idx = int(order[0])
    best_val = float(per_min[best_idx])
    best_pt = sampling.points[best_idx].copy()
    refined = False

    if refine_steps > 0:
        from scipy.optimize import minimize

        n = spec.n

        def objective(x):
            z = x[:n] + 1j * x[n:]
            nrm = np.linalg.norm(z)
            if nrm == 0:
                return global_max
            return _sigma_min(spec, z / nrm)

        for idx in order[: min(4, len(order))]:
            z0 = sampling.points[int(idx)]
            x0 = np.concatenate([z0.real, z0.imag])
            res = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"maxiter": refine_steps, "xatol": 1e-12, "fatol": 1e-14},
            )
            if res.fun < best_val:
                z = res.x[:n] + 1j * res.x[n:]
                best_pt = z / np.linalg.norm(z)
                best_val = float(res.fun)
                refined = True

    ok = best_val > tol * global_max
    return CEllipticVerdict(
        is_c_elliptic=ok,
        witness=None if ok else best_pt,
        min_singular_value=best_val,
        max_singular_value=global_max,
        refined=refined,
    )
