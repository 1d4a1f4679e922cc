"""Fourier multipliers built from operator symbols.

Three constructions:

* the Mihlin-Korn reconstruction multiplier
  ``m(xi) = (i xi)^alpha (B*[xi] B[xi])^{-1} B*[xi]`` recovering derivatives
  of a field from the action of an elliptic operator on it,
* the frequency-wise orthogonal projector onto ker B[xi] (the projection
  used in the Fonseca-Mueller constant-rank estimate),
* the Moore-Penrose pseudoinverse symbol B[xi]^+.

All multipliers annihilate the zero frequency: homogeneous symbols are
undefined there and torus fields are reduced to zero mean before multiplier
application.  Grid-assembled symbol tables are cached per descriptor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .operators import MultiIndex, OperatorSpec, PartMap, restrict_symbol, symbol_on_frequencies

__all__ = [
    "MultiplierDescriptor",
    "MultiplierConstructionError",
    "ConstantRankViolation",
    "identity_multiplier",
    "mihlin_korn_multiplier",
    "kernel_projection_symbol",
    "pseudoinverse_symbol",
    "composed_correction_symbol",
    "infer_constant_rank",
]

RANK_TOL = 1e-8
CONDITION_LIMIT = 1e12


class MultiplierConstructionError(RuntimeError):
    """The symbol is numerically unusable at some frequency (non-ellipticity)."""


class ConstantRankViolation(RuntimeError):
    """The symbol rank at some frequency differs from the declared rank."""


@dataclass(eq=False)
class MultiplierDescriptor:
    """A frequency-to-matrix function with declared homogeneity.

    evaluate maps a single nonzero frequency (length-n array) to a matrix of
    the declared shape; evaluate_batch, when present, does the same for a
    (..., n) stack and is used for fast grid assembly.  Assembled grids are
    cached keyed by (n, points_per_axis).
    """

    shape: tuple[int, int]
    homogeneity_degree: int
    provenance: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    evaluate_batch: Callable[[np.ndarray], np.ndarray] | None = None
    zero_mode_policy: str = "annihilate"
    _grid_cache: dict = field(default_factory=dict, repr=False)

    def on_frequencies(self, freqs: np.ndarray, zero_mask: np.ndarray | None = None) -> np.ndarray:
        """Evaluate on a stack of frequencies; zero-masked entries are annihilated."""
        freqs = np.asarray(freqs, dtype=float)
        if zero_mask is None:
            zero_mask = ~np.any(freqs != 0, axis=-1)
        if self.evaluate_batch is not None:
            # zero frequencies are replaced by a harmless stand-in and
            # annihilated below; homogeneous symbols are undefined at 0
            safe = np.where(zero_mask[..., None], 1.0, freqs)
            out = np.asarray(self.evaluate_batch(safe))
        else:
            flat = freqs.reshape(-1, freqs.shape[-1])
            flat_mask = zero_mask.reshape(-1)
            rows = np.zeros((flat.shape[0],) + self.shape, dtype=complex)
            for i, xi in enumerate(flat):
                if flat_mask[i]:
                    continue
                rows[i] = self.evaluate(xi)
            out = rows.reshape(freqs.shape[:-1] + self.shape)
        out = out.copy()
        out[zero_mask] = 0.0
        return out

    def grid_table(self, grid) -> np.ndarray:
        """Symbol matrices for every frequency of a TorusGrid, cached."""
        key = (grid.n, grid.points_per_axis)
        table = self._grid_cache.get(key)
        if table is None:
            table = self.on_frequencies(
                grid.frequency_grid.astype(float), zero_mask=grid.zero_mask
            )
            table.setflags(write=False)
            self._grid_cache[key] = table
        return table


def identity_multiplier(d: int) -> MultiplierDescriptor:
    eye = np.eye(d)
    return MultiplierDescriptor(
        shape=(d, d),
        homogeneity_degree=0,
        provenance="identity",
        evaluate=lambda xi: eye.copy(),
        evaluate_batch=lambda freqs: np.broadcast_to(eye, freqs.shape[:-1] + (d, d)).copy(),
    )


def _padded_singular_values(s, d):
    """Singular values padded with zeros up to length d (wide matrices)."""
    if s.shape[-1] == d:
        return s
    pad = np.zeros(s.shape[:-1] + (d - s.shape[-1],))
    return np.concatenate([s, pad], axis=-1)


def _check_rank(s_padded, rank, tol, freqs):
    """Raise ConstantRankViolation naming the worst frequency on mismatch."""
    smax = s_padded[..., 0]
    scale = np.where(smax > 0, smax, 1.0)
    ok = np.ones(s_padded.shape[:-1], dtype=bool)
    if rank > 0:
        ok &= s_padded[..., rank - 1] > tol * scale
    if rank < s_padded.shape[-1]:
        ok &= s_padded[..., rank] <= tol * scale
    if not np.all(ok):
        bad = np.argwhere(~ok)[0]
        xi = freqs[tuple(bad)]
        raise ConstantRankViolation(
            f"symbol rank differs from declared rank {rank} at frequency {xi.tolist()}"
        )


def mihlin_korn_multiplier(
    spec: OperatorSpec,
    alpha: MultiIndex,
    condition_limit: float = CONDITION_LIMIT,
    operator_input: bool = False,
) -> MultiplierDescriptor:
    """The reconstruction multiplier (i xi)^alpha (B* B)^{-1} B* of an elliptic operator.

    Satisfies m(xi) B[xi] = (i xi)^alpha Id_d for xi != 0 and is homogeneous
    of degree |alpha| - k.  Construction fails, naming the frequency, when
    cond(B*[xi] B[xi]) exceeds condition_limit - the numerical signature of a
    non-elliptic symbol.

    The spectral action of the operator on a field is B[i xi] = i^k B[xi],
    not B[xi] itself; operator_input=True multiplies by (-i)^k so that
    applying the descriptor to the field B u recovers d^alpha u exactly.
    """
    if alpha.dimension != spec.n:
        raise ValueError("multi-index dimension does not match the operator")
    if alpha.order > spec.k:
        raise ValueError(f"need |alpha| <= k = {spec.k}, got {alpha.order}")
    if spec.d == 0:
        raise ValueError("vacuous operator has no reconstruction multiplier")
    phase = (-1j) ** spec.k if operator_input else 1.0

    def batch(freqs):
        freqs = np.asarray(freqs, dtype=float)
        sym = symbol_on_frequencies(spec, freqs)
        u, s, vh = np.linalg.svd(sym, full_matrices=False)
        if s.shape[-1] < spec.d:
            raise MultiplierConstructionError(
                f"{spec.name}: symbol can never be injective (l = {spec.l} < d = {spec.d})"
            )
        smin = s[..., -1]
        smax = s[..., 0]
        bad = (smin <= 0) | ((smax / np.where(smin > 0, smin, 1.0)) ** 2 > condition_limit)
        if np.any(bad):
            xi = freqs[tuple(np.argwhere(bad)[0])]
            raise MultiplierConstructionError(
                f"{spec.name}: symbol numerically singular at frequency {xi.tolist()}"
                " (operator not elliptic there)"
            )
        pinv = np.einsum("...ji,...j,...kj->...ik", vh.conj(), 1.0 / s, u.conj())
        factor = phase * alpha.power(1j * freqs)
        return factor[..., None, None] * pinv

    return MultiplierDescriptor(
        shape=(spec.d, spec.l),
        homogeneity_degree=alpha.order - spec.k,
        provenance=f"mihlin_korn({spec.name}, alpha={alpha}, operator_input={operator_input})",
        evaluate=lambda xi: batch(np.asarray(xi, dtype=float)[None])[0],
        evaluate_batch=batch,
    )


def kernel_projection_symbol(
    spec: OperatorSpec,
    rank: int,
    tol: float = RANK_TOL,
) -> MultiplierDescriptor:
    """Frequency-wise orthogonal projector onto ker B[xi] for a constant-rank operator.

    The declared rank is trusted and enforced: a frequency whose singular
    values disagree with it raises ConstantRankViolation instead of silently
    changing the projector dimension.
    """
    if not 0 <= rank <= spec.d:
        raise ValueError(f"rank must lie in [0, {spec.d}]")

    def batch(freqs):
        freqs = np.asarray(freqs, dtype=float)
        sym = symbol_on_frequencies(spec, freqs)
        _, s, vh = np.linalg.svd(sym, full_matrices=True)
        _check_rank(_padded_singular_values(s, spec.d), rank, tol, freqs)
        vker = np.swapaxes(vh[..., rank:, :], -1, -2).conj()
        return vker @ np.swapaxes(vker, -1, -2).conj()

    return MultiplierDescriptor(
        shape=(spec.d, spec.d),
        homogeneity_degree=0,
        provenance=f"kernel_projection({spec.name}, r={rank})",
        evaluate=lambda xi: batch(np.asarray(xi, dtype=float)[None])[0],
        evaluate_batch=batch,
    )


def pseudoinverse_symbol(
    spec: OperatorSpec,
    rank: int,
    tol: float = RANK_TOL,
) -> MultiplierDescriptor:
    """Moore-Penrose pseudoinverse symbol B[xi]^+ for a constant-rank operator.

    Satisfies B[xi]^+ B[xi] = Id - Pi(xi) with Pi the kernel projector; the
    homogeneity degree is -k.
    """
    if not 0 <= rank <= min(spec.d, spec.l):
        raise ValueError(f"rank must lie in [0, {min(spec.d, spec.l)}]")

    def batch(freqs):
        freqs = np.asarray(freqs, dtype=float)
        sym = symbol_on_frequencies(spec, freqs)
        u, s, vh = np.linalg.svd(sym, full_matrices=False)
        _check_rank(_padded_singular_values(s, spec.d), rank, tol, freqs)
        inv = np.zeros_like(s)
        if rank > 0:
            inv[..., :rank] = 1.0 / s[..., :rank]
        return np.einsum("...ji,...j,...kj->...ik", vh.conj(), inv, u.conj())

    return MultiplierDescriptor(
        shape=(spec.d, spec.l),
        homogeneity_degree=-spec.k,
        provenance=f"pseudoinverse({spec.name}, r={rank})",
        evaluate=lambda xi: batch(np.asarray(xi, dtype=float)[None])[0],
        evaluate_batch=batch,
    )


def infer_constant_rank(spec: OperatorSpec, seed: int = 7, count: int = 256) -> int:
    """Common symbol rank from a small deterministic sphere sample.

    Raises ConstantRankViolation when the sampled ranks disagree.
    """
    from .classify import SphereSampling, classify

    if spec.is_vacuous:
        return 0
    report = classify(spec, SphereSampling.standard(spec.n, count=count, seed=seed))
    if not report.is_constant_rank:
        raise ConstantRankViolation(
            f"{spec.name}: sampled ranks are not constant: {report.rank_histogram}"
        )
    return int(report.common_rank)


def composed_correction_symbol(
    spec: OperatorSpec,
    part: PartMap,
    rank: int | None = None,
    projector: str = "restricted",
    tol: float = RANK_TOL,
) -> MultiplierDescriptor:
    """Symbol of the correction map P -> Pi_B P_ker(A)[P].

    projector="restricted" (default) uses the kernel projector of the
    operator restricted to ker(A), expressed back in R^d coordinates; it
    vanishes identically when the restricted operator is elliptic.
    projector="full" composes the unrestricted kernel projector of B with
    the pointwise projection onto ker(A); for B = matrix curl and A = tr
    this is the composition with an explicit Riesz-kernel realization.
    Both choices annihilate plane waves valued in ker(A) cap ker B[xi] and
    yield the constant-rank inequality with different constants.
    """
    if part.d != spec.d:
        raise ValueError("part map and operator fiber dimensions differ")
    if projector not in ("restricted", "full"):
        raise ValueError("projector must be 'restricted' or 'full'")
    d = spec.d

    if projector == "full":
        r = infer_constant_rank(spec) if rank is None else rank
        inner = kernel_projection_symbol(spec, r, tol=tol)
        proj = part.proj_ker

        def batch(freqs):
            return inner.on_frequencies(np.asarray(freqs, dtype=float)) @ proj

        provenance = f"correction_full({spec.name}, ker({part.name}))"
    else:
        restricted = restrict_symbol(spec, part)
        if restricted.d == 0:
            zero = np.zeros((d, d))
            return MultiplierDescriptor(
                shape=(d, d),
                homogeneity_degree=0,
                provenance=f"correction_restricted({spec.name}, ker({part.name})=0)",
                evaluate=lambda xi: zero.copy(),
                evaluate_batch=lambda freqs: np.zeros(
                    np.asarray(freqs).shape[:-1] + (d, d)
                ),
            )
        r = infer_constant_rank(restricted) if rank is None else rank
        inner = kernel_projection_symbol(restricted, r, tol=tol)
        kb = part.kernel_basis

        def batch(freqs):
            pi = inner.on_frequencies(np.asarray(freqs, dtype=float))
            return kb @ pi @ kb.T

        provenance = f"correction_restricted({spec.name}, ker({part.name}))"

    return MultiplierDescriptor(
        shape=(d, d),
        homogeneity_degree=0,
        provenance=provenance,
        evaluate=lambda xi: batch(np.asarray(xi, dtype=float)[None])[0],
        evaluate_batch=batch,
    )
