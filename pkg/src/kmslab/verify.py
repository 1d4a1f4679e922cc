"""Assembling and testing Korn-Maxwell-Sobolev type inequalities on the torus.

Each inequality variant controls a field (minus an optional correction term)
through a pointwise part A[P] plus a differential part B P:

* korn_ell        |D^k P|_p              <~  |B P|_p            (elliptic B)
* kms_sym         |P|_p*                 <~  |sym P|_p* + |Curl P|_p
* asplit          |P|_p*                 <~  |A P|_p*  + |Curl P|_p
* korn_ellip      |P|_{k-1,p*}           <~  |A P|_{k-1,p*} + |B P|_p
* korn_const      |P - corr P|_{k-1,p*}  <~  same right side  (constant rank)
* korn_const2_p2  negative-order (p = 2 Fourier-weight) version of korn_const
* korn_const_p1   korn_const at p = 1, p* = n/(n-1)  (needs cancelling)

The empirical constant of an inequality is estimated over three field
families: an exhaustive single-frequency sweep (with the adversarial fiber
vector picked per frequency by an SVD subproblem), random band-limited
fields, and localized bumps.  Single-frequency trials are evaluated in
closed form: for P = cos(x.xi) v every norm in play factorizes into an
algebraic fiber part and a scalar profile norm that depends only on
M / gcd(xi, M), so the sweep costs small dense linear algebra per frequency.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .classify import SphereSampling, classify, classify_on_kernel
from .multipliers import MultiplierDescriptor, composed_correction_symbol
from .operators import (
    OperatorSpec,
    PartMap,
    catalog_operator,
    catalog_partmap,
    eval_symbol,
    symbol_on_frequencies,
)
from .torus import (
    TensorField,
    TorusGrid,
    apply_multiplier,
    apply_operator,
    apply_partmap,
    bump_field,
    homog_sobolev_norm,
    lp_norm,
    negative_sobolev_norm_l2,
    plane_wave_field,
    random_bandlimited,
    sobolev_conjugate,
)

__all__ = [
    "INEQUALITY_IDS",
    "PreconditionError",
    "InequalityConfig",
    "TrialResult",
    "KernelConstants",
    "FieldFamily",
    "ConstantEstimate",
    "RefinementStudy",
    "NecessityDemoResult",
    "CrosscheckResult",
    "ProbeResult",
    "trial_ratio",
    "kms_sides",
    "run_trial",
    "single_frequency_trial",
    "worst_vector",
    "search_kernel_witness",
    "estimate_constant",
    "refinement_study",
    "necessity_demo",
    "curl_riesz_crosscheck",
    "p1_probe",
    "check_hypotheses",
]

INEQUALITY_IDS = (
    "korn_ell",
    "kms_sym",
    "asplit",
    "korn_ellip",
    "korn_const",
    "korn_const2_p2",
    "korn_const_p1",
)

_CORRECTION_IDS = ("korn_const", "korn_const2_p2", "korn_const_p1")

RHS_NEGLIGIBLE = 1e-14
LHS_NEGLIGIBLE = 1e-10


class PreconditionError(ValueError):
    """An inequality trial was requested outside its stated preconditions."""


def worker_count() -> int:
    """Worker count from KMSLAB_WORKERS; affects speed only, never results."""
    try:
        return max(1, int(os.environ.get("KMSLAB_WORKERS", "1")))
    except ValueError:
        return 1


def trial_ratio(lhs: float, rhs: float) -> float:
    """lhs/rhs with the degenerate-denominator convention.

    rhs below 1e-14 counts as zero: the ratio is inf when lhs is above
    1e-10 (a genuine failure) and 0 when both sides are negligible.
    """
    if rhs <= RHS_NEGLIGIBLE:
        return math.inf if lhs > LHS_NEGLIGIBLE else 0.0
    return lhs / rhs


def _json_float(x):
    if x is None:
        return None
    if math.isinf(x):
        return "inf"
    return float(x)


@dataclass(frozen=True)
class KernelConstants:
    """Dimensional constants of the Riesz/Newtonian kernel."""

    n: int
    omega_n: float

    @classmethod
    def for_dimension(cls, n: int) -> "KernelConstants":
        if n < 1:
            raise ValueError("dimension must be >= 1")
        omega = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
        return cls(n=n, omega_n=omega)


@dataclass(eq=False)
class InequalityConfig:
    """One inequality variant bound to an operator, part map, exponent and grid."""

    inequality_id: str
    operator: OperatorSpec
    part: PartMap | None
    p: float
    grid: TorusGrid
    correction_enabled: bool | None = None

    def __post_init__(self):
        ident = self.inequality_id
        if ident not in INEQUALITY_IDS:
            raise ValueError(f"unknown inequality id {ident!r}; known: {INEQUALITY_IDS}")
        if self.operator.n != self.grid.n:
            raise ValueError("operator and grid dimensions differ")
        if ident == "korn_ell":
            if self.part is not None:
                raise ValueError("korn_ell has no pointwise part; pass part=None")
        else:
            if self.part is None:
                raise ValueError(f"{ident} needs a part map (use the zero map for A = 0)")
            if self.part.d != self.operator.d:
                raise ValueError("part map and operator fiber dimensions differ")
        if ident == "kms_sym":
            if self.operator.name != "curl_matrix_rowwise" or self.part.name != "sym":
                raise ValueError("kms_sym fixes A = sym and B = curl_matrix_rowwise")
        if ident == "asplit" and self.operator.k != 1:
            raise ValueError("asplit expects a first-order differential part")
        n = self.grid.n
        if ident == "korn_const_p1":
            if self.p != 1:
                raise ValueError("korn_const_p1 forces p = 1")
        elif ident == "korn_const2_p2":
            if self.p != 2:
                raise ValueError("korn_const2_p2 forces p = 2")
            if not self.p < n:
                raise ValueError("need p < n")
        else:
            if not 1 < self.p < n:
                raise ValueError(f"need 1 < p < n, got p={self.p}, n={n}")
        if self.correction_enabled is None:
            self.correction_enabled = ident in _CORRECTION_IDS
        if self.correction_enabled and ident not in _CORRECTION_IDS:
            raise ValueError(f"{ident} carries no correction term")
        self._correction_cache = None

    @property
    def k(self) -> int:
        return self.operator.k

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def p_star(self) -> float:
        return sobolev_conjugate(self.p, self.n)

    @property
    def correction_descriptor(self) -> MultiplierDescriptor | None:
        if not self.correction_enabled:
            return None
        if self._correction_cache is None:
            self._correction_cache = composed_correction_symbol(
                self.operator, self.part, projector="restricted"
            )
        return self._correction_cache

    def with_grid(self, grid: TorusGrid) -> "InequalityConfig":
        return InequalityConfig(
            inequality_id=self.inequality_id,
            operator=self.operator,
            part=self.part,
            p=self.p,
            grid=grid,
            correction_enabled=self.correction_enabled,
        )

    def describe(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "operator": self.operator.name,
            "part": None if self.part is None else self.part.name,
            "n": self.n,
            "points_per_axis": self.grid.points_per_axis,
            "k": self.k,
            "p": self.p,
            "p_star": None if self.inequality_id == "korn_ell" else self.p_star,
            "correction_enabled": bool(self.correction_enabled),
        }


@dataclass(eq=False)
class TrialResult:
    """Both sides of one inequality trial and their ratio."""

    lhs: float
    rhs: float
    ratio: float
    field_descriptor: dict
    config: dict

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": _json_float(self.ratio),
            "field": dict(self.field_descriptor),
            "config": dict(self.config),
        }


def check_hypotheses(config: InequalityConfig, count: int = 512, seed: int = 11):
    """Classifier check matching the inequality variant.

    Returns (ok, note, classification_echo).  The caller decides whether a
    failed hypothesis is fatal (library default) or merely flagged (the
    p = 1 probe keeps running "outside theorem hypotheses").
    """
    sampling = SphereSampling.standard(config.n, count=count, seed=seed)
    ident = config.inequality_id
    if ident == "korn_ell":
        report = classify(config.operator, sampling)
        ok = report.is_elliptic
        note = "" if ok else "operator is not elliptic"
    else:
        report = classify_on_kernel(config.operator, config.part, sampling)
        if ident in ("kms_sym", "asplit", "korn_ellip"):
            ok = report.is_elliptic
            note = "" if ok else "operator is not elliptic on ker(A)"
        elif ident in ("korn_const", "korn_const2_p2"):
            ok = report.is_constant_rank
            note = "" if ok else "operator does not have constant rank on ker(A)"
        else:
            ok = report.is_constant_rank and report.is_cancelling
            note = (
                ""
                if ok
                else "operator is not constant-rank and cancelling on ker(A)"
            )
    if note:
        note += " - outside theorem hypotheses"
    return ok, note, report.to_dict()


def _validate_field(config, fld):
    if fld.grid.n != config.grid.n or fld.grid.points_per_axis != config.grid.points_per_axis:
        raise PreconditionError("field grid does not match the configured grid")
    if fld.fiber_dim != config.operator.d:
        raise PreconditionError(
            f"field fiber {fld.fiber_dim} != operator source dimension {config.operator.d}"
        )
    if not fld.is_zero_mean:
        raise PreconditionError("trial fields must have zero mean")


def kms_sides(config: InequalityConfig, fld: TensorField) -> tuple[float, float]:
    """Evaluate both sides of the configured inequality for one field."""
    _validate_field(config, fld)
    k = config.k
    ident = config.inequality_id
    if ident == "korn_ell":
        lhs = homog_sobolev_norm(fld, k, config.p)
        rhs = lp_norm(apply_operator(config.operator, fld), config.p)
        return lhs, rhs

    reduced = fld
    if config.correction_enabled:
        reduced = fld - apply_multiplier(config.correction_descriptor, fld)
    a_field = apply_partmap(config.part, fld)
    b_field = apply_operator(config.operator, fld)
    if ident == "korn_const2_p2":
        lhs = negative_sobolev_norm_l2(reduced, 1.0)
        rhs = negative_sobolev_norm_l2(a_field, 1.0) + negative_sobolev_norm_l2(
            b_field, float(k)
        )
    else:
        p_star = config.p_star
        lhs = homog_sobolev_norm(reduced, k - 1, p_star)
        rhs = homog_sobolev_norm(a_field, k - 1, p_star) + lp_norm(b_field, config.p)
    return lhs, rhs


def run_trial(config: InequalityConfig, fld: TensorField, descriptor: dict) -> TrialResult:
    lhs, rhs = kms_sides(config, fld)
    return TrialResult(lhs, rhs, trial_ratio(lhs, rhs), descriptor, config.describe())


# --------------------------------------------------------------------------
# exact single-frequency trials
# --------------------------------------------------------------------------

def _profile_norm(grid: TorusGrid, reduced_order: int, q: float, odd: bool) -> float:
    """Discrete L^q norm of |cos(x.xi)| resp. |sin(x.xi)| on the grid.

    The values x.xi mod 2pi are uniformly distributed over the m-th roots of
    unity with m = M / gcd(xi, M), so the norm depends on xi only through m
    (passed as reduced_order).
    """
    theta = 2.0 * math.pi * np.arange(reduced_order) / reduced_order
    vals = np.abs(np.sin(theta)) if odd else np.abs(np.cos(theta))
    mean = float(np.mean(vals**q))
    return (2.0 * math.pi) ** (grid.n / q) * mean ** (1.0 / q)


def _reduced_order(grid: TorusGrid, xi) -> int:
    g = int(grid.points_per_axis)
    for c in xi:
        g = math.gcd(g, abs(int(c)))
    return grid.points_per_axis // g


def _frequency_scales(config, xi_abs, profiles):
    """Scalars (a, b, c) with lhs = a |w|, rhs = b |A v| + c |B[xi] v|.

    profiles is a callable (q, parity_odd) -> profile norm (scalar or array
    aligned with xi_abs).
    """
    k = config.k
    ident = config.inequality_id
    if ident == "korn_ell":
        nk = profiles(config.p, k % 2 == 1)
        return xi_abs**k * nk, None, nk
    if ident == "korn_const2_p2":
        n0 = profiles(2.0, False)
        nk = profiles(2.0, k % 2 == 1)
        a = xi_abs**-1.0 * n0
        return a, a, xi_abs ** (-float(k)) * nk
    nl = profiles(config.p_star, (k - 1) % 2 == 1)
    nb = profiles(config.p, k % 2 == 1)
    a = xi_abs ** float(k - 1) * nl
    return a, a, nb


def single_frequency_trial(config: InequalityConfig, xi, v) -> TrialResult:
    """Exact trial for the plane wave P = cos(x.xi) v, no FFT involved.

    Agrees with the FFT path of kms_sides on plane_wave_field(xi, v) to
    roundoff; used by the exhaustive frequency sweep.
    """
    xi = np.asarray(xi)
    v = np.asarray(v, dtype=float)
    grid = config.grid
    m = _reduced_order(grid, xi)
    xi_abs = float(np.linalg.norm(xi.astype(float)))

    def profiles(q, odd):
        return _profile_norm(grid, m, q, odd)

    a, b, c = _frequency_scales(config, xi_abs, profiles)
    bmat = eval_symbol(config.operator, xi.astype(float)).entries
    bv = float(np.linalg.norm(bmat @ v))
    if config.inequality_id == "korn_ell":
        lhs = a * float(np.linalg.norm(v))
        rhs = c * bv
    else:
        w = v
        if config.correction_enabled:
            cmat = config.correction_descriptor.evaluate(xi.astype(float))
            w = v - np.real(cmat) @ v
        av = float(np.linalg.norm(config.part.apply(v)))
        lhs = a * float(np.linalg.norm(w))
        rhs = b * av + c * bv
    descriptor = {
        "generator": "plane_wave",
        "xi": [int(x) for x in np.rint(xi)],
        "v": [float(x) for x in v],
    }
    return TrialResult(lhs, rhs, trial_ratio(lhs, rhs), descriptor, config.describe())


def worst_vector(config: InequalityConfig, xi, null_tol: float = 1e-12):
    """Adversarial fiber vector for a single frequency, found by SVD.

    Maximizes |L v| / |S v| with L the (scaled) left side and S the stacked
    right-side matrix; when S has a null direction that the left side does
    not annihilate, that direction is returned with an infinity flag.
    """
    vs, flags = _sweep_vectors(config, np.asarray(xi, dtype=float)[None], null_tol)
    return vs[0], bool(flags[0])


def _sweep_vectors(config, freqs, null_tol=1e-12):
    """Vectorized worst_vector over a (F, n) stack of frequencies."""
    d = config.operator.d
    count = freqs.shape[0]
    xi_abs = np.linalg.norm(freqs, axis=1)
    grid = config.grid
    orders = np.array([_reduced_order(grid, xi) for xi in freqs])
    uniq = np.unique(orders)

    def profiles(q, odd):
        table = {int(m): _profile_norm(grid, int(m), q, odd) for m in uniq}
        return np.array([table[int(m)] for m in orders])

    a, b, c = _frequency_scales(config, xi_abs, profiles)
    bsym = symbol_on_frequencies(config.operator, freqs).real

    if config.inequality_id == "korn_ell":
        _, s, vh = np.linalg.svd(bsym)
        if config.operator.l >= d:
            smin = s[..., -1]
        else:
            smin = np.zeros(count)
        flags = smin <= null_tol * np.maximum(s[..., 0], 1.0)
        return vh[:, -1, :], flags

    eye = np.eye(d)
    if config.correction_enabled:
        cmats = np.real(config.correction_descriptor.on_frequencies(freqs))
        lmat = a[:, None, None] * (eye - cmats)
    else:
        lmat = a[:, None, None] * np.broadcast_to(eye, (count, d, d))
    amat = np.broadcast_to(config.part.matrix, (count,) + config.part.matrix.shape)
    smat = np.concatenate([b[:, None, None] * amat, c[:, None, None] * bsym], axis=1)

    u, s, vh = np.linalg.svd(smat, full_matrices=False)
    smax = np.maximum(s[..., 0], 1.0)
    inv = np.where(s > null_tol * smax[..., None], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    pinv = np.einsum("fji,fj,fkj->fik", vh, inv, u)
    row_proj = pinv @ smat
    null_proj = eye - row_proj

    null_gain = lmat @ null_proj
    gain_s, gain_vh = _svd_right(null_gain)
    flags = gain_s > 1e-8 * np.maximum(a, 1e-300)

    tmat = lmat @ pinv
    _, t_vh = _svd_right(tmat)
    v_fin = np.einsum("fik,fk->fi", pinv, t_vh)
    norms = np.linalg.norm(v_fin, axis=1)
    fallback = np.zeros(d)
    fallback[0] = 1.0
    v_fin = np.where(
        norms[:, None] > 1e-13, v_fin / np.maximum(norms, 1e-300)[:, None], fallback
    )
    vs = np.where(flags[:, None], gain_vh, v_fin)
    return vs, flags


def _svd_right(mats):
    """Top singular value and top right-singular vector of a matrix stack."""
    _, s, vh = np.linalg.svd(mats)
    return s[..., 0], vh[..., 0, :]


def search_kernel_witness(part: PartMap, spec: OperatorSpec, grid: TorusGrid, tol: float = 1e-10):
    """Lowest grid frequency carrying a unit vector in ker(A) cap ker(B[xi]).

    Returns (xi, v) or None; the scan order (by |xi|, then lexicographic)
    makes the result deterministic.
    """
    freqs = grid.frequency_list(canonical=True)
    if freqs.shape[0] == 0:
        return None
    norm2 = np.sum(freqs.astype(float) ** 2, axis=1)
    keys = [freqs[:, j] for j in reversed(range(freqs.shape[1]))] + [norm2]
    order = np.lexsort(tuple(keys))
    for idx in order:
        xi = freqs[idx]
        stacked = np.vstack(
            [part.matrix, eval_symbol(spec, xi.astype(float)).entries.real]
        )
        _, s, vh = np.linalg.svd(stacked)
        if s[-1] <= tol * max(s[0], 1.0):
            return xi.copy(), vh[-1].copy()
    return None


# --------------------------------------------------------------------------
# constant estimation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldFamily:
    """Which generators feed estimate_constant."""

    sweep: bool = True
    random_trials: int = 50
    random_cutoff: int | None = None
    bump_widths: tuple = (0.4, 0.8)
    witness: bool = True

    def describe(self) -> dict:
        return {
            "sweep": self.sweep,
            "random_trials": self.random_trials,
            "random_cutoff": self.random_cutoff,
            "bump_widths": list(self.bump_widths),
            "witness": self.witness,
        }


@dataclass(eq=False)
class ConstantEstimate:
    """Aggregated statistics of inequality trials over a field family."""

    config: dict
    family: dict
    seed: int
    n_trials: int
    max_ratio: float
    max_finite_ratio: float
    median_ratio: float
    argmax: dict
    infinite_count: int
    family_maxima: dict
    hypotheses_met: bool
    hypotheses_note: str
    classification: dict

    def to_dict(self) -> dict:
        return {
            "config": dict(self.config),
            "family": dict(self.family),
            "seed": self.seed,
            "n_trials": self.n_trials,
            "max_ratio": _json_float(self.max_ratio),
            "max_finite_ratio": _json_float(self.max_finite_ratio),
            "median_ratio": _json_float(self.median_ratio),
            "argmax": dict(self.argmax),
            "infinite_count": self.infinite_count,
            "family_maxima": {k: _json_float(v) for k, v in self.family_maxima.items()},
            "hypotheses_met": self.hypotheses_met,
            "hypotheses_note": self.hypotheses_note,
            "classification": dict(self.classification),
        }


class _TrialCollector:
    def __init__(self):
        self.finite = []
        self.best = -1.0
        self.argmax = {}
        self.inf_count = 0
        self.family_maxima = {}
        self.n = 0

    def add(self, family_name, ratio, descriptor):
        self.n += 1
        prev = self.family_maxima.get(family_name, 0.0)
        self.family_maxima[family_name] = max(prev, ratio)
        if math.isinf(ratio):
            self.inf_count += 1
            if not math.isinf(self.best) or not self.argmax:
                self.argmax = descriptor
            self.best = math.inf
            return
        self.finite.append(ratio)
        if not math.isinf(self.best) and ratio > self.best:
            self.best = ratio
            self.argmax = descriptor


def _chunks(total, size):
    for start in range(0, total, size):
        yield start, min(start + size, total)


def _sweep_collect(config, collector, workers):
    freqs = config.grid.frequency_list(canonical=True).astype(float)
    if freqs.shape[0] == 0:
        return
    spans = list(_chunks(freqs.shape[0], 1024))

    def work(span):
        lo, hi = span
        chunk = freqs[lo:hi]
        vs, flags = _sweep_vectors(config, chunk)
        out = []
        for i in range(chunk.shape[0]):
            trial = single_frequency_trial(config, chunk[i], vs[i])
            out.append((trial.ratio, trial.field_descriptor))
        return out

    if workers > 1 and len(spans) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, spans))
    else:
        results = [work(span) for span in spans]
    for block in results:
        for ratio, descriptor in block:
            collector.add("sweep", ratio, descriptor)


def estimate_constant(
    config: InequalityConfig,
    family: FieldFamily | None = None,
    trials: int | None = None,
    seed: int = 0,
    enforce: bool = True,
    workers: int | None = None,
) -> ConstantEstimate:
    """Estimate the empirical inequality constant over a field family.

    Deterministic given the seed; the single-frequency sweep is exhaustive
    over the grid (one representative per +-xi pair).  Infinite ratios
    propagate to max_ratio and are counted separately.
    """
    if family is None:
        family = FieldFamily()
    if trials is not None:
        family = replace(family, random_trials=trials)
    if workers is None:
        workers = worker_count()
    hyp_ok, note, class_echo = check_hypotheses(config)
    if enforce and not hyp_ok:
        raise PreconditionError(note)

    grid = config.grid
    d = config.operator.d
    collector = _TrialCollector()

    if family.sweep:
        _sweep_collect(config, collector, workers)

    cutoff = family.random_cutoff
    if cutoff is None:
        cutoff = max(1, grid.points_per_axis // 4)
    for t in range(family.random_trials):
        fld = random_bandlimited(
            grid, d, cutoff, seed=np.random.SeedSequence((seed, 101, t))
        )
        descriptor = {
            "generator": "random_bandlimited",
            "seed_root": seed,
            "index": t,
            "cutoff": cutoff,
        }
        trial = run_trial(config, fld, descriptor)
        collector.add("random", trial.ratio, descriptor)

    center = np.full(grid.n, math.pi)
    for i, width in enumerate(family.bump_widths):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 202, i)))
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        fld = bump_field(grid, center, width, v)
        descriptor = {"generator": "bump", "width": width, "seed_root": seed, "index": i}
        trial = run_trial(config, fld, descriptor)
        collector.add("bump", trial.ratio, descriptor)

    if family.witness and config.inequality_id != "korn_ell":
        found = search_kernel_witness(config.part, config.operator, grid)
        if found is not None:
            xi, v = found
            fld = plane_wave_field(grid, xi, v)
            descriptor = {
                "generator": "witness_plane_wave",
                "xi": [int(x) for x in xi],
                "v": [float(x) for x in v],
            }
            trial = run_trial(config, fld, descriptor)
            collector.add("witness", trial.ratio, descriptor)
        else:
            collector.add("witness", 0.0, {"generator": "witness_plane_wave", "xi": None})

    finite = np.array(collector.finite) if collector.finite else np.array([0.0])
    max_finite = float(np.max(finite))
    return ConstantEstimate(
        config=config.describe(),
        family=family.describe(),
        seed=seed,
        n_trials=collector.n,
        max_ratio=math.inf if collector.inf_count else collector.best,
        max_finite_ratio=max_finite,
        median_ratio=float(np.median(finite)),
        argmax=collector.argmax,
        infinite_count=collector.inf_count,
        family_maxima=collector.family_maxima,
        hypotheses_met=hyp_ok,
        hypotheses_note=note,
        classification=class_echo,
    )


@dataclass(eq=False)
class RefinementStudy:
    """Constant estimates across a chain of grid refinements."""

    sizes: list
    estimates: list
    max_ratios: list
    growth_fractions: list
    max_growth: float | None
    all_finite: bool

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "max_ratios": [_json_float(r) for r in self.max_ratios],
            "growth_fractions": [_json_float(g) for g in self.growth_fractions],
            "max_growth": _json_float(self.max_growth) if self.max_growth is not None else None,
            "all_finite": self.all_finite,
            "estimates": [e.to_dict() for e in self.estimates],
        }


def refinement_study(
    config: InequalityConfig,
    sizes,
    family: FieldFamily | None = None,
    trials: int | None = None,
    seed: int = 0,
    enforce: bool = True,
) -> RefinementStudy:
    """Re-estimate the constant on successively finer grids.

    Random-field cutoffs scale with the grid (M // 4) unless the family
    pins them.  A grid-stable maximum ratio is the discrete proxy for the
    inequality holding with a grid-independent constant.
    """
    sizes = list(sizes)
    if any(m % 2 or m < 4 for m in sizes) or sorted(sizes) != sizes:
        raise ValueError("sizes must be increasing even integers >= 4")
    estimates = []
    for m in sizes:
        cfg = config.with_grid(TorusGrid(config.n, m))
        estimates.append(
            estimate_constant(cfg, family=family, trials=trials, seed=seed, enforce=enforce)
        )
    maxima = [e.max_ratio for e in estimates]
    growths = []
    for lo, hi in zip(maxima, maxima[1:]):
        if math.isinf(lo) or math.isinf(hi) or lo <= 0:
            growths.append(math.inf if math.isinf(hi) and not math.isinf(lo) else math.nan)
        else:
            growths.append(hi / lo - 1.0)
    finite_growths = [g for g in growths if not math.isnan(g)]
    return RefinementStudy(
        sizes=sizes,
        estimates=estimates,
        max_ratios=maxima,
        growth_fractions=growths,
        max_growth=max(finite_growths) if finite_growths else None,
        all_finite=all(not math.isinf(r) for r in maxima),
    )


# --------------------------------------------------------------------------
# necessity of the correction term
# --------------------------------------------------------------------------

@dataclass(eq=False)
class NecessityDemoResult:
    """Paired corrected/uncorrected trials on a kernel-intersection witness."""

    found: bool
    message: str
    xi: list | None
    v: list | None
    uncorrected: TrialResult | None
    corrected: TrialResult | None

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "message": self.message,
            "xi": self.xi,
            "v": self.v,
            "uncorrected": None if self.uncorrected is None else self.uncorrected.to_dict(),
            "corrected": None if self.corrected is None else self.corrected.to_dict(),
        }


def necessity_demo(
    part: PartMap,
    spec: OperatorSpec,
    grid: TorusGrid,
    p: float = 2.0,
    tol: float = 1e-10,
) -> NecessityDemoResult:
    """Show that dropping the correction breaks the constant-rank inequality.

    Searches the grid for a frequency xi and unit v in ker(A) cap ker(B[xi]);
    the plane wave cos(x.xi) v then has vanishing right side while only the
    corrected left side vanishes with it.  When no witness exists the
    correction is unnecessary on this grid, the constant-rank inequality
    degenerates to the elliptic one, and that is reported instead.
    """
    found = search_kernel_witness(part, spec, grid, tol=tol)
    if found is None:
        return NecessityDemoResult(
            found=False,
            message=(
                "correction unnecessary on this grid: no kernel-intersection witness; "
                "the operator behaves elliptically on ker(A)"
            ),
            xi=None,
            v=None,
            uncorrected=None,
            corrected=None,
        )
    xi, v = found
    fld = plane_wave_field(grid, xi, v)
    base = dict(
        inequality_id="korn_const", operator=spec, part=part, p=p, grid=grid
    )
    uncorrected_cfg = InequalityConfig(**base, correction_enabled=False)
    corrected_cfg = InequalityConfig(**base, correction_enabled=True)
    descriptor = {
        "generator": "witness_plane_wave",
        "xi": [int(x) for x in xi],
        "v": [float(x) for x in v],
    }
    return NecessityDemoResult(
        found=True,
        message="witness found; uncorrected ratio diverges, corrected left side vanishes",
        xi=[int(x) for x in xi],
        v=[float(x) for x in v],
        uncorrected=run_trial(uncorrected_cfg, fld, descriptor),
        corrected=run_trial(corrected_cfg, fld, descriptor),
    )


# --------------------------------------------------------------------------
# explicit Riesz-kernel cross-check for B = Curl, A = tr
# --------------------------------------------------------------------------

@dataclass(eq=False)
class CrosscheckResult:
    mode: str
    max_relative_deviation: float
    details: dict

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "max_relative_deviation": self.max_relative_deviation,
            "details": {
                k: (_json_float(v) if isinstance(v, float) else v)
                for k, v in self.details.items()
            },
        }


_EVAL_OFFSETS = (
    (0, 0, 1),
    (1, 1, 0),
    (2, 0, 1),
    (0, 2, 2),
    (1, 2, 3),
    (3, 1, 0),
    (2, 2, 1),
    (1, 0, 2),
    (0, 1, 3),
    (3, 3, 2),
)

_BUMP_MATRIX = np.array(
    [[1.0, 0.5, 0.0], [-0.3, -1.0, 0.2], [0.1, 0.4, 0.25]]
)


def curl_riesz_crosscheck(
    field: TensorField | None = None,
    mode: str = "symbol",
    part_name: str = "tr",
    operator_name: str = "curl_matrix_rowwise",
    grid: TorusGrid | None = None,
    eval_points: int = 10,
    width: float = 0.5,
) -> CrosscheckResult:
    """Check the explicit Riesz-kernel realization of the Curl correction.

    For B the row-wise matrix curl and A = tr, the composition of the kernel
    projector of B with the pointwise projection onto ker(tr) is the Fourier
    multiplier (row-wise projection onto xi) o dev, whose real-space kernel
    is the Riesz potential 1/(n omega_n) (x-y)/|x-y|^n applied to
    Div dev P (row-wise).  symbol mode verifies the multiplier identity at
    every nonzero grid frequency (exact algebra); quadrature mode compares a
    direct real-space summation against the spectral result at a few
    evaluation points, with a loose tolerance acknowledging the
    periodic-versus-whole-space mismatch.
    """
    from .operators import OPERATOR_ALIASES, PARTMAP_ALIASES

    if OPERATOR_ALIASES.get(operator_name, operator_name) != "curl_matrix_rowwise":
        raise ValueError("the explicit kernel is cross-checked for B = curl_matrix_rowwise only")
    if PARTMAP_ALIASES.get(part_name, part_name) != "tr":
        raise ValueError("the explicit kernel is cross-checked for A = tr only")
    if mode not in ("symbol", "quadrature"):
        raise ValueError("mode must be 'symbol' or 'quadrature'")
    if not 1 <= eval_points <= 10:
        raise ValueError("eval_points must lie in [1, 10]")

    op = catalog_operator("curl_matrix_rowwise", 3)
    part = catalog_partmap("tr", 3)
    dev = catalog_partmap("dev", 3)
    full_desc = composed_correction_symbol(op, part, projector="full")

    if mode == "symbol":
        g = grid or TorusGrid(3, 16)
        freqs = g.frequency_list(skip_zero=True, skip_nyquist=False).astype(float)
        table = np.real(full_desc.on_frequencies(freqs))
        units = freqs / np.linalg.norm(freqs, axis=1)[:, None]
        proj = np.einsum("fi,fj->fij", units, units)
        closed = np.zeros((freqs.shape[0], 9, 9))
        for i in range(3):
            closed[:, 3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = proj
        closed = closed @ dev.matrix
        deviation = float(np.max(np.linalg.norm(table - closed, axis=(1, 2))))

        restricted = composed_correction_symbol(op, part, projector="restricted")
        restricted_dev = float(
            np.max(
                np.linalg.norm(
                    np.real(restricted.on_frequencies(freqs)) - closed, axis=(1, 2)
                )
            )
        )
        return CrosscheckResult(
            mode="symbol",
            max_relative_deviation=deviation,
            details={
                "frequencies_checked": int(freqs.shape[0]),
                "points_per_axis": g.points_per_axis,
                "restricted_projector_deviation": restricted_dev,
            },
        )

    g = grid or TorusGrid(3, 32)
    if field is None:
        center = np.full(3, math.pi)
        field = bump_field(g, center, width, _BUMP_MATRIX.reshape(9))
    else:
        g = field.grid
    if field.fiber_dim != 9:
        raise ValueError("quadrature mode needs a 3x3 matrix field (fiber 9)")
    if not field.is_zero_mean:
        raise PreconditionError("quadrature mode needs a zero-mean field")

    corr = apply_multiplier(full_desc, field)
    div_op = catalog_operator("div_matrix_rowwise", 3)
    source = apply_operator(div_op, apply_partmap(dev, field))

    constants = KernelConstants.for_dimension(3)
    prefactor = 1.0 / (3.0 * constants.omega_n)
    points = g.points
    gvals = source.values
    half = g.points_per_axis // 2
    deviations = []
    magnitudes = []
    pairs = []
    for offset in _EVAL_OFFSETS[:eval_points]:
        idx = tuple(half + o for o in offset)
        x = points[idx]
        disp = x - points
        disp = (disp + math.pi) % (2.0 * math.pi) - math.pi
        r = np.linalg.norm(disp, axis=-1)
        kern = np.zeros_like(disp)
        nz = r > 0
        kern[nz] = disp[nz] / (r[nz] ** 3)[:, None]
        quad = prefactor * g.cell_volume * np.einsum(
            "xi,xj->ij", gvals.reshape(-1, 3), kern.reshape(-1, 3)
        )
        spectral = corr.values[idx].reshape(3, 3)
        deviations.append(float(np.linalg.norm(quad - spectral)))
        magnitudes.append(float(np.linalg.norm(spectral)))
        pairs.append({"index": list(idx), "quadrature": quad.reshape(9).tolist()})
    scale = max(magnitudes)
    deviation = max(deviations) / scale if scale > 0 else 0.0
    return CrosscheckResult(
        mode="quadrature",
        max_relative_deviation=float(deviation),
        details={
            "points_per_axis": g.points_per_axis,
            "eval_points": eval_points,
            "bump_width": width,
            "max_spectral_magnitude": scale,
        },
    )


# --------------------------------------------------------------------------
# p = 1 probe
# --------------------------------------------------------------------------

@dataclass(eq=False)
class ProbeResult:
    sizes: list
    max_ratios: list
    growth_fractions: list
    hypotheses_met: bool
    hypotheses_note: str
    estimates: list

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "max_ratios": [_json_float(r) for r in self.max_ratios],
            "growth_fractions": [_json_float(g) for g in self.growth_fractions],
            "hypotheses_met": self.hypotheses_met,
            "hypotheses_note": self.hypotheses_note,
            "estimates": [e.to_dict() for e in self.estimates],
        }


def p1_probe(
    part: PartMap,
    spec: OperatorSpec,
    sizes,
    family: FieldFamily | None = None,
    trials: int | None = None,
    seed: int = 0,
) -> ProbeResult:
    """Boundedness probe of the constant-rank inequality at p = 1.

    The exponent is p* = n/(n-1).  Boundedness across refinements is
    reported as an observed property, never a proof; when the constant-rank
    or cancelling hypothesis fails on ker(A) the probe still runs and flags
    the verdict as outside the theorem hypotheses.
    """
    sizes = list(sizes)
    base = InequalityConfig(
        inequality_id="korn_const_p1",
        operator=spec,
        part=part,
        p=1.0,
        grid=TorusGrid(spec.n, sizes[0]),
    )
    hyp_ok, note, _ = check_hypotheses(base)
    study = refinement_study(
        base, sizes, family=family, trials=trials, seed=seed, enforce=False
    )
    return ProbeResult(
        sizes=sizes,
        max_ratios=study.max_ratios,
        growth_fractions=study.growth_fractions,
        hypotheses_met=hyp_ok,
        hypotheses_note=note,
        estimates=study.estimates,
    )
