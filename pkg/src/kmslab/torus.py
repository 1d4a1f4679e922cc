"""Discrete periodic fields on [0, 2*pi)^n and their spectral calculus.

The domain is fixed to [0, 2*pi)^n so grid frequencies are integer vectors
in [-M/2, M/2)^n and spectral differentiation is exact for band-limited
fields.  Spectra are normalized so that Parseval reads

    lp_norm(f, 2)^2 == sum_xi ||f_hat(xi)||^2

i.e. the coefficients absorb the cell-volume factor of the L^2 norm.
Compactly supported whole-space fields are modeled as zero-mean periodic
fields; every report states this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .operators import OperatorSpec, multiindex_enumerate

__all__ = [
    "TorusGrid",
    "TensorField",
    "SpectrumField",
    "transform",
    "inverse_transform",
    "apply_operator",
    "apply_multiplier",
    "apply_partmap",
    "lp_norm",
    "homog_sobolev_norm",
    "negative_sobolev_norm_l2",
    "sobolev_conjugate",
    "dual_exponent_chain",
    "random_bandlimited",
    "plane_wave_field",
    "bump_field",
    "constant_field",
]

ZERO_MEAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TorusGrid:
    """Uniform grid on [0, 2*pi)^n with M points per axis (M even, >= 4)."""

    n: int
    points_per_axis: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        m = self.points_per_axis
        if m < 4 or m % 2 != 0:
            raise ValueError("points_per_axis must be an even integer >= 4")

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.n

    @property
    def cell_volume(self) -> float:
        return (2.0 * math.pi / self.points_per_axis) ** self.n

    @property
    def spectrum_scale(self) -> float:
        # raw fftn output times this gives Parseval-normalized coefficients
        return (2.0 * math.pi) ** (self.n / 2.0) / self.points_per_axis**self.n

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        m = self.points_per_axis
        freqs = np.rint(np.fft.fftfreq(m) * m).astype(np.int64)
        freqs.setflags(write=False)
        return freqs

    @cached_property
    def frequency_grid(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.axis_frequencies] * self.n), indexing="ij")
        grid = np.stack(mesh, axis=-1)
        grid.setflags(write=False)
        return grid

    @cached_property
    def frequency_norm2(self) -> np.ndarray:
        out = np.sum(self.frequency_grid.astype(float) ** 2, axis=-1)
        out.setflags(write=False)
        return out

    @cached_property
    def zero_mask(self) -> np.ndarray:
        mask = ~np.any(self.frequency_grid != 0, axis=-1)
        mask.setflags(write=False)
        return mask

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        mask = np.any(self.frequency_grid == -self.points_per_axis // 2, axis=-1)
        mask.setflags(write=False)
        return mask

    @cached_property
    def points(self) -> np.ndarray:
        axis = 2.0 * math.pi * np.arange(self.points_per_axis) / self.points_per_axis
        mesh = np.meshgrid(*([axis] * self.n), indexing="ij")
        pts = np.stack(mesh, axis=-1)
        pts.setflags(write=False)
        return pts

    def frequency_list(self, skip_zero=True, skip_nyquist=True, canonical=False):
        """Flat (count, n) array of grid frequencies.

        canonical=True keeps one representative of each {xi, -xi} pair (the
        lexicographically positive one), which suffices for real fields.
        """
        flat = self.frequency_grid.reshape(-1, self.n)
        keep = np.ones(flat.shape[0], dtype=bool)
        if skip_zero:
            keep &= np.any(flat != 0, axis=1)
        if skip_nyquist:
            keep &= ~np.any(flat == -self.points_per_axis // 2, axis=1)
        flat = flat[keep]
        if canonical:
            sel = []
            for xi in flat:
                lead = next((c for c in xi if c != 0), 0)
                if lead > 0:
                    sel.append(xi)
            flat = np.array(sel, dtype=np.int64).reshape(-1, self.n)
        return flat


@dataclass(eq=False)
class TensorField:
    """A real d-vector-valued function sampled on a TorusGrid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[: self.grid.n] != self.grid.shape or vals.ndim != self.grid.n + 1:
            raise ValueError(
                f"values shape {vals.shape} incompatible with grid {self.grid.shape} + fiber"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        self.values = vals

    @property
    def fiber_dim(self) -> int:
        return self.values.shape[-1]

    @property
    def mean(self) -> np.ndarray:
        return self.values.mean(axis=tuple(range(self.grid.n)))

    @property
    def is_zero_mean(self) -> bool:
        scale = 1.0 + float(np.max(np.abs(self.values)))
        return bool(np.max(np.abs(self.mean)) <= ZERO_MEAN_TOL * scale)

    def with_zero_mean(self) -> "TensorField":
        return TensorField(self.grid, self.values - self.mean)

    def __add__(self, other):
        self._check_compatible(other)
        return TensorField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return TensorField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return TensorField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if not isinstance(other, TensorField):
            raise TypeError("expected a TensorField")
        if other.grid is not self.grid and (
            other.grid.n != self.grid.n
            or other.grid.points_per_axis != self.grid.points_per_axis
        ):
            raise ValueError("fields live on different grids")
        if other.fiber_dim != self.fiber_dim:
            raise ValueError("fields have different fiber dimensions")


@dataclass(eq=False)
class SpectrumField:
    """Fourier coefficients of a TensorField, one complex d-vector per frequency."""

    grid: TorusGrid
    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=complex)
        if coef.shape[: self.grid.n] != self.grid.shape or coef.ndim != self.grid.n + 1:
            raise ValueError("coefficient shape incompatible with grid")
        self.coefficients = coef

    @property
    def fiber_dim(self) -> int:
        return self.coefficients.shape[-1]


def _axes(grid):
    return tuple(range(grid.n))


def transform(field: TensorField) -> SpectrumField:
    """Parseval-normalized discrete Fourier transform."""
    coef = np.fft.fftn(field.values, axes=_axes(field.grid)) * field.grid.spectrum_scale
    return SpectrumField(field.grid, coef)


def inverse_transform(spectrum: SpectrumField) -> TensorField:
    """Inverse transform; the (tiny) imaginary residue of real fields is dropped."""
    vals = np.fft.ifftn(spectrum.coefficients, axes=_axes(spectrum.grid))
    return TensorField(spectrum.grid, vals.real / spectrum.grid.spectrum_scale)


def apply_operator(spec: OperatorSpec, field: TensorField) -> TensorField:
    """Apply the differential operator spectrally: coefficients map by B[i xi]."""
    if field.fiber_dim != spec.d:
        raise ValueError(f"field fiber {field.fiber_dim} != operator source {spec.d}")
    if field.grid.n != spec.n:
        raise ValueError("grid and operator dimensions differ")
    f_hat = transform(field).coefficients
    freqs = field.grid.frequency_grid.astype(float)
    out_hat = np.zeros(field.grid.shape + (spec.l,), dtype=complex)
    for alpha, mat in spec.coeffs.items():
        factor = alpha.power(1j * freqs)
        out_hat += factor[..., None] * (f_hat @ mat.T)
    return inverse_transform(SpectrumField(field.grid, out_hat))


def apply_multiplier(desc, field: TensorField) -> TensorField:
    """Apply a MultiplierDescriptor frequency-wise; the zero mode is annihilated."""
    rows, cols = desc.shape
    if field.fiber_dim != cols:
        raise ValueError(f"field fiber {field.fiber_dim} != multiplier columns {cols}")
    table = desc.grid_table(field.grid)
    f_hat = transform(field).coefficients
    out_hat = np.einsum("...rc,...c->...r", table, f_hat)
    return inverse_transform(SpectrumField(field.grid, out_hat))


def apply_partmap(part, field: TensorField) -> TensorField:
    """Apply a pointwise part map A to every fiber value."""
    if field.fiber_dim != part.d:
        raise ValueError(f"field fiber {field.fiber_dim} != part map source {part.d}")
    return TensorField(field.grid, part.apply(field.values))


def lp_norm(field: TensorField, p: float) -> float:
    """Discrete L^p norm with Euclidean (Frobenius) fiber norm."""
    if not 1 <= p < math.inf:
        raise ValueError("need 1 <= p < infinity")
    point_norms = np.linalg.norm(field.values, axis=-1)
    return float((np.sum(point_norms**p) * field.grid.cell_volume) ** (1.0 / p))


def _require_zero_mean(field, what):
    if not field.is_zero_mean:
        raise ValueError(f"{what} requires a zero-mean field (project the mean out first)")


def homog_sobolev_norm(field: TensorField, m: int, p: float) -> float:
    """L^p norm of the full m-th derivative tensor of the field.

    Components are weighted by the multinomial multiplicities m!/alpha!, so
    at p = 2 the squared norm equals the |xi|^{2m}-weighted spectrum sum.
    m = 0 reduces to the plain L^p norm.
    """
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    if m == 0:
        return lp_norm(field, p)
    _require_zero_mean(field, "homogeneous Sobolev norm")
    grid = field.grid
    f_hat = transform(field).coefficients
    freqs = grid.frequency_grid.astype(float)
    indices = multiindex_enumerate(grid.n, m)
    blocks = np.empty(grid.shape + (len(indices), field.fiber_dim))
    for b, beta in enumerate(indices):
        weight = math.sqrt(beta.multiplicity())
        deriv_hat = beta.power(1j * freqs)[..., None] * f_hat
        vals = np.fft.ifftn(deriv_hat, axes=_axes(grid)).real / grid.spectrum_scale
        blocks[..., b, :] = weight * vals
    stacked = TensorField(grid, blocks.reshape(grid.shape + (-1,)))
    return lp_norm(stacked, p)


def negative_sobolev_norm_l2(field: TensorField, s: float, p: float = 2.0) -> float:
    """Homogeneous negative-order norm via Fourier weights, p = 2 only.

    Returns (sum_{xi != 0} |xi|^{-2s} ||f_hat(xi)||^2)^{1/2}.  Other p are
    rejected: the package has no grid-honest realization of W^{-s,p} norms.
    """
    if p != 2:
        raise ValueError("negative-order Sobolev norms are implemented for p = 2 only")
    if s < 0:
        raise ValueError("order s must be >= 0")
    _require_zero_mean(field, "negative-order Sobolev norm")
    grid = field.grid
    f_hat = transform(field).coefficients
    norm2 = grid.frequency_norm2
    weights = np.zeros_like(norm2)
    nz = ~grid.zero_mask
    weights[nz] = norm2[nz] ** (-s)
    total = np.sum(weights * np.sum(np.abs(f_hat) ** 2, axis=-1))
    return float(math.sqrt(total))


def sobolev_conjugate(p: float, n: int) -> float:
    """The Sobolev conjugate exponent p* = n p / (n - p) for 1 <= p < n."""
    if not 1 <= p < n:
        raise ValueError(f"need 1 <= p < n, got p={p}, n={n}")
    return n * p / (n - p)


def dual_exponent_chain(p: float, n: int) -> tuple[float, float]:
    """The duality exponent q = n p / (n p - n + p) and its conjugate q/(q-1).

    The chain closes on the Sobolev conjugate: q/(q-1) = p*.  Both values
    are returned; the identity is verified internally.
    """
    if not 1 <= p < n:
        raise ValueError(f"need 1 <= p < n, got p={p}, n={n}")
    q = n * p / (n * p - n + p)
    q_dual = q / (q - 1.0)
    p_star = sobolev_conjugate(p, n)
    if abs(q_dual - p_star) > 1e-12 * max(1.0, p_star):
        raise AssertionError(
            f"duality chain failed to close: q/(q-1)={q_dual} vs p*={p_star}"
        )
    return q, q_dual


# --------------------------------------------------------------------------
# field generators (discrete stand-ins for compactly supported test fields)
# --------------------------------------------------------------------------

def random_bandlimited(
    grid: TorusGrid,
    d: int,
    cutoff: int,
    seed: int,
    normalize: bool = True,
) -> TensorField:
    """Zero-mean random field supported on frequencies with |xi_j| <= cutoff.

    Deterministic given the seed; normalized to unit L^2 norm by default.
    """
    if not 1 <= cutoff < grid.points_per_axis // 2:
        raise ValueError("cutoff must satisfy 1 <= cutoff < M/2")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(grid.shape + (d,))
    hat = np.fft.fftn(white, axes=_axes(grid))
    freqs = grid.frequency_grid
    keep = np.all(np.abs(freqs) <= cutoff, axis=-1) & ~grid.zero_mask
    hat *= keep[..., None]
    vals = np.fft.ifftn(hat, axes=_axes(grid)).real
    field = TensorField(grid, vals)
    if normalize:
        nrm = lp_norm(field, 2)
        if nrm > 0:
            field = field * (1.0 / nrm)
    return field


def plane_wave_field(grid: TorusGrid, xi0, v, envelope=None) -> TensorField:
    """The real plane wave Re(v e^{i x . xi0}); spectrum supported on {+-xi0}.

    xi0 must be a nonzero grid frequency without Nyquist components.  An
    optional envelope (callable of the point array or a scalar array)
    multiplies the wave and smears the spectrum; the result is re-projected
    to zero mean in that case.
    """
    xi0 = np.asarray(xi0)
    if xi0.shape != (grid.n,):
        raise ValueError(f"frequency must have shape ({grid.n},)")
    xi_int = np.rint(xi0).astype(np.int64)
    if not np.array_equal(xi_int, xi0):
        raise ValueError("plane-wave frequency must be an integer vector")
    if not np.any(xi_int):
        raise ValueError("plane-wave frequency must be nonzero")
    half = grid.points_per_axis // 2
    if np.any(np.abs(xi_int) >= half):
        raise ValueError("plane-wave frequency must avoid the Nyquist rows (|xi_j| < M/2)")
    v = np.asarray(v)
    phase = grid.points @ xi_int.astype(float)
    wave = np.exp(1j * phase)[..., None] * v
    vals = wave.real
    if envelope is not None:
        env = envelope(grid.points) if callable(envelope) else np.asarray(envelope)
        vals = vals * env[..., None]
        vals = vals - vals.mean(axis=tuple(range(grid.n)))
    return TensorField(grid, vals)


def bump_field(
    grid: TorusGrid,
    center,
    width: float,
    v,
    zero_mean: bool = True,
) -> TensorField:
    """Gaussian bump exp(-|x - c|^2 / (2 w^2)) v with periodic distance.

    With zero_mean=True (default) the mean is projected out so the field is
    usable in homogeneous norms; pass False to compare against whole-space
    quadrature oracles.
    """
    center = np.asarray(center, dtype=float)
    if center.shape != (grid.n,):
        raise ValueError(f"center must have shape ({grid.n},)")
    if width <= 0:
        raise ValueError("width must be positive")
    v = np.asarray(v, dtype=float)
    delta = grid.points - center
    delta = (delta + math.pi) % (2.0 * math.pi) - math.pi
    r2 = np.sum(delta**2, axis=-1)
    profile = np.exp(-r2 / (2.0 * width**2))
    vals = profile[..., None] * v
    field = TensorField(grid, vals)
    return field.with_zero_mean() if zero_mean else field


def constant_field(grid: TorusGrid, v) -> TensorField:
    v = np.asarray(v, dtype=float)
    return TensorField(grid, np.broadcast_to(v, grid.shape + v.shape).copy())
