"""Periodic grids, unitary transforms, Fourier multipliers, and norms.

Everything downstream (residual assembly, linear solves, continuation)
is built on the primitives in this module.  Conventions, fixed once here:

* Grid frequencies are measured in cycles per unit length,
  ``xi_j = k_j / L_j`` with integer ``k_j in [-N_j/2, N_j/2)``, so a
  derivative ``d/dx_j`` is the multiplier ``2*pi*1j*xi_j``.
* The forward transform is scaled so that discrete Parseval holds with
  the grid quadrature weight ``prod(L_j / N_j)``; a constant field ``c``
  transforms to a single zero-frequency entry ``c * sqrt(prod(L_j))``.
* Fields are immutable after construction; every operation returns a
  new field.  Sample and spectrum views are cached on first use.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .errors import (
    DimensionMismatch,
    GridMismatch,
    NonFiniteSymbol,
    NonZeroMean,
)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on a d-dimensional box, d in {1, 2, 3}.

    Parameters
    ----------
    extent : tuple of float
        Box side lengths ``L_j``.
    points : tuple of int
        Samples per axis ``N_j``; each must be even and at least 8.
    dealias_fraction : float
        Fraction of the Nyquist band retained by :func:`dealias`
        (default 2/3 rule).
    """

    extent: tuple
    points: tuple
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        extent = tuple(float(L) for L in np.atleast_1d(self.extent))
        points = tuple(int(N) for N in np.atleast_1d(self.points))
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "points", points)
        if len(extent) != len(points):
            raise DimensionMismatch("extent and points must have equal length")
        if not 1 <= len(points) <= 3:
            raise DimensionMismatch("grids support d in {1, 2, 3}")
        for L in extent:
            if L <= 0:
                raise ValueError("box lengths must be positive")
        for N in points:
            if N < 8 or N % 2:
                raise ValueError("per-axis sample counts must be even and >= 8")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def dim(self):
        return len(self.points)

    @cached_property
    def cell_volume(self):
        return math.prod(L / N for L, N in zip(self.extent, self.points))

    @cached_property
    def volume(self):
        return math.prod(self.extent)

    @cached_property
    def forward_scale(self):
        """Spectrum scale factor making the transform unitary."""
        return math.sqrt(self.volume) / math.prod(self.points)

    @cached_property
    def axes_freqs(self):
        """Per-axis frequency arrays in cycles per unit length."""
        return tuple(
            np.fft.fftfreq(N, d=L / N) for L, N in zip(self.extent, self.points)
        )

    @cached_property
    def xi(self):
        """Frequency vectors, shape ``(dim, *points)``."""
        mesh = np.meshgrid(*self.axes_freqs, indexing="ij")
        out = np.stack(mesh)
        out.flags.writeable = False
        return out

    @cached_property
    def xi_mag(self):
        out = np.sqrt(np.sum(self.xi**2, axis=0))
        out.flags.writeable = False
        return out

    @cached_property
    def coords(self):
        """Physical coordinates, shape ``(dim, *points)``."""
        axes = [
            L * np.arange(N) / N for L, N in zip(self.extent, self.points)
        ]
        out = np.stack(np.meshgrid(*axes, indexing="ij"))
        out.flags.writeable = False
        return out

    @cached_property
    def dealias_keep(self):
        """Boolean mask of modes kept by the dealiasing rule."""
        keep = np.ones(self.points, dtype=bool)
        for j, N in enumerate(self.points):
            k = np.fft.fftfreq(N) * N  # integer mode numbers
            axis_keep = np.abs(k) <= self.dealias_fraction * N / 2
            shape = [1] * self.dim
            shape[j] = N
            keep &= axis_keep.reshape(shape)
        keep.flags.writeable = False
        return keep

    def fft(self, samples):
        """Forward transform of a component-stacked real sample array."""
        axes = tuple(range(-self.dim, 0))
        return np.fft.fftn(samples, axes=axes) * self.forward_scale

    def ifft(self, spectrum):
        """Inverse transform back to real samples."""
        axes = tuple(range(-self.dim, 0))
        out = np.fft.ifftn(spectrum, axes=axes) / self.forward_scale
        return np.ascontiguousarray(out.real)


def _freeze(arr):
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


class SpectralField:
    """Sampled periodic field with a lazily cached spectrum.

    Data is stored component-major with shape ``(components, *points)``.
    Scalars have one component, vectors ``d``, matrices ``d*d`` in
    row-major order.  Instances are immutable; the sample and spectrum
    arrays are frozen and always coherent with each other.
    """

    __slots__ = ("grid", "components", "_samples", "_spectrum")

    def __init__(self, grid, samples=None, spectrum=None, components=None):
        if (samples is None) == (spectrum is None):
            raise ValueError("provide exactly one of samples or spectrum")
        self.grid = grid
        data = samples if samples is not None else spectrum
        data = np.asarray(data)
        if data.shape[-grid.dim:] != grid.points:
            raise GridMismatch(
                f"trailing shape {data.shape} does not match grid {grid.points}"
            )
        if data.ndim == grid.dim:
            data = data[np.newaxis]
        elif data.ndim != grid.dim + 1:
            raise ValueError("field arrays must have shape (components, *points)")
        self.components = data.shape[0]
        if components is not None and components != self.components:
            raise ValueError("component count mismatch")
        if samples is not None:
            self._samples = _freeze(data.astype(float, copy=True))
            self._spectrum = None
        else:
            self._samples = None
            self._spectrum = _freeze(data.astype(complex, copy=True))

    @classmethod
    def from_samples(cls, grid, samples):
        return cls(grid, samples=samples)

    @classmethod
    def from_spectrum(cls, grid, spectrum):
        return cls(grid, spectrum=spectrum)

    @classmethod
    def zeros(cls, grid, components=1):
        return cls(grid, samples=np.zeros((components,) + grid.points))

    @property
    def samples(self):
        if self._samples is None:
            self._samples = _freeze(self.grid.ifft(self._spectrum))
        return self._samples

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = _freeze(self.grid.fft(self._samples))
        return self._spectrum

    def component(self, i):
        return self.samples[i]

    def mean(self):
        """Per-component spatial means."""
        return self.samples.reshape(self.components, -1).mean(axis=1)

    def __add__(self, other):
        self._check_compat(other)
        return SpectralField(self.grid, samples=self.samples + other.samples)

    def __sub__(self, other):
        self._check_compat(other)
        return SpectralField(self.grid, samples=self.samples - other.samples)

    def __mul__(self, scalar):
        return SpectralField(self.grid, samples=self.samples * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, samples=-self.samples)

    def _check_compat(self, other):
        if self.grid is not other.grid and self.grid != other.grid:
            raise GridMismatch("fields live on different grids")
        if self.components != other.components:
            raise ValueError("component counts differ")


def transform_forward(field):
    """Return the cached unitary spectrum of ``field``."""
    return field.spectrum


def transform_inverse(grid, spectrum):
    """Build a field from a spectrum (assumed Hermitian-symmetric)."""
    return SpectralField(grid, spectrum=spectrum)


def apply_multiplier(field, symbol, zero_mode):
    """Apply a Fourier multiplier given by ``symbol`` evaluated on the grid.

    ``symbol`` maps the frequency array ``xi`` of shape ``(d, *points)``
    either to a scalar symbol of shape ``(*points,)`` (applied to every
    component) or to a matrix symbol of shape ``(cout, cin, *points)``.
    The value at ``xi = 0`` is always replaced by ``zero_mode``, which
    must be supplied explicitly (scalar, or ``(cout, cin)`` matrix).

    Raises
    ------
    NonFiniteSymbol
        If the symbol is NaN/Inf at any nonzero grid frequency.
    """
    grid = field.grid
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.asarray(symbol(grid.xi), dtype=complex)
    origin = (0,) * grid.dim
    if sym.shape == grid.points:
        sym = sym.copy()
        sym[origin] = complex(zero_mode)
        _require_finite(sym, grid)
        out = sym * field.spectrum
    elif sym.ndim == grid.dim + 2:
        sym = sym.copy()
        sym[(slice(None), slice(None)) + origin] = np.asarray(zero_mode, dtype=complex)
        _require_finite(sym, grid)
        if sym.shape[1] != field.components:
            raise ValueError("matrix symbol does not match component count")
        out = np.einsum("ab...,b...->a...", sym, field.spectrum)
    else:
        raise ValueError(f"unexpected symbol shape {sym.shape}")
    return SpectralField(grid, spectrum=out)


def _require_finite(sym, grid):
    if not np.all(np.isfinite(sym)):
        raise NonFiniteSymbol("multiplier symbol is not finite on the grid")


# ---------------------------------------------------------------------------
# differential and projection operators (raw-spectrum helpers plus field API)


def _deriv_spec(grid, spec, axis):
    """Spectral derivative along ``axis`` of a component-stacked spectrum."""
    return spec * (2j * np.pi * grid.xi[axis])


def grad_spectrum(grid, spec_scalar):
    """Gradient of a scalar spectrum -> stacked (d, *points) spectrum."""
    return np.stack([_deriv_spec(grid, spec_scalar, j) for j in range(grid.dim)])


def gradient(f):
    """Spectral gradient of a scalar field -> vector field."""
    if f.components != 1:
        raise ValueError("gradient expects a scalar field")
    grid = f.grid
    return SpectralField(grid, spectrum=grad_spectrum(grid, f.spectrum[0]))


def divergence(X):
    """Spectral divergence of a vector field -> scalar field."""
    grid = X.grid
    if X.components != grid.dim:
        raise ValueError("divergence expects a d-component field")
    out = sum(_deriv_spec(grid, X.spectrum[j], j) for j in range(grid.dim))
    return SpectralField(grid, spectrum=out[np.newaxis])


def laplacian(f):
    """Componentwise spectral Laplacian."""
    grid = f.grid
    sym = -4 * np.pi**2 * grid.xi_mag**2
    return SpectralField(grid, spectrum=f.spectrum * sym)


def jacobian(v):
    """Gradient of a vector field; component (i, j) holds ``d_j v_i``."""
    grid = v.grid
    d = grid.dim
    if v.components != d:
        raise ValueError("jacobian expects a d-component field")
    spec = np.stack(
        [_deriv_spec(grid, v.spectrum[i], j) for i in range(d) for j in range(d)]
    )
    return SpectralField(grid, spectrum=spec)


def viscous_stress(v):
    """Stress-like tensor ``grad v + (grad v)^T + 2 (div v) I``."""
    grid = v.grid
    d = grid.dim
    J = jacobian(v).spectrum.reshape(d, d, *grid.points)
    divv = np.einsum("ii...->...", J)
    S = J + np.swapaxes(J, 0, 1)
    for i in range(d):
        S[i, i] += 2 * divv
    return SpectralField(grid, spectrum=S.reshape(d * d, *grid.points))


def traceless_strain(v):
    """Trace-free symmetric gradient ``grad v + (grad v)^T - (2/d)(div v) I``."""
    grid = v.grid
    d = grid.dim
    J = jacobian(v).spectrum.reshape(d, d, *grid.points)
    divv = np.einsum("ii...->...", J)
    D = J + np.swapaxes(J, 0, 1)
    for i in range(d):
        D[i, i] -= (2.0 / d) * divv
    return SpectralField(grid, spectrum=D.reshape(d * d, *grid.points))


def leray_project(X):
    """Project onto divergence-free fields; the zero mode is carried."""
    grid = X.grid
    d = grid.dim

    def symbol(xi):
        mag2 = np.sum(xi**2, axis=0)
        out = np.zeros((d, d) + grid.points, dtype=complex)
        for a in range(d):
            out[a, a] = 1.0
            for b in range(d):
                out[a, b] -= xi[a] * xi[b] / mag2
        return out

    return apply_multiplier(X, symbol, zero_mode=np.eye(d))


def riesz(j, f):
    """Riesz transform ``i xi_j / |xi|`` applied componentwise; 0 at xi = 0."""
    grid = f.grid

    def symbol(xi):
        return 1j * xi[j] / np.sqrt(np.sum(xi**2, axis=0))

    return apply_multiplier(f, symbol, zero_mode=0.0)


def freq_split(f, kappa):
    """Split into (low, high) parts across the sharp cutoff ``|xi| < kappa``."""
    if kappa <= 0:
        raise ValueError("cutoff must be positive")
    grid = f.grid
    low_mask = grid.xi_mag < kappa
    spec = f.spectrum
    low = SpectralField(grid, spectrum=np.where(low_mask, spec, 0.0))
    high = SpectralField(grid, spectrum=np.where(low_mask, 0.0, spec))
    return low, high


def dyadic_smoother(f, j):
    """Sharp truncation to ``|xi| < 2**j`` (level ``j >= 1``)."""
    if j < 1:
        raise ValueError("smoothing level must be >= 1")
    low, _ = freq_split(f, 2.0**j)
    return low


def dealias(f):
    """Zero every mode with any ``|k_j| > dealias_fraction * N_j / 2``."""
    grid = f.grid
    return SpectralField(grid, spectrum=f.spectrum * grid.dealias_keep)


# ---------------------------------------------------------------------------
# norms


def l2_norm(f):
    """Continuum L2 norm via the grid quadrature weight."""
    s = f.samples
    return math.sqrt(np.sum(s * s) * f.grid.cell_volume)


def sobolev_norm(f, s):
    """Discrete H^s norm, weight ``<xi>^(2s)`` summed over components."""
    if s < 0:
        raise ValueError("s must be >= 0")
    grid = f.grid
    w = (1.0 + grid.xi_mag**2) ** s
    return math.sqrt(np.sum(w * np.abs(f.spectrum) ** 2))


def hminus1_seminorm(f):
    """Homogeneous H^-1 seminorm; the zero mode is excluded."""
    grid = f.grid
    mag = grid.xi_mag.copy()
    mag[(0,) * grid.dim] = np.inf
    w = 1.0 / (2 * np.pi * mag) ** 2
    return math.sqrt(np.sum(w * np.abs(f.spectrum) ** 2))


def _relative_mean(f):
    peak = np.max(np.abs(f.samples))
    if peak == 0:
        return 0.0
    return float(np.max(np.abs(f.mean())) / peak)


def aniso_norm(eta, s):
    """Anisotropic Sobolev norm of a mean-free scalar field.

    Low frequencies ``0 < |xi| < 1`` carry the weight
    ``|xi|^-2 (|xi|^4 + xi_1^2)``; frequencies ``|xi| >= 1`` carry
    ``<xi>^(2s)``.  The zero mode is excluded (the space contains no
    nontrivial constants).
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    if eta.components != 1:
        raise ValueError("aniso_norm expects a scalar field")
    if _relative_mean(eta) > 1e-12:
        raise NonZeroMean("anisotropic norm requires a mean-free field")
    grid = eta.grid
    mag = grid.xi_mag
    with np.errstate(divide="ignore", invalid="ignore"):
        low_w = (mag**4 + grid.xi[0] ** 2) / mag**2
    low_w[(0,) * grid.dim] = 0.0
    high_w = (1.0 + mag**2) ** s
    w = np.where(mag < 1.0, low_w, high_w)
    w[(0,) * grid.dim] = 0.0
    return math.sqrt(np.sum(w * np.abs(eta.spectrum) ** 2))


def param_norms(state, params, s):
    """Parameter-weighted norms of a state.

    Returns a dict with the viscosity-weighted velocity norm, the
    tension-weighted surface norm, and the combined surface norm:

    * ``mu_v``:        ``(||v||_{H^s}^2 + mu^4 ||v||_{H^(2+s)}^2)^(1/2)``
    * ``sigma_eta``:   ``(||eta||_{Hs}^2 + sigma^4 ||eta||_{H(2+s)}^2)^(1/2)``
      with the anisotropic norms,
    * ``mu_sigma_eta``: the combined weight with the extra
      ``(mu^2 + sigma^2)`` block on the odd orders.
    """
    mu, sigma = params.mu, params.sigma
    v, eta = state.v, state.eta
    nv = math.sqrt(sobolev_norm(v, s) ** 2 + mu**4 * sobolev_norm(v, s + 2) ** 2)
    a = [aniso_norm(eta, s + k) for k in range(4)]
    nse = math.sqrt(a[0] ** 2 + sigma**4 * a[2] ** 2)
    nmse = math.sqrt(
        a[0] ** 2
        + sigma**4 * a[2] ** 2
        + (mu**2 + sigma**2) * (a[1] ** 2 + sigma**4 * a[3] ** 2)
    )
    return {"mu_v": nv, "sigma_eta": nse, "mu_sigma_eta": nmse}
