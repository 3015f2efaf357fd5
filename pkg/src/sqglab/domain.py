"""Rectangle geometry, Dirichlet sine eigenbasis, transforms, and norms.

A scalar field has two representations: coefficients against the orthonormal
eigenbasis w_jk = (2/sqrt(Lx*Ly)) sin(j pi x/Lx) sin(k pi y/Ly), or nodal
values on a uniform collocation grid that includes the boundary.  Type-I sine
transforms map between the two exactly for band-limited data: a grid with
(gx, gy) intervals per side holds gx-1 x-modes and gy-1 y-modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.fft import dctn, dstn

_workers = 1


def set_fft_workers(n: int) -> None:
    """Cap the worker threads used by the internal FFT calls."""
    global _workers
    _workers = max(1, int(n))


@dataclass(frozen=True)
class RectDomain:
    """Axis-aligned rectangle (0,Lx) x (0,Ly) with zero boundary values."""

    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("side lengths must be positive")

    @property
    def diam(self) -> float:
        return float(np.hypot(self.lx, self.ly))

    @property
    def area(self) -> float:
        return self.lx * self.ly

    def boundary_distance(self, x, y):
        """Distance to the boundary, min(x, Lx-x, y, Ly-y)."""
        return np.minimum.reduce([np.asarray(x, float), self.lx - np.asarray(x, float),
                                  np.asarray(y, float), self.ly - np.asarray(y, float)])

    def grid(self, gx: int, gy: int):
        """Nodes of the uniform (gx+1) x (gy+1) collocation grid, as a meshgrid pair."""
        x = np.linspace(0.0, self.lx, gx + 1)
        y = np.linspace(0.0, self.ly, gy + 1)
        return np.meshgrid(x, y, indexing="ij")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue table for the Dirichlet Laplacian on a rectangle.

    Modes are (j,k) with 1 <= j <= nx, 1 <= k <= ny and eigenvalues
    lam_jk = pi^2 (j^2/Lx^2 + k^2/Ly^2).
    """

    domain: RectDomain
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("mode counts must be at least 1")

    @cached_property
    def jmodes(self) -> np.ndarray:
        return np.arange(1, self.nx + 1)

    @cached_property
    def kmodes(self) -> np.ndarray:
        return np.arange(1, self.ny + 1)

    @cached_property
    def lam(self) -> np.ndarray:
        """Eigenvalues, shape (nx, ny)."""
        jx = self.jmodes.astype(float) / self.domain.lx
        ky = self.kmodes.astype(float) / self.domain.ly
        return np.pi**2 * (jx[:, None] ** 2 + ky[None, :] ** 2)

    @cached_property
    def lam1(self) -> float:
        return float(self.lam[0, 0])

    @cached_property
    def kx(self) -> np.ndarray:
        """x-wavenumbers j*pi/Lx, shape (nx, 1)."""
        return (np.pi * self.jmodes / self.domain.lx)[:, None]

    @cached_property
    def ky(self) -> np.ndarray:
        """y-wavenumbers k*pi/Ly, shape (1, ny)."""
        return (np.pi * self.kmodes / self.domain.ly)[None, :]

    @property
    def shape(self):
        return (self.nx, self.ny)

    def default_grid(self):
        """Smallest grid on which every mode of this spectrum round-trips exactly."""
        return (self.nx + 1, self.ny + 1)

    def sorted_lam(self) -> np.ndarray:
        return np.sort(self.lam.ravel())


def build_spectrum(domain: RectDomain, nx: int, ny: int) -> Spectrum:
    """Eigenbasis table with the analytic rectangle eigenvalues."""
    return Spectrum(domain, nx, ny)


class SpectralField:
    """Coefficients of a scalar field against the orthonormal sine basis."""

    __slots__ = ("spectrum", "coeff")

    def __init__(self, spectrum: Spectrum, coeff: np.ndarray):
        coeff = np.asarray(coeff, dtype=float)
        if coeff.shape != spectrum.shape:
            raise ValueError(f"coefficient shape {coeff.shape} does not match spectrum {spectrum.shape}")
        self.spectrum = spectrum
        self.coeff = coeff

    @classmethod
    def zeros(cls, spectrum: Spectrum) -> "SpectralField":
        return cls(spectrum, np.zeros(spectrum.shape))

    @classmethod
    def from_modes(cls, spectrum: Spectrum, entries) -> "SpectralField":
        """Field from a list of (j, k, amplitude) mode entries (1-based indices)."""
        c = np.zeros(spectrum.shape)
        for j, k, a in entries:
            if not (1 <= j <= spectrum.nx and 1 <= k <= spectrum.ny):
                raise ValueError(f"mode ({j},{k}) outside spectrum {spectrum.shape}")
            c[j - 1, k - 1] = a
        return cls(spectrum, c)

    def copy(self) -> "SpectralField":
        return SpectralField(self.spectrum, self.coeff.copy())

    def _check_same(self, other: "SpectralField"):
        if self.spectrum != other.spectrum:
            raise ValueError("spectra do not match")

    def __add__(self, other):
        self._check_same(other)
        return SpectralField(self.spectrum, self.coeff + other.coeff)

    def __sub__(self, other):
        self._check_same(other)
        return SpectralField(self.spectrum, self.coeff - other.coeff)

    def __mul__(self, a):
        return SpectralField(self.spectrum, self.coeff * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.spectrum, -self.coeff)


class PhysicalField:
    """Nodal values on the full collocation grid, boundary nodes included."""

    __slots__ = ("domain", "values")

    def __init__(self, domain: RectDomain, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 3 or values.shape[1] < 3:
            raise ValueError("nodal array must be 2-d with at least 3 nodes per side")
        self.domain = domain
        self.values = values

    @property
    def gx(self) -> int:
        return self.values.shape[0] - 1

    @property
    def gy(self) -> int:
        return self.values.shape[1] - 1

    @property
    def h(self):
        return (self.domain.lx / self.gx, self.domain.ly / self.gy)

    def boundary_max(self) -> float:
        v = self.values
        return float(max(np.abs(v[0, :]).max(), np.abs(v[-1, :]).max(),
                         np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max()))


@dataclass
class VectorField:
    """Nodal vector field on the full grid (components need not vanish on the boundary)."""

    domain: RectDomain
    ux: np.ndarray
    uy: np.ndarray
    div_linf_rel: float | None = None

    @property
    def gx(self) -> int:
        return self.ux.shape[0] - 1

    @property
    def gy(self) -> int:
        return self.ux.shape[1] - 1

    def max_speed(self) -> float:
        return float(np.sqrt(self.ux**2 + self.uy**2).max())


# -- raw-array transform kernels ------------------------------------------------
#
# dstn(type=1) of an (n, m) interior block equals 4 * sum_jk a_jk sin sin, and is
# its own inverse up to 4*gx*gy.  dct(type=1) with zero endpoints evaluates
# cosine sums with a factor 2 per axis.


def _norm(domain: RectDomain) -> float:
    return 2.0 / np.sqrt(domain.area)


def eval_ss(domain: RectDomain, coeff: np.ndarray, gx: int, gy: int) -> np.ndarray:
    """Evaluate a sine*sine coefficient array on the (gx+1, gy+1) grid."""
    mx, my = coeff.shape
    if mx > gx - 1 or my > gy - 1:
        raise ValueError(f"grid ({gx},{gy}) cannot hold {coeff.shape} modes")
    pad = np.zeros((gx - 1, gy - 1))
    pad[:mx, :my] = coeff
    out = np.zeros((gx + 1, gy + 1))
    out[1:gx, 1:gy] = _norm(domain) * dstn(pad, type=1, workers=_workers) / 4.0
    return out


def eval_cs(domain: RectDomain, coeff: np.ndarray, gx: int, gy: int) -> np.ndarray:
    """Evaluate a cosine(x)*sine(y) coefficient array on the full grid."""
    mx, my = coeff.shape
    if mx > gx - 1 or my > gy - 1:
        raise ValueError(f"grid ({gx},{gy}) cannot hold {coeff.shape} modes")
    pad = np.zeros((gx + 1, gy - 1))
    pad[1:mx + 1, :my] = coeff
    t = dctn(pad, type=1, axes=0, workers=_workers) / 2.0
    out = np.zeros((gx + 1, gy + 1))
    out[:, 1:gy] = _norm(domain) * dstn(t, type=1, axes=1, workers=_workers) / 2.0
    return out


def eval_sc(domain: RectDomain, coeff: np.ndarray, gx: int, gy: int) -> np.ndarray:
    """Evaluate a sine(x)*cosine(y) coefficient array on the full grid."""
    mx, my = coeff.shape
    if mx > gx - 1 or my > gy - 1:
        raise ValueError(f"grid ({gx},{gy}) cannot hold {coeff.shape} modes")
    pad = np.zeros((gx - 1, gy + 1))
    pad[:mx, 1:my + 1] = coeff
    t = dctn(pad, type=1, axes=1, workers=_workers) / 2.0
    out = np.zeros((gx + 1, gy + 1))
    out[1:gx, :] = _norm(domain) * dstn(t, type=1, axes=0, workers=_workers) / 2.0
    return out


def project_ss(domain: RectDomain, values: np.ndarray, mx: int, my: int) -> np.ndarray:
    """Sine-basis coefficients of full-grid nodal values (interior quadrature)."""
    gx, gy = values.shape[0] - 1, values.shape[1] - 1
    if mx > gx - 1 or my > gy - 1:
        raise ValueError(f"grid ({gx},{gy}) cannot resolve {mx}x{my} modes")
    hx, hy = domain.lx / gx, domain.ly / gy
    c = _norm(domain) * hx * hy * dstn(values[1:gx, 1:gy], type=1, workers=_workers) / 4.0
    return c[:mx, :my]


# -- spec operations ------------------------------------------------------------


def forward_transform(f: PhysicalField, spectrum: Spectrum | None = None) -> SpectralField:
    """Project nodal values onto the sine eigenbasis.

    Boundary nodes must be (numerically) zero; they carry no sine content and
    are ignored by the quadrature.
    """
    if not np.all(np.isfinite(f.values)):
        raise ValueError("nodal values must be finite")
    scale = np.abs(f.values).max()
    if f.boundary_max() > 1e-12 * max(scale, 1.0):
        raise ValueError("boundary nodes are not zero")
    if spectrum is None:
        spectrum = Spectrum(f.domain, f.gx - 1, f.gy - 1)
    return SpectralField(spectrum, project_ss(f.domain, f.values, spectrum.nx, spectrum.ny))


def inverse_transform(h: SpectralField, grid: tuple[int, int] | None = None) -> PhysicalField:
    """Evaluate a spectral field on the collocation grid (boundary exactly zero)."""
    if not np.all(np.isfinite(h.coeff)):
        raise ValueError("coefficients must be finite")
    gx, gy = grid if grid is not None else h.spectrum.default_grid()
    return PhysicalField(h.spectrum.domain, eval_ss(h.spectrum.domain, h.coeff, gx, gy))


def gradient(h: SpectralField, grid: tuple[int, int] | None = None) -> VectorField:
    """Nodal gradient; d/dx turns sine factors into cosines and vice versa."""
    sp = h.spectrum
    gx, gy = grid if grid is not None else sp.default_grid()
    dx = eval_cs(sp.domain, h.coeff * sp.kx, gx, gy)
    dy = eval_sc(sp.domain, h.coeff * sp.ky, gx, gy)
    return VectorField(sp.domain, dx, dy)


def trapezoid_weights(domain: RectDomain, gx: int, gy: int) -> np.ndarray:
    hx, hy = domain.lx / gx, domain.ly / gy
    wx = np.full(gx + 1, hx)
    wx[0] = wx[-1] = hx / 2.0
    wy = np.full(gy + 1, hy)
    wy[0] = wy[-1] = hy / 2.0
    return wx[:, None] * wy[None, :]


def lp_norm(f: PhysicalField, p) -> float:
    """L^p norm by composite trapezoidal quadrature; p = inf gives max |f|."""
    if p != np.inf and p < 1:
        raise ValueError("p must be >= 1 or inf")
    if p == np.inf:
        return float(np.abs(f.values).max())
    w = trapezoid_weights(f.domain, f.gx, f.gy)
    return float(np.sum(w * np.abs(f.values) ** p) ** (1.0 / p))


def grid_integral(f: PhysicalField) -> float:
    """Trapezoidal integral of the nodal values over the rectangle."""
    w = trapezoid_weights(f.domain, f.gx, f.gy)
    return float(np.sum(w * f.values))


def grid_inner(f: PhysicalField, g: PhysicalField) -> float:
    """Trapezoidal L^2 inner product of two nodal fields on matching grids."""
    if f.values.shape != g.values.shape:
        raise ValueError("grids do not match")
    w = trapezoid_weights(f.domain, f.gx, f.gy)
    return float(np.sum(w * f.values * g.values))


def sobolev_norm(h: SpectralField, sigma: float) -> float:
    """The norm of Lambda^sigma applied to h; sigma may be negative (dual scale)."""
    return float(np.sqrt(np.sum(h.spectrum.lam**sigma * h.coeff**2)))


def l2_inner(h: SpectralField, g: SpectralField) -> float:
    """L^2 inner product, exact in coefficient space."""
    h._check_same(g)
    return float(np.sum(h.coeff * g.coeff))
