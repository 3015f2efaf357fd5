"""Fractional powers of the Dirichlet Laplacian and related operators.

Every operator here is diagonal on the sine eigenbasis; the definitions act in
coefficient space.  The heat-kernel and truncated-integral paths exist as
slower independent routes used to cross-check the multipliers.

Time integrals are evaluated after the substitution t = e^u with composite
Gauss-Legendre panels in u, doubling the panel count until the result is
stable to the requested relative tolerance.  Integrands are smooth and
exponentially localized in u, so this converges fast and deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .domain import (
    RectDomain,
    SpectralField,
    Spectrum,
    VectorField,
    eval_cs,
    eval_sc,
)

_GL_ORDER = 16
_MAX_PANELS = 8192


@lru_cache(maxsize=8)
def _gl_rule(order: int):
    x, w = leggauss(order)
    return x, w


def _panel_rule(a: float, b: float, panels: int):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = _gl_rule(_GL_ORDER)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def log_time_integral(fn, t_lo: float, t_hi: float, rtol: float = 1e-10,
                      start_panels: int = 8):
    """Integrate fn(t) over [t_lo, t_hi] in log time.

    fn takes a node vector t of shape (n,) and returns values broadcastable to
    (..., n); the integral is taken along the last axis.  Panels double until
    every component is stable to rtol (components far below the largest one
    only need absolute stability).
    """
    if not (0.0 < t_lo < t_hi):
        raise ValueError("need 0 < t_lo < t_hi")
    a, b = np.log(t_lo), np.log(t_hi)
    panels = start_panels
    prev = None
    while panels <= _MAX_PANELS:
        u, w = _panel_rule(a, b, panels)
        t = np.exp(u)
        with np.errstate(under="ignore"):
            vals = np.sum(fn(t) * (w * t), axis=-1)
        if prev is not None:
            vmax = np.max(np.abs(vals)) if np.ndim(vals) else abs(vals)
            denom = np.maximum(np.abs(vals), 1e-14 * vmax + 1e-300)
            if np.all(np.abs(vals - prev) <= rtol * denom):
                return vals
        prev = vals
        panels *= 2
    raise RuntimeError(f"time quadrature did not stabilize within {_MAX_PANELS} panels")


@dataclass(frozen=True)
class MultiplierSpec:
    """A diagonal operator given by its per-eigenvalue multiplier.

    kind is one of "fractional" (power s, any real), "heat" (time t >= 0),
    "mollifier" (eps in (0,1)), "truncated" (s in (0,2), eta in (0,1)).
    """

    kind: str
    s: float | None = None
    t: float | None = None
    eps: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.kind == "fractional":
            if self.s is None:
                raise ValueError("fractional multiplier needs s")
        elif self.kind == "heat":
            if self.t is None or self.t < 0:
                raise ValueError("heat time must be >= 0")
        elif self.kind == "mollifier":
            if self.eps is None or not (0.0 < self.eps < 1.0):
                raise ValueError("mollifier eps must lie in (0, 1)")
        elif self.kind == "truncated":
            if self.s is None or not (0.0 < self.s < 2.0):
                raise ValueError("truncated power s must lie in (0, 2)")
            if self.eta is None or not (0.0 < self.eta < 1.0):
                raise ValueError("truncation eta must lie in (0, 1)")
        else:
            raise ValueError(f"unknown multiplier kind {self.kind!r}")

    def values(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.kind == "fractional":
            return lam ** (self.s / 2.0)
        if self.kind == "heat":
            with np.errstate(under="ignore"):
                return np.exp(-self.t * lam)
        if self.kind == "mollifier":
            return mollifier_multiplier(self.eps, lam)
        return truncated_multiplier(self.s, self.eta, lam)


def _apply(spec: MultiplierSpec, h: SpectralField) -> SpectralField:
    m = _multiplier_table(spec, h.spectrum)
    return SpectralField(h.spectrum, h.coeff * m)


@lru_cache(maxsize=256)
def _multiplier_table(spec: MultiplierSpec, spectrum: Spectrum) -> np.ndarray:
    out = spec.values(spectrum.lam)
    out.setflags(write=False)
    return out


def apply_fractional(s: float, h: SpectralField) -> SpectralField:
    """Lambda^s: multiply each coefficient by lam^(s/2)."""
    return _apply(MultiplierSpec("fractional", s=s), h)


def heat_apply(t: float, h: SpectralField) -> SpectralField:
    """Heat semigroup at time t >= 0: multiply by exp(-t lam)."""
    return _apply(MultiplierSpec("heat", t=t), h)


def mollify(eps: float, h: SpectralField) -> SpectralField:
    """Logarithmic time-average of the heat semigroup over [eps, 1/eps]."""
    return _apply(MultiplierSpec("mollifier", eps=eps), h)


def truncated_fractional(s: float, eta: float, f: SpectralField) -> SpectralField:
    """Integral representation of Lambda^s with the time integral cut at eta."""
    return _apply(MultiplierSpec("truncated", s=s, eta=eta), f)


def mollifier_multiplier(eps: float, lam) -> np.ndarray | float:
    """m_eps(lam) = (1/ln(1/eps)) * integral over [eps, 1/eps] of exp(-t lam)/t dt.

    Takes values in (0, 2): the integrand is strictly below 1/t, and the
    log-measure of [eps, 1/eps] is 2 ln(1/eps).
    """
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0):
        raise ValueError("eigenvalues must be positive")
    ell = np.log(1.0 / eps)

    def integrand(t):
        with np.errstate(under="ignore"):
            return np.exp(-lam_arr[:, None] * t[None, :]) / t[None, :]

    vals = log_time_integral(integrand, eps, 1.0 / eps) / ell
    return vals if np.ndim(lam) else float(vals[0])


@lru_cache(maxsize=64)
def frac_const(s: float) -> float:
    """Normalization c_s with c_s * integral_0^inf t^(-1-s/2) (1-e^-t) dt = 1.

    Computed by the same log-time quadrature used everywhere else, with the
    integrable endpoints cut where the integrand falls below 1e-18 relative.
    """
    if not (0.0 < s < 2.0):
        raise ValueError("s must lie in (0, 2)")
    # integrand ~ t^(1-s/2) near 0 and ~ t^(-s/2) at infinity (log scale)
    u_lo = -42.0 / (1.0 - s / 2.0)
    u_hi = (2.0 / s) * (42.0 + abs(np.log(2.0 / s)))

    def integrand(t):
        return -np.expm1(-t) * t ** (-1.0 - s / 2.0)

    total = float(log_time_integral(integrand, np.exp(u_lo), np.exp(u_hi)))
    return 1.0 / total


def truncated_multiplier(s: float, eta: float, lam) -> np.ndarray | float:
    """Per-mode value of c_s * integral_eta^inf (1 - e^(-t lam)) t^(-1-s/2) dt.

    The range where e^(-t lam) has fully decayed is integrated analytically
    ((2/s) t^(-s/2) tail), keeping every contribution positive so there is no
    cancellation between quadrature pieces.
    """
    if not (0.0 < s < 2.0):
        raise ValueError("s must lie in (0, 2)")
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0):
        raise ValueError("eigenvalues must be positive")
    u_lo = np.log(eta)
    u_hi = max(np.log(45.0 / lam_arr.min()), u_lo + 1.0)
    t_hi = np.exp(u_hi)

    def integrand(t):
        with np.errstate(under="ignore"):
            return -np.expm1(-lam_arr[:, None] * t[None, :]) * t[None, :] ** (-1.0 - s / 2.0)

    quad = log_time_integral(integrand, eta, t_hi)
    tail = (2.0 / s) * t_hi ** (-s / 2.0)
    vals = frac_const(s) * (quad + tail)
    return vals if np.ndim(lam) else float(vals[0])


# -- heat kernel and integral kernels --------------------------------------------


def _point_basis(spectrum: Spectrum, pts: np.ndarray) -> np.ndarray:
    """Eigenfunction values at points, shape (npts, nmodes) with modes raveled."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = spectrum.domain
    sx = np.sin(np.outer(pts[:, 0], np.pi * spectrum.jmodes / d.lx))
    sy = np.sin(np.outer(pts[:, 1], np.pi * spectrum.kmodes / d.ly))
    n0 = 2.0 / np.sqrt(d.area)
    return n0 * (sx[:, :, None] * sy[:, None, :]).reshape(pts.shape[0], -1)


def heat_kernel_eval(spectrum: Spectrum, x, y, t: float, jmax: int | None = None) -> float:
    """Truncated eigenfunction series for the heat kernel H(x, y, t), t > 0.

    Modes enter in order of increasing eigenvalue; jmax caps how many are
    summed (default: all modes in the spectrum).
    """
    if t <= 0:
        raise ValueError("heat kernel series requires t > 0")
    n = spectrum.nx * spectrum.ny
    if jmax is None:
        jmax = n
    if not (1 <= jmax <= n):
        raise ValueError("jmax must lie within the spectrum size")
    order = np.argsort(spectrum.lam.ravel(), kind="stable")[:jmax]
    lam = spectrum.lam.ravel()[order]
    wx = _point_basis(spectrum, np.asarray(x, dtype=float))[0, order]
    wy = _point_basis(spectrum, np.asarray(y, dtype=float))[0, order]
    with np.errstate(under="ignore"):
        return float(np.sum(np.exp(-t * lam) * wx * wy))


def _mode_means(spectrum: Spectrum) -> np.ndarray:
    """Integrals of the basis functions over the rectangle (odd modes only)."""
    d = spectrum.domain
    j = spectrum.jmodes
    k = spectrum.kmodes
    mx = d.lx * (1.0 - np.cos(np.pi * j)) / (np.pi * j)
    my = d.ly * (1.0 - np.cos(np.pi * k)) / (np.pi * k)
    n0 = 2.0 / np.sqrt(d.area)
    return (n0 * mx[:, None] * my[None, :]).ravel()


@dataclass
class KernelTable:
    """Sampled integral kernels of Lambda^(2s) for s in (0, 1).

    K has one row/column per sample point with NaN on the diagonal (the
    kernel is only defined off-diagonal); B is the zeroth-order weight.
    """

    s: float
    points: np.ndarray
    K: np.ndarray
    B: np.ndarray
    t_lo: float
    t_hi: float
    modes: tuple[int, int]

    def empirical_kernel_bound(self) -> float:
        """sup over sampled pairs of K(x,y) |x-y|^(2+2s)."""
        dx = self.points[:, None, :] - self.points[None, :, :]
        dist = np.hypot(dx[..., 0], dx[..., 1])
        with np.errstate(invalid="ignore"):
            return float(np.nanmax(self.K * dist ** (2.0 + 2.0 * self.s)))


def kernel_lattice(domain: RectDomain, m: int):
    """Cell-centered m x m sample lattice with its quadrature weight."""
    x = (np.arange(m) + 0.5) * domain.lx / m
    y = (np.arange(m) + 0.5) * domain.ly / m
    pts = np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1).reshape(-1, 2)
    return pts, (domain.lx / m) * (domain.ly / m)


def kernel_assemble(domain: RectDomain, s: float, points: np.ndarray,
                    rtol: float = 1e-8, max_modes: int = 160) -> KernelTable:
    """Sample the kernels K_s and B_s by time quadrature of the heat series.

    The eigenfunction series only represents the heat kernel faithfully once
    t is past ~1/lam_max, while the contribution of earlier times at distance
    d is a Gaussian tail exp(-d^2/4t).  The spectrum size and the time cutoff
    are therefore chosen together from the minimal pair separation.
    """
    if not (0.0 < s < 1.0):
        raise ValueError("kernel order s must lie in (0, 1)")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    off = ~np.eye(len(pts), dtype=bool)
    sep = float(dist[off].min()) if len(pts) > 1 else np.inf
    if sep == 0.0:
        raise ValueError("coincident sample pair")
    t_lo = sep**2 / 120.0
    lam_needed = 45.0 / t_lo
    nx = min(max_modes, int(np.ceil(np.sqrt(lam_needed) * domain.lx / np.pi)))
    ny = min(max_modes, int(np.ceil(np.sqrt(lam_needed) * domain.ly / np.pi)))
    sp = Spectrum(domain, max(nx, 1), max(ny, 1))
    lam = sp.lam.ravel()
    t_hi = 45.0 / sp.lam1
    c2s = frac_const(2.0 * s)

    # K: the time integral factorizes per eigenvalue
    def k_integrand(t):
        with np.errstate(under="ignore"):
            return np.exp(-lam[:, None] * t[None, :]) * t[None, :] ** (-1.0 - s)

    mode_weight = 2.0 * c2s * log_time_integral(k_integrand, t_lo, t_hi, rtol=rtol)
    W = _point_basis(sp, pts)
    K = (W * mode_weight[None, :]) @ W.T
    np.fill_diagonal(K, np.nan)

    # B: 1 - e^{t Delta}1 must be integrated as a single expression near t_lo
    means = _mode_means(sp)

    def b_integrand(t):
        with np.errstate(under="ignore"):
            damp = np.exp(-lam[:, None] * t[None, :]) * means[:, None]
        return (1.0 - W @ damp) * t[None, :] ** (-1.0 - s)

    B = c2s * (log_time_integral(b_integrand, t_lo, t_hi, rtol=rtol) + t_hi ** (-s) / s)
    return KernelTable(s=s, points=pts, K=K, B=B, t_lo=t_lo, t_hi=t_hi, modes=(sp.nx, sp.ny))


def representation_check(table: KernelTable, psi: SpectralField, weight: float):
    """Compare the sampled-kernel quadratic form against the spectral norm.

    Returns (spectral, assembled, relative gap) for the identity
    ||Lambda^s psi||^2 = double integral of (psi(x)-psi(y))^2 K_s + psi^2 B_s
    evaluated with equal-weight samples (weight = cell area of the lattice).
    """
    vals = _point_basis(psi.spectrum, table.points) @ psi.coeff.ravel()
    dpsi2 = (vals[:, None] - vals[None, :]) ** 2
    Kpart = np.nansum(dpsi2 * table.K) * weight * weight
    Bpart = np.sum(vals**2 * table.B) * weight
    assembled = Kpart + Bpart
    spectral = float(np.sum(psi.spectrum.lam**table.s * psi.coeff**2))
    return spectral, assembled, abs(assembled - spectral) / spectral


# -- Riesz transform --------------------------------------------------------------


def riesz_perp(q: SpectralField, grid: tuple[int, int] | None = None) -> VectorField:
    """u = grad^perp Lambda^(-1) q, the divergence-free velocity of a scalar."""
    sp = q.spectrum
    gx, gy = grid if grid is not None else sp.default_grid()
    psi = q.coeff * sp.lam**-0.5
    a = -psi * sp.ky            # sin(x) cos(y) component
    b = psi * sp.kx             # cos(x) sin(y) component
    ux = eval_sc(sp.domain, a, gx, gy)
    uy = eval_cs(sp.domain, b, gx, gy)
    d = a * sp.kx + b * sp.ky   # divergence lands in the cos*cos basis
    scale = max(np.abs(a * sp.kx).max(), np.abs(b * sp.ky).max(), 1e-300)
    return VectorField(sp.domain, ux, uy, div_linf_rel=float(np.abs(d).max() / scale))


def riesz_h1_norm(q: SpectralField) -> float:
    """H^1 norm of riesz_perp(q); exact since the transform is a per-mode isometry."""
    return float(np.sqrt(np.sum((1.0 + q.spectrum.lam) * q.coeff**2)))
