"""Doubly-periodic metric charts and their derived geometry.

A surface is described by a symmetric positive-definite metric g_ij sampled
on an equispaced (theta, phi) grid over [0, 2pi)^2.  Everything downstream
(Christoffel symbols, Gaussian curvature, quadrature) is computed from the
metric samples with Fourier spectral differentiation, so charts whose metric
entries are trigonometric polynomials are exact to round-off.

Two surfaces are built in:

* a flat torus with side lengths (L1, L2), metric diag((L1/2pi)^2, (L2/2pi)^2);
* a torus of revolution with radii R > r, metric diag(r^2, (R + r cos theta)^2).

Surfaces with coordinate poles (e.g. the round sphere) are deliberately not
representable: the chart must be globally doubly periodic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _spectral
from .fields import ScalarField

_METRIC_CONDITION_LIMIT = 1.0e12
_INVERSE_TOL = 1.0e-12


@dataclass(frozen=True, eq=False)
class SurfaceChart:
    """Immutable chart with metric, inverse, area density, Christoffel, curvature.

    Attributes
    ----------
    n_theta, n_phi : int
        Grid sizes; nodes are 2pi*i/n along each coordinate.
    theta, phi : ndarray
        1D node coordinates.
    metric : ndarray, shape (2, 2, n_theta, n_phi)
        g_ij per node.
    inv_metric : ndarray, shape (2, 2, n_theta, n_phi)
        g^ij per node.
    area_density : ndarray, shape (n_theta, n_phi)
        sqrt(det g); the measure is dSigma = area_density dtheta dphi.
    christoffel : ndarray, shape (2, 2, 2, n_theta, n_phi)
        christoffel[k, i, j] = Gamma^k_ij, symmetric in (i, j).
    gauss_curvature : ndarray, shape (n_theta, n_phi)
        Gaussian curvature K per node.
    """

    n_theta: int
    n_phi: int
    theta: np.ndarray
    phi: np.ndarray
    metric: np.ndarray
    inv_metric: np.ndarray
    area_density: np.ndarray
    christoffel: np.ndarray
    gauss_curvature: np.ndarray

    def __post_init__(self):
        for name in ("theta", "phi", "metric", "inv_metric", "area_density",
                     "christoffel", "gauss_curvature"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def grid_sizes(self):
        return (self.n_theta, self.n_phi)

    @property
    def dtheta(self):
        return 2.0 * np.pi / self.n_theta

    @property
    def dphi(self):
        return 2.0 * np.pi / self.n_phi

    @property
    def cell_weight(self):
        """Quadrature weight dtheta*dphi of one grid cell."""
        return self.dtheta * self.dphi

    @property
    def area(self):
        return float(np.sum(self.area_density) * self.cell_weight)


def _validate_metric(metric):
    metric = np.asarray(metric, dtype=float)
    if metric.ndim != 4 or metric.shape[:2] != (2, 2):
        raise ValueError("metric must have shape (2, 2, n_theta, n_phi)")
    if not np.isfinite(metric).all():
        raise ValueError("metric contains non-finite entries")
    if np.max(np.abs(metric[0, 1] - metric[1, 0])) > 0:
        raise ValueError("metric must be symmetric at every node")
    # eigenvalues of a symmetric 2x2: (tr +- sqrt(tr^2 - 4 det)) / 2
    tr = metric[0, 0] + metric[1, 1]
    det = metric[0, 0] * metric[1, 1] - metric[0, 1] * metric[1, 0]
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    lam_min = 0.5 * (tr - disc)
    lam_max = 0.5 * (tr + disc)
    if np.min(lam_min) <= 0.0:
        raise ValueError("metric is not positive definite at every node")
    cond = np.max(lam_max / lam_min)
    if cond > _METRIC_CONDITION_LIMIT:
        raise ValueError(
            f"metric condition number {cond:.3e} exceeds {_METRIC_CONDITION_LIMIT:.0e}"
        )
    return metric, det


def _invert_metric(metric, det):
    inv = np.empty_like(metric)
    inv[0, 0] = metric[1, 1] / det
    inv[1, 1] = metric[0, 0] / det
    inv[0, 1] = -metric[0, 1] / det
    inv[1, 0] = inv[0, 1]
    return inv


def christoffel_from_metric(metric):
    """Christoffel symbols Gamma^k_ij from metric samples.

    Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij), derivatives
    taken spectrally.  Returns an array of shape (2, 2, 2, n_theta, n_phi)
    indexed [k, i, j].
    """
    metric, det = _validate_metric(metric)
    inv = _invert_metric(metric, det)
    dg = np.empty((2,) + metric.shape)  # dg[l, i, j] = d_l g_ij
    dg[0] = _spectral.deriv_theta(metric)
    dg[1] = _spectral.deriv_phi(metric)
    # bracket[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    bracket = dg + dg.transpose(1, 0, 2, 3, 4) - np.moveaxis(dg, 0, 2)
    gamma = 0.5 * np.einsum("kl...,ijl...->kij...", inv, bracket)
    return gamma


def gaussian_curvature(chart):
    """Gaussian curvature recomputed from the chart metric (Gauss equation).

    Uses the Riemann tensor of the 2D metric: K = g_0m R^m_101 / det(g),
    with R^i_jkl built from the Christoffel symbols by spectral
    differentiation.
    """
    return ScalarField(_curvature_from_metric(chart.metric, chart.inv_metric,
                                              chart.christoffel))


def _curvature_from_metric(metric, inv_metric, gamma):
    # R^m_{101} = d_0 Gamma^m_{11} - d_1 Gamma^m_{01}
    #             + Gamma^m_{0s} Gamma^s_{11} - Gamma^m_{1s} Gamma^s_{01}
    d0_g11 = _spectral.deriv_theta(gamma[:, 1, 1])
    d1_g01 = _spectral.deriv_phi(gamma[:, 0, 1])
    quad = (np.einsum("ms...,s...->m...", gamma[:, 0, :], gamma[:, 1, 1])
            - np.einsum("ms...,s...->m...", gamma[:, 1, :], gamma[:, 0, 1]))
    riem = d0_g11 - d1_g01 + quad
    det = metric[0, 0] * metric[1, 1] - metric[0, 1] * metric[1, 0]
    r_0101 = metric[0, 0] * riem[0] + metric[0, 1] * riem[1]
    return r_0101 / det


def chart_from_metric(metric):
    """Build a chart from user-supplied metric samples."""
    metric, det = _validate_metric(metric)
    n_theta, n_phi = metric.shape[2:]
    _spectral.check_even(n_theta, "n_theta")
    _spectral.check_even(n_phi, "n_phi")
    inv = _invert_metric(metric, det)
    resid = np.einsum("ij...,jk...->ik...", metric, inv)
    resid[0, 0] -= 1.0
    resid[1, 1] -= 1.0
    if np.max(np.abs(resid)) > _INVERSE_TOL:
        raise ValueError("metric inversion failed the identity check")
    gamma = christoffel_from_metric(metric)
    curv = _curvature_from_metric(metric, inv, gamma)
    return SurfaceChart(
        n_theta=n_theta,
        n_phi=n_phi,
        theta=_spectral.grid_1d(n_theta),
        phi=_spectral.grid_1d(n_phi),
        metric=metric,
        inv_metric=inv,
        area_density=np.sqrt(det),
        christoffel=gamma,
        gauss_curvature=curv,
    )


def build_flat_torus(L1, L2, n_theta, n_phi):
    """Flat torus with side lengths L1, L2: g = diag((L1/2pi)^2, (L2/2pi)^2)."""
    if L1 <= 0 or L2 <= 0:
        raise ValueError("L1 and L2 must be positive")
    _spectral.check_even(n_theta, "n_theta")
    _spectral.check_even(n_phi, "n_phi")
    metric = np.zeros((2, 2, n_theta, n_phi))
    metric[0, 0] = (L1 / (2.0 * np.pi)) ** 2
    metric[1, 1] = (L2 / (2.0 * np.pi)) ** 2
    return chart_from_metric(metric)


def build_torus_of_revolution(R, r, n_theta, n_phi):
    """Torus of revolution: g = diag(r^2, (R + r cos theta)^2), R > r > 0."""
    if r <= 0:
        raise ValueError("r must be positive")
    if R <= r:
        raise ValueError("R must exceed r (the surface self-intersects otherwise)")
    _spectral.check_even(n_theta, "n_theta")
    _spectral.check_even(n_phi, "n_phi")
    theta = _spectral.grid_1d(n_theta)
    metric = np.zeros((2, 2, n_theta, n_phi))
    metric[0, 0] = r**2
    metric[1, 1] = ((R + r * np.cos(theta)) ** 2)[:, None]
    return chart_from_metric(metric)


def integrate_scalar(chart, f):
    """Integral of a scalar over the surface: sum f * sqrt(g) * dtheta * dphi.

    Periodic trapezoidal quadrature; spectrally accurate for smooth f.
    Accepts a ScalarField or a bare array with trailing grid axes; leading
    axes are treated as a batch and integrated independently.
    """
    values = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)
    if values.ndim < 2 or values.shape[-2:] != (chart.n_theta, chart.n_phi):
        raise ValueError(
            f"scalar field grid {values.shape[-2:]} does not match chart grid "
            f"({chart.n_theta}, {chart.n_phi})"
        )
    out = np.sum(values * chart.area_density, axis=(-2, -1)) * chart.cell_weight
    return float(out) if np.ndim(out) == 0 else out
