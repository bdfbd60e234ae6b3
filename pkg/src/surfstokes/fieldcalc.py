"""Differential operators and inner products for chart fields.

Conventions
-----------
Vector fields are stored contravariant; raising/lowering is explicit and
owned by this module.  The covariant derivative of a vector field is the
(1, 1) tensor (nabla u)^i_j = d_j u^i + Gamma^i_jk u^k (upper index first).

The Bochner Laplacian is realized in conservative (adjoint) form: it is
defined as the operator satisfying

    (lap u | v)_Sigma = -(nabla u, nabla v)_Sigma    for all grid fields v,

with the discrete quadrature and exact antisymmetry of the spectral
derivative matrix.  This makes the operator exactly self-adjoint and
negative semidefinite on the grid while agreeing with the metric trace of
the second covariant derivative to spectral accuracy for smooth fields.

All operations broadcast over leading batch axes.
"""

from __future__ import annotations

import numpy as np

from . import _spectral
from .fields import ScalarField, TensorField, VectorField, check_grid
from .geometry import integrate_scalar


# ---------------------------------------------------------------------------
# first-order operators


def grad_scalar(chart, f):
    """Surface gradient of a scalar: (grad f)^i = g^ij d_j f."""
    check_grid(f, chart, "scalar field")
    vals = f.values
    d = np.stack([_spectral.deriv_theta(vals), _spectral.deriv_phi(vals)], axis=-3)
    comp = np.einsum("ijtp,...jtp->...itp", chart.inv_metric, d)
    return VectorField(comp)


def divergence(chart, u):
    """Surface divergence: div u = (1/sqrt g) d_i (sqrt g u^i)."""
    check_grid(u, chart, "vector field")
    w = chart.area_density
    flux0 = _spectral.deriv_theta(w * u.comp[..., 0, :, :])
    flux1 = _spectral.deriv_phi(w * u.comp[..., 1, :, :])
    return ScalarField((flux0 + flux1) / w)


def covariant_derivative(chart, u):
    """Covariant derivative (nabla u)^i_j = d_j u^i + Gamma^i_jk u^k."""
    check_grid(u, chart, "vector field")
    return TensorField(_covariant_comp(chart, u.comp), variance=(1, 1))


def _covariant_comp(chart, comp):
    d = np.stack(
        [_spectral.deriv_theta(comp), _spectral.deriv_phi(comp)], axis=-3
    )  # d[..., i, j, t, p] = d_j u^i
    gamma_term = np.einsum("ijktp,...ktp->...ijtp", chart.christoffel, comp)
    return d + gamma_term


def advect(chart, u, v, dealias=False):
    """Covariant advection (nabla_u v)^i = u^j (nabla v)^i_j.

    The quadratic product is formed pointwise on the grid; pass
    ``dealias=True`` to truncate the result with the 2/3 rule (used by the
    time integrator, where aliasing feeds back into the solution).
    """
    check_grid(u, chart, "vector field")
    check_grid(v, chart, "vector field")
    t = _covariant_comp(chart, v.comp)
    comp = np.einsum("...jtp,...ijtp->...itp", u.comp, t)
    if dealias:
        comp = _spectral.dealias(comp)
    return VectorField(comp)


def lower_index(chart, u):
    """u_i = g_ij u^j as a raw component array."""
    return np.einsum("ijtp,...jtp->...itp", chart.metric, u.comp)


def deformation(chart, u):
    """Surface rate-of-strain tensor D_ij = 1/2 (nabla_i u_j + nabla_j u_i).

    Computed by lowering the (1, 1) covariant derivative with the metric,
    which coincides with the covariant derivative of the one-form by metric
    compatibility; the result is symmetric by construction.
    """
    check_grid(u, chart, "vector field")
    t = _covariant_comp(chart, u.comp)
    lowered = np.einsum("iktp,...kjtp->...ijtp", chart.metric, t)  # nabla_j u_i
    comp = 0.5 * (lowered + np.swapaxes(lowered, -4, -3))
    return TensorField(comp, variance=(0, 2))


# ---------------------------------------------------------------------------
# second-order operator (conservative form)


def bochner_laplacian(chart, u):
    """Bochner Laplacian of a vector field (conservative form, see module doc)."""
    check_grid(u, chart, "vector field")
    return VectorField(_bochner_comp(chart, u.comp))


def _bochner_comp(chart, comp):
    t = _covariant_comp(chart, comp)
    # flux S^k_l = sqrt(g) g_ki g^lj (nabla u)^i_j pairs with (nabla v)^k_l
    s = chart.area_density * np.einsum(
        "kitp,ljtp,...ijtp->...kltp", chart.metric, chart.inv_metric, t
    )
    return _adjoint_gradient(chart, s)


def _adjoint_gradient(chart, s):
    """Map a flux tensor S^k_l to (1/sqrt g) g^pq (d_l S^q_l - Gamma^k_lq S^k_l).

    This is -W^{-1} nabla^T S, the exact adjoint of the covariant derivative
    with respect to the weighted grid inner product.
    """
    div_s = _spectral.deriv_theta(s[..., :, 0, :, :]) + _spectral.deriv_phi(
        s[..., :, 1, :, :]
    )
    gamma_term = np.einsum("klqtp,...kltp->...qtp", chart.christoffel, s)
    return np.einsum(
        "abtp,...btp->...atp",
        chart.inv_metric,
        (div_s - gamma_term) / chart.area_density,
    )


def tensor_divergence_comp(chart, comp):
    """Divergence of a symmetric (0, 2) tensor as raw components.

    Adjoint (conservative) form: defined by (div T | v) = -(T, nabla v) in
    the discrete quadrature, exact by antisymmetry of the derivative matrix;
    agrees with g^ij g^kl nabla_k T_lj to spectral accuracy for smooth T.
    """
    s = chart.area_density * np.einsum(
        "ljtp,...ijtp->...iltp", chart.inv_metric, comp
    )
    return _adjoint_gradient(chart, s)


# ---------------------------------------------------------------------------
# inner products and norms


def l2_inner(chart, u, v):
    """(u | v)_Sigma = integral of g_ij u^i v^j dSigma."""
    check_grid(u, chart, "vector field")
    check_grid(v, chart, "vector field")
    dens = np.einsum("ijtp,...itp,...jtp->...tp", chart.metric, u.comp, v.comp)
    return integrate_scalar(chart, dens)


def l2_norm(chart, u):
    return np.sqrt(l2_inner(chart, u, u))


def grad_norm_sq(chart, u):
    """Full metric contraction of the covariant derivative, integrated.

    ||nabla u||^2 = integral of g_ik g^jl (nabla u)^i_j (nabla u)^k_l dSigma.
    """
    check_grid(u, chart, "vector field")
    t = _covariant_comp(chart, u.comp)
    dens = np.einsum("iktp,jltp,...ijtp,...kltp->...tp",
                     chart.metric, chart.inv_metric, t, t)
    return integrate_scalar(chart, dens)


def h1_norm(chart, u):
    """H^1 norm: sqrt(||u||_L2^2 + ||nabla u||_L2^2)."""
    return np.sqrt(l2_inner(chart, u, u) + grad_norm_sq(chart, u))


def l2_inner_scalar(chart, f, g):
    fv = f.values if isinstance(f, ScalarField) else np.asarray(f)
    gv = g.values if isinstance(g, ScalarField) else np.asarray(g)
    return integrate_scalar(chart, fv * gv)


def l2_norm_scalar(chart, f):
    return np.sqrt(l2_inner_scalar(chart, f, f))


def tensor_inner(chart, a, b):
    """Pointwise full metric contraction of two tensors, integrated.

    Both arguments must share the variance tag; (0,2) tensors contract with
    g^ik g^jl, (1,1) tensors with g_ik g^jl.
    """
    if a.variance != b.variance:
        raise ValueError("tensor variance tags differ")
    check_grid(a, chart, "tensor field")
    check_grid(b, chart, "tensor field")
    if a.variance == (0, 2):
        dens = np.einsum("iktp,jltp,...ijtp,...kltp->...tp",
                         chart.inv_metric, chart.inv_metric, a.comp, b.comp)
    else:
        dens = np.einsum("iktp,jltp,...ijtp,...kltp->...tp",
                         chart.metric, chart.inv_metric, a.comp, b.comp)
    return integrate_scalar(chart, dens)


# ---------------------------------------------------------------------------
# random smooth fields


def random_smooth_vector(chart, rng, decay=8.0, count=None, band_limit=None):
    """Random smooth vector field(s), Fourier variance ~ exp(-|k|^2 / decay).

    White noise per component filtered in Fourier space by
    exp(-|k|^2 / (2 * decay)); integer chart wavenumbers.  ``band_limit``
    additionally zeroes every mode with max(|k1|, |k2|) above the limit,
    which keeps low-order pointwise products alias-free.  Returns a single
    field, or a batch with leading axis ``count``.
    """
    shape = (2, chart.n_theta, chart.n_phi)
    if count is not None:
        shape = (count,) + shape
    noise = rng.standard_normal(shape)
    k1, k2 = _spectral.fourier_wavenumbers(chart.n_theta, chart.n_phi)
    filt = np.exp(-(k1**2 + k2**2) / (2.0 * decay))
    if band_limit is not None:
        filt = filt * ((np.abs(k1) <= band_limit) & (np.abs(k2) <= band_limit))
    fh = np.fft.fft2(noise, axes=(-2, -1)) * filt
    return VectorField(np.fft.ifft2(fh, axes=(-2, -1)).real)
