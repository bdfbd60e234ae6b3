"""Surface Helmholtz (Leray) projection and pressure recovery.

The projection of a tangential field v removes a surface gradient:
P v = v - grad psi, where the mean-zero potential psi solves the weak
elliptic problem (grad psi | grad phi) = (v | grad phi) for all scalars phi.
Discretely this is the symmetric positive definite system

    B psi := -d_i( sqrt(g) g^ij d_j psi ) = -d_i( sqrt(g) v^i )

in plain grid coordinates (the sqrt(g) weight is folded into the operator so
B is exactly symmetric under the unweighted grid sum).  B is solved with
conjugate gradients preconditioned by the inverse of the constant-coefficient
operator built from the node-averaged coefficients, which is diagonal in
Fourier space, exact on a flat torus and spectrally equivalent on a torus of
revolution.
"""

from __future__ import annotations

import numpy as np

from . import _spectral
from .errors import ConvergenceError
from .fields import ScalarField, VectorField, check_grid
from .fieldcalc import deformation, grad_scalar, tensor_divergence_comp
from .geometry import integrate_scalar

DEFAULT_TOL = 1.0e-10


def _poisson_setup(chart):
    """Coefficient and preconditioner arrays, cached on the chart object."""
    cached = getattr(chart, "_poisson_cache", None)
    if cached is not None:
        return cached
    coeff = chart.area_density * chart.inv_metric  # a^ij = sqrt(g) g^ij
    k1, k2 = _spectral.derivative_wavenumbers(chart.n_theta, chart.n_phi)
    abar = coeff.mean(axis=(-2, -1))
    symbol = abar[0, 0] * k1**2 + 2.0 * abar[0, 1] * k1 * k2 + abar[1, 1] * k2**2
    inv_symbol = np.zeros_like(symbol)
    nonzero = symbol > 0
    inv_symbol[nonzero] = 1.0 / symbol[nonzero]
    cache = (coeff, inv_symbol)
    object.__setattr__(chart, "_poisson_cache", cache)
    return cache


def _apply_B(coeff, psi):
    d0 = _spectral.deriv_theta(psi)
    d1 = _spectral.deriv_phi(psi)
    f0 = coeff[0, 0] * d0 + coeff[0, 1] * d1
    f1 = coeff[1, 0] * d0 + coeff[1, 1] * d1
    return -(_spectral.deriv_theta(f0) + _spectral.deriv_phi(f1))


def _apply_precond(inv_symbol, r):
    return np.fft.ifft2(np.fft.fft2(r, axes=(-2, -1)) * inv_symbol,
                        axes=(-2, -1)).real


def solve_weak_poisson(chart, rhs, tol=DEFAULT_TOL, max_iter=None):
    """Solve B psi = rhs by preconditioned CG; rhs has trailing grid axes.

    Convergence is declared on the preconditioned residual norm
    sqrt(r^T M^{-1} r) <= tol (absolute), re-verified against the true
    residual b - B x at exit (the recursively updated CG residual can drift
    below the round-off floor).  Leading axes of rhs are a batch of
    independent right-hand sides solved simultaneously.  Returns psi with a
    mean-zero gauge in the surface measure.
    """
    coeff, inv_symbol = _poisson_setup(chart)
    if max_iter is None:
        max_iter = 10 * chart.n_theta
    rhs = np.asarray(rhs, dtype=float)
    axes = (-2, -1)
    target = tol * tol

    x = np.zeros_like(rhs)
    iterations = 0
    resid = np.inf
    for _restart in range(3):
        r = rhs - _apply_B(coeff, x) if iterations else rhs.copy()
        z = _apply_precond(inv_symbol, r)
        delta = np.sum(r * z, axis=axes)
        resid = np.sqrt(np.max(np.abs(delta)))
        p = z.copy()
        while np.max(delta) > target and iterations < max_iter:
            bp = _apply_B(coeff, p)
            pbp = np.sum(p * bp, axis=axes)
            alpha = np.where(pbp > 0, delta / np.where(pbp > 0, pbp, 1.0), 0.0)
            x += alpha[..., None, None] * p
            r -= alpha[..., None, None] * bp
            z = _apply_precond(inv_symbol, r)
            delta_new = np.sum(r * z, axis=axes)
            beta = np.where(delta > 0,
                            delta_new / np.where(delta > 0, delta, 1.0), 0.0)
            p = z + beta[..., None, None] * p
            delta = delta_new
            resid = np.sqrt(np.max(np.abs(delta)))
            iterations += 1
        # verify against the true residual before declaring success
        r_true = rhs - _apply_B(coeff, x)
        z_true = _apply_precond(inv_symbol, r_true)
        resid = float(np.sqrt(np.max(np.abs(np.sum(r_true * z_true, axis=axes)))))
        if resid <= tol:
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"Poisson solve stalled at residual {resid:.3e} "
                f"(tolerance {tol:.1e}) after {iterations} iterations",
                residual=resid, iterations=iterations,
            )
        iterations += 1
    else:
        raise ConvergenceError(
            f"Poisson solve reached its round-off floor at residual "
            f"{resid:.3e} (tolerance {tol:.1e})",
            residual=resid, iterations=iterations,
        )
    # fix the additive constant: zero mean in the surface measure
    area = chart.area
    mean = integrate_scalar(chart, x) / area
    x -= np.reshape(mean, np.shape(mean) + (1, 1))
    return x, float(resid), iterations


def leray_project(chart, v, tol=DEFAULT_TOL):
    """Helmholtz projection: returns (P v, psi_v) with P v = v - grad psi_v.

    psi_v is the mean-zero solution of the weak problem; the achieved
    preconditioned residual is at most ``tol`` or a ConvergenceError is
    raised reporting the residual actually reached.  Batches of fields
    (leading axes on ``v.comp``) are projected simultaneously.
    """
    check_grid(v, chart, "vector field")
    w = chart.area_density
    rhs = -(_spectral.deriv_theta(w * v.comp[..., 0, :, :])
            + _spectral.deriv_phi(w * v.comp[..., 1, :, :]))
    psi, _, _ = solve_weak_poisson(chart, rhs, tol=tol)
    psi_field = ScalarField(psi)
    projected = VectorField(v.comp - grad_scalar(chart, psi_field).comp)
    return projected, psi_field


def recover_pressure(chart, u, mu_s, tol=DEFAULT_TOL):
    """Pressure of a divergence-free velocity: pi = 2 mu_s psi_v, mean zero,

    where psi_v is the potential of v = div D(u).  grad(pi) is then the
    gradient part of 2 mu_s div D(u).
    """
    check_grid(u, chart, "vector field")
    d = deformation(chart, u)
    v = VectorField(tensor_divergence_comp(chart, d.comp))
    _, psi = leray_project(chart, v, tol=tol)
    return ScalarField(2.0 * mu_s * psi.values)


def random_divfree_field(chart, rng, decay=8.0, count=None, tol=DEFAULT_TOL,
                         normalize=True):
    """Random smooth divergence-free field(s): filtered noise, projected."""
    from .fieldcalc import l2_norm, random_smooth_vector

    raw = random_smooth_vector(chart, rng, decay=decay, count=count)
    projected, _ = leray_project(chart, raw, tol=tol)
    if normalize:
        norms = l2_norm(chart, projected)
        comp = projected.comp / np.reshape(norms, np.shape(norms) + (1, 1, 1))
        projected = VectorField(comp)
    return projected
