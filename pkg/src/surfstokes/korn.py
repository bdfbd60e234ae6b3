"""Numerical Korn inequality on the orthogonal complement of the equilibria.

The Korn constant is the best C in  ||v||_H1 <= C ||D(v)||_L2  over
divergence-free fields orthogonal to every Killing field.  It is computed
as C = 1/sqrt(lambda_min) of the generalized symmetric eigenproblem built
from two Gram matrices over the divergence-free basis (the deformation form
and the H1 form), after deflating the Killing directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fields import VectorField
from .fieldcalc import grad_norm_sq, h1_norm, l2_norm
from .geometry import integrate_scalar
from .helmholtz import random_divfree_field
from .stokes import covariant_gram, deformation_gram, l2_gram, stack_fields


def korn_constant(chart, kb, basis, extra_excluded=()):
    """Korn constant over the complement of the excluded fields.

    Parameters
    ----------
    chart : SurfaceChart
    kb : KillingBasis
        Detected equilibria; these directions are removed.
    basis : list of VectorField
        L2-orthonormal divergence-free basis.
    extra_excluded : iterable of VectorField
        Additional directions to remove (enlarging the excluded set can
        only shrink the admissible set, so it never increases the minimum
        Rayleigh quotient's reach, i.e. never increases C).
    """
    stack = stack_fields(basis)
    n = stack.shape[0]
    excluded = list(kb.fields) + list(extra_excluded)
    if excluded:
        z = l2_gram(chart, stack_fields(excluded), stack)
        null = scipy.linalg.null_space(z)
    else:
        null = np.eye(n)
    g_d = deformation_gram(chart, stack)
    g_h1 = np.eye(n) + covariant_gram(chart, stack)
    a = null.T @ g_d @ null
    b = null.T @ g_h1 @ null
    eigval = scipy.linalg.eigh(0.5 * (a + a.T), 0.5 * (b + b.T),
                               eigvals_only=True)
    lam_min = float(eigval[0])
    if lam_min <= 1.0e-10:
        raise ValueError(
            f"Killing field leaked into complement: min ratio {lam_min:.3e}"
        )
    return 1.0 / np.sqrt(lam_min)


@dataclass(frozen=True)
class KornSampleReport:
    samples: int
    max_ratio: float        # ||u||_H1^2 / (||D(u)||^2 + ||u||^2), worst case
    mean_ratio: float
    max_identity_defect: float  # curvature-term consistency, relative


def korn_intermediate_check(chart, sample_count=100, seed=0):
    """Sampled check of ||u||_H1^2 <= C2 (||D(u)||^2 + ||u||^2).

    Draws seeded random smooth divergence-free fields, reports the worst
    and mean Rayleigh ratios, and verifies the curvature-term identity
    2 int |D(u)|^2 = int |nabla u|^2 - int K (u|u) that links the
    deformation form to the covariant-derivative form on divergence-free
    fields (two independent code paths).
    """
    if sample_count < 10:
        raise ValueError("sample_count must be at least 10")
    rng = np.random.default_rng(seed)
    fields = random_divfree_field(chart, rng, count=sample_count)
    stack = fields.comp
    ratios = np.empty(sample_count)
    defects = np.empty(sample_count)
    for i in range(sample_count):
        u = VectorField(stack[i])
        l2_sq = l2_norm(chart, u) ** 2
        grad_sq = grad_norm_sq(chart, u)
        h1_sq = l2_sq + grad_sq
        d_sq = _deformation_norm_sq(chart, u)
        ratios[i] = h1_sq / (d_sq + l2_sq)
        curv = integrate_scalar(
            chart,
            chart.gauss_curvature
            * np.einsum("ijtp,itp,jtp->tp", chart.metric, u.comp, u.comp),
        )
        defects[i] = abs(2.0 * d_sq - grad_sq + curv) / h1_sq
    return KornSampleReport(
        samples=sample_count,
        max_ratio=float(np.max(ratios)),
        mean_ratio=float(np.mean(ratios)),
        max_identity_defect=float(np.max(defects)),
    )


def _deformation_norm_sq(chart, u):
    from .fieldcalc import deformation, tensor_inner

    d = deformation(chart, u)
    return tensor_inner(chart, d, d)
