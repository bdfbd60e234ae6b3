"""The surface Stokes operator, its matrix, equilibria and resolvent probes.

The operator acts on the discrete divergence-free subspace and is realized
in two independent forms:

* divergence form   A u = -2 mu_s P( div D(u) )
* Bochner form      A u = -mu_s P( lap u + K u )

Both use the conservative (adjoint) discretizations from `fieldcalc`, so
each quadratic form is exactly symmetric on the grid; the two forms agree
to spectral accuracy on smooth fields, which converts the analytic identity
relating them (through the Gaussian-curvature term) into a testable one.

Matrix assembly, spectra, Killing-field detection and the Korn machinery
all run over an L2-orthonormal basis of the discrete divergence-free
subspace built by Leray-projecting a real Fourier vector-field basis.  The
Fourier basis excludes the Nyquist lines: the spectral derivative cannot
see pure Nyquist oscillations, so including them would create spurious
discrete "parallel" fields that inflate the equilibria set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _spectral
from .errors import SpectralGapError
from .fields import TensorField, VectorField, check_grid
from .fieldcalc import (
    _bochner_comp,
    _covariant_comp,
    deformation,
    divergence,
    h1_norm,
    l2_inner,
    l2_norm,
    l2_norm_scalar,
    tensor_divergence_comp,
)
from .geometry import integrate_scalar
from .helmholtz import DEFAULT_TOL, leray_project

_CHUNK = 512


# ---------------------------------------------------------------------------
# operator applications


def tensor_divergence(chart, t):
    """Divergence of a symmetric (0, 2) tensor field."""
    check_grid(t, chart, "tensor field")
    if t.variance != (0, 2):
        raise ValueError("tensor_divergence expects a (0, 2) tensor")
    asym = np.max(np.abs(t.comp - np.swapaxes(t.comp, -4, -3)))
    scale = np.max(np.abs(t.comp))
    if scale > 0 and asym > 1.0e-8 * scale:
        raise ValueError("tensor_divergence expects a symmetric tensor")
    return VectorField(tensor_divergence_comp(chart, t.comp))


def div_residual(chart, u):
    """Relative incompressibility defect ||div u|| / ||u||_H1 (batched)."""
    num = l2_norm_scalar(chart, divergence(chart, u))
    den = h1_norm(chart, u)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def _require_divfree(chart, u, threshold):
    resid = np.max(div_residual(chart, u))
    if resid > threshold:
        raise ValueError(
            f"field is not divergence-free: relative residual {resid:.3e} "
            f"exceeds {threshold:.1e}"
        )


def apply_stokes_div_form(chart, mu_s, u, tol=DEFAULT_TOL, div_threshold=1.0e-8):
    """A u = -2 mu_s P(div D(u)); requires u (weakly) divergence-free."""
    check_grid(u, chart, "vector field")
    _require_divfree(chart, u, div_threshold)
    d = deformation(chart, u)
    v = VectorField(tensor_divergence_comp(chart, d.comp))
    projected, _ = leray_project(chart, v, tol=tol)
    return VectorField(-2.0 * mu_s * projected.comp)


def apply_stokes_bochner_form(chart, mu_s, u, tol=DEFAULT_TOL, div_threshold=1.0e-8):
    """A u = -mu_s P(lap u + K u); requires u (weakly) divergence-free."""
    check_grid(u, chart, "vector field")
    _require_divfree(chart, u, div_threshold)
    comp = _bochner_comp(chart, u.comp) + chart.gauss_curvature * u.comp
    projected, _ = leray_project(chart, VectorField(comp), tol=tol)
    return VectorField(-mu_s * projected.comp)


def _apply_bochner_stack(chart, mu_s, stack, tol):
    """Batched Bochner-form application on a raw (n, 2, nt, np) stack."""
    out = np.empty_like(stack)
    for lo in range(0, stack.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, stack.shape[0])
        comp = (_bochner_comp(chart, stack[lo:hi])
                + chart.gauss_curvature * stack[lo:hi])
        projected, _ = leray_project(chart, VectorField(comp), tol=tol)
        out[lo:hi] = -mu_s * projected.comp
    return out


# ---------------------------------------------------------------------------
# Gram matrices over stacked fields


def _weighted(chart, stack):
    """W u with W = sqrt(g) g_ij, flattened for Gram products."""
    return np.einsum("ijtp,...jtp->...itp", chart.metric, stack) * chart.area_density


def l2_gram(chart, stack_a, stack_b=None):
    """Gram[a, b] = (u_a | u_b)_Sigma over stacked raw components."""
    if stack_b is None:
        stack_b = stack_a
    wa = _weighted(chart, stack_a).reshape(stack_a.shape[0], -1)
    fb = stack_b.reshape(stack_b.shape[0], -1)
    return (wa @ fb.T) * (2.0 * np.pi / chart.n_theta) * (2.0 * np.pi / chart.n_phi)


def deformation_gram(chart, stack):
    """Gram[a, b] = integral of D(u_a) : D(u_b) dSigma."""
    n = stack.shape[0]
    d = np.empty((n, 2, 2, chart.n_theta, chart.n_phi))
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        t = _covariant_comp(chart, stack[lo:hi])
        lowered = np.einsum("iktp,...kjtp->...ijtp", chart.metric, t)
        d[lo:hi] = 0.5 * (lowered + np.swapaxes(lowered, -4, -3))
    raised = chart.area_density * np.einsum(
        "iktp,jltp,aijtp->akltp", chart.inv_metric, chart.inv_metric, d
    )
    gram = raised.reshape(n, -1) @ d.reshape(n, -1).T
    gram *= (2.0 * np.pi / chart.n_theta) * (2.0 * np.pi / chart.n_phi)
    return 0.5 * (gram + gram.T)


def covariant_gram(chart, stack):
    """Gram[a, b] = integral of nabla u_a : nabla u_b dSigma (full contraction)."""
    n = stack.shape[0]
    t = np.empty((n, 2, 2, chart.n_theta, chart.n_phi))
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        t[lo:hi] = _covariant_comp(chart, stack[lo:hi])
    mixed = chart.area_density * np.einsum(
        "iktp,jltp,aijtp->akltp", chart.metric, chart.inv_metric, t
    )
    gram = mixed.reshape(n, -1) @ t.reshape(n, -1).T
    gram *= (2.0 * np.pi / chart.n_theta) * (2.0 * np.pi / chart.n_phi)
    return 0.5 * (gram + gram.T)


def stack_fields(fields):
    """Stack a list of VectorFields into an (n, 2, nt, np) array."""
    return np.stack([f.comp for f in fields])


# ---------------------------------------------------------------------------
# divergence-free basis


def divfree_basis(chart, tol=DEFAULT_TOL):
    """L2-orthonormal basis of the discrete divergence-free subspace.

    Construction: Leray-project every member of the (Nyquist-free) real
    Fourier vector-field basis, then orthonormalize through the spectral
    decomposition of the L2 Gram matrix, discarding the numerically null
    directions (the projected-out gradients).  Each returned field has
    divergence residual at most ``tol``.
    """
    scalars = _spectral.real_fourier_scalars(chart.n_theta, chart.n_phi)
    m = scalars.shape[0]
    raw = np.zeros((2 * m, 2, chart.n_theta, chart.n_phi))
    raw[:m, 0] = scalars
    raw[m:, 1] = scalars
    projected = np.empty_like(raw)
    for lo in range(0, 2 * m, _CHUNK):
        hi = min(lo + _CHUNK, 2 * m)
        pv, _ = leray_project(chart, VectorField(raw[lo:hi]), tol=0.1 * tol)
        projected[lo:hi] = pv.comp
    del raw

    gram = l2_gram(chart, projected)
    gram = 0.5 * (gram + gram.T)
    eigval, eigvec = np.linalg.eigh(gram)
    lam_max = eigval[-1]
    keep = eigval > 1.0e-10 * lam_max
    dropped = eigval[~keep]
    if dropped.size and np.max(dropped) > 1.0e-6 * np.min(eigval[keep]):
        raise SpectralGapError(
            "rank detection of the divergence-free subspace is ambiguous: "
            f"dropped eigenvalue {np.max(dropped):.3e} vs kept "
            f"{np.min(eigval[keep]):.3e}"
        )
    coeff = eigvec[:, keep] / np.sqrt(eigval[keep])
    basis = np.einsum("an,a...->n...", coeff, projected)

    resid = np.max(div_residual(chart, VectorField(basis)))
    if resid > tol:
        raise SpectralGapError(
            f"basis member exceeds divergence tolerance: {resid:.3e} > {tol:.1e}"
        )
    return [VectorField(basis[i]) for i in range(basis.shape[0])]


# ---------------------------------------------------------------------------
# operator matrix, spectrum


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix of the Stokes operator on an orthonormal div-free basis."""

    chart: object
    basis: list
    entries: np.ndarray
    symmetric: bool
    mu_s: float

    @property
    def dim(self):
        return self.entries.shape[0]

    def basis_stack(self):
        cached = getattr(self, "_stack_cache", None)
        if cached is None:
            cached = stack_fields(self.basis)
            object.__setattr__(self, "_stack_cache", cached)
        return cached

    def field_from_coords(self, coords):
        """Grid field(s) for coordinate vector(s); coords shape (..., dim)."""
        return VectorField(np.tensordot(coords, self.basis_stack(), axes=(-1, 0)))

    def coords_from_field(self, u):
        """L2 coordinates of a field in the basis: c_a = (u | b_a)."""
        wb = _weighted(self.chart, self.basis_stack()).reshape(self.dim, -1)
        flat = u.comp.reshape(u.comp.shape[:-3] + (-1,))
        return flat @ wb.T * self.chart.cell_weight


def assemble_operator(chart, mu_s, basis, tol=1.0e-11):
    """Matrix M[a, b] = (A b_b | b_a) via the Bochner form, batched."""
    stack = stack_fields(basis) if not isinstance(basis, np.ndarray) else basis
    gram = l2_gram(chart, stack)
    if np.max(np.abs(gram - np.eye(stack.shape[0]))) > 1.0e-10:
        raise ValueError("basis is not L2-orthonormal to 1e-10")
    applied = _apply_bochner_stack(chart, mu_s, stack, tol)
    weighted = _weighted(chart, stack).reshape(stack.shape[0], -1)
    entries = (weighted @ applied.reshape(stack.shape[0], -1).T) * chart.cell_weight
    scale = np.max(np.abs(entries))
    asym = np.max(np.abs(entries - entries.T))
    if scale > 0 and asym > 1.0e-6 * scale:
        raise ValueError(
            f"assembled operator is asymmetric: {asym:.3e} vs scale {scale:.3e} "
            "(signals a discretization bug)"
        )
    symmetric = scale == 0 or asym <= 1.0e-8 * scale
    fields = basis if not isinstance(basis, np.ndarray) else [
        VectorField(stack[i]) for i in range(stack.shape[0])
    ]
    return OperatorMatrix(chart=chart, basis=list(fields), entries=entries,
                          symmetric=symmetric, mu_s=mu_s)


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # columns, basis coordinates
    spectral_bound: float     # s(-A) = -lambda_min
    zero_cutoff: float
    zero_dim: int

    @property
    def zero_vectors(self):
        return self.eigenvectors[:, : self.zero_dim]


def spectrum(op, zero_cutoff_rel=1.0e-8):
    """Real eigendecomposition of a symmetric OperatorMatrix."""
    if not op.symmetric:
        raise ValueError("spectrum requires a symmetric OperatorMatrix")
    sym = 0.5 * (op.entries + op.entries.T)
    eigval, eigvec = np.linalg.eigh(sym)
    cutoff = zero_cutoff_rel * np.max(np.abs(eigval)) if eigval.size else 0.0
    zero_dim = int(np.sum(np.abs(eigval) <= cutoff))
    return SpectrumResult(
        eigenvalues=eigval,
        eigenvectors=eigvec,
        spectral_bound=float(-eigval[0]),
        zero_cutoff=float(cutoff),
        zero_dim=zero_dim,
    )


# ---------------------------------------------------------------------------
# equilibria (Killing fields)


@dataclass(frozen=True, eq=False)
class KillingBasis:
    """L2-orthonormal basis of the discrete equilibria set (kernel of D)."""

    chart: object
    fields: list

    @property
    def dim(self):
        return len(self.fields)

    def stack(self):
        if not self.fields:
            return np.zeros((0, 2, self.chart.n_theta, self.chart.n_phi))
        cached = getattr(self, "_stack_cache", None)
        if cached is None:
            cached = stack_fields(self.fields)
            object.__setattr__(self, "_stack_cache", cached)
        return cached


def killing_fields(chart, tol=1.0e-6, basis=None):
    """Detect the equilibria set as the near-kernel of u -> 2 int |D(u)|^2.

    The quadratic form is assembled over the divergence-free basis and
    eigendecomposed.  Eigenvalues at most ``tol`` times the median of the
    top decile count as kernel; a spectral gap of at least 1e2 between the
    last kernel and first non-kernel eigenvalue is mandatory, otherwise a
    SpectralGapError demands grid refinement.
    """
    fields = divfree_basis(chart) if basis is None else basis
    stack = stack_fields(fields)
    q = 2.0 * deformation_gram(chart, stack)
    eigval, eigvec = np.linalg.eigh(q)
    top = np.quantile(eigval, 0.9)
    cutoff = tol * np.median(eigval[eigval >= top])
    m = int(np.searchsorted(eigval, cutoff))
    if m == eigval.size:
        raise SpectralGapError("every mode looks like a Killing field; "
                               "the quadratic form degenerated")
    if m > 0:
        floor = max(abs(eigval[m - 1]), 1.0e-300)
        if eigval[m] / floor < 1.0e2:
            raise SpectralGapError(
                f"ambiguous spectral gap for the equilibria set: "
                f"{eigval[m]:.3e} / {eigval[m-1]:.3e} < 1e2; refine the grid"
            )
    if m > 3:
        raise SpectralGapError(
            f"detected {m} equilibria directions, exceeding the d(d+1)/2 = 3 "
            "bound for surfaces; discretization is inconsistent"
        )
    kernel = np.tensordot(eigvec[:, :m].T, stack, axes=(1, 0))
    z_fields = [VectorField(kernel[i]) for i in range(m)]
    kb = KillingBasis(chart=chart, fields=z_fields)
    _check_killing_invariants(kb)
    return kb


def _check_killing_invariants(kb):
    if not kb.fields:
        return
    stack = kb.stack()
    gram = l2_gram(kb.chart, stack)
    if np.max(np.abs(gram - np.eye(kb.dim))) > 1.0e-10:
        raise SpectralGapError("Killing basis lost orthonormality")
    for z in kb.fields:
        d = deformation(kb.chart, z)
        dnorm = np.sqrt(max(tensor_norm_sq(kb.chart, d), 0.0))
        if dnorm > 1.0e-6 * h1_norm(kb.chart, z):
            raise SpectralGapError(
                f"Killing candidate has deformation norm {dnorm:.3e}"
            )


def tensor_norm_sq(chart, t):
    """Integrated full metric contraction of a tensor with itself."""
    from .fieldcalc import tensor_inner

    return tensor_inner(chart, t, t)


def project_onto_equilibria(u, kb):
    """P_E u = sum_j (u | z_j) z_j; works on batched fields."""
    check_grid(u, kb.chart, "vector field")
    if not kb.fields:
        return VectorField(np.zeros_like(u.comp))
    stack = kb.stack()
    moments = killing_moments(u, kb)
    comp = np.tensordot(moments, stack, axes=(-1, 0))
    return VectorField(comp)


def killing_moments(u, kb):
    """Moment vector ((u | z_1), ..., (u | z_m)); batched over leading axes."""
    if not kb.fields:
        return np.zeros(u.comp.shape[:-3] + (0,))
    stack = kb.stack()
    wz = _weighted(kb.chart, stack).reshape(kb.dim, -1)
    flat = u.comp.reshape(u.comp.shape[:-3] + (-1,))
    return flat @ wz.T * kb.chart.cell_weight


def resample_killing_basis(kb, fine_chart):
    """Transfer a Killing basis to a finer grid of the same surface.

    Killing fields are smooth, so trigonometric upsampling is spectrally
    exact; the transferred fields are re-orthonormalized and re-checked
    against the KillingBasis invariants.
    """
    if not kb.fields:
        return KillingBasis(chart=fine_chart, fields=[])
    stack = kb.stack()
    fine = _spectral.resample(stack, fine_chart.n_theta, fine_chart.n_phi)
    gram = l2_gram(fine_chart, fine)
    chol = np.linalg.cholesky(gram)
    ortho = np.linalg.solve(chol, fine.reshape(kb.dim, -1)).reshape(fine.shape)
    out = KillingBasis(chart=fine_chart,
                       fields=[VectorField(ortho[i]) for i in range(kb.dim)])
    _check_killing_invariants(out)
    return out


# ---------------------------------------------------------------------------
# resolvent probes


@dataclass(frozen=True)
class ResolventProbe:
    magnitude: float
    sign: int
    lam: complex
    q: float                 # (|lam|+1) ||x|| / ||f||, random unit f
    q_oracle: float          # same quantity from the eigendecomposition
    resolvent_norm: float    # 1 / dist(-lam - omega, spectrum)
    sector_constant: float   # |lam| * resolvent_norm


@dataclass(frozen=True)
class ResolventTable:
    omega: float
    angle: float
    probes: list

    @property
    def max_q(self):
        return max(p.q for p in self.probes)

    @property
    def sector_constants(self):
        return np.array([p.sector_constant for p in self.probes])


def resolvent_probe(op, omega, angle, magnitudes, seed=0):
    """Probe (lam + omega + A)^{-1} along the rays lam = m e^{+-i(pi-angle)}.

    For each probe a dense complex LU solve against a random unit f reports
    q(lam) = (|lam| + 1) ||x||; the eigendecomposition supplies both the
    exact value of that quantity (oracle for the solve) and the true
    resolvent norm 1/dist(-lam-omega, spec).
    """
    if not op.symmetric:
        raise ValueError("resolvent_probe requires a symmetric OperatorMatrix")
    if not (0.0 < angle < 0.5 * np.pi):
        raise ValueError("angle must lie in (0, pi/2)")
    magnitudes = [float(m) for m in magnitudes]
    if any(m <= 0 for m in magnitudes):
        raise ValueError("magnitudes must be positive")
    sym = 0.5 * (op.entries + op.entries.T)
    eigval, eigvec = np.linalg.eigh(sym)
    if omega <= -eigval[0]:
        raise ValueError(
            f"omega = {omega} must exceed the spectral bound {-eigval[0]:.3e}"
        )
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(op.dim)
    f /= np.linalg.norm(f)
    c = eigvec.T @ f
    probes = []
    eye = np.eye(op.dim)
    for m in magnitudes:
        for sign in (+1, -1):
            lam = m * np.exp(sign * 1j * (np.pi - angle))
            x = scipy.linalg.solve(sym + (lam + omega) * eye,
                                   f.astype(complex))
            q = (abs(lam) + 1.0) * np.linalg.norm(x)
            shifts = lam + omega + eigval
            q_oracle = (abs(lam) + 1.0) * np.sqrt(
                np.sum(np.abs(c) ** 2 / np.abs(shifts) ** 2)
            )
            rnorm = 1.0 / np.min(np.abs(shifts))
            probes.append(
                ResolventProbe(
                    magnitude=m,
                    sign=sign,
                    lam=lam,
                    q=float(q),
                    q_oracle=float(q_oracle),
                    resolvent_norm=float(rnorm),
                    sector_constant=float(abs(lam) * rnorm),
                )
            )
    return ResolventTable(omega=float(omega), angle=float(angle), probes=probes)


def default_shift(spec_result):
    """omega = spectral bound + 0.1 * smallest nonzero eigenvalue."""
    eigval = spec_result.eigenvalues
    nonzero = eigval[np.abs(eigval) > spec_result.zero_cutoff]
    gap = float(nonzero[0]) if nonzero.size else 1.0
    return max(0.0, spec_result.spectral_bound) + 0.1 * gap


def subspace_angle(chart, fields_a, fields_b):
    """Largest principal angle (radians) between two spans of grid fields."""
    a = stack_fields(fields_a)
    b = stack_fields(fields_b)
    cross = l2_gram(chart, a, b)
    # both stacks are assumed orthonormal; singular values = cos(angles)
    sv = np.linalg.svd(cross, compute_uv=False)
    sv = np.clip(sv, -1.0, 1.0)
    if sv.size < min(len(fields_a), len(fields_b)):
        return 0.5 * np.pi
    return float(np.arccos(np.min(sv)))
