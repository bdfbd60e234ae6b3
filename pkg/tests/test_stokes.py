import numpy as np
import pytest

from surfstokes import fieldcalc as fc, geometry, helmholtz as hh, stokes as st
from surfstokes._spectral import real_fourier_scalars
from surfstokes.errors import SpectralGapError
from surfstokes.fields import TensorField, VectorField


def divergence_rank_oracle(chart):
    """Kernel dimension of the discrete divergence map on the Nyquist-free
    span, by dense SVD of the explicit matrix (independent of the basis
    construction through the projection)."""
    scalars = real_fourier_scalars(chart.n_theta, chart.n_phi)
    m = scalars.shape[0]
    raw = np.zeros((2 * m, 2, chart.n_theta, chart.n_phi))
    raw[:m, 0] = scalars
    raw[m:, 1] = scalars
    div = fc.divergence(chart, VectorField(raw)).values.reshape(2 * m, -1)
    sv = np.linalg.svd(div, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv[0]))
    return 2 * m - rank


class TestTensorDivergence:
    def test_zero_tensor(self, rev32):
        t = TensorField(np.zeros((2, 2, 32, 32)), variance=(0, 2))
        assert np.max(np.abs(st.tensor_divergence(rev32, t).comp)) == 0.0

    def test_deformation_of_constants_flat(self, flat16):
        d = fc.deformation(flat16, VectorField(np.ones((2, 16, 16))))
        assert np.max(np.abs(st.tensor_divergence(flat16, d).comp)) < 1e-13

    def test_duality_with_covariant_derivative(self, rev32):
        rng = np.random.default_rng(21)
        u = fc.random_smooth_vector(rev32, rng)
        v = fc.random_smooth_vector(rev32, rng)
        t = fc.deformation(rev32, u)
        lhs = fc.l2_inner(rev32, st.tensor_divergence(rev32, t), v)
        grad_v = fc.covariant_derivative(rev32, v)
        dens = np.einsum("jltp,ijtp,iltp->tp", rev32.inv_metric,
                         t.comp, grad_v.comp)
        rhs = -geometry.integrate_scalar(rev32, dens)
        assert abs(lhs - rhs) <= 1e-8 * max(abs(rhs), 1.0)

    def test_rejects_wrong_variance(self, rev32):
        t = TensorField(np.zeros((2, 2, 32, 32)), variance=(1, 1))
        with pytest.raises(ValueError, match="0, 2"):
            st.tensor_divergence(rev32, t)

    def test_rejects_asymmetric(self, rev32):
        comp = np.zeros((2, 2, 32, 32))
        comp[0, 1] = 1.0
        with pytest.raises(ValueError, match="symmetric"):
            st.tensor_divergence(rev32, TensorField(comp, variance=(0, 2)))


class TestStokesApplications:
    def test_killing_field_is_annihilated(self, rev32):
        z = VectorField(np.stack([np.zeros((32, 32)), np.ones((32, 32))]))
        z = VectorField(z.comp / fc.l2_norm(rev32, z))
        for apply_op in (st.apply_stokes_div_form, st.apply_stokes_bochner_form):
            out = apply_op(rev32, 1.0, z)
            assert fc.l2_norm(rev32, out) < 1e-8

    def test_forms_agree_on_smooth_divfree(self, rev64):
        rng = np.random.default_rng(22)
        fields = hh.random_divfree_field(rev64, rng, count=5)
        for i in range(5):
            u = VectorField(fields.comp[i])
            a_div = st.apply_stokes_div_form(rev64, 1.3, u)
            a_boch = st.apply_stokes_bochner_form(rev64, 1.3, u)
            scale = fc.h1_norm(rev64, u) + fc.l2_norm(rev64, a_boch)
            assert fc.l2_norm(rev64, a_div - a_boch) <= 1e-6 * scale

    def test_flat_eigenfield(self, flat16):
        th = flat16.theta[:, None] * np.ones((16, 16))
        u = VectorField(np.stack([np.zeros((16, 16)), np.sin(th)]))
        out = st.apply_stokes_bochner_form(flat16, 1.0, u)
        assert fc.l2_norm(flat16, out - u) < 1e-10
        out2 = st.apply_stokes_div_form(flat16, 2.0, u)
        assert fc.l2_norm(flat16, out2 - VectorField(2 * u.comp)) < 1e-10

    def test_rejects_non_divfree(self, rev32):
        rng = np.random.default_rng(23)
        v = fc.random_smooth_vector(rev32, rng)
        with pytest.raises(ValueError, match="residual"):
            st.apply_stokes_bochner_form(rev32, 1.0, v)

    def test_quadratic_form_identity(self, rev32):
        # (A u | u) = 2 mu_s int |D(u)|^2
        rng = np.random.default_rng(24)
        u = hh.random_divfree_field(rev32, rng)
        mu_s = 1.7
        au = st.apply_stokes_bochner_form(rev32, mu_s, u)
        lhs = fc.l2_inner(rev32, au, u)
        d = fc.deformation(rev32, u)
        rhs = 2 * mu_s * fc.tensor_inner(rev32, d, d)
        assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


class TestDivfreeBasis:
    def test_flat_dimension_matches_rank_oracle(self, flat16, flat16_basis):
        # Nyquist-free construction: (N-1)^2 + 1 on the flat torus
        assert len(flat16_basis) == 15**2 + 1 == 226
        assert divergence_rank_oracle(flat16) == 226

    def test_members_are_divergence_free(self, flat16, flat16_basis):
        stack = st.stack_fields(flat16_basis)
        resid = fc.l2_norm_scalar(flat16, fc.divergence(
            flat16, VectorField(stack)))
        assert np.max(resid) <= 1e-10

    def test_gram_is_identity(self, rev16, rev16_basis):
        gram = st.l2_gram(rev16, st.stack_fields(rev16_basis))
        assert np.max(np.abs(gram - np.eye(len(rev16_basis)))) < 1e-10


class TestOperatorMatrix:
    def test_symmetry_invariant(self, rev16_op):
        scale = np.max(np.abs(rev16_op.entries))
        asym = np.max(np.abs(rev16_op.entries - rev16_op.entries.T))
        assert rev16_op.symmetric
        assert asym <= 1e-8 * scale

    def test_flat_spectrum_fourier_oracle(self, flat16_op):
        spec = st.spectrum(flat16_op)
        assert spec.zero_dim == 2
        # eigenvalues mu_s |k|^2: multiplicity 4 each for |k|^2 = 1, 2, 4
        expected = np.array([1, 1, 1, 1, 2, 2, 2, 2, 4, 4], float)
        nonzero = spec.eigenvalues[2:12]
        assert np.max(np.abs(nonzero - expected)) < 1e-8

    def test_mu_scaling(self, flat16, flat16_basis):
        op = st.assemble_operator(flat16, 2.0, flat16_basis)
        spec = st.spectrum(op)
        assert spec.eigenvalues[2] == pytest.approx(2.0, abs=1e-8)

    def test_rev_kernel_dimension(self, rev16_op):
        spec = st.spectrum(rev16_op)
        assert spec.zero_dim == 1
        assert abs(spec.spectral_bound) <= 1e-8 * np.max(spec.eigenvalues)

    def test_psd(self, rev16_op):
        spec = st.spectrum(rev16_op)
        assert spec.eigenvalues[0] >= -1e-8 * spec.eigenvalues[-1]

    def test_coords_roundtrip(self, rev16_op):
        rng = np.random.default_rng(25)
        c = rng.standard_normal(rev16_op.dim)
        u = rev16_op.field_from_coords(c)
        assert np.allclose(rev16_op.coords_from_field(u), c, atol=1e-10)


class TestKillingFields:
    def test_flat_two_constants(self, flat16, flat16_kb):
        assert flat16_kb.dim == 2
        # span is exactly the constant fields
        for z in flat16_kb.fields:
            dev = z.comp - z.comp.mean(axis=(-2, -1), keepdims=True)
            assert np.max(np.abs(dev)) < 1e-9

    def test_rev_azimuthal(self, rev16, rev16_kb):
        assert rev16_kb.dim == 1
        z = rev16_kb.fields[0]
        assert np.max(np.abs(z.comp[0])) < 1e-9
        dev = z.comp[1] - z.comp[1].mean()
        assert np.max(np.abs(dev)) < 1e-9

    def test_dimension_bound(self, flat16_kb, rev16_kb):
        assert flat16_kb.dim <= 3
        assert rev16_kb.dim <= 3

    def test_kernel_equals_equilibria(self, rev16, rev16_op, rev16_kb):
        spec = st.spectrum(rev16_op)
        kernel_fields = [rev16_op.field_from_coords(spec.eigenvectors[:, i])
                         for i in range(spec.zero_dim)]
        angle = st.subspace_angle(rev16, kernel_fields, rev16_kb.fields)
        assert angle <= 1e-6

    def test_ambiguous_gap_raises(self, rev16, rev16_basis):
        # an absurd tolerance pushes the cutoff into the dense part of the
        # spectrum where consecutive eigenvalues are closer than 1e2
        with pytest.raises(SpectralGapError):
            st.killing_fields(rev16, tol=3e-2, basis=rev16_basis)

    def test_invariants(self, rev16, rev16_kb):
        z = rev16_kb.fields[0]
        assert fc.l2_norm(rev16, z) == pytest.approx(1.0, abs=1e-10)
        d = fc.deformation(rev16, z)
        dnorm = np.sqrt(max(fc.tensor_inner(rev16, d, d), 0.0))
        assert dnorm <= 1e-6 * fc.h1_norm(rev16, z)

    def test_resample_to_finer_grid(self, rev16_kb):
        fine = geometry.build_torus_of_revolution(2.0, 1.0, 24, 24)
        kb_fine = st.resample_killing_basis(rev16_kb, fine)
        assert kb_fine.dim == 1
        d = fc.deformation(fine, kb_fine.fields[0])
        assert np.sqrt(max(fc.tensor_inner(fine, d, d), 0.0)) < 1e-10


class TestProjectOntoEquilibria:
    def test_fixes_killing_span(self, rev16, rev16_kb):
        z = rev16_kb.fields[0]
        combo = VectorField(1.7 * z.comp)
        proj = st.project_onto_equilibria(combo, rev16_kb)
        assert fc.l2_norm(rev16, proj - combo) < 1e-10

    def test_annihilates_complement(self, rev16, rev16_kb):
        rng = np.random.default_rng(26)
        u = hh.random_divfree_field(rev16, rng)
        residual = VectorField(
            u.comp - st.project_onto_equilibria(u, rev16_kb).comp)
        again = st.project_onto_equilibria(residual, rev16_kb)
        assert fc.l2_norm(rev16, again) < 1e-10

    def test_idempotence(self, rev16, rev16_kb):
        rng = np.random.default_rng(27)
        u = hh.random_divfree_field(rev16, rng)
        once = st.project_onto_equilibria(u, rev16_kb)
        twice = st.project_onto_equilibria(once, rev16_kb)
        assert fc.l2_norm(rev16, twice - once) < 1e-10

    def test_orthogonality_of_residual(self, rev16, rev16_kb):
        rng = np.random.default_rng(28)
        u = hh.random_divfree_field(rev16, rng)
        res = VectorField(u.comp - st.project_onto_equilibria(u, rev16_kb).comp)
        for z in rev16_kb.fields:
            assert abs(fc.l2_inner(rev16, res, z)) < 1e-10


class TestResolventProbe:
    def test_solve_matches_eigen_oracle(self, rev16_op):
        spec = st.spectrum(rev16_op)
        omega = st.default_shift(spec)
        table = st.resolvent_probe(rev16_op, omega, np.pi / 4,
                                   [1.0, 10.0, 100.0], seed=3)
        for p in table.probes:
            assert abs(p.q - p.q_oracle) <= 1e-8 * p.q_oracle

    def test_eigenvector_probe_exact(self, rev16_op):
        import scipy.linalg

        sym = 0.5 * (rev16_op.entries + rev16_op.entries.T)
        w, v = np.linalg.eigh(sym)
        omega = 0.1
        lam = 7.0 * np.exp(1j * (np.pi - np.pi / 3))
        x = scipy.linalg.solve(sym + (lam + omega) * np.eye(rev16_op.dim),
                               v[:, 4].astype(complex))
        assert abs(np.linalg.norm(x) - 1 / abs(lam + omega + w[4])) < 1e-10

    def test_real_positive_ray_bound(self, rev16_op):
        # degenerate ray: lambda = m real positive gives q <= (m+1)/(m+omega)
        import scipy.linalg

        sym = 0.5 * (rev16_op.entries + rev16_op.entries.T)
        omega = 0.1
        rng = np.random.default_rng(5)
        f = rng.standard_normal(rev16_op.dim)
        f /= np.linalg.norm(f)
        for m in (1.0, 10.0, 100.0):
            x = scipy.linalg.solve(sym + (m + omega) * np.eye(rev16_op.dim), f)
            q = (m + 1) * np.linalg.norm(x)
            assert q <= (m + 1) / (m + omega) + 1e-12

    def test_validates_arguments(self, rev16_op):
        with pytest.raises(ValueError, match="omega"):
            st.resolvent_probe(rev16_op, -1.0, np.pi / 4, [1.0])
        with pytest.raises(ValueError, match="angle"):
            st.resolvent_probe(rev16_op, 0.1, 2.0, [1.0])
        with pytest.raises(ValueError, match="positive"):
            st.resolvent_probe(rev16_op, 0.1, np.pi / 4, [0.0])

    def test_sector_constants_stable_within_spectrum(self, rev16_op):
        spec = st.spectrum(rev16_op)
        omega = st.default_shift(spec)
        lam_max = spec.eigenvalues[-1]
        # stay inside the resolved part of the spectrum on this small grid
        mags = [1.0, 10.0, lam_max * np.sin(np.pi / 4)]
        table = st.resolvent_probe(rev16_op, omega, np.pi / 4, mags, seed=1)
        sc = table.sector_constants
        assert (sc.max() - sc.min()) / sc.max() <= 0.20
        assert sc.max() <= np.sqrt(2.0) / np.sin(np.pi / 4)
