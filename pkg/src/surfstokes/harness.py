"""CLI entry point, config parsing, named verification scenarios, CSV output.

Config files are line-oriented ``key = value`` pairs.  Recognized keys:

    surface (flat_torus | torus_of_revolution), L1, L2, R, r,
    n_theta, n_phi, mu_s, rho, dt, t_end, integrator (imex1 | imex2),
    dealias (true | false), seed, scenario, out_dir

Unknown keys and malformed lines are rejected with the offending line in
the message.  Scenarios write one CSV per diagnostic plus a summary report
CSV under the output directory; the process exit status is 0 exactly when
every criterion row passed.  Identical config + seed reproduce the CSVs
byte for byte (timings are reported on stdout only).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fieldcalc as fc
from . import korn as korn_mod
from . import stokes as st
from .dynamics import (
    SimConfig,
    build_chart,
    decay_rate_fit,
    default_killing_basis,
    nonlinearity,
    simulate,
)
from .errors import ConfigError
from .fields import ScalarField, VectorField
from .geometry import integrate_scalar
from .helmholtz import leray_project, random_divfree_field, recover_pressure

SCENARIOS = (
    "identities",
    "helmholtz",
    "equilibria",
    "spectrum",
    "sectoriality",
    "korn",
    "decay",
    "convergence",
)

_DEFAULTS = {
    "surface": "torus_of_revolution",
    "L1": 2.0 * np.pi,
    "L2": 2.0 * np.pi,
    "R": 2.0,
    "r": 1.0,
    "n_theta": 32,
    "n_phi": 32,
    "mu_s": 1.0,
    "rho": 1.0,
    "dt": 1.0e-2,
    "t_end": 5.0,
    "integrator": "imex2",
    "dealias": True,
    "seed": 7,
    "scenario": "identities",
    "out_dir": "out",
}

_POSITIVE_KEYS = ("L1", "L2", "R", "r", "mu_s", "rho", "dt")


# ---------------------------------------------------------------------------
# configuration


def parse_config(path):
    """Parse a key = value config file; returns (SimConfig, scenario, out_dir)."""
    raw = dict(_DEFAULTS)
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: malformed line (no '='): {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in raw:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        raw[key] = _parse_value(key, value, lineno)
    for key in _POSITIVE_KEYS:
        if raw[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    scenario = raw.pop("scenario")
    out_dir = raw.pop("out_dir")
    try:
        config = SimConfig(**raw)
    except ConfigError:
        raise
    return config, scenario, out_dir


def _parse_value(key, value, lineno):
    if key in ("surface", "integrator", "out_dir"):
        if key == "surface" and value not in ("flat_torus", "torus_of_revolution"):
            raise ConfigError(f"line {lineno}: unknown surface '{value}'")
        if key == "integrator" and value not in ("imex1", "imex2"):
            raise ConfigError(f"line {lineno}: unknown integrator '{value}'")
        return value
    if key == "scenario":
        if value not in SCENARIOS:
            raise ConfigError(f"line {lineno}: unknown scenario '{value}'")
        return value
    if key == "dealias":
        lowered = value.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"line {lineno}: cannot parse boolean '{value}'")
    if key in ("n_theta", "n_phi", "seed"):
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: cannot parse integer '{value}'")
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse number '{value}'")


# ---------------------------------------------------------------------------
# CSV emission


def emit_csv(path, header, rows):
    """Write a CSV: header first, 17-significant-digit floats, LF endings."""
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError(
                f"row of width {len(row)} does not match header width {width}"
            )
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _format_cell(cell):
    if isinstance(cell, (bool, np.bool_)):
        return "true" if cell else "false"
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    if isinstance(cell, (float, np.floating)):
        return format(float(cell), ".17g")
    text = str(cell)
    if "," in text or "\n" in text:
        raise ValueError(f"cell value {text!r} would corrupt the CSV")
    return text


# ---------------------------------------------------------------------------
# scenario machinery


@dataclass(frozen=True)
class CriterionRow:
    name: str
    measured: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ScenarioReport:
    scenario: str
    config: SimConfig
    rows: list
    wall_seconds: float

    @property
    def passed(self):
        return all(row.passed for row in self.rows)

    def summary(self):
        lines = [f"scenario {self.scenario}: "
                 f"{'PASS' if self.passed else 'FAIL'} "
                 f"({self.wall_seconds:.1f}s)"]
        for row in self.rows:
            status = "pass" if row.passed else "FAIL"
            lines.append(
                f"  [{status}] {row.name}: measured {row.measured:.6e}"
                f" vs threshold {row.threshold:.6e}"
            )
        return "\n".join(lines)


def _check(rows, name, measured, threshold):
    rows.append(CriterionRow(name=name, measured=float(measured),
                             threshold=float(threshold),
                             passed=bool(measured <= threshold)))


def run_scenario(name, config, out_dir="out", seed=None):
    """Run a named verification scenario; returns its ScenarioReport."""
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{name}'")
    if seed is not None:
        config = SimConfig(**{**config.__dict__, "seed": seed})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    rows = _SCENARIO_FUNCS[name](config, out)
    report = ScenarioReport(
        scenario=name,
        config=config,
        rows=rows,
        wall_seconds=time.perf_counter() - started,
    )
    emit_csv(out / f"{name}_report.csv",
             ["check", "measured", "threshold", "passed"],
             [(r.name, r.measured, r.threshold, r.passed) for r in report.rows])
    return report


# ---------------------------------------------------------------------------
# individual scenarios


def _scenario_identities(config, out):
    chart = build_chart(config)
    rng = np.random.default_rng(config.seed)
    rows = []
    # band-limited fields keep the pointwise products in the exact identity
    # checks alias-free at any grid size
    band = max(2, min(config.n_theta, config.n_phi) // 6)
    u = fc.random_smooth_vector(chart, rng, band_limit=band)
    v = fc.random_smooth_vector(chart, rng, band_limit=band)
    w = fc.random_smooth_vector(chart, rng, band_limit=band)

    d = fc.deformation(chart, u)
    tr = np.einsum("ijtp,ijtp->tp", chart.inv_metric, d.comp)
    _check(rows, "trace_deformation_vs_divergence",
           np.max(np.abs(tr - fc.divergence(chart, u).values)), 1.0e-10)

    _check(rows, "divergence_theorem",
           abs(integrate_scalar(chart, fc.divergence(chart, v).values)), 1.0e-10)

    psi = ScalarField(np.cos(np.add.outer(chart.theta, 2.0 * chart.phi)))
    lhs = fc.l2_inner(chart, fc.grad_scalar(chart, psi), v)
    rhs = -fc.l2_inner_scalar(chart, psi, fc.divergence(chart, v))
    scale = fc.l2_norm_scalar(chart, psi) * fc.h1_norm(chart, v)
    _check(rows, "gradient_divergence_duality", abs(lhs - rhs) / scale, 1.0e-8)

    lap = fc.bochner_laplacian(chart, v)
    ibp = abs(fc.l2_inner(chart, lap, v) + fc.grad_norm_sq(chart, v))
    _check(rows, "laplacian_integration_by_parts",
           ibp / fc.grad_norm_sq(chart, v), 1.0e-8)

    compat = _metric_compat_residual(chart, u, v, w)
    _check(rows, "metric_compatibility", compat, 1.0e-10)

    z = _reference_killing_field(chart, config)
    adv = fc.advect(chart, v, z)
    antisym = 2.0 * np.einsum("ijtp,itp,jtp->tp", chart.metric, adv.comp, v.comp)
    _check(rows, "killing_antisymmetry_pointwise",
           np.max(np.abs(antisym)) / max(fc.l2_norm(chart, v) ** 2, 1e-300),
           1.0e-10)

    agree, agree_rows = _form_agreement(chart, config, rng, count=20)
    _check(rows, "operator_form_agreement", agree, 1.0e-6)
    emit_csv(out / "identities_form_agreement.csv",
             ["sample", "difference", "scale", "relative"], agree_rows)
    return rows


def _metric_compat_residual(chart, u, v, w):
    from . import _spectral

    s = np.einsum("ijtp,itp,jtp->tp", chart.metric, u.comp, v.comp)
    ds = np.stack([_spectral.deriv_theta(s), _spectral.deriv_phi(s)])
    lhs = np.einsum("itp,itp->tp", w.comp, ds)
    t1 = np.einsum("ijtp,itp,jtp->tp", chart.metric,
                   fc.advect(chart, w, u).comp, v.comp)
    t2 = np.einsum("ijtp,itp,jtp->tp", chart.metric, u.comp,
                   fc.advect(chart, w, v).comp)
    norm = (fc.l2_norm(chart, u) * fc.l2_norm(chart, v) * fc.h1_norm(chart, w))
    return abs(integrate_scalar(chart, lhs - t1 - t2)) / max(norm, 1e-300)


def _form_agreement(chart, config, rng, count):
    fields = random_divfree_field(chart, rng, count=count)
    worst = 0.0
    table = []
    for i in range(count):
        ui = VectorField(fields.comp[i])
        a_div = st.apply_stokes_div_form(chart, config.mu_s, ui)
        a_boch = st.apply_stokes_bochner_form(chart, config.mu_s, ui)
        diff = fc.l2_norm(chart, a_div - a_boch)
        scale = fc.h1_norm(chart, ui) + fc.l2_norm(chart, a_boch)
        rel = diff / scale
        worst = max(worst, rel)
        table.append((i, diff, scale, rel))
    return worst, table


def _scenario_helmholtz(config, out):
    chart = build_chart(config)
    rng = np.random.default_rng(config.seed)
    rows = []
    tol = 1.0e-10
    v = fc.random_smooth_vector(chart, rng)

    pv, _ = leray_project(chart, v, tol=tol)
    ppv, _ = leray_project(chart, pv, tol=tol)
    _check(rows, "idempotence", fc.l2_norm(chart, ppv - pv), 10 * tol)

    dv = fc.l2_norm_scalar(chart, fc.divergence(chart, pv))
    _check(rows, "range_divergence_residual", dv, 10 * tol)

    w = fc.random_smooth_vector(chart, rng)
    pw, _ = leray_project(chart, w, tol=tol)
    adj = abs(fc.l2_inner(chart, pv, w) - fc.l2_inner(chart, v, pw))
    _check(rows, "self_adjointness",
           adj / (fc.l2_norm(chart, v) * fc.l2_norm(chart, w)), 10 * tol)

    psi = ScalarField(np.sin(np.add.outer(chart.theta, chart.phi)))
    gradpsi = fc.grad_scalar(chart, psi)
    annihilated, _ = leray_project(chart, gradpsi, tol=tol)
    _check(rows, "gradient_annihilation", fc.l2_norm(chart, annihilated), 10 * tol)

    z = _reference_killing_field(chart, config)
    pi = recover_pressure(chart, z, config.mu_s)
    _check(rows, "killing_pressure", fc.l2_norm_scalar(chart, pi), 1.0e-8)

    u = random_divfree_field(chart, rng)
    pi_u = recover_pressure(chart, u, config.mu_s)
    ratio = fc.l2_norm_scalar(chart, pi_u) / fc.h1_norm(chart, u)
    emit_csv(out / "helmholtz_pressure.csv",
             ["quantity", "value"],
             [("pressure_to_h1_ratio", ratio)])
    return rows


def _reference_killing_field(chart, config):
    comp = np.zeros((2, chart.n_theta, chart.n_phi))
    if config.surface == "flat_torus":
        comp[0] = 1.0
    else:
        comp[1] = 1.0
    return VectorField(comp)


def _scenario_equilibria(config, out):
    chart = build_chart(config)
    rows = []
    basis = st.divfree_basis(chart)
    kb = st.killing_fields(chart, basis=basis)
    expected = 2 if config.surface == "flat_torus" else 1
    _check(rows, "equilibria_dimension", abs(kb.dim - expected), 0.5)
    _check(rows, "dimension_bound", kb.dim, 3)
    stack = st.stack_fields(basis)
    q = 2.0 * st.deformation_gram(chart, stack)
    eigval = np.linalg.eigh(q)[0]
    gap = eigval[kb.dim] / max(abs(eigval[kb.dim - 1]), 1e-300) if kb.dim else np.inf
    _check(rows, "spectral_gap_inverse", 1.0 / gap, 1.0e-2)
    emit_csv(out / "equilibria_eigenvalues.csv",
             ["index", "eigenvalue"],
             [(i, eigval[i]) for i in range(min(len(eigval), 20))])
    return rows


def _scenario_spectrum(config, out):
    chart = build_chart(config)
    rows = []
    basis = st.divfree_basis(chart)
    op = st.assemble_operator(chart, config.mu_s, basis)
    spec = st.spectrum(op)
    lam_max = float(np.max(np.abs(spec.eigenvalues)))
    _check(rows, "spectral_bound_zero",
           abs(spec.spectral_bound), 1.0e-8 * lam_max)
    kb = st.killing_fields(chart, basis=basis)
    _check(rows, "equilibria_nontrivial", 1 if kb.dim == 0 else 0, 0.5)
    expected_zero = 2 if config.surface == "flat_torus" else 1
    _check(rows, "kernel_dimension", abs(spec.zero_dim - expected_zero), 0.5)
    if config.surface == "flat_torus" and abs(config.L1 - 2 * np.pi) < 1e-12 \
            and abs(config.L2 - 2 * np.pi) < 1e-12:
        expected = config.mu_s * np.array([1, 1, 1, 1, 2, 2, 2, 2, 4, 4], float)
        nonzero = spec.eigenvalues[spec.zero_dim:spec.zero_dim + 10]
        _check(rows, "flat_spectrum_first10",
               np.max(np.abs(nonzero - expected)), 1.0e-8)
    angle = st.subspace_angle(
        chart,
        [op.field_from_coords(spec.eigenvectors[:, i])
         for i in range(spec.zero_dim)],
        kb.fields,
    )
    _check(rows, "kernel_equals_equilibria_angle", angle, 1.0e-6)
    emit_csv(out / "spectrum_eigenvalues.csv",
             ["index", "eigenvalue"],
             [(i, v) for i, v in enumerate(spec.eigenvalues)])
    return rows


def _scenario_sectoriality(config, out):
    chart = build_chart(config)
    rows = []
    basis = st.divfree_basis(chart)
    op = st.assemble_operator(chart, config.mu_s, basis)
    spec = st.spectrum(op)
    omega = st.default_shift(spec)
    table = st.resolvent_probe(op, omega, np.pi / 4,
                               [1.0, 10.0, 100.0, 1000.0], seed=config.seed)
    worst = max(abs(p.q - p.q_oracle) / p.q_oracle for p in table.probes)
    _check(rows, "solve_matches_eigen_oracle", worst, 1.0e-8)
    sc = table.sector_constants
    _check(rows, "sector_constant_variation",
           (sc.max() - sc.min()) / sc.max(), 0.20)
    _check(rows, "sector_constant_bound", sc.max(),
           np.sqrt(2.0) / np.sin(np.pi / 4))
    emit_csv(out / "sectoriality_probes.csv",
             ["magnitude", "sign", "lam_re", "lam_im", "q_random_f",
              "q_oracle", "resolvent_norm", "sector_constant"],
             [(p.magnitude, p.sign, p.lam.real, p.lam.imag, p.q,
               p.q_oracle, p.resolvent_norm, p.sector_constant)
              for p in table.probes])
    return rows


def _refined_sizes(config):
    n1 = config.n_theta + config.n_theta // 2
    n2 = config.n_phi + config.n_phi // 2
    return n1 + n1 % 2, n2 + n2 % 2


def _scenario_korn(config, out):
    chart = build_chart(config)
    rows = []
    basis = st.divfree_basis(chart)
    kb = st.killing_fields(chart, basis=basis)
    c_coarse = korn_mod.korn_constant(chart, kb, basis)
    if config.surface == "flat_torus":
        _check(rows, "flat_constant_is_two", abs(c_coarse - 2.0) / 2.0, 1.0e-2)
    n1, n2 = _refined_sizes(config)
    fine_cfg = SimConfig(**{**config.__dict__, "n_theta": n1, "n_phi": n2})
    fine_chart = build_chart(fine_cfg)
    fine_basis = st.divfree_basis(fine_chart)
    fine_kb = st.killing_fields(fine_chart, basis=fine_basis)
    c_fine = korn_mod.korn_constant(fine_chart, fine_kb, fine_basis)
    _check(rows, "refinement_stability",
           abs(c_fine - c_coarse) / c_coarse, 2.0e-2)

    report = korn_mod.korn_intermediate_check(chart, sample_count=100,
                                              seed=config.seed)
    _check(rows, "curvature_identity", report.max_identity_defect, 1.0e-8)
    if config.surface == "flat_torus":
        _check(rows, "intermediate_bound", report.max_ratio, 4.2)

    worst = _korn_inequality_samples(chart, kb, c_coarse, config.seed)
    _check(rows, "inequality_with_fitted_constant", worst, 1.01)
    emit_csv(out / "korn_constants.csv",
             ["quantity", "value"],
             [("constant_coarse", c_coarse), ("constant_fine", c_fine),
              ("max_sample_ratio", report.max_ratio),
              ("mean_sample_ratio", report.mean_ratio)])
    return rows


def _korn_inequality_samples(chart, kb, constant, seed, count=100):
    rng = np.random.default_rng(seed + 1)
    fields = random_divfree_field(chart, rng, count=count)
    proj = st.project_onto_equilibria(VectorField(fields.comp), kb)
    comp = fields.comp - proj.comp
    worst = 0.0
    for i in range(count):
        u = VectorField(comp[i])
        d = fc.deformation(chart, u)
        dnorm = np.sqrt(max(fc.tensor_inner(chart, d, d), 1e-300))
        worst = max(worst, fc.h1_norm(chart, u) / (constant * dnorm))
    return worst


def _scenario_decay(config, out):
    chart = build_chart(config)
    rows = []
    basis = st.divfree_basis(chart)
    op = st.assemble_operator(chart, config.mu_s, basis)
    spec = st.spectrum(op)
    gap = float(spec.eigenvalues[spec.zero_dim]) / config.rho
    kb = st.killing_fields(chart, basis=basis)
    rng = np.random.default_rng(config.seed)
    u0 = random_divfree_field(chart, rng)
    # the run owns its horizon: 12/gap puts the fit window well past the
    # transient of the faster modes
    horizon = max(12.0 / gap, 40 * config.dt)
    run_cfg = SimConfig(**{**config.__dict__, "t_end": horizon})
    sample_every = max(1, int(round(horizon / 160.0 / config.dt)))
    traj = simulate(run_cfg, u0, kb=kb, operator=op, linear=True,
                    sample_every=sample_every, chart=chart)
    alpha, fit_resid = decay_rate_fit(traj)
    _check(rows, "linear_rate_matches_gap", abs(alpha - gap) / gap, 2.0e-2)
    _emit_trajectory_csv(out / "decay_timeseries.csv", traj)
    emit_csv(out / "decay_rate.csv", ["quantity", "value"],
             [("alpha_fit", alpha), ("spectral_gap", gap),
              ("fit_residual", fit_resid)])
    return rows


def _scenario_convergence(config, out):
    chart = build_chart(config)
    rows = []
    kb = default_killing_basis(config, chart)
    rng = np.random.default_rng(config.seed)
    u0_raw = random_divfree_field(chart, rng)
    u0 = VectorField(1.0e-3 * u0_raw.comp)
    traj = simulate(config, u0, kb=kb,
                    sample_every=max(1, int(round(0.05 / config.dt))),
                    chart=chart)
    dists = []
    for s in traj.states:
        pe = st.project_onto_equilibria(s.u, kb)
        dists.append(fc.l2_norm(chart, s.u - pe))
    dists = np.array(dists)
    monotone_defect = float(np.max(np.maximum(np.diff(dists), 0.0))
                            / max(dists[0], 1e-300))
    _check(rows, "distance_monotone_decay", monotone_defect, 1.0e-8)
    alpha, _ = decay_rate_fit(traj, kb)
    _check(rows, "final_distance_vs_rate",
           dists[-1] / dists[0],
           np.exp(-0.5 * alpha * traj.times[-1]))
    moments = traj.moments
    drift = np.max(np.abs(moments - moments[0])) if moments.size else 0.0
    u0_norm = fc.l2_norm(chart, traj.states[0].u)
    _check(rows, "killing_moment_drift", drift / u0_norm, 1.0e-6)
    energy = traj.energies
    growth = float(np.max(np.maximum(np.diff(energy), 0.0)))
    _check(rows, "energy_monotone", growth / energy[0], 1.0e-10)

    # energy-law residual is an order-of-accuracy statement: halving dt over
    # a short window must shrink it by about 2^p (p = integrator order)
    order = 2 if config.integrator == "imex2" else 1
    t_cmp = min(config.t_end, max(0.5, 50 * config.dt))
    r_full = _energy_identity_residual(config, u0, kb, chart, config.dt, t_cmp)
    r_half = _energy_identity_residual(config, u0, kb, chart,
                                       0.5 * config.dt, t_cmp)
    ratio = r_full / max(r_half, 1e-300)
    _check(rows, "energy_identity_halving",
           abs(np.log2(max(ratio, 1e-300)) - order), 1.0)
    emit_csv(out / "convergence_energy_identity.csv",
             ["quantity", "value"],
             [("residual_dt", r_full), ("residual_half_dt", r_half),
              ("ratio", ratio)])
    _emit_trajectory_csv(out / "convergence_timeseries.csv", traj,
                         extra=("distance", dists))
    return rows


def _energy_identity_residual(config, u0, kb, chart, dt, t_end):
    cfg = SimConfig(**{**config.__dict__, "dt": dt, "t_end": t_end})
    traj = simulate(cfg, u0, kb=kb, sample_every=1, chart=chart)
    energy = traj.energies
    integral = np.trapezoid(traj.dissipations, traj.times) / config.rho
    return float(abs(energy[-1] - energy[0] + integral))


def _emit_trajectory_csv(path, traj, extra=None):
    header = ["t", "energy", "dissipation"]
    m = traj.moments.shape[1] if traj.moments.size else 0
    header += [f"killing_moment_{j}" for j in range(m)]
    columns = [traj.times, traj.energies, traj.dissipations]
    columns += [traj.moments[:, j] for j in range(m)]
    if extra is not None:
        header.append(extra[0])
        columns.append(extra[1])
    rows = list(zip(*columns))
    emit_csv(path, header, rows)


_SCENARIO_FUNCS = {
    "identities": _scenario_identities,
    "helmholtz": _scenario_helmholtz,
    "equilibria": _scenario_equilibria,
    "spectrum": _scenario_spectrum,
    "sectoriality": _scenario_sectoriality,
    "korn": _scenario_korn,
    "decay": _scenario_decay,
    "convergence": _scenario_convergence,
}


# ---------------------------------------------------------------------------
# CLI


def _cap_threads():
    cap = os.environ.get("SURFSTOKES_THREADS")
    if not cap:
        return
    try:
        limit = int(cap)
    except ValueError:
        raise ConfigError(f"SURFSTOKES_THREADS must be an integer, got {cap!r}")
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=limit)
    except ImportError:
        os.environ.setdefault("OMP_NUM_THREADS", str(limit))
        os.environ.setdefault("OPENBLAS_NUM_THREADS", str(limit))


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="surfstokes",
        description="Run verification scenarios for the surface Stokes solver.",
    )
    parser.add_argument("config", help="path to a key = value config file")
    parser.add_argument("--scenario", choices=SCENARIOS,
                        help="override the scenario from the config file")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--seed", type=int, help="override the random seed")
    args = parser.parse_args(argv)
    try:
        _cap_threads()
        config, scenario, out_dir = parse_config(args.config)
        if args.scenario:
            scenario = args.scenario
        if args.out:
            out_dir = args.out
        if args.seed is not None:
            config = SimConfig(**{**config.__dict__, "seed": args.seed})
        report = run_scenario(scenario, config, out_dir=out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(report.summary())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
