"""Spectral tools for incompressible viscous flow on doubly-periodic metric charts."""

from .dynamics import SimConfig, SimState, Trajectory, simulate, step
from .fields import ScalarField, TensorField, VectorField
from .geometry import (
    SurfaceChart,
    build_flat_torus,
    build_torus_of_revolution,
    chart_from_metric,
    christoffel_from_metric,
    gaussian_curvature,
    integrate_scalar,
)
from .helmholtz import leray_project, recover_pressure
from .korn import korn_constant, korn_intermediate_check
from .stokes import (
    KillingBasis,
    OperatorMatrix,
    apply_stokes_bochner_form,
    apply_stokes_div_form,
    assemble_operator,
    divfree_basis,
    killing_fields,
    project_onto_equilibria,
    resolvent_probe,
    spectrum,
    tensor_divergence,
)

__all__ = [
    "ScalarField",
    "VectorField",
    "TensorField",
    "SurfaceChart",
    "build_flat_torus",
    "build_torus_of_revolution",
    "chart_from_metric",
    "christoffel_from_metric",
    "gaussian_curvature",
    "integrate_scalar",
    "leray_project",
    "recover_pressure",
    "tensor_divergence",
    "apply_stokes_div_form",
    "apply_stokes_bochner_form",
    "divfree_basis",
    "assemble_operator",
    "spectrum",
    "killing_fields",
    "project_onto_equilibria",
    "resolvent_probe",
    "OperatorMatrix",
    "KillingBasis",
    "korn_constant",
    "korn_intermediate_check",
    "SimConfig",
    "SimState",
    "Trajectory",
    "simulate",
    "step",
]
