"""Time integration of the projected surface Navier-Stokes system.

The evolution is  du/dt = -(1/rho) A u + F(u)  on the discrete
divergence-free subspace, with A the surface Stokes operator and
F(u) = -P(nabla_u u) the projected advection.  Two IMEX integrators are
provided:

* ``imex1`` -- backward Euler on A, forward Euler on F;
* ``imex2`` -- Crank-Nicolson on A, second-order Adams-Bashforth on F
  (the first step uses F at the initial time, which keeps the linear part
  at second order throughout).

The stiff implicit solve runs matrix-free with a projected, Fourier-
preconditioned conjugate-gradient iteration, or through the cached
eigendecomposition when an assembled OperatorMatrix is attached (the
preferred path at larger grids, where it makes each step a handful of
dense matrix-vector products).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _spectral
from .errors import ConfigError, ConvergenceError, SimulationAborted
from .fields import ScalarField, VectorField, check_grid
from .fieldcalc import advect, deformation, l2_inner, l2_norm, tensor_inner
from .geometry import build_flat_torus, build_torus_of_revolution
from .helmholtz import DEFAULT_TOL, leray_project
from .stokes import (
    KillingBasis,
    _weighted,
    div_residual,
    killing_fields,
    killing_moments,
    resample_killing_basis,
)

INTEGRATORS = ("imex1", "imex2")
SURFACES = ("flat_torus", "torus_of_revolution")

_POST_STEP_DIV_LIMIT = 1.0e-6
_DENSE_KILLING_LIMIT = 32


@dataclass(frozen=True)
class SimConfig:
    """Surface, grid and integrator parameters for a simulation."""

    surface: str = "torus_of_revolution"
    L1: float = 2.0 * np.pi
    L2: float = 2.0 * np.pi
    R: float = 2.0
    r: float = 1.0
    n_theta: int = 32
    n_phi: int = 32
    mu_s: float = 1.0
    rho: float = 1.0
    dt: float = 1.0e-2
    t_end: float = 5.0
    integrator: str = "imex2"
    dealias: bool = True
    seed: int = 7

    def __post_init__(self):
        if self.surface not in SURFACES:
            raise ConfigError(f"unknown surface '{self.surface}'")
        if self.surface == "flat_torus":
            if self.L1 <= 0 or self.L2 <= 0:
                raise ConfigError("L1 and L2 must be positive")
        else:
            if self.r <= 0:
                raise ConfigError("r must be positive")
            if self.R <= self.r:
                raise ConfigError("R must exceed r")
        for name in ("mu_s", "rho", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.t_end < 0:
            raise ConfigError("t_end must be nonnegative")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"unknown integrator '{self.integrator}'")
        for name in ("n_theta", "n_phi"):
            n = getattr(self, name)
            if n < 8 or n % 2 != 0:
                raise ConfigError(f"{name} must be an even integer >= 8")


def build_chart(config):
    if config.surface == "flat_torus":
        return build_flat_torus(config.L1, config.L2, config.n_theta, config.n_phi)
    return build_torus_of_revolution(config.R, config.r,
                                     config.n_theta, config.n_phi)


@dataclass(frozen=True)
class SimState:
    """Snapshot of the flow with running diagnostics."""

    t: float
    u: VectorField
    energy: float
    dissipation: float
    killing_moments: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    config: SimConfig
    chart: object
    kb: KillingBasis
    states: list

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def energies(self):
        return np.array([s.energy for s in self.states])

    @property
    def dissipations(self):
        return np.array([s.dissipation for s in self.states])

    @property
    def moments(self):
        return np.array([s.killing_moments for s in self.states])


def make_state(chart, t, u, mu_s, kb):
    d = deformation(chart, u)
    return SimState(
        t=float(t),
        u=u,
        energy=float(0.5 * l2_inner(chart, u, u)),
        dissipation=float(2.0 * mu_s * tensor_inner(chart, d, d)),
        killing_moments=np.atleast_1d(killing_moments(u, kb))
        if kb.dim else np.zeros(0),
    )


def nonlinearity(chart, u, dealias=True, tol=DEFAULT_TOL):
    """F(u) = -P(nabla_u u), optionally dealiased with the 2/3 rule."""
    check_grid(u, chart, "vector field")
    adv = advect(chart, u, u, dealias=dealias)
    projected, _ = leray_project(chart, adv, tol=tol)
    return VectorField(-projected.comp)


def cfl_limit(chart, u):
    """dt_max = 0.5 * min physical grid spacing / max physical speed."""
    h_theta = np.min(np.sqrt(chart.metric[0, 0])) * chart.dtheta
    h_phi = np.min(np.sqrt(chart.metric[1, 1])) * chart.dphi
    speed_sq = np.einsum("ijtp,itp,jtp->tp", chart.metric, u.comp, u.comp)
    vmax = float(np.sqrt(np.max(speed_sq)))
    if vmax == 0.0:
        return np.inf
    return 0.5 * min(h_theta, h_phi) / vmax


def default_killing_basis(config, chart, tol=1.0e-6):
    """Equilibria basis for a configured surface.

    Dense detection runs on grids up to 32^2; on finer grids the basis is
    detected on a 32^2 chart of the same surface and transferred by
    trigonometric upsampling (Killing fields are smooth, so the transfer is
    spectrally exact and re-verified against the basis invariants).
    """
    if max(config.n_theta, config.n_phi) <= _DENSE_KILLING_LIMIT:
        return killing_fields(chart, tol=tol)
    coarse_cfg = SimConfig(
        surface=config.surface, L1=config.L1, L2=config.L2,
        R=config.R, r=config.r,
        n_theta=_DENSE_KILLING_LIMIT, n_phi=_DENSE_KILLING_LIMIT,
        mu_s=config.mu_s, rho=config.rho, dt=config.dt,
        t_end=config.t_end, integrator=config.integrator,
        dealias=config.dealias, seed=config.seed,
    )
    coarse = build_chart(coarse_cfg)
    kb_coarse = killing_fields(coarse, tol=tol)
    return resample_killing_basis(kb_coarse, chart)


class Stepper:
    """Holds per-run solver state: integrator history and implicit caches."""

    def __init__(self, chart, config, operator=None, linear=False,
                 solver_tol=1.0e-11):
        self.chart = chart
        self.config = config
        self.nu = config.mu_s / config.rho
        self.linear = linear
        self.solver_tol = solver_tol
        self.operator = operator
        self._f_prev = None
        self._warm = None
        if operator is not None:
            scale = self.nu / operator.mu_s
            sym = 0.5 * (operator.entries + operator.entries.T) * scale
            self._eigval, self._eigvec = np.linalg.eigh(sym)
            self._eigval = np.maximum(self._eigval, 0.0)
        else:
            k1, k2 = _spectral.derivative_wavenumbers(chart.n_theta, chart.n_phi)
            c = chart.inv_metric.mean(axis=(-2, -1))
            self._symbol = c[0, 0] * k1**2 + 2 * c[0, 1] * k1 * k2 + c[1, 1] * k2**2

    # -- operator pieces ---------------------------------------------------

    def _apply_stokes(self, comp):
        from .fieldcalc import _bochner_comp

        raw = _bochner_comp(self.chart, comp) + self.chart.gauss_curvature * comp
        projected, _ = leray_project(self.chart, VectorField(raw),
                                     tol=self.solver_tol)
        return -self.nu * projected.comp

    def _w_inner(self, a, b):
        return float(np.sum(_weighted(self.chart, a) * b))

    def _precond(self, gamma, comp):
        fh = np.fft.fft2(comp, axes=(-2, -1))
        fh /= 1.0 + gamma * self.nu * self._symbol
        smooth = np.fft.ifft2(fh, axes=(-2, -1)).real
        projected, _ = leray_project(self.chart, VectorField(smooth),
                                     tol=self.solver_tol)
        return projected.comp

    def _implicit_solve(self, gamma, rhs):
        """Solve (I + gamma A) x = rhs by projected preconditioned CG."""
        if gamma == 0.0:
            return rhs
        if self._warm is not None:
            x = self._warm.copy()
            r = rhs - (x + gamma * self._apply_stokes(x))
        else:
            x = np.zeros_like(rhs)
            r = rhs.copy()
        z = self._precond(gamma, r)
        delta = self._w_inner(r, z)
        p = z.copy()
        scale = np.sqrt(max(self._w_inner(rhs, rhs), 1.0e-300))
        target = (1.0e-10 * scale) ** 2
        accept = (1.0e-8 * scale) ** 2
        max_iter = 10 * self.chart.n_theta
        iters = 0
        stalled = 0
        while delta > target:
            if iters >= max_iter or stalled >= 4:
                if delta <= accept:
                    break  # round-off floor of the inner solves
                raise ConvergenceError(
                    f"implicit Stokes solve stalled at residual "
                    f"{np.sqrt(delta):.3e}",
                    residual=float(np.sqrt(delta)), iterations=iters,
                )
            op_p = p + gamma * self._apply_stokes(p)
            denom = self._w_inner(p, op_p)
            if denom <= 0:
                break
            alpha = delta / denom
            x = x + alpha * p
            r = r - alpha * op_p
            z = self._precond(gamma, r)
            delta_new = self._w_inner(r, z)
            beta = delta_new / delta
            p = z + beta * p
            stalled = stalled + 1 if delta_new > 0.5 * delta else 0
            delta = delta_new
            iters += 1
        self._warm = x
        return x

    def _nonlinear(self, comp):
        if self.linear:
            return np.zeros_like(comp)
        f = nonlinearity(self.chart, VectorField(comp),
                         dealias=self.config.dealias, tol=self.solver_tol)
        return f.comp

    # -- dense (eigenbasis) path --------------------------------------------

    def _coords(self, comp):
        return self.operator.coords_from_field(VectorField(comp))

    def _grid(self, coords):
        return self.operator.field_from_coords(coords).comp

    def _step_dense(self, t, comp):
        dt = self.config.dt
        c = self._coords(comp)
        ch = self._eigvec.T @ c
        f = self._nonlinear(self._grid(c))
        fc = self._eigvec.T @ self._coords(f)
        if self.config.integrator == "imex1":
            ch_new = (ch + dt * fc) / (1.0 + dt * self._eigval)
        else:
            f_prev = fc if self._f_prev is None else self._f_prev
            half = 0.5 * dt * self._eigval
            ch_new = ((1.0 - half) * ch + dt * (1.5 * fc - 0.5 * f_prev)) / (1.0 + half)
            self._f_prev = fc
        c_new = self._eigvec @ ch_new
        return t + dt, self._grid(c_new)

    # -- matrix-free path ----------------------------------------------------

    def _step_matfree(self, t, comp):
        dt = self.config.dt
        f = self._nonlinear(comp)
        if self.config.integrator == "imex1":
            rhs = comp + dt * f
            gamma = dt
        else:
            # Crank-Nicolson: (I + dt/2 A) u' = (I - dt/2 A) u + dt (3/2 F - 1/2 F_prev)
            f_prev = f if self._f_prev is None else self._f_prev
            rhs = comp - 0.5 * dt * self._apply_stokes(comp) \
                + dt * (1.5 * f - 0.5 * f_prev)
            gamma = 0.5 * dt
            self._f_prev = f
        x = self._implicit_solve(gamma, rhs)
        projected, _ = leray_project(self.chart, VectorField(x),
                                     tol=self.solver_tol)
        return t + dt, projected.comp

    def step(self, t, comp):
        if self.operator is not None:
            return self._step_dense(t, comp)
        return self._step_matfree(t, comp)


def step(state, config, operator=None, linear=False):
    """Advance a SimState by one time step (single-shot convenience form).

    Multistep history is not carried across calls; `simulate` keeps it for
    whole runs.  The state's Killing moments are recomputed with an empty
    basis (callers tracking moments should use `simulate`).
    """
    chart = build_chart(config)
    check_grid(state.u, chart, "velocity")
    stepper = Stepper(chart, config, operator=operator, linear=linear)
    t, comp = stepper.step(state.t, state.u.comp)
    u = VectorField(comp)
    resid = float(np.max(div_residual(chart, u)))
    if resid > _POST_STEP_DIV_LIMIT:
        raise SimulationAborted(
            f"post-step divergence residual {resid:.3e} exceeds "
            f"{_POST_STEP_DIV_LIMIT:.0e}"
        )
    return make_state(chart, t, u, config.mu_s, KillingBasis(chart, []))


def simulate(config, u0, kb=None, operator=None, linear=False,
             sample_every=1, chart=None):
    """Integrate to t_end, sampling diagnostics every `sample_every` steps.

    The initial field is Leray-projected; the CFL-style bound
    dt <= 0.5 h_min / max|u0| is checked up front.  Any step failure raises
    SimulationAborted carrying the partial trajectory.
    """
    if chart is None:
        chart = build_chart(config)
    check_grid(u0, chart, "initial velocity")
    if kb is None:
        kb = default_killing_basis(config, chart)
    u0p, _ = leray_project(chart, u0, tol=DEFAULT_TOL)
    limit = cfl_limit(chart, u0p)
    if config.dt > limit:
        raise ConfigError(
            f"dt = {config.dt} violates the advective CFL bound {limit:.3e}"
        )
    stepper = Stepper(chart, config, operator=operator, linear=linear)
    n_steps = int(round(config.t_end / config.dt))
    comp = u0p.comp
    if operator is not None:
        # confine the state to the operator's basis from the start
        comp = stepper._grid(stepper._coords(comp))
    t = 0.0
    states = [make_state(chart, t, VectorField(comp), config.mu_s, kb)]
    for k in range(n_steps):
        try:
            t, comp = stepper.step(t, comp)
        except ConvergenceError as exc:
            raise SimulationAborted(
                f"step {k + 1} failed: {exc}",
                trajectory=Trajectory(config, chart, kb, states),
            ) from exc
        if (k + 1) % sample_every == 0 or k == n_steps - 1:
            u = VectorField(comp)
            resid = float(np.max(div_residual(chart, u)))
            if resid > _POST_STEP_DIV_LIMIT:
                raise SimulationAborted(
                    f"post-step divergence residual {resid:.3e} at t={t:.4f}",
                    trajectory=Trajectory(config, chart, kb, states),
                )
            states.append(make_state(chart, t, u, config.mu_s, kb))
    return Trajectory(config, chart, kb, states)


def decay_rate_fit(trajectory, kb=None):
    """Least-squares decay rate of log ||u(t) - P_E u(t)|| over the tail.

    Uses the second half of the sampled trajectory (at least 10 samples).
    Raises if the signal sits below 1e-10 (nothing to fit) or fails to
    decay.  Returns (alpha, rms residual of the linear fit).
    """
    from .stokes import project_onto_equilibria

    kb = trajectory.kb if kb is None else kb
    chart = trajectory.chart
    states = trajectory.states
    dists = []
    for s in states:
        pe = project_onto_equilibria(s.u, kb)
        dists.append(l2_norm(chart, s.u - pe))
    dists = np.array(dists)
    times = trajectory.times
    tail = slice(len(states) // 2, None)
    t_tail, d_tail = times[tail], dists[tail]
    if len(d_tail) < 10:
        raise ValueError("need at least 10 samples past the transient")
    if np.max(d_tail) < 1.0e-10:
        raise ValueError("signal below 1e-10; nothing to fit")
    log_d = np.log(d_tail)
    coeff = np.polyfit(t_tail, log_d, 1)
    slope = coeff[0]
    if slope >= 0:
        raise ValueError(f"signal is not decaying (slope {slope:.3e})")
    fit = np.polyval(coeff, t_tail)
    residual = float(np.sqrt(np.mean((fit - log_d) ** 2)))
    return float(-slope), residual
