"""Implicit time stepping of the grad-div stabilized Navier-Stokes system.

Weak form stepped here (velocity u, pressure p, test pair (v, q)):

    (d_t u, v) + nu (grad u, grad v) + b(u, u, v) + mu (div u, div v)
        - (p, div v) = (f, v),
    (div u, q) = 0,

with b the skew-symmetrized convective form from :mod:`podns.assembly`.
`d_t` is implicit Euler or BDF2 (first BDF2 step falls back to implicit
Euler).  Dirichlet data is pinned on all tagged boundary DOFs; the
pressure is normalized by a scalar Lagrange multiplier enforcing
(p, 1) = 0, so no pressure DOF is grounded ad hoc.

Each nonlinear step runs a Newton iteration with the exact convection
Jacobian and falls back to a Picard (frozen-advection) iteration if
Newton stalls.  Failures raise :class:`NewtonError` carrying the last
residual norm.

`galerkin_time_derivative` recovers the discrete time derivative w of a
velocity field u as the solution of the constrained mass system

    (w, v) - (lam, div v) = (f, v) - nu (grad u, grad v) - b(u, u, v)
                            - mu (div u, div v),
    (div w, q) = 0,

i.e. the exact rate the semi-discrete Galerkin system would assign to u.
"""

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from podns.assembly import (
    assemble_convection,
    assemble_convection_jacobian,
    assemble_load,
    assemble_operators,
)
from podns.fe_space import read_coefficients, write_coefficients

_TRAJ_FORMAT = "podns-trajectory-v1"


@dataclass
class FomConfig:
    """Time stepping parameters for the full-order solver."""

    nu: float
    dt: float
    t_end: float
    mu: float = 0.01
    integrator: str = "bdf2"
    newton_tol: float = 1e-10
    newton_maxiter: int = 25
    picard_maxiter: int = 60
    picard_fallback: bool = True
    store_derivatives: bool = True
    project_initial: bool = True

    def __post_init__(self):
        if self.integrator not in ("ie", "bdf2"):
            raise ValueError("integrator must be 'ie' or 'bdf2'")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-8 * max(1.0, steps):
            raise ValueError("t_end must be an integer multiple of dt")

    @property
    def num_steps(self):
        return int(round(self.t_end / self.dt))


class NewtonError(RuntimeError):
    """Nonlinear solve failure; keeps the offending residual."""

    def __init__(self, step_index, iterations, residual_norm):
        self.step_index = step_index
        self.iterations = iterations
        self.residual_norm = residual_norm
        super().__init__(
            f"nonlinear solve failed at step {step_index}: "
            f"residual {residual_norm:.3e} after {iterations} iterations"
        )


class Trajectory:
    """Time series of velocity/pressure (and optionally recovered
    Galerkin time derivative) coefficient vectors, one column per step."""

    def __init__(self, space, times, velocities, pressures, derivatives=None, meta=None):
        self.space = space
        self.times = np.asarray(times, dtype=np.float64)
        self.velocities = np.asarray(velocities, dtype=np.float64)
        self.pressures = np.asarray(pressures, dtype=np.float64)
        self.derivatives = None if derivatives is None else np.asarray(derivatives)
        self.meta = dict(meta or {})
        n = len(self.times)
        if self.velocities.shape[1] != n or self.pressures.shape[1] != n:
            raise ValueError("column count must match number of time levels")

    @property
    def num_steps(self):
        return len(self.times) - 1

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        meta = dict(self.meta)
        meta.update(
            {
                "format": _TRAJ_FORMAT,
                "num_velocity_dofs": int(self.velocities.shape[0]),
                "num_pressure_dofs": int(self.pressures.shape[0]),
                "num_time_levels": len(self.times),
                "times": [float(t) for t in self.times],
                "has_derivatives": self.derivatives is not None,
            }
        )
        with open(os.path.join(directory, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2)
        for k in range(len(self.times)):
            write_coefficients(
                os.path.join(directory, f"velocity_{k:05d}.bin"), self.velocities[:, k]
            )
            write_coefficients(
                os.path.join(directory, f"pressure_{k:05d}.bin"), self.pressures[:, k]
            )
            if self.derivatives is not None:
                write_coefficients(
                    os.path.join(directory, f"derivative_{k:05d}.bin"),
                    self.derivatives[:, k],
                )

    @classmethod
    def load(cls, directory, space):
        with open(os.path.join(directory, "meta.json")) as fh:
            meta = json.load(fh)
        if meta.get("format") != _TRAJ_FORMAT:
            raise ValueError(f"not a trajectory directory: {directory}")
        nu_dofs = meta["num_velocity_dofs"]
        if space.velocity.num_dofs != nu_dofs:
            raise ValueError(
                f"space has {space.velocity.num_dofs} velocity DOFs, "
                f"trajectory has {nu_dofs}"
            )
        n = meta["num_time_levels"]
        times = np.array(meta["times"])
        vel = np.empty((nu_dofs, n))
        pre = np.empty((meta["num_pressure_dofs"], n))
        der = np.empty((nu_dofs, n)) if meta["has_derivatives"] else None
        for k in range(n):
            vel[:, k] = read_coefficients(os.path.join(directory, f"velocity_{k:05d}.bin"))
            pre[:, k] = read_coefficients(os.path.join(directory, f"pressure_{k:05d}.bin"))
            if der is not None:
                der[:, k] = read_coefficients(
                    os.path.join(directory, f"derivative_{k:05d}.bin")
                )
        return cls(space, times, vel, pre, der, meta)


class FomSolver:
    """Stateful solver bound to one Taylor-Hood space and one problem.

    `problem` provides forcing(x, y, t) and, unless it is homogeneous,
    velocity(x, y, t) used as Dirichlet data (velocity_t for derivative
    recovery).  Pass problem=None for the unforced homogeneous case.
    """

    def __init__(self, space, config, problem=None, operators=None):
        self.space = space
        self.config = config
        self.problem = problem
        self.ops = operators if operators is not None else assemble_operators(space)
        self.free = space.velocity.interior_dofs
        self.bdry = space.velocity.boundary_dofs
        ops = self.ops
        self.K_visc = (config.nu * ops.A + config.mu * ops.G).tocsr()
        self.B_free = ops.B.tocsc()[:, self.free].tocsr()
        self.m_pres = ops.pressure_mean
        self._mass_saddle_lu = None

    # -- boundary data -------------------------------------------------

    def _dirichlet_values(self, t, rate=False):
        """Full-length velocity vector with boundary entries filled."""
        vals = np.zeros(self.space.velocity.num_dofs)
        if self.problem is not None and not self.problem.homogeneous:
            f = self.problem.velocity_t if rate else self.problem.velocity
            full = self.space.velocity.interpolate_values(
                lambda x, y: f(x, y, t)
            )
            vals[self.bdry] = full[self.bdry]
        return vals

    def load_vector(self, t):
        if self.problem is None:
            return np.zeros(self.space.velocity.num_dofs)
        return assemble_load(self.ops, self.problem.forcing, t)

    # -- constrained mass solves ---------------------------------------

    def _mass_saddle(self):
        if self._mass_saddle_lu is None:
            ops = self.ops
            nf = len(self.free)
            npd = ops.num_pressure_dofs
            M_ff = ops.M[self.free][:, self.free]
            mat = sp.bmat(
                [
                    [M_ff, -self.B_free.T, None],
                    [self.B_free, None, self.m_pres.reshape(-1, 1)],
                    [None, self.m_pres.reshape(1, -1), None],
                ],
                format="csc",
            )
            self._mass_saddle_lu = (splu(mat), nf, npd)
        return self._mass_saddle_lu

    def _solve_mass_constrained(self, rhs_u_full, boundary_values):
        """Solve (w, v) - (lam, div v) = rhs, (div w, q) = 0 with the
        boundary rows of w pinned to `boundary_values`."""
        lu, nf, npd = self._mass_saddle()
        w_b = np.zeros_like(rhs_u_full)
        w_b[self.bdry] = boundary_values[self.bdry]
        rhs = np.concatenate(
            [
                rhs_u_full[self.free] - (self.ops.M @ w_b)[self.free],
                -(self.ops.B @ w_b),
                [0.0],
            ]
        )
        sol = lu.solve(rhs)
        w = w_b
        w[self.free] = sol[:nf]
        lam = sol[nf : nf + npd]
        return w, lam

    def project_initial(self, u_full):
        """Discrete Leray projection keeping pinned boundary values."""
        return self._solve_mass_constrained(self.ops.M @ u_full, u_full)[0]

    def galerkin_time_derivative(self, u_full, t):
        """Recover the Galerkin rate w of a velocity field at time t."""
        rhs = self.load_vector(t) - self.K_visc @ u_full
        rhs -= assemble_convection(self.ops, u_full) @ u_full
        w_bc = self._dirichlet_values(t, rate=True)
        return self._solve_mass_constrained(rhs, w_bc)[0]

    # -- implicit step -------------------------------------------------

    def _nonlinear_step(self, step_index, alpha, hist, t_new, u_guess, p_guess):
        """Solve the alpha M u + K u + N(u) u - B^T p = F + hist system."""
        cfg = self.config
        ops = self.ops
        free, bdry = self.free, self.bdry
        nf = len(free)
        npd = ops.num_pressure_dofs
        F = self.load_vector(t_new)
        scale = 1.0 + np.linalg.norm(F[free]) + np.linalg.norm(hist[free])

        u = u_guess.copy()
        u[bdry] = self._dirichlet_values(t_new)[bdry]
        p = p_guess.copy()
        lam = 0.0

        def residual(u, p, lam):
            N = assemble_convection(ops, u)
            r_u = alpha * (ops.M @ u) + self.K_visc @ u + N @ u - ops.B.T @ p - F - hist
            r_p = ops.B @ u + lam * self.m_pres
            r_m = self.m_pres @ p
            return np.concatenate([r_u[free], r_p, [r_m]])

        def attempt(use_newton, maxiter):
            nonlocal u, p, lam
            r = residual(u, p, lam)
            for it in range(maxiter):
                rnorm = np.linalg.norm(r)
                if not np.isfinite(rnorm):
                    return False, it, rnorm
                if rnorm <= cfg.newton_tol * scale:
                    return True, it, rnorm
                if use_newton:
                    C = assemble_convection_jacobian(ops, u)
                else:
                    C = assemble_convection(ops, u)
                K_dyn = alpha * ops.M + self.K_visc + C
                J = sp.bmat(
                    [
                        [K_dyn[free][:, free], -self.B_free.T, None],
                        [self.B_free, None, self.m_pres.reshape(-1, 1)],
                        [None, self.m_pres.reshape(1, -1), None],
                    ],
                    format="csc",
                )
                delta = splu(J).solve(-r)
                u[free] += delta[:nf]
                p += delta[nf : nf + npd]
                lam += delta[nf + npd]
                r = residual(u, p, lam)
            rnorm = np.linalg.norm(r)
            return rnorm <= cfg.newton_tol * scale, maxiter, rnorm

        ok, iters, rnorm = attempt(True, cfg.newton_maxiter)
        if not ok and cfg.picard_fallback:
            u = u_guess.copy()
            u[bdry] = self._dirichlet_values(t_new)[bdry]
            p = p_guess.copy()
            lam = 0.0
            ok, iters, rnorm = attempt(False, cfg.picard_maxiter)
        if not ok:
            raise NewtonError(step_index, iters, rnorm)
        return u, p

    def run(self):
        """March from the interpolated (and Leray-projected) initial
        state to t_end; returns a :class:`Trajectory`."""
        cfg = self.config
        M = cfg.num_steps
        nu_dofs = self.space.velocity.num_dofs
        np_dofs = self.ops.num_pressure_dofs
        times = cfg.dt * np.arange(M + 1)
        U = np.zeros((nu_dofs, M + 1))
        P = np.zeros((np_dofs, M + 1))

        if self.problem is not None:
            u0 = self.space.velocity.interpolate_values(
                lambda x, y: self.problem.velocity(x, y, 0.0)
            )
        else:
            u0 = np.zeros(nu_dofs)
        if cfg.project_initial:
            u0 = self.project_initial(u0)
        U[:, 0] = u0

        for n in range(1, M + 1):
            t_new = times[n]
            if cfg.integrator == "ie" or n == 1:
                alpha = 1.0 / cfg.dt
                hist = (1.0 / cfg.dt) * (self.ops.M @ U[:, n - 1])
                guess = U[:, n - 1].copy()
            else:
                alpha = 1.5 / cfg.dt
                hist = self.ops.M @ (
                    (2.0 / cfg.dt) * U[:, n - 1] - (0.5 / cfg.dt) * U[:, n - 2]
                )
                guess = 2.0 * U[:, n - 1] - U[:, n - 2]
            U[:, n], P[:, n] = self._nonlinear_step(
                n, alpha, hist, t_new, guess, P[:, n - 1]
            )

        derivs = None
        if cfg.store_derivatives:
            derivs = np.empty_like(U)
            for n in range(M + 1):
                derivs[:, n] = self.galerkin_time_derivative(U[:, n], times[n])

        meta = {
            "nu": cfg.nu,
            "mu": cfg.mu,
            "dt": cfg.dt,
            "t_end": cfg.t_end,
            "integrator": cfg.integrator,
            "problem": getattr(self.problem, "name", None),
        }
        return Trajectory(self.space, times, U, P, derivs, meta)


def run_fom(space, config, problem=None, operators=None):
    return FomSolver(space, config, problem, operators).run()
