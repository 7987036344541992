"""Galerkin reduced-order model with grad-div stabilization.

The ROM advances coordinates a^n of u_r^n = sum_k a_k phi_k by

    ((u_r^n - u_r^{n-1})/dt, phi) + nu (grad u_r^n, grad phi)
        + b(u_r^n, u_r^n, phi) + mu (div u_r^n, div phi) = (f^n, phi)

for all basis functions phi (implicit Euler shown; BDF2 replaces the
difference quotient, first step implicit Euler).  All reduced operators
are dense and precomputed, including the r^3 convective tensor

    T[i, j, k] = b(phi_j, phi_k, phi_i),

so one Newton residual costs O(r^3) with no mesh traversal.  The skew
pattern sum_{i,j,k} a_j b_i b_k T[i,j,k] = 0 (for zero-trace bases) is
inherited from the full trilinear form and gives unconditional energy
stability of the implicit Euler scheme with f = 0.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

from podns.assembly import assemble_convection, assemble_load
from podns.fom_solver import Trajectory


@dataclass
class RomConfig:
    """Time stepping parameters of the reduced model."""

    nu: float
    dt: float
    t_end: float
    mu: float = 0.01
    integrator: str = "bdf2"
    newton_tol: float = 1e-12
    newton_maxiter: int = 50

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


class RomNewtonError(RuntimeError):
    """Reduced Newton failure; carries the residual-norm history."""

    def __init__(self, step_index, history):
        self.step_index = step_index
        self.history = list(history)
        last = self.history[-1] if self.history else float("nan")
        super().__init__(
            f"reduced Newton failed at step {step_index}: residual {last:.3e} "
            f"after {len(self.history)} iterations"
        )


class RomOperators:
    """Dense reduced operators of one POD basis."""

    def __init__(self, M_r, A_r, G_r, tensor, load_hook, basis):
        self.M_r = M_r
        self.A_r = A_r
        self.G_r = G_r
        self.tensor = tensor
        self._load_hook = load_hook
        self.basis = basis

    @property
    def r(self):
        return self.M_r.shape[0]

    def load(self, t):
        """Reduced forcing vector (f(t), phi_i), zeros when unforced."""
        if self._load_hook is None:
            return np.zeros(self.r)
        return self._load_hook(t)

    def convection_value(self, a):
        """c_i(a) = b(u, u, phi_i) for u with coordinates a."""
        return np.einsum("ijk,j,k->i", self.tensor, a, a)

    def convection_jacobian(self, a):
        return np.einsum("ijk,k->ij", self.tensor, a) + np.einsum(
            "ijk,j->ik", self.tensor, a
        )


def build_rom_operators(basis, fem_ops, forcing=None):
    """Galerkin-compress the FE operators onto a POD basis.

    `forcing` is an optional callable f(x, y, t) -> (fx, fy); its
    reduction is assembled on demand per time level.
    """
    Phi = basis.vectors
    if Phi.shape[0] != fem_ops.num_velocity_dofs:
        raise ValueError(
            f"basis has {Phi.shape[0]} DOFs, operators have "
            f"{fem_ops.num_velocity_dofs}"
        )
    r = Phi.shape[1]

    def compress(K):
        S = Phi.T @ (K @ Phi)
        return 0.5 * (S + S.T)

    M_r = compress(fem_ops.M)
    A_r = compress(fem_ops.A)
    G_r = compress(fem_ops.G)
    tensor = np.empty((r, r, r))
    for j in range(r):
        Nj = assemble_convection(fem_ops, Phi[:, j])
        # T[i, j, k] = phi_i^T N(phi_j) phi_k
        tensor[:, j, :] = Phi.T @ (Nj @ Phi)

    load_hook = None
    if forcing is not None:
        def load_hook(t):
            return Phi.T @ assemble_load(fem_ops, forcing, t)

    return RomOperators(M_r, A_r, G_r, tensor, load_hook, basis)


def slice_rom_operators(ops, r):
    """Reduced operators of the first r basis vectors, without
    reassembling the convection tensor (Galerkin compression of a
    prefix is the leading block of the full compression)."""
    from podns.pod import prefix_basis

    if not 1 <= r <= ops.r:
        raise ValueError(f"requested rank r={r} outside 1..{ops.r}")
    load_hook = None
    if ops._load_hook is not None:
        full_hook = ops._load_hook

        def load_hook(t):
            return full_hook(t)[:r]

    return RomOperators(
        ops.M_r[:r, :r],
        ops.A_r[:r, :r],
        ops.G_r[:r, :r],
        ops.tensor[:r, :r, :r],
        load_hook,
        prefix_basis(ops.basis, r),
    )


def rom_step(
    ops,
    a_prev,
    dt,
    t_new,
    nu,
    mu,
    integrator="ie",
    a_prev2=None,
    newton_tol=1e-12,
    newton_maxiter=50,
    step_index=0,
):
    """One implicit step of the reduced system; returns new coordinates."""
    if integrator == "bdf2" and a_prev2 is not None:
        alpha = 1.5 / dt
        hist = ops.M_r @ ((2.0 / dt) * a_prev - (0.5 / dt) * a_prev2)
        a = 2.0 * a_prev - a_prev2
    else:
        alpha = 1.0 / dt
        hist = (1.0 / dt) * (ops.M_r @ a_prev)
        a = a_prev.copy()
    f_red = ops.load(t_new)
    K_lin = alpha * ops.M_r + nu * ops.A_r + mu * ops.G_r
    scale = 1.0 + np.linalg.norm(f_red) + np.linalg.norm(hist)

    history = []
    for _ in range(newton_maxiter):
        res = K_lin @ a + ops.convection_value(a) - hist - f_red
        rnorm = float(np.linalg.norm(res))
        history.append(rnorm)
        if not np.isfinite(rnorm):
            raise RomNewtonError(step_index, history)
        if rnorm <= newton_tol * scale:
            return a
        J = K_lin + ops.convection_jacobian(a)
        a = a + np.linalg.solve(J, -res)
    res = K_lin @ a + ops.convection_value(a) - hist - f_red
    rnorm = float(np.linalg.norm(res))
    history.append(rnorm)
    if rnorm <= newton_tol * scale:
        return a
    raise RomNewtonError(step_index, history)


class RomTrajectory:
    """Reduced coordinates over time plus the basis used to lift them."""

    def __init__(self, basis, times, coords, meta=None):
        self.basis = basis
        self.times = np.asarray(times, dtype=np.float64)
        self.coords = np.asarray(coords, dtype=np.float64)
        self.meta = dict(meta or {})

    @property
    def r(self):
        return self.coords.shape[0]

    def lift(self):
        """Lifted velocity coefficient series (ndof, num levels)."""
        return self.basis.vectors @ self.coords

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"a_{k + 1}" for k in range(self.r)])
            for n, t in enumerate(self.times):
                w.writerow(
                    ["%.17g" % t] + ["%.17g" % v for v in self.coords[:, n]]
                )

    def save_lifted(self, directory, space):
        lifted = self.lift()
        pres = np.zeros((1, len(self.times)))
        meta = dict(self.meta)
        meta["kind"] = "rom-lifted"
        Trajectory(space, self.times, lifted, pres, None, meta).save(directory)


def run_rom(ops, cfg, a0):
    """March the reduced model from coordinates a0."""
    M = cfg.num_steps
    times = cfg.dt * np.arange(M + 1)
    coords = np.zeros((ops.r, M + 1))
    coords[:, 0] = a0
    for n in range(1, M + 1):
        use_bdf2 = cfg.integrator == "bdf2" and n >= 2
        coords[:, n] = rom_step(
            ops,
            coords[:, n - 1],
            cfg.dt,
            times[n],
            cfg.nu,
            cfg.mu,
            integrator="bdf2" if use_bdf2 else "ie",
            a_prev2=coords[:, n - 2] if use_bdf2 else None,
            newton_tol=cfg.newton_tol,
            newton_maxiter=cfg.newton_maxiter,
            step_index=n,
        )
    meta = {
        "nu": cfg.nu,
        "mu": cfg.mu,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "integrator": cfg.integrator,
        "r": ops.r,
    }
    return RomTrajectory(ops.basis, times, coords, meta)


def initial_coordinates(basis, u0):
    """Default ROM start: X-projection coordinates of a full field."""
    return basis.vectors.T @ (basis.inner.operator @ u0)
