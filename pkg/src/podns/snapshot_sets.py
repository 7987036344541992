"""Snapshot data sets derived from a full-order trajectory.

Five competing constructions are supported, all over the stored time
levels t_0..t_M of one trajectory (w^j denotes the recovered Galerkin
time derivative at t_j, u-bar the temporal mean):

initial_plus_derivatives   {sqrt(N) u^0, tau w^1, ..., tau w^M}, N = M+1
mean_plus_derivatives      {sqrt(N) u-bar, tau w^1, ..., tau w^M}, N = M+1
fluctuations               {u^j - u-bar, j = 0..M}, N = M+1
difference_quotients       {tau (u^j - u^{j-1}) / dt, j = 1..M}, N = M
raw_velocities             {u^j, j = 0..M}, N = M+1

The time scale tau makes derivative members dimensionally commensurate
with velocities; it defaults to the trajectory length T.  Difference
quotients are formed in extended precision: the subtraction of nearly
equal vectors divided by dt amplifies roundoff otherwise.
"""

import json
import os

import numpy as np

from podns.fe_space import read_coefficients, write_coefficients

VARIANTS = (
    "initial_plus_derivatives",
    "mean_plus_derivatives",
    "fluctuations",
    "difference_quotients",
    "raw_velocities",
)

_SET_FORMAT = "podns-snapshots-v1"


class SnapshotSet:
    """Matrix of snapshot members (one column each) plus provenance."""

    def __init__(self, members, variant, tau, dt, t_end, meta=None):
        self.members = np.asarray(members, dtype=np.float64)
        self.variant = variant
        self.tau = float(tau)
        self.dt = float(dt)
        self.t_end = float(t_end)
        self.meta = dict(meta or {})

    @property
    def count(self):
        return self.members.shape[1]

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        meta = dict(self.meta)
        meta.update(
            {
                "format": _SET_FORMAT,
                "variant": self.variant,
                "tau": self.tau,
                "dt": self.dt,
                "t_end": self.t_end,
                "count": int(self.count),
                "num_dofs": int(self.members.shape[0]),
            }
        )
        with open(os.path.join(directory, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2)
        for j in range(self.count):
            write_coefficients(
                os.path.join(directory, f"member_{j:05d}.bin"), self.members[:, j]
            )

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "meta.json")) as fh:
            meta = json.load(fh)
        if meta.get("format") != _SET_FORMAT:
            raise ValueError(f"not a snapshot-set directory: {directory}")
        members = np.empty((meta["num_dofs"], meta["count"]))
        for j in range(meta["count"]):
            members[:, j] = read_coefficients(
                os.path.join(directory, f"member_{j:05d}.bin")
            )
        return cls(
            members, meta["variant"], meta["tau"], meta["dt"], meta["t_end"], meta
        )


def build_snapshot_set(traj, variant, tau=None):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    M = traj.num_steps
    t_end = float(traj.times[-1] - traj.times[0])
    dt = t_end / M if M else 0.0
    if tau is None:
        tau = t_end
    U = traj.velocities

    needs_rate = variant in (
        "initial_plus_derivatives",
        "mean_plus_derivatives",
        "difference_quotients",
    )
    if needs_rate and M == 0:
        raise ValueError(f"variant {variant} needs at least one step (M >= 1)")

    if variant in ("initial_plus_derivatives", "mean_plus_derivatives"):
        if traj.derivatives is None:
            raise ValueError(
                f"variant {variant} needs stored Galerkin time derivatives"
            )
        N = M + 1
        members = np.empty((U.shape[0], N))
        if variant == "initial_plus_derivatives":
            members[:, 0] = np.sqrt(N) * U[:, 0]
        else:
            members[:, 0] = np.sqrt(N) * U.mean(axis=1)
        members[:, 1:] = tau * traj.derivatives[:, 1:]
    elif variant == "fluctuations":
        mean = U.mean(axis=1)
        members = U - mean[:, None]
        # one compensation pass pins the member mean to exact zero
        members -= members.mean(axis=1)[:, None]
    elif variant == "difference_quotients":
        wide = U.astype(np.longdouble)
        scale = np.longdouble(tau) / np.longdouble(dt)
        members = ((wide[:, 1:] - wide[:, :-1]) * scale).astype(np.float64)
    else:
        members = U.copy()

    meta = {"source": dict(traj.meta), "num_steps": M}
    return SnapshotSet(members, variant, tau, dt, t_end, meta)


def fluctuation_trajectory(traj):
    """Trajectory with the temporal mean removed from every velocity
    level.  Galerkin derivatives are unchanged (the mean is constant in
    time), so mean_plus_derivatives applied to the result has a zero
    anchor and derivative members only."""
    from podns.fom_solver import Trajectory

    U = traj.velocities
    fluct = U - U.mean(axis=1)[:, None]
    fluct -= fluct.mean(axis=1)[:, None]
    meta = dict(traj.meta)
    meta["fluctuation_of"] = meta.pop("kind", "trajectory")
    return Trajectory(
        traj.space, traj.times, fluct, traj.pressures, traj.derivatives, meta
    )
