"""Manufactured Navier-Stokes solutions on the unit square.

Each problem carries exact velocity/pressure callables plus the forcing
that makes them solve the momentum equation

    u_t - nu * Lap(u) + (u . grad) u + grad p = f,   div u = 0.

Velocities are built from stream functions, so they are pointwise
divergence-free; the forcing is derived symbolically and lambdified.
Note the grad-div term drops out of the forcing: div u = 0 exactly.

Two families are provided:

``taylor_green``
    The classical single-vortex field.  Its tangential velocity does not
    vanish on the boundary of the unit square (only the normal component
    does), so it exercises the solver's pinned-boundary mode.
``decaying_vortex``
    A sum of sin^2 x sin^2 y stream modes with geometrically decreasing
    amplitudes and distinct decay rates.  Velocity and all its time
    derivatives vanish on the boundary; the snapshot spectrum of a
    trajectory has one well-separated eigenvalue per mode.
``oscillating_vortex``
    The same spatial modes driven by distinct-frequency cosines instead
    of decays.  Over one period every mode has zero temporal mean, so a
    trajectory resembles a periodic orbit: the fluctuation field carries
    essentially all the energy.
"""

import numpy as np
import sympy


class ManufacturedProblem:
    """Bundle of exact-solution callables.

    All callables take NumPy arrays (x, y, t); vector-valued ones return
    an (fx, fy) pair.  `homogeneous` records whether the velocity trace
    vanishes on the boundary of the unit square.
    """

    def __init__(self, name, nu, u_expr, p_expr, homogeneous):
        self.name = name
        self.nu = float(nu)
        x, y, t = sympy.symbols("x y t")
        ux, uy = u_expr
        div = sympy.simplify(sympy.diff(ux, x) + sympy.diff(uy, y))
        if div != 0:
            raise ValueError("manufactured velocity must be divergence-free")
        conv_x = ux * sympy.diff(ux, x) + uy * sympy.diff(ux, y)
        conv_y = ux * sympy.diff(uy, x) + uy * sympy.diff(uy, y)
        fx = (
            sympy.diff(ux, t)
            - nu * (sympy.diff(ux, x, 2) + sympy.diff(ux, y, 2))
            + conv_x
            + sympy.diff(p_expr, x)
        )
        fy = (
            sympy.diff(uy, t)
            - nu * (sympy.diff(uy, x, 2) + sympy.diff(uy, y, 2))
            + conv_y
            + sympy.diff(p_expr, y)
        )
        args = (x, y, t)
        self._u = sympy.lambdify(args, (ux, uy), modules="numpy")
        self._u_t = sympy.lambdify(
            args, (sympy.diff(ux, t), sympy.diff(uy, t)), modules="numpy"
        )
        self._grad_u = sympy.lambdify(
            args,
            (sympy.diff(ux, x), sympy.diff(ux, y), sympy.diff(uy, x), sympy.diff(uy, y)),
            modules="numpy",
        )
        self._p = sympy.lambdify(args, p_expr, modules="numpy")
        # no simplify: for many-mode fields it is very slow and the
        # lambdified form is evaluated vectorized anyway
        self._f = sympy.lambdify(args, (fx, fy), modules="numpy")
        self.homogeneous = bool(homogeneous)

    def _pair(self, fn, x, y, t):
        fx, fy = fn(x, y, t)
        shape = np.broadcast(x, y).shape
        return (
            np.broadcast_to(np.asarray(fx, dtype=np.float64), shape),
            np.broadcast_to(np.asarray(fy, dtype=np.float64), shape),
        )

    def velocity(self, x, y, t):
        return self._pair(self._u, x, y, t)

    def velocity_t(self, x, y, t):
        return self._pair(self._u_t, x, y, t)

    def velocity_gradient(self, x, y, t):
        out = self._grad_u(x, y, t)
        shape = np.broadcast(x, y).shape
        return tuple(
            np.broadcast_to(np.asarray(g, dtype=np.float64), shape) for g in out
        )

    def pressure(self, x, y, t):
        p = self._p(x, y, t)
        return np.broadcast_to(np.asarray(p, dtype=np.float64), np.broadcast(x, y).shape)

    def forcing(self, x, y, t):
        return self._pair(self._f, x, y, t)


def taylor_green(nu, decay=1.0):
    x, y, t = sympy.symbols("x y t")
    g = sympy.exp(-decay * t)
    ux = g * sympy.sin(sympy.pi * x) * sympy.cos(sympy.pi * y)
    uy = -g * sympy.cos(sympy.pi * x) * sympy.sin(sympy.pi * y)
    p = g**2 / 4 * (sympy.cos(2 * sympy.pi * x) + sympy.cos(2 * sympy.pi * y))
    return ManufacturedProblem("taylor_green", nu, (ux, uy), p, homogeneous=False)


_VORTEX_MODES = [
    (1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3), (3, 2), (2, 3), (3, 3),
]


def decaying_vortex(nu, n_modes=9, amplitude=0.05, ratio=1.0 / 3.0):
    """No-slip multi-vortex field with a geometric amplitude ladder."""
    if not 1 <= n_modes <= len(_VORTEX_MODES):
        raise ValueError(f"n_modes must be in 1..{len(_VORTEX_MODES)}")
    x, y, t = sympy.symbols("x y t")
    psi = sympy.Integer(0)
    for k, (mx, my) in enumerate(_VORTEX_MODES[:n_modes]):
        amp = amplitude * sympy.Rational(1) * ratio**k
        decay = sympy.Rational(3, 10) + sympy.Rational(3, 20) * k
        psi += (
            amp
            * sympy.exp(-decay * t)
            * sympy.sin(mx * sympy.pi * x) ** 2
            * sympy.sin(my * sympy.pi * y) ** 2
        )
    ux = sympy.diff(psi, y)
    uy = -sympy.diff(psi, x)
    p = sympy.Rational(1, 5) * sympy.exp(-t) * sympy.cos(sympy.pi * x) * sympy.cos(sympy.pi * y)
    return ManufacturedProblem("decaying_vortex", nu, (ux, uy), p, homogeneous=True)


def oscillating_vortex(nu, n_modes=9, amplitude=0.05, ratio=1.0 / 3.0, period=0.5):
    """No-slip multi-vortex field whose modes oscillate at distinct
    frequencies (k+1)/period.  Phases are staggered so the initial
    condition excites every mode."""
    if not 1 <= n_modes <= len(_VORTEX_MODES):
        raise ValueError(f"n_modes must be in 1..{len(_VORTEX_MODES)}")
    x, y, t = sympy.symbols("x y t")
    omega0 = 2 * sympy.pi / sympy.nsimplify(period, rational=True)
    psi = sympy.Integer(0)
    for k, (mx, my) in enumerate(_VORTEX_MODES[:n_modes]):
        amp = amplitude * sympy.Rational(1) * ratio**k
        phase = sympy.Rational(7, 10) * k
        psi += (
            amp
            * sympy.cos((k + 1) * omega0 * t + phase)
            * sympy.sin(mx * sympy.pi * x) ** 2
            * sympy.sin(my * sympy.pi * y) ** 2
        )
    ux = sympy.diff(psi, y)
    uy = -sympy.diff(psi, x)
    p = sympy.Rational(1, 5) * sympy.cos(omega0 * t) * sympy.cos(sympy.pi * x) * sympy.cos(sympy.pi * y)
    return ManufacturedProblem("oscillating_vortex", nu, (ux, uy), p, homogeneous=True)


def get_problem(name, nu, **kwargs):
    """Problem registry used by the CLI."""
    factories = {
        "taylor_green": taylor_green,
        "decaying_vortex": decaying_vortex,
        "oscillating_vortex": oscillating_vortex,
    }
    if name not in factories:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(factories)}")
    return factories[name](nu, **kwargs)
