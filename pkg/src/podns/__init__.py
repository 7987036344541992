"""Finite-element solver and POD reduced-order models for the 2D
incompressible Navier-Stokes equations with grad-div stabilization.

Subpackage layout:

``mesh``, ``quadrature``, ``fe_space``
    Triangulations of rectangles, triangle quadrature rules and
    Taylor-Hood finite element spaces.
``assembly``
    Sparse operator assembly (mass, stiffness, grad-div, divergence,
    convection) on top of per-cell kernels from ``_kernels``.
``fom_solver``
    Implicit Euler / BDF2 time stepping of the stabilized Navier-Stokes
    system, plus recovery of Galerkin time derivatives.
``snapshot_sets``, ``pod``
    Snapshot collections and proper orthogonal decomposition via the
    method of snapshots.
``rom_solver``
    Galerkin reduced-order model built from a POD basis.
``diagnostics``
    Error norms, a-priori bound checks, convergence rates and report
    files.
``cli``
    Command line entry point (``podns``).
"""

from podns._kernels import backend_name

__all__ = ["backend_name"]
__version__ = "0.1.0"
