"""Per-cell assembly kernels with a compiled core and a NumPy fallback.

The Cython extension `_assembly_cy` is preferred; if it is missing (or
PODNS_PURE_PYTHON=1 is set) the vectorized NumPy implementation in
`numpy_backend` is used.  Both expose the same three functions:

convection_block(ucx, ucy, phi, dphys, wdet) -> (nc, nloc, nloc)
    Scalar convection block N(u): entry (c, i, j) is the cell-c integral
    phi_i * (u . grad phi_j) + 0.5 * (div u) * phi_i * phi_j.
convection_jacobian_extra(ucx, ucy, phi, dphys, wdet) -> (nc, 2, 2, nloc, nloc)
    Velocity-derivative blocks of the convection term on top of the
    block-diagonal N(u) part: entry (c, a, b, i, j) is the cell-c
    integral phi_i * phi_j * d_b(u_a) + 0.5 * phi_i * u_a * d_b(phi_j).
trilinear(ucx, ucy, vcx, vcy, wcx, wcy, phi, dphys, wdet) -> float
    Skew-symmetrized convective form b(u, v, w).

Arguments: uc*/vc*/wc* are (nc, nloc) per-cell coefficient gathers per
component; phi is (nloc, nq) reference basis values; dphys is
(nc, nloc, nq, 2) physical gradients; wdet is (nc, nq) quadrature
weights times Jacobian determinants.
"""

import os

if os.environ.get("PODNS_PURE_PYTHON", "0") == "1":
    from podns._kernels import numpy_backend as _impl

    backend_name = "numpy"
else:
    try:
        from podns._kernels import _assembly_cy as _impl

        backend_name = "cython"
    except ImportError:
        from podns._kernels import numpy_backend as _impl

        backend_name = "numpy"

convection_block = _impl.convection_block
convection_jacobian_extra = _impl.convection_jacobian_extra
trilinear = _impl.trilinear


def _assembly_cy_available():
    try:
        import podns._kernels._assembly_cy  # noqa: F401
    except ImportError:
        return False
    return True


def load_backend(name):
    """Import a backend module by name ('numpy' or 'cython'),
    independent of the selection made at package import."""
    if name == "numpy":
        from podns._kernels import numpy_backend

        return numpy_backend
    if name == "cython":
        from podns._kernels import _assembly_cy

        return _assembly_cy
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "backend_name",
    "convection_block",
    "convection_jacobian_extra",
    "trilinear",
    "load_backend",
]
