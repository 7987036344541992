"""Sparse operator assembly for Taylor-Hood spaces.

All operators of one Taylor-Hood space are integrated with a single
quadrature rule of degree 3l-1 (l = velocity degree).  That is exact for
every bilinear form here and, crucially, for the skew-symmetrized
convective form

    b(u, v, w) = ((u . grad) v, w) + 1/2 ((div u) v, w),

whose integrand is a polynomial of degree 3l-1.  Exactness makes the
discrete identity b(u, v, v) = 0 hold to roundoff, which the time
stepping's energy stability relies on.

Velocity DOFs are component-blocked: x-component coefficients first,
then y.  The divergence operator B maps velocity DOFs to pressure test
functions, B[k, :] v = (psi_k, div v).
"""

import csv

import numpy as np
import scipy.sparse as sp

from podns import _kernels
from podns.quadrature import triangle_rule


class PhysicalTables:
    """Tabulated basis data at quadrature points of every cell.

    Attributes
    ----------
    phi : (nloc, nq) reference basis values
    dphys : (nc, nloc, nq, 2) physical gradients
    wdet : (nc, nq) quadrature weight times |det J|
    xq : (nc, nq, 2) physical quadrature points
    cell_dofs : (nc, nloc) global DOF indices
    """

    def __init__(self, space, quad_degree):
        mesh = space.mesh
        points, weights = triangle_rule(quad_degree)
        phi, dref = space.reference.tabulate(points)
        p0 = mesh.vertices[mesh.triangles[:, 0]]
        jac = np.stack(
            [
                mesh.vertices[mesh.triangles[:, 1]] - p0,
                mesh.vertices[mesh.triangles[:, 2]] - p0,
            ],
            axis=2,
        )
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1] / det
        inv[:, 0, 1] = -jac[:, 0, 1] / det
        inv[:, 1, 0] = -jac[:, 1, 0] / det
        inv[:, 1, 1] = jac[:, 0, 0] / det
        self.phi = phi
        self.dphys = np.ascontiguousarray(np.einsum("iqd,cde->ciqe", dref, inv))
        self.wdet = np.ascontiguousarray(np.outer(det, weights))
        self.xq = p0[:, None, :] + np.einsum("cde,qe->cqd", jac, points)
        self.cell_dofs = space.cell_dofs
        self.num_dofs = space.num_dofs

    def gather(self, coeffs):
        """Per-cell coefficient table (nc, nloc) for one scalar field."""
        return np.ascontiguousarray(coeffs[self.cell_dofs])


def get_tables(space, quad_degree):
    cache = getattr(space, "_tables_cache", None)
    if cache is None:
        cache = {}
        space._tables_cache = cache
    if quad_degree not in cache:
        cache[quad_degree] = PhysicalTables(space, quad_degree)
    return cache[quad_degree]


def _scatter(data, cell_dofs_rows, cell_dofs_cols, shape):
    nloc_r = cell_dofs_rows.shape[1]
    nloc_c = cell_dofs_cols.shape[1]
    rows = np.repeat(cell_dofs_rows, nloc_c, axis=1).ravel()
    cols = np.tile(cell_dofs_cols, (1, nloc_r)).ravel()
    mat = sp.coo_matrix((data.ravel(), (rows, cols)), shape=shape)
    return mat.tocsr()


def _scalar_mass(tab):
    data = np.einsum("cq,iq,jq->cij", tab.wdet, tab.phi, tab.phi)
    n = tab.num_dofs
    return _scatter(data, tab.cell_dofs, tab.cell_dofs, (n, n))


def _scalar_stiffness(tab):
    data = np.einsum("cq,ciqd,cjqd->cij", tab.wdet, tab.dphys, tab.dphys)
    n = tab.num_dofs
    return _scatter(data, tab.cell_dofs, tab.cell_dofs, (n, n))


def _scalar_partial(tab, a, b):
    data = np.einsum(
        "cq,ciq,cjq->cij", tab.wdet, tab.dphys[:, :, :, a], tab.dphys[:, :, :, b]
    )
    n = tab.num_dofs
    return _scatter(data, tab.cell_dofs, tab.cell_dofs, (n, n))


def _mixed_divergence(tab_p, tab_v, b):
    data = np.einsum("cq,kq,cjq->ckj", tab_v.wdet, tab_p.phi, tab_v.dphys[:, :, :, b])
    return _scatter(data, tab_p.cell_dofs, tab_v.cell_dofs, (tab_p.num_dofs, tab_v.num_dofs))


class FemOperators:
    """Assembled constant operators of one Taylor-Hood space.

    Attributes
    ----------
    M, A, G : (nu, nu) CSR
        Velocity mass, stiffness (grad:grad) and grad-div operators.
    B : (np, nu) CSR
        Divergence pairing (psi_k, div v).
    Mp : (np, np) CSR
        Pressure mass.
    pressure_mean : (np,) array
        Row sums of Mp: the functional p -> (p, 1).
    """

    def __init__(self, th_space):
        self.space = th_space
        self.quad_degree = 3 * th_space.degree - 1
        vs = th_space.velocity.scalar
        ps = th_space.pressure
        tab_v = get_tables(vs, self.quad_degree)
        tab_p = get_tables(ps, self.quad_degree)
        self.tables_v = tab_v
        self.tables_p = tab_p

        ms = _scalar_mass(tab_v)
        as_ = _scalar_stiffness(tab_v)
        self.M = sp.block_diag([ms, ms], format="csr")
        self.A = sp.block_diag([as_, as_], format="csr")
        dxx = _scalar_partial(tab_v, 0, 0)
        dxy = _scalar_partial(tab_v, 0, 1)
        dyy = _scalar_partial(tab_v, 1, 1)
        self.G = sp.bmat([[dxx, dxy], [dxy.T, dyy]], format="csr")
        px = _mixed_divergence(tab_p, tab_v, 0)
        py = _mixed_divergence(tab_p, tab_v, 1)
        self.B = sp.bmat([[px, py]], format="csr")
        self.Mp = _scalar_mass(tab_p).tocsr()
        self.pressure_mean = np.asarray(self.Mp.sum(axis=1)).ravel()

    @property
    def num_velocity_dofs(self):
        return self.M.shape[0]

    @property
    def num_pressure_dofs(self):
        return self.Mp.shape[0]

    def h1_full(self):
        """Full H1 inner product matrix M + A on velocities."""
        return (self.M + self.A).tocsr()


def assemble_operators(th_space):
    return FemOperators(th_space)


def _velocity_gathers(ops, u):
    vs = ops.space.velocity.scalar
    ns = vs.num_dofs
    tab = ops.tables_v
    return tab.gather(u[:ns]), tab.gather(u[ns:])


def assemble_convection(ops, u):
    """Convection operator N(u): w^T N(u) v = b(u, v, w).

    Block-diagonal over components since (u . grad) and (div u) act
    componentwise.
    """
    tab = ops.tables_v
    ucx, ucy = _velocity_gathers(ops, u)
    data = _kernels.convection_block(ucx, ucy, tab.phi, tab.dphys, tab.wdet)
    n = tab.num_dofs
    blk = _scatter(np.asarray(data), tab.cell_dofs, tab.cell_dofs, (n, n))
    return sp.block_diag([blk, blk], format="csr")


def assemble_convection_jacobian(ops, u):
    """Derivative of v -> N(v) v at u: N(u) plus the u-gradient blocks."""
    tab = ops.tables_v
    ucx, ucy = _velocity_gathers(ops, u)
    data = np.asarray(
        _kernels.convection_jacobian_extra(ucx, ucy, tab.phi, tab.dphys, tab.wdet)
    )
    n = tab.num_dofs
    blocks = [[None, None], [None, None]]
    for a in range(2):
        for b in range(2):
            blocks[a][b] = _scatter(
                data[:, a, b], tab.cell_dofs, tab.cell_dofs, (n, n)
            )
    extra = sp.bmat(blocks, format="csr")
    return assemble_convection(ops, u) + extra


def trilinear_form(ops, u, v, w):
    """Evaluate b(u, v, w) for velocity coefficient vectors u, v, w."""
    tab = ops.tables_v
    ucx, ucy = _velocity_gathers(ops, u)
    vcx, vcy = _velocity_gathers(ops, v)
    wcx, wcy = _velocity_gathers(ops, w)
    return _kernels.trilinear(
        ucx, ucy, vcx, vcy, wcx, wcy, tab.phi, tab.dphys, tab.wdet
    )


def assemble_load(ops, f, t=None):
    """Velocity load vector F_i = (f, phi_i) for a callable f(x, y[, t])
    returning an (fx, fy) pair over arrays."""
    tab = ops.tables_v
    x = tab.xq[:, :, 0]
    y = tab.xq[:, :, 1]
    fx, fy = f(x, y) if t is None else f(x, y, t)
    fx = np.broadcast_to(np.asarray(fx, dtype=np.float64), x.shape)
    fy = np.broadcast_to(np.asarray(fy, dtype=np.float64), x.shape)
    n = tab.num_dofs
    out = np.zeros(2 * n)
    datx = np.einsum("cq,iq->ci", tab.wdet * fx, tab.phi)
    daty = np.einsum("cq,iq->ci", tab.wdet * fy, tab.phi)
    np.add.at(out[:n], tab.cell_dofs.ravel(), datx.ravel())
    np.add.at(out[n:], tab.cell_dofs.ravel(), daty.ravel())
    return out


def write_sparse_csv(matrix, path):
    """COO triplet export (row, col, value), row-major sorted."""
    coo = sp.csr_matrix(matrix).tocoo()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "value"])
        for r, c, v in zip(coo.row, coo.col, coo.data):
            w.writerow([r, c, "%.17g" % v])


def read_sparse_csv(path, shape=None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    r = np.array([int(x[0]) for x in rows])
    c = np.array([int(x[1]) for x in rows])
    v = np.array([float(x[2]) for x in rows])
    if shape is None:
        shape = (int(r.max()) + 1, int(c.max()) + 1)
    return sp.coo_matrix((v, (r, c)), shape=shape).tocsr()
