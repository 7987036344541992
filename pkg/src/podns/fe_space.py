"""Continuous Lagrange finite element spaces on triangle meshes.

Scalar P_l spaces (l = 1..3) carry a deterministic global DOF
numbering: vertex DOFs first (vertex index order), then edge-interior
DOFs (edges sorted lexicographically by their vertex pair, nodes ordered
from the lower-numbered vertex), then cell-interior DOFs in cell order.
Vector spaces stack two scalar components block-wise: DOF (c, i) of
component c maps to c*n_scalar + i.

The reference element uses the unit triangle with vertices (0,0), (1,0),
(0,1); nodal bases are built by inverting the monomial Vandermonde
matrix on the lattice {(i/l, j/l) : i + j <= l}.
"""

import csv
import os
import struct

import numpy as np

_BINARY_MAGIC = b"PODNSFE1"


def _monomial_exponents(degree):
    return [(a, b) for s in range(degree + 1) for a in range(s, -1, -1) for b in (s - a,)]


class ReferenceElement:
    """Nodal Lagrange basis of degree l on the reference triangle."""

    def __init__(self, degree):
        if not 1 <= degree <= 3:
            raise ValueError("reference element supports degrees 1..3")
        self.degree = degree
        l = degree
        verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
        nodes = list(verts)
        self.edges = ((0, 1), (1, 2), (2, 0))
        for p, q in self.edges:
            for s in range(1, l):
                f = s / l
                nodes.append(
                    (
                        verts[p][0] + f * (verts[q][0] - verts[p][0]),
                        verts[p][1] + f * (verts[q][1] - verts[p][1]),
                    )
                )
        if l == 3:
            nodes.append((1.0 / 3.0, 1.0 / 3.0))
        self.nodes = np.array(nodes)
        self.num_nodes = len(nodes)
        self.exponents = _monomial_exponents(degree)
        vmat = np.array(
            [[x**a * y**b for (a, b) in self.exponents] for (x, y) in nodes]
        )
        self._coeffs = np.linalg.inv(vmat)

    def tabulate(self, points):
        """Basis values and reference gradients at `points` (nq, 2).

        Returns
        -------
        values : (num_nodes, nq)
        grads : (num_nodes, nq, 2)
        """
        pts = np.asarray(points, dtype=np.float64)
        x, y = pts[:, 0], pts[:, 1]
        nm = len(self.exponents)
        mono = np.empty((len(pts), nm))
        dmono = np.zeros((len(pts), nm, 2))
        for m, (a, b) in enumerate(self.exponents):
            mono[:, m] = x**a * y**b
            if a > 0:
                dmono[:, m, 0] = a * x ** (a - 1) * y**b
            if b > 0:
                dmono[:, m, 1] = b * x**a * y ** (b - 1)
        values = (mono @ self._coeffs).T
        grads = np.einsum("qmd,mi->iqd", dmono, self._coeffs)
        return np.ascontiguousarray(values), np.ascontiguousarray(grads)


class ScalarSpace:
    """Continuous piecewise-P_l scalar space on a mesh."""

    def __init__(self, mesh, degree):
        self.mesh = mesh
        self.degree = int(degree)
        self.reference = ReferenceElement(self.degree)
        l = self.degree
        nv = mesh.num_vertices
        nt = mesh.num_triangles

        pairs = np.sort(
            np.concatenate(
                [mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]
            ),
            axis=1,
        )
        edges = np.unique(pairs, axis=0)
        self._edge_index = {(int(a), int(b)): k for k, (a, b) in enumerate(edges)}
        ne = len(edges)
        n_edge = l - 1
        n_int = (l - 1) * (l - 2) // 2
        self.num_dofs = nv + ne * n_edge + nt * n_int

        nloc = self.reference.num_nodes
        cd = np.empty((nt, nloc), dtype=np.int64)
        cd[:, :3] = mesh.triangles
        if n_edge:
            for ie, (p, q) in enumerate(self.reference.edges):
                u = mesh.triangles[:, p]
                v = mesh.triangles[:, q]
                lo = np.minimum(u, v)
                hi = np.maximum(u, v)
                eidx = np.array(
                    [self._edge_index[(int(a), int(b))] for a, b in zip(lo, hi)],
                    dtype=np.int64,
                )
                base = nv + eidx * n_edge
                forward = u < v
                for s in range(n_edge):
                    # slot measured from the lower-numbered vertex
                    slot = np.where(forward, s, n_edge - 1 - s)
                    cd[:, 3 + ie * n_edge + s] = base + slot
        if n_int:
            start = nv + ne * n_edge
            for s in range(n_int):
                cd[:, 3 + 3 * n_edge + s] = start + np.arange(nt) * n_int + s
        self.cell_dofs = cd

        coords = np.empty((self.num_dofs, 2))
        p0 = mesh.vertices[mesh.triangles[:, 0]]
        jac = np.stack(
            [
                mesh.vertices[mesh.triangles[:, 1]] - p0,
                mesh.vertices[mesh.triangles[:, 2]] - p0,
            ],
            axis=2,
        )
        ref = self.reference.nodes
        phys = p0[:, None, :] + np.einsum("cde,ne->cnd", jac, ref)
        coords[cd.ravel()] = phys.reshape(-1, 2)
        self.dof_coords = coords

        bset = set()
        for a, b in mesh.boundary_edges:
            bset.add(int(a))
            bset.add(int(b))
            if n_edge:
                k = self._edge_index[(min(int(a), int(b)), max(int(a), int(b)))]
                for s in range(n_edge):
                    bset.add(nv + k * n_edge + s)
        self.boundary_dofs = np.array(sorted(bset), dtype=np.int64)
        mask = np.ones(self.num_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        self.interior_dofs = np.nonzero(mask)[0]

    @property
    def num_components(self):
        return 1

    def interpolate_values(self, f, t=None):
        x, y = self.dof_coords[:, 0], self.dof_coords[:, 1]
        vals = f(x, y) if t is None else f(x, y, t)
        return np.broadcast_to(np.asarray(vals, dtype=np.float64), (self.num_dofs,)).copy()


class VectorSpace:
    """Two-component product of a scalar space, component-blocked."""

    def __init__(self, scalar):
        self.scalar = scalar
        self.mesh = scalar.mesh
        self.degree = scalar.degree
        self.num_dofs = 2 * scalar.num_dofs
        ns = scalar.num_dofs
        self.boundary_dofs = np.concatenate(
            [scalar.boundary_dofs, scalar.boundary_dofs + ns]
        )
        self.interior_dofs = np.concatenate(
            [scalar.interior_dofs, scalar.interior_dofs + ns]
        )

    @property
    def num_components(self):
        return 2

    def split(self, values):
        ns = self.scalar.num_dofs
        return values[:ns], values[ns:]

    def combine(self, vx, vy):
        return np.concatenate([vx, vy])

    def interpolate_values(self, f, t=None):
        c = self.scalar.dof_coords
        x, y = c[:, 0], c[:, 1]
        vals = f(x, y) if t is None else f(x, y, t)
        vx, vy = vals
        ns = self.scalar.num_dofs
        out = np.empty(2 * ns)
        out[:ns] = np.broadcast_to(np.asarray(vx, dtype=np.float64), (ns,))
        out[ns:] = np.broadcast_to(np.asarray(vy, dtype=np.float64), (ns,))
        return out


class TaylorHoodSpace:
    """P_l velocity / P_{l-1} pressure pair on a shared mesh."""

    def __init__(self, mesh, degree):
        if degree not in (2, 3):
            raise ValueError("Taylor-Hood velocity degree must be 2 or 3")
        self.mesh = mesh
        self.degree = degree
        self.velocity = VectorSpace(ScalarSpace(mesh, degree))
        self.pressure = ScalarSpace(mesh, degree - 1)

    @property
    def num_velocity_dofs(self):
        return self.velocity.num_dofs

    @property
    def num_pressure_dofs(self):
        return self.pressure.num_dofs


def build_taylor_hood(mesh, degree):
    return TaylorHoodSpace(mesh, degree)


class FeFunction:
    """Coefficient vector bound to a finite element space."""

    def __init__(self, space, values=None):
        self.space = space
        if values is None:
            values = np.zeros(space.num_dofs)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (space.num_dofs,):
            raise ValueError(
                f"expected {space.num_dofs} coefficients, got {values.shape}"
            )
        self.values = values

    def copy(self):
        return FeFunction(self.space, self.values.copy())

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dof", "value"])
            for i, v in enumerate(self.values):
                w.writerow([i, "%.17g" % v])

    def save_binary(self, path):
        write_coefficients(path, self.values)

    @classmethod
    def load_csv(cls, space, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        values = np.empty(len(rows))
        for r in rows:
            values[int(r[0])] = float(r[1])
        return cls(space, values)

    @classmethod
    def load_binary(cls, space, path):
        return cls(space, read_coefficients(path))


def interpolate(space, f, t=None):
    """Nodal interpolation of a callable onto a space.

    `f(x, y[, t])` must accept NumPy arrays and return a scalar array
    (scalar spaces) or an (fx, fy) pair (vector spaces).
    """
    return FeFunction(space, space.interpolate_values(f, t))


def write_coefficients(path, values):
    """Binary format: 8-byte magic, uint64 little-endian count, float64
    little-endian payload."""
    values = np.asarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<Q", values.size))
        fh.write(values.tobytes())


def read_coefficients(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _BINARY_MAGIC:
            raise ValueError(f"{os.path.basename(path)}: bad magic {magic!r}")
        (count,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(8 * count), dtype="<f8")
        if data.size != count:
            raise ValueError(f"{os.path.basename(path)}: truncated payload")
    return data.astype(np.float64)
