"""Triangulations of axis-aligned rectangles.

Meshes are immutable: vertex coordinates, triangle connectivity and
tagged boundary edges are stored as read-only NumPy arrays.  The
generator splits every grid cell along the same diagonal (bottom-left to
top-right), which keeps the family quasi-uniform under refinement:
``h_max/h_min`` equals sqrt(2)*max(dx,dy)/min(dx,dy) independent of the
refinement level.
"""

import csv
import os

import numpy as np

_BOUNDARY_TAG = "dirichlet"


class Mesh:
    """Conforming triangle mesh of a rectangle.

    Parameters
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array
        Counter-clockwise vertex indices.
    boundary_edges : (nb, 2) int array
        Vertex pairs lying on the boundary, oriented along the boundary
        loop.
    boundary_tags : list of str
        One tag per boundary edge.
    """

    def __init__(self, vertices, triangles, boundary_edges, boundary_tags):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64)
        self.boundary_tags = tuple(boundary_tags)
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise ValueError("one tag per boundary edge required")
        areas = self.signed_areas()
        if np.any(areas <= 0.0):
            raise ValueError("all triangles must be counter-clockwise")
        diam = self.diameters()
        self.h_max = float(diam.max())
        self.h_min = float(diam.min())
        for arr in (self.vertices, self.triangles, self.boundary_edges):
            arr.flags.writeable = False

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def signed_areas(self):
        """Signed area of every triangle (positive iff CCW)."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def diameters(self):
        """Longest edge of every triangle."""
        p = self.vertices[self.triangles]
        e01 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        e12 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        e20 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        return np.max(np.stack([e01, e12, e20]), axis=0)

    def edge_triangle_counts(self):
        """Map sorted vertex pair -> number of adjacent triangles."""
        counts = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def boundary_vertices(self):
        """Sorted array of vertex indices lying on tagged boundary edges."""
        return np.unique(self.boundary_edges)


def build_rect_mesh(nx, ny, rect=(0.0, 0.0, 1.0, 1.0)):
    """Mesh a rectangle with a (nx, ny) grid of squares, two triangles each.

    Parameters
    ----------
    nx, ny : int
        Number of grid cells per direction, both >= 1.
    rect : (x0, y0, x1, y1)
        Rectangle corners, x0 < x1 and y0 < y1.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    x0, y0, x1, y1 = map(float, rect)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("rectangle must satisfy x0 < x1 and y0 < y1")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xg, yg = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xg.ravel(), yg.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    k = 0
    for j in range(ny):
        for i in range(nx):
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v01 = vid(i, j + 1)
            v11 = vid(i + 1, j + 1)
            # fixed diagonal v00-v11, both children CCW
            triangles[k] = (v00, v10, v11)
            triangles[k + 1] = (v00, v11, v01)
            k += 2

    edges = []
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
    for j in range(ny):
        edges.append((vid(nx, j), vid(nx, j + 1)))
    for i in range(nx, 0, -1):
        edges.append((vid(i, ny), vid(i - 1, ny)))
    for j in range(ny, 0, -1):
        edges.append((vid(0, j), vid(0, j - 1)))
    boundary_edges = np.array(edges, dtype=np.int64)
    tags = [_BOUNDARY_TAG] * len(edges)
    return Mesh(vertices, triangles, boundary_edges, tags)


def refine_uniform(mesh):
    """Split every triangle into four congruent children.

    Midpoint vertices are shared across triangles; boundary edges are
    split in two and keep their tag.
    """
    vertices = [mesh.vertices]
    nv = mesh.num_vertices
    midpoint = {}

    def mid(a, b):
        nonlocal nv
        key = (min(a, b), max(a, b))
        idx = midpoint.get(key)
        if idx is None:
            idx = nv
            midpoint[key] = idx
            nv += 1
        return idx

    triangles = np.empty((4 * mesh.num_triangles, 3), dtype=np.int64)
    k = 0
    for a, b, c in mesh.triangles:
        mab = mid(a, b)
        mbc = mid(b, c)
        mca = mid(c, a)
        triangles[k] = (a, mab, mca)
        triangles[k + 1] = (mab, b, mbc)
        triangles[k + 2] = (mca, mbc, c)
        triangles[k + 3] = (mab, mbc, mca)
        k += 4

    extra = np.empty((len(midpoint), 2))
    for (a, b), idx in midpoint.items():
        extra[idx - mesh.num_vertices] = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
    vertices.append(extra)

    bedges = []
    tags = []
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        m = midpoint[(min(a, b), max(a, b))]
        bedges.append((a, m))
        bedges.append((m, b))
        tags.extend((tag, tag))
    return Mesh(np.vstack(vertices), triangles, np.array(bedges, dtype=np.int64), tags)


def write_mesh(mesh, directory):
    """Write vertices.csv, triangles.csv and boundary.csv to `directory`."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "vertices.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x", "y"])
        for i, (x, y) in enumerate(mesh.vertices):
            w.writerow([i, "%.17g" % x, "%.17g" % y])
    with open(os.path.join(directory, "triangles.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "v0", "v1", "v2"])
        for i, (a, b, c) in enumerate(mesh.triangles):
            w.writerow([i, a, b, c])
    with open(os.path.join(directory, "boundary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v0", "v1", "tag"])
        for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            w.writerow([a, b, tag])


def read_mesh(directory):
    """Inverse of :func:`write_mesh`."""
    with open(os.path.join(directory, "vertices.csv"), newline="") as fh:
        rows = list(csv.reader(fh))[1:]
        vertices = np.array([[float(r[1]), float(r[2])] for r in rows])
    with open(os.path.join(directory, "triangles.csv"), newline="") as fh:
        rows = list(csv.reader(fh))[1:]
        triangles = np.array([[int(r[1]), int(r[2]), int(r[3])] for r in rows])
    with open(os.path.join(directory, "boundary.csv"), newline="") as fh:
        rows = list(csv.reader(fh))[1:]
        bedges = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64)
        tags = [r[2] for r in rows]
    return Mesh(vertices, triangles, bedges, tags)
