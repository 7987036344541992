"""Proper orthogonal decomposition by the method of snapshots.

Given snapshot members y_1..y_N and an inner product X (L2 mass matrix,
or the H1_0 gradient seminorm), the correlation matrix

    K[i, j] = (1/N) (y_i, y_j)_X

is diagonalized with a cyclic Jacobi iteration (deterministic, no
external eigensolver).  Eigenpairs (lambda_k, v_k) with lambda_k above
rank_tolerance * lambda_1 define the numerical rank d_v, and the POD
basis is

    phi_k = (1 / (sqrt(N) sqrt(lambda_k))) * sum_j v_k[j] y_j,

X-orthonormal by construction.  The retained rank r is either given or
chosen by thresholding relative singular values
sigma_k / sqrt(sum sigma_j^2), sigma_k = sqrt(lambda_k).

The basis sign is fixed deterministically: the entry of largest
magnitude (lowest index on ties) of each basis vector is made positive.
"""

import csv
import json
import os

import numpy as np

from podns.fe_space import read_coefficients, write_coefficients

_BASIS_FORMAT = "podns-basis-v1"
DEFAULT_RANK_TOL = 1e-12
DEFAULT_THRESHOLDS = {"L2": 1e-3, "H1": 1e-2}


class InnerProduct:
    """Velocity-space inner product: tag 'L2' (mass matrix) or 'H1'
    (gradient seminorm; the full Sobolev matrix may be passed instead
    when a full-H1 product is wanted)."""

    def __init__(self, tag, operator):
        if tag not in ("L2", "H1"):
            raise ValueError("inner product tag must be 'L2' or 'H1'")
        self.tag = tag
        self.operator = operator.tocsr()

    @classmethod
    def from_operators(cls, ops, tag, full_h1=False):
        if tag == "L2":
            return cls(tag, ops.M)
        return cls(tag, ops.h1_full() if full_h1 else ops.A)

    def dot(self, u, v):
        return float(u @ (self.operator @ v))

    def gram(self, Y, Z=None):
        if Z is None:
            Z = Y
        return Y.T @ (self.operator @ Z)

    def norm(self, u):
        return float(np.sqrt(max(self.dot(u, u), 0.0)))


def correlation_matrix(snap, inner):
    """K[i, j] = (1/N) (y_i, y_j)_X, symmetrized against roundoff."""
    Y = snap.members
    K = inner.gram(Y) / snap.count
    return 0.5 * (K + K.T)


def jacobi_eigh(K, tol=1e-13, max_sweeps=60):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Returns eigenvalues (descending) and the matching eigenvector
    columns.  Sweeps stop when the off-diagonal Frobenius norm falls
    below tol times the matrix Frobenius norm.
    """
    A = np.array(K, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    fro = np.linalg.norm(A)
    if fro == 0.0:
        return np.zeros(n), V

    def off_norm(A):
        return np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))

    for _ in range(max_sweeps):
        if off_norm(A) <= tol * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                with np.errstate(over="ignore"):
                    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if not np.isfinite(theta):
                    # coupling below ~1e-308 of the diagonal gap: zeroing
                    # it perturbs eigenvalues by less than that
                    A[p, q] = A[q, p] = 0.0
                    continue
                if abs(theta) > 1e154:
                    # asymptote of the stable-root formula below
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) if theta != 0 else 1.0
                    # hypot avoids overflow when theta**2 leaves the range
                    t = t / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    eigvals = np.diag(A).copy()
    order = np.argsort(-eigvals, kind="stable")
    return eigvals[order], V[:, order]


class PodBasis:
    """X-orthonormal POD basis with its eigenvalue history."""

    def __init__(self, vectors, eigenvalues, d_v, inner, tau, variant, meta=None):
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        self.d_v = int(d_v)
        self.inner = inner
        self.tau = float(tau)
        self.variant = variant
        self.meta = dict(meta or {})

    @property
    def r(self):
        return self.vectors.shape[1]

    @property
    def x_tag(self):
        return self.inner.tag

    def tail_sum(self, r=None):
        """sum_{k > r} lambda_k over the retained spectrum."""
        if r is None:
            r = self.r
        return float(np.sum(self.eigenvalues[r : self.d_v]))

    def singular_values(self):
        """(sigma_k, sigma_k / sqrt(sum sigma_j^2)) over k = 1..d_v."""
        lam = self.eigenvalues[: self.d_v]
        sigma = np.sqrt(np.maximum(lam, 0.0))
        total = np.sqrt(np.sum(lam))
        return sigma, sigma / total if total > 0 else sigma

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        meta = dict(self.meta)
        meta.update(
            {
                "format": _BASIS_FORMAT,
                "x_tag": self.x_tag,
                "tau": self.tau,
                "variant": self.variant,
                "r": int(self.r),
                "d_v": self.d_v,
                "num_dofs": int(self.vectors.shape[0]),
            }
        )
        with open(os.path.join(directory, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2)
        sigma, sigma_rel = self.singular_values()
        with open(os.path.join(directory, "eigenvalues.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "lambda", "sigma", "sigma_rel"])
            for k in range(self.d_v):
                w.writerow(
                    [
                        k + 1,
                        "%.17g" % self.eigenvalues[k],
                        "%.17g" % sigma[k],
                        "%.17g" % sigma_rel[k],
                    ]
                )
        for k in range(self.r):
            write_coefficients(
                os.path.join(directory, f"basis_{k:05d}.bin"), self.vectors[:, k]
            )

    @classmethod
    def load(cls, directory, inner):
        with open(os.path.join(directory, "meta.json")) as fh:
            meta = json.load(fh)
        if meta.get("format") != _BASIS_FORMAT:
            raise ValueError(f"not a basis directory: {directory}")
        if inner.tag != meta["x_tag"]:
            raise ValueError(
                f"basis was built with X={meta['x_tag']}, got {inner.tag}"
            )
        with open(os.path.join(directory, "eigenvalues.csv"), newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        eigenvalues = np.array([float(r[1]) for r in rows])
        vectors = np.empty((meta["num_dofs"], meta["r"]))
        for k in range(meta["r"]):
            vectors[:, k] = read_coefficients(
                os.path.join(directory, f"basis_{k:05d}.bin")
            )
        return cls(
            vectors, eigenvalues, meta["d_v"], inner, meta["tau"], meta["variant"], meta
        )


def compute_pod_basis(
    snap,
    inner,
    r=None,
    threshold=None,
    rank_tolerance=DEFAULT_RANK_TOL,
):
    """Build a PodBasis from a snapshot set.

    Exactly one of `r` (explicit rank, must be <= d_v) and `threshold`
    (cut on relative singular values; defaults per inner product when
    both are None) governs truncation.
    """
    if r is not None and threshold is not None:
        raise ValueError("give either r or threshold, not both")
    K = correlation_matrix(snap, inner)
    lam, V = jacobi_eigh(K)
    if lam.size == 0 or lam[0] <= 0.0:
        raise ValueError("snapshot set is numerically zero; no POD basis exists")
    d_v = int(np.sum(lam > rank_tolerance * lam[0]))
    if r is not None:
        if not 1 <= r <= d_v:
            raise ValueError(f"requested rank r={r} outside 1..d_v={d_v}")
    else:
        if threshold is None:
            threshold = DEFAULT_THRESHOLDS[inner.tag]
        rel = np.sqrt(np.maximum(lam[:d_v], 0.0) / np.sum(lam[:d_v]))
        r = max(1, int(np.sum(rel >= threshold)))
        r = min(r, d_v)

    scale = 1.0 / (np.sqrt(snap.count) * np.sqrt(lam[:r]))
    vectors = (snap.members @ V[:, :r]) * scale[None, :]
    # Two-pass modified Gram-Schmidt polish in the X inner product.
    # The eigenvector formula above loses orthogonality like
    # eps * lambda_1 / lambda_k for trailing modes; MGS restores it to
    # roundoff while keeping every prefix span span{phi_1..phi_k}
    # unchanged, so rank-k projections are unaffected.  XV tracks
    # operator @ vectors so each sweep costs dense O(r^2 n) only.
    XV = inner.operator @ vectors
    for _ in range(2):
        for k in range(r):
            for l in range(k):
                c = XV[:, l] @ vectors[:, k]
                vectors[:, k] -= c * vectors[:, l]
                XV[:, k] -= c * XV[:, l]
            nrm = np.sqrt(max(XV[:, k] @ vectors[:, k], 0.0))
            if nrm == 0.0:
                raise ValueError(
                    f"basis vector {k + 1} degenerated; snapshot rank below r"
                )
            vectors[:, k] /= nrm
            XV[:, k] /= nrm
    # deterministic sign: largest-magnitude entry positive
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(r)])
    signs[signs == 0.0] = 1.0
    vectors *= signs[None, :]

    meta = {"snapshot_count": snap.count, "rank_tolerance": rank_tolerance}
    return PodBasis(vectors, lam[:d_v], d_v, inner, snap.tau, snap.variant, meta)


def prefix_basis(basis, r):
    """Truncate a computed basis to its first r vectors.

    Orthonormalization in compute_pod_basis preserves every prefix span,
    so this equals recomputing the basis at rank r; eigenvalue history
    and d_v are kept so tail sums stay available.
    """
    if not 1 <= r <= basis.r:
        raise ValueError(f"requested rank r={r} outside 1..{basis.r}")
    return PodBasis(
        basis.vectors[:, :r],
        basis.eigenvalues,
        basis.d_v,
        basis.inner,
        basis.tau,
        basis.variant,
        basis.meta,
    )


def project_onto_basis(basis, v):
    """X-orthogonal projection onto the basis span.

    Returns (coords, lifted): coords_k = (v, phi_k)_X and the lifted
    field sum_k coords_k phi_k.
    """
    coords = basis.vectors.T @ (basis.inner.operator @ v)
    return coords, basis.vectors @ coords


def project_series(basis, Y):
    """Column-wise projection of a snapshot/trajectory matrix."""
    coords = basis.vectors.T @ (basis.inner.operator @ Y)
    return coords, basis.vectors @ coords


def power_iteration_norm(mat, tol=1e-10, max_iter=20000):
    """Largest eigenvalue of a symmetric positive semi-definite matrix
    by power iteration with Rayleigh-quotient convergence control.

    `tol` is the guaranteed relative tolerance; iteration continues to
    stagnation (much tighter in practice) so downstream inequality
    checks are not limited by it.
    """
    n = mat.shape[0]
    if n == 0:
        return 0.0
    # deterministic, not axis-aligned start
    z = np.cos(np.arange(1, n + 1, dtype=np.float64))
    z /= np.linalg.norm(z)
    rho = 0.0
    stagnant = 0
    for _ in range(max_iter):
        w = mat @ z
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        z = w / nw
        rho_new = float(z @ (mat @ z))
        drop = abs(rho_new - rho)
        rho = rho_new
        if drop <= 1e-15 * max(abs(rho), 1e-300):
            stagnant += 1
            if stagnant >= 5:
                break
        else:
            stagnant = 0
    if drop > tol * max(abs(rho), 1e-300):
        raise RuntimeError("power iteration did not reach requested tolerance")
    return rho


def pod_gram_matrices(basis, mass, stiffness, tol=1e-10):
    """POD Gram matrices M^v (mass) and S^v (stiffness) of the retained
    basis plus the spectral norms ||(M^v)^-1||_2 and ||S^v||_2 used by
    the discrete inverse inequalities."""
    Phi = basis.vectors
    Mv = Phi.T @ (mass @ Phi)
    Sv = Phi.T @ (stiffness @ Phi)
    Mv = 0.5 * (Mv + Mv.T)
    Sv = 0.5 * (Sv + Sv.T)
    lam_min = power_iteration_inverse_min(Mv, tol)
    if lam_min <= 0.0:
        raise ValueError("POD mass matrix is singular")
    return Mv, Sv, 1.0 / lam_min, power_iteration_norm(Sv, tol)


def power_iteration_inverse_min(mat, tol=1e-10):
    """Smallest eigenvalue of an SPD matrix: power iteration on the
    shifted complement ||mat||*I - mat (dependency-light and exact in
    the same sense as power_iteration_norm)."""
    top = power_iteration_norm(mat, tol)
    if top == 0.0:
        return 0.0
    shifted = top * np.eye(mat.shape[0]) - mat
    return top - power_iteration_norm(shifted, tol)
