"""Coupled bulk-surface P1 finite element assembly and discrete functionals.

Bulk matrices integrate over the triangulation, surface matrices over the
boundary edge chain (tangential derivatives along edges). All nonlinear
terms are evaluated nodally, i.e. potentials act on the nodal vector and
are weighted through the mass matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import linsolve
from .mesh import DEGENERATE_AREA, Mesh

__all__ = [
    "FemMatrices",
    "AssemblyError",
    "assemble",
    "interpolate",
    "nonlinear_load",
    "norm_M",
    "norm_K",
    "seminorm_A",
    "dual_norm",
    "energy",
    "total_mass",
    "ritz_project",
]


class AssemblyError(RuntimeError):
    """Degenerate geometry or non-finite data during assembly."""


@dataclass(frozen=True)
class FemMatrices:
    """Assembled sparse matrices for one mesh.

    ``m_bulk``/``a_bulk`` integrate phi_j phi_i and grad phi_j . grad phi_i
    over the triangulation; ``m_surf``/``a_surf`` integrate the traces and
    tangential derivatives along the boundary chain (nonzero only on
    boundary vertices). ``m``, ``a`` and ``k = m + a`` are the combined
    bulk+surface forms.
    """

    m_bulk: sparse.csr_matrix
    m_surf: sparse.csr_matrix
    a_bulk: sparse.csr_matrix
    a_surf: sparse.csr_matrix
    m: sparse.csr_matrix
    a: sparse.csr_matrix
    k: sparse.csr_matrix
    n_dof: int


def assemble(mesh: Mesh) -> FemMatrices:
    """Assemble bulk and surface P1 mass and stiffness matrices."""
    v, tri = mesh.vertices, mesh.triangles
    n = mesh.n_vertices

    p0, p1, p2 = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    d1, d2 = p1 - p0, p2 - p0
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(area < DEGENERATE_AREA):
        bad = int(np.argmin(area))
        raise AssemblyError(
            f"triangle {bad} has signed area {area[bad]:.3e} below {DEGENERATE_AREA}"
        )

    # Gradients of the barycentric coordinates: grad lambda_i is the
    # opposite edge rotated by +90 degrees over twice the area.
    edges = np.stack([p2 - p1, p0 - p2, p1 - p0], axis=1)  # (m, 3, 2)
    grads = np.empty_like(edges)
    grads[:, :, 0] = -edges[:, :, 1]
    grads[:, :, 1] = edges[:, :, 0]
    grads /= (2.0 * area)[:, None, None]

    k_elem = np.einsum("tid,tjd->tij", grads, grads) * area[:, None, None]
    m_ref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    m_elem = area[:, None, None] * m_ref[None, :, :]

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    a_bulk = sparse.coo_matrix((k_elem.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    m_bulk = sparse.coo_matrix((m_elem.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    be = mesh.boundary_edges
    lengths = np.linalg.norm(v[be[:, 0]] - v[be[:, 1]], axis=1)
    m_edge_ref = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    a_edge_ref = np.array([[1.0, -1.0], [-1.0, 1.0]])
    m_edge = lengths[:, None, None] * m_edge_ref[None, :, :]
    a_edge = (1.0 / lengths)[:, None, None] * a_edge_ref[None, :, :]

    erows = np.repeat(be, 2, axis=1).ravel()
    ecols = np.tile(be, (1, 2)).ravel()
    m_surf = sparse.coo_matrix((m_edge.ravel(), (erows, ecols)), shape=(n, n)).tocsr()
    a_surf = sparse.coo_matrix((a_edge.ravel(), (erows, ecols)), shape=(n, n)).tocsr()

    for mat in (a_bulk, m_bulk, a_surf, m_surf):
        mat.sum_duplicates()
        mat.sort_indices()

    m = (m_bulk + m_surf).tocsr()
    a = (a_bulk + a_surf).tocsr()
    k = (m + a).tocsr()
    return FemMatrices(m_bulk, m_surf, a_bulk, a_surf, m, a, k, n)


def interpolate(mesh: Mesh, f, t: float) -> np.ndarray:
    """Nodal interpolation: evaluate ``f(x, y, t)`` at every vertex."""
    values = np.asarray(
        f(mesh.vertices[:, 0], mesh.vertices[:, 1], t), dtype=float
    )
    values = np.broadcast_to(values, (mesh.n_vertices,)).copy()
    if not np.all(np.isfinite(values)):
        bad = int(np.nonzero(~np.isfinite(values))[0][0])
        raise AssemblyError(f"non-finite field value at vertex {bad}")
    return values


def nonlinear_load(mats: FemMatrices, problem, u: np.ndarray) -> np.ndarray:
    """Mass-weighted nodal potential derivative.

    Returns ``(1/eps) m_bulk W'_bulk(u) + (1/delta) m_surf W'_surf(u)``
    with both derivatives evaluated at the nodal values of ``u``.
    """
    wb = np.asarray(problem.w_bulk.derivative(u), dtype=float)
    ws = np.asarray(problem.w_surf.derivative(u), dtype=float)
    for vals, label in ((wb, "bulk"), (ws, "surface")):
        if not np.all(np.isfinite(vals)):
            bad = int(np.nonzero(~np.isfinite(vals))[0][0])
            raise AssemblyError(
                f"{label} potential derivative overflow at vertex {bad}, u={u[bad]!r}"
            )
    return (1.0 / problem.eps) * (mats.m_bulk @ wb) + (1.0 / problem.delta) * (
        mats.m_surf @ ws
    )


def norm_M(mats: FemMatrices, v: np.ndarray) -> float:
    """Combined bulk+surface L2 norm sqrt(v' M v)."""
    return float(np.sqrt(max(v @ (mats.m @ v), 0.0)))


def norm_K(mats: FemMatrices, v: np.ndarray) -> float:
    """Combined bulk+surface H1 norm sqrt(v' (M + A) v)."""
    return float(np.sqrt(max(v @ (mats.k @ v), 0.0)))


def seminorm_A(mats: FemMatrices, v: np.ndarray) -> float:
    """Combined gradient seminorm sqrt(v' A v)."""
    return float(np.sqrt(max(v @ (mats.a @ v), 0.0)))


def dual_norm(mats: FemMatrices, d: np.ndarray, solver=None) -> float:
    """Discrete dual norm sqrt((Md)' K^{-1} (Md)).

    Closed form of the supremum of m(d, phi) / ||phi||_K over phi != 0.
    """
    md = mats.m @ d
    if solver is None:
        x = linsolve.spd_solve(mats.k, md)
    else:
        x = solver(mats.k, md)
    return float(np.sqrt(max(md @ x, 0.0)))


def energy(mats: FemMatrices, problem, u: np.ndarray) -> float:
    """Discrete bulk-surface free energy.

    Gradient terms are weighted by eps (bulk) and delta*kappa (surface);
    the potential terms carry 1/eps and 1/delta and are evaluated nodally,
    consistent with :func:`nonlinear_load`.
    """
    grad = 0.5 * problem.eps * (u @ (mats.a_bulk @ u)) + 0.5 * (
        problem.delta * problem.kappa
    ) * (u @ (mats.a_surf @ u))
    wb = np.asarray(problem.w_bulk.value(u), dtype=float)
    ws = np.asarray(problem.w_surf.value(u), dtype=float)
    pot = (1.0 / problem.eps) * (mats.m_bulk @ wb).sum() + (
        1.0 / problem.delta
    ) * (mats.m_surf @ ws).sum()
    return float(grad + pot)


def total_mass(mats: FemMatrices, u: np.ndarray) -> float:
    """Combined bulk+surface mass 1' M u."""
    return float((mats.m @ u).sum())


def ritz_project(mesh: Mesh, mats: FemMatrices, u_exact, grad_exact, t: float,
                 solver=None) -> np.ndarray:
    """Elliptic projection onto the P1 space.

    Solves ``K r = b`` where ``b_i`` approximates the combined
    gradient-plus-mass pairing of the exact field with the basis function:
    3-point edge-midpoint quadrature on triangles (exact for quadratics)
    and 2-point Gauss quadrature on boundary edges, both on the discrete
    mesh.
    """
    v, tri = mesh.vertices, mesh.triangles
    n = mesh.n_vertices
    b = np.zeros(n)

    p0, p1, p2 = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    d1, d2 = p1 - p0, p2 - p0
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    edges = np.stack([p2 - p1, p0 - p2, p1 - p0], axis=1)
    grads = np.empty_like(edges)
    grads[:, :, 0] = -edges[:, :, 1]
    grads[:, :, 1] = edges[:, :, 0]
    grads /= (2.0 * area)[:, None, None]

    # Quadrature at edge midpoints; basis values there are 1/2, 1/2, 0.
    midpts = np.stack([0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)], axis=1)
    w_q = area / 3.0
    uq = np.empty((tri.shape[0], 3))
    gq = np.empty((tri.shape[0], 3, 2))
    for m in range(3):
        x, y = midpts[:, m, 0], midpts[:, m, 1]
        uq[:, m] = u_exact(x, y, t)
        gx, gy = grad_exact(x, y, t)
        gq[:, m, 0], gq[:, m, 1] = gx, gy
    basis_at_mid = 0.5 * np.array(
        [[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]]
    )  # (quad point, local basis)
    contrib = np.einsum("tq,qi,t->ti", uq, basis_at_mid, w_q)
    contrib += np.einsum("tqd,tid,t->ti", gq, grads, w_q)
    np.add.at(b, tri, contrib)

    be = mesh.boundary_edges
    pa, pb = v[be[:, 0]], v[be[:, 1]]
    tangent = pb - pa
    lengths = np.linalg.norm(tangent, axis=1)
    that = tangent / lengths[:, None]
    offset = 0.5 / np.sqrt(3.0)
    mid = 0.5 * (pa + pb)
    econtrib = np.zeros((be.shape[0], 2))
    w_e = 0.5 * lengths
    for s in (-offset, offset):
        xq = mid + s * tangent
        lam = 0.5 + s  # fraction of the way from the first to the second endpoint
        uq_e = u_exact(xq[:, 0], xq[:, 1], t)
        gx, gy = grad_exact(xq[:, 0], xq[:, 1], t)
        du_t = gx * that[:, 0] + gy * that[:, 1]
        econtrib[:, 0] += w_e * (uq_e * (1.0 - lam) - du_t / lengths)
        econtrib[:, 1] += w_e * (uq_e * lam + du_t / lengths)
    np.add.at(b, be, econtrib)

    if solver is None:
        return linsolve.spd_solve(mats.k, b)
    return solver(mats.k, b)
