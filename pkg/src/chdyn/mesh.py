"""Triangulations of the unit disk and unit square with boundary-fitted vertices.

Meshes are plain vertex/triangle arrays plus an ordered closed chain of
boundary edges, so that surface quantities (boundary mass, tangential
stiffness) can be assembled edge-wise along the chain. Disk meshes keep
every boundary vertex on the unit circle; uniform refinement projects new
boundary midpoints back onto it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "DomainKind",
    "Mesh",
    "MeshError",
    "ValidationReport",
    "unit_disk_mesh",
    "unit_square_mesh",
    "refine",
    "mesh_width",
    "validate",
    "prolong",
    "write_mesh_text",
    "read_mesh_text",
]

CIRCLE_TOL = 1e-13
DEGENERATE_AREA = 1e-14
QUASI_UNIFORMITY_BOUND = 10.0
MAX_REFINEMENT_LEVEL = 14


class DomainKind(Enum):
    UNIT_DISK = "unit_disk"
    UNIT_SQUARE = "unit_square"


class MeshError(ValueError):
    """Invalid mesh input (bad arguments or a mesh failing validation)."""


@dataclass(frozen=True)
class Mesh:
    """Immutable 2D triangulation with an ordered boundary chain.

    Attributes
    ----------
    vertices : (n, 2) float array
    triangles : (m, 3) int array
        Vertex indices, counterclockwise orientation.
    boundary_edges : (b, 2) int array
        Consecutive edges forming one closed loop around the domain.
    is_boundary : (n,) bool array
    domain_kind : DomainKind
    h : float
        Maximal edge length over all triangle edges.
    parent_edges : (n - n_parent, 2) int array or None
        For refined meshes: vertex ``n_parent + k`` is the (projected)
        midpoint of the parent-mesh edge ``parent_edges[k]``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    is_boundary: np.ndarray
    domain_kind: DomainKind
    h: float
    parent_edges: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "is_boundary"):
            arr = getattr(self, name)
            arr.flags.writeable = False
        if self.parent_edges is not None:
            self.parent_edges.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


@dataclass
class ValidationReport:
    ok: bool
    failures: list[str]
    quasi_uniformity: float

    def __bool__(self) -> bool:
        return self.ok


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0 = vertices[triangles[:, 0]]
    d1 = vertices[triangles[:, 1]] - p0
    d2 = vertices[triangles[:, 2]] - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _all_edges(triangles: np.ndarray) -> np.ndarray:
    """All triangle edges as sorted index pairs, one row per (triangle, side)."""
    e = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    return np.sort(e, axis=1)


def _edge_lengths(vertices: np.ndarray, edges: np.ndarray) -> np.ndarray:
    d = vertices[edges[:, 0]] - vertices[edges[:, 1]]
    return np.hypot(d[:, 0], d[:, 1])


def mesh_width(mesh: Mesh) -> float:
    """Maximum edge length over all triangle edges."""
    return float(_edge_lengths(mesh.vertices, _all_edges(mesh.triangles)).max())


def _finish_mesh(vertices, triangles, chain, kind, parent_edges=None) -> Mesh:
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    chain = np.ascontiguousarray(chain, dtype=np.int64)
    is_boundary = np.zeros(vertices.shape[0], dtype=bool)
    is_boundary[chain.ravel()] = True
    h = float(_edge_lengths(vertices, _all_edges(triangles)).max())
    return Mesh(vertices, triangles, chain, is_boundary, kind, h, parent_edges)


def unit_disk_mesh(refinement_level: int) -> Mesh:
    """Quasi-uniform triangulation of the unit disk.

    Level 0 is a fixed 19-vertex fan/ring mesh (12 vertices on the unit
    circle); each level applies one uniform refinement with radial
    projection of new boundary vertices, so the vertex count grows
    roughly fourfold per level.
    """
    if refinement_level < 0:
        raise MeshError("refinement_level must be non-negative")
    if refinement_level > MAX_REFINEMENT_LEVEL:
        raise MeshError(
            f"refinement_level {refinement_level} exceeds capacity guard "
            f"{MAX_REFINEMENT_LEVEL}"
        )
    mesh = _coarse_disk_mesh()
    for _ in range(refinement_level):
        mesh = refine(mesh)
    return mesh


def _coarse_disk_mesh() -> Mesh:
    # Center, inner hexagon at radius 1/2 (offset 30 deg), 12-gon on the circle.
    inner_angles = np.deg2rad(30.0 + 60.0 * np.arange(6))
    outer_angles = np.deg2rad(30.0 * np.arange(12))
    vertices = np.vstack(
        [
            [[0.0, 0.0]],
            0.5 * np.column_stack([np.cos(inner_angles), np.sin(inner_angles)]),
            np.column_stack([np.cos(outer_angles), np.sin(outer_angles)]),
        ]
    )
    inner = lambda j: 1 + (j % 6)
    outer = lambda k: 7 + (k % 12)
    triangles = []
    for j in range(6):
        triangles.append([0, inner(j), inner(j + 1)])
        # Ring: inner vertex j sits at the angle of outer vertex 2j+1.
        triangles.append([outer(2 * j), outer(2 * j + 1), inner(j)])
        triangles.append([outer(2 * j + 1), outer(2 * j + 2), inner(j)])
        triangles.append([inner(j), outer(2 * j + 2), inner(j + 1)])
    chain = [[outer(k), outer(k + 1)] for k in range(12)]
    return _finish_mesh(vertices, np.array(triangles), np.array(chain), DomainKind.UNIT_DISK)


def unit_square_mesh(n: int) -> Mesh:
    """Structured triangulation of (0,1)^2 with (n+1)^2 vertices.

    Each grid cell is split along its lower-left to upper-right diagonal;
    the boundary chain runs counterclockwise around the four sides.
    """
    if n < 2:
        raise MeshError("n must be at least 2")
    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])
    idx = lambda i, j: j * (n + 1) + i

    triangles = []
    for j in range(n):
        for i in range(n):
            a, b = idx(i, j), idx(i + 1, j)
            c, d = idx(i + 1, j + 1), idx(i, j + 1)
            triangles.append([a, b, c])
            triangles.append([a, c, d])

    chain = []
    for i in range(n):
        chain.append([idx(i, 0), idx(i + 1, 0)])
    for j in range(n):
        chain.append([idx(n, j), idx(n, j + 1)])
    for i in range(n, 0, -1):
        chain.append([idx(i, n), idx(i - 1, n)])
    for j in range(n, 0, -1):
        chain.append([idx(0, j), idx(0, j - 1)])
    return _finish_mesh(vertices, np.array(triangles), np.array(chain), DomainKind.UNIT_SQUARE)


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement: every triangle is split into four by its
    edge midpoints. New midpoints of boundary edges are projected radially
    onto the unit circle for disk meshes and stay on the edge for square
    meshes."""
    report = validate(mesh)
    if not report.ok:
        raise MeshError("refusing to refine invalid mesh: " + "; ".join(report.failures))

    n_old = mesh.n_vertices
    edges = _all_edges(mesh.triangles)
    unique_edges = np.unique(edges, axis=0)
    edge_to_mid = {(int(a), int(b)): n_old + k for k, (a, b) in enumerate(unique_edges)}

    midpoints = 0.5 * (mesh.vertices[unique_edges[:, 0]] + mesh.vertices[unique_edges[:, 1]])
    boundary_set = {tuple(sorted(map(int, e))) for e in mesh.boundary_edges}
    on_boundary = np.array(
        [tuple(e) in boundary_set for e in map(tuple, unique_edges)], dtype=bool
    )
    if mesh.domain_kind is DomainKind.UNIT_DISK and on_boundary.any():
        bm = midpoints[on_boundary]
        midpoints[on_boundary] = bm / np.linalg.norm(bm, axis=1)[:, None]

    vertices = np.vstack([mesh.vertices, midpoints])

    triangles = []
    for v0, v1, v2 in mesh.triangles:
        m01 = edge_to_mid[tuple(sorted((int(v0), int(v1))))]
        m12 = edge_to_mid[tuple(sorted((int(v1), int(v2))))]
        m20 = edge_to_mid[tuple(sorted((int(v2), int(v0))))]
        triangles.extend(
            [[v0, m01, m20], [v1, m12, m01], [v2, m20, m12], [m01, m12, m20]]
        )

    chain = []
    for a, b in mesh.boundary_edges:
        m = edge_to_mid[tuple(sorted((int(a), int(b))))]
        chain.append([a, m])
        chain.append([m, b])

    return _finish_mesh(
        vertices, np.array(triangles), np.array(chain), mesh.domain_kind,
        parent_edges=unique_edges,
    )


def prolong(fine: Mesh, coarse_values: np.ndarray) -> np.ndarray:
    """Prolongate nodal values from a mesh onto its refinement.

    Parent vertices keep their values; each midpoint vertex gets the
    average of its parent edge's endpoint values (the value of the
    coarse piecewise linear function at the unprojected midpoint).
    """
    if fine.parent_edges is None:
        raise MeshError("mesh carries no refinement history")
    n_new = fine.parent_edges.shape[0]
    n_old = fine.n_vertices - n_new
    if coarse_values.shape[0] != n_old:
        raise MeshError(
            f"expected {n_old} coarse values, got {coarse_values.shape[0]}"
        )
    out = np.empty(fine.n_vertices, dtype=float)
    out[:n_old] = coarse_values
    out[n_old:] = 0.5 * (
        coarse_values[fine.parent_edges[:, 0]] + coarse_values[fine.parent_edges[:, 1]]
    )
    return out


def validate(mesh: Mesh) -> ValidationReport:
    """Check mesh invariants; reports failures instead of raising.

    Checks: positive triangle areas, edge incidence (boundary edges in
    exactly one triangle, interior edges in exactly two), closed single
    boundary loop matching the is_boundary flags, boundary vertices on
    the unit circle for disk meshes, h consistency, and the
    quasi-uniformity ratio max-edge / min-inradius.
    """
    failures: list[str] = []
    v, t = mesh.vertices, mesh.triangles

    areas = _signed_areas(v, t)
    if np.any(areas <= 0.0):
        bad = int(np.argmin(areas))
        failures.append(f"negative area: triangle {bad} has signed area {areas[bad]:.3e}")

    # Edge incidence counts.
    edges = _all_edges(t)
    unique_edges, counts = np.unique(edges, axis=0, return_counts=True)
    edge_count = {tuple(map(int, e)): int(c) for e, c in zip(unique_edges, counts)}
    chain_set = {tuple(sorted(map(int, e))) for e in mesh.boundary_edges}
    for e, c in edge_count.items():
        if e in chain_set:
            if c != 1:
                failures.append(f"boundary edge {e} belongs to {c} triangles, expected 1")
        elif c != 2:
            failures.append(f"interior edge {e} belongs to {c} triangles, expected 2")
    for e in chain_set:
        if e not in edge_count:
            failures.append(f"boundary chain edge {e} is not a triangle edge")

    # Chain: single closed loop, consecutive edges linked head to tail.
    chain = mesh.boundary_edges
    if chain.shape[0] == 0:
        failures.append("boundary chain is empty")
    else:
        heads, tails = chain[:, 0], chain[:, 1]
        if not np.array_equal(tails, np.roll(heads, -1)):
            failures.append("boundary chain is not a closed head-to-tail loop")
        if len(np.unique(heads)) != chain.shape[0]:
            failures.append("boundary chain visits a vertex twice")
        flagged = set(np.nonzero(mesh.is_boundary)[0].tolist())
        if set(map(int, heads)) != flagged:
            failures.append("boundary chain does not cover exactly the flagged vertices")

    if mesh.domain_kind is DomainKind.UNIT_DISK and chain.shape[0] > 0:
        r = np.linalg.norm(v[mesh.is_boundary], axis=1)
        worst = float(np.abs(r - 1.0).max()) if r.size else 0.0
        if worst > CIRCLE_TOL:
            failures.append(f"boundary vertex off the unit circle by {worst:.3e}")

    lengths = _edge_lengths(v, edges)
    h = float(lengths.max())
    if not np.isclose(mesh.h, h, rtol=1e-12, atol=1e-15):
        failures.append(f"stored h={mesh.h} differs from computed {h}")

    # Quasi-uniformity: global max edge over smallest inradius.
    with np.errstate(divide="ignore", invalid="ignore"):
        l0 = _edge_lengths(v, t[:, [0, 1]])
        l1 = _edge_lengths(v, t[:, [1, 2]])
        l2 = _edge_lengths(v, t[:, [2, 0]])
        semi = 0.5 * (l0 + l1 + l2)
        inradius = np.abs(areas) / semi
    qu = float(h / inradius.min()) if inradius.size else np.inf
    if qu > QUASI_UNIFORMITY_BOUND:
        failures.append(
            f"quasi-uniformity ratio {qu:.2f} exceeds bound {QUASI_UNIFORMITY_BOUND}"
        )

    return ValidationReport(ok=not failures, failures=failures, quasi_uniformity=qu)


def write_mesh_text(mesh: Mesh, path) -> None:
    """Dump a mesh in a line-based text format (debugging aid)."""
    with open(path, "w") as f:
        f.write(f"{mesh.domain_kind.value}\n")
        f.write(f"{mesh.n_vertices} {mesh.n_triangles} {mesh.boundary_edges.shape[0]}\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in mesh.triangles:
            f.write(f"{a} {b} {c}\n")
        for a, b in mesh.boundary_edges:
            f.write(f"{a} {b}\n")


def read_mesh_text(path) -> Mesh:
    with open(path) as f:
        kind = DomainKind(f.readline().strip())
        nv, nt, nb = map(int, f.readline().split())
        vertices = np.array([list(map(float, f.readline().split())) for _ in range(nv)])
        triangles = np.array([list(map(int, f.readline().split())) for _ in range(nt)])
        chain = np.array([list(map(int, f.readline().split())) for _ in range(nb)])
    return _finish_mesh(vertices, triangles, chain, kind)
