"""Uniform tetrahedral meshes of the unit cube and entity extraction.

Each refinement level splits the cube into ``(2^(level-1))^3`` congruent
subcubes, and every subcube into the six Kuhn tetrahedra sharing its main
diagonal, with one global diagonal direction so that uniform refinement
keeps all elements similar to the six level-1 shapes.  Vertex ids are
lexicographic in (z, y, x), hence translation-invariant; entity ids are
lexicographic in sorted global vertex tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, List, Tuple

import numpy as np

AXIS_UNIT = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


@dataclass
class Mesh:
    vertices: np.ndarray  # (nv, 3)
    tets: np.ndarray  # (nt, 4) vertex ids, positively oriented
    level: int = 0

    @property
    def nvertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def ntets(self) -> int:
        return self.tets.shape[0]

    def tet_vertices(self, t: int) -> np.ndarray:
        return self.vertices[self.tets[t]]


@dataclass
class EntityMaps:
    edge_ids: Dict[Tuple[int, int], int]
    edges: List[Tuple[int, int]]
    face_ids: Dict[Tuple[int, int, int], int]
    faces: List[Tuple[int, int, int]]
    face_tets: List[Tuple[int, int]]  # (owner, neighbor or -1)
    face_normals: np.ndarray  # (nf, 3) outward normal of the owner tet
    boundary_edges: np.ndarray  # bool
    boundary_faces: np.ndarray  # bool

    @property
    def nedges(self) -> int:
        return len(self.edges)

    @property
    def nfaces(self) -> int:
        return len(self.faces)


def _kuhn_tets() -> List[Tuple[Tuple[int, int, int], ...]]:
    """The six unit-cube tetrahedra as corner-offset 4-tuples, positively
    oriented, all sharing the (0,0,0)-(1,1,1) diagonal."""
    tets = []
    for perm in permutations(range(3)):
        pts = [(0, 0, 0)]
        cur = (0, 0, 0)
        for axis in perm:
            cur = tuple(cur[k] + AXIS_UNIT[axis][k] for k in range(3))
            pts.append(cur)
        e = np.array(pts[1:], dtype=float) - np.array(pts[0], dtype=float)
        if np.linalg.det(e) < 0:
            pts[1], pts[2] = pts[2], pts[1]
        tets.append(tuple(pts))
    return tets


_KUHN = _kuhn_tets()


def uniform_cube_mesh(level: int) -> Mesh:
    """Kuhn-subdivided uniform mesh of [0,1]^3 with 6 * 8^(level-1) tets."""
    if level < 1:
        raise ValueError("level must be >= 1")
    if level > 6:
        raise ValueError("level capped at 6 (desk scale)")
    n = 2 ** (level - 1)
    axis = np.arange(n + 1) / n
    # vertex id = ix + (n+1) * (iy + (n+1) * iz)
    xs, ys, zs = np.meshgrid(axis, axis, axis, indexing="ij")
    ids = np.arange((n + 1) ** 3).reshape(n + 1, n + 1, n + 1, order="F")
    vertices = np.column_stack(
        [xs.ravel(order="F"), ys.ravel(order="F"), zs.ravel(order="F")]
    )
    tets = []
    for iz in range(n):
        for iy in range(n):
            for ix in range(n):
                for tet in _KUHN:
                    tets.append(
                        tuple(
                            ids[ix + o[0], iy + o[1], iz + o[2]] for o in tet
                        )
                    )
    return Mesh(vertices, np.array(tets, dtype=np.int64), level)


TET_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _outward_normal(mesh: Mesh, t: int, local_face: int) -> np.ndarray:
    verts = mesh.tet_vertices(t)
    opp = verts[local_face]
    tri = [verts[v] for v in TET_FACES[local_face]]
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    n /= np.linalg.norm(n)
    if np.dot(n, tri[0] - opp) < 0:
        n = -n
    return n


def extract_entities(mesh: Mesh) -> EntityMaps:
    """Deterministic edge/face numbering, incidence and boundary flags."""
    edge_set = set()
    face_inc: Dict[Tuple[int, int, int], List[Tuple[int, int]]] = {}
    for t in range(mesh.ntets):
        tet = mesh.tets[t]
        for a, b in TET_EDGES:
            edge_set.add(tuple(sorted((int(tet[a]), int(tet[b])))))
        for lf, tri in enumerate(TET_FACES):
            key = tuple(sorted(int(tet[v]) for v in tri))
            face_inc.setdefault(key, []).append((t, lf))

    edges = sorted(edge_set)
    edge_ids = {e: i for i, e in enumerate(edges)}
    faces = sorted(face_inc)
    face_ids = {f: i for i, f in enumerate(faces)}

    face_tets = []
    normals = np.zeros((len(faces), 3))
    for i, f in enumerate(faces):
        inc = sorted(face_inc[f])
        if len(inc) > 2:
            raise ValueError(f"non-conforming mesh: face {f} has {len(inc)} tets")
        owner, lf = inc[0]
        nb = inc[1][0] if len(inc) == 2 else -1
        face_tets.append((owner, nb))
        normals[i] = _outward_normal(mesh, owner, lf)

    boundary_faces = np.array([ft[1] < 0 for ft in face_tets])

    def on_boundary_plane(a: int, b: int) -> bool:
        va, vb = mesh.vertices[a], mesh.vertices[b]
        for d in range(3):
            for val in (0.0, 1.0):
                if va[d] == val and vb[d] == val:
                    return True
        return False

    boundary_edges = np.array([on_boundary_plane(a, b) for a, b in edges])
    return EntityMaps(
        edge_ids, edges, face_ids, faces, face_tets, normals,
        boundary_edges, boundary_faces,
    )


def write_mesh_ascii(mesh: Mesh, path: str) -> None:
    """Plain text export: 'nv nt', vertex lines, then 0-based tet lines."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.nvertices} {mesh.ntets}\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.tets:
            fh.write(f"{t[0]} {t[1]} {t[2]} {t[3]}\n")
