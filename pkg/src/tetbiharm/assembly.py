"""Global DOF numbering, stiffness/load assembly and weak-continuity checks.

Cross-element consistency is obtained by deriving every element's DOF list
from global data: entity vertex orders ascend by global vertex id and
normal moments differentiate along the stored global face normal, so the
two elements at a shared entity apply literally the same functional.

Elements that are translates of each other share their nodal basis and
local matrices; on these uniform meshes only the six Kuhn shapes occur, so
local construction cost is independent of the level.  Boundary conditions
are imposed by eliminating every DOF sitting on a boundary edge or face,
which keeps the reduced system symmetric positive definite.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse

from . import backends
from .barypoly import FLOAT, FROBENIUS_WEIGHTS, SimplexGeometry
from .element import (
    ElementFamily,
    NodalTables,
    ReferenceElement,
    build_reference_element,
    homogeneous_multiindices,
)
from .mesh import TET_EDGES, TET_FACES, EntityMaps, Mesh
from .quadrature import rule_for_degree


@dataclass
class GlobalDofMap:
    family: ElementFamily
    n_total: int
    tet_gdofs: np.ndarray  # (nt, nloc)
    tet_signs: np.ndarray  # (nt, nloc) +-1
    tet_edge_orders: List[Tuple[Tuple[int, int], ...]]
    tet_face_orders: List[Tuple[Tuple[int, int, int], ...]]
    tet_normal_signs: np.ndarray  # (nt, 4)
    boundary_mask: np.ndarray  # (n_total,) bool
    free_dofs: np.ndarray
    free_index: np.ndarray  # n_total -> free id or -1

    @property
    def n_free(self) -> int:
        return self.free_dofs.size


@dataclass
class SparseSystem:
    matrix: scipy.sparse.csr_matrix  # free x free, symmetric positive definite
    rhs: np.ndarray
    dofmap: GlobalDofMap

    @property
    def n_free(self) -> int:
        return self.rhs.size


def build_dof_map(mesh: Mesh, emaps: EntityMaps, family: ElementFamily) -> GlobalDofMap:
    esz, fsz, csz, nsz = family.block_sizes()
    ne, nf, nt = emaps.nedges, emaps.nfaces, mesh.ntets
    face_off = ne * esz
    cell_off = face_off + nf * fsz
    normal_off = cell_off + nt * csz
    n_total = normal_off + nf * nsz

    nloc = family.ndofs()
    tet_gdofs = np.empty((nt, nloc), dtype=np.int64)
    tet_signs = np.ones((nt, nloc))
    tet_normal_signs = np.ones((nt, 4), dtype=np.int64)
    edge_orders_all: List[Tuple[Tuple[int, int], ...]] = []
    face_orders_all: List[Tuple[Tuple[int, int, int], ...]] = []

    for t in range(nt):
        tet = mesh.tets[t]
        cols: List[int] = []
        eorders = []
        for a, b in TET_EDGES:
            ga, gb = int(tet[a]), int(tet[b])
            order = (a, b) if ga < gb else (b, a)
            eorders.append(order)
            eid = emaps.edge_ids[tuple(sorted((ga, gb)))]
            cols.extend(range(eid * esz, eid * esz + esz))
        forders = []
        fids = []
        for tri in TET_FACES:
            pairs = sorted((int(tet[v]), v) for v in tri)
            forders.append(tuple(v for _, v in pairs))
            fid = emaps.face_ids[tuple(g for g, _ in pairs)]
            fids.append(fid)
            cols.extend(range(face_off + fid * fsz, face_off + fid * fsz + fsz))
        cols.extend(range(cell_off + t * csz, cell_off + t * csz + csz))
        for m, fid in enumerate(fids):
            cols.extend(
                range(normal_off + fid * nsz, normal_off + fid * nsz + nsz)
            )
            if emaps.face_tets[fid][0] != t:
                tet_normal_signs[t, m] = -1
                lo = nloc - (4 - m) * nsz
                tet_signs[t, lo:lo + nsz] = -1.0
        tet_gdofs[t] = cols
        edge_orders_all.append(tuple(eorders))
        face_orders_all.append(tuple(forders))

    boundary = np.zeros(n_total, dtype=bool)
    for eid in np.nonzero(emaps.boundary_edges)[0]:
        boundary[eid * esz:(eid + 1) * esz] = True
    for fid in np.nonzero(emaps.boundary_faces)[0]:
        boundary[face_off + fid * fsz:face_off + (fid + 1) * fsz] = True
        boundary[normal_off + fid * nsz:normal_off + (fid + 1) * nsz] = True

    free = np.nonzero(~boundary)[0]
    free_index = np.full(n_total, -1, dtype=np.int64)
    free_index[free] = np.arange(free.size)
    return GlobalDofMap(
        family, n_total, tet_gdofs, tet_signs, edge_orders_all, face_orders_all,
        tet_normal_signs, boundary, free, free_index,
    )


# ----------------------------------------------------------------------
# congruence classes


class ElementClasses:
    """Group tets by shape (vertex displacements) and entity-order pattern;
    all members of a class share one canonically-signed reference element."""

    def __init__(self, mesh: Mesh, dmap: GlobalDofMap):
        self.mesh = mesh
        self.dmap = dmap
        self.keys: List = []
        self.members: Dict[object, List[int]] = {}
        for t in range(mesh.ntets):
            verts = mesh.tet_vertices(t)
            disp = (verts - verts[0]).tobytes()
            key = (disp, dmap.tet_edge_orders[t], dmap.tet_face_orders[t])
            if key not in self.members:
                self.members[key] = []
                self.keys.append(key)
            self.members[key].append(t)
        self._elements: Dict[object, ReferenceElement] = {}

    def element(self, key) -> ReferenceElement:
        if key not in self._elements:
            t = self.members[key][0]
            geom = SimplexGeometry(self.mesh.tet_vertices(t), FLOAT)
            self._elements[key] = build_reference_element(
                self.dmap.family, geom,
                edge_orders=self.dmap.tet_edge_orders[t],
                face_orders=self.dmap.tet_face_orders[t],
            )
        return self._elements[key]


def local_stiffness(elem: ReferenceElement, quad_degree: Optional[int] = None) -> np.ndarray:
    """int_T D^2 phi_i : D^2 phi_j for the nodal basis, by quadrature exact
    at twice the Hessian degree."""
    p = elem.family.max_degree
    rule = rule_for_degree(3, quad_degree if quad_degree is not None else 2 * (p - 2))
    tabs = NodalTables(elem, rule.points)
    w = rule.weights * 6.0 * float(elem.geometry.volume)
    fw = np.asarray(FROBENIUS_WEIGHTS)
    # K[i, j] = sum_c fw_c sum_q w_q H[i, c, q] H[j, c, q]
    return np.einsum("icq,jcq,c,q->ij", tabs.hess, tabs.hess, fw, w, optimize=True)


def assemble(
    mesh: Mesh,
    emaps: EntityMaps,
    dmap: GlobalDofMap,
    f: Callable[[np.ndarray], np.ndarray],
    quad_stiffness: Optional[int] = None,
    quad_load: Optional[int] = None,
    threads: int = 1,
) -> SparseSystem:
    """Assemble the broken-Hessian stiffness matrix and load vector and
    eliminate boundary DOFs."""
    family = dmap.family
    classes = ElementClasses(mesh, dmap)
    n_total = dmap.n_total
    rhs = np.zeros(n_total)
    load_rule = rule_for_degree(
        3, quad_load if quad_load is not None else family.max_degree + 8
    )

    rows_parts: List[np.ndarray] = []
    cols_parts: List[np.ndarray] = []
    vals_parts: List[np.ndarray] = []

    def process(key):
        elem = classes.element(key)
        tets = classes.members[key]
        kcan = local_stiffness(elem, quad_stiffness)
        gidx = dmap.tet_gdofs[tets]
        signs = dmap.tet_signs[tets]
        r, c, v = backends.scatter_symmetric(kcan, gidx, signs)
        # load: F_loc = 6V * B (w ⊙ f(x))
        btab = NodalTables(elem, load_rule.points).value
        verts0 = elem.geometry.points_many(load_rule.points)
        base = mesh.tet_vertices(tets[0])[0]
        shifts = mesh.vertices[mesh.tets[tets, 0]] - base
        pts = verts0[None, :, :] + shifts[:, None, :]
        fvals = np.asarray(f(pts.reshape(-1, 3))).reshape(len(tets), -1)
        wv = load_rule.weights * 6.0 * float(elem.geometry.volume)
        floc = (fvals * wv) @ btab.T * signs
        return r, c, v, gidx, floc

    keys = classes.keys
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(process, keys))
    else:
        results = [process(k) for k in keys]
    for r, c, v, gidx, floc in results:
        rows_parts.append(r)
        cols_parts.append(c)
        vals_parts.append(v)
        np.add.at(rhs, gidx.ravel(), floc.ravel())

    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    vals = np.concatenate(vals_parts)
    k_full = scipy.sparse.coo_matrix(
        (vals, (rows, cols)), shape=(n_total, n_total)
    ).tocsr()
    free = dmap.free_dofs
    k_free = k_full[free][:, free]
    k_free.sort_indices()
    return SparseSystem(k_free, rhs[free], dmap)


def export_matrix_coo(sys: SparseSystem, path: str) -> None:
    """Coordinate text format 'i j value', 1-based, for external checks."""
    coo = sys.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"{sys.n_free} {sys.n_free} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


# ----------------------------------------------------------------------
# weak-continuity (jump) checks


def expand_free_vector(dmap: GlobalDofMap, x_free: np.ndarray) -> np.ndarray:
    x = np.zeros(dmap.n_total)
    x[dmap.free_dofs] = x_free
    return x


def check_hypotheses(
    mesh: Mesh,
    emaps: EntityMaps,
    dmap: GlobalDofMap,
    trials: int = 20,
    seed: int = 0,
) -> Dict[str, float]:
    """Max relative jump-moment residuals over random discrete functions.

    For every interior face the gradient jump is tested against vector
    polynomials up to degree l-2 and the value jump against scalars up to
    degree l-3; boundary faces use the one-sided (trace) versions.  All
    residuals vanish for a correctly oriented DOF map.
    """
    family = dmap.family
    l = family.degree
    classes = ElementClasses(mesh, dmap)
    tet_class = {}
    for key in classes.keys:
        for t in classes.members[key]:
            tet_class[t] = key
    rule = rule_for_degree(2, family.max_degree + l)
    grad_pats = homogeneous_multiindices(l - 2, 3)
    val_pats = homogeneous_multiindices(l - 3, 3) if l >= 3 else ()

    table_cache: Dict[Tuple[object, int], NodalTables] = {}

    def side_tables(t: int, local_face: int) -> NodalTables:
        # both sides place the k-th rule column on the face vertex with the
        # k-th smallest global id, so their physical points coincide
        key = (tet_class[t], local_face)
        if key not in table_cache:
            order = dmap.tet_face_orders[t][local_face]
            bary = np.zeros((rule.npoints, 4))
            for col, v in enumerate(order):
                bary[:, v] = rule.points[:, col]
            table_cache[key] = NodalTables(classes.element(key[0]), bary)
        return table_cache[key]

    def local_face_of(t: int, fid: int) -> int:
        tri = set(emaps.faces[fid])
        tet = mesh.tets[t]
        for lf, loc in enumerate(TET_FACES):
            if {int(tet[v]) for v in loc} == tri:
                return lf
        raise AssertionError("face not found in tet")

    rng = np.random.default_rng(seed)
    res = {"grad_interior": 0.0, "value_interior": 0.0,
           "grad_boundary": 0.0, "value_boundary": 0.0}
    # reference monomial values on the face rule (pattern -> values)
    def pattern_values(pats):
        out = {}
        for pat in pats:
            vals = np.ones(rule.npoints)
            for k in range(3):
                if pat[k]:
                    vals *= rule.points[:, k] ** pat[k]
            out[pat] = vals
        return out

    gvals = pattern_values(grad_pats)
    vvals = pattern_values(val_pats)

    for _ in range(trials):
        x = expand_free_vector(dmap, rng.standard_normal(dmap.n_free))
        scale_v = 1.0
        scale_g = 1.0
        face_data = []
        for fid in range(emaps.nfaces):
            owner, nb = emaps.face_tets[fid]
            sides = []
            for t in (owner, nb):
                if t < 0:
                    continue
                lf = local_face_of(t, fid)
                tabs = side_tables(t, lf)
                c = x[dmap.tet_gdofs[t]] * dmap.tet_signs[t]
                vv = c @ tabs.value
                gg = np.einsum("j,jdq->dq", c, tabs.grad)
                sides.append((vv, gg))
            face_data.append(sides)
            for vv, gg in sides:
                scale_v = max(scale_v, float(np.abs(vv).max()))
                scale_g = max(scale_g, float(np.abs(gg).max()))
        for fid, sides in enumerate(face_data):
            if len(sides) == 2:
                dv = sides[0][0] - sides[1][0]
                dg = sides[0][1] - sides[1][1]
                kv, kg = "value_interior", "grad_interior"
            else:
                dv = sides[0][0]
                dg = sides[0][1]
                kv, kg = "value_boundary", "grad_boundary"
            for pat, mono in gvals.items():
                mom = 2.0 * np.abs(dg @ (rule.weights * mono)).max()
                res[kg] = max(res[kg], mom / scale_g)
            for pat, mono in vvals.items():
                mom = 2.0 * abs(float(dv @ (rule.weights * mono)))
                res[kv] = max(res[kv], mom / scale_v)
    return res
