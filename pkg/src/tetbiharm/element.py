"""Element families, moment degrees of freedom and nodal bases.

Three families are provided on a tetrahedron:

* ``general`` (degree l >= 3): P_l enriched, per face, with d0 = l(l-1)/2 - 1
  functions of degree l+4 taken from the squared-face-bubble space
  ``b_F^2 P_{l-2}(T)``; the per-face basis is obtained from the kernel of
  the face value moments, the cell moments and the mean normal derivative
  over the span ``b_F^2 * monomials(P_{l-2})``.
* ``p4e6``: P_4 enriched with 20 explicit degree-6 polynomials.
* ``p5e7``: P_5 enriched with 36 explicit degree-7 polynomials.

Degrees of freedom are normalized value moments on edges, faces and the
cell plus normal-derivative moments on faces.  Entity vertex orders and
normal orientations are inputs so that two elements sharing an entity can
be handed literally identical functionals.

Nodal (dual) bases are built per element by a dense solve of the DOF
matrix; normal moments are not affine-invariant, so mapping a master
element would be wrong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import backends
from .barypoly import (
    CYCLIC_FACES,
    EDGES,
    FACES,
    FLOAT,
    RATIONAL,
    BaryPoly,
    SimplexGeometry,
    cell_moment_poly,
    edge_moment_poly,
    face_moment_poly,
)
from .quadrature import embed_in_tet, rule_for_degree


class UnisolvenceError(RuntimeError):
    """DOF matrix singular or hopelessly conditioned: construction bug."""


# ----------------------------------------------------------------------
# families

# Enrichment face-bubble pairs (m, t) printed for the low-order elements,
# 0-based: (1,3),(1,4),(2,4),(2,1),(3,1),(3,2),(4,2),(4,3) in 1-based form.
BUBBLE_PAIRS_8 = ((0, 2), (0, 3), (1, 3), (1, 0), (2, 0), (2, 1), (3, 1), (3, 2))


@dataclass(frozen=True)
class ElementFamily:
    kind: str  # "general" | "p4e6" | "p5e7"
    degree: int  # base polynomial degree

    def __post_init__(self):
        if self.kind == "general":
            if self.degree < 3:
                raise ValueError("general family needs degree >= 3")
        elif self.kind == "p4e6":
            if self.degree != 4:
                raise ValueError("p4e6 is a degree-4 family")
        elif self.kind == "p5e7":
            if self.degree != 5:
                raise ValueError("p5e7 is a degree-5 family")
        else:
            raise ValueError(f"unknown family kind {self.kind!r}")

    @property
    def max_degree(self) -> int:
        """Largest polynomial degree in the shape space."""
        if self.kind == "general":
            return self.degree + 4
        return {"p4e6": 6, "p5e7": 7}[self.kind]

    @property
    def label(self) -> str:
        l = self.degree
        if self.kind == "general":
            d0 = l * (l - 1) // 2 - 1
            return f"P{l}+{4 * d0}P{l + 4}"
        return {"p4e6": "P4+20P6", "p5e7": "P5+36P7"}[self.kind]

    def block_sizes(self) -> Tuple[int, int, int, int]:
        """(per-edge, per-face value, cell, per-face normal) DOF counts."""
        return (
            len(self.edge_patterns()),
            len(self.face_patterns()),
            len(self.cell_patterns()),
            len(self.normal_patterns()),
        )

    def ndofs(self) -> int:
        e, f, c, n = self.block_sizes()
        return 6 * e + 4 * f + c + 4 * n

    def edge_patterns(self) -> Tuple[Tuple[int, int], ...]:
        if self.kind == "p4e6":
            return ((2, 0), (1, 1), (0, 2))
        if self.kind == "p5e7":
            return ((3, 0), (0, 3), (2, 1), (1, 2))
        d = self.degree - 2
        return tuple((d - k, k) for k in range(d + 1))

    def face_patterns(self) -> Tuple[Tuple[int, int, int], ...]:
        if self.kind == "p4e6":
            return ((1, 0, 0), (0, 1, 0), (0, 0, 1))
        if self.kind == "p5e7":
            return ((2, 0, 0), (0, 2, 0), (0, 0, 2), (0, 1, 1), (1, 0, 1), (1, 1, 0))
        return homogeneous_multiindices(self.degree - 3, 3)

    def cell_patterns(self) -> Tuple[Tuple[int, int, int, int], ...]:
        if self.kind == "p4e6":
            return ((0, 0, 0, 0),)
        if self.kind == "p5e7":
            return ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
        if self.degree == 3:
            return ()
        return homogeneous_multiindices(self.degree - 4, 4)

    def normal_patterns(self) -> Tuple[Tuple[int, int, int], ...]:
        if self.kind == "p4e6":
            return ((2, 0, 0), (0, 2, 0), (0, 0, 2), (0, 1, 1), (1, 0, 1), (1, 1, 0))
        if self.kind == "p5e7":
            return (
                (3, 0, 0), (0, 3, 0), (0, 0, 3), (2, 1, 0), (2, 0, 1),
                (0, 2, 1), (1, 2, 0), (1, 0, 2), (0, 1, 2), (1, 1, 1),
            )
        return homogeneous_multiindices(self.degree - 2, 3)


def family_from_name(name: str) -> ElementFamily:
    name = name.strip().lower()
    if name == "p3":
        return ElementFamily("general", 3)
    if name == "p4e8":
        return ElementFamily("general", 4)
    if name == "p4e6":
        return ElementFamily("p4e6", 4)
    if name == "p5e7":
        return ElementFamily("p5e7", 5)
    if name.startswith("general:"):
        return ElementFamily("general", int(name.split(":", 1)[1]))
    raise ValueError(f"unknown element name {name!r}")


def homogeneous_multiindices(degree: int, nvars: int) -> Tuple[Tuple[int, ...], ...]:
    """All exponent tuples of the given total degree, lexicographically
    descending (deterministic)."""
    if degree < 0:
        return ()
    out: List[Tuple[int, ...]] = []

    def rec(prefix, rem, k):
        if k == 1:
            out.append(prefix + (rem,))
            return
        for e in range(rem, -1, -1):
            rec(prefix + (e,), rem - e, k - 1)

    rec((), degree, nvars)
    return tuple(out)


def general_dof_count(l: int) -> int:
    """Closed-form DOF count (l^3 + 18 l^2 - l - 18)/6 of the general family."""
    return (l**3 + 18 * l**2 - l - 18) // 6


# ----------------------------------------------------------------------
# degrees of freedom


@dataclass(frozen=True)
class DofSpec:
    """One moment functional.

    ``monomial`` carries the entity pattern placed on the element's local
    coordinates; ``pattern`` keeps the printed per-entity exponent sequence
    it came from.  ``normal_sign`` is +1 when the functional differentiates
    along this element's outward normal.
    """

    kind: str  # "edge" | "face" | "cell" | "normal"
    entity: int
    monomial: Tuple[int, int, int, int]
    pattern: Tuple[int, ...]
    normal_sign: int = 1


def dof_list(
    family: ElementFamily,
    edge_orders: Optional[Sequence[Tuple[int, int]]] = None,
    face_orders: Optional[Sequence[Tuple[int, int, int]]] = None,
    normal_signs: Optional[Sequence[int]] = None,
) -> List[DofSpec]:
    """Ordered DOF functionals of the family.

    ``edge_orders``/``face_orders`` give each entity's vertices (local
    indices 0..3) in the order the moment patterns refer to; callers doing
    global assembly pass ascending-global-id orders so that both elements
    at a shared entity produce identical functionals.
    """
    edge_orders = tuple(tuple(e) for e in (edge_orders or EDGES))
    face_orders = tuple(tuple(f) for f in (face_orders or CYCLIC_FACES))
    normal_signs = tuple(normal_signs or (1, 1, 1, 1))
    for e, pair in enumerate(edge_orders):
        if tuple(sorted(pair)) != EDGES[e]:
            raise ValueError(f"edge order {pair} is not a permutation of edge {e}")
    for m, tri in enumerate(face_orders):
        if tuple(sorted(tri)) != FACES[m]:
            raise ValueError(f"face order {tri} is not a permutation of face {m}")

    def place(verts, pattern):
        mono = [0, 0, 0, 0]
        for v, p in zip(verts, pattern):
            mono[v] = p
        return tuple(mono)

    dofs: List[DofSpec] = []
    for e in range(6):
        for pat in family.edge_patterns():
            dofs.append(DofSpec("edge", e, place(edge_orders[e], pat), pat))
    for m in range(4):
        for pat in family.face_patterns():
            dofs.append(DofSpec("face", m, place(face_orders[m], pat), pat))
    for pat in family.cell_patterns():
        dofs.append(DofSpec("cell", 0, pat, pat))
    for m in range(4):
        for pat in family.normal_patterns():
            dofs.append(
                DofSpec("normal", m, place(face_orders[m], pat), pat, normal_signs[m])
            )
    return dofs


def dof_apply(
    dof: DofSpec,
    v,
    geom: SimplexGeometry,
    grad_v: Optional[Callable] = None,
    quad_degree: int = 19,
    scale_by_r: bool = False,
):
    """Apply one functional to a polynomial or a callable.

    Polynomials use the exact factorial moments (geometry enters only the
    normal-derivative direction); callables are integrated by quadrature of
    degree ``quad_degree`` and need ``grad_v`` for normal moments.  With
    ``scale_by_r`` the normal moment is multiplied by the vertex-face
    distance r_m, which keeps it rational on rational geometry.
    """
    if isinstance(v, BaryPoly):
        if dof.kind == "edge":
            return edge_moment_poly(v, dof.entity, dof.monomial)
        if dof.kind == "face":
            return face_moment_poly(v, dof.entity, dof.monomial)
        if dof.kind == "cell":
            return cell_moment_poly(v, dof.monomial)
        m = dof.entity
        if v.field == RATIONAL and not scale_by_r:
            raise ValueError(
                "unit normals are irrational; rational normal moments must "
                "be r_m-scaled"
            )
        total = Fraction(0) if v.field == RATIONAL else 0.0
        scale = geom.r2(m) if scale_by_r else geom.r(m)
        for s in range(4):
            part = v.partial(s)
            if part.is_zero():
                continue
            # n_m . grad lambda_s = -grad_dot(m, s) / |grad lambda_m|
            coef = -geom.grad_dot(m, s) * scale
            total += coef * face_moment_poly(part, m, dof.monomial)
        return dof.normal_sign * total

    # callable path
    if dof.kind == "cell":
        rule = rule_for_degree(3, quad_degree)
        bary = rule.points
        pts = geom.points_many(bary)
        mono = _eval_monomial(dof.monomial, bary)
        return 6.0 * float(rule.weights @ (np.asarray(v(pts)) * mono))
    if dof.kind == "edge":
        rule = rule_for_degree(1, quad_degree)
        bary = embed_in_tet(rule, "edge", dof.entity)
        pts = geom.points_many(bary)
        mono = _eval_monomial(dof.monomial, bary)
        return float(rule.weights @ (np.asarray(v(pts)) * mono))
    rule = rule_for_degree(2, quad_degree)
    bary = embed_in_tet(rule, "face", dof.entity)
    pts = geom.points_many(bary)
    mono = _eval_monomial(dof.monomial, bary)
    if dof.kind == "face":
        return 2.0 * float(rule.weights @ (np.asarray(v(pts)) * mono))
    if grad_v is None:
        raise ValueError("normal moment of a callable needs grad_v")
    n = geom.normal(dof.entity) * dof.normal_sign
    if scale_by_r:
        n = n * geom.r(dof.entity)
    g = np.asarray(grad_v(pts), dtype=float).reshape(-1, 3)
    return 2.0 * float(rule.weights @ ((g @ n) * mono))


def _eval_monomial(mono, bary: np.ndarray) -> np.ndarray:
    out = np.ones(bary.shape[0])
    for k in range(4):
        if mono[k]:
            out *= bary[:, k] ** mono[k]
    return out


# ----------------------------------------------------------------------
# shape-function spans


def face_bubble(t: int, field: str = RATIONAL) -> BaryPoly:
    """b_{F_t}: product of the three coordinates of face t."""
    out = BaryPoly.constant(1, field)
    for v in FACES[t]:
        out = out * BaryPoly.coordinate(v, field)
    return out


def monomial_span(degree: int, field: str = RATIONAL) -> List[BaryPoly]:
    """Homogeneous barycentric monomials of the given total degree: a basis
    of P_degree(T) since the coordinates sum to one."""
    return [
        BaryPoly.monomial(e, 1, field) for e in homogeneous_multiindices(degree, 4)
    ]


def _loworder_enrichment(family: ElementFamily, field: str) -> List[BaryPoly]:
    lam = [BaryPoly.coordinate(i, field) for i in range(4)]
    out: List[BaryPoly] = []
    if family.kind == "p4e6":
        for m in range(4):
            for t in range(4):
                if t == m:
                    continue
                out.append(lam[t] ** 2 * lam[m] ** 3 * (3 * lam[m] - 4))
        for m, t in BUBBLE_PAIRS_8:
            out.append(face_bubble(t, field) * lam[m] ** 2 * (3 * lam[m] - 4))
        return out
    # p5e7: leading parts of the printed degree-7 span
    for m in range(4):
        for t in range(4):
            if t == m:
                continue
            out.append(lam[t] ** 2 * lam[m] ** 4 * (66 * lam[m] - 120))
    for m in range(4):
        for t in range(4):
            if t == m:
                continue
            out.append(
                99 * lam[t] ** 2 * lam[m] ** 5
                - 165 * lam[t] ** 3 * lam[m] ** 4
                - 135 * lam[t] ** 2 * lam[m] ** 4
                + 180 * lam[t] ** 3 * lam[m] ** 3
            )
    for m, t in BUBBLE_PAIRS_8:
        out.append(face_bubble(t, field) * lam[m] ** 3 * (66 * lam[m] - 120))
    for m in range(4):
        i, j, _k = CYCLIC_FACES[m]
        out.append(lam[i] ** 2 * lam[j] * lam[m] ** 3 * (165 * lam[m] - 180))
    return out


def enrichment_span(
    family: ElementFamily, geom: SimplexGeometry, field: str = FLOAT
) -> List[BaryPoly]:
    """The high-order functions added to P_l.

    For the low-order families these are the printed polynomial lists (the
    shape space only depends on their span modulo P_l, so the pure leading
    terms are used).  For the general family each face contributes a basis
    of the subspace of ``b_F^2 P_{l-2}(T)`` on which the face value
    moments, the cell moments and the mean normal derivative all vanish;
    the kernel dimension d0 is guaranteed, so any defect signals a bug.
    """
    if family.kind in ("p4e6", "p5e7"):
        return _loworder_enrichment(family, field)
    if field != FLOAT:
        raise ValueError("general-family enrichment is built in float mode")
    l = family.degree
    d0 = l * (l - 1) // 2 - 1
    fgeom = geom.to_float()
    out: List[BaryPoly] = []
    qmonos = homogeneous_multiindices(l - 2, 4)
    for m in range(4):
        b2 = face_bubble(m, FLOAT) ** 2
        cols = [b2 * BaryPoly.monomial(e, 1.0, FLOAT) for e in qmonos]
        rows: List[List[float]] = []
        for pat in homogeneous_multiindices(l - 3, 3):
            extra = [0, 0, 0, 0]
            for v, p in zip(FACES[m], pat):
                extra[v] = p
            rows.append([face_moment_poly(c, m, tuple(extra)) for c in cols])
        for pat in homogeneous_multiindices(l - 4, 4):
            rows.append([cell_moment_poly(c, pat) for c in cols])
        mean_row = []
        for c in cols:
            val = 0.0
            for s in range(4):
                part = c.partial(s)
                if part.is_zero():
                    continue
                val += -float(fgeom.grad_dot(m, s)) * face_moment_poly(part, m)
            mean_row.append(val)
        rows.append(mean_row)
        kernel = scipy.linalg.null_space(np.array(rows))
        if kernel.shape[1] != d0:
            raise UnisolvenceError(
                f"face {m}: expected kernel dimension {d0}, got {kernel.shape[1]}"
            )
        for j in range(d0):
            acc = BaryPoly.zero(FLOAT)
            for k, c in enumerate(cols):
                if abs(kernel[k, j]) > 0.0:
                    acc = acc + c * float(kernel[k, j])
            out.append(acc)
    return out


def shape_span(
    family: ElementFamily, geom: SimplexGeometry, field: str = FLOAT
) -> List[BaryPoly]:
    base_field = field if family.kind != "general" else FLOAT
    return monomial_span(family.degree, base_field) + enrichment_span(
        family, geom, base_field
    )


# ----------------------------------------------------------------------
# reference element


@dataclass
class ReferenceElement:
    """One element family instantiated on one tetrahedron.

    ``nodal`` expresses each nodal basis function in the span:
    phi_j = sum_k nodal[k, j] * span[k].  In rational mode the normal DOFs
    are the r_m-scaled variants (kept rational); ``normal_scaled`` records
    this.
    """

    family: ElementFamily
    geometry: SimplexGeometry
    span: List[BaryPoly]
    dofs: List[DofSpec]
    nodal: object  # (n, n) ndarray in float mode, list of Fraction rows otherwise
    condition: float
    field: str = FLOAT
    normal_scaled: bool = False

    @property
    def ndofs(self) -> int:
        return len(self.dofs)

    def nodal_poly(self, j: int) -> BaryPoly:
        acc = BaryPoly.zero(self.field)
        for k, p in enumerate(self.span):
            c = self.nodal[k][j] if self.field == RATIONAL else self.nodal[k, j]
            if c != 0:
                acc = acc + p * c
        return acc

    def function_from_coeffs(self, coeffs) -> BaryPoly:
        acc = BaryPoly.zero(FLOAT)
        nod = np.asarray(self.nodal, dtype=float)
        span_w = nod @ np.asarray(coeffs, dtype=float)
        for k, p in enumerate(self.span):
            if span_w[k] != 0.0:
                acc = acc + p.to_float() * float(span_w[k])
        return acc


def dof_matrix(
    family: ElementFamily,
    geom: SimplexGeometry,
    dofs: Sequence[DofSpec],
    span: Sequence[BaryPoly],
    scale_by_r: bool = False,
):
    rows = []
    for d in dofs:
        rows.append([dof_apply(d, p, geom, scale_by_r=scale_by_r) for p in span])
    return rows


def build_reference_element(
    family: ElementFamily,
    geom: SimplexGeometry,
    edge_orders=None,
    face_orders=None,
    normal_signs=None,
    field: str = FLOAT,
) -> ReferenceElement:
    """Assemble and invert the DOF matrix; errors on (near-)singularity."""
    dofs = dof_list(family, edge_orders, face_orders, normal_signs)
    if field == RATIONAL:
        if geom.field != RATIONAL:
            raise ValueError("rational element build needs rational geometry")
        span = shape_span(family, geom, RATIONAL)
        if len(span) != len(dofs):
            raise UnisolvenceError("span/DOF count mismatch")
        mat = dof_matrix(family, geom, dofs, span, scale_by_r=True)
        nodal = _rational_inverse(mat)
        return ReferenceElement(
            family, geom, span, dofs, nodal, float("nan"), RATIONAL, True
        )
    fgeom = geom.to_float()
    span = shape_span(family, fgeom, FLOAT)
    if len(span) != len(dofs):
        raise UnisolvenceError("span/DOF count mismatch")
    m = np.array(dof_matrix(family, fgeom, dofs, span), dtype=float)
    cond = np.linalg.cond(m, 1)
    if not np.isfinite(cond) or cond > 1e12:
        raise UnisolvenceError(
            f"DOF matrix of {family.label} is singular or ill-conditioned "
            f"(cond ~ {cond:.3e}); check orientations and enrichment selection"
        )
    nodal = np.linalg.inv(m)
    # one Newton step tightens the duality residual to near round-off
    nodal = nodal @ (2.0 * np.eye(len(dofs)) - m @ nodal)
    return ReferenceElement(family, fgeom, span, dofs, nodal, float(cond), FLOAT)


def _rational_inverse(mat) -> List[List[Fraction]]:
    """Exact Gauss-Jordan inverse; raises UnisolvenceError if singular."""
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise UnisolvenceError("exactly singular DOF matrix")
        a[col], a[piv] = a[piv], a[col]
        inv_p = 1 / a[col][col]
        a[col] = [x * inv_p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def rational_determinant(mat) -> Fraction:
    """Fraction-free (Bareiss) determinant of a rational matrix."""
    n = len(mat)
    scale = Fraction(1)
    rows = []
    for row in mat:
        dens = [Fraction(x).denominator for x in row]
        lcm = 1
        for d in dens:
            lcm = lcm * d // math.gcd(lcm, d)
        scale /= lcm
        rows.append([int(Fraction(x) * lcm) for x in row])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            piv = next((r for r in range(k + 1, n) if rows[r][k] != 0), None)
            if piv is None:
                return Fraction(0)
            rows[k], rows[piv] = rows[piv], rows[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = (rows[i][j] * rows[k][k] - rows[i][k] * rows[k][j]) // prev
            rows[i][k] = 0
        prev = rows[k][k]
    return scale * sign * rows[n - 1][n - 1]


# ----------------------------------------------------------------------
# interpolation and tabulation


def interpolate(
    v: Callable,
    elem: ReferenceElement,
    grad_v: Optional[Callable] = None,
    quad_degree: Optional[int] = None,
) -> np.ndarray:
    """DOF coefficient vector of a smooth function.

    Reproduces any function of the shape space exactly (up to quadrature
    and round-off).
    """
    qd = quad_degree or (elem.family.max_degree + 12)
    return np.array(
        [dof_apply(d, v, elem.geometry, grad_v=grad_v, quad_degree=qd)
         for d in elem.dofs]
    )


class NodalTables:
    """Values/gradients/Hessians of all nodal basis functions at fixed
    barycentric points, contracted through the nodal coefficient matrix."""

    def __init__(self, elem: ReferenceElement, bary: np.ndarray):
        polys: List[BaryPoly] = []
        for p in elem.span:
            pf = p.to_float()
            polys.append(pf)
            polys.extend(pf.gradient_cartesian(elem.geometry))
            polys.extend(pf.hessian_cartesian(elem.geometry))
        expo_set = sorted({m for poly in polys for m in poly.terms})
        expos = np.array(expo_set, dtype=np.int64)
        index = {m: i for i, m in enumerate(expo_set)}
        coeff = np.zeros((len(polys), len(expo_set)))
        for r, poly in enumerate(polys):
            for mono, c in poly.terms.items():
                coeff[r, index[mono]] = c
        table = backends.monomial_table(expos, np.ascontiguousarray(bary))
        vals = (coeff @ table).reshape(len(elem.span), 10, bary.shape[0])
        nod = np.asarray(elem.nodal, dtype=float)
        full = np.einsum("kj,kcq->jcq", nod, vals)
        self.value = full[:, 0, :]
        self.grad = full[:, 1:4, :]
        self.hess = full[:, 4:10, :]
