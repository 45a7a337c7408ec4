"""Exact polynomial algebra in tetrahedral barycentric coordinates.

A polynomial is a sparse map from 4-tuple exponents (powers of the four
barycentric coordinates) to coefficients.  Two coefficient fields are
supported: exact rationals (``fractions.Fraction``) for verification work
and 64-bit floats for assembly.  No reduction by ``sum(lambda) == 1`` is
ever performed, so mixed-degree representations are kept literally as
constructed.

Entity moments of monomials have closed factorial forms on a simplex::

    (1/|e|) int_e  l1^a l2^b          ds = 1! a! b!       / (a+b+1)!
    (1/|F|) int_F  l1^a l2^b l3^c     dS = 2! a! b! c!    / (a+b+c+2)!
    (1/|T|) int_T  l1^a l2^b l3^c l4^d dx = 3! a! b! c! d! / (a+b+c+d+3)!

which makes value-moment functionals exact, geometry-free rational
computations in both fields.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Dict, Iterable, Sequence, Tuple

import numpy as np

MultiIndex4 = Tuple[int, int, int, int]

RATIONAL = "rational"
FLOAT = "float"

# Local entity conventions: face m is opposite vertex m, edges in fixed order.
FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

# Cyclic face vertex orders used by the explicit basis listings
# (0-based版 of F1=(2,3,4), F2=(3,4,1), F3=(4,1,2), F4=(1,2,3)).
CYCLIC_FACES = ((1, 2, 3), (2, 3, 0), (3, 0, 1), (0, 1, 2))


def _coerce(value, field: str):
    if field == RATIONAL:
        if isinstance(value, float):
            raise TypeError("float coefficient in rational polynomial")
        return Fraction(value)
    return float(value)


class BaryPoly:
    """Sparse polynomial in the four barycentric coordinates."""

    __slots__ = ("terms", "field")

    def __init__(self, terms: Dict[MultiIndex4, object], field: str = RATIONAL):
        if field not in (RATIONAL, FLOAT):
            raise ValueError(f"unknown scalar field {field!r}")
        self.field = field
        self.terms = {}
        for mono, coeff in terms.items():
            c = _coerce(coeff, field)
            if c != 0:
                self.terms[tuple(mono)] = c

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(field: str = RATIONAL) -> "BaryPoly":
        return BaryPoly({}, field)

    @staticmethod
    def constant(value, field: str = RATIONAL) -> "BaryPoly":
        return BaryPoly({(0, 0, 0, 0): value}, field)

    @staticmethod
    def coordinate(i: int, field: str = RATIONAL) -> "BaryPoly":
        """The coordinate function lambda_i, i in 0..3."""
        expo = [0, 0, 0, 0]
        expo[i] = 1
        return BaryPoly({tuple(expo): 1}, field)

    @staticmethod
    def monomial(expo: Sequence[int], coeff=1, field: str = RATIONAL) -> "BaryPoly":
        return BaryPoly({tuple(int(e) for e in expo): coeff}, field)

    # -- algebra ------------------------------------------------------

    def _check(self, other: "BaryPoly"):
        if self.field != other.field:
            raise TypeError("mixed scalar fields")

    def __add__(self, other):
        if not isinstance(other, BaryPoly):
            other = BaryPoly.constant(other, self.field)
        self._check(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            s = out.get(mono, 0) + coeff
            if s == 0:
                out.pop(mono, None)
            else:
                out[mono] = s
        res = BaryPoly.zero(self.field)
        res.terms = out
        return res

    def __neg__(self):
        res = BaryPoly.zero(self.field)
        res.terms = {m: -c for m, c in self.terms.items()}
        return res

    def __sub__(self, other):
        if not isinstance(other, BaryPoly):
            other = BaryPoly.constant(other, self.field)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, BaryPoly):
            c = _coerce(other, self.field)
            if c == 0:
                return BaryPoly.zero(self.field)
            res = BaryPoly.zero(self.field)
            res.terms = {m: coeff * c for m, coeff in self.terms.items()}
            return res
        self._check(other)
        out: Dict[MultiIndex4, object] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = (ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2], ma[3] + mb[3])
                s = out.get(mono, 0) + ca * cb
                if s == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = s
        res = BaryPoly.zero(self.field)
        res.terms = out
        return res

    __rmul__ = __mul__
    __radd__ = __add__

    def __rsub__(self, other):
        return (-self) + other

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = BaryPoly.constant(1, self.field)
        for _ in range(n):
            out = out * self
        return out

    def degree(self) -> int:
        """Maximum total degree of the stored monomials (0 for the zero poly)."""
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def to_float(self) -> "BaryPoly":
        if self.field == FLOAT:
            return self
        res = BaryPoly.zero(FLOAT)
        res.terms = {m: float(c) for m, c in self.terms.items()}
        return res

    # -- evaluation ---------------------------------------------------

    def eval(self, weights: Sequence) -> object:
        """Evaluate at barycentric weights (must sum to 1)."""
        w = list(weights)
        if len(w) != 4:
            raise ValueError("need 4 barycentric weights")
        s = w[0] + w[1] + w[2] + w[3]
        if self.field == RATIONAL:
            if s != 1:
                raise ValueError("barycentric weights must sum to 1 exactly")
        elif abs(float(s) - 1.0) > 1e-14:
            raise ValueError("barycentric weights must sum to 1 within 1e-14")
        total = Fraction(0) if self.field == RATIONAL else 0.0
        for mono, coeff in self.terms.items():
            v = coeff
            for x, p in zip(w, mono):
                if p:
                    v = v * x**p
            total += v
        return total

    def eval_many(self, bary: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation at an (n, 4) array of barycentric points."""
        vals = np.zeros(bary.shape[0])
        for mono, coeff in self.terms.items():
            term = np.full(bary.shape[0], float(coeff))
            for k in range(4):
                if mono[k]:
                    term *= bary[:, k] ** mono[k]
            vals += term
        return vals

    # -- calculus -----------------------------------------------------

    def partial(self, i: int) -> "BaryPoly":
        """d/d lambda_i, treating the four coordinates as independent."""
        out: Dict[MultiIndex4, object] = {}
        for mono, coeff in self.terms.items():
            p = mono[i]
            if p == 0:
                continue
            new = list(mono)
            new[i] = p - 1
            key = tuple(new)
            s = out.get(key, 0) + coeff * p
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s
        res = BaryPoly.zero(self.field)
        res.terms = out
        return res

    def restrict_to_face(self, m: int) -> "BaryPoly":
        """Restriction to face m (drop every term containing lambda_m)."""
        res = BaryPoly.zero(self.field)
        res.terms = {mo: c for mo, c in self.terms.items() if mo[m] == 0}
        return res

    def gradient_cartesian(self, geom: "SimplexGeometry") -> Tuple["BaryPoly", ...]:
        """Cartesian gradient via d/dx_k = sum_i (grad lambda_i)_k d/d lambda_i."""
        parts = [self.partial(i) for i in range(4)]
        out = []
        for k in range(3):
            acc = BaryPoly.zero(self.field)
            for i in range(4):
                g = geom.grad_lambda[i][k]
                if g != 0 and not parts[i].is_zero():
                    acc = acc + parts[i] * g
            out.append(acc)
        return tuple(out)

    def hessian_cartesian(self, geom: "SimplexGeometry") -> Tuple["BaryPoly", ...]:
        """Distinct Cartesian second derivatives (xx, xy, xz, yy, yz, zz)."""
        grads = self.gradient_cartesian(geom)
        out = []
        for k in range(3):
            gk = grads[k].gradient_cartesian(geom)
            for l in range(k, 3):
                out.append(gk[l])
        # order produced: xx, xy, xz, yy, yz, zz
        return tuple(out)


HESSIAN_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
FROBENIUS_WEIGHTS = (1.0, 2.0, 2.0, 1.0, 2.0, 1.0)


def polys_equal(p: BaryPoly, q: BaryPoly, tol: float = 0.0) -> bool:
    """Equality by evaluation on a deterministic barycentric grid.

    Representations of one function may differ term-wise, so comparison by
    coefficient maps would be wrong.
    """
    d = max(p.degree(), q.degree()) + 1
    if p.field == RATIONAL and q.field == RATIONAL:
        for a in range(d + 1):
            for b in range(d + 1 - a):
                for c in range(d + 1 - a - b):
                    w = (
                        Fraction(a, d),
                        Fraction(b, d),
                        Fraction(c, d),
                        Fraction(d - a - b - c, d),
                    )
                    if p.eval(w) != q.eval(w):
                        return False
        return True
    pf, qf = p.to_float(), q.to_float()
    for a in range(d + 1):
        for b in range(d + 1 - a):
            for c in range(d + 1 - a - b):
                w = (a / d, b / d, c / d, (d - a - b - c) / d)
                if abs(pf.eval(w) - qf.eval(w)) > tol:
                    return False
    return True


# ----------------------------------------------------------------------
# simplex geometry


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


class SimplexGeometry:
    """Metric data of one tetrahedron.

    Exact quantities (vertices, grad lambda, volume, pairwise gradient dot
    products) are kept in the requested field; lengths, areas and unit
    normals involve square roots and are exposed as floats only.
    """

    def __init__(self, vertices, field: str = FLOAT):
        if field not in (RATIONAL, FLOAT):
            raise ValueError(f"unknown scalar field {field!r}")
        self.field = field
        conv = Fraction if field == RATIONAL else float
        self.vertices = [tuple(conv(x) for x in v) for v in vertices]
        if len(self.vertices) != 4:
            raise ValueError("a tetrahedron needs 4 vertices")
        v0 = self.vertices[0]
        e = [tuple(self.vertices[i + 1][k] - v0[k] for k in range(3)) for i in range(3)]
        det = _det3(e)
        if det <= 0:
            raise ValueError("tetrahedron is degenerate or negatively oriented")
        self.volume = det / 6 if field == RATIONAL else det / 6.0
        bbox = max(
            max(abs(v[k] - w[k]) for v in self.vertices for w in self.vertices)
            for k in range(3)
        )
        if float(self.volume) < 1e-14 * float(bbox) ** 3:
            raise ValueError("tetrahedron is numerically degenerate")
        # grad lambda_{i+1} = row i of inverse(e); grad lambda_0 = -sum
        inv = [
            [
                (e[(i + 1) % 3][(k + 1) % 3] * e[(i + 2) % 3][(k + 2) % 3]
                 - e[(i + 1) % 3][(k + 2) % 3] * e[(i + 2) % 3][(k + 1) % 3]) / det
                for i in range(3)
            ]
            for k in range(3)
        ]
        # inv above is (e^{-1})^T rows indexed by k; transpose into rows by i
        grads = [tuple(inv[k][i] for k in range(3)) for i in range(3)]
        g0 = tuple(-(grads[0][k] + grads[1][k] + grads[2][k]) for k in range(3))
        self.grad_lambda = [g0] + grads

    # -- derived metric data -------------------------------------------

    def grad_dot(self, i: int, j: int):
        """grad lambda_i . grad lambda_j, exact in rational mode."""
        gi, gj = self.grad_lambda[i], self.grad_lambda[j]
        return gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2]

    def r2(self, m: int):
        """r_m^2 = 1/|grad lambda_m|^2 (rational whenever the geometry is)."""
        return 1 / self.grad_dot(m, m)

    def r(self, m: int) -> float:
        """Distance from vertex m to face m."""
        return 1.0 / math.sqrt(float(self.grad_dot(m, m)))

    def normal(self, m: int) -> np.ndarray:
        """Outward unit normal of face m (= -grad lambda_m normalized)."""
        g = np.array([float(x) for x in self.grad_lambda[m]])
        return -g / np.linalg.norm(g)

    def face_area(self, m: int) -> float:
        # r_m |F_m| = 3 |T|
        return 3.0 * float(self.volume) / self.r(m)

    def edge_length(self, e: int) -> float:
        a, b = EDGES[e]
        va, vb = self.vertices[a], self.vertices[b]
        return math.sqrt(sum((float(va[k]) - float(vb[k])) ** 2 for k in range(3)))

    def edge_vertices(self, e: int) -> Tuple[int, int]:
        return EDGES[e]

    def face_vertices(self, m: int) -> Tuple[int, int, int]:
        return FACES[m]

    def point(self, bary: Sequence) -> Tuple:
        """Physical point of given tet barycentric coordinates."""
        return tuple(
            sum(bary[i] * self.vertices[i][k] for i in range(4)) for k in range(3)
        )

    def points_many(self, bary: np.ndarray) -> np.ndarray:
        verts = np.array([[float(x) for x in v] for v in self.vertices])
        return bary @ verts

    def to_float(self) -> "SimplexGeometry":
        if self.field == FLOAT:
            return self
        return SimplexGeometry(
            [[float(x) for x in v] for v in self.vertices], FLOAT
        )


REFERENCE_TET = (
    (0, 0, 0),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
)

# Rational tet whose four |grad lambda| are rational, so unit normals and
# vertex-face distances stay in Q: exact checks of normal-moment identities
# run on it without any field extension.
PYTHAGOREAN_TET = (
    (0, 0, 0),
    (1, 0, 0),
    (Fraction(0), Fraction(1, 2), Fraction(0)),
    (Fraction(0), Fraction(0), Fraction(1, 2)),
)


def reference_geometry(field: str = RATIONAL) -> SimplexGeometry:
    return SimplexGeometry(REFERENCE_TET, field)


# ----------------------------------------------------------------------
# exact simplex moments


def unit_moment(expo: Sequence[int], dim: int, field: str = RATIONAL):
    """Measure-normalized moment of a monomial over a dim-simplex.

    ``expo`` holds the exponents of the dim+1 barycentric coordinates of the
    entity.  Returns dim! * prod(e!) / (sum(e) + dim)!.
    """
    e = [int(x) for x in expo]
    if len(e) != dim + 1 or any(x < 0 for x in e):
        raise ValueError("bad exponent tuple")
    num = math.factorial(dim)
    for x in e:
        num *= math.factorial(x)
    den = math.factorial(sum(e) + dim)
    return Fraction(num, den) if field == RATIONAL else num / den


def exact_moment(mi: MultiIndex4, entity: str, index: int, geom: SimplexGeometry):
    """Integral of the monomial lambda^mi over an entity of ``geom``.

    entity is 'edge', 'face' or 'cell'; ``index`` the local entity id.  The
    monomial must be supported on the entity's coordinates.  Includes the
    physical measure (|e|, |F| and |T| factors), hence returns a float for
    edge/face entities even in rational mode.
    """
    mi = tuple(int(x) for x in mi)
    if entity == "cell":
        local = mi
        base = unit_moment(local, 3, geom.field)
        return base * geom.volume
    if entity == "face":
        verts = FACES[index]
        off = [k for k in range(4) if k not in verts]
        if any(mi[k] for k in off):
            raise ValueError("monomial not supported on the face")
        base = unit_moment([mi[k] for k in verts], 2, FLOAT)
        return base * geom.face_area(index)
    if entity == "edge":
        verts = EDGES[index]
        off = [k for k in range(4) if k not in verts]
        if any(mi[k] for k in off):
            raise ValueError("monomial not supported on the edge")
        base = unit_moment([mi[k] for k in verts], 1, FLOAT)
        return base * geom.edge_length(index)
    raise ValueError(f"unknown entity {entity!r}")


def face_moment_poly(p: BaryPoly, m: int, extra: MultiIndex4 = (0, 0, 0, 0)):
    """(1/|F_m|) int_{F_m} p * lambda^extra dS, exact, geometry-free.

    Terms carrying the off-face coordinate vanish on the face and are
    dropped; the remainder is summed through the factorial formula.
    """
    verts = FACES[m]
    if extra[m]:
        raise ValueError("extra monomial not supported on the face")
    total = Fraction(0) if p.field == RATIONAL else 0.0
    for mono, coeff in p.terms.items():
        if mono[m]:
            continue
        e = [mono[k] + extra[k] for k in verts]
        total += coeff * unit_moment(e, 2, p.field)
    return total


def edge_moment_poly(p: BaryPoly, e: int, extra: MultiIndex4 = (0, 0, 0, 0)):
    """(1/|e|) int_e p * lambda^extra ds, exact, geometry-free."""
    a, b = EDGES[e]
    off = [k for k in range(4) if k not in (a, b)]
    total = Fraction(0) if p.field == RATIONAL else 0.0
    for mono, coeff in p.terms.items():
        if any(mono[k] for k in off):
            continue
        total += coeff * unit_moment((mono[a] + extra[a], mono[b] + extra[b]), 1, p.field)
    return total


def cell_moment_poly(p: BaryPoly, extra: MultiIndex4 = (0, 0, 0, 0)):
    """(1/|T|) int_T p * lambda^extra dx, exact, geometry-free."""
    total = Fraction(0) if p.field == RATIONAL else 0.0
    for mono, coeff in p.terms.items():
        e = tuple(mono[k] + extra[k] for k in range(4))
        total += coeff * unit_moment(e, 3, p.field)
    return total
