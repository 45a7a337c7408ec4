"""Transcriptions of the explicit nodal bases of the two low-order families.

Every function here follows the printed closed forms literally; the
printed material contains several suspected typos (tracked in NOTES and
returned alongside the polynomials), so a "corrected" variant is built
for the affected entries as well.  Nothing in this module is trusted:
the verification layer evaluates each function against every degree of
freedom and reports which variant, if any, satisfies its duality pattern.

Vertex/face conventions (0-based): face m is opposite vertex m and its
vertices are listed cyclically, CYCLIC_FACES[m]; edge e has vertices
EDGES[e] with ascending local index; normal-moment patterns are indexed
in the order listed by the corresponding family in `element`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .barypoly import (
    CYCLIC_FACES,
    EDGES,
    FLOAT,
    RATIONAL,
    BaryPoly,
    SimplexGeometry,
)
from .element import face_bubble

NOTES = [
    "N4 l=1: the term -10*phi~^{(4)}_{m,k+4} lacks the N superscript; read "
    "as phi~^{(N,4)}_{m,k+4}",
    "E4 t=2: the face-j group is printed without its 1/r_j prefix",
    "E4 t=2: both trailing direction terms are printed with n_jtilde; the "
    "first should carry n_itilde",
    "E4 t=3: the face-j group ends in 2*phi^{(N,4)}_{i,tau_i(jtilde)+3}; "
    "symmetry with t=1 wants face j there",
    "N5: phi^{(N,5)}_{m,2} is printed twice; the second occurrence is "
    "checked against the l=3 duality pattern",
    "T5: the face-j and face-k groups open with 18*phi^{(N,5)}_{.,1}; the "
    "face-i group uses tau_i(m), so tau is restored there",
    "E5 t=1,2: the ' 2(tau+1)+sgn(...)' moment indices cannot reproduce the "
    "printed sigma examples for every vertex pair; the corrected variant "
    "uses the sigma lookup",
]


def _lam(i: int, field: str) -> BaryPoly:
    return BaryPoly.coordinate(i, field)


# ----------------------------------------------------------------------
# the raw (non-dual) bubble functions


def tilde_n4(m: int, which: Tuple, field: str = RATIONAL) -> BaryPoly:
    """phi~^(N,4): ('se',), ('v', t), or ('b', t) for the three kinds."""
    lm = _lam(m, field)
    if which[0] == "se":
        q = Fraction(1, 4)
        return (35 * lm**4 - 60 * lm**3 + 30 * lm**2 - 4 * lm) * (
            q if field == RATIONAL else 0.25
        )
    g = 42 * lm**3 - 56 * lm**2 + 21 * lm - 2
    half = Fraction(1, 2) if field == RATIONAL else 0.5
    if which[0] == "v":
        return _lam(which[1], field) ** 2 * lm * g * half
    return face_bubble(which[1], field) * g * half


def tilde_n5(m: int, which: Tuple, field: str = RATIONAL) -> BaryPoly:
    """phi~^(N,5): ('se',), ('v', t), ('w', t) [=4+t], ('b', t) [=8+t],
    ('c',) [=13]."""
    lm = _lam(m, field)
    fifth = Fraction(-1, 5) if field == RATIONAL else -0.2
    quarter = Fraction(1, 4) if field == RATIONAL else 0.25
    if which[0] == "se":
        return lm * (126 * lm**4 - 280 * lm**3 + 210 * lm**2 - 60 * lm + 5) * fifth
    if which[0] == "v":
        lt = _lam(which[1], field)
        return -(lt**2 * lm * (66 * lm**4 - 120 * lm**3 + 72 * lm**2 - 16 * lm + 1))
    if which[0] == "w":
        lt = _lam(which[1], field)
        inner = (
            99 * lm**4 - 165 * lm**3 * lt - 135 * lm**3 + 180 * lm**2 * lt
            + 54 * lm**2 - 54 * lt * lm - 6 * lm + 4 * lt
        )
        return -(lt**2 * lm * inner) * quarter
    if which[0] == "b":
        return -(
            face_bubble(which[1], field)
            * (66 * lm**4 - 120 * lm**3 + 72 * lm**2 - 16 * lm + 1)
        )
    i, _j, k = CYCLIC_FACES[m]
    return (
        _lam(i, field) * face_bubble(k, field)
        * (165 * lm**3 - 180 * lm**2 + 54 * lm - 4)
    ) * quarter


def tilde_e4(e: int, t: int, field: str = RATIONAL) -> BaryPoly:
    i, j = EDGES[e]
    li, lj = _lam(i, field), _lam(j, field)
    be = li * lj
    if t == 0:
        inner = 7 * li**2 - 6 * li + 1
    elif t == 1:
        inner = 21 * li * lj - 6 * li - 6 * lj + 2
    else:
        inner = 7 * lj**2 - 6 * lj + 1
    return 60 * be * inner


def tilde_f4(m: int, t: int, field: str = RATIONAL) -> BaryPoly:
    x = _lam(CYCLIC_FACES[m][t], field)
    return 180 * face_bubble(m, field) * (7 * x - 2)


def tilde_t4(field: str = RATIONAL) -> BaryPoly:
    out = BaryPoly.constant(840, field)
    for v in range(4):
        out = out * _lam(v, field)
    return out


def tilde_e5(e: int, t: int, field: str = RATIONAL) -> BaryPoly:
    i, j = EDGES[e]
    li, lj = _lam(i, field), _lam(j, field)
    be = li * lj
    if t == 0:
        inner = 42 * li**3 - 56 * li**2 + 21 * li - 2
    elif t == 1:
        inner = 42 * lj**3 - 56 * lj**2 + 21 * lj - 2
    elif t == 2:
        inner = (
            252 * li**2 * lj - 168 * li * lj - 56 * li**2 + 42 * li + 21 * lj - 6
        )
    else:
        inner = (
            252 * lj**2 * li - 168 * li * lj - 56 * lj**2 + 42 * lj + 21 * li - 6
        )
    return 60 * be * inner


def tilde_f5(m: int, t: int, field: str = RATIONAL) -> BaryPoly:
    i, j, k = (_lam(v, field) for v in CYCLIC_FACES[m])
    bf = face_bubble(m, field)

    def f1(x):
        return 12 * x**2 - 8 * x + 1

    def f2(x, y):
        return 18 * x * y - 4 * x - 4 * y + 1

    if t < 3:
        return 1260 * bf * f1((i, j, k)[t])
    pair = ((i, j), (i, k), (j, k))[t - 3]
    return 2520 * bf * f2(*pair)


def tilde_t5(m: int, field: str = RATIONAL) -> BaryPoly:
    out = BaryPoly.constant(3360, field)
    for v in range(4):
        out = out * _lam(v, field)
    return out * (9 * _lam(m, field) - 2)


# ----------------------------------------------------------------------
# geometry scalars, exact when the tetrahedron allows it


def fraction_sqrt(q: Fraction) -> Optional[Fraction]:
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


class GeomScalars:
    """r_m and normal dot products over a geometry, in its own field.

    Rational mode needs every |grad lambda_m| to be rational (true for the
    'Pythagorean' tetrahedron used by the exact checks).
    """

    def __init__(self, geom: SimplexGeometry):
        self.geom = geom
        self.field = geom.field
        if self.field == RATIONAL:
            self._r = []
            for m in range(4):
                root = fraction_sqrt(geom.r2(m))
                if root is None:
                    raise ValueError(
                        "geometry has irrational vertex-face distances; exact "
                        "appendix checks need a rational-normal tetrahedron"
                    )
                self._r.append(root)
        else:
            self._r = [geom.r(m) for m in range(4)]

    def r(self, m: int):
        return self._r[m]

    def inv_r(self, m: int):
        return 1 / self._r[m]

    def ndot(self, a: int, b: int):
        """n_a . n_b = (grad lambda_a . grad lambda_b) r_a r_b."""
        if a == b:
            return Fraction(1) if self.field == RATIONAL else 1.0
        return self.geom.grad_dot(a, b) * self._r[a] * self._r[b]


def _combo(field: str, terms) -> BaryPoly:
    acc = BaryPoly.zero(field)
    for scalar, poly in terms:
        if scalar != 0:
            acc = acc + poly * scalar
    return acc


def tau(face: int, vertex: int) -> int:
    """0-based position of a vertex in the printed face tuple.

    The printed example tau_4(1)=3 contradicts the sigma examples, which
    all confirm position-in-tuple; the sigma-consistent reading is used.
    """
    return CYCLIC_FACES[face].index(vertex)


_SQ_LIN = {(0, 1): 3, (0, 2): 4, (1, 2): 5, (1, 0): 6, (2, 0): 7, (2, 1): 8}


def sigma(face: int, t_vertex: int, l_vertex: int) -> int:
    """0-based moment index of the monomial lambda_t^2 lambda_l on a face
    (degree-5 normal patterns)."""
    return _SQ_LIN[(tau(face, t_vertex), tau(face, l_vertex))]


def _others(i: int, j: int) -> Tuple[int, int]:
    rest = [v for v in range(4) if v not in (i, j)]
    return rest[0], rest[1]


# ----------------------------------------------------------------------
# dual bases


@dataclass
class AppendixBasis:
    """Printed nodal basis aligned with the element's DOF order (edge
    blocks, face blocks, cell block, normal blocks).  ``corrected`` holds
    the typo-amended variant for indices where it differs."""

    functions: List[BaryPoly]
    corrected: Dict[int, BaryPoly] = dc_field(default_factory=dict)
    labels: List[str] = dc_field(default_factory=list)


def _n4_dual(g: GeomScalars, field: str) -> List[List[BaryPoly]]:
    out = []
    for m in range(4):
        i, j, k = CYCLIC_FACES[m]
        t0 = tilde_n4(m, ("se",), field)
        tv = {v: tilde_n4(m, ("v", v), field) for v in (i, j, k)}
        tb = {v: tilde_n4(m, ("b", v), field) for v in (i, j, k)}
        rm = g.r(m)
        rows = [
            _combo(field, [(6, t0), (30, tv[i]), (-60, tb[j]), (-60, tb[k])]),
            _combo(field, [(-24, t0), (30, tv[i]), (60, tv[j]), (30, tv[k]), (60, tb[j])]),
            _combo(field, [(-24, t0), (30, tv[i]), (30, tv[j]), (60, tv[k]), (60, tb[k])]),
            _combo(field, [(132, t0), (-120, tv[i]), (-180, tv[j]), (-180, tv[k]),
                           (-300, tb[j]), (-300, tb[k])]),
            _combo(field, [(-18, t0), (-30, tv[i]), (30, tv[j]), (-30, tv[k]), (300, tb[j])]),
            _combo(field, [(-18, t0), (-30, tv[i]), (-30, tv[j]), (30, tv[k]), (300, tb[k])]),
        ]
        out.append([p * rm for p in rows])
    return out


def _n5_btilde(m: int, kind: int, field: str) -> BaryPoly:
    i, j, k = CYCLIC_FACES[m]
    t0 = tilde_n5(m, ("se",), field)
    tv = {v: tilde_n5(m, ("v", v), field) for v in (i, j, k)}
    tw = {v: tilde_n5(m, ("w", v), field) for v in (i, j, k)}
    tb = {v: tilde_n5(m, ("b", v), field) for v in (i, j, k)}
    if kind == 1:
        return _combo(field, [(240, t0), (-270, tv[i]), (-1620, tv[j]), (-270, tv[k]),
                              (1680, tw[j]), (-540, tb[j])])
    return _combo(field, [(30, t0), (1350, tv[i]), (-1680, tw[i]),
                          (-540, tb[j]), (-540, tb[k])])


def _n5_dual(g: GeomScalars, field: str) -> List[List[BaryPoly]]:
    out = []
    for m in range(4):
        i, j, k = CYCLIC_FACES[m]
        t0 = tilde_n5(m, ("se",), field)
        tv = {v: tilde_n5(m, ("v", v), field) for v in (i, j, k)}
        tw = {v: tilde_n5(m, ("w", v), field) for v in (i, j, k)}
        tb = {v: tilde_n5(m, ("b", v), field) for v in (i, j, k)}
        tc = tilde_n5(m, ("c",), field)
        rm = g.r(m)
        bj = _n5_btilde(j, 1, field) * g.r(j)
        bk = _n5_btilde(k, 2, field) * g.r(k)
        def base(terms):
            return _combo(field, terms) * rm

        rows = [
            base([(-10, t0), (-450, tv[i]), (560, tw[i]), (180, tb[j]), (180, tb[k])]),
            base([(80, t0), (-90, tv[i]), (-540, tv[j]), (-90, tv[k]),
                  (560, tw[j]), (-180, tb[j])]),
            # printed a second time with label l=2; slotted at l=3
            base([(80, t0), (-90, tv[i]), (-90, tv[j]), (-540, tv[k]),
                  (560, tw[k]), (-180, tb[k])]),
            base([(60, t0), (-360, tv[i]), (90, tv[j]), (-90, tv[k]),
                  (180, tb[j]), (-2160, tb[k]), (5040, tc)]) + bj + bk,
            base([(60, t0), (4680, tv[i]), (-90, tv[j]), (90, tv[k]), (-5040, tw[i]),
                  (-2160, tb[j]), (180, tb[k]), (-5040, tc)]) - bj - bk,
            base([(-180, t0), (-1530, tv[i]), (3240, tv[j]), (-1350, tv[k]),
                  (1680, tw[i]), (-3360, tw[j]), (1680, tw[k]),
                  (2160, tb[j]), (-2700, tb[k]), (5040, tc)]) + bj + bk,
            base([(-690, t0), (2520, tv[i]), (2070, tv[j]), (2340, tv[k]),
                  (-1680, tw[i]), (-1680, tw[j]), (-1680, tw[k]),
                  (-180, tb[j]), (2700, tb[k]), (-5040, tc)]) - bj - bk,
            base([(-690, t0), (-2520, tv[i]), (2340, tv[j]), (2070, tv[k]),
                  (3360, tw[i]), (-1680, tw[j]), (-1680, tw[k]),
                  (2700, tb[j]), (-180, tb[k]), (5040, tc)]) + bj + bk,
            base([(-180, t0), (3510, tv[i]), (-1350, tv[j]), (3240, tv[k]),
                  (-3360, tw[i]), (1680, tw[j]), (-3360, tw[k]),
                  (-2700, tb[j]), (2160, tb[k]), (-5040, tc)]) - bj - bk,
            base([(2400, t0), (-8820, tv[i]), (-8820, tv[j]), (-8820, tv[k]),
                  (6720, tw[i]), (6720, tw[j]), (6720, tw[k])]),
        ]
        out.append(rows)
    return out


def appendix_basis_p4e6(geom: SimplexGeometry) -> AppendixBasis:
    """All 55 printed basis functions of the P4+20P6 element, ordered as
    the element's DOF list (18 E, 12 F, 1 T, 24 N)."""
    field = geom.field
    g = GeomScalars(geom)
    n = _n4_dual(g, field)

    t_fun = tilde_t4(field)
    for m in range(4):
        t_fun = t_fun + _combo(field, [(2 * g.inv_r(m), n[m][l]) for l in range(3)])
        t_fun = t_fun + _combo(
            field, [(Fraction(4, 3) * g.inv_r(m) if field == RATIONAL
                     else 4.0 / 3.0 * g.inv_r(m), n[m][l]) for l in range(3, 6)]
        )

    f_funs: List[BaryPoly] = []
    for m in range(4):
        i, j, k = CYCLIC_FACES[m]
        ri, rj, rk, rm = (g.inv_r(v) for v in (i, j, k, m))
        f_funs.append(
            tilde_f4(m, 0, field)
            - _combo(field, [(6 * ri, n[i][0]), (6 * ri, n[i][1]), (2 * ri, n[i][2]),
                             (2 * ri, n[i][3]), (2 * ri, n[i][4]), (4 * ri, n[i][5])])
            + _combo(field, [(6 * rj, n[j][2]), (rj, n[j][3]), (2 * rj, n[j][4])])
            + _combo(field, [(6 * rk, n[k][1]), (2 * rk, n[k][3]), (rk, n[k][5])])
            - _combo(field, [
                (2 * g.ndot(m, i) * ri + 6 * rm, n[m][0]),
                (g.ndot(m, k) * rk + 2 * rm, n[m][4]),
                (g.ndot(m, j) * rj + 2 * rm, n[m][5]),
            ])
        )
        f_funs.append(
            tilde_f4(m, 1, field)
            - _combo(field, [(6 * rj, n[j][0]), (2 * rj, n[j][1]), (6 * rj, n[j][2]),
                             (2 * rj, n[j][3]), (4 * rj, n[j][4]), (2 * rj, n[j][5])])
            + _combo(field, [(6 * rk, n[k][2]), (2 * rk, n[k][3]), (rk, n[k][4])])
            + _combo(field, [(6 * ri, n[i][0]), (ri, n[i][4]), (2 * ri, n[i][5])])
            - _combo(field, [
                (2 * g.ndot(m, j) * rj + 6 * rm, n[m][1]),
                (g.ndot(m, k) * rk + 2 * rm, n[m][3]),
                (g.ndot(m, i) * ri + 2 * rm, n[m][5]),
            ])
        )
        f_funs.append(
            tilde_f4(m, 2, field)
            - _combo(field, [(2 * rk, n[k][0]), (6 * rk, n[k][1]), (6 * rk, n[k][2]),
                             (4 * rk, n[k][3]), (2 * rk, n[k][4]), (2 * rk, n[k][5])])
            + _combo(field, [(6 * ri, n[i][1]), (ri, n[i][3]), (2 * ri, n[i][5])])
            + _combo(field, [(6 * rj, n[j][0]), (2 * rj, n[j][4]), (rj, n[j][5])])
            - _combo(field, [
                (2 * g.ndot(m, k) * rk + 6 * rm, n[m][2]),
                (g.ndot(m, j) * rj + 2 * rm, n[m][3]),
                (g.ndot(m, i) * ri + 2 * rm, n[m][4]),
            ])
        )

    e_funs: List[BaryPoly] = []
    corrected: Dict[int, BaryPoly] = {}
    labels: List[str] = []
    for e in range(6):
        i, j = EDGES[e]
        ti, tj = _others(i, j)
        ri, rj = g.inv_r(i), g.inv_r(j)

        def tpos(face, v):
            return tau(face, v)

        e1 = (
            tilde_e4(e, 0, field)
            + _combo(field, [
                (6 * ri, n[i][tpos(i, j)]), (2 * ri, n[i][tpos(i, ti)]),
                (2 * ri, n[i][tpos(i, tj)]), (ri, n[i][tpos(i, j) + 3]),
                (2 * ri, n[i][tpos(i, ti) + 3]), (2 * ri, n[i][tpos(i, tj) + 3]),
            ])
            + _combo(field, [(2 * rj, n[j][tpos(j, i)])])
            + _combo(field, [
                (2 * (g.ndot(i, ti) * ri + g.ndot(j, ti) * rj), n[ti][tpos(ti, i)]),
                (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj), n[tj][tpos(tj, i)]),
            ])
        )
        # t=2: printed without 1/r_j on the face-j group and with n_jtilde
        # twice in the direction terms
        e2_lit = (
            tilde_e4(e, 1, field)
            + _combo(field, [
                (12 * ri, n[i][tpos(i, j)]),
                (2 * ri, n[i][tpos(i, ti) + 3]), (2 * ri, n[i][tpos(i, tj) + 3]),
            ])
            + _combo(field, [
                (12, n[j][tpos(j, i)]),
                (2, n[j][tpos(j, ti) + 3]), (2, n[j][tpos(j, tj) + 3]),
            ])
            + _combo(field, [
                (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj), n[ti][tpos(ti, tj) + 3]),
                (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj), n[tj][tpos(tj, ti) + 3]),
            ])
        )
        e2_fix = (
            tilde_e4(e, 1, field)
            + _combo(field, [
                (12 * ri, n[i][tpos(i, j)]),
                (2 * ri, n[i][tpos(i, ti) + 3]), (2 * ri, n[i][tpos(i, tj) + 3]),
            ])
            + _combo(field, [
                (12 * rj, n[j][tpos(j, i)]),
                (2 * rj, n[j][tpos(j, ti) + 3]), (2 * rj, n[j][tpos(j, tj) + 3]),
            ])
            + _combo(field, [
                (2 * (g.ndot(i, ti) * ri + g.ndot(j, ti) * rj), n[ti][tpos(ti, tj) + 3]),
                (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj), n[tj][tpos(tj, ti) + 3]),
            ])
        )
        # t=3: printed face-j group ends on a face-i term
        e3_lit = (
            tilde_e4(e, 2, field)
            + _combo(field, [
                (6 * rj, n[j][tpos(j, i)]), (2 * rj, n[j][tpos(j, ti)]),
                (2 * rj, n[j][tpos(j, tj)]), (rj, n[j][tpos(j, i) + 3]),
                (2 * rj, n[j][tpos(j, ti) + 3]), (2 * rj, n[i][tpos(i, tj) + 3]),
            ])
            + _combo(field, [(2 * ri, n[i][tpos(i, j)])])
            + _combo(field, [
                (2 * (g.ndot(i, ti) * ri + g.ndot(j, ti) * rj), n[ti][tpos(ti, j)]),
                (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj), n[tj][tpos(tj, j)]),
            ])
        )
        e3_fix = (
            tilde_e4(e, 2, field)
            + _combo(field, [
                (6 * rj, n[j][tpos(j, i)]), (2 * rj, n[j][tpos(j, ti)]),
                (2 * rj, n[j][tpos(j, tj)]), (rj, n[j][tpos(j, i) + 3]),
                (2 * rj, n[j][tpos(j, ti) + 3]), (2 * rj, n[j][tpos(j, tj) + 3]),
            ])
            + _combo(field, [(2 * ri, n[i][tpos(i, j)])])
            + _combo(field, [
                (2 * (g.ndot(i, ti) * ri + g.ndot(j, ti) * rj), n[ti][tpos(ti, j)]),
                (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj), n[tj][tpos(tj, j)]),
            ])
        )
        base = len(e_funs)
        e_funs.extend([e1, e2_lit, e3_lit])
        corrected[base + 1] = e2_fix
        corrected[base + 2] = e3_fix

    funcs = e_funs + f_funs + [t_fun]
    labels = (
        [f"E4[e={e},t={t}]" for e in range(6) for t in range(3)]
        + [f"F4[m={m},t={t}]" for m in range(4) for t in range(3)]
        + ["T4"]
    )
    for m in range(4):
        funcs.extend(n[m])
        labels.extend([f"N4[m={m},l={l}]" for l in range(6)])
    return AppendixBasis(funcs, corrected, labels)


def appendix_basis_p5e7(geom: SimplexGeometry) -> AppendixBasis:
    """All 92 printed basis functions of the P5+36P7 element (24 E, 24 F,
    4 T, 40 N) with corrected variants for the flagged entries."""
    field = geom.field
    g = GeomScalars(geom)
    n = _n5_dual(g, field)

    t_funs: List[BaryPoly] = []
    t_corr: Dict[int, BaryPoly] = {}
    for m in range(4):
        i, j, k = CYCLIC_FACES[m]
        ri, rj, rk, rm = (g.inv_r(v) for v in (i, j, k, m))
        third = Fraction(1, 3) if field == RATIONAL else 1.0 / 3.0
        own = _combo(field, [
            (6, n[m][0]), (6, n[m][1]), (6, n[m][2]),
            (3, n[m][3]), (3, n[m][4]), (3, n[m][5]), (3, n[m][6]),
            (3, n[m][7]), (3, n[m][8]), (2, n[m][9]),
        ]) * (4 * third * rm)

        def group(face, a, b, first_idx):
            # a, b: the other two faces seen from `face`
            return _combo(field, [
                (18, n[face][first_idx]),
                (6, n[face][sigma(face, m, a)]), (6, n[face][sigma(face, m, b)]),
                (3, n[face][sigma(face, a, m)]), (3, n[face][sigma(face, b, m)]),
                (2, n[face][9]),
            ])

        lit = (
            tilde_t5(m, field) - own
            + group(i, j, k, tau(i, m)) * (2 * third * ri)
            + group(j, i, k, 0) * (2 * third * rj)
            + group(k, i, j, 0) * (2 * third * rk)
        )
        fix = (
            tilde_t5(m, field) - own
            + group(i, j, k, tau(i, m)) * (2 * third * ri)
            + group(j, i, k, tau(j, m)) * (2 * third * rj)
            + group(k, i, j, tau(k, m)) * (2 * third * rk)
        )
        t_funs.append(lit)
        if tau(j, m) != 0 or tau(k, m) != 0:
            t_corr[len(t_funs) - 1] = fix

    f_funs: List[BaryPoly] = []
    for m in range(4):
        i, j, k = CYCLIC_FACES[m]
        ri, rj, rk = (g.inv_r(v) for v in (i, j, k))
        nim, njm, nkm = g.ndot(i, m), g.ndot(j, m), g.ndot(k, m)
        f_funs.append(
            tilde_f5(m, 0, field)
            + _combo(field, [(12 * ri, n[i][0]), (12 * ri, n[i][1]), (3 * ri, n[i][2]),
                             (6 * ri, n[i][3]), (3 * ri, n[i][4]), (3 * ri, n[i][5]),
                             (6 * ri, n[i][6]), (2 * ri, n[i][7]), (2 * ri, n[i][8]),
                             (2 * ri, n[i][9])])
            + _combo(field, [(12 * rj, n[j][2]), (2 * rj, n[j][7]), (rj, n[j][8])])
            + _combo(field, [(12 * rk, n[k][1]), (2 * rk, n[k][5]), (rk, n[k][6])])
            + _combo(field, [(9 * nim * ri, n[m][0]), (2 * nim * ri, n[m][3]),
                             (2 * nim * ri, n[m][4])])
            + _combo(field, [(12 * njm * rj, n[m][0]), (njm * rj, n[m][3]),
                             (2 * njm * rj, n[m][4])])
            + _combo(field, [(12 * nkm * rk, n[m][0]), (2 * nkm * rk, n[m][3]),
                             (nkm * rk, n[m][4])])
        )
        f_funs.append(
            tilde_f5(m, 1, field)
            + _combo(field, [(12 * rj, n[j][0]), (3 * rj, n[j][1]), (12 * rj, n[j][2]),
                             (3 * rj, n[j][3]), (6 * rj, n[j][4]), (2 * rj, n[j][5]),
                             (2 * rj, n[j][6]), (6 * rj, n[j][7]), (3 * rj, n[j][8]),
                             (2 * rj, n[j][9])])
            + _combo(field, [(12 * ri, n[i][0]), (2 * ri, n[i][3]), (ri, n[i][4])])
            + _combo(field, [(12 * rk, n[k][2]), (rk, n[k][7]), (2 * rk, n[k][8])])
            + _combo(field, [(9 * njm * rj, n[m][1]), (2 * njm * rj, n[m][5]),
                             (2 * njm * rj, n[m][6])])
            + _combo(field, [(12 * nim * ri, n[m][1]), (2 * nim * ri, n[m][5]),
                             (nim * ri, n[m][6])])
            + _combo(field, [(12 * nkm * rk, n[m][1]), (nkm * rk, n[m][5]),
                             (2 * nkm * rk, n[m][6])])
        )
        f_funs.append(
            tilde_f5(m, 2, field)
            + _combo(field, [(3 * rk, n[k][0]), (12 * rk, n[k][1]), (12 * rk, n[k][2]),
                             (2 * rk, n[k][3]), (2 * rk, n[k][4]), (6 * rk, n[k][5]),
                             (3 * rk, n[k][6]), (3 * rk, n[k][7]), (6 * rk, n[k][8]),
                             (2 * rk, n[k][9])])
            + _combo(field, [(12 * ri, n[i][1]), (ri, n[i][5]), (2 * ri, n[i][6])])
            + _combo(field, [(12 * rj, n[j][1]), (rj, n[j][3]), (2 * rj, n[j][4])])
            + _combo(field, [(9 * nkm * rk, n[m][2]), (2 * nkm * rk, n[m][7]),
                             (2 * nkm * rk, n[m][8])])
            + _combo(field, [(12 * nim * ri, n[m][2]), (nim * ri, n[m][7]),
                             (2 * nim * ri, n[m][8])])
            + _combo(field, [(12 * njm * rj, n[m][2]), (2 * njm * rj, n[m][7]),
                             (njm * rj, n[m][8])])
        )
        f_funs.append(
            tilde_f5(m, 3, field)
            - _combo(field, [(36 * ri, n[i][0]), (12 * ri, n[i][3]), (6 * ri, n[i][4]),
                             (6 * ri, n[i][6]), (2 * ri, n[i][7]), (2 * ri, n[i][9])])
            + _combo(field, [(6 * rk, n[k][6]), (6 * rk, n[k][8]), (rk, n[k][9])])
            - _combo(field, [(36 * rj, n[j][2]), (6 * rj, n[j][4]), (2 * rj, n[j][5]),
                             (12 * rj, n[j][7]), (6 * rj, n[j][8]), (2 * rj, n[j][9])])
            + _combo(field, [(4 * nim * ri, n[m][3]), (6 * nim * ri, n[m][6]),
                             (2 * nim * ri, n[m][9])])
            + _combo(field, [(6 * njm * rj, n[m][3]), (4 * njm * rj, n[m][6]),
                             (2 * njm * rj, n[m][9])])
            + _combo(field, [(6 * nkm * rk, n[m][3]), (6 * nkm * rk, n[m][6]),
                             (nkm * rk, n[m][9])])
        )
        f_funs.append(
            tilde_f5(m, 4, field)
            - _combo(field, [(36 * ri, n[i][1]), (6 * ri, n[i][3]), (6 * ri, n[i][5]),
                             (12 * ri, n[i][6]), (2 * ri, n[i][8]), (2 * ri, n[i][9])])
            + _combo(field, [(6 * rj, n[j][4]), (6 * rj, n[j][7]), (rj, n[j][9])])
            - _combo(field, [(36 * rk, n[k][1]), (2 * rk, n[k][3]), (12 * rk, n[k][5]),
                             (6 * rk, n[k][6]), (6 * rk, n[k][8]), (2 * rk, n[k][9])])
            + _combo(field, [(4 * nim * ri, n[m][4]), (6 * nim * ri, n[m][7]),
                             (2 * nim * ri, n[m][9])])
            + _combo(field, [(6 * njm * rj, n[m][4]), (6 * njm * rj, n[m][7]),
                             (njm * rj, n[m][9])])
            + _combo(field, [(6 * nkm * rk, n[m][4]), (4 * nkm * rk, n[m][7]),
                             (2 * nkm * rk, n[m][9])])
        )
        f_funs.append(
            tilde_f5(m, 5, field)
            - _combo(field, [(36 * rj, n[j][0]), (6 * rj, n[j][3]), (12 * rj, n[j][4]),
                             (2 * rj, n[j][6]), (2 * rj, n[j][7]), (2 * rj, n[j][9])])
            + _combo(field, [(6 * ri, n[i][3]), (6 * ri, n[i][5]), (ri, n[i][9])])
            - _combo(field, [(36 * rk, n[k][2]), (2 * rk, n[k][4]), (6 * rk, n[k][5]),
                             (6 * rk, n[k][7]), (12 * rk, n[k][8]), (2 * rk, n[k][9])])
            + _combo(field, [(6 * nim * ri, n[m][5]), (6 * nim * ri, n[m][8]),
                             (nim * ri, n[m][9])])
            + _combo(field, [(4 * njm * rj, n[m][5]), (6 * njm * rj, n[m][8]),
                             (2 * njm * rj, n[m][9])])
            + _combo(field, [(6 * nkm * rk, n[m][5]), (4 * nkm * rk, n[m][8]),
                             (2 * nkm * rk, n[m][9])])
        )

    e_funs: List[BaryPoly] = []
    e_corr: Dict[int, BaryPoly] = {}
    for e in range(6):
        i, j = EDGES[e]
        ti, tj = _others(i, j)
        ri, rj = g.inv_r(i), g.inv_r(j)
        third = Fraction(1, 3) if field == RATIONAL else 1.0 / 3.0

        def heav(x: int) -> int:
            return 1 if x > 0 else 0

        def idx_lit(face, base_v, s):
            # literal '2(tau(base)+1)+sgn(s)' with Heaviside sgn, 0-based
            return 2 * tau(face, base_v) + 3 + heav(s)

        def cube(face, v):
            return tau(face, v)

        def sq_pair(face, v):
            # the two lambda_v^2 * lambda_. indices on the face
            return 2 * tau(face, v) + 3, 2 * tau(face, v) + 4

        def e12(a, b, lit: bool) -> BaryPoly:
            # a is the cubed vertex of the dual edge moment
            ra, rb = g.inv_r(a), g.inv_r(b)
            p, q = sq_pair(a, b)
            dti = tau(a, ti) - tau(a, tj)
            if lit:
                i1 = idx_lit(a, ti, dti)
                i2 = idx_lit(a, ti, -dti)
                i3 = idx_lit(a, tj, -dti)
                i4 = idx_lit(a, tj, dti)
            else:
                i1, i2 = sigma(a, ti, tj), sigma(a, ti, b)
                i3, i4 = sigma(a, tj, ti), sigma(a, tj, b)
            t_idx = 0 if a == i else 1
            return (
                tilde_e5(e, t_idx, field)
                - _combo(field, [
                    (24, n[a][cube(a, b)]),
                    (6, n[a][cube(a, ti)]), (6, n[a][cube(a, tj)]),
                    (6, n[a][p]), (6, n[a][q]),
                    (2, n[a][i1]), (4, n[a][i2]),
                    (2, n[a][i3]), (4, n[a][i4]),
                    (2, n[a][9]),
                ]) * (third * ra)
                + _combo(field, [(2 * rb, n[b][cube(b, a)])])
                + _combo(field, [
                    (2 * (g.ndot(i, ti) * ri + g.ndot(j, ti) * rj), n[ti][cube(ti, a)]),
                    (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj), n[tj][cube(tj, a)]),
                ])
            )

        def e34(a, b) -> BaryPoly:
            ra, rb = g.inv_r(a), g.inv_r(b)
            pa, qa = sq_pair(a, b)
            pb, qb = sq_pair(b, a)
            t_idx = 2 if a == i else 3
            return (
                tilde_e5(e, t_idx, field)
                + _combo(field, [
                    (36 * ra, n[a][cube(a, b)]),
                    (6 * ra, n[a][pa]), (6 * ra, n[a][qa]),
                    (2 * ra, n[a][sigma(a, ti, b)]), (2 * ra, n[a][sigma(a, tj, b)]),
                    (ra, n[a][9]),
                ])
                - _combo(field, [
                    (24 * rb, n[b][cube(b, a)]),
                    (2 * rb, n[b][pb]), (2 * rb, n[b][qb]),
                ])
                + _combo(field, [
                    (2 * (g.ndot(i, ti) * ri + g.ndot(j, ti) * rj),
                     n[ti][sigma(ti, a, b)]),
                    (2 * (g.ndot(i, tj) * ri + g.ndot(j, tj) * rj),
                     n[tj][sigma(tj, a, b)]),
                ])
            )

        base = len(e_funs)
        e_funs.extend([e12(i, j, True), e12(j, i, True), e34(i, j), e34(j, i)])
        e_corr[base] = e12(i, j, False)
        e_corr[base + 1] = e12(j, i, False)

    funcs = e_funs + f_funs + t_funs
    labels = (
        [f"E5[e={e},t={t}]" for e in range(6) for t in range(4)]
        + [f"F5[m={m},t={t}]" for m in range(4) for t in range(6)]
        + [f"T5[m={m}]" for m in range(4)]
    )
    corrected = dict(e_corr)
    for idx, fn in t_corr.items():
        corrected[len(e_funs) + len(f_funs) + idx] = fn
    for m in range(4):
        funcs.extend(n[m])
        labels.extend([f"N5[m={m},l={l}]" for l in range(10)])
    return AppendixBasis(funcs, corrected, labels)


def appendix_basis(family_kind: str, geom: SimplexGeometry) -> AppendixBasis:
    if family_kind == "p4e6":
        return appendix_basis_p4e6(geom)
    if family_kind == "p5e7":
        return appendix_basis_p5e7(geom)
    raise ValueError("explicit bases are printed for p4e6 and p5e7 only")
