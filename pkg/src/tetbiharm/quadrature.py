"""Numerical integration on edges, triangles and tetrahedra.

Rules are collapsed-coordinate (Duffy) tensor products of Gauss-Legendre
and Gauss-Jacobi lines, with the Jacobi weights absorbing the Duffy
Jacobian.  Any polynomial exactness degree is therefore available, at
O(n^dim) point count, which is acceptable at the mesh sizes this library
targets (error integrands reach degree ~20).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .barypoly import EDGES, FACES, BaryPoly, SimplexGeometry

MAX_DEGREE = 30

# Reference measures of the unit simplices (interval, triangle, tet).
REF_MEASURE = {1: 1.0, 2: 0.5, 3: 1.0 / 6.0}


@dataclass(frozen=True)
class QuadRule:
    """Quadrature points in barycentric coordinates of the entity.

    ``points`` has shape (n, dim+1); weights are positive and sum to the
    reference measure (1, 1/2, 1/6 for dim 1, 2, 3).
    """

    dim: int
    points: np.ndarray
    weights: np.ndarray
    exactness: int

    @property
    def npoints(self) -> int:
        return self.weights.size


def _gauss01(n: int):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _jacobi01(n: int, alpha: int):
    # nodes/weights for int_0^1 (1-x)^alpha f(x) dx
    x, w = roots_jacobi(n, alpha, 0.0)
    return 0.5 * (x + 1.0), w * 0.5 ** (alpha + 1)


@lru_cache(maxsize=None)
def rule_for_degree(dim: int, degree: int) -> QuadRule:
    """Rule on the dim-simplex exact for polynomials up to ``degree``."""
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}]")
    n = degree // 2 + 1
    if dim == 1:
        x, w = _gauss01(n)
        pts = np.column_stack([1.0 - x, x])
        return QuadRule(1, pts, w, degree)
    if dim == 2:
        # x = u(1-v), y = v; Jacobian (1-v)
        u, wu = _gauss01(n)
        v, wv = _jacobi01(n, 1)
        U, V = np.meshgrid(u, v, indexing="ij")
        W = np.outer(wu, wv)
        x = (U * (1.0 - V)).ravel()
        y = V.ravel()
        pts = np.column_stack([1.0 - x - y, x, y])
        return QuadRule(2, pts, W.ravel(), degree)
    # x = u(1-v)(1-w), y = v(1-w), z = w; Jacobian (1-v)(1-w)^2
    u, wu = _gauss01(n)
    v, wv = _jacobi01(n, 1)
    w_, ww = _jacobi01(n, 2)
    U, V, W_ = np.meshgrid(u, v, w_, indexing="ij")
    WT = np.einsum("i,j,k->ijk", wu, wv, ww)
    x = (U * (1.0 - V) * (1.0 - W_)).ravel()
    y = (V * (1.0 - W_)).ravel()
    z = W_.ravel()
    pts = np.column_stack([1.0 - x - y - z, x, y, z])
    return QuadRule(3, pts, WT.ravel(), degree)


def embed_in_tet(rule: QuadRule, entity: str, index: int) -> np.ndarray:
    """Barycentric points of the rule as 4-tuples of the parent tet."""
    n = rule.npoints
    out = np.zeros((n, 4))
    if entity == "cell":
        if rule.dim != 3:
            raise ValueError("rule dimension mismatch")
        return rule.points
    if entity == "face":
        if rule.dim != 2:
            raise ValueError("rule dimension mismatch")
        for k, v in enumerate(FACES[index]):
            out[:, v] = rule.points[:, k]
        return out
    if entity == "edge":
        if rule.dim != 1:
            raise ValueError("rule dimension mismatch")
        for k, v in enumerate(EDGES[index]):
            out[:, v] = rule.points[:, k]
        return out
    raise ValueError(f"unknown entity {entity!r}")


def integrate(
    f: Union[BaryPoly, Callable[[np.ndarray], np.ndarray]],
    geom: SimplexGeometry,
    rule: QuadRule,
    entity: str = "cell",
    index: int = 0,
) -> float:
    """Integrate over a physical entity of ``geom``.

    Callables receive an (n, 3) array of physical points; polynomials are
    evaluated directly in barycentric coordinates.  The affine map enters
    only through the physical/reference measure ratio.
    """
    if entity == "cell":
        measure = float(geom.volume)
    elif entity == "face":
        measure = geom.face_area(index)
    elif entity == "edge":
        measure = geom.edge_length(index)
    else:
        raise ValueError(f"unknown entity {entity!r}")
    scale = measure / REF_MEASURE[rule.dim]
    bary4 = embed_in_tet(rule, entity, index)
    if isinstance(f, BaryPoly):
        vals = f.to_float().eval_many(bary4)
    else:
        vals = np.asarray(f(geom.points_many(bary4)), dtype=float)
    return scale * float(rule.weights @ vals)
