"""Linear solves, broken error norms and convergence studies.

The manufactured solution is the separable polynomial

    u(x, y, z) = 2^10 * g(x) g(y) g(z),   g(t) = (t - t^2)^2,

which satisfies the clamped conditions u = du/dn = 0 on the unit cube; its
bilaplacian expands to

    f = 2^10 [ g''''gg + gg''''g + ggg'''' + 2(g''g''g + g''gg'' + gg''g'') ],

a degree-8 polynomial hard-coded below (cross-checked symbolically and by
finite differences in the tests).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse.linalg

from .assembly import (
    ElementClasses,
    GlobalDofMap,
    SparseSystem,
    assemble,
    build_dof_map,
    expand_free_vector,
)
from .barypoly import FROBENIUS_WEIGHTS
from .element import ElementFamily, NodalTables
from .mesh import EntityMaps, Mesh, extract_entities, uniform_cube_mesh
from .quadrature import rule_for_degree


# ----------------------------------------------------------------------
# manufactured solution


def _g(t):
    return (t - t**2) ** 2


def _g1(t):
    return 2 * t - 6 * t**2 + 4 * t**3


def _g2(t):
    return 2 - 12 * t + 12 * t**2


def _g4(t):
    return 24.0 * np.ones_like(t)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form u, gradient, distinct Hessian entries and f = Lap^2 u."""

    u: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]  # (n, 3)
    hess: Callable[[np.ndarray], np.ndarray]  # (n, 6): xx, xy, xz, yy, yz, zz
    f: Callable[[np.ndarray], np.ndarray]


def manufactured_solution(amplitude: float = 2.0**10) -> ExactSolution:
    a = amplitude

    def u(p):
        p = np.atleast_2d(p)
        return a * _g(p[:, 0]) * _g(p[:, 1]) * _g(p[:, 2])

    def grad(p):
        p = np.atleast_2d(p)
        gx, gy, gz = _g(p[:, 0]), _g(p[:, 1]), _g(p[:, 2])
        return a * np.column_stack([
            _g1(p[:, 0]) * gy * gz,
            gx * _g1(p[:, 1]) * gz,
            gx * gy * _g1(p[:, 2]),
        ])

    def hess(p):
        p = np.atleast_2d(p)
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        gx, gy, gz = _g(x), _g(y), _g(z)
        dx, dy, dz = _g1(x), _g1(y), _g1(z)
        sx, sy, sz = _g2(x), _g2(y), _g2(z)
        return a * np.column_stack([
            sx * gy * gz,
            dx * dy * gz,
            dx * gy * dz,
            gx * sy * gz,
            gx * dy * dz,
            gx * gy * sz,
        ])

    def f(p):
        p = np.atleast_2d(p)
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        gx, gy, gz = _g(x), _g(y), _g(z)
        sx, sy, sz = _g2(x), _g2(y), _g2(z)
        qx, qy, qz = _g4(x), _g4(y), _g4(z)
        return a * (
            qx * gy * gz + gx * qy * gz + gx * gy * qz
            + 2.0 * (sx * sy * gz + sx * gy * sz + gx * sy * sz)
        )

    return ExactSolution(u, grad, hess, f)


# ----------------------------------------------------------------------
# solvers


class SolverError(RuntimeError):
    pass


@dataclass
class SolveStats:
    method: str
    n: int
    iterations: int
    residual: float  # ||Kx-b|| / ||b||
    scaled_residual: float  # same, after symmetric Jacobi equilibration


def solve_system(
    sys: SparseSystem, method: str = "direct", rtol: float = 1e-12
) -> Tuple[np.ndarray, SolveStats]:
    """Direct sparse factorization or Jacobi-preconditioned CG.

    The broken-Hessian operator conditions like h^-4, so CG iteration
    counts grow quickly with level; direct is the default.
    """
    k, b = sys.matrix, sys.rhs
    n = b.size
    d = k.diagonal()
    if np.any(d <= 0):
        raise SolverError("non-positive diagonal; system is not SPD")
    s = 1.0 / np.sqrt(d)
    if method == "direct":
        # symmetric Jacobi equilibration tames the h^-4 conditioning, and
        # refinement pushes the residual of the scaled system to round-off
        ks = scipy.sparse.diags(s) @ k @ scipy.sparse.diags(s)
        lu = scipy.sparse.linalg.splu(ks.tocsc())

        def apply_inverse(rhs):
            return s * lu.solve(rhs * s)

        x = apply_inverse(b)
        it = 0
        bnorm = max(np.linalg.norm(b), 1e-300)
        for _ in range(10):
            r = b - k @ x
            if np.linalg.norm(r) / bnorm < 1e-13:
                break
            x = x + apply_inverse(r)
            it += 1
    elif method == "cg":
        m = scipy.sparse.diags(1.0 / d)
        count = {"it": 0}

        def cb(_):
            count["it"] += 1

        x, info = scipy.sparse.linalg.cg(
            k, b, rtol=rtol, atol=0.0, maxiter=50 * n, M=m, callback=cb
        )
        it = count["it"]
        if info != 0:
            rnorm = np.linalg.norm(k @ x - b) / max(np.linalg.norm(b), 1e-300)
            raise SolverError(
                f"CG did not converge (info={info}, reached {rnorm:.3e})"
            )
    else:
        raise ValueError(f"unknown solver {method!r}")
    r = k @ x - b
    res = float(np.linalg.norm(r) / max(np.linalg.norm(b), 1e-300))
    res_scaled = float(
        np.linalg.norm(r * s) / max(np.linalg.norm(b * s), 1e-300)
    )
    # any double-precision vector carries a residual of at least
    # eps*||K||*||x||/||b||, which passes 1e-11 only through level 3 of this
    # h^-4-conditioned operator; the hard guard catches real breakdowns
    if not np.isfinite(res) or res > 1e-9:
        raise SolverError(
            f"solve residual too large (raw {res:.3e}, scaled {res_scaled:.3e})"
        )
    return x, SolveStats(method, n, it, res, res_scaled)


# ----------------------------------------------------------------------
# broken norms


def broken_norms(
    mesh: Mesh,
    dmap: GlobalDofMap,
    coeffs_full: np.ndarray,
    exact: ExactSolution,
    quad_degree: Optional[int] = None,
) -> Tuple[float, float, float]:
    """(L2, H1-semi, broken H2-semi) errors of the discrete function given
    by a full DOF coefficient vector against the exact solution."""
    family = dmap.family
    qd = quad_degree if quad_degree is not None else family.max_degree + 12
    rule = rule_for_degree(3, qd)
    classes = ElementClasses(mesh, dmap)
    fw = np.asarray(FROBENIUS_WEIGHTS)
    acc = np.zeros(3)
    for key in classes.keys:
        elem = classes.element(key)
        tets = classes.members[key]
        tabs = NodalTables(elem, rule.points)
        w = rule.weights * 6.0 * float(elem.geometry.volume)
        c = coeffs_full[dmap.tet_gdofs[tets]] * dmap.tet_signs[tets]
        uh = c @ tabs.value  # (ne, q)
        gh = np.einsum("ej,jdq->edq", c, tabs.grad)
        hh = np.einsum("ej,jcq->ecq", c, tabs.hess)
        pts0 = elem.geometry.points_many(rule.points)
        base = mesh.tet_vertices(tets[0])[0]
        shifts = mesh.vertices[mesh.tets[tets, 0]] - base
        pts = (pts0[None, :, :] + shifts[:, None, :]).reshape(-1, 3)
        ue = exact.u(pts).reshape(len(tets), -1)
        ge = exact.grad(pts).reshape(len(tets), -1, 3).transpose(0, 2, 1)
        he = exact.hess(pts).reshape(len(tets), -1, 6).transpose(0, 2, 1)
        acc[0] += float(((uh - ue) ** 2 @ w).sum())
        acc[1] += float((((gh - ge) ** 2).sum(axis=1) @ w).sum())
        acc[2] += float(
            (np.einsum("ecq,c->eq", (hh - he) ** 2, fw) @ w).sum()
        )
    return tuple(np.sqrt(acc))


# ----------------------------------------------------------------------
# convergence studies


@dataclass
class LevelResult:
    level: int
    h: float
    n_free: int
    l2: float
    h1: float
    h2: float
    stats: SolveStats


@dataclass
class ConvergenceReport:
    family: ElementFamily
    rows: List[LevelResult] = field(default_factory=list)

    def orders(self) -> List[Tuple[float, float, float]]:
        out = [(0.0, 0.0, 0.0)]
        for prev, cur in zip(self.rows, self.rows[1:]):
            out.append(tuple(
                float(np.log2(a / b)) if b > 0 else float("nan")
                for a, b in ((prev.l2, cur.l2), (prev.h1, cur.h1), (prev.h2, cur.h2))
            ))
        return out

    def to_csv(self) -> str:
        lines = ["level,ndof,L2,L2_order,H1,H1_order,H2,H2_order"]
        for row, (o0, o1, o2) in zip(self.rows, self.orders()):
            lines.append(
                f"{row.level},{row.n_free},{row.l2:.7e},{o0:.2f},"
                f"{row.h1:.7e},{o1:.2f},{row.h2:.7e},{o2:.2f}"
            )
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        head = (
            f"| grid | ndof | $\\|u-u_h\\|_0$ | order | $|u-u_h|_1$ | order "
            f"| $|u-u_h|_2$ | order |"
        )
        sep = "|" + "---|" * 8
        lines = [f"element: {self.family.label}", "", head, sep]
        for row, (o0, o1, o2) in zip(self.rows, self.orders()):
            lines.append(
                f"| {row.level} | {row.n_free} | {row.l2:.7f} | {o0:.1f} "
                f"| {row.h1:.7f} | {o1:.1f} | {row.h2:.7f} | {o2:.1f} |"
            )
        return "\n".join(lines) + "\n"


def solve_level(
    family: ElementFamily,
    level: int,
    solver: str = "direct",
    exact: Optional[ExactSolution] = None,
    quad_overrides: Optional[Dict[str, int]] = None,
    threads: int = 1,
) -> Tuple[LevelResult, np.ndarray, Mesh, GlobalDofMap]:
    exact = exact or manufactured_solution()
    qo = quad_overrides or {}
    mesh = uniform_cube_mesh(level)
    emaps = extract_entities(mesh)
    dmap = build_dof_map(mesh, emaps, family)
    sys = assemble(
        mesh, emaps, dmap, exact.f,
        quad_stiffness=qo.get("stiffness"), quad_load=qo.get("load"),
        threads=threads,
    )
    x_free, stats = solve_system(sys, solver)
    x_full = expand_free_vector(dmap, x_free)
    l2, h1, h2 = broken_norms(mesh, dmap, x_full, exact, qo.get("error"))
    h = 2.0 ** (-(level - 1))
    return LevelResult(level, h, dmap.n_free, l2, h1, h2, stats), x_full, mesh, dmap


def convergence_study(
    family: ElementFamily,
    levels: Sequence[int],
    solver: str = "direct",
    quad_overrides: Optional[Dict[str, int]] = None,
    threads: int = 1,
    progress: Optional[Callable[[str], None]] = None,
) -> ConvergenceReport:
    """Solve the clamped biharmonic problem on successive uniform meshes and
    report broken errors and observed log2 orders."""
    report = ConvergenceReport(family)
    for level in levels:
        t0 = time.time()
        row, _, _, _ = solve_level(
            family, level, solver, quad_overrides=quad_overrides, threads=threads
        )
        report.rows.append(row)
        if progress is not None:
            progress(
                f"level {level}: ndof={row.n_free} L2={row.l2:.4e} "
                f"H1={row.h1:.4e} H2={row.h2:.4e} ({time.time() - t0:.1f}s)"
            )
    return report
