"""Tetrahedral H2-nonconforming finite elements for the clamped biharmonic
problem: polynomial algebra, element construction, assembly, manufactured-
solution convergence studies and exact-arithmetic verification."""

from .barypoly import BaryPoly, SimplexGeometry
from .element import (
    DofSpec,
    ElementFamily,
    ReferenceElement,
    build_reference_element,
    family_from_name,
)
from .mesh import Mesh, extract_entities, uniform_cube_mesh
from .solve import ConvergenceReport, convergence_study, manufactured_solution

__all__ = [
    "BaryPoly",
    "SimplexGeometry",
    "DofSpec",
    "ElementFamily",
    "ReferenceElement",
    "build_reference_element",
    "family_from_name",
    "Mesh",
    "uniform_cube_mesh",
    "extract_entities",
    "ConvergenceReport",
    "convergence_study",
    "manufactured_solution",
]

__version__ = "0.1.0"
