"""Small instances of the four problem classes shared by several test modules."""

import math

from fracvortex.background import composite_fields, periodic_background, planar_background
from fracvortex.energy import ProblemClass, build_problem
from fracvortex.grid import PeriodicGrid, PlanarBox
from fracvortex.model import ScalarModel, SystemModel, VortexSet

SCALAR = ScalarModel.vacuum(1.0)
SYSTEM = SystemModel.vacuum(1.0, 3.0, m=1, a2=0.01, b2=2.0, c2=1.0)
KINDS = list(ProblemClass)


def periodic_vortices():
    return (VortexSet.from_list([[1.0, 2.0], [4.0, 4.5]]), VortexSet.from_list([[1.0, 2.0]]))


def planar_vortices():
    return (VortexSet.from_list([[0.4, -0.3], [-0.9, 0.6]]), VortexSet.from_list([[0.4, -0.3]]))


def make_problem(kind, n_periodic=64, n_box=63, half_width=8.0, empty=False):
    kind = ProblemClass(kind)
    if kind in (ProblemClass.SCALAR_PERIODIC, ProblemClass.SYSTEM_PERIODIC):
        grid = PeriodicGrid.square(2 * math.pi, n_periodic)
        v1, v2 = (VortexSet(), VortexSet()) if empty else periodic_vortices()
        if kind is ProblemClass.SCALAR_PERIODIC:
            return build_problem(kind, SCALAR, periodic_background(grid, v1))
        return build_problem(kind, SYSTEM, composite_fields(SYSTEM, v1, v2, grid))
    box = PlanarBox(half_width, n_box)
    v1, v2 = (VortexSet(), VortexSet()) if empty else planar_vortices()
    if kind is ProblemClass.SCALAR_PLANAR:
        return build_problem(kind, SCALAR, planar_background(v1, 1.0, box))
    return build_problem(kind, SYSTEM, composite_fields(SYSTEM, v1, v2, box))
