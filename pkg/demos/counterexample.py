"""Why Gauss-Lobatto assembly of the divergence form breaks on a general hexahedron.

Run:  python3 demos/counterexample.py
"""

import numpy as np

from taylorhood.assembly import GAUSS_LOBATTO, HIGH_ORDER, FemSystem
from taylorhood.conditions import (
    check_condition,
    check_q3_equivalence,
    counterexample_gap,
    counterexample_map,
)
from taylorhood.errors import ConditionViolationError
from taylorhood.mesh import counterexample_mesh

G = counterexample_map()
print("vertices of the warped cube:")
print(np.array2string(G.points, precision=4))

q3 = check_q3_equivalence(G)
print(f"\ncofactor columns of matching degree: {q3.q3_holds}")
print(f"all faces parallelograms:            {q3.all_faces_parallelograms}")

rep = check_condition(G, 2)
print(f"\nintegrand degree condition for k=2 holds: {rep.holds}")
print(f"witness: {rep.witness}")
print(f"largest entry-wise quadrature gap in b_K: {rep.quadrature_gap:.6e}")
print(f"gap for the bubble/x1 pair: {counterexample_gap():.12f}  (1/720 = {1 / 720:.12f})")

try:
    FemSystem(counterexample_mesh(), 2, GAUSS_LOBATTO)
except ConditionViolationError as exc:
    print(f"\nGauss-Lobatto assembly refused: {exc}")
s = FemSystem(counterexample_mesh(), 2, HIGH_ORDER)
print(f"high-order assembly works: {s.n_vel} velocity dofs, {s.n_pr} pressure dofs")
