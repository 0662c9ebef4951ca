"""Build T on a jittered mesh and look at the properties that make it work.

Run:  python3 demos/t_operator_tour.py
"""

from collections import Counter

import numpy as np

from taylorhood import FemSystem, build_t, gen_structured, normal_trace_check
from taylorhood.t_operator import nodal_bound_check, rayleigh_ratio, sum_of_squares_check

mesh = gen_structured(3, "quad2d", theta=0.3, seed=1)
s = FemSystem(mesh, 2)
top = build_t(mesh, s)

q = np.random.default_rng(0).standard_normal(s.n_pr)
rows = top.audit(q)
print("velocity nodes by class:", dict(Counter(r["class"] for r in rows if not r["on_boundary"])))
print(f"largest disagreement between neighbouring elements: {top.consistency_gap:.2e}")
print(f"normal trace on element boundaries (relative): {normal_trace_check(mesh, s, top).relative:.2e}")
print(f"b_K(T_K q, q) vs. its sum of squares (relative):  {sum_of_squares_check(s, top):.2e}")
print(f"nodal bound excess (<= 0 means it holds): {nodal_bound_check(s, top, q):.3f}")
print(f"b(Tq, q) / (|Tq|_1 |q|_h) for a random q: {rayleigh_ratio(s, top, q):.4f}")
