"""Stability constants on a sequence of refined unit squares.

Every constant should stay bounded away from zero as N grows.
Run:  python3 demos/refinement_study.py [k]
"""

import sys

from taylorhood import FemSystem, build_t, coercivity_check, gen_structured
from taylorhood.infsup import infsup_bp, infsup_classical, infsup_meshdep

k = int(sys.argv[1]) if len(sys.argv) > 1 else 2
print(f"k = {k}")
print(f"{'N':>3} {'n_vel':>6} {'n_pr':>5} {'beta':>8} {'gamma':>8} {'delta':>8} {'c_T':>8} {'C_T':>8}")
for N in (2, 4, 8):
    mesh = gen_structured(N, "quad2d")
    s = FemSystem(mesh, k)
    c = coercivity_check(mesh, s, build_t(mesh, s))
    b, g, d = (f(s).value for f in (infsup_classical, infsup_bp, infsup_meshdep))
    print(f"{N:>3} {s.n_vel:>6} {s.n_pr:>5} {b:8.4f} {g:8.4f} {d:8.4f} {c.c_T:8.4f} {c.C_T:8.4f}")
