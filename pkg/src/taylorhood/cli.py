"""Command-line driver.

Subcommands
-----------
quad-check   exactness of the (k+1)-point Gauss-Lobatto rule
condition    integrand degree condition on every element of a mesh
study        stability constants over a list of refinement levels
export       mesh JSON, dense matrices (CSV) or the T audit (JSON)

Exit codes: 0 pass, 2 usage, 3 mesh or assumption error,
4 condition violation, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .assembly import GAUSS_LOBATTO, HIGH_ORDER, FemSystem
from .conditions import check_condition, counterexample_gap
from .errors import (
    ConditionViolationError,
    ConsistencyError,
    DegenerateElementError,
    DegenerateSystemError,
    InvalidOrderError,
    MeshError,
    MetricError,
)
from .gauss_lobatto import build_rule, centred_gap, monomial_errors
from .infsup import infsup_bp, infsup_classical, infsup_local, infsup_meshdep, seminorm_equivalence
from .linalg import KERNEL_REL_TOL
from .mesh import Mesh, counterexample_mesh, gen_structured
from .report import ConstantReport
from .t_operator import build_t, coercivity_check
from .tensor_poly import MEMBERSHIP_TOL

EXIT_OK, EXIT_USAGE, EXIT_MESH, EXIT_CONDITION, EXIT_NUMERICAL = 0, 2, 3, 4, 5

MESH_KINDS = ("quad2d", "parallelepiped3d", "hex3d", "counterexample")
STUDIES = ("tcoercivity", "classical", "bp", "meshdep", "local", "seminorm")
EXACT_TOL = 1e-12
GAP_MIN = 1e-6


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _shear(text):
    """A single number s for (x, y, z) -> (x + s y, y, z), or nine numbers row by row."""
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shear {text!r}") from None
    if len(vals) == 1:
        S = np.eye(3)
        S[0, 1] = vals[0]
        return S
    if len(vals) == 9:
        return np.array(vals).reshape(3, 3)
    raise argparse.ArgumentTypeError("shear takes 1 or 9 comma-separated numbers")


def _add_mesh_args(p):
    p.add_argument("--mesh-kind", choices=MESH_KINDS, default="quad2d")
    p.add_argument("--mesh-file", help="mesh JSON file (overrides --mesh-kind)")
    p.add_argument("--N", type=int, default=2, help="subdivisions per axis")
    p.add_argument("--theta", type=float, default=0.0, help="vertex jitter amplitude, < 0.5")
    p.add_argument("--shear", type=_shear, default=None, help="global linear map for parallelepiped meshes")
    p.add_argument("--seed", type=int, default=0)


def _add_out_args(p, formats=("csv", "json"), default="csv"):
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--format", choices=formats, default=default)


def build_parser():
    parser = argparse.ArgumentParser(prog="taylorhood", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quad-check", help="Gauss-Lobatto exactness for a degree k")
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("condition", help="check the integrand degree condition on a mesh")
    p.add_argument("--k", type=int, default=2)
    _add_mesh_args(p)
    p.add_argument("--tol-membership", type=float, default=MEMBERSHIP_TOL)
    p.add_argument("--samples", type=int, default=2000)
    _add_out_args(p, ("json",), "json")

    p = sub.add_parser("study", help="stability constants over refinement levels")
    p.add_argument("study", choices=STUDIES)
    p.add_argument("--k", type=_int_list, default=[2], help="degree or comma-separated degrees")
    _add_mesh_args(p)
    p.add_argument("--levels", type=_int_list, default=None, help="comma-separated N values (default: --N)")
    p.add_argument("--quad-mode", choices=(GAUSS_LOBATTO, HIGH_ORDER), default=GAUSS_LOBATTO)
    p.add_argument("--h1-seminorm", action="store_true", help="use the H1 seminorm for velocities")
    p.add_argument("--tol-membership", type=float, default=MEMBERSHIP_TOL)
    _add_out_args(p)

    p = sub.add_parser("export", help="write a mesh, a dense matrix or the T audit")
    p.add_argument("what", choices=("mesh", "B", "A_H1", "A_L2", "M_L2", "M_grad", "M_h", "T", "t-audit"))
    p.add_argument("--k", type=int, default=2)
    _add_mesh_args(p)
    p.add_argument("--quad-mode", choices=(GAUSS_LOBATTO, HIGH_ORDER), default=GAUSS_LOBATTO)
    p.add_argument("--out", help="output file (stdout if omitted)")
    return parser


def make_mesh(args, N=None) -> Mesh:
    if args.mesh_file:
        return Mesh.load(args.mesh_file)
    if args.mesh_kind == "counterexample":
        return counterexample_mesh()
    N = args.N if N is None else N
    shear = args.shear
    if args.mesh_kind != "parallelepiped3d" and shear is not None:
        raise UsageError("--shear applies only to parallelepiped3d meshes")
    return gen_structured(N, args.mesh_kind, theta=args.theta, shear=shear, seed=args.seed)


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolved_config(args):
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key == "out":  # where the file goes does not affect its content
            continue
        if isinstance(value, np.ndarray):
            value = value.tolist()
        cfg[key] = value
    return cfg


def cmd_quad_check(args):
    k = args.k
    if not 2 <= k <= 8:
        raise UsageError(f"--k must lie in 2..8, got {k}")
    n = k + 1
    errs = monomial_errors(n, 2 * k - 1)
    rule = build_rule(n)
    print(f"Gauss-Lobatto rule with {n} points (k = {k}), exact to degree {rule.exactness}")
    for m, e in enumerate(errs):
        if e > EXACT_TOL:
            print(f"FAIL monomial t^{m}: relative error {e:.3e} > {EXACT_TOL:g}")
            return EXIT_NUMERICAL
    print(f"monomials t^0..t^{2 * k - 1}: max relative error {errs.max():.3e}")
    gap = centred_gap(n)
    if gap <= GAP_MIN:
        print(f"FAIL degree {2 * k}: rule looks exact (gap {gap:.3e})")
        return EXIT_NUMERICAL
    print(f"degree {2 * k} (centred monomial): relative gap {gap:.3e}, not exact as expected")
    return EXIT_OK


def cmd_condition(args):
    mesh = make_mesh(args)
    reports = [
        check_condition(G, args.k, samples=args.samples, seed=args.seed, tol=args.tol_membership, element=e)
        for e, G in enumerate(mesh.maps)
    ]
    payload = {
        "metadata": {
            "version": __version__,
            "config": _resolved_config(args),
            "seed": args.seed,
            "tolerances": {"membership": args.tol_membership},
        },
        "holds": all(r.holds for r in reports),
        "elements": [r.to_dict() for r in reports],
    }
    if args.mesh_kind == "counterexample" and not args.mesh_file and args.k == 2:
        payload["counterexample_pair_gap"] = counterexample_gap("map")
    _emit(json.dumps(payload, indent=1, sort_keys=True) + "\n", args.out)
    worst = max(reports, key=lambda r: r.quadrature_gap)
    print(
        f"condition {'holds' if payload['holds'] else 'VIOLATED'} on {len(reports)} element(s); "
        f"largest quadrature gap {worst.quadrature_gap:.6e}"
        + (f"; bubble/x1 pair gap {payload['counterexample_pair_gap']:.6e}" if "counterexample_pair_gap" in payload else ""),
        file=sys.stderr,
    )
    return EXIT_OK if payload["holds"] else EXIT_CONDITION


def _study_rows(args, report, k, N):
    mesh = make_mesh(args, N if N is not None else 1)
    d = mesh.dim
    theta = args.theta
    base = dict(study=args.study, k=k, d=d, N=N, theta=theta, seed=args.seed)

    if args.study == "seminorm":
        r = seminorm_equivalence(k, d)
        for name, val in (("lambda_min", r.lambda_min), ("lambda_max", r.lambda_max)):
            report.add(**base, constant_name=name, value=val, kernel_dim=r.kernel_dim, n_vel_dofs=None, n_pr_dofs=k**d)
        return

    sys_ = FemSystem(mesh, k, args.quad_mode, h1_seminorm=args.h1_seminorm)
    dofs = dict(n_vel_dofs=sys_.n_vel, n_pr_dofs=sys_.n_pr)
    if args.study == "tcoercivity":
        T = build_t(mesh, sys_)
        cr = coercivity_check(mesh, sys_, T)
        report.add(**base, constant_name="c_T", value=cr.c_T, kernel_dim=cr.kernel_dim, **dofs)
        report.add(**base, constant_name="C_T", value=cr.C_T, kernel_dim=cr.kernel_dim, **dofs)
    elif args.study == "local":
        for norms in ("h1", "l2"):
            vals = [infsup_local(sys_, e, norms) for e in range(mesh.n_elements)]
            low = min(vals, key=lambda r: r.value)
            report.add(
                **base, constant_name=f"local_{norms}_min", value=low.value, kernel_dim=max(r.kernel_dim for r in vals), **dofs
            )
    else:
        fn = {"classical": infsup_classical, "bp": infsup_bp, "meshdep": infsup_meshdep}[args.study]
        r = fn(sys_)
        report.add(**base, constant_name=r.name, value=r.value, kernel_dim=r.kernel_dim, **dofs)


def cmd_study(args):
    levels = args.levels or [args.N]
    if any(k < 2 for k in args.k):
        raise UsageError("Taylor-Hood degree k must be >= 2")
    tolerances = {"kernel_rel": KERNEL_REL_TOL, "membership": args.tol_membership}
    report = ConstantReport(_resolved_config(args), tolerances)
    for k in args.k:
        for N in levels if args.study != "seminorm" else [None]:
            _study_rows(args, report, k, N)
    _emit(report.render(args.format), args.out)
    return EXIT_OK


def _dense_csv(M):
    M = np.atleast_2d(M)
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in M)


def cmd_export(args):
    mesh = make_mesh(args)
    if args.what == "mesh":
        _emit(json.dumps(mesh.to_dict(), indent=1) + "\n", args.out)
        return EXIT_OK
    sys_ = FemSystem(mesh, args.k, args.quad_mode)
    if args.what in ("T", "t-audit"):
        T = build_t(mesh, sys_)
        if args.what == "T":
            _emit(_dense_csv(T.T), args.out)
        else:
            q = np.random.default_rng(args.seed).standard_normal(sys_.n_pr)
            payload = {"k": args.k, "seed": args.seed, "consistency_gap": T.consistency_gap, "nodes": T.audit(q)}
            _emit(json.dumps(payload, indent=1, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    _emit(_dense_csv(getattr(sys_, args.what)), args.out)
    return EXIT_OK


COMMANDS = {"quad-check": cmd_quad_check, "condition": cmd_condition, "study": cmd_study, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidOrderError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MeshError, DegenerateElementError) as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_MESH
    except ConditionViolationError as exc:
        print(f"condition violation: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except (MetricError, DegenerateSystemError, ConsistencyError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
