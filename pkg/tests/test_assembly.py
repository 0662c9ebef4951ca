import numpy as np
import pytest

from taylorhood.assembly import (
    GAUSS_LOBATTO,
    HIGH_ORDER,
    FemSystem,
    apply_b,
    assemble,
    element_b,
    norm,
)
from taylorhood.errors import ConditionViolationError
from taylorhood.gauss_lobatto import integrate_tensor, reference_rule
from taylorhood.mesh import SHEAR_XY, counterexample_mesh, gen_structured


@pytest.fixture(scope="module")
def sq4():
    return FemSystem(gen_structured(4, "quad2d"), 2)


def rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


def test_single_element_dof_counts():
    s = FemSystem(gen_structured(1, "quad2d"), 2)
    assert s.n_vel == 2 and s.n_pr == 4


def test_b_kills_constants(sq4):
    assert np.abs(sq4.B @ sq4.ones_p).max() <= 1e-12


def test_b_kills_constants_3d():
    s = FemSystem(gen_structured(2, "parallelepiped3d", shear=SHEAR_XY), 2)
    assert np.abs(s.B @ s.ones_p).max() <= 1e-12


@pytest.mark.parametrize(
    "kind,N,k,theta",
    [("quad2d", 2, 3, 0.3), ("quad2d", 3, 2, 0.25), ("parallelepiped3d", 2, 2, 0.0)],
)
def test_quadrature_modes_agree(kind, N, k, theta):
    m = gen_structured(N, kind, theta=theta, shear=SHEAR_XY if kind == "parallelepiped3d" else None, seed=11)
    a = FemSystem(m, k, GAUSS_LOBATTO)
    b = FemSystem(m, k, HIGH_ORDER)
    assert rel(a.B, b.B) <= 1e-11


def test_b_routes_agree():
    m = gen_structured(3, "quad2d", theta=0.3, seed=5)
    ref = FemSystem(m, 3, HIGH_ORDER, b_route="ibp_facets").B
    for route in ("ibp_volume", "divergence"):
        assert rel(FemSystem(m, 3, HIGH_ORDER, b_route=route).B, ref) <= 1e-11


def test_counterexample_refuses_lobatto_and_modes_disagree():
    m = counterexample_mesh()
    with pytest.raises(ConditionViolationError):
        FemSystem(m, 2, GAUSS_LOBATTO)
    FemSystem(m, 2, HIGH_ORDER)  # the oracle route still assembles
    gv, gf, _ = element_b(m.maps[0], 2, GAUSS_LOBATTO)
    hv, hf, _ = element_b(m.maps[0], 2, HIGH_ORDER)
    assert max(np.abs(gv - hv).max(), np.abs(gf - hf).max()) >= 1e-4


def test_gram_properties(sq4):
    for G in (sq4.A_H1, sq4.A_L2, sq4.A_grad, sq4.M_L2, sq4.M_grad, sq4.M_h):
        assert np.abs(G - G.T).max() <= 1e-12 * np.abs(G).max()
    for G in (sq4.A_H1, sq4.A_L2, sq4.M_L2):
        assert np.linalg.eigvalsh(G).min() > 0
    for G in (sq4.M_grad, sq4.M_h):
        w = np.linalg.eigvalsh(G)
        assert w[0] <= 1e-12 * w[-1]
        assert w[1] >= 1e-8 * w[-1]
        assert np.abs(G @ sq4.ones_p).max() <= 1e-12 * w[-1]


def test_mesh_dependent_norm_bounded_by_gradient_norm():
    s = FemSystem(gen_structured(3, "quad2d", theta=0.3, seed=2), 2)
    D = s.mesh.h**2 * s.M_grad - s.M_h
    assert np.linalg.eigvalsh(0.5 * (D + D.T)).min() >= -1e-12 * np.abs(D).max()


def _coord_perm(a, b):
    """Index map p with b[p[i]] == a[i] (nodes matched by position)."""
    d = np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)
    p = d.argmin(axis=1)
    assert d[np.arange(len(a)), p].max() <= 1e-12
    return p


def test_relabeling_invariance():
    m = gen_structured(3, "quad2d", theta=0.3, seed=9)
    perm = np.random.default_rng(0).permutation(m.n_elements)
    s1, s2 = FemSystem(m, 2), FemSystem(m.relabeled(perm), 2)
    pp = _coord_perm(s1.pr_table.coords, s2.pr_table.coords)
    pv_nodes = _coord_perm(s1.vel_table.coords, s2.vel_table.coords)
    vmap = np.full(s1.n_vel, -1)
    free = s1.vel_dofs[:, 0] >= 0
    vmap[s1.vel_dofs[free].ravel()] = s2.vel_dofs[pv_nodes[free]].ravel()
    for name in ("M_L2", "M_grad", "M_h"):
        A, B = getattr(s1, name), getattr(s2, name)[np.ix_(pp, pp)]
        assert np.abs(A - B).max() <= 1e-13 * np.abs(A).max()
    for name in ("A_H1", "A_L2"):
        A, B = getattr(s1, name), getattr(s2, name)[np.ix_(vmap, vmap)]
        assert np.abs(A - B).max() <= 1e-13 * np.abs(A).max()
    assert np.abs(s1.B - s2.B[np.ix_(vmap, pp)]).max() <= 1e-13 * np.abs(s1.B).max()


def test_norms(sq4):
    assert norm(sq4, "vel_H1", np.zeros(sq4.n_vel)) == 0.0
    c = 2.5 * sq4.ones_p
    assert norm(sq4, "pr_grad", c) <= 1e-12
    assert norm(sq4, "pr_L2", c) == pytest.approx(2.5, abs=1e-13)
    q = sq4.interpolate_pressure(lambda x: x[:, 0])
    assert norm(sq4, "pr_grad", q) == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(ValueError):
        norm(sq4, "pr_L2", np.ones(3))
    with pytest.raises(ValueError):
        norm(sq4, "bogus", c)


def test_apply_b_trivial(sq4):
    rng = np.random.default_rng(1)
    v = rng.standard_normal(sq4.n_vel)
    assert abs(apply_b(sq4, v, sq4.ones_p)) <= 1e-12 * np.abs(v).max()
    assert apply_b(sq4, np.zeros(sq4.n_vel), rng.standard_normal(sq4.n_pr)) == 0.0
    with pytest.raises(ValueError):
        apply_b(sq4, v[:-1], sq4.ones_p)


def test_apply_b_manufactured_pair():
    # v and q lie in the discrete spaces of a uniform mesh, so interpolation is exact
    s = assemble(gen_structured(2, "quad2d"), 2)

    def v_field(x):
        bub = x[:, 0] * (1 - x[:, 0]) * x[:, 1] * (1 - x[:, 1])
        return np.stack([bub, 2 * bub], axis=1)

    def q_field(x):
        return x[:, 0] * x[:, 1] + x[:, 0]

    def integrand(x):
        X, Y = x[:, 0], x[:, 1]
        div = (1 - 2 * X) * Y * (1 - Y) + 2 * X * (1 - X) * (1 - 2 * Y)
        return -q_field(x) * div

    exact = integrate_tensor(integrand, reference_rule(6, 2))
    got = apply_b(s, s.interpolate_velocity(v_field), s.interpolate_pressure(q_field))
    assert got == pytest.approx(exact, abs=1e-11)


def test_unknown_options():
    m = gen_structured(2, "quad2d")
    with pytest.raises(ValueError):
        FemSystem(m, 1)
    with pytest.raises(ValueError):
        FemSystem(m, 2, "simpson")
    with pytest.raises(ValueError):
        FemSystem(m, 2, b_route="weak")


def test_seminorm_flag():
    m = gen_structured(2, "quad2d")
    s = FemSystem(m, 2, h1_seminorm=True)
    assert np.array_equal(s.A_H1, s.A_grad)
