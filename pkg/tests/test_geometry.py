import numpy as np
import pytest

from taylorhood.errors import DegenerateElementError, DimensionError, MeshError
from taylorhood.geometry import (
    REF_VERTICES,
    GeometryMap,
    cof_columns_crossproduct,
    cofactor,
    determinant,
    is_parallelepiped,
    jacobian,
    map_eval,
    min_det,
    sample_grid,
    shape_regularity_metrics,
)
from taylorhood.mesh import COUNTEREXAMPLE_VERTICES

CX = GeometryMap(COUNTEREXAMPLE_VERTICES, "trilinear3d")


def random_J(rng, d):
    while True:
        J = rng.standard_normal((d, d))
        if abs(np.linalg.det(J)) > 0.1:
            return J


def test_identity_map():
    G = GeometryMap(REF_VERTICES[2])
    np.testing.assert_allclose(map_eval(G, np.array([0.3, 0.4])), [0.3, 0.4], atol=1e-15)
    jd = jacobian(G, np.array([0.3, 0.4]))
    np.testing.assert_allclose(jd.J, np.eye(2))
    np.testing.assert_allclose(jd.cof, np.eye(2))
    assert jd.detJ == 1.0


def test_vertex_ordering():
    G = GeometryMap(np.arange(24, dtype=float).reshape(8, 3) ** 1.0, "trilinear3d", validate=False)
    for i, v in enumerate(REF_VERTICES[3]):
        np.testing.assert_allclose(map_eval(G, v), G.points[i])


def test_counterexample_vertex_image():
    np.testing.assert_allclose(map_eval(CX, np.array([1.0, 1.0, 0.0])), [0.75, 0.75, 0.0], atol=1e-15)
    np.testing.assert_allclose(map_eval(CX, np.array([1.0, 1.0, 1.0])), [3 / 8, 3 / 8, 1.0], atol=1e-15)


def test_scaling_map_cofactor():
    G = GeometryMap(REF_VERTICES[2] * [2.0, 3.0])
    jd = jacobian(G, np.array([0.5, 0.5]))
    np.testing.assert_allclose(jd.cof, [[3.0, 0.0], [0.0, 2.0]])
    assert jd.detJ == pytest.approx(6.0)


def test_counterexample_cofactor_column_closed_form():
    rng = np.random.default_rng(0)
    x = rng.random((30, 3))
    x1, x3 = x[:, 0], x[:, 2]
    expected = ((x3 - 2) / 16)[:, None] * np.stack([2 * (x1 - 4), -2 * x1, x1 * (x1 - 4)], axis=1)
    C = cofactor(CX.jacobians(x))
    np.testing.assert_allclose(C[:, :, 0], expected, atol=1e-14)
    np.testing.assert_allclose(jacobian(CX, np.zeros(3)).cof_column(0), [1.0, 0.0, 0.0], atol=1e-15)


def test_cross_product_columns_examples():
    I = GeometryMap(REF_VERTICES[3], "affine3d")
    for c, e in zip(cof_columns_crossproduct(I, np.array([0.2, 0.3, 0.4])), np.eye(3)):
        np.testing.assert_allclose(c, e)
    D = GeometryMap(REF_VERTICES[3] * [2.0, 3.0, 4.0], "affine3d")
    cols = cof_columns_crossproduct(D, np.array([0.5, 0.5, 0.5]))
    np.testing.assert_allclose(cols[0], [12, 0, 0])
    np.testing.assert_allclose(cols[1], [0, 8, 0])
    np.testing.assert_allclose(cols[2], [0, 0, 6])


def test_cross_product_matches_minors_on_random_trilinear():
    rng = np.random.default_rng(5)
    G = GeometryMap(REF_VERTICES[3] + 0.15 * rng.standard_normal((8, 3)), "trilinear3d")
    x = sample_grid(3, 3)
    C = cofactor(G.jacobians(x))
    for j, col in enumerate(cof_columns_crossproduct(G, x)):
        np.testing.assert_allclose(col, C[:, :, j], atol=1e-12)


def test_cross_product_requires_3d():
    with pytest.raises(DimensionError):
        cof_columns_crossproduct(GeometryMap(REF_VERTICES[2]), np.array([0.5, 0.5]))


@pytest.mark.parametrize("d", [2, 3])
def test_cofactor_identities_random(d):
    rng = np.random.default_rng(10 + d)
    for _ in range(100):
        J = random_J(rng, d)
        C = cofactor(J)
        det = determinant(J)
        scale = np.abs(J).max() ** 2
        assert np.abs(det * np.linalg.inv(J).T - C).max() <= 1e-10 * scale
        assert np.abs(J.T @ C - det * np.eye(d)).max() <= 1e-10 * np.abs(J).max() ** d


def test_2d_cofactor_columns_are_rotations():
    rng = np.random.default_rng(3)
    R = np.array([[0.0, 1.0], [-1.0, 0.0]])  # clockwise quarter turn
    for _ in range(20):
        J = random_J(rng, 2)
        C = cofactor(J)
        np.testing.assert_array_equal(C[:, 0], R @ J[:, 1])
        np.testing.assert_array_equal(C[:, 1], -R @ J[:, 0])


def test_affine_jacobian_constant():
    rng = np.random.default_rng(2)
    A = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    G = GeometryMap(REF_VERTICES[3] @ A.T + 1.0, "affine3d")
    J = G.jacobians(sample_grid(3, 4))
    assert np.abs(J - J[0]).max() <= 1e-13
    assert G.is_affine


def test_affine_validation():
    assert is_parallelepiped(REF_VERTICES[3] * 2.0)
    assert not is_parallelepiped(COUNTEREXAMPLE_VERTICES)
    with pytest.raises(MeshError):
        GeometryMap(COUNTEREXAMPLE_VERTICES, "affine3d")


def test_degenerate_jacobian():
    flipped = REF_VERTICES[2][[1, 0, 3, 2]]
    with pytest.raises(DegenerateElementError):
        jacobian(GeometryMap(flipped), np.array([0.5, 0.5]))


def test_shape_metrics_unit_square():
    m = shape_regularity_metrics(GeometryMap(REF_VERTICES[2]))
    assert m.h == pytest.approx(np.sqrt(2))
    assert m.det_min == pytest.approx(0.5) and m.det_max == pytest.approx(0.5)


def test_shape_metrics_scaled_cube():
    s = 2.5
    m = shape_regularity_metrics(GeometryMap(REF_VERTICES[3] * s, "affine3d"))
    assert m.h == pytest.approx(s * np.sqrt(3))
    assert m.sv_min == pytest.approx(1 / np.sqrt(3)) and m.sv_max == pytest.approx(1 / np.sqrt(3))


def test_counterexample_is_admissible():
    assert min_det(CX, 21) > 0
    assert shape_regularity_metrics(CX).det_min > 0
