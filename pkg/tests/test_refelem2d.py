import numpy as np
import pytest
from numpy.testing import assert_allclose

from mixedelast.refelem import (
    ReferenceElement,
    UnisolvenceError,
    divergence_fields,
    evaluate,
    membership_residual,
    verify_unisolvence,
)
from mixedelast.refelem2d import (
    DIV_ROWS,
    EDGES,
    displacement_element,
    displacement_space,
    expected_dims,
    normal_stress_element,
    reduced_enrichment,
    shear_element,
    stress_element,
)


@pytest.mark.parametrize("k, family, dim", [(1, "full", 6), (2, "full", 14), (3, "full", 22),
                                            (1, "reduced", 4), (2, "reduced", 10), (3, "reduced", 18)])
def test_normal_dimensions(k, family, dim):
    assert len(normal_stress_element(k, family).space) == dim


def test_full_normal_dimension_formula():
    for k in (2, 3):
        assert len(normal_stress_element(k).space) == k * k + 3 * k + 4


@pytest.mark.parametrize("k, dim", [(1, 4), (2, 8), (3, 12)])
def test_shear_dimensions(k, dim):
    assert len(shear_element(k).space) == dim


@pytest.mark.parametrize("k, family, dim", [(1, "full", 4), (2, "full", 10), (3, "full", 16),
                                            (1, "reduced", 2), (2, "reduced", 6), (3, "reduced", 12)])
def test_displacement_dimensions(k, family, dim):
    assert len(displacement_element(k, family).space) == dim


def test_lowest_order_counts():
    assert (len(stress_element(1, "full")), len(displacement_element(1, "full"))) == (10, 4)
    assert (len(stress_element(1, "reduced")), len(displacement_element(1, "reduced"))) == (8, 2)


def test_reduced_enrichment_generators():
    e1 = reduced_enrichment(1)
    assert len(e1) == 1
    f = e1.fields[0]  # (s11, s22, s12) = (2x^2, 2y^2, -4xy)
    assert_allclose(f[0, 2, 0], 2.0)
    assert_allclose(f[1, 0, 2], 2.0)
    assert_allclose(f[2, 1, 1], -4.0)
    assert_allclose(np.abs(f).sum(), 8.0)
    assert len(reduced_enrichment(2)) == 2


@pytest.mark.parametrize("k", [1, 2, 3])
def test_reduced_enrichment_formula_and_divergence(k):
    f = reduced_enrichment(k).fields[0]
    # J(x^{k+1} y^2): s11 = 2 x^{k+1}, s12 = -2(k+1) x^k y, s22 = k(k+1) x^{k-1} y^2
    assert_allclose(f[0, k + 1, 0], 2.0)
    assert_allclose(f[2, k, 1], -2.0 * (k + 1))
    assert_allclose(f[1, k - 1, 2], k * (k + 1))
    div = divergence_fields(reduced_enrichment(k).fields, 2, DIV_ROWS)
    assert np.abs(div).max() < 1e-14


def test_unisolvence_all(order_family):
    k, family = order_family
    dims = expected_dims(k, family)
    elems = {"normal": normal_stress_element(k, family), "stress": stress_element(k, family),
             "displacement": displacement_element(k, family)}
    for kind, elem in elems.items():
        rep = verify_unisolvence(elem)
        assert rep.ok and rep.cond < 1e8
        assert rep.dimension == rep.ndofs == dims[kind]


@pytest.mark.parametrize("k", [1, 2, 3])
def test_shear_unisolvent(k):
    assert verify_unisolvence(shear_element(k)).ok


def test_duality(order_family):
    k, family = order_family
    for elem in (stress_element(k, family), displacement_element(k, family)):
        M = elem.dof_matrix(elem.basis)
        assert_allclose(M, np.eye(len(elem)), atol=1e-10)


def test_divergence_inclusion(order_family):
    k, family = order_family
    div = divergence_fields(stress_element(k, family).basis, 2, DIV_ROWS)
    assert membership_residual(div, displacement_space(k, family)).max() < 1e-11


def test_divergence_inclusion_detects_outsider():
    # div of (x^3, 0, 0) is (3x^2, 0), which is not in V_1
    f = np.zeros((1, 3, 4, 4))
    f[0, 0, 3, 0] = 1.0
    div = divergence_fields(f, 2, DIV_ROWS)
    assert membership_residual(div, displacement_space(1)).max() > 0.1


@pytest.mark.parametrize("k", [1, 2, 3])
def test_normal_traces_have_degree_below_k(k):
    basis = stress_element(k, "full").basis
    t = np.linspace(-1, 1, 2 * k + 3)
    for axis, value, comp in ((0, -1.0, 0), (0, 1.0, 0), (1, -1.0, 1), (1, 1.0, 1)):
        pts = np.zeros((len(t), 2))
        pts[:, axis] = value
        pts[:, 1 - axis] = t
        vals = evaluate(basis, pts)[:, comp]
        V = np.vander(t, k, increasing=True)  # degree k-1
        coef, *_ = np.linalg.lstsq(V, vals.T, rcond=None)
        assert np.abs(V @ coef - vals.T).max() < 1e-11


def test_edge_moments_only_see_their_edge():
    elem = stress_element(2, "full")
    for d in elem.dofs:
        if d.kind != "edge-moment":
            continue
        axis, value, _ = EDGES[d.entity[1]]
        assert_allclose(d.points[:, axis], value)


def test_dof_linearity(rng):
    elem = stress_element(2, "reduced")
    a, b = rng.standard_normal(2)
    f, g = elem.space.fields[3], elem.space.fields[7]
    for d in elem.dofs:
        assert_allclose(d(a * f + b * g), a * d(f) + b * d(g), atol=1e-12)


def test_duplicated_dof_is_singular():
    elem = normal_stress_element(1, "full")
    dofs = list(elem.dofs)
    dofs[1] = dofs[0]
    with pytest.raises(UnisolvenceError):
        verify_unisolvence(ReferenceElement("duplicated", elem.space, dofs))


def test_wrong_dof_count_rejected():
    elem = shear_element(2)
    with pytest.raises(UnisolvenceError, match="7 DOFs"):
        verify_unisolvence(ReferenceElement("short", elem.space, elem.dofs[:-1]))


@pytest.mark.parametrize("k", [0, 4])
def test_order_out_of_range(k):
    with pytest.raises(ValueError):
        stress_element(k)
