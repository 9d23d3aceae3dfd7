import numpy as np
import pytest
from numpy.testing import assert_allclose

from mixedelast.ref3d import (
    DIV_ROWS,
    PLANES,
    airy_product,
    all_elements_3d,
    displacement_element_3d,
    divergence_residuals_3d,
    normal_stress_element_3d,
    shear_element_3d,
    shear_heights,
    shear_space_3d,
    stress_element_3d,
    verify_unisolvence_3d,
)
from mixedelast.refelem import UnisolvenceError, divergence_fields


def test_lowest_order_full_counts():
    assert len(normal_stress_element_3d(1, "full")) == 9
    assert len(stress_element_3d(1, "full")) == 21
    assert len(displacement_element_3d(1, "full")) == 6


def test_lowest_order_reduced_counts():
    assert len(normal_stress_element_3d(1, "reduced")) == 6
    assert len(stress_element_3d(1, "reduced")) == 18
    assert len(displacement_element_3d(1, "reduced")) == 3


def test_shear_dimensions():
    assert len(shear_element_3d(1, "xy", "full")) == 4
    # P_1(X, Y) x P_0(Z) before the Airy share is added
    base = shear_space_3d(1, "xy", "reduced").raw_count - len(airy_product(1, "xy", 2))
    assert base == 3


def test_normal_dimension_formula():
    for k in (1, 2):
        assert len(normal_stress_element_3d(k, "full")) == 3 * k**3 + 3 * k**2 + 6 * k - 3


@pytest.mark.parametrize("elem", all_elements_3d(), ids=lambda e: e.name)
def test_unisolvence(elem):
    rep = verify_unisolvence_3d(elem)
    assert rep.ok and rep.cond < 1e8


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("family", ["full", "reduced"])
def test_duality(k, family):
    elem = stress_element_3d(k, family)
    assert_allclose(elem.dof_matrix(elem.basis), np.eye(len(elem)), atol=1e-10)


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("family", ["full", "reduced"])
def test_divergence_inclusion(k, family):
    assert divergence_residuals_3d(k, family).max() < 1e-11


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("plane", list(PLANES))
def test_airy_products_divergence_free(k, plane):
    f = np.array(airy_product(k, plane, k + 1))
    assert np.abs(divergence_fields(f, 3, DIV_ROWS)).max() < 1e-14


def test_shear_points_share_heights():
    elem = shear_element_3d(2, "xz", "full")
    Z = PLANES["xz"][3]
    heights = np.unique(np.round([d.points[0, Z] for d in elem.dofs if d.kind in ("edge-point", "face-point")], 14))
    assert_allclose(np.sort(heights), np.sort(shear_heights(2)))
    assert sum(d.kind == "edge-point" for d in elem.dofs) == 4 * 2
    assert sum(d.kind == "face-point" for d in elem.dofs) == 4 * 2 * 1


def test_order_cap():
    with pytest.raises(ValueError):
        stress_element_3d(3)
    with pytest.raises(ValueError):
        shear_element_3d(1, "zz")


def test_broken_dofs_rejected():
    from mixedelast.refelem import ReferenceElement

    elem = normal_stress_element_3d(1, "full")
    dofs = list(elem.dofs)
    dofs[-1] = dofs[0]
    with pytest.raises(UnisolvenceError):
        verify_unisolvence_3d(ReferenceElement("broken", elem.space, dofs))
