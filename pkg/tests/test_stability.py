import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from helpers import project_displacement
from mixedelast.assembly import Discretization
from mixedelast.mesh import uniform_mesh
from mixedelast.stability import (
    StabilityError,
    WitnessError,
    construct_witness,
    diagnostics_csv,
    divergence_rank_deficiency,
    infsup_constant,
    infsup_report,
    macro_kernel,
    mesh_norms,
    mesh_seminorm,
    mesh_stress_norm,
)

FLOOR = np.sqrt(2.0 / 3.0)


def _field(n, k, field, family="full", bc="displacement"):
    disc = Discretization(uniform_mesh(n), k, family, bc)
    return disc, project_displacement(disc, field)


def test_witness_constant_first_component():
    disc, v = _field(1, 1, lambda x, y: (np.ones_like(x), 0 * y))
    w = construct_witness(v, disc.mesh, 1)
    pts = np.array([[-1.0, 0.2], [0.0, -0.5], [1.0, 0.9]])
    x = (pts[:, 0] + 1) / 2
    vals = disc.eval_stress(w.coeffs, pts)[0]
    assert_allclose(vals[0], x, atol=1e-14)
    assert_allclose(vals[1:], 0.0, atol=1e-14)
    tau2, div2 = w.norms()
    assert_allclose(tau2, 1.0 / 3.0, rtol=1e-12)
    assert_allclose(div2, 1.0, rtol=1e-12)


def test_witness_constant_second_component():
    disc, v = _field(2, 1, lambda x, y: (0 * x, np.ones_like(y)))
    w = construct_witness(v, disc.mesh, 1)
    pts = np.array([[0.3, -1.0], [0.3, 1.0]])
    vals = disc.eval_stress(w.coeffs, pts)
    X = disc.physical_points(pts)
    assert_allclose(vals[:, 1], X[..., 1], atol=1e-14)
    assert_allclose(vals[:, 0], 0.0, atol=1e-14)


def test_witness_random_fields(rng):
    mesh = uniform_mesh(4)
    for family in ("full", "reduced"):
        for _ in range(50):
            disc = Discretization(mesh, 2, family)
            v = rng.standard_normal(disc.dofmap.num_disp)
            w = construct_witness(v, mesh, 2, family)
            assert w.div_residual(v) < 1e-10
            tau2, div2 = w.norms()
            assert_allclose(div2, v @ v, rtol=1e-10)
            assert tau2 + div2 <= 1.5 * (v @ v) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 5), k=st.integers(1, 3), family=st.sampled_from(["full", "reduced"]),
       seed=st.integers(0, 2**32 - 1))
def test_witness_property(n, k, family, seed):
    disc = Discretization(uniform_mesh(n), k, family)
    v = np.random.default_rng(seed).standard_normal(disc.dofmap.num_disp)
    w = construct_witness(v, disc.mesh, k, family)
    assert w.representation_residual <= 1e-10
    assert w.div_residual(v) < 1e-10 * max(1.0, np.abs(v).max())
    tau2, div2 = w.norms()
    assert tau2 <= 0.5 * (v @ v) * (1 + 1e-12)


def test_witness_rejects_wrong_length():
    with pytest.raises(WitnessError):
        construct_witness(np.zeros(3), uniform_mesh(2), 1)


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("family", ["full", "reduced"])
def test_infsup_displacement_above_floor(k, family):
    beta = infsup_constant(uniform_mesh(4), k, family)
    assert FLOOR - 1e-9 <= beta <= 1.0


def test_infsup_stable_under_refinement():
    b2 = infsup_constant(uniform_mesh(2), 2, bc="traction")
    b4 = infsup_constant(uniform_mesh(4), 2, bc="traction")
    assert b2 > 0 and b4 > 0
    assert 0.5 < b4 / b2 < 2.0


def test_infsup_traction_kernel_is_rigid_motions():
    r = infsup_report(uniform_mesh(4), 1, bc="traction")
    assert r.kernel_dim == 3
    assert r.beta_h > 0.5


def test_infsup_mesh_norm_variant():
    betas = [infsup_report(uniform_mesh(n), 1, bc="traction", norm="mesh").beta_h for n in (2, 4)]
    assert min(betas) > 0.1
    assert betas[1] / betas[0] > 0.5


def test_infsup_limits():
    with pytest.raises(ValueError):
        infsup_constant(uniform_mesh(16), 1)
    with pytest.raises(ValueError):
        infsup_report(uniform_mesh(2), 1, norm="h1")


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 2])
def test_divergence_full_rank_on_rigid_free_space(n, k):
    assert divergence_rank_deficiency(uniform_mesh(n), k) == 0


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("family", ["full", "reduced"])
def test_macro_kernel_is_rigid_motions(k, family):
    mk = macro_kernel(k, family)
    assert mk.dim == 3
    assert mk.angle_to(mk.rigid_motions()) < 1e-8


@pytest.mark.parametrize("family", ["full", "reduced"])
def test_macro_kernel_lowest_order_checkerboard(family):
    mk = macro_kernel(1, family)
    assert mk.dim == 3
    assert mk.contains(mk.checkerboard()) < 1e-10
    # cell averages of (y, -x) about the patch centre are the checkerboard itself
    assert mk.angle_to(mk.rigid_motions()) < 1e-8


def test_macro_kernel_rejects_order():
    with pytest.raises(ValueError):
        macro_kernel(4)


def test_mesh_seminorm_translation_zero():
    disc, v = _field(2, 1, lambda x, y: (np.ones_like(x), 2 * np.ones_like(y)), bc="traction")
    assert mesh_seminorm(v, disc) < 1e-12


def test_mesh_seminorm_checkerboard_zero():
    mk = macro_kernel(1)
    assert mesh_norms(mk.checkerboard(), mk.disc, "displacement") < 1e-12


def test_mesh_seminorm_positive_on_stretch():
    disc, v = _field(2, 1, lambda x, y: (x, 0 * y), bc="traction")
    assert mesh_seminorm(v, disc) > 0.1


def test_mesh_stress_norm():
    disc = Discretization(uniform_mesh(2), 1, "full", "traction")
    assert mesh_stress_norm(np.zeros(disc.dofmap.num_stress), disc) == 0.0
    rng = np.random.default_rng(1)
    tau = rng.standard_normal(disc.dofmap.num_stress)
    a = mesh_norms(tau, disc, "stress")
    assert a > 0
    assert_allclose(mesh_norms(2 * tau, disc, "stress"), 2 * a)


def test_mesh_norms_reject_odd_mesh_and_kind():
    disc = Discretization(uniform_mesh(3), 1, "full", "traction")
    with pytest.raises(ValueError, match="even"):
        mesh_seminorm(np.zeros(disc.dofmap.num_disp), disc)
    with pytest.raises(ValueError):
        mesh_norms(np.zeros(1), disc, "energy")


def test_diagnostics_csv():
    rows = [infsup_report(uniform_mesh(n), 1) for n in (2, 4)]
    text = diagnostics_csv(rows).splitlines()
    assert text[0] == "n,k,family,bc,beta_h,kernel_dim"
    assert text[1].startswith("2,1,full,displacement,0.9")


def test_stability_error_type():
    assert issubclass(StabilityError, RuntimeError)
