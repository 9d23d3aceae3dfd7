"""Global numbering, boundary conditions and saddle-point assembly (2D).

All cells of a uniform mesh are translates of each other, so local matrices
are computed once on the reference square and scattered.  Global stress
DOFs are the physical-coordinate functionals: edge moments carry a factor
``h/2``, interior moments ``(h/2)^2`` and point values none.  Displacement
basis functions are L2-orthonormal on each cell, so the displacement mass
matrix is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh
from .polys import tensor_rule
from .refelem import ReferenceElement
from .refelem2d import FAMILIES, displacement_element, stress_element

BCS = ("displacement", "traction")
COMPAT_TOL = 1e-8


class IncompatibleLoadError(ValueError):
    """Pure-traction load with a nonzero rigid-motion component."""

    def __init__(self, moments):
        self.moments = np.asarray(moments)
        super().__init__(f"load is not orthogonal to rigid motions: moments {self.moments}")


class QuadratureOrderError(ValueError):
    pass


@dataclass(frozen=True)
class Material:
    lam: float = 1.0
    mu: float = 0.5

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")

    @property
    def trace_factor(self) -> float:
        return self.lam / (2 * self.mu + 2 * self.lam)

    def compliance(self, s11, s22, s12):
        """Apply the isotropic compliance to stress components."""
        tr = self.trace_factor * (s11 + s22)
        c = 1.0 / (2 * self.mu)
        return c * (s11 - tr), c * (s22 - tr), c * s12

    def stiffness(self, e11, e22, e12):
        """``2 mu eps + lambda tr(eps) delta``; inverse of :meth:`compliance`."""
        tr = self.lam * (e11 + e22)
        return 2 * self.mu * e11 + tr, 2 * self.mu * e22 + tr, 2 * self.mu * e12


# ---------------------------------------------------------------------------
# DOF map
# ---------------------------------------------------------------------------


@dataclass
class DofMap:
    mesh: Mesh
    k: int
    family: str
    bc: str
    stress_l2g: np.ndarray  # (nK, nloc), -1 for constrained DOFs
    disp_l2g: np.ndarray  # (nK, nlocu)
    num_stress: int
    num_disp: int
    stress_entities: list[tuple] = field(repr=False)  # global index -> (kind, entity id, index)

    @property
    def num_total(self) -> int:
        return self.num_stress + self.num_disp

    @property
    def num_multipliers(self) -> int:
        return 3 if self.bc == "traction" else 0


def build_dof_map(mesh: Mesh, k: int, family: str = "full", bc: str = "displacement") -> DofMap:
    if bc not in BCS:
        raise ValueError(f"bc must be one of {BCS}, got {bc!r}")
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    se = stress_element(k, family)
    ue = displacement_element(k, family)
    traction = bc == "traction"

    index: dict[tuple, int] = {}
    entities: list[tuple] = []

    def number(key, constrained):
        if constrained:
            return -1
        if key not in index:
            index[key] = len(entities)
            entities.append(key)
        return index[key]

    nK = mesh.num_elements
    l2g = np.empty((nK, len(se)), dtype=int)
    for K in range(nK):
        for i, d in enumerate(se.dofs):
            kind, loc = d.entity
            if kind == "edge":
                e = int(mesh.element_edges[K, loc])
                key = ("edge", e, d.index)
                constrained = traction and mesh.edge_is_boundary(e)
            elif kind == "vertex":
                v = int(mesh.element_vertices[K, loc])
                key = ("vertex", v, 0)
                constrained = traction and mesh.vertex_is_boundary(v)
            else:
                key = ("cell", K, i)
                constrained = False
            l2g[K, i] = number(key, constrained)
    nu = len(ue)
    disp = np.arange(nK * nu).reshape(nK, nu)
    return DofMap(mesh, k, family, bc, l2g, disp, len(entities), nK * nu, entities)


# ---------------------------------------------------------------------------
# Discretisation: reference tables + evaluation helpers
# ---------------------------------------------------------------------------


class Discretization:
    """Reference tables for one (mesh, k, family, bc) combination."""

    def __init__(self, mesh: Mesh, k: int, family: str = "full", bc: str = "displacement"):
        self.mesh = mesh
        self.k = k
        self.family = family
        self.bc = bc
        self.dofmap = build_dof_map(mesh, k, family, bc)
        self.stress: ReferenceElement = stress_element(k, family)
        self.disp: ReferenceElement = displacement_element(k, family)
        half = 0.5 * mesh.h
        self.half = half
        self.stress_scale = half ** self.stress.jacobian_powers().astype(float)
        self.disp_scale = half

    # --- reference-point tables (physical scaling applied) ---------------

    def stress_values(self, ref_pts: np.ndarray) -> np.ndarray:
        """Physical stress basis at reference points: (nloc, 3, m)."""
        return self.stress.values(ref_pts) / self.stress_scale[:, None, None]

    def stress_divergence(self, ref_pts: np.ndarray) -> np.ndarray:
        """Physical divergence of the stress basis: (nloc, 2, m)."""
        dx = self.stress.derivatives(ref_pts, 0) / self.half
        dy = self.stress.derivatives(ref_pts, 1) / self.half
        div = np.stack([dx[:, 0] + dy[:, 2], dx[:, 2] + dy[:, 1]], axis=1)
        return div / self.stress_scale[:, None, None]

    def disp_values(self, ref_pts: np.ndarray) -> np.ndarray:
        return self.disp.values(ref_pts) / self.disp_scale

    # --- coefficient <-> field ---------------------------------------------

    def local_stress(self, coeffs: np.ndarray) -> np.ndarray:
        """Per-element local coefficients (nK, nloc) from a global vector."""
        l2g = self.dofmap.stress_l2g
        out = np.where(l2g >= 0, coeffs[np.maximum(l2g, 0)], 0.0)
        return out

    def local_disp(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs[self.dofmap.disp_l2g]

    def eval_stress(self, coeffs: np.ndarray, ref_pts: np.ndarray) -> np.ndarray:
        """(nK, 3, m) stress values at the mapped reference points."""
        return np.einsum("ki,icm->kcm", self.local_stress(coeffs), self.stress_values(ref_pts))

    def eval_stress_div(self, coeffs: np.ndarray, ref_pts: np.ndarray) -> np.ndarray:
        return np.einsum("ki,icm->kcm", self.local_stress(coeffs), self.stress_divergence(ref_pts))

    def eval_disp(self, coeffs: np.ndarray, ref_pts: np.ndarray) -> np.ndarray:
        return np.einsum("ki,icm->kcm", self.local_disp(coeffs), self.disp_values(ref_pts))

    def physical_points(self, ref_pts: np.ndarray) -> np.ndarray:
        """(nK, m, 2) physical coordinates of the mapped reference points."""
        c = self.mesh.centers()
        return c[:, None, :] + self.half * ref_pts[None, :, :]

    # --- local matrices ----------------------------------------------------

    @cached_property
    def quad_points(self) -> int:
        return self.k + 3

    def _rule(self, npts=None):
        pts, w = tensor_rule(npts or self.quad_points, 2)
        return pts, w * self.half**2

    def local_compliance(self, material: Material) -> np.ndarray:
        pts, w = self._rule()
        phi = self.stress_values(pts)
        a11, a22, a12 = material.compliance(phi[:, 0], phi[:, 1], phi[:, 2])
        m = (np.einsum("im,jm,m->ij", a11, phi[:, 0], w)
             + np.einsum("im,jm,m->ij", a22, phi[:, 1], w)
             + 2 * np.einsum("im,jm,m->ij", a12, phi[:, 2], w))
        return 0.5 * (m + m.T)

    def local_stress_mass(self) -> np.ndarray:
        """L2 Gram matrix with the Frobenius product (s12 counted twice)."""
        pts, w = self._rule()
        phi = self.stress_values(pts)
        wc = np.array([1.0, 1.0, 2.0])
        m = np.einsum("icm,jcm,c,m->ij", phi, phi, wc, w)
        return 0.5 * (m + m.T)

    def local_divdiv(self) -> np.ndarray:
        pts, w = self._rule()
        d = self.stress_divergence(pts)
        m = np.einsum("icm,jcm,m->ij", d, d, w)
        return 0.5 * (m + m.T)

    def local_coupling(self) -> np.ndarray:
        """``B_loc[a, i] = (div phi_i, psi_a)_K``."""
        pts, w = self._rule()
        d = self.stress_divergence(pts)
        psi = self.disp_values(pts)
        return np.einsum("acm,icm,m->ai", psi, d, w)

    # --- scatter -----------------------------------------------------------

    def scatter_stress(self, local: np.ndarray) -> sp.csr_matrix:
        l2g = self.dofmap.stress_l2g
        n = self.dofmap.num_stress
        rows = np.broadcast_to(l2g[:, :, None], l2g.shape + (l2g.shape[1],))
        cols = np.broadcast_to(l2g[:, None, :], rows.shape)
        vals = np.broadcast_to(local[None], rows.shape)
        mask = (rows >= 0) & (cols >= 0)
        m = sp.coo_matrix((vals[mask], (rows[mask], cols[mask])), shape=(n, n)).tocsr()
        return ((m + m.T) * 0.5).tocsr()

    def scatter_coupling(self, local: np.ndarray) -> sp.csr_matrix:
        sl = self.dofmap.stress_l2g
        ul = self.dofmap.disp_l2g
        rows = np.broadcast_to(ul[:, :, None], (ul.shape[0], ul.shape[1], sl.shape[1]))
        cols = np.broadcast_to(sl[:, None, :], rows.shape)
        vals = np.broadcast_to(local[None], rows.shape)
        mask = cols >= 0
        shape = (self.dofmap.num_disp, self.dofmap.num_stress)
        return sp.coo_matrix((vals[mask], (rows[mask], cols[mask])), shape=shape).tocsr()

    def compliance_matrix(self, material: Material) -> sp.csr_matrix:
        return self.scatter_stress(self.local_compliance(material))

    def stress_mass_matrix(self) -> sp.csr_matrix:
        return self.scatter_stress(self.local_stress_mass())

    def divdiv_matrix(self) -> sp.csr_matrix:
        return self.scatter_stress(self.local_divdiv())

    def coupling_matrix(self) -> sp.csr_matrix:
        return self.scatter_coupling(self.local_coupling())

    # --- loads and rigid motions ---------------------------------------------

    def load_vector(self, load: Callable, npts: int | None = None) -> np.ndarray:
        """``F_a = (f, psi_a)``; ``load(x, y)`` returns a pair of arrays."""
        npts = npts or self.quad_points
        if npts < self.k + 2:
            raise QuadratureOrderError(
                f"load quadrature with {npts} points per axis is below the required {self.k + 2}"
            )
        pts, w = self._rule(npts)
        X = self.physical_points(pts)
        f1, f2 = load(X[..., 0], X[..., 1])
        f = np.stack([np.broadcast_to(f1, X.shape[:2]), np.broadcast_to(f2, X.shape[:2])], axis=1)
        psi = self.disp_values(pts)
        local = np.einsum("kcm,acm,m->ka", f, psi, w)
        out = np.zeros(self.dofmap.num_disp)
        np.add.at(out, self.dofmap.disp_l2g, local)
        return out

    def rigid_motion_rows(self) -> np.ndarray:
        """(3, num_disp): ``(psi_a, w)`` for w in (1,0), (0,1), (y,-x)."""
        pts, w = self._rule()
        X = self.physical_points(pts)
        psi = self.disp_values(pts)
        ones, zeros = np.ones(X.shape[:2]), np.zeros(X.shape[:2])
        motions = [(ones, zeros), (zeros, ones), (X[..., 1], -X[..., 0])]
        rows = np.zeros((3, self.dofmap.num_disp))
        for r, (w1, w2) in enumerate(motions):
            local = (np.einsum("km,am,m->ka", w1, psi[:, 0], w)
                     + np.einsum("km,am,m->ka", w2, psi[:, 1], w))
            np.add.at(rows[r], self.dofmap.disp_l2g, local)
        return rows

    def rigid_motion_moments(self, load: Callable, npts: int | None = None) -> np.ndarray:
        pts, w = self._rule(npts or self.quad_points + 2)
        X = self.physical_points(pts)
        f1, f2 = load(X[..., 0], X[..., 1])
        f1 = np.broadcast_to(f1, X.shape[:2])
        f2 = np.broadcast_to(f2, X.shape[:2])
        return np.array([
            np.einsum("km,m->", f1, w),
            np.einsum("km,m->", f2, w),
            np.einsum("km,m->", f1 * X[..., 1] - f2 * X[..., 0], w),
        ])


# ---------------------------------------------------------------------------
# Saddle system
# ---------------------------------------------------------------------------


@dataclass
class SaddleSystem:
    disc: Discretization
    material: Material
    A: sp.csr_matrix
    B: sp.csr_matrix
    F: np.ndarray
    C: np.ndarray | None = None

    @property
    def sizes(self) -> tuple[int, int, int]:
        nc = 0 if self.C is None else self.C.shape[0]
        return self.A.shape[0], self.B.shape[0], nc

    def matrix(self) -> sp.csr_matrix:
        ns, nu, nc = self.sizes
        blocks = [[self.A, self.B.T], [self.B, None]]
        if nc:
            C = sp.csr_matrix(self.C)
            blocks = [[self.A, self.B.T, None], [self.B, None, C.T], [None, C, None]]
        return sp.bmat(blocks, format="csr")

    def rhs(self) -> np.ndarray:
        ns, nu, nc = self.sizes
        return np.concatenate([np.zeros(ns), self.F, np.zeros(nc)])


def rigid_motion_rows(mesh: Mesh, k: int, family: str = "full") -> np.ndarray:
    return Discretization(mesh, k, family, "traction").rigid_motion_rows()


def assemble(mesh: Mesh, k: int, family: str = "full", bc: str = "displacement",
             material: Material | None = None, load: Callable | None = None,
             quad_points: int | None = None) -> SaddleSystem:
    """Assemble ``[[A, B^T], [B, 0]]`` (plus rigid-motion rows for traction).

    ``load(x, y)`` returns ``(f1, f2)``; ``None`` means zero load.
    """
    material = material or Material()
    disc = Discretization(mesh, k, family, bc)
    if quad_points is not None and quad_points < k + 2:
        raise QuadratureOrderError(f"{quad_points} points per axis cannot integrate order-{k} loads")
    A = disc.compliance_matrix(material)
    B = disc.coupling_matrix()
    if load is None:
        F = np.zeros(disc.dofmap.num_disp)
    else:
        F = disc.load_vector(load, quad_points)
    C = None
    if bc == "traction":
        if load is not None:
            moments = disc.rigid_motion_moments(load)
            if np.max(np.abs(moments)) > COMPAT_TOL:
                raise IncompatibleLoadError(moments)
        C = disc.rigid_motion_rows()
    return SaddleSystem(disc, material, A, B, F, C)
