"""Stability diagnostics: constructive divergence witness, discrete inf-sup
constants, macroelement kernels and the mesh-dependent norms used for the
lowest-order pure-traction analysis.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .assembly import Discretization
from .mesh import Mesh, macroelements, uniform_mesh
from .polys import gauss_rule, tensor_rule
from .refelem import resize

KERNEL_RTOL = 1e-9
WITNESS_TOL = 1e-10


class StabilityError(RuntimeError):
    """A stability property that should hold does not."""


class WitnessError(ValueError):
    """The witness could not be represented in the discrete stress space."""


# ---------------------------------------------------------------------------
# Constructive witness
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _operators(n: int, k: int, family: str, bc: str = "displacement"):
    """Discretization with its coupling, stress-mass and div-div matrices."""
    disc = Discretization(uniform_mesh(n), k, family, bc)
    return disc, disc.coupling_matrix(), disc.stress_mass_matrix(), disc.divdiv_matrix()


@dataclass
class WitnessField:
    """Diagonal stress ``diag(t11, t22)`` with ``div = v``.

    ``tables`` holds per-element reference coefficient tables of
    ``(t11, t22, t12)``; ``coeffs`` is the global stress vector.
    """

    disc: Discretization
    tables: np.ndarray
    coeffs: np.ndarray
    representation_residual: float

    def _ops(self):
        d = self.disc
        return _operators(d.mesh.n, d.k, d.family)[1:]

    def div_residual(self, v: np.ndarray) -> float:
        """Max coefficient mismatch between ``P_h div tau`` and ``v``."""
        B, _, _ = self._ops()
        return float(np.max(np.abs(B @ self.coeffs - v)))

    def norms(self) -> tuple[float, float]:
        """(||tau||^2, ||div tau||^2)."""
        _, M, Dd = self._ops()
        c = self.coeffs
        return float(c @ (M @ c)), float(c @ (Dd @ c))


def _antiderivative(table: np.ndarray, axis: int) -> np.ndarray:
    """``int_{-1}^{t} p`` along ``axis`` of a square 2D coefficient table."""
    t = np.moveaxis(table, axis, 0)
    if np.any(t[-1]):
        raise ValueError("table too small for the antiderivative")
    out = np.zeros_like(t)
    out[1:] = t[:-1] / np.arange(1, t.shape[0])[:, None]
    signs = (-1.0) ** np.arange(out.shape[0])
    out[0] = -np.tensordot(signs, out, axes=1)
    return np.moveaxis(out, 0, axis)


def _at_end(table: np.ndarray, axis: int) -> np.ndarray:
    """Restriction to ``t = 1`` along ``axis``, as a table constant in that axis."""
    trace = table.sum(axis=axis)
    out = np.zeros_like(table)
    idx = [slice(None)] * 2
    idx[axis] = 0
    out[tuple(idx)] = trace
    return out


def construct_witness(v: np.ndarray, mesh: Mesh, k: int, family: str = "full") -> WitnessField:
    """Build ``tau = diag(int_0^x v1 dx, int_0^y v2 dy)`` in the discrete space.

    The antiderivatives are accumulated element by element, left to right
    for ``t11`` and bottom to top for ``t22``, which makes ``t11``
    continuous across vertical edges and ``t22`` across horizontal ones.
    """
    disc = _operators(mesh.n, k, family)[0]
    v = np.asarray(v, dtype=float)
    if v.shape != (disc.dofmap.num_disp,):
        raise WitnessError(f"expected {disc.dofmap.num_disp} displacement coefficients, got {v.shape}")
    mesh = disc.mesh
    n = mesh.n
    D = disc.stress.space.degree
    ref = disc.disp.basis / disc.disp_scale  # physical basis pulled back
    vloc = np.tensordot(disc.local_disp(v), ref, axes=1)  # (nK, 2, k+1, k+1)
    vloc = resize(vloc, D, 2)
    tables = np.zeros((mesh.num_elements, 3, D + 1, D + 1))
    for j in range(n):
        left = np.zeros((D + 1, D + 1))
        for i in range(n):
            K = mesh.element_index(i, j)
            t11 = left + disc.half * _antiderivative(vloc[K, 0], 0)
            tables[K, 0] = t11
            left = _at_end(t11, 0)
    for i in range(n):
        below = np.zeros((D + 1, D + 1))
        for j in range(n):
            K = mesh.element_index(i, j)
            t22 = below + disc.half * _antiderivative(vloc[K, 1], 1)
            tables[K, 1] = t22
            below = _at_end(t22, 1)

    local = disc.stress.interpolate(tables).T * disc.stress_scale  # (nK, nloc)
    coeffs = np.zeros(disc.dofmap.num_stress)
    seen = np.full(disc.dofmap.num_stress, np.nan)
    l2g = disc.dofmap.stress_l2g
    mismatch = 0.0
    for K in range(mesh.num_elements):
        g = l2g[K]
        prev = seen[g]
        known = ~np.isnan(prev)
        if known.any():
            mismatch = max(mismatch, float(np.max(np.abs(prev[known] - local[K][known]))))
        seen[g] = local[K]
    coeffs[:] = seen
    recon = np.tensordot(local / disc.stress_scale, disc.stress.basis, axes=1)
    scale = max(1.0, float(np.max(np.abs(tables))))
    resid = max(float(np.max(np.abs(recon - tables))), mismatch) / scale
    if resid > WITNESS_TOL:
        raise WitnessError(f"witness leaves the discrete stress space (residual {resid:.3e})")
    return WitnessField(disc, tables, coeffs, resid)


# ---------------------------------------------------------------------------
# Mesh-dependent norms
# ---------------------------------------------------------------------------


def _require_even(mesh: Mesh):
    if mesh.n % 2:
        raise ValueError(f"mesh-dependent norms need macroelements (even n), got n={mesh.n}")


def mesh_stress_gram(disc: Discretization) -> np.ndarray:
    """Gram matrix of ``||tau||_{0,h}``: L2 plus interior edge traces of
    t11/t22 and ``h_e^2 t12(A)^2`` over the edges meeting each interior
    vertex."""
    mesh = disc.mesh
    _require_even(mesh)
    h = mesh.h
    G = disc.stress_mass_matrix().toarray()
    rule = gauss_rule(disc.quad_points)
    l2g = disc.dofmap.stress_l2g
    for comp, axis, local_edge in ((0, 0, 1), (1, 1, 3)):
        pts = np.zeros((len(rule.nodes), 2))
        pts[:, axis] = 1.0
        pts[:, 1 - axis] = rule.nodes
        phi = disc.stress_values(pts)[:, comp]  # (nloc, m)
        E = h * np.einsum("im,jm,m->ij", phi, phi, rule.weights * disc.half)
        for K in range(mesh.num_elements):
            e = mesh.element_edges[K, local_edge]
            if mesh.edge_is_boundary(e):
                continue
            g = l2g[K]
            ok = g >= 0
            G[np.ix_(g[ok], g[ok])] += E[np.ix_(ok, ok)]
    index = {key: i for i, key in enumerate(disc.dofmap.stress_entities)}
    for A in mesh.interior_vertices():
        gi = index.get(("vertex", A, 0))
        if gi is not None:
            G[gi, gi] += 4 * h * h
    return 0.5 * (G + G.T)


def _macro_seminorm_rows(disc: Discretization) -> np.ndarray:
    """Rows ``r`` with ``|v|_{1,h}^2 = sum (r . v)^2`` over all macroelements."""
    mesh = disc.mesh
    _require_even(mesh)
    h = mesh.h
    half = disc.half
    nloc = len(disc.disp)
    l2g = disc.dofmap.disp_l2g
    nu = disc.dofmap.num_disp
    rows = []

    pts, w = tensor_rule(disc.quad_points, 2)
    w = w * half * half
    dx = disc.disp.derivatives(pts, 0) / disc.disp_scale / half  # (nloc, 2, m)
    dy = disc.disp.derivatives(pts, 1) / disc.disp_scale / half
    strain = [(dx[:, 0], 1.0), (dy[:, 1], 1.0), (0.5 * (dy[:, 0] + dx[:, 1]), 2.0)]

    rule = gauss_rule(disc.quad_points)

    def edge_vals(axis, value):
        p = np.zeros((len(rule.nodes), 2))
        p[:, axis] = value
        p[:, 1 - axis] = rule.nodes
        return disc.disp_values(p)  # (nloc, 2, m)

    right, left = edge_vals(0, 1.0), edge_vals(0, -1.0)
    top, bottom = edge_vals(1, 1.0), edge_vals(1, -1.0)
    ew = rule.weights * half

    def point_vals(p):
        return disc.disp_values(np.array([p], float))[:, :, 0]

    for M in macroelements(mesh):
        K1, K2, K3, K4 = M.elements
        for K in M.elements:
            for vals, c in strain:
                for q in range(len(w)):
                    r = np.zeros(nu)
                    r[l2g[K]] = np.sqrt(c * w[q]) * vals[:, q]
                    rows.append(r)
        # (minus side, plus side, minus-side trace, plus-side trace, component)
        jumps = [(K1, K2, right, left, 0), (K4, K3, right, left, 0),
                 (K2, K3, top, bottom, 1), (K1, K4, top, bottom, 1)]
        for Km, Kp, tm, tp, c in jumps:
            for q in range(len(ew)):
                r = np.zeros(nu)
                s = np.sqrt(ew[q] / h)
                r[l2g[Km]] += s * tm[:, c, q]
                r[l2g[Kp]] -= s * tp[:, c, q]
                rows.append(r)
        r = np.zeros(nu)
        # (v1|K1 - v1|K4)(M(e4)) + (v1|K2 - v1|K3)(M(e2))
        # + (v2|K1 - v2|K2)(M(e1)) + (v2|K4 - v2|K3)(M(e3))
        terms = [(K1, (0, 1), K4, (0, -1), 0), (K2, (0, 1), K3, (0, -1), 0),
                 (K1, (1, 0), K2, (-1, 0), 1), (K4, (1, 0), K3, (-1, 0), 1)]
        for Ka, pa, Kb, pb, c in terms:
            r[l2g[Ka]] += point_vals(pa)[:, c]
            r[l2g[Kb]] -= point_vals(pb)[:, c]
        rows.append(r)
    assert all(len(r) == nu for r in rows) and nloc > 0
    return np.array(rows)


def mesh_seminorm_gram(disc: Discretization) -> np.ndarray:
    R = _macro_seminorm_rows(disc)
    return R.T @ R


def mesh_seminorm(v: np.ndarray, disc: Discretization) -> float:
    """``|v|_{1,h}`` summed over the 2x2 macroelements."""
    R = _macro_seminorm_rows(disc)
    return float(np.linalg.norm(R @ v))


def mesh_stress_norm(tau: np.ndarray, disc: Discretization) -> float:
    G = mesh_stress_gram(disc)
    return float(np.sqrt(max(tau @ G @ tau, 0.0)))


def mesh_norms(field: np.ndarray, disc: Discretization, kind: str) -> float:
    """``kind='displacement'`` -> ``|v|_{1,h}``; ``kind='stress'`` -> ``||tau||_{0,h}``."""
    if kind == "displacement":
        return mesh_seminorm(field, disc)
    if kind == "stress":
        return mesh_stress_norm(field, disc)
    raise ValueError(f"kind must be 'displacement' or 'stress', got {kind!r}")


# ---------------------------------------------------------------------------
# Inf-sup constants
# ---------------------------------------------------------------------------


def rigid_free_basis(disc: Discretization) -> np.ndarray:
    """Orthonormal coefficient basis of ``{v : (v, w) = 0, w in RM}``."""
    C = disc.rigid_motion_rows()
    return scipy.linalg.null_space(C)


@dataclass(frozen=True)
class InfSupResult:
    n: int
    k: int
    family: str
    bc: str
    norm: str
    beta_h: float
    kernel_dim: int  # dimension of {v : (div tau, v) = 0 for all tau}

    def row(self) -> dict:
        return {"n": self.n, "k": self.k, "family": self.family, "bc": self.bc,
                "norm": self.norm, "beta_h": self.beta_h, "kernel_dim": self.kernel_dim}


def infsup_report(mesh: Mesh, k: int, family: str = "full", bc: str = "displacement",
                  norm: str = "hdiv") -> InfSupResult:
    """Discrete inf-sup constant and the dimension of the kernel of ``B^T``.

    ``norm='hdiv'``: ``inf_v sup_tau (div tau, v) / (||tau||_{H(div)} ||v||)``,
    i.e. the square root of the smallest eigenvalue of ``B X^{-1} B^T``
    against the displacement mass matrix (the identity here).
    ``norm='mesh'`` measures tau in ``||.||_{0,h}`` and v in ``|.|_{1,h}``
    (even n only) and returns ``1 / sqrt(mu_max)`` for the pencil
    ``(N, B X_h^{-1} B^T)`` with ``N`` the seminorm Gram matrix.
    Traction problems restrict v to the complement of the rigid motions.
    """
    if mesh.n > 8:
        raise ValueError("dense inf-sup computation is limited to n <= 8")
    disc, Bs, M, Dd = _operators(mesh.n, k, family, bc)
    B = Bs.toarray()
    if norm == "hdiv":
        X = (M + Dd).toarray()
    elif norm == "mesh":
        X = mesh_stress_gram(disc)
    else:
        raise ValueError(f"norm must be 'hdiv' or 'mesh', got {norm!r}")
    S = B @ scipy.linalg.solve(X, B.T, assume_a="pos")
    S = 0.5 * (S + S.T)
    full = scipy.linalg.eigh(S, eigvals_only=True)
    kernel_dim = int(np.sum(full <= KERNEL_RTOL * full[-1]))
    Q = rigid_free_basis(disc) if bc == "traction" else np.eye(B.shape[0])
    S0 = Q.T @ S @ Q
    if norm == "hdiv":
        lam = scipy.linalg.eigh(S0, eigvals_only=True)
        beta = float(np.sqrt(max(lam[0], 0.0)))
    else:
        N0 = Q.T @ mesh_seminorm_gram(disc) @ Q
        mu = scipy.linalg.eigh(0.5 * (N0 + N0.T), S0, eigvals_only=True)
        beta = float(1.0 / np.sqrt(mu[-1]))
    return InfSupResult(mesh.n, k, family, bc, norm, beta, kernel_dim)


def infsup_constant(mesh: Mesh, k: int, family: str = "full", bc: str = "displacement",
                    norm: str = "hdiv") -> float:
    """``beta_h`` from :func:`infsup_report`."""
    return infsup_report(mesh, k, family, bc, norm).beta_h


def divergence_rank_deficiency(mesh: Mesh, k: int, family: str = "full") -> int:
    """``dim V_{k,0} - rank`` of the traction coupling restricted to ``V_{k,0}``."""
    disc, B, _, _ = _operators(mesh.n, k, family, "traction")
    Q = rigid_free_basis(disc)
    BQ = Q.T @ B.toarray()
    s = np.linalg.svd(BQ, compute_uv=False)
    rank = int(np.sum(s > KERNEL_RTOL * s[0]))
    return Q.shape[1] - rank


# ---------------------------------------------------------------------------
# Macroelement kernels
# ---------------------------------------------------------------------------


@dataclass
class MacroKernel:
    k: int
    family: str
    basis: np.ndarray  # (num_disp, dim) orthonormal coefficient vectors
    disc: Discretization
    singular_values: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def rigid_motions(self) -> np.ndarray:
        """L2-projections of (1,0), (0,1), (y,-x) onto V_k(M), as columns."""
        return self.disc.rigid_motion_rows().T

    def checkerboard(self) -> np.ndarray:
        """Projection of the piecewise-constant mode (-1,1), (-1,-1), (1,-1), (1,1)
        on K1..K4 (counterclockwise from lower-left)."""
        disc = self.disc
        values = {(0, 0): (-1.0, 1.0), (1, 0): (-1.0, -1.0), (1, 1): (1.0, -1.0), (0, 1): (1.0, 1.0)}
        pts, w = tensor_rule(disc.quad_points, 2)
        w = w * disc.half**2
        psi = disc.disp_values(pts)
        out = np.zeros(disc.dofmap.num_disp)
        for K in range(4):
            val = np.array(values[disc.mesh.element_grid(K)])
            out[disc.dofmap.disp_l2g[K]] = np.einsum("c,acm,m->a", val, psi, w)
        return out

    def angle_to(self, vectors: np.ndarray) -> float:
        """Largest principal angle between the kernel and span(vectors)."""
        return float(np.max(scipy.linalg.subspace_angles(self.basis, vectors)))

    def contains(self, vector: np.ndarray) -> float:
        """Relative residual of ``vector`` after projection onto the kernel."""
        p = self.basis @ (self.basis.T @ vector)
        return float(np.linalg.norm(vector - p) / np.linalg.norm(vector))


def macro_kernel(k: int, family: str = "full", h: float = 0.5) -> MacroKernel:
    """Kernel ``{v : (div tau, v) = 0 for all tau with tau nu = 0 on the patch
    boundary}`` on a 2x2 macroelement; must be three-dimensional."""
    if not 1 <= k <= 3:
        raise ValueError(f"order k must be in 1..3, got {k}")
    mesh = uniform_mesh(2)
    disc = Discretization(mesh, k, family, "traction")
    B = disc.coupling_matrix().toarray()
    U, s, _ = np.linalg.svd(B, full_matrices=True)
    tol = KERNEL_RTOL * s[0]
    rank = int(np.sum(s > tol))
    basis = U[:, rank:]
    if basis.shape[1] != 3:
        raise StabilityError(f"macroelement kernel for k={k} ({family}) has dimension {basis.shape[1]}, expected 3")
    return MacroKernel(k, family, basis, disc, s)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def diagnostics_csv(results: list[InfSupResult]) -> str:
    """CSV with columns ``n, k, family, bc, beta_h, kernel_dim``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "k", "family", "bc", "beta_h", "kernel_dim"])
    for r in results:
        w.writerow([r.n, r.k, r.family, r.bc, f"{r.beta_h:.10f}", r.kernel_dim])
    return buf.getvalue()
