"""Dimension-independent machinery for reference elements on [-1, 1]^d.

A scalar polynomial in ``d`` variables is a coefficient tensor ``c`` of shape
``(D+1,)*d`` with ``c[a, b, ...]`` the coefficient of ``x^a y^b ...``.  A
field with ``ncomp`` components stacks these along a leading axis, and a
spanning set stacks fields along one more.

Every degree of freedom is stored as a quadrature-discretised functional: a
set of points and per-point, per-component weights.  Point values, edge and
face moments and interior moments all fit that form, and evaluating a DOF on
any polynomial in the element space is exact as long as the attached rule
is exact for the integrand degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.signal

from .polys import Poly1D, gauss_rule, tensor_rule

UNISOLVENCE_COND_LIMIT = 1e8
RANK_TOL = 1e-10


class UnisolvenceError(RuntimeError):
    """The DOF matrix of a reference element is singular or ill-conditioned."""

    def __init__(self, name: str, cond: float, message: str | None = None):
        self.name = name
        self.cond = cond
        super().__init__(message or f"{name}: DOF matrix not invertible (condition number {cond:.3e})")


# ---------------------------------------------------------------------------
# Polynomial tensors
# ---------------------------------------------------------------------------


def monomial(exps: tuple[int, ...], degree: int, coeff: float = 1.0) -> np.ndarray:
    c = np.zeros((degree + 1,) * len(exps))
    c[exps] = coeff
    return c


def from_poly1d(p: Poly1D, axis: int, dim: int, degree: int) -> np.ndarray:
    """Embed a univariate polynomial in variable ``axis`` as a d-variate tensor."""
    c = np.zeros((degree + 1,) * dim)
    idx = [0] * dim
    for i, a in enumerate(p.coeffs):
        idx[axis] = i
        c[tuple(idx)] = a
    return c


def poly_mul(a: np.ndarray, b: np.ndarray, degree: int) -> np.ndarray:
    """Product of two scalar polynomial tensors, truncated to ``degree`` per axis.

    Raises if truncation would drop a nonzero coefficient.
    """
    full = scipy.signal.convolve(a, b, method="direct")
    out = np.zeros((degree + 1,) * a.ndim)
    sl = tuple(slice(0, min(degree + 1, s)) for s in full.shape)
    out[sl] = full[sl]
    if abs(full).sum() - abs(out).sum() > 1e-12 * max(1.0, abs(full).sum()):
        raise ValueError("polynomial product exceeds the coefficient table")
    return out


def poly_deriv(c: np.ndarray, axis: int) -> np.ndarray:
    """Partial derivative along ``axis`` (same table shape, last slot zero)."""
    n = c.shape[axis]
    out = np.zeros_like(c)
    src = np.moveaxis(c, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    for i in range(1, n):
        dst[i - 1] = i * src[i]
    return out


def resize(c: np.ndarray, degree: int, dim: int) -> np.ndarray:
    """Pad or truncate the trailing ``dim`` polynomial axes of a table."""
    old = c.shape[-1] - 1
    lead = c.shape[: c.ndim - dim]
    out = np.zeros(lead + (degree + 1,) * dim)
    m = min(old, degree) + 1
    sl = (Ellipsis,) + (slice(0, m),) * dim
    out[sl] = c[sl]
    if degree < old and abs(c).sum() - abs(out).sum() > 1e-14:
        raise ValueError("cannot truncate nonzero coefficients")
    return out


def monomial_table(points: np.ndarray, degree: int) -> np.ndarray:
    """``T[q, a, b, ...] = x_q^a * y_q^b * ...`` for points of shape (m, d)."""
    m, dim = points.shape
    powers = points[:, :, None] ** np.arange(degree + 1)[None, None, :]
    table = powers[:, 0, :]
    for d in range(1, dim):
        table = table[..., None] * powers[:, d, :].reshape((m,) + (1,) * d + (degree + 1,))
    return table


def evaluate(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate coefficient tables at points.

    ``coeffs`` has shape ``lead + (D+1,)*d``; the result has shape
    ``lead + (m,)``.
    """
    dim = points.shape[1]
    degree = coeffs.shape[-1] - 1
    table = monomial_table(points, degree)
    lead = coeffs.shape[: coeffs.ndim - dim]
    flat = coeffs.reshape(lead + (-1,))
    return flat @ table.reshape(len(points), -1).T


def total_degree(c: np.ndarray) -> int:
    """Largest total degree carrying a nonzero coefficient (-1 for zero)."""
    nz = np.argwhere(np.abs(c) > 1e-14)
    if len(nz) == 0:
        return -1
    return int(nz[:, -c.ndim :].sum(axis=1).max())


# ---------------------------------------------------------------------------
# Spaces, functionals, elements
# ---------------------------------------------------------------------------


@dataclass
class PolySpace:
    """Spanning set of vector polynomials on the reference cell.

    ``fields`` has shape ``(nspan, ncomp) + (D+1,)*dim``.  Construction drops
    linearly dependent members (greedy, in order) so ``len(fields)`` is the
    dimension afterwards.
    """

    fields: np.ndarray
    dim: int
    labels: list[str] = field(default_factory=list)
    raw_count: int = 0

    def __post_init__(self):
        self.raw_count = len(self.fields)
        if not self.labels:
            self.labels = [f"f{i}" for i in range(len(self.fields))]
        keep = independent_subset(self.fields.reshape(len(self.fields), -1))
        self.fields = self.fields[keep]
        self.labels = [self.labels[i] for i in keep]

    @property
    def ncomp(self) -> int:
        return self.fields.shape[1]

    @property
    def degree(self) -> int:
        return self.fields.shape[-1] - 1

    def __len__(self):
        return len(self.fields)


def independent_subset(rows: np.ndarray, tol: float = RANK_TOL) -> list[int]:
    keep: list[int] = []
    basis = np.zeros((0, rows.shape[1]))
    for i, r in enumerate(rows):
        if basis.shape[0]:
            resid = r - basis.T @ (basis @ r)
        else:
            resid = r.copy()
        nrm = np.linalg.norm(resid)
        if nrm > tol * max(1.0, np.linalg.norm(r)):
            keep.append(i)
            basis = np.vstack([basis, resid / nrm])
    return keep


@dataclass
class DofFunctional:
    """``dof(f) = sum_q sum_c weights[q, c] * f_c(points[q])``.

    ``kind`` is one of ``edge-moment``, ``face-moment``, ``interior-moment``,
    ``point-value``, ``edge-point``, ``face-point``.  ``entity`` is a pair
    like ``("edge", 2)`` / ``("vertex", 0)`` / ``("cell", 0)``; ``index``
    numbers the DOF within that entity.  ``jacobian_power`` is the power of
    ``h/2`` relating the physical functional to the reference one on a
    uniformly scaled cell.
    """

    kind: str
    entity: tuple[str, int]
    index: int
    points: np.ndarray
    weights: np.ndarray
    jacobian_power: int
    label: str = ""

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        vals = evaluate(coeffs, self.points)  # (..., ncomp, m)
        return np.einsum("...cq,qc->...", vals, self.weights)


def edge_moment(dim, ncomp, comp, fixed_axis, fixed_value, weight_poly, npts, entity, index, label=""):
    """Moment ``int_e f_comp * p(t) dt`` on an edge of the reference square."""
    rule = gauss_rule(npts)
    free_axis = 1 - fixed_axis
    pts = np.zeros((npts, dim))
    pts[:, fixed_axis] = fixed_value
    pts[:, free_axis] = rule.nodes
    w = np.zeros((npts, ncomp))
    w[:, comp] = rule.weights * weight_poly(rule.nodes)
    return DofFunctional("edge-moment", entity, index, pts, w, dim - 1, label)


def interior_moment(dim, ncomp, weight, npts, entity=("cell", 0), index=0, label="", kind="interior-moment"):
    """Moment ``int_K f . w`` against a polynomial field ``w`` (ncomp tables)."""
    pts, qw = tensor_rule(npts, dim)
    wv = evaluate(weight, pts)  # (ncomp, m)
    return DofFunctional(kind, entity, index, pts, (wv * qw).T.copy(), dim, label)


def point_value(dim, ncomp, comp, point, entity, index, kind="point-value", label=""):
    w = np.zeros((1, ncomp))
    w[0, comp] = 1.0
    return DofFunctional(kind, entity, index, np.asarray(point, float).reshape(1, dim), w, 0, label)


@dataclass(frozen=True)
class UnisolvenceReport:
    name: str
    dimension: int
    ndofs: int
    cond: float
    log10_abs_det: float

    @property
    def ok(self) -> bool:
        return self.dimension == self.ndofs and self.cond < UNISOLVENCE_COND_LIMIT


class ReferenceElement:
    """Shape-function space plus DOFs, with the dual (nodal) basis.

    ``basis`` has the same layout as ``space.fields`` and satisfies
    ``dofs[i](basis[j]) = delta_ij``.
    """

    def __init__(self, name: str, space: PolySpace, dofs: list[DofFunctional], expected_dim: int | None = None):
        self.name = name
        self.space = space
        self.dofs = dofs
        if expected_dim is not None and len(space) != expected_dim:
            raise UnisolvenceError(
                name, np.inf, f"{name}: space has dimension {len(space)}, expected {expected_dim}"
            )
        self.report = verify_unisolvence(self)
        self.dual = np.linalg.inv(self.dof_matrix())  # columns: basis in span coords
        self.basis = np.tensordot(self.dual.T, space.fields, axes=1)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def ncomp(self) -> int:
        return self.space.ncomp

    def __len__(self):
        return len(self.dofs)

    def dof_matrix(self, fields: np.ndarray | None = None) -> np.ndarray:
        """``M[i, j] = dof_i(fields[j])``."""
        f = self.space.fields if fields is None else fields
        return np.stack([d(f) for d in self.dofs])

    def interpolate(self, fields: np.ndarray) -> np.ndarray:
        return self.dof_matrix(fields)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Basis values, shape (nbasis, ncomp, npts)."""
        return evaluate(self.basis, points)

    def derivatives(self, points: np.ndarray, axis: int) -> np.ndarray:
        return evaluate(poly_deriv_fields(self.basis, axis, self.dim), points)

    def entity_dofs(self) -> dict[tuple[str, int], list[int]]:
        out: dict[tuple[str, int], list[int]] = {}
        for i, d in enumerate(self.dofs):
            out.setdefault(d.entity, []).append(i)
        return out

    def jacobian_powers(self) -> np.ndarray:
        return np.array([d.jacobian_power for d in self.dofs])


def poly_deriv_fields(fields: np.ndarray, axis: int, dim: int) -> np.ndarray:
    return poly_deriv(fields, fields.ndim - dim + axis)


def verify_unisolvence(elem) -> UnisolvenceReport:
    """Condition number and determinant scale of the DOF matrix.

    Raises :class:`UnisolvenceError` when the matrix is not square, singular,
    or has condition number at or above ``UNISOLVENCE_COND_LIMIT``.
    """
    m = elem.dof_matrix()
    name = elem.name
    if m.shape[0] != m.shape[1]:
        raise UnisolvenceError(name, np.inf, f"{name}: {m.shape[0]} DOFs for a space of dimension {m.shape[1]}")
    s = np.linalg.svd(m, compute_uv=False)
    cond = np.inf if s[-1] <= 1e-14 * s[0] else float(s[0] / s[-1])
    sign, logdet = np.linalg.slogdet(m)
    if not np.isfinite(cond) or cond >= UNISOLVENCE_COND_LIMIT:
        raise UnisolvenceError(name, cond)
    return UnisolvenceReport(name, m.shape[1], m.shape[0], cond, float(logdet / np.log(10)))


def divergence_fields(fields: np.ndarray, dim: int, rows: list[list[tuple[int, int]]]) -> np.ndarray:
    """Row-wise divergence of tensor fields given by component layout.

    ``rows[r]`` lists ``(component, axis)`` pairs whose derivatives sum to
    row ``r`` of the divergence.
    """
    out = np.zeros((fields.shape[0], len(rows)) + fields.shape[2:])
    for r, terms in enumerate(rows):
        for comp, axis in terms:
            out[:, r] += poly_deriv(fields[:, comp], 1 + axis)
    return out


def membership_residual(fields: np.ndarray, space: PolySpace) -> np.ndarray:
    """Least-squares residual of each field against the span of ``space``.

    Measured on coefficient vectors; zero iff the field lies in the space.
    """
    deg = max(fields.shape[-1], space.fields.shape[-1]) - 1
    f = resize(fields, deg, space.dim).reshape(len(fields), -1)
    s = resize(space.fields, deg, space.dim).reshape(len(space.fields), -1)
    coef, *_ = np.linalg.lstsq(s.T, f.T, rcond=None)
    return np.linalg.norm(s.T @ coef - f.T, axis=0)


def all_exponents(dim: int, max_total: int):
    """Exponent tuples with total degree <= max_total, graded lexicographic."""
    if max_total < 0:
        return []
    out = [e for e in product(range(max_total + 1), repeat=dim) if sum(e) <= max_total]
    return sorted(out, key=lambda e: (sum(e), tuple(-x for x in e)))
