"""Reference-square elements for the 2D stress/displacement families.

Local numbering on [-1, 1]^2 (coordinates ``xi, eta``):

* edges: 0 = left (xi=-1), 1 = right (xi=1), 2 = bottom (eta=-1), 3 = top
  (eta=1); edges 0/1 are vertical, 2/3 horizontal.  Every edge is
  parametrised by the free coordinate, increasing.
* vertices: 0 = (-1,-1), 1 = (1,-1), 2 = (1,1), 3 = (-1,1).

Edge normal moments use the fixed normal (1,0) on vertical and (0,1) on
horizontal edges rather than the outward normal, so the same functional is
seen from both sides of an interior edge.

Stress fields have components ordered ``(s11, s22, s12)``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .polys import jacobi, legendre, lobatto_interior_points
from .refelem import (
    DofFunctional,
    PolySpace,
    ReferenceElement,
    all_exponents,
    edge_moment,
    from_poly1d,
    interior_moment,
    monomial,
    point_value,
    poly_deriv,
    poly_mul,
)

FAMILIES = ("full", "reduced")
MAX_K = 3
DIM = 2

EDGES = (
    # (fixed axis, fixed value, orientation)
    (0, -1.0, "vertical"),
    (0, 1.0, "vertical"),
    (1, -1.0, "horizontal"),
    (1, 1.0, "horizontal"),
)
VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def _check(k: int, family: str = "full", kmax: int = MAX_K):
    if not 1 <= k <= kmax:
        raise ValueError(f"order k must be in 1..{kmax}, got {k}")
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")


def _vec(ncomp: int, comp: int, scalar: np.ndarray) -> np.ndarray:
    out = np.zeros((ncomp,) + scalar.shape)
    out[comp] = scalar
    return out


def edge_points(k: int) -> np.ndarray:
    """Interior serendipity points on an edge, in the edge parameter."""
    return lobatto_interior_points(k - 1)


def edge_point_coords(edge: int, t: float) -> np.ndarray:
    axis, value, _ = EDGES[edge]
    p = np.zeros(2)
    p[axis] = value
    p[1 - axis] = t
    return p


def legendre_product(a: int, b: int, degree: int) -> np.ndarray:
    return poly_mul(from_poly1d(legendre(a), 0, 2, degree), from_poly1d(legendre(b), 1, 2, degree), degree)


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------


def _normal_fields(k: int, family: str) -> tuple[list[np.ndarray], list[str]]:
    D = k + 1
    fields, labels = [], []
    for comp in range(2):
        for e in all_exponents(2, k):
            # BDFM drops y^k from the first and x^k from the second component
            if comp == 0 and e == (0, k):
                continue
            if comp == 1 and e == (k, 0):
                continue
            fields.append(_vec(2, comp, monomial(e, D)))
            labels.append(f"q{comp + 1}:x^{e[0]}y^{e[1]}")
    if family == "full":
        for comp, e in ((0, (k + 1, 0)), (1, (0, k + 1)), (0, (2, k - 1)), (1, (k - 1, 2))):
            fields.append(_vec(2, comp, monomial(e, D)))
            labels.append(f"E:q{comp + 1}:x^{e[0]}y^{e[1]}")
    return fields, labels


def normal_stress_space(k: int, family: str = "full") -> PolySpace:
    _check(k, family)
    fields, labels = _normal_fields(k, family)
    return PolySpace(np.array(fields), DIM, labels)


def serendipity_space(k: int, complete_only: bool = False) -> PolySpace:
    """``P_k + span{x^k y, x y^k}`` (or just ``P_k`` with ``complete_only``)."""
    D = k + 1
    fields = [monomial(e, D)[None] for e in all_exponents(2, k)]
    labels = [f"x^{e[0]}y^{e[1]}" for e in all_exponents(2, k)]
    if not complete_only:
        for e in ((k, 1), (1, k)):
            fields.append(monomial(e, D)[None])
            labels.append(f"S:x^{e[0]}y^{e[1]}")
    return PolySpace(np.array(fields), DIM, labels)


def displacement_space(k: int, family: str = "full") -> PolySpace:
    _check(k, family)
    D = k
    fields, labels = [], []
    for comp in range(2):
        for e in all_exponents(2, k - 1):
            fields.append(_vec(2, comp, monomial(e, D)))
            labels.append(f"v{comp + 1}:x^{e[0]}y^{e[1]}")
    if family == "full":
        for comp, e in ((0, (k, 0)), (1, (0, k)), (0, (1, k - 1)), (1, (k - 1, 1))):
            fields.append(_vec(2, comp, monomial(e, D)))
            labels.append(f"E:v{comp + 1}:x^{e[0]}y^{e[1]}")
    return PolySpace(np.array(fields), DIM, labels)


def airy(q: np.ndarray) -> np.ndarray:
    """Airy stress field of a scalar potential, components (s11, s22, s12)."""
    qxx = poly_deriv(poly_deriv(q, 0), 0)
    qyy = poly_deriv(poly_deriv(q, 1), 1)
    qxy = poly_deriv(poly_deriv(q, 0), 1)
    return np.stack([qyy, qxx, -qxy])


def reduced_enrichment(k: int) -> PolySpace:
    """Span of the Airy fields of ``x^{k+1} y^2`` and ``x^2 y^{k+1}``."""
    _check(k)
    D = k + 1
    gens = [monomial((k + 1, 2), k + 2), monomial((2, k + 1), k + 2)]
    fields = np.array([airy(g)[(slice(None),) + (slice(0, D + 1),) * 2] for g in gens])
    return PolySpace(fields, DIM, [f"Airy(x^{k + 1}y^2)", f"Airy(x^2y^{k + 1})"])


def stress_space(k: int, family: str = "full") -> PolySpace:
    """Combined three-component stress space."""
    _check(k, family)
    D = k + 1
    normal = normal_stress_space(k, family)
    shear = serendipity_space(k, complete_only=(family == "reduced"))
    fields = [np.concatenate([f, np.zeros((1, D + 1, D + 1))]) for f in normal.fields]
    fields += [np.concatenate([np.zeros((2, D + 1, D + 1)), f]) for f in shear.fields]
    labels = list(normal.labels) + [f"s12:{lab}" for lab in shear.labels]
    if family == "reduced":
        enr = reduced_enrichment(k)
        fields += list(enr.fields)
        labels += enr.labels
    return PolySpace(np.array(fields), DIM, labels)


def expected_dims(k: int, family: str) -> dict[str, int]:
    pk = (k + 1) * (k + 2) // 2
    pkm1 = k * (k + 1) // 2
    if family == "full":
        normal = 2 * pk - 2 + (4 if k > 1 else 2)
        shear = (k * k + 3 * k + 6) // 2 if k > 1 else 4
        disp = 2 * pkm1 + (4 if k > 1 else 2)
        return {"normal": normal, "shear": shear, "stress": normal + shear, "displacement": disp}
    normal = 2 * pk - 2
    enr = 2 if k > 1 else 1
    return {"normal": normal, "shear": pk, "stress": normal + pk + enr, "displacement": 2 * pkm1}


# ---------------------------------------------------------------------------
# DOF sets
# ---------------------------------------------------------------------------


def _normal_dofs(k: int, family: str, ncomp: int, offset: int = 0) -> list[DofFunctional]:
    """Normal-stress DOFs acting on components ``offset``, ``offset + 1``."""
    npts = k + 3
    D = k + 1
    dofs: list[DofFunctional] = []
    for e, (axis, value, orient) in enumerate(EDGES):
        comp = offset + (0 if orient == "vertical" else 1)
        for m in range(k):
            dofs.append(
                edge_moment(DIM, ncomp, comp, axis, value, legendre(m), npts, ("edge", e), m,
                            f"edge{e}:s{comp - offset + 1}{comp - offset + 1}*L{m}")
            )
    idx = 0

    def moment(comp_local, weight, label):
        nonlocal idx
        w = np.zeros((ncomp, D + 1, D + 1))
        w[offset + comp_local] = weight
        dofs.append(interior_moment(DIM, ncomp, w, npts, ("cell", 0), idx, label))
        idx += 1

    if family == "full":
        # Jacobi moments; at k = 1 they coincide with the Legendre ones
        moment(0, from_poly1d(jacobi(k - 1), 0, 2, D), f"q1*J{k - 1}(xi)")
        moment(1, from_poly1d(jacobi(k - 1), 1, 2, D), f"q2*J{k - 1}(eta)")
        if k > 1:
            moment(0, from_poly1d(legendre(k - 1), 1, 2, D), f"q1*L{k - 1}(eta)")
            moment(1, from_poly1d(legendre(k - 1), 0, 2, D), f"q2*L{k - 1}(xi)")
    for comp in range(2):
        for a, b in all_exponents(2, k - 2):
            moment(comp, legendre_product(a, b, D), f"q{comp + 1}*L{a}(xi)L{b}(eta)")
    return dofs


def _shear_dofs(k: int, ncomp: int, comp: int) -> list[DofFunctional]:
    npts = k + 3
    D = k + 1
    dofs = [point_value(DIM, ncomp, comp, VERTICES[v], ("vertex", v), 0, label=f"s12@v{v}") for v in range(4)]
    for e in range(4):
        for j, t in enumerate(edge_points(k)):
            dofs.append(point_value(DIM, ncomp, comp, edge_point_coords(e, t), ("edge", e), k + j,
                                    kind="edge-point", label=f"s12@edge{e}:{t:+.4f}"))
    for i, (a, b) in enumerate(all_exponents(2, k - 4)):
        w = np.zeros((ncomp, D + 1, D + 1))
        w[comp] = legendre_product(a, b, D)
        dofs.append(interior_moment(DIM, ncomp, w, npts, ("cell", 0), 1000 + i, f"s12*L{a}L{b}"))
    return dofs


def _orthonormal_moment_dofs(space: PolySpace, npts: int) -> list[DofFunctional]:
    """Moments against an L2-orthonormal basis of ``space`` itself."""
    from .polys import tensor_rule
    from .refelem import evaluate

    pts, qw = tensor_rule(npts, DIM)
    vals = evaluate(space.fields, pts)  # (n, ncomp, m)
    gram = np.einsum("icq,jcq,q->ij", vals, vals, qw)
    L = np.linalg.cholesky(gram)
    coeff = np.linalg.inv(L)  # orthonormal_i = sum_j coeff[i, j] span_j
    ortho = np.tensordot(coeff, space.fields, axes=1)
    return [
        interior_moment(DIM, space.ncomp, ortho[i], npts, ("cell", 0), i, f"v*w{i}")
        for i in range(len(space))
    ]


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def normal_stress_element(k: int, family: str = "full") -> ReferenceElement:
    """Two-component element for ``(s11, s22)``: enriched BDFM or plain BDFM."""
    _check(k, family)
    space = normal_stress_space(k, family)
    return ReferenceElement(f"normal-stress-2d(k={k},{family})", space, _normal_dofs(k, family, 2),
                            expected_dims(k, family)["normal"])


@lru_cache(maxsize=None)
def shear_element(k: int) -> ReferenceElement:
    """Scalar serendipity element of order ``k``."""
    _check(k)
    space = serendipity_space(k)
    return ReferenceElement(f"serendipity-2d(k={k})", space, _shear_dofs(k, 1, 0),
                            expected_dims(k, "full")["shear"])


@lru_cache(maxsize=None)
def displacement_element(k: int, family: str = "full") -> ReferenceElement:
    _check(k, family)
    space = displacement_space(k, family)
    return ReferenceElement(f"displacement-2d(k={k},{family})", space,
                            _orthonormal_moment_dofs(space, k + 3),
                            expected_dims(k, family)["displacement"])


@lru_cache(maxsize=None)
def stress_element(k: int, family: str = "full") -> ReferenceElement:
    """Full three-component stress element ``(s11, s22, s12)``."""
    _check(k, family)
    space = stress_space(k, family)
    dofs = _normal_dofs(k, family, 3, 0) + _shear_dofs(k, 3, 2)
    return ReferenceElement(f"stress-2d(k={k},{family})", space, dofs, expected_dims(k, family)["stress"])


# divergence rows for (s11, s22, s12): (d_x s11 + d_y s12, d_x s12 + d_y s22)
DIV_ROWS = [[(0, 0), (2, 1)], [(2, 0), (1, 1)]]
