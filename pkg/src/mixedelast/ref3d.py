"""Reference-cube elements for the 3D families (audits only, no assembly).

Stress components are ordered ``(s11, s22, s33, s12, s13, s23)``.  A shear
component lives on a plane ``(X, Y)`` with out-of-plane variable ``Z``:

    xy -> s12, Z = z;   xz -> s13, Z = y;   yz -> s23, Z = x.

Faces are numbered ``2 a + s`` for the face ``x_a = -1`` (s = 0) or
``x_a = +1`` (s = 1).  Edges are numbered ``4 p + c`` with ``p`` the axis they
run along and ``c`` the corner index of the remaining two coordinates in
the order (-,-), (+,-), (+,+), (-,+).
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .polys import gauss_rule, jacobi, legendre, lobatto_interior_points, tensor_rule
from .refelem import (
    DofFunctional,
    PolySpace,
    ReferenceElement,
    UnisolvenceReport,
    all_exponents,
    divergence_fields,
    evaluate,
    from_poly1d,
    interior_moment,
    membership_residual,
    monomial,
    point_value,
    poly_deriv,
    poly_mul,
    verify_unisolvence,
)

FAMILIES = ("full", "reduced")
MAX_K = 2
DIM = 3
NCOMP = 6
PLANES = {"xy": (3, 0, 1, 2), "xz": (4, 0, 2, 1), "yz": (5, 1, 2, 0)}  # comp, X, Y, Z
CORNERS = ((-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0))

# divergence rows: row r = sum of d/dx_axis of the listed components
DIV_ROWS = [
    [(0, 0), (3, 1), (4, 2)],
    [(3, 0), (1, 1), (5, 2)],
    [(4, 0), (5, 1), (2, 2)],
]


def _check(k: int, family: str = "full"):
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    if not 1 <= k <= MAX_K:
        raise ValueError(f"3D order k must be in 1..{MAX_K}, got {k}")


def _check_plane(plane: str):
    if plane not in PLANES:
        raise ValueError(f"plane must be one of {tuple(PLANES)}, got {plane!r}")


def _mono(exps: dict[int, int], degree: int) -> np.ndarray:
    e = [0, 0, 0]
    for axis, p in exps.items():
        e[axis] = p
    return monomial(tuple(e), degree)


def _vec(ncomp: int, comp: int, scalar: np.ndarray) -> np.ndarray:
    out = np.zeros((ncomp,) + scalar.shape)
    out[comp] = scalar
    return out


def _box(degrees: tuple[int, int, int], D: int) -> list[np.ndarray]:
    """Monomial basis of ``P_{a} x P_{b} x P_{c}`` (per-variable degrees)."""
    return [monomial(e, D) for e in product(*(range(d + 1) for d in degrees))]


def _enrichment_scalars(k: int, axis: int, D: int) -> list[np.ndarray]:
    """``x_axis^p (P_{k-1}(x_b) + P_{k-1}(x_c))`` with ``p = k + 1`` (stress)."""
    others = [a for a in range(3) if a != axis]
    out = []
    for b in others:
        for j in range(k):
            out.append(_mono({axis: k + 1, b: j}, D))
    return out


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------


def normal_stress_space_3d(k: int, family: str = "full") -> PolySpace:
    """``H_k`` (full: ``P_{k,k-1,k-1} + x^{k+1}(P_{k-1}(y)+P_{k-1}(z))`` per
    component, cyclically) or ``RT_k`` (reduced)."""
    _check(k, family)
    D = k + 1
    fields, labels = [], []
    for comp in range(3):
        degs = tuple(k if a == comp else k - 1 for a in range(3))
        scalars = _box(degs, D)
        if family == "full":
            scalars += _enrichment_scalars(k, comp, D)
        for s in scalars:
            fields.append(_vec(3, comp, s))
            labels.append(f"q{comp + 1}")
    return PolySpace(np.array(fields), DIM, labels)


def _in_plane(k: int, plane: str, D: int, serendipity: bool) -> list[np.ndarray]:
    """``P_k(X,Y)`` (plus ``X^k Y, X Y^k`` if serendipity) times ``P_{k-1}(Z)``."""
    _, X, Y, Z = PLANES[plane]
    planar = [(a, b) for a, b in all_exponents(2, k)]
    if serendipity:
        planar += [(k, 1), (1, k)]
    out = []
    for (a, b), c in product(planar, range(k)):
        out.append(_mono({X: a, Y: b, Z: c}, D))
    return out


def airy_product(k: int, plane: str, D: int) -> list[np.ndarray]:
    """Six-component fields ``tau(J_{X,Y} q) p(Z)`` for
    ``q in {X^{k+1} Y^2, X^2 Y^{k+1}}``, ``p in P_{k-1}(Z)``.

    The tensor has ``tau_XX = q_YY``, ``tau_YY = q_XX``, ``tau_XY = -q_XY``
    and zeros elsewhere, so it is divergence free for any ``p``.
    """
    comp, X, Y, Z = PLANES[plane]
    gens = [(k + 1, 2), (2, k + 1)]
    if k == 1:
        gens = gens[:1]
    out = []
    for (a, b), c in product(gens, range(k)):
        q = _mono({X: a, Y: b, Z: c}, D + 1)
        qxx = poly_deriv(poly_deriv(q, X), X)
        qyy = poly_deriv(poly_deriv(q, Y), Y)
        qxy = poly_deriv(poly_deriv(q, X), Y)
        f = np.zeros((NCOMP,) + (D + 1,) * 3)
        f[X] = qyy[: D + 1, : D + 1, : D + 1]
        f[Y] = qxx[: D + 1, : D + 1, : D + 1]
        f[comp] = -qxy[: D + 1, : D + 1, : D + 1]
        out.append(f)
    return out


def shear_space_3d(k: int, plane: str, family: str = "full") -> PolySpace:
    """Single-component space of the shear entry on ``plane``.

    Full: ``S_k(X,Y) x P_{k-1}(Z)``.  Reduced: ``P_k(X,Y) x P_{k-1}(Z)`` plus
    the shear entries of that plane's Airy-product enrichment.
    """
    _check(k, family)
    _check_plane(plane)
    D = k + 1
    comp = PLANES[plane][0]
    scalars = _in_plane(k, plane, D, family == "full")
    if family == "reduced":
        scalars += [f[comp] for f in airy_product(k, plane, D)]
    return PolySpace(np.array([s[None] for s in scalars]), DIM, [f"s-{plane}"] * len(scalars))


def stress_space_3d(k: int, family: str = "full") -> PolySpace:
    _check(k, family)
    D = k + 1
    fields, labels = [], []
    normal = normal_stress_space_3d(k, family)
    for f in normal.fields:
        g = np.zeros((NCOMP,) + f.shape[1:])
        g[:3] = f
        fields.append(g)
        labels.append("normal")
    for plane, (comp, *_rest) in PLANES.items():
        for s in _in_plane(k, plane, D, family == "full"):
            fields.append(_vec(NCOMP, comp, s))
            labels.append(f"shear-{plane}")
        if family == "reduced":
            for f in airy_product(k, plane, D):
                fields.append(f)
                labels.append(f"airy-{plane}")
    return PolySpace(np.array(fields), DIM, labels)


def displacement_space_3d(k: int, family: str = "full") -> PolySpace:
    """``Q_{k-1}^3`` plus, for the full family, ``x^k (P_{k-1}(y)+P_{k-1}(z))``
    in the first component and its cyclic images."""
    _check(k, family)
    D = k
    fields, labels = [], []
    for comp in range(3):
        scalars = _box((k - 1,) * 3, D)
        if family == "full":
            others = [a for a in range(3) if a != comp]
            scalars += [_mono({comp: k, b: j}, D) for b in others for j in range(k)]
        for s in scalars:
            fields.append(_vec(3, comp, s))
            labels.append(f"v{comp + 1}")
    return PolySpace(np.array(fields), DIM, labels)


def expected_dims_3d(k: int, family: str = "full") -> dict[str, int]:
    _check(k, family)
    ser = (k + 1) * (k + 2) // 2 + (2 if k >= 2 else 1)
    if family == "full":
        normal = 3 * k**3 + 3 * k**2 + 6 * k - 3
        shear = k * ser
        stress = normal + 3 * shear
        disp = 3 * k**3 + 3 * (2 * k - 1)
    else:
        normal = 3 * k**2 * (k + 1)
        shear = k * ser  # P_k x P_{k-1} plus the shear part of the enrichment
        stress = normal + 3 * k * (k + 1) * (k + 2) // 2 + 3 * k * (2 if k >= 2 else 1)
        disp = 3 * k**3
    return {"normal": normal, "shear": shear, "stress": stress, "displacement": disp}


# ---------------------------------------------------------------------------
# Degrees of freedom
# ---------------------------------------------------------------------------


def _legendre3(degs: dict[int, int], D: int) -> np.ndarray:
    out = monomial((0, 0, 0), D)
    for axis, p in degs.items():
        out = poly_mul(out, from_poly1d(legendre(p), axis, 3, D), D)
    return out


def _face_moment(ncomp, comp, axis, side, weight2d, npts, face, index):
    """``int_f f_comp p`` on the face ``x_axis = side``; ``weight2d`` takes
    the two free coordinates in increasing axis order."""
    rule = gauss_rule(npts)
    free = [a for a in range(3) if a != axis]
    s, t = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    ws = np.outer(rule.weights, rule.weights).ravel()
    pts = np.zeros((ws.size, 3))
    pts[:, axis] = side
    pts[:, free[0]] = s.ravel()
    pts[:, free[1]] = t.ravel()
    w = np.zeros((ws.size, ncomp))
    w[:, comp] = ws * weight2d(s.ravel(), t.ravel())
    return DofFunctional("face-moment", ("face", face), index, pts, w, 2, f"face{face}:{index}")


def _normal_dofs_3d(k: int, family: str, ncomp: int) -> list[DofFunctional]:
    npts = k + 2
    dofs: list[DofFunctional] = []
    for axis, s in product(range(3), range(2)):
        face = 2 * axis + s
        for idx, (i, j) in enumerate(product(range(k), range(k))):
            Li, Lj = legendre(i), legendre(j)
            w = lambda a, b, Li=Li, Lj=Lj: np.array([Li(x) for x in a]) * np.array([Lj(x) for x in b])  # noqa: E731
            dofs.append(_face_moment(ncomp, axis, axis, 2.0 * s - 1.0, w, npts, face, idx))
    D = k + 1
    idx = 0
    if family == "full":
        Jk = jacobi(k - 1)
        for comp in range(3):
            others = [a for a in range(3) if a != comp]
            weights = [(others[0], j) for j in range(k)] + [(others[1], j) for j in range(1, k)]
            for b, j in weights:
                wt = poly_mul(from_poly1d(Jk, comp, 3, D), _legendre3({b: j}, D), D)
                dofs.append(interior_moment(3, ncomp, _vec(ncomp, comp, wt), npts, ("cell", 0), idx,
                                            f"J{k - 1}-{comp}-{b}{j}"))
                idx += 1
    for comp in range(3):
        degs = [k - 1] * 3
        degs[comp] = k - 2
        for e in product(*(range(d + 1) for d in degs)):
            wt = _legendre3(dict(enumerate(e)), D)
            dofs.append(interior_moment(3, ncomp, _vec(ncomp, comp, wt), npts, ("cell", 0), idx,
                                        f"psi-{comp}-{e}"))
            idx += 1
    return dofs


def shear_heights(k: int) -> np.ndarray:
    """The ``k`` out-of-plane heights carrying the point DOFs."""
    return np.asarray(lobatto_interior_points(k), float)


def _shear_dofs_3d(k: int, plane: str, ncomp: int, comp: int) -> list[DofFunctional]:
    _, X, Y, Z = PLANES[plane]
    heights = shear_heights(k)
    inner = np.asarray(lobatto_interior_points(k - 1), float) if k >= 2 else np.zeros(0)
    dofs: list[DofFunctional] = []
    for c, (a, b) in enumerate(CORNERS):
        for i, z in enumerate(heights):
            p = np.zeros(3)
            p[X], p[Y], p[Z] = a, b, z
            dofs.append(point_value(3, ncomp, comp, p, ("edge", 4 * Z + c), i, "edge-point",
                                    f"{plane}-edge{c}-{i}"))
    for fixed, free in ((X, Y), (Y, X)):
        for s in range(2):
            face = 2 * fixed + s
            for idx, (t, z) in enumerate(product(inner, heights)):
                p = np.zeros(3)
                p[fixed], p[free], p[Z] = 2.0 * s - 1.0, t, z
                dofs.append(point_value(3, ncomp, comp, p, ("face", face), idx, "face-point",
                                        f"{plane}-face{face}-{idx}"))
    D = k + 1
    for idx, ((a, b), c) in enumerate(product(all_exponents(2, k - 4), range(k))):
        wt = _legendre3({X: a, Y: b, Z: c}, D)
        dofs.append(interior_moment(3, ncomp, _vec(ncomp, comp, wt), k + 2, ("cell", 0), 1000 + idx,
                                    f"{plane}-moment{idx}"))
    return dofs


def _orthonormal_moment_dofs_3d(space: PolySpace, npts: int) -> list[DofFunctional]:
    pts, qw = tensor_rule(npts, DIM)
    vals = evaluate(space.fields, pts)
    gram = np.einsum("icq,jcq,q->ij", vals, vals, qw)
    coeff = np.linalg.inv(np.linalg.cholesky(gram))
    ortho = np.tensordot(coeff, space.fields, axes=1)
    return [interior_moment(DIM, space.ncomp, ortho[i], npts, ("cell", 0), i, f"v*w{i}")
            for i in range(len(space))]


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def normal_stress_element_3d(k: int, family: str = "full") -> ReferenceElement:
    """``(s11, s22, s33)`` with face moments against ``Q_{k-1}``, Jacobi-block
    moments (full only) and ``Psi_{k-1}`` interior moments."""
    space = normal_stress_space_3d(k, family)
    return ReferenceElement(f"normal-stress-3d(k={k},{family})", space, _normal_dofs_3d(k, family, 3),
                            expected_dims_3d(k, family)["normal"])


@lru_cache(maxsize=None)
def shear_element_3d(k: int, plane: str = "xy", family: str = "full") -> ReferenceElement:
    """Shear entry on ``plane`` with point values on the ``k`` planes ``Z = z_i``."""
    space = shear_space_3d(k, plane, family)
    return ReferenceElement(f"shear-3d(k={k},{plane},{family})", space, _shear_dofs_3d(k, plane, 1, 0),
                            expected_dims_3d(k, family)["shear"])


@lru_cache(maxsize=None)
def displacement_element_3d(k: int, family: str = "full") -> ReferenceElement:
    space = displacement_space_3d(k, family)
    return ReferenceElement(f"displacement-3d(k={k},{family})", space,
                            _orthonormal_moment_dofs_3d(space, k + 2),
                            expected_dims_3d(k, family)["displacement"])


@lru_cache(maxsize=None)
def stress_element_3d(k: int, family: str = "full") -> ReferenceElement:
    """All six stress components with the combined DOF set."""
    space = stress_space_3d(k, family)
    dofs = _normal_dofs_3d(k, family, NCOMP)
    for plane, (comp, *_rest) in PLANES.items():
        dofs += _shear_dofs_3d(k, plane, NCOMP, comp)
    return ReferenceElement(f"stress-3d(k={k},{family})", space, dofs, expected_dims_3d(k, family)["stress"])


def verify_unisolvence_3d(elem: ReferenceElement) -> UnisolvenceReport:
    """Same contract as the 2D audit; raises ``UnisolvenceError`` on failure."""
    return verify_unisolvence(elem)


def all_elements_3d() -> list[ReferenceElement]:
    out = []
    for family, k in product(FAMILIES, range(1, MAX_K + 1)):
        out.append(normal_stress_element_3d(k, family))
        out.extend(shear_element_3d(k, p, family) for p in PLANES)
        out.append(stress_element_3d(k, family))
        out.append(displacement_element_3d(k, family))
    return out


def divergence_residuals_3d(k: int, family: str = "full") -> np.ndarray:
    """Membership residual of ``div`` of each stress basis field in ``V_k``."""
    stress = stress_element_3d(k, family)
    div = divergence_fields(stress.basis, DIM, DIV_ROWS)
    return membership_residual(div, displacement_space_3d(k, family))
