"""Shared test utilities: interpolation of polynomial fields into the
global discrete spaces."""

import numpy as np

from mixedelast.polys import tensor_rule


def interpolate_stress(disc, tables_per_element):
    """Global stress vector from reference coefficient tables ``(nK, 3, D+1, D+1)``.

    Shared DOFs are taken from the last element that touches them.
    """
    local = disc.stress.interpolate(tables_per_element).T * disc.stress_scale
    out = np.zeros(disc.dofmap.num_stress)
    for K, g in enumerate(disc.dofmap.stress_l2g):
        ok = g >= 0
        out[g[ok]] = local[K][ok]
    return out


def constant_stress_tables(disc, s11, s22, s12):
    D = disc.stress.space.degree
    t = np.zeros((disc.mesh.num_elements, 3, D + 1, D + 1))
    t[:, 0, 0, 0], t[:, 1, 0, 0], t[:, 2, 0, 0] = s11, s22, s12
    return t


def project_displacement(disc, field, npts=None):
    """Coefficients ``(field, psi_a)`` in the orthonormal displacement basis."""
    pts, w = tensor_rule(npts or disc.k + 4, 2)
    w = w * disc.half**2
    X = disc.physical_points(pts)
    f1, f2 = field(X[..., 0], X[..., 1])
    f = np.stack([np.broadcast_to(f1, X.shape[:2]), np.broadcast_to(f2, X.shape[:2])], axis=1)
    psi = disc.disp_values(pts)
    out = np.zeros(disc.dofmap.num_disp)
    out[disc.dofmap.disp_l2g] = np.einsum("kcm,acm,m->ka", f, psi, w)
    return out


# Published reference errors (e_u, e_sigma, e_div) keyed by level, k = 2.
CLAMPED_REFERENCE = {
    1: (0.3156, 2.0116, 7.8083),
    2: (0.0693, 0.4465, 1.9752),
    3: (0.0166, 0.1134, 0.4760),
    4: (0.0041, 0.0285, 0.1175),
    5: (0.0010, 0.0071, 0.0293),
    6: (2.5408e-4, 0.0018, 0.0073),
    7: (6.3503e-5, 4.4605e-4, 0.0018),
}
TRACTION_REFERENCE = {
    2: (0.0264, 0.2516, 2.4645),
    3: (0.0107, 0.0804, 0.7090),
    4: (0.0029, 0.0211, 0.1807),
    5: (7.2940e-4, 0.0054, 0.0453),
    6: (1.8315e-4, 0.0013, 0.0113),
    7: (4.5836e-5, 3.3684e-4, 0.0028),
}
