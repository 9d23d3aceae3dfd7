"""Manufactured problems, error norms and convergence tables.

Both problems use the isotropic material with ``lambda = 1, mu = 1/2``.  The
load is ``f = div sigma`` with ``sigma = 2 mu eps(u) + lambda tr(eps(u)) I``,
which for constant coefficients is the Navier operator

    f1 = (2 mu + lambda) u1_xx + mu u1_yy + (lambda + mu) u2_xy
    f2 = (2 mu + lambda) u2_yy + mu u2_xx + (lambda + mu) u1_xy

so each problem only supplies ``u`` with its first and second derivatives.

Problem 1 (``sinusoidal-displacement``, clamped):
    u1 = u2 = sin(pi x) sin(pi y).
Problem 2 (``traction-bubble``, traction free, orthogonal to rigid motions):
    u = (g, -g),  g = 100 p(x) p(y) - 1/9,  p(t) = t^2 (1 - t)^2.
``int g = 100 (1/30)^2 - 1/9 = 0`` and ``g`` is symmetric about (1/2, 1/2),
so ``u`` is orthogonal to translations and to ``(y, -x)``; ``p`` and ``p'``
vanish at t = 0, 1, so every strain component vanishes on the boundary.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import Discretization, Material, assemble
from .mesh import uniform_mesh
from .polys import tensor_rule
from .solve import DiscreteSolution, SolverError, solve

PROBLEMS = {1: "sinusoidal-displacement", 2: "traction-bubble"}


@dataclass(frozen=True)
class ManufacturedProblem:
    id: int
    material: Material = field(default_factory=Material)

    @property
    def name(self) -> str:
        return PROBLEMS[self.id]

    @property
    def bc(self) -> str:
        return "displacement" if self.id == 1 else "traction"

    def derivatives(self, x, y):
        """Return ``u``, ``grad u`` and second derivatives.

        Shapes: u (2, ...), du[c][a] = d u_c / d x_a, d2u[c] = (xx, yy, xy).
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.id == 1:
            pi = math.pi
            sx, cx = np.sin(pi * x), np.cos(pi * x)
            sy, cy = np.sin(pi * y), np.cos(pi * y)
            s = sx * sy
            g = (pi * cx * sy, pi * sx * cy)
            hess = (-pi * pi * s, -pi * pi * s, pi * pi * cx * cy)
            return (s, s), (g, g), (hess, hess)
        if self.id == 2:
            p = lambda t: t * t * (1 - t) ** 2  # noqa: E731
            dp = lambda t: 2 * t * (1 - t) * (1 - 2 * t)  # noqa: E731
            ddp = lambda t: 2 - 12 * t + 12 * t * t  # noqa: E731
            g = 100 * p(x) * p(y) - 1.0 / 9.0
            grad = (100 * dp(x) * p(y), 100 * p(x) * dp(y))
            hess = (100 * ddp(x) * p(y), 100 * p(x) * ddp(y), 100 * dp(x) * dp(y))
            neg = lambda t: tuple(-a for a in t)  # noqa: E731
            return (g, -g), (grad, neg(grad)), (hess, neg(hess))
        raise ValueError(f"unknown problem id {self.id}")

    def displacement(self, x, y):
        u, _, _ = self.derivatives(x, y)
        return u

    def stress(self, x, y):
        """(s11, s22, s12)."""
        _, du, _ = self.derivatives(x, y)
        e11 = du[0][0]
        e22 = du[1][1]
        e12 = 0.5 * (du[0][1] + du[1][0])
        return self.material.stiffness(e11, e22, e12)

    def load(self, x, y):
        _, _, d2 = self.derivatives(x, y)
        lam, mu = self.material.lam, self.material.mu
        u1xx, u1yy, u1xy = d2[0]
        u2xx, u2yy, u2xy = d2[1]
        f1 = (2 * mu + lam) * u1xx + mu * u1yy + (lam + mu) * u2xy
        f2 = (2 * mu + lam) * u2yy + mu * u2xx + (lam + mu) * u1xy
        return f1, f2


def exact_fields(problem: ManufacturedProblem | int, point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(u, sigma, f)`` at a single point; sigma as a 2x2 matrix."""
    if isinstance(problem, int):
        problem = ManufacturedProblem(problem)
    x, y = point
    u = np.array([float(a) for a in problem.displacement(x, y)])
    s11, s22, s12 = (float(a) for a in problem.stress(x, y))
    f = np.array([float(a) for a in problem.load(x, y)])
    return u, np.array([[s11, s12], [s12, s22]]), f


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Errors:
    """L2 errors.  ``sigma`` counts each of (s11, s22, s12) once; the
    Frobenius norm of the symmetric tensor, which counts s12 twice, is kept
    in ``sigma_frobenius``.  ``sigma_components`` holds the three
    per-component errors."""

    u: float
    sigma: float
    div: float
    sigma_frobenius: float = float("nan")
    sigma_components: tuple[float, float, float] = (float("nan"),) * 3

    def as_tuple(self):
        return (self.u, self.sigma, self.div)


def error_norms(solution: DiscreteSolution, problem: ManufacturedProblem, npts: int | None = None) -> Errors:
    """L2 errors of displacement, stress and stress divergence.

    Quadrature uses ``k + 5`` Gauss points per axis unless ``npts`` is given.
    """
    disc: Discretization = solution.disc
    if disc.bc != problem.bc:
        raise ValueError(f"solution uses bc={disc.bc!r} but problem {problem.id} needs {problem.bc!r}")
    if solution.system.material != problem.material:
        raise ValueError("solution and problem use different materials")
    npts = npts or disc.k + 5
    pts, w = tensor_rule(npts, 2)
    w = w * disc.half**2
    X = disc.physical_points(pts)
    x, y = X[..., 0], X[..., 1]

    uh = disc.eval_disp(solution.displacement, pts)
    u = np.stack(problem.displacement(x, y), axis=1)
    eu = np.einsum("kcm,m->", (u - uh) ** 2, w)

    sh = disc.eval_stress(solution.stress, pts)
    s = np.stack(problem.stress(x, y), axis=1)
    comp = np.einsum("kcm,m->c", (s - sh) ** 2, w)

    dh = disc.eval_stress_div(solution.stress, pts)
    f = np.stack(problem.load(x, y), axis=1)
    ed = np.einsum("kcm,m->", (f - dh) ** 2, w)
    return Errors(
        math.sqrt(eu),
        math.sqrt(comp.sum()),
        math.sqrt(ed),
        math.sqrt(comp[0] + comp[1] + 2 * comp[2]),
        tuple(float(math.sqrt(c)) for c in comp),
    )


def projection_error_of_div(problem: ManufacturedProblem, disc: Discretization, npts: int | None = None) -> float:
    """``|| div sigma - P_h div sigma ||`` computed directly by L2 projection."""
    npts = npts or disc.k + 5
    pts, w = tensor_rule(npts, 2)
    w = w * disc.half**2
    X = disc.physical_points(pts)
    f = np.stack(problem.load(X[..., 0], X[..., 1]), axis=1)
    psi = disc.disp_values(pts)
    coef = np.einsum("kcm,acm,m->ka", f, psi, w)
    proj = np.einsum("ka,acm->kcm", coef, psi)
    return math.sqrt(np.einsum("kcm,m->", (f - proj) ** 2, w))


# ---------------------------------------------------------------------------
# Convergence tables
# ---------------------------------------------------------------------------


def solve_problem(problem: ManufacturedProblem, n: int, k: int, family: str = "full",
                  quad_points: int | None = None) -> DiscreteSolution:
    system = assemble(uniform_mesh(n), k, family, problem.bc, problem.material, problem.load, quad_points)
    return solve(system)


@dataclass
class ConvergenceReport:
    problem: int
    k: int
    family: str
    levels: list[int]
    errors: np.ndarray  # (nlevels, 3)
    sigma_components: np.ndarray | None = None  # (nlevels, 3): s11, s22, s12

    @property
    def rates(self) -> np.ndarray:
        r = np.zeros_like(self.errors)
        r[1:] = np.log2(self.errors[:-1] / self.errors[1:])
        return r

    def rows(self):
        for lvl, e, r in zip(self.levels, self.errors, self.rates):
            yield lvl, e, r

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "n", "err_u", "rate_u", "err_sigma", "rate_sigma", "err_div", "rate_div"])
        for lvl, e, r in self.rows():
            w.writerow([lvl, 2 ** (lvl - 1), f"{e[0]:.6e}", f"{r[0]:.4f}", f"{e[1]:.6e}", f"{r[1]:.4f}",
                        f"{e[2]:.6e}", f"{r[2]:.4f}"])
        return buf.getvalue()

    def to_markdown(self) -> str:
        k = self.k
        head = (f"| level | ‖u−u_{k},h‖₀ | rate | ‖σ−σ_{k},h‖₀ | rate | ‖div(σ−σ_{k},h)‖₀ | rate |\n"
                "|---|---|---|---|---|---|---|\n")
        lines = []
        for lvl, e, r in self.rows():
            cells = " | ".join(f"{_fmt(a)} | {b:.1f}" for a, b in zip(e, r))
            lines.append(f"| {lvl} | {cells} |")
        return head + "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "problem_name": PROBLEMS[self.problem],
            "k": self.k,
            "family": self.family,
            "rows": [
                {"level": lvl, "n": 2 ** (lvl - 1),
                 "err_u": e[0], "err_sigma": e[1], "err_div": e[2],
                 "rate_u": r[0], "rate_sigma": r[1], "rate_div": r[2]}
                for lvl, e, r in self.rows()
            ],
        }


def _fmt(x: float) -> str:
    return f"{x:.4f}" if x >= 1e-3 else f"{x:.4e}"


def convergence_table(problem: ManufacturedProblem | int, k: int, family: str = "full",
                      levels=range(1, 6), quad_points: int | None = None) -> ConvergenceReport:
    """Errors on the ``2^(L-1) x 2^(L-1)`` meshes for each requested level."""
    if isinstance(problem, int):
        problem = ManufacturedProblem(problem)
    levels = list(levels)
    errs, comps = [], []
    for lvl in levels:
        if lvl < 1:
            raise ValueError(f"levels start at 1, got {lvl}")
        try:
            sol = solve_problem(problem, 2 ** (lvl - 1), k, family, quad_points)
        except SolverError as exc:
            raise SolverError(f"level {lvl}: {exc}", exc.residual) from exc
        e = error_norms(sol, problem)
        errs.append(e.as_tuple())
        comps.append(e.sigma_components)
    return ConvergenceReport(problem.id, k, family, levels, np.array(errs), np.array(comps))
