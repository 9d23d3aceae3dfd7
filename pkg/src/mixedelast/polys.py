"""Univariate polynomials, the (1 - xi^2)-weighted Jacobi family, Legendre
polynomials and Gauss-Legendre quadrature on [-1, 1].

Polynomials are stored as monomial coefficient vectors (index = power).  The
degrees involved are small, so nothing fancier is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_GAUSS_POINTS = 20


@dataclass(frozen=True)
class Poly1D:
    """Polynomial in one variable with real monomial coefficients."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0.0]
        object.__setattr__(self, "coeffs", tuple(float(a) for a in c))

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return 0
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a in reversed(self.coeffs):
            out = out * x + a
        return out if out.ndim else float(out)

    def __add__(self, other: Poly1D) -> Poly1D:
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return Poly1D(tuple(a))

    def __mul__(self, other):
        if isinstance(other, Poly1D):
            return Poly1D(tuple(np.convolve(self.coeffs, other.coeffs)))
        return Poly1D(tuple(other * a for a in self.coeffs))

    __rmul__ = __mul__

    def deriv(self) -> Poly1D:
        if len(self.coeffs) == 1:
            return Poly1D((0.0,))
        return Poly1D(tuple(i * a for i, a in enumerate(self.coeffs) if i > 0))

    def antideriv(self, lower: float = -1.0) -> Poly1D:
        """Antiderivative that vanishes at ``lower``."""
        c = [0.0] + [a / (i + 1) for i, a in enumerate(self.coeffs)]
        p = Poly1D(tuple(c))
        return Poly1D((c[0] - p(lower),) + tuple(c[1:]))

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs)


def _binomial_expand(a: Fraction, b: Fraction, power: int) -> list[Fraction]:
    # (a + b*xi)^power
    return [Fraction(math.comb(power, i)) * a ** (power - i) * b**i for i in range(power + 1)]


def _fraction_mul(p: list[Fraction], q: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


@lru_cache(maxsize=None)
def jacobi(l: int) -> Poly1D:
    """Jacobi polynomial of degree ``l`` orthogonal under the weight 1 - xi^2.

    Normalised so that ``J_l(1) = l + 1``.
    """
    if l < 0:
        raise ValueError(f"degree must be nonnegative, got {l}")
    lead = math.factorial(l + 1) ** 2
    total = [Fraction(0)] * (l + 1)
    half = Fraction(1, 2)
    for s in range(l + 1):
        denom = (
            math.factorial(s)
            * math.factorial(l + 1 - s)
            * math.factorial(s + 1)
            * math.factorial(l - s)
        )
        term = _fraction_mul(
            _binomial_expand(-half, half, l - s), _binomial_expand(half, half, s)
        )
        for i, a in enumerate(term):
            total[i] += Fraction(lead, denom) * a
    return Poly1D(tuple(float(a) for a in total))


@lru_cache(maxsize=None)
def jacobi_antiderivative(l: int) -> Poly1D:
    """``xi -> int_{-1}^{xi} J_l(s) ds``."""
    return jacobi(l).antideriv(-1.0)


@lru_cache(maxsize=None)
def legendre(l: int) -> Poly1D:
    """Legendre polynomial via Rodrigues' formula, in exact arithmetic."""
    if l < 0:
        raise ValueError(f"degree must be nonnegative, got {l}")
    # (xi^2 - 1)^l
    base = [Fraction(0)] * (2 * l + 1)
    for i in range(l + 1):
        base[2 * i] = Fraction(math.comb(l, i) * (-1) ** (l - i))
    for _ in range(l):
        base = [i * a for i, a in enumerate(base)][1:] or [Fraction(0)]
    scale = Fraction(1, 2**l * math.factorial(l))
    return Poly1D(tuple(float(a * scale) for a in base))


def eval_jacobi(l: int, xi):
    return jacobi(l)(xi)


def eval_jacobi_antiderivative(l: int, xi):
    return jacobi_antiderivative(l)(xi)


def eval_legendre(l: int, xi):
    return legendre(l)(xi)


def jacobi_norm_squared(l: int) -> float:
    """Closed form of ``int (1 - xi^2) J_l^2``: ``8/(2l+3) ((l+1)!)^2 / (l! (l+2)!)``."""
    return 8.0 / (2 * l + 3) * math.factorial(l + 1) ** 2 / (math.factorial(l + 2) * math.factorial(l))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def _legendre_and_derivative(n: int, x: np.ndarray):
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for m in range(2, n + 1):
        p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=None)
def _gauss(n: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    m = (n + 1) // 2
    i = np.arange(1, m + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    nodes = np.concatenate([-x, x[::-1][n % 2 :]])
    weights = np.concatenate([w, w[::-1][n % 2 :]])
    if n % 2:
        nodes[m - 1] = 0.0
    return tuple(nodes), tuple(weights)


def gauss_rule(n: int) -> QuadRule:
    """``n``-point Gauss-Legendre rule on [-1, 1], nodes ascending."""
    if not 1 <= n <= MAX_GAUSS_POINTS:
        raise ValueError(f"Gauss rule supports 1..{MAX_GAUSS_POINTS} points, got {n}")
    nodes, weights = _gauss(n)
    return QuadRule(np.array(nodes), np.array(weights))


def lobatto_interior_points(n: int) -> np.ndarray:
    """Interior Gauss-Lobatto points of the rule with ``n + 2`` points.

    These are the roots of ``L'_{n+1}``; empty for ``n = 0``.
    """
    if n == 0:
        return np.zeros(0)
    d = legendre(n + 1).deriv()
    roots = np.roots(d.as_array()[::-1]).real
    return np.sort(roots)


def tensor_rule(n: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on [-1, 1]^dim: points (m, dim) and weights (m,)."""
    rule = gauss_rule(n)
    grids = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
    wgrids = np.meshgrid(*([rule.weights] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return pts, wts
