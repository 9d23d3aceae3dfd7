"""Uniform rectangular meshes of the unit square and 2x2 macroelements.

Numbering is lexicographic in grid indices:

* vertex ``(i, j)`` at ``(i h, j h)`` has id ``i + j (n+1)``;
* element ``(i, j)`` covering ``[i h, (i+1) h] x [j h, (j+1) h]`` has id
  ``i + j n``;
* vertical edge ``(i, j)`` at ``x = i h``, ``y in [j h, (j+1) h]`` has id
  ``i + j (n+1)``; horizontal edge ``(i, j)`` at ``y = j h`` has id
  ``n (n+1) + i + j n``.

Every edge carries the fixed normal (1, 0) if vertical and (0, 1) if
horizontal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    n: int
    element_edges: np.ndarray = field(repr=False)  # (nK, 4): left, right, bottom, top
    element_vertices: np.ndarray = field(repr=False)  # (nK, 4): ccw from lower-left
    edge_vertices: np.ndarray = field(repr=False)  # (nE, 2)
    edge_elements: np.ndarray = field(repr=False)  # (nE, 2), -1 where missing
    vertices: np.ndarray = field(repr=False)  # (nV, 2)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def num_elements(self) -> int:
        return self.n * self.n

    @property
    def num_edges(self) -> int:
        return 2 * self.n * (self.n + 1)

    @property
    def num_vertices(self) -> int:
        return (self.n + 1) ** 2

    @property
    def num_vertical_edges(self) -> int:
        return self.n * (self.n + 1)

    def element_index(self, i: int, j: int) -> int:
        return i + j * self.n

    def element_grid(self, K: int) -> tuple[int, int]:
        return K % self.n, K // self.n

    def element_center(self, K: int) -> np.ndarray:
        i, j = self.element_grid(K)
        return np.array([(i + 0.5) * self.h, (j + 0.5) * self.h])

    def centers(self) -> np.ndarray:
        return np.array([self.element_center(K) for K in range(self.num_elements)])

    def is_vertical(self, e: int) -> bool:
        return e < self.num_vertical_edges

    def edge_is_boundary(self, e: int) -> bool:
        return bool(self.edge_elements[e, 1] < 0 or self.edge_elements[e, 0] < 0)

    def edge_normal(self, e: int) -> np.ndarray:
        return np.array([1.0, 0.0]) if self.is_vertical(e) else np.array([0.0, 1.0])

    def vertex_is_boundary(self, v: int) -> bool:
        i, j = v % (self.n + 1), v // (self.n + 1)
        return i in (0, self.n) or j in (0, self.n)

    def interior_vertices(self) -> list[int]:
        return [v for v in range(self.num_vertices) if not self.vertex_is_boundary(v)]

    def edge_sets(self) -> dict[str, list[int]]:
        """Edges classified by orientation and interior/boundary."""
        out: dict[str, list[int]] = {
            "vertical-interior": [], "vertical-boundary": [],
            "horizontal-interior": [], "horizontal-boundary": [],
        }
        for e in range(self.num_edges):
            o = "vertical" if self.is_vertical(e) else "horizontal"
            b = "boundary" if self.edge_is_boundary(e) else "interior"
            out[f"{o}-{b}"].append(e)
        return out

    def to_reference(self, K: int, pts: np.ndarray) -> np.ndarray:
        return (pts - self.element_center(K)) * (2.0 / self.h)

    def to_physical(self, K: int, ref: np.ndarray) -> np.ndarray:
        return self.element_center(K) + 0.5 * self.h * ref


def uniform_mesh(n: int) -> Mesh:
    """``n x n`` mesh of [0, 1]^2 with element width ``1/n``."""
    if int(n) != n or n < 1:
        raise ValueError(f"mesh needs n >= 1 subdivisions, got {n}")
    n = int(n)
    nv = n * (n + 1)
    h = 1.0 / n

    def vid(i, j):
        return i + j * (n + 1)

    def vedge(i, j):
        return i + j * (n + 1)

    def hedge(i, j):
        return nv + i + j * n

    vertices = np.array([[i * h, j * h] for j in range(n + 1) for i in range(n + 1)])
    edge_vertices = np.zeros((2 * nv, 2), dtype=int)
    for j in range(n):
        for i in range(n + 1):
            edge_vertices[vedge(i, j)] = (vid(i, j), vid(i, j + 1))
    for j in range(n + 1):
        for i in range(n):
            edge_vertices[hedge(i, j)] = (vid(i, j), vid(i + 1, j))

    element_edges = np.zeros((n * n, 4), dtype=int)
    element_vertices = np.zeros((n * n, 4), dtype=int)
    # edge_elements[e] = (element on the side the normal points away from, element it points into)
    edge_elements = -np.ones((2 * nv, 2), dtype=int)
    for j in range(n):
        for i in range(n):
            K = i + j * n
            element_edges[K] = (vedge(i, j), vedge(i + 1, j), hedge(i, j), hedge(i, j + 1))
            element_vertices[K] = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
            edge_elements[vedge(i, j), 1] = K
            edge_elements[vedge(i + 1, j), 0] = K
            edge_elements[hedge(i, j), 1] = K
            edge_elements[hedge(i, j + 1), 0] = K
    return Mesh(n, element_edges, element_vertices, edge_vertices, edge_elements, vertices)


@dataclass(frozen=True)
class Macroelement:
    """Four elements K1..K4 counterclockwise from lower-left.

    ``edges`` are the interior edges e1 (K1|K2, vertical), e2 (K2|K3,
    horizontal), e3 (K4|K3, vertical), e4 (K1|K4, horizontal).
    """

    elements: tuple[int, int, int, int]
    edges: tuple[int, int, int, int]
    vertex: int
    center: tuple[float, float]


def macroelements(mesh: Mesh) -> list[Macroelement]:
    if mesh.n % 2:
        raise ValueError(f"macroelements need an even number of subdivisions, got n={mesh.n}")
    out = []
    for J in range(mesh.n // 2):
        for I in range(mesh.n // 2):
            i, j = 2 * I, 2 * J
            K1 = mesh.element_index(i, j)
            K2 = mesh.element_index(i + 1, j)
            K3 = mesh.element_index(i + 1, j + 1)
            K4 = mesh.element_index(i, j + 1)
            e1 = mesh.element_edges[K1, 1]
            e2 = mesh.element_edges[K2, 3]
            e3 = mesh.element_edges[K4, 1]
            e4 = mesh.element_edges[K1, 3]
            v = mesh.element_vertices[K1, 2]
            out.append(Macroelement((K1, K2, K3, K4), (e1, e2, e3, e4), int(v),
                                    tuple(mesh.vertices[v])))
    return out
