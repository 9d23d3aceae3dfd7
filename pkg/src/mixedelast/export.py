"""Plain-text exchange formats.

Problem configuration (``key = value`` per line, ``#`` starts a comment)::

    problem = 1
    n = 8
    k = 2
    family = full
    bc = displacement
    lam = 1.0
    mu = 0.5

Coordinate matrix files start with ``# rows cols nnz`` and then hold one
``row col value`` triple per line, zero based.

Basis tables have one row per nonzero coefficient:
``basis comp e_x e_y [e_z] coeff`` with the exponents of the monomial in
reference coordinates.
"""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy.sparse as sp

from .assembly import BCS, Material
from .refelem import ReferenceElement
from .refelem2d import FAMILIES


@dataclass(frozen=True)
class ProblemConfig:
    problem: int = 1
    n: int = 4
    k: int = 2
    family: str = "full"
    bc: str = "displacement"
    lam: float = 1.0
    mu: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.bc not in BCS:
            raise ValueError(f"bc must be one of {BCS}, got {self.bc!r}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")

    @property
    def material(self) -> Material:
        return Material(self.lam, self.mu)

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "ProblemConfig":
        types = {f.name: f.type for f in fields(cls)}
        casts = {"int": int, "float": float, "str": str}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            values[key] = casts[types[key]](value)
        return cls(**values)


def write_coo(matrix, out=None) -> str:
    """Write ``matrix`` as ``row col value`` lines; returns the text."""
    m = sp.coo_matrix(matrix)
    buf = io.StringIO()
    buf.write(f"# {m.shape[0]} {m.shape[1]} {m.nnz}\n")
    order = np.lexsort((m.col, m.row))
    for i in order:
        buf.write(f"{m.row[i]} {m.col[i]} {m.data[i]:.17g}\n")
    text = buf.getvalue()
    if out is not None:
        with open(out, "w") as fh:
            fh.write(text)
    return text


def read_coo(text: str) -> sp.coo_matrix:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing '# rows cols nnz' header")
    nr, nc, nnz = (int(t) for t in lines[0][1:].split())
    body = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(body) != nnz:
        raise ValueError(f"header announces {nnz} entries, found {len(body)}")
    rows = np.array([int(r[0]) for r in body], dtype=int)
    cols = np.array([int(r[1]) for r in body], dtype=int)
    vals = np.array([float(r[2]) for r in body])
    return sp.coo_matrix((vals, (rows, cols)), shape=(nr, nc))


def basis_rows(elem: ReferenceElement, tol: float = 1e-14):
    """Yield ``(basis, comp, exponents, coeff)`` for nonzero coefficients."""
    for b, field_ in enumerate(elem.basis):
        for c, comp in enumerate(field_):
            for exps in zip(*np.nonzero(np.abs(comp) > tol)):
                yield b, c, tuple(int(e) for e in exps), float(comp[exps])


def basis_table(elem: ReferenceElement) -> str:
    dim = elem.space.dim
    axes = ["e_x", "e_y", "e_z"][:dim]
    buf = io.StringIO()
    buf.write(f"# {elem.name}\n")
    buf.write(" ".join(["basis", "comp", *axes, "coeff"]) + "\n")
    for b, c, exps, coeff in basis_rows(elem):
        buf.write(f"{b} {c} {' '.join(map(str, exps))} {coeff:.17g}\n")
    return buf.getvalue()


def read_basis_table(text: str, nbasis: int, ncomp: int, dim: int, degree: int) -> np.ndarray:
    """Inverse of :func:`basis_table`; also accepts the comma-separated CLI output."""
    out = np.zeros((nbasis, ncomp) + (degree + 1,) * dim)
    for line in text.splitlines():
        if not line.strip() or line.startswith("#") or line.startswith("basis"):
            continue
        parts = line.replace(",", " ").split()
        b, c = int(parts[0]), int(parts[1])
        exps = tuple(int(p) for p in parts[2:2 + dim])
        out[(b, c) + exps] = float(parts[2 + dim])
    return out
