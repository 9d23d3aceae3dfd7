"""Direct solution of the assembled saddle-point system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import SaddleSystem

RESIDUAL_TOL = 1e-9


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float = np.nan):
        self.residual = residual
        super().__init__(message)


@dataclass
class DiscreteSolution:
    stress: np.ndarray
    displacement: np.ndarray
    multipliers: np.ndarray
    residual: float
    system: SaddleSystem

    @property
    def disc(self):
        return self.system.disc


def solve(system: SaddleSystem) -> DiscreteSolution:
    """Sparse LU with a fixed COLAMD ordering; residual checked afterwards."""
    M = system.matrix().tocsc()
    b = system.rhs()
    try:
        lu = spla.splu(M, permc_spec="COLAMD", options={"SymmetricMode": False})
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SolverError(f"factorisation failed: {exc}") from exc
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite values")
    residual = float(np.linalg.norm(M @ x - b))
    if residual > RESIDUAL_TOL * (1.0 + np.linalg.norm(b)):
        raise SolverError(f"residual {residual:.3e} exceeds tolerance", residual)
    ns, nu, nc = system.sizes
    return DiscreteSolution(x[:ns], x[ns:ns + nu], x[ns + nu:], residual, system)
