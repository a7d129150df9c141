"""Sparse linear algebra: residual-checked direct solves and the per-step
two-by-two block system.

Matrices are scipy CSR; the block system is assembled explicitly as one
2N x 2N sparse matrix and factorized once per run (constant step size
keeps the pattern and values fixed). Every accepted solution has its
relative residual recomputed independently against the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg, spilu, splu, lgmres, LinearOperator

__all__ = [
    "SolverError",
    "DEFAULT_TOL",
    "solve",
    "spd_solve",
    "SpdFactorization",
    "BlockSystem",
    "build_block_system",
]

DEFAULT_TOL = 1e-12

# Above this size the direct factorization falls back to preconditioned
# Krylov iteration when requested implicitly via method="auto".
_ITERATIVE_CUTOFF = 400_000


class SolverError(RuntimeError):
    """Singular system, non-convergence, or residual above tolerance."""


def _relative_residual(matrix, x: np.ndarray, b: np.ndarray) -> float:
    r = matrix @ x - b
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(r) / nb) if nb > 0.0 else float(np.linalg.norm(r))


def _accept(matrix, x: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise SolverError("solver produced non-finite values")
    res = _relative_residual(matrix, x, b)
    if res > tol:
        raise SolverError(f"relative residual {res:.3e} exceeds tolerance {tol:.1e}")
    return x


def _refine(matrix, lu, x: np.ndarray, b: np.ndarray, tol: float,
            max_steps: int = 3) -> np.ndarray:
    # Iterative refinement: badly scaled blocks can leave the raw LU
    # residual just above a tight tolerance.
    for _ in range(max_steps):
        if _relative_residual(matrix, x, b) <= tol:
            break
        x = x + lu.solve(b - matrix @ x)
    return x


def solve(matrix, rhs: np.ndarray, tol: float = DEFAULT_TOL,
          method: str = "direct") -> np.ndarray:
    """Solve a general sparse system with a residual guarantee.

    ``method`` is "direct" (sparse LU), "iterative" (LGMRES with an
    incomplete LU preconditioner), or "auto" (direct below a size cutoff).
    """
    matrix = sparse.csr_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    if method == "auto":
        method = "direct" if matrix.shape[0] <= _ITERATIVE_CUTOFF else "iterative"

    if method == "direct":
        try:
            lu = splu(matrix.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"sparse LU factorization failed: {exc}") from exc
        x = _refine(matrix, lu, lu.solve(rhs), rhs, tol)
        return _accept(matrix, x, rhs, tol)

    if method == "iterative":
        try:
            ilu = spilu(matrix.tocsc(), drop_tol=1e-6, fill_factor=20)
        except RuntimeError as exc:
            raise SolverError(f"incomplete LU failed: {exc}") from exc
        prec = LinearOperator(matrix.shape, ilu.solve)
        x, info = lgmres(matrix, rhs, M=prec, rtol=tol / 10.0, atol=0.0, maxiter=2000)
        if info != 0:
            raise SolverError(f"LGMRES did not converge (info={info})")
        return _accept(matrix, x, rhs, tol)

    raise ValueError(f"unknown method {method!r}")


def spd_solve(matrix, rhs: np.ndarray, tol: float = DEFAULT_TOL,
              method: str = "direct") -> np.ndarray:
    """Solve a symmetric positive definite system (residual-checked).

    "direct" uses sparse LU; "cg" uses conjugate gradients with a Jacobi
    preconditioner and the same residual contract.
    """
    matrix = sparse.csr_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    if method == "cg":
        diag = matrix.diagonal()
        if np.any(diag <= 0.0):
            raise SolverError("matrix is not positive definite (non-positive diagonal)")
        prec = LinearOperator(matrix.shape, lambda v: v / diag)
        x, info = cg(matrix, rhs, M=prec, rtol=tol / 10.0, atol=0.0,
                     maxiter=20 * matrix.shape[0])
        if info != 0:
            raise SolverError(f"CG did not converge within iteration cap (info={info})")
        return _accept(matrix, x, rhs, tol)
    return solve(matrix, rhs, tol=tol, method=method)


class SpdFactorization:
    """Reusable factorization of a symmetric positive definite matrix."""

    def __init__(self, matrix, tol: float = DEFAULT_TOL):
        self.matrix = sparse.csr_matrix(matrix)
        self.tol = tol
        try:
            self._lu = splu(self.matrix.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc

    def __call__(self, matrix, rhs: np.ndarray) -> np.ndarray:
        # Solver-callback signature used by fem.dual_norm / fem.ritz_project.
        return self.solve(rhs)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        x = _refine(self.matrix, self._lu, self._lu.solve(rhs), rhs, self.tol)
        return _accept(self.matrix, x, rhs, self.tol)


@dataclass
class BlockSystem:
    """The 2N x 2N linear system solved once per time step.

    Layout ``[[delta0 M, tau A], [-tau A_w, tau M]]`` where ``A`` is the
    unweighted combined stiffness and ``A_w = eps a_bulk + delta kappa
    a_surf``. A factorization is computed on first use and reused.
    """

    matrix: sparse.csr_matrix
    n: int
    delta0: float
    tau: float
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.delta0 <= 0.0 or self.tau <= 0.0:
            raise ValueError("delta0 and tau must be positive")
        self._lu = None

    def factorize(self) -> None:
        if self._lu is None:
            try:
                self._lu = splu(self.matrix.tocsc())
            except RuntimeError as exc:
                raise SolverError(f"block factorization failed: {exc}") from exc

    def solve(self, rhs1: np.ndarray, rhs2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        self.factorize()
        rhs = np.concatenate([rhs1, rhs2])
        x = _refine(self.matrix, self._lu, self._lu.solve(rhs), rhs, self.tol)
        x = _accept(self.matrix, x, rhs, self.tol)
        return x[: self.n], x[self.n:]


def build_block_system(mats, problem, delta0: float, tau: float,
                       tol: float = DEFAULT_TOL) -> BlockSystem:
    """Assemble the per-step block matrix for given scheme and step size."""
    a_w = (problem.eps * mats.a_bulk + problem.delta * problem.kappa * mats.a_surf).tocsr()
    matrix = sparse.bmat(
        [[delta0 * mats.m, tau * mats.a], [-tau * a_w, tau * mats.m]],
        format="csr",
    )
    return BlockSystem(matrix=matrix, n=mats.n_dof, delta0=delta0, tau=tau, tol=tol)
