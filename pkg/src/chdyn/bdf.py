"""Backward difference formulae of order 1 to 5 and the linearly implicit
time step.

Each step solves one linear block system: the time derivative is the
order-q backward difference of the phase field, and the potential
derivative is evaluated at the order-q extrapolation of past values, so
no nonlinear iteration is needed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb

import numpy as np

from . import fem, linsolve
from .mesh import Mesh
from .model import Problem

__all__ = [
    "BdfScheme",
    "StateHistory",
    "StartingMode",
    "DivergenceError",
    "RunSummary",
    "bdf_coefficients",
    "extrapolate",
    "inhomogeneity_loads",
    "step",
    "starting_values",
    "run",
]

# Nevanlinna-Odeh multiplier constants, metadata only.
_ETA = {1: 0.0, 2: 0.0, 3: 0.0836, 4: 0.2878, 5: 0.8160}


class DivergenceError(RuntimeError):
    """Non-finite state encountered during time stepping."""

    def __init__(self, step_index: int):
        super().__init__(f"non-finite state at step {step_index}")
        self.step_index = step_index


@dataclass(frozen=True)
class BdfScheme:
    """Coefficients of the q-step method.

    ``delta[j]`` weights u^{n-j} in the discrete derivative, ``gamma[j]``
    weights u^{n-1-j} in the extrapolation. ``eta`` is the classical
    multiplier constant for the order (not used computationally).
    """

    q: int
    delta: np.ndarray
    gamma: np.ndarray
    eta: float

    def __post_init__(self):
        self.delta.flags.writeable = False
        self.gamma.flags.writeable = False


def bdf_coefficients(q: int) -> BdfScheme:
    """Expand the generating polynomials of the order-q method.

    delta(z) = sum_{l=1..q} (1 - z)^l / l and
    gamma(z) = (1 - (1 - z)^q) / z, expanded exactly in rationals.
    """
    if not 1 <= q <= 5:
        raise ValueError(f"BDF order must be in 1..5, got {q}")
    delta = [Fraction(0)] * (q + 1)
    for l in range(1, q + 1):
        for j in range(l + 1):
            delta[j] += Fraction((-1) ** j * comb(l, j), l)
    gamma = [Fraction((-1) ** j * comb(q, j + 1)) for j in range(q)]
    return BdfScheme(
        q=q,
        delta=np.array([float(c) for c in delta]),
        gamma=np.array([float(c) for c in gamma]),
        eta=_ETA[q],
    )


class StateHistory:
    """Ring buffer of the q most recent phase-field vectors plus the
    current chemical potential, time, and step index."""

    def __init__(self, q: int):
        self.q = q
        self._us: deque[np.ndarray] = deque(maxlen=q)
        self.w: np.ndarray | None = None
        self.t: float = 0.0
        self.step_index: int = -1

    @property
    def full(self) -> bool:
        return len(self._us) == self.q

    @property
    def u(self) -> np.ndarray:
        """Most recent phase-field vector."""
        if not self._us:
            raise LookupError("history is empty")
        return self._us[-1]

    def newest_first(self) -> list[np.ndarray]:
        """Past values ordered u^{n-1}, u^{n-2}, ..., u^{n-q}."""
        return list(reversed(self._us))

    def push(self, u: np.ndarray, w: np.ndarray | None, t: float,
             step_index: int) -> None:
        self._us.append(u)
        self.w = w
        self.t = t
        self.step_index = step_index


class StartingMode(Enum):
    EXACT_INTERPOLATION = "exact"
    EULER_BOOTSTRAP = "euler"


def extrapolate(scheme: BdfScheme, history: StateHistory) -> np.ndarray:
    """Order-q predictor: sum of gamma[j] * u^{n-1-j} over the history."""
    if not history.full:
        raise LookupError(
            f"extrapolation needs {scheme.q} past values, have {len(history._us)}"
        )
    past = history.newest_first()
    out = scheme.gamma[0] * past[0]
    for g, u in zip(scheme.gamma[1:], past[1:]):
        out += g * u
    return out


def inhomogeneity_loads(mesh: Mesh, mats: fem.FemMatrices, problem: Problem,
                        t: float) -> tuple[np.ndarray, np.ndarray]:
    """Mass-weighted nodal loads (F, G) of the data fields at time t."""
    n = mats.n_dof
    f_load = np.zeros(n)
    g_load = np.zeros(n)
    if problem.f_bulk is not None:
        f_load += mats.m_bulk @ fem.interpolate(mesh, problem.f_bulk, t)
    if problem.f_surf is not None:
        f_load += mats.m_surf @ fem.interpolate(mesh, problem.f_surf, t)
    if problem.g_bulk is not None:
        g_load += mats.m_bulk @ fem.interpolate(mesh, problem.g_bulk, t)
    if problem.g_surf is not None:
        g_load += mats.m_surf @ fem.interpolate(mesh, problem.g_surf, t)
    return f_load, g_load


def step(scheme: BdfScheme, history: StateHistory, mesh: Mesh,
         mats: fem.FemMatrices, problem: Problem, tau: float,
         solver: linsolve.BlockSystem) -> tuple[np.ndarray, np.ndarray]:
    """Advance one step: solve for (u, w) at t = (step_index + 1) tau.

    The first block row is the mass balance (backward difference against
    the combined stiffness of w), the second the potential equation with
    the extrapolated nonlinearity. History advances on success.
    """
    if not history.full:
        raise LookupError("stepping requires a full history")
    n_next = history.step_index + 1
    t_next = n_next * tau

    u_tilde = extrapolate(scheme, history)
    f_load, g_load = inhomogeneity_loads(mesh, mats, problem, t_next)

    rhs1 = tau * f_load
    for dj, uj in zip(scheme.delta[1:], history.newest_first()):
        rhs1 -= dj * (mats.m @ uj)
    rhs2 = tau * (fem.nonlinear_load(mats, problem, u_tilde) + g_load)

    u_next, w_next = solver.solve(rhs1, rhs2)
    if not (np.all(np.isfinite(u_next)) and np.all(np.isfinite(w_next))):
        raise DivergenceError(n_next)

    history.push(u_next, w_next, t_next, n_next)
    return u_next, w_next


def _recover_w(mesh: Mesh, mats: fem.FemMatrices, problem: Problem,
               u: np.ndarray, t: float, tol: float) -> np.ndarray:
    """Solve the elliptic relation M w = A_w u + W'-load + g-load for w."""
    a_w = problem.eps * (mats.a_bulk @ u) + problem.delta * problem.kappa * (
        mats.a_surf @ u
    )
    _, g_load = inhomogeneity_loads(mesh, mats, problem, t)
    rhs = a_w + fem.nonlinear_load(mats, problem, u) + g_load
    return linsolve.spd_solve(mats.m, rhs, tol=tol)


def starting_values(mode: StartingMode, scheme: BdfScheme, mesh: Mesh,
                    mats: fem.FemMatrices, problem: Problem, tau: float,
                    u0: np.ndarray | None = None,
                    tol: float = linsolve.DEFAULT_TOL) -> StateHistory:
    """Fill a history with q starting vectors.

    ExactInterpolation interpolates the known solution at t = 0 .. (q-1)
    tau. EulerBootstrap starts from ``u0`` and generates value j with one
    step of the order-j scheme, so each starting value carries the local
    accuracy of its generating order. The chemical potential at the
    latest starting time is recovered from the elliptic relation.
    """
    q = scheme.q
    history = StateHistory(q)

    if mode is StartingMode.EXACT_INTERPOLATION:
        if problem.exact_u is None:
            raise ValueError("exact-interpolation start requires problem.exact_u")
        for j in range(q):
            u = fem.interpolate(mesh, problem.exact_u, j * tau)
            history.push(u, None, j * tau, j)
    elif mode is StartingMode.EULER_BOOTSTRAP:
        if u0 is None:
            raise ValueError("Euler bootstrap requires an initial vector")
        history.push(np.asarray(u0, dtype=float), None, 0.0, 0)
        for j in range(1, q):
            sub = bdf_coefficients(j)
            sub_hist = StateHistory(j)
            for k, u in enumerate(history.newest_first()[::-1]):
                sub_hist.push(u, None, k * tau, k)
            sub_solver = linsolve.build_block_system(
                mats, problem, sub.delta[0], tau, tol=tol
            )
            u_j, _ = step(sub, sub_hist, mesh, mats, problem, tau, sub_solver)
            history.push(u_j, None, j * tau, j)
    else:
        raise ValueError(f"unknown starting mode {mode!r}")

    t_last = (q - 1) * tau
    history.w = _recover_w(mesh, mats, problem, history.u, t_last, tol)
    return history


@dataclass
class RunSummary:
    """Final state and bookkeeping of a completed run."""

    u: np.ndarray
    w: np.ndarray
    t_end: float
    n_steps: int
    dof: int
    h: float


def run(scheme: BdfScheme, problem: Problem, mesh: Mesh, tau: float,
        t_end: float, observers=(), mats: fem.FemMatrices | None = None,
        starting: StartingMode = StartingMode.EXACT_INTERPOLATION,
        u0: np.ndarray | None = None,
        tol: float = linsolve.DEFAULT_TOL) -> RunSummary:
    """Time loop from the starting values to t_end at constant step size.

    Observers are callables ``obs(step_index, t, u, w)`` invoked for every
    starting value (with ``w=None`` before the last one) and after every
    accepted step. The block factorization is computed once and reused.
    """
    q = scheme.q
    n_end = int(round(t_end / tau))
    if abs(n_end * tau - t_end) > 1e-9 * max(t_end, tau):
        raise ValueError(f"tau={tau} does not divide t_end={t_end}")
    if n_end < q:
        raise ValueError(f"t_end={t_end} shorter than the {q} starting values need")

    if mats is None:
        mats = fem.assemble(mesh)
    history = starting_values(starting, scheme, mesh, mats, problem, tau,
                              u0=u0, tol=tol)

    for j, u in enumerate(history.newest_first()[::-1]):
        w = history.w if j == q - 1 else None
        for obs in observers:
            obs(j, j * tau, u, w)

    solver = linsolve.build_block_system(mats, problem, scheme.delta[0], tau, tol=tol)
    solver.factorize()
    n_steps = 0
    for n in range(q, n_end + 1):
        u, w = step(scheme, history, mesh, mats, problem, tau, solver)
        n_steps += 1
        for obs in observers:
            obs(n, history.t, u, w)

    return RunSummary(u=history.u, w=history.w, t_end=history.t,
                      n_steps=n_steps, dof=mats.n_dof, h=mesh.h)
