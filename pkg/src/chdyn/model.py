"""Problem definitions: interface parameters, potentials, inhomogeneities,
exact solutions, and initial data scenarios."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .mesh import DomainKind, Mesh

__all__ = [
    "Potential",
    "Problem",
    "InitialKind",
    "InitialData",
    "double_well",
    "manufactured_disk_problem",
    "initial_field",
]

# Scalar fields are vectorized callables f(x, y, t) -> array.
Field = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class Potential:
    """Free energy density with its analytical derivative."""

    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    label: str = ""


@dataclass(frozen=True)
class Problem:
    """Interface parameters, potentials, and optional data fields.

    ``f_*``/``g_*`` are right-hand-side inhomogeneities of the first and
    second equation (bulk and surface parts); ``exact_u``/``exact_w`` are
    known solutions for convergence studies. All default to absent.
    """

    eps: float
    delta: float
    kappa: float
    w_bulk: Potential
    w_surf: Potential
    f_bulk: Optional[Field] = None
    g_bulk: Optional[Field] = None
    f_surf: Optional[Field] = None
    g_surf: Optional[Field] = None
    exact_u: Optional[Field] = None
    exact_w: Optional[Field] = None
    exact_grad_u: Optional[Callable] = None

    def __post_init__(self):
        if min(self.eps, self.delta, self.kappa) <= 0.0:
            raise ValueError("eps, delta, kappa must be positive")


class InitialKind(Enum):
    DROPLET = "droplet"
    UNIFORM_RANDOM = "random"
    SINE_PRODUCT = "sine"
    CUSTOM = "custom"


@dataclass(frozen=True)
class InitialData:
    """Initial phase-field scenario.

    Droplet: tanh profile across an elliptical interface on the unit
    square. UniformRandom: seeded per-vertex noise in [-amplitude,
    amplitude]. SineProduct: sin(4 pi x) cos(4 pi y).
    """

    kind: InitialKind
    center: tuple[float, float] = (0.1, 0.5)
    semi_axes: tuple[float, float] = (0.3407, 0.1835)
    amplitude: float = 0.1
    seed: int = 0
    custom_field: Optional[Field] = None

    def __post_init__(self):
        if min(self.semi_axes) <= 0.0:
            raise ValueError("droplet semi-axes must be positive")
        if self.amplitude < 0.0:
            raise ValueError("random amplitude must be non-negative")


def double_well(scale: float) -> Potential:
    """W(s) = scale (s^2 - 1)^2 with derivative 4 scale s (s^2 - 1)."""
    if scale <= 0.0:
        raise ValueError("scale must be positive")

    def value(s):
        return scale * (s * s - 1.0) ** 2

    def derivative(s):
        return 4.0 * scale * s * (s * s - 1.0)

    return Potential(value, derivative, label=f"double well (scale {scale:g})")


def manufactured_disk_problem(eps: float = 1.0, delta: float = 1.0,
                              kappa: float = 1.0) -> Problem:
    """Unit-disk test problem with known solution u = w = e^{-t} x y.

    The inhomogeneities make the separable field phi = e^{-t} x y an
    exact solution of all four equations: phi is harmonic in the bulk,
    and on the unit circle its tangential Laplacian is -4 phi and its
    normal derivative 2 phi.
    """
    wb = double_well(0.25)
    ws = double_well(0.25)

    def phi(x, y, t):
        return np.exp(-t) * x * y

    def grad_phi(x, y, t):
        return np.exp(-t) * y, np.exp(-t) * x

    def f_bulk(x, y, t):
        return -phi(x, y, t)

    def g_bulk(x, y, t):
        p = phi(x, y, t)
        return p - wb.derivative(p) / eps

    def f_surf(x, y, t):
        return 5.0 * phi(x, y, t)

    def g_surf(x, y, t):
        p = phi(x, y, t)
        return (1.0 - 4.0 * delta * kappa - 2.0 * eps) * p - ws.derivative(p) / delta

    return Problem(
        eps=eps, delta=delta, kappa=kappa, w_bulk=wb, w_surf=ws,
        f_bulk=f_bulk, g_bulk=g_bulk, f_surf=f_surf, g_surf=g_surf,
        exact_u=phi, exact_w=phi, exact_grad_u=grad_phi,
    )


def initial_field(data: InitialData, mesh: Mesh, problem: Problem) -> np.ndarray:
    """Evaluate an initial-data scenario at the mesh vertices."""
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]

    if data.kind is InitialKind.DROPLET:
        if mesh.domain_kind is not DomainKind.UNIT_SQUARE:
            raise ValueError("droplet initial data is defined on the unit square")
        cx, cy = data.center
        a, b = data.semi_axes
        # Approximate signed distance to the ellipse: level-set value
        # normalized by its gradient, positive inside.
        level = 1.0 - ((x - cx) / a) ** 2 - ((y - cy) / b) ** 2
        gx = -2.0 * (x - cx) / a**2
        gy = -2.0 * (y - cy) / b**2
        gnorm = np.hypot(gx, gy)
        dist = np.where(gnorm > 1e-12, level / np.maximum(gnorm, 1e-12),
                        np.sign(level) * 1e6)
        return np.tanh(dist / (np.sqrt(2.0) * problem.eps))

    if data.kind is InitialKind.UNIFORM_RANDOM:
        rng = np.random.default_rng(data.seed)
        return rng.uniform(-data.amplitude, data.amplitude, size=mesh.n_vertices)

    if data.kind is InitialKind.SINE_PRODUCT:
        return np.sin(4.0 * np.pi * x) * np.cos(4.0 * np.pi * y)

    if data.kind is InitialKind.CUSTOM:
        if data.custom_field is None:
            raise ValueError("custom initial data requires a field")
        return np.asarray(data.custom_field(x, y, 0.0), dtype=float)

    raise ValueError(f"unknown initial data kind {data.kind!r}")
