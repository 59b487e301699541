"""Physical and lattice specifications, junction families and the field state.

Rays are indexed ``0..s-1``; the incoming wave always enters on ray 0.  On the
lattice, site ``n`` (``1 <= n <= N``) of a ray sits at coordinate ``n * delta``
and the junction is a separate site at coordinate 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import SpecError

__all__ = [
    "StarGraphSpec",
    "LatticeSpec",
    "FieldState",
    "ScatteringAmplitudes",
    "Kirchhoff",
    "Decoupled",
    "AlphaFamily",
    "BetaFamily",
    "JunctionFamily",
    "KIRCHHOFF",
    "DECOUPLED",
    "canonical_family",
    "make_field_state",
    "sample_discrete_mode",
]


@dataclass(frozen=True)
class StarGraphSpec:
    """``ray_count`` semi-infinite rays joined at one vertex, field of mass ``mass``."""

    ray_count: int = 3
    mass: float = 1.0

    def __post_init__(self):
        if int(self.ray_count) != self.ray_count or self.ray_count < 1:
            raise SpecError(f"ray_count must be an integer >= 1, got {self.ray_count!r}")
        if not math.isfinite(self.mass) or self.mass < 0:
            raise SpecError(f"mass must be finite and >= 0, got {self.mass!r}")


@dataclass(frozen=True)
class LatticeSpec:
    delta: float
    sites_per_ray: int
    dt: float

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise SpecError(f"delta must be > 0, got {self.delta!r}")
        if int(self.sites_per_ray) != self.sites_per_ray or self.sites_per_ray < 2:
            raise SpecError(f"sites_per_ray must be an integer >= 2, got {self.sites_per_ray!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise SpecError(f"dt must be > 0, got {self.dt!r}")

    @property
    def length(self) -> float:
        return self.sites_per_ray * self.delta

    def max_frequency(self, graph: StarGraphSpec) -> float:
        return math.sqrt(4.0 / self.delta**2 + graph.mass**2)

    def check_cfl(self, graph: StarGraphSpec) -> None:
        """Raise SpecError unless ``dt * omega_max < 2``."""
        bound = self.dt * self.max_frequency(graph)
        if not bound < 2.0:
            raise SpecError(
                f"CFL violated: dt*sqrt(4/delta^2 + m^2) = {bound:.6g} >= 2 "
                f"(dt={self.dt}, delta={self.delta}, m={graph.mass})"
            )


@dataclass
class FieldState:
    """Complex field and velocity on the junction site and on every ray site.

    ``ray_values[q, n-1]`` holds the field on site ``n`` of ray ``q``.
    """

    junction_value: complex
    junction_velocity: complex
    ray_values: np.ndarray
    ray_velocities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.junction_value = complex(self.junction_value)
        self.junction_velocity = complex(self.junction_velocity)
        self.ray_values = np.asarray(self.ray_values, dtype=np.complex128)
        self.ray_velocities = np.asarray(self.ray_velocities, dtype=np.complex128)
        self.time = float(self.time)
        if self.ray_values.ndim != 2:
            raise SpecError("ray_values must be a 2-d array of shape (ray_count, sites_per_ray)")
        if self.ray_values.shape != self.ray_velocities.shape:
            raise SpecError(
                f"ray_values shape {self.ray_values.shape} != "
                f"ray_velocities shape {self.ray_velocities.shape}"
            )
        if not self.is_finite():
            raise SpecError("field state contains non-finite entries")

    @property
    def ray_count(self) -> int:
        return self.ray_values.shape[0]

    @property
    def sites_per_ray(self) -> int:
        return self.ray_values.shape[1]

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.junction_value)
            and np.isfinite(self.junction_velocity)
            and np.all(np.isfinite(self.ray_values))
            and np.all(np.isfinite(self.ray_velocities))
        )

    def check_shape(self, graph: StarGraphSpec, lattice: LatticeSpec) -> None:
        expected = (graph.ray_count, lattice.sites_per_ray)
        if self.ray_values.shape != expected:
            raise SpecError(f"state shape {self.ray_values.shape} does not match specs {expected}")

    def copy(self) -> "FieldState":
        return FieldState(
            self.junction_value,
            self.junction_velocity,
            self.ray_values.copy(),
            self.ray_velocities.copy(),
            self.time,
        )

    def values_vector(self) -> np.ndarray:
        """Junction value followed by the flattened ray values."""
        return np.concatenate(([self.junction_value], self.ray_values.ravel()))

    def velocities_vector(self) -> np.ndarray:
        return np.concatenate(([self.junction_velocity], self.ray_velocities.ravel()))


@dataclass(frozen=True)
class ScatteringAmplitudes:
    k: float
    reflection: complex
    transmission: complex
    phase: float
    band_edge: bool = False

    def __post_init__(self):
        if abs(self.transmission - (1.0 + self.reflection)) > 1e-12 * (1.0 + abs(self.reflection)):
            raise SpecError("transmission must equal 1 + reflection")


# Junction families -----------------------------------------------------------


@dataclass(frozen=True)
class Kirchhoff:
    """Continuity plus vanishing sum of outward derivatives."""


@dataclass(frozen=True)
class Decoupled:
    """Every ray ends in an independent hard reflector (R = -1, T = 0)."""


@dataclass(frozen=True)
class AlphaFamily:
    """Energy-conserving one-parameter family, ``tan(theta/2) = alpha*omega/k``."""

    alpha: float


@dataclass(frozen=True)
class BetaFamily:
    """Charge-conserving one-parameter family, ``tan(theta/2) = beta/k``."""

    beta: float


JunctionFamily = Union[Kirchhoff, Decoupled, AlphaFamily, BetaFamily]

KIRCHHOFF = Kirchhoff()
DECOUPLED = Decoupled()


def canonical_family(family: JunctionFamily) -> JunctionFamily:
    """Map the zero and infinite family constants onto Kirchhoff and Decoupled."""
    if isinstance(family, AlphaFamily):
        value = family.alpha
    elif isinstance(family, BetaFamily):
        value = family.beta
    elif isinstance(family, (Kirchhoff, Decoupled)):
        return family
    else:
        raise TypeError(f"not a junction family: {family!r}")
    if math.isnan(value):
        raise SpecError("family constant must not be NaN")
    if value == 0:
        return KIRCHHOFF
    if math.isinf(value):
        return DECOUPLED
    return family


# Construction ---------------------------------------------------------------


def make_field_state(graph: StarGraphSpec, lattice: LatticeSpec) -> FieldState:
    """Zero field at time 0; validates the CFL bound of ``lattice`` for ``graph``."""
    lattice.check_cfl(graph)
    shape = (graph.ray_count, lattice.sites_per_ray)
    return FieldState(
        0j, 0j, np.zeros(shape, np.complex128), np.zeros(shape, np.complex128), 0.0
    )


def sample_discrete_mode(
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    k: float,
    reflection: complex,
    t: float = 0.0,
) -> FieldState:
    """Evaluate the stationary lattice scattering mode at time ``t``.

    Ray 0 carries ``exp(-i(w t + k n delta)) + R exp(-i(w t - k n delta))``, the
    other rays ``(1 + R) exp(-i(w t - k n delta))`` and the junction
    ``(1 + R) exp(-i w t)``, with ``w`` the lattice frequency of ``k``.
    Velocities are the exact time derivatives ``-i w * value``.
    """
    from .discrete_smatrix import discrete_dispersion

    lattice.check_cfl(graph)
    if not k > 0:
        raise SpecError(f"k must be > 0, got {k!r}")
    omega = discrete_dispersion(k, graph.mass, lattice.delta)
    R = complex(reflection)
    q = np.arange(1, lattice.sites_per_ray + 1) * lattice.delta
    clock = np.exp(-1j * omega * t)
    outgoing = np.exp(1j * k * q) * clock
    rays = np.empty((graph.ray_count, lattice.sites_per_ray), np.complex128)
    rays[:] = (1.0 + R) * outgoing
    rays[0] = np.exp(-1j * k * q) * clock + R * outgoing
    junction = (1.0 + R) * clock
    return FieldState(junction, -1j * omega * junction, rays, -1j * omega * rays, t)
