"""Closed-form results for the oscillator-network discretisation of the star graph."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .analytic_smatrix import kirchhoff_reflection, normalize_phase
from .errors import DomainError
from .graph_model import (
    KIRCHHOFF,
    FieldState,
    JunctionFamily,
    LatticeSpec,
    ScatteringAmplitudes,
    StarGraphSpec,
)

__all__ = [
    "EOMResidual",
    "discrete_dispersion",
    "discrete_reflection",
    "eom_residual",
    "continuum_limit_error",
    "first_order_error",
]


def _check_zone(k, delta, *, closed=True):
    kd = k * delta
    upper_ok = kd <= math.pi if closed else kd < math.pi
    if not (kd > 0 and upper_ok):
        zone = "(0, pi]" if closed else "(0, pi)"
        raise DomainError(f"k*delta = {kd!r} outside {zone}")
    return kd


def discrete_dispersion(k: float, m: float, delta: float) -> float:
    """Lattice frequency ``sqrt(4/delta^2 sin^2(k delta/2) + m^2)``."""
    if not delta > 0:
        raise DomainError(f"delta must be > 0, got {delta!r}")
    kd = _check_zone(k, delta)
    return math.sqrt(4.0 / delta**2 * math.sin(kd / 2) ** 2 + m * m)


def discrete_reflection(k: float, delta: float, s: int) -> ScatteringAmplitudes:
    """Reflection off the lattice junction site.

    Solves ``[4 sin^2(h) + s(exp(2ih) - 1)](R + 1) = 2i sin(2h)`` with
    ``h = k delta / 2``, i.e. ``R + 1 = 2i cos h / ((2 - s) sin h + i s cos h)``.
    At the band edge ``k delta = pi`` the equation degenerates; the limiting
    value is returned with ``band_edge=True``.
    """
    if int(s) != s or s < 1:
        raise DomainError(f"ray count must be an integer >= 1, got {s!r}")
    kd = _check_zone(k, delta)
    h = kd / 2
    if kd == math.pi:
        R = 0j if s == 2 else -1 + 0j
        return ScatteringAmplitudes(k, R, 1.0 + R, normalize_phase(0.0 if s == 2 else math.pi), True)
    sh, ch = math.sin(h), math.cos(h)
    den = (2 - s) * sh + 1j * s * ch
    R = 2j * ch / den - 1.0
    # exp(i theta) = -conj(den)/den, exactly unimodular
    e = -np.conj(den) / den
    theta = normalize_phase(math.atan2(e.imag, e.real))
    return ScatteringAmplitudes(k, complex(R), complex(1.0 + R), theta)


class EOMResidual(NamedTuple):
    """Absolute residuals of the lattice equations of motion, scaled by delta^2.

    ``rays[q, n-1]`` belongs to site ``n``; in ``open`` mode site ``N`` is
    omitted because its outer neighbour lies off the lattice.
    """

    junction: float
    rays: np.ndarray

    def max(self) -> float:
        return max(self.junction, float(np.max(self.rays, initial=0.0)))


def eom_residual(
    state: FieldState,
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    *,
    omega: float | None = None,
    acceleration: tuple[complex, np.ndarray] | None = None,
    family: JunctionFamily = KIRCHHOFF,
    far_boundary: str = "open",
) -> EOMResidual:
    """Residual of the junction, first-site and bulk equations of motion.

    The second time derivative comes either from ``acceleration`` as
    ``(junction_acc, ray_acc)`` or, for a stationary mode, from ``omega`` via
    ``acc = -omega^2 * value``.  Each equation is multiplied by ``delta^2`` so the
    residual is dimensionless.  ``far_boundary='dirichlet'`` also checks site ``N``
    against a zero outer neighbour.
    """
    from .dynamics import junction_couplings

    if (omega is None) == (acceleration is None):
        raise ValueError("pass exactly one of omega or acceleration")
    if far_boundary not in ("open", "dirichlet"):
        raise ValueError(f"far_boundary must be 'open' or 'dirichlet', got {far_boundary!r}")
    state.check_shape(graph, lattice)
    if omega is not None:
        acc0 = -omega**2 * state.junction_value
        acc = -omega**2 * state.ray_values
    else:
        acc0, acc = acceleration
        acc = np.asarray(acc)

    d2 = lattice.delta**2
    m2 = graph.mass**2
    c = junction_couplings(family, graph.ray_count)
    phi0 = state.junction_value
    phi = state.ray_values

    # junction site
    rhs0 = np.sum(c * (phi[:, 0] - phi0)) - d2 * m2 * phi0
    junction = abs(d2 * acc0 - rhs0)

    n_sites = phi.shape[1]
    res = np.empty_like(phi, dtype=float)
    # first site: neighbour is the junction (absent if the ray is severed)
    rhs1 = phi[:, 1] - phi[:, 0] + c * (phi0 - phi[:, 0]) - d2 * m2 * phi[:, 0]
    res[:, 0] = np.abs(d2 * acc[:, 0] - rhs1)
    # bulk sites 2..N-1
    bulk = slice(1, n_sites - 1)
    rhs = phi[:, 2:] + phi[:, :-2] - 2 * phi[:, bulk] - d2 * m2 * phi[:, bulk]
    res[:, bulk] = np.abs(d2 * acc[:, bulk] - rhs)
    if far_boundary == "open":
        return EOMResidual(float(junction), res[:, :-1])
    rhsN = phi[:, -2] - 2 * phi[:, -1] - d2 * m2 * phi[:, -1]
    res[:, -1] = np.abs(d2 * acc[:, -1] - rhsN)
    return EOMResidual(float(junction), res)


def continuum_limit_error(k: float, delta: float, s: int) -> float:
    """``|R_lattice(k) - (2 - s)/s|``; behaves as ``k delta / 9`` for ``s = 3``."""
    _check_zone(k, delta, closed=False)
    return abs(discrete_reflection(k, delta, s).reflection - kirchhoff_reflection(s))


def first_order_error(k: float, delta: float, s: int) -> float:
    """Leading term of :func:`continuum_limit_error` for small ``k delta``.

    From ``exp(i theta) ~ 1 - i (s - 2) k delta / s`` so that
    ``|R - R_cont| ~ |s - 2| k delta / s^2``.
    """
    return abs(s - 2) * k * delta / s**2
