"""Energy, charge and flux of the lattice field.

Totals carry a factor ``delta`` so they approach continuum integrals.  The link
between sites ``n`` and ``n+1`` is owned by site ``n``; the links touching the
junction are owned by the junction, and site ``N`` owns its link to the pinned
outer neighbour.  The energy density is the positive-definite one,
``(|phi_t|^2 + |phi_q|^2 + m^2 |phi|^2) / 2``.

Flux signs: positive means towards the far end of the ray.  ``energy_flux`` is
``-(conj(phi_q) phi_t + conj(phi_t) phi_q)``, twice the flux that pairs with the
energy density above; the junction balance uses half of it.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .graph_model import KIRCHHOFF, FieldState, JunctionFamily, LatticeSpec, StarGraphSpec

__all__ = [
    "site_energies",
    "ray_energies",
    "junction_energy",
    "total_energy",
    "site_charges",
    "ray_charges",
    "junction_charge",
    "total_charge",
    "energy_flux",
    "charge_flux",
    "junction_energy_balance",
    "junction_charge_balance",
]


def _couplings(family, s):
    from .dynamics import junction_couplings

    return junction_couplings(family, s)


def site_energies(state: FieldState, graph: StarGraphSpec, lattice: LatticeSpec) -> np.ndarray:
    """Energy owned by each ray site, shape ``(s, N)``."""
    d = lattice.delta
    phi, v = state.ray_values, state.ray_velocities
    links = np.empty(phi.shape)
    links[:, :-1] = np.abs(np.diff(phi, axis=1)) ** 2
    links[:, -1] = np.abs(phi[:, -1]) ** 2
    return 0.5 * d * (np.abs(v) ** 2 + links / d**2 + graph.mass**2 * np.abs(phi) ** 2)


def ray_energies(state, graph, lattice) -> np.ndarray:
    return site_energies(state, graph, lattice).sum(axis=1)


def junction_energy(state, graph, lattice, family: JunctionFamily = KIRCHHOFF) -> float:
    d = lattice.delta
    c = _couplings(family, graph.ray_count)
    phi0 = state.junction_value
    links = np.sum(c * np.abs(phi0 - state.ray_values[:, 0]) ** 2)
    return float(
        0.5 * d * (abs(state.junction_velocity) ** 2 + links / d**2 + graph.mass**2 * abs(phi0) ** 2)
    )


def total_energy(state, graph, lattice, family: JunctionFamily = KIRCHHOFF) -> float:
    return float(np.sum(site_energies(state, graph, lattice))) + junction_energy(
        state, graph, lattice, family
    )


def _charge_density(phi, v):
    # i (conj(phi) phi_t - phi conj(phi_t)) = -2 Im(conj(phi) phi_t)
    return -2.0 * np.imag(np.conj(phi) * v)


def site_charges(state, graph, lattice) -> np.ndarray:
    return lattice.delta * _charge_density(state.ray_values, state.ray_velocities)


def ray_charges(state, graph, lattice) -> np.ndarray:
    return site_charges(state, graph, lattice).sum(axis=1)


def junction_charge(state, lattice: LatticeSpec) -> float:
    return float(lattice.delta * _charge_density(state.junction_value, state.junction_velocity))


def total_charge(state, graph, lattice) -> float:
    return float(np.sum(site_charges(state, graph, lattice))) + junction_charge(state, lattice)


def _centered(state, lattice, ray, site):
    n = state.sites_per_ray
    if not 1 <= site <= n - 1:
        raise DomainError(f"flux needs 1 <= site <= {n - 1}, got {site}")
    phi = state.ray_values[ray]
    left = state.junction_value if site == 1 else phi[site - 2]
    grad = (phi[site] - left) / (2 * lattice.delta)
    return phi[site - 1], state.ray_velocities[ray, site - 1], grad


def energy_flux(state: FieldState, lattice: LatticeSpec, ray: int, site: int) -> float:
    """Energy flux at ``site`` of ``ray`` with a centred spatial difference."""
    _, v, grad = _centered(state, lattice, ray, site)
    return float(-2.0 * np.real(np.conj(grad) * v))


def charge_flux(state: FieldState, lattice: LatticeSpec, ray: int, site: int) -> float:
    """Charge flux ``2 Im(conj(phi) phi_q)`` at ``site`` (the spatial current component, outward)."""
    phi, _, grad = _centered(state, lattice, ray, site)
    return float(2.0 * np.imag(np.conj(phi) * grad))


def _junction_acceleration(state, graph, lattice, c):
    d2 = lattice.delta**2
    phi0 = state.junction_value
    return np.sum(c * (state.ray_values[:, 0] - phi0)) / d2 - graph.mass**2 * phi0


def junction_energy_balance(
    state: FieldState,
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    family: JunctionFamily = KIRCHHOFF,
) -> float:
    """Inward energy flux at site 1 of every coupled ray minus the rate of change
    of the junction-owned energy (time derivative from the equations of motion).
    """
    c = _couplings(family, graph.ray_count)
    d = lattice.delta
    phi0, v0 = state.junction_value, state.junction_velocity
    a0 = _junction_acceleration(state, graph, lattice, c)
    first, v1 = state.ray_values[:, 0], state.ray_velocities[:, 0]
    rate = d * (
        np.real(np.conj(v0) * a0)
        + np.sum(c * np.real(np.conj(phi0 - first) * (v0 - v1))) / d**2
        + graph.mass**2 * np.real(np.conj(phi0) * v0)
    )
    inflow = sum(-0.5 * c[q] * energy_flux(state, lattice, q, 1) for q in range(graph.ray_count))
    return float(inflow - rate)


def junction_charge_balance(
    state: FieldState,
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    family: JunctionFamily = KIRCHHOFF,
) -> float:
    c = _couplings(family, graph.ray_count)
    a0 = _junction_acceleration(state, graph, lattice, c)
    rate = -2.0 * lattice.delta * np.imag(np.conj(state.junction_value) * a0)
    inflow = sum(-c[q] * charge_flux(state, lattice, q, 1) for q in range(graph.ray_count))
    return float(inflow - rate)
