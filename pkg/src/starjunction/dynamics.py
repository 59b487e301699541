"""Time evolution of the oscillator network with velocity Verlet.

The stored velocity is synchronised with the field (kick-drift-kick), so every
FieldState refers to a single time slice.  Far ends of the rays are closed with
a zero outer neighbour; runs are sized so nothing reaches them.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
import scipy.fft

from .analytic_smatrix import family_amplitudes
from .discrete_smatrix import discrete_dispersion, discrete_reflection
from .errors import ExperimentInvalid, IntegrationBlowUp, SpecError
from .graph_model import (
    KIRCHHOFF,
    Decoupled,
    FieldState,
    JunctionFamily,
    Kirchhoff,
    LatticeSpec,
    StarGraphSpec,
    canonical_family,
    make_field_state,
)

log = logging.getLogger(__name__)

__all__ = [
    "WavePacketSpec",
    "StopRule",
    "Observer",
    "ScatteringMeasurement",
    "junction_couplings",
    "acceleration",
    "init_gaussian_packet",
    "step",
    "evolve",
    "reverse_velocities",
    "group_velocity",
    "run_scattering_experiment",
]


def junction_couplings(family: JunctionFamily, s: int) -> np.ndarray:
    """Weight of the link between the junction site and site 1 of each ray.

    Kirchhoff couples every ray; the decoupled junction keeps only ray 0 attached
    to the junction site.  Other families have no lattice counterpart.
    """
    family = canonical_family(family)
    c = np.ones(s)
    if isinstance(family, Kirchhoff):
        return c
    if isinstance(family, Decoupled):
        c[1:] = 0.0
        return c
    raise SpecError(f"{family!r} has no oscillator-network realisation")


def acceleration(
    junction: complex,
    rays: np.ndarray,
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    couplings: np.ndarray,
) -> tuple[complex, np.ndarray]:
    inv_d2 = 1.0 / lattice.delta**2
    m2 = graph.mass**2
    first = rays[:, 0]
    acc0 = inv_d2 * np.dot(couplings, first - junction) - m2 * junction
    acc = np.empty_like(rays)
    acc[:, 1:-1] = rays[:, 2:] + rays[:, :-2] - 2.0 * rays[:, 1:-1]
    acc[:, 0] = rays[:, 1] - first + couplings * (junction - first)
    acc[:, -1] = rays[:, -2] - 2.0 * rays[:, -1]
    acc *= inv_d2
    acc -= m2 * rays
    return acc0, acc


# Wave packets ----------------------------------------------------------------


@dataclass(frozen=True)
class WavePacketSpec:
    """Gaussian packet on ray 0 heading for the junction.

    ``width`` is the standard deviation of ``|phi|^2``.  ``velocity_init`` selects
    ``"spectral"`` (positive-frequency projection consistent with the integrator)
    or ``"narrowband"`` (``phi_dot = -i w(k0) phi``).
    """

    carrier_k: float
    center: float
    width: float
    amplitude: complex = 1.0
    velocity_init: str = "spectral"

    def __post_init__(self):
        if not self.carrier_k > 0:
            raise SpecError(f"carrier_k must be > 0, got {self.carrier_k!r}")
        if not self.width > 0:
            raise SpecError(f"width must be > 0, got {self.width!r}")
        if not self.center - 5 * self.width > 0:
            raise SpecError("packet overlaps the junction: need center - 5*width > 0")
        if self.velocity_init not in ("spectral", "narrowband"):
            raise SpecError(f"unknown velocity_init {self.velocity_init!r}")

    def check_lattice(self, lattice: LatticeSpec) -> None:
        if not self.center + 5 * self.width < lattice.length:
            raise SpecError("packet overlaps the far boundary: need center + 5*width < N*delta")
        if self.width < 10 * lattice.delta:
            raise SpecError("packet envelope unresolved: need width >= 10*delta")
        if self.carrier_k * lattice.delta >= math.pi:
            raise SpecError("carrier wavenumber outside the first Brillouin zone")


def init_gaussian_packet(
    graph: StarGraphSpec, lattice: LatticeSpec, packet: WavePacketSpec
) -> FieldState:
    packet.check_lattice(lattice)
    state = make_field_state(graph, lattice)
    n = lattice.sites_per_ray
    x = np.arange(1, n + 1) * lattice.delta
    envelope = np.exp(-((x - packet.center) ** 2) / (4 * packet.width**2))
    phi = complex(packet.amplitude) * envelope * np.exp(-1j * packet.carrier_k * x)
    state.ray_values[0] = phi
    if packet.velocity_init == "narrowband":
        w0 = discrete_dispersion(packet.carrier_k, graph.mass, lattice.delta)
        state.ray_velocities[0] = -1j * w0 * phi
    else:
        # normal modes of a chain pinned at sites 0 and N+1 are DST-I vectors;
        # velocity Verlet rotates mode p at w_p sqrt(1 - (w_p dt / 2)^2) per unit time
        p = np.arange(1, n + 1) * np.pi / (n + 1)
        w = np.sqrt(4.0 / lattice.delta**2 * np.sin(p / 2) ** 2 + graph.mass**2)
        w_dt = w * np.sqrt(1.0 - (w * lattice.dt / 2) ** 2)
        state.ray_velocities[0] = -1j * scipy.fft.idst(w_dt * scipy.fft.dst(phi, type=1), type=1)
    return state


# Stepping ---------------------------------------------------------------------


def _check_finite(j, vj, r, vr, step_index, last_max):
    if not (np.isfinite(j) and np.isfinite(vj) and np.all(np.isfinite(r)) and np.all(np.isfinite(vr))):
        raise IntegrationBlowUp(step_index, last_max)


def step(
    state: FieldState,
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    family: JunctionFamily = KIRCHHOFF,
) -> FieldState:
    """Advance ``state`` by one kick-drift-kick step of ``lattice.dt``."""
    return evolve(state, graph, lattice, 1, family=family)


@dataclass
class Observer:
    """Calls ``fn(step_index, time, state)`` every ``every`` steps and keeps the results.

    ``state`` is a snapshot the callback must treat as read-only.  Step 0 (the
    initial state) and the final step are always observed.
    """

    fn: Callable[[int, float, FieldState], Any]
    every: int = 1
    records: list = field(default_factory=list)

    def __post_init__(self):
        if self.every < 1:
            raise ValueError("observer cadence must be >= 1")

    def __call__(self, step_index, time, state):
        self.records.append(self.fn(step_index, time, state))


def evolve(
    state: FieldState,
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    n_steps: int,
    observers: Sequence[Observer] = (),
    family: JunctionFamily = KIRCHHOFF,
    dt: float | None = None,
) -> FieldState:
    """Apply ``n_steps`` velocity-Verlet steps and return the new state.

    ``dt`` defaults to ``lattice.dt``; a negative value integrates backwards.
    The input state is not modified.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    lattice.check_cfl(graph)
    state.check_shape(graph, lattice)
    h = lattice.dt if dt is None else float(dt)
    c = junction_couplings(family, graph.ray_count)

    j, vj = state.junction_value, state.junction_velocity
    r, vr = state.ray_values.copy(), state.ray_velocities.copy()
    t0 = state.time

    def snapshot(i):
        return FieldState(j, vj, r.copy(), vr.copy(), t0 + i * h)

    for obs in observers:
        obs(0, t0, snapshot(0))
    if n_steps == 0:
        return snapshot(0)

    half = 0.5 * h
    a0, a = acceleration(j, r, graph, lattice, c)
    last_max = float(np.max(np.abs(r), initial=abs(j)))
    # overflow is caught by the finiteness check and reported as a blow-up
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n_steps + 1):
            vj += half * a0
            vr += half * a
            j += h * vj
            r += h * vr
            a0, a = acceleration(j, r, graph, lattice, c)
            vj += half * a0
            vr += half * a
            due = [obs for obs in observers if i % obs.every == 0 or i == n_steps]
            if due or i == n_steps:
                _check_finite(j, vj, r, vr, i, last_max)
                last_max = float(np.max(np.abs(r), initial=abs(j)))
            if due:
                snap = snapshot(i)
                for obs in due:
                    obs(i, snap.time, snap)
    return snapshot(n_steps)


def reverse_velocities(state: FieldState) -> FieldState:
    out = state.copy()
    out.junction_velocity = -out.junction_velocity
    out.ray_velocities = -out.ray_velocities
    return out


# Scattering experiments ----------------------------------------------------------


def group_velocity(k: float, m: float, delta: float) -> float:
    """Lattice group velocity ``dw/dk = sin(k delta) / (delta w)``."""
    return math.sin(k * delta) / (delta * discrete_dispersion(k, m, delta))


@dataclass(frozen=True)
class StopRule:
    """When to stop a scattering run and how clean the junction must be by then.

    The run lasts until the scattered packets are ``clearance`` widths away from
    the junction (or ``max_time`` if given).  At that time the energy within
    ``5 * width`` of the junction must be below ``junction_tol`` of the total.
    """

    clearance: float = 10.0
    max_time: float | None = None
    junction_tol: float = 1e-4
    cadence: int = 10


@dataclass
class ScatteringMeasurement:
    stop_time: float
    n_steps: int
    initial_energy: float
    initial_charge: float
    reflected_energy_fraction: float
    transmitted_energy_fractions: np.ndarray
    reflected_charge_fraction: float
    transmitted_charge_fractions: np.ndarray
    junction_energy_fraction: float
    energy_drift: float
    charge_drift: float
    predicted_reflection_continuum: complex
    predicted_reflection_lattice: complex
    final_state: FieldState = field(repr=False)
    records: list = field(default_factory=list, repr=False)

    @property
    def measured_R2(self) -> float:
        return self.reflected_energy_fraction

    @property
    def predicted_R2_continuum(self) -> float:
        return abs(self.predicted_reflection_continuum) ** 2

    @property
    def predicted_R2_lattice(self) -> float:
        return abs(self.predicted_reflection_lattice) ** 2

    @property
    def total_transmitted_energy_fraction(self) -> float:
        return float(np.sum(self.transmitted_energy_fractions))

    def summary(self) -> dict:
        t = self.transmitted_energy_fractions
        return {
            "stop_time": self.stop_time,
            "n_steps": self.n_steps,
            "initial_energy": self.initial_energy,
            "initial_charge": self.initial_charge,
            "reflected_energy_fraction": self.reflected_energy_fraction,
            "transmitted_energy_fractions": [float(v) for v in t],
            "reflected_charge_fraction": self.reflected_charge_fraction,
            "transmitted_charge_fractions": [float(v) for v in self.transmitted_charge_fractions],
            "junction_energy_fraction": self.junction_energy_fraction,
            "energy_drift": self.energy_drift,
            "charge_drift": self.charge_drift,
            "predicted_R2_continuum": self.predicted_R2_continuum,
            "predicted_R2_lattice": self.predicted_R2_lattice,
            "relative_error_R2_continuum": _rel(self.measured_R2, self.predicted_R2_continuum),
            "relative_error_R2_lattice": _rel(self.measured_R2, self.predicted_R2_lattice),
        }


def _rel(measured, predicted):
    if predicted == 0:
        return abs(measured)
    return abs(measured - predicted) / abs(predicted)


def _spread_width(width, k, m, delta, t):
    # Gaussian spreading with effective dispersion d^2w/dk^2 of the lattice
    h = 1e-4 * k
    w = lambda kk: discrete_dispersion(kk, m, delta)  # noqa: E731
    curv = abs(w(k + h) - 2 * w(k) + w(k - h)) / h**2
    return width * math.sqrt(1.0 + (curv * t / (2 * width**2)) ** 2)


def run_scattering_experiment(
    graph: StarGraphSpec,
    lattice: LatticeSpec,
    packet: WavePacketSpec,
    stop_rule: StopRule = StopRule(),
    family: JunctionFamily = KIRCHHOFF,
    extra_observers: Sequence[Observer] = (),
) -> ScatteringMeasurement:
    """Send ``packet`` into the junction and measure where energy and charge end up."""
    from . import observables as obs

    family = canonical_family(family)
    couplings = junction_couplings(family, graph.ray_count)
    k0, m, delta = packet.carrier_k, graph.mass, lattice.delta
    vg = group_velocity(k0, m, delta)
    if stop_rule.max_time is not None:
        t_stop = stop_rule.max_time
    else:
        t_stop = (packet.center + stop_rule.clearance * packet.width) / vg
    n_steps = int(math.ceil(t_stop / lattice.dt))
    t_stop = n_steps * lattice.dt

    # the farthest-travelling feature leaves from the packet's far edge
    width_end = _spread_width(packet.width, k0, m, delta, t_stop)
    reach = max(packet.center, vg * t_stop - packet.center) + 5 * width_end
    if packet.velocity_init == "narrowband":
        # counter-propagating remnant heads straight out along ray 0
        reach = max(reach, packet.center + vg * t_stop + 5 * width_end)
    if reach >= lattice.length:
        raise ExperimentInvalid(
            f"lattice too short: features reach {reach:.3f} by t={t_stop:.3f} "
            f"but rays end at {lattice.length:.3f}"
        )

    state = init_gaussian_packet(graph, lattice, packet)
    e0 = obs.total_energy(state, graph, lattice, family)
    q0 = obs.total_charge(state, graph, lattice)
    if e0 <= 0:
        raise ExperimentInvalid("packet carries no energy")

    def record(i, t, s):
        return (t, obs.total_energy(s, graph, lattice, family), obs.total_charge(s, graph, lattice))

    monitor = Observer(record, every=stop_rule.cadence)
    log.info("scattering run: %d steps to t=%.4f (v_g=%.4f)", n_steps, t_stop, vg)
    final = evolve(state, graph, lattice, n_steps, [monitor, *extra_observers], family=family)

    energies = np.array([r[1] for r in monitor.records])
    charges = np.array([r[2] for r in monitor.records])
    ray_e = obs.ray_energies(final, graph, lattice)
    ray_q = obs.ray_charges(final, graph, lattice)
    e_junction = obs.junction_energy(final, graph, lattice, family)
    e_end = float(np.sum(ray_e) + e_junction)

    x = np.arange(1, lattice.sites_per_ray + 1) * delta
    near = x < 5 * width_end
    near_energy = e_junction + float(np.sum(obs.site_energies(final, graph, lattice)[:, near]))
    if near_energy > stop_rule.junction_tol * e_end:
        raise ExperimentInvalid(
            f"stop rule unmet: {near_energy / e_end:.3e} of the energy is still within "
            f"{5 * width_end:.3f} of the junction at t={t_stop:.3f}"
        )

    q_end = float(np.sum(ray_q) + obs.junction_charge(final, lattice))
    return ScatteringMeasurement(
        stop_time=t_stop,
        n_steps=n_steps,
        initial_energy=e0,
        initial_charge=q0,
        reflected_energy_fraction=float(ray_e[0] / e_end),
        transmitted_energy_fractions=ray_e[1:] / e_end,
        reflected_charge_fraction=float(ray_q[0] / q_end) if q_end else float("nan"),
        transmitted_charge_fractions=ray_q[1:] / q_end if q_end else ray_q[1:] * np.nan,
        junction_energy_fraction=float(e_junction / e_end),
        energy_drift=float(np.ptp(energies) / e0),
        charge_drift=float(np.ptp(charges) / abs(q0)) if q0 else float(np.ptp(charges)),
        predicted_reflection_continuum=family_amplitudes(family, k0, graph).reflection,
        predicted_reflection_lattice=(
            # a severed junction leaves ray 0 ending on the lone junction site
            discrete_reflection(k0, delta, graph.ray_count if isinstance(family, Kirchhoff) else 1)
        ).reflection,
        final_state=final,
        records=monitor.records,
    )
