"""Built-in invariant suite behind ``starjunction validate``.

Each check returns the worst measured value and the tolerance it must stay
under; the report lists both so a regression shows how far off it is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analytic_smatrix as an
from . import discrete_smatrix as ds
from . import dynamics as dy
from . import observables as ob
from .graph_model import (
    DECOUPLED,
    KIRCHHOFF,
    LatticeSpec,
    StarGraphSpec,
    sample_discrete_mode,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<34s} worst={self.worst:.3e}  tol={self.tol:.1e}"


CHECKS: list[tuple[str, float, Callable[[np.random.Generator], float]]] = []


def check(name, tol):
    def register(fn):
        CHECKS.append((name, tol, fn))
        return fn

    return register


@check("kirchhoff_universality", 1e-15)
def _kirchhoff(rng):
    g = StarGraphSpec(3, 1.0)
    ks = np.linspace(0.01, 10, 200)
    return max(abs(an.family_amplitudes(KIRCHHOFF, k, g).reflection + 1 / 3) for k in ks)


@check("unitarity_phase_parameterisation", 1e-14)
def _unitarity_phase(rng):
    worst = 0.0
    for s in range(1, 7):
        for theta in rng.uniform(-math.pi, math.pi, 200):
            R = an.phase_to_amplitudes(theta, 1.0, s).reflection
            worst = max(worst, abs(an.unitarity_residual(R, s)))
    return worst


@check("unitarity_lattice", 1e-13)
def _unitarity_lattice(rng):
    worst = 0.0
    for s in range(1, 7):
        for kd in np.linspace(1e-4, math.pi - 1e-4, 300):
            R = ds.discrete_reflection(kd, 1.0, s).reflection
            worst = max(worst, abs(an.unitarity_residual(R, s)))
    return worst


@check("family_phase_unit_modulus", 1e-14)
def _unit_modulus(rng):
    worst = 0.0
    for k, m, c in zip(rng.uniform(0.01, 10, 300), rng.uniform(0, 5, 300), rng.normal(0, 10, 300)):
        worst = max(worst, abs(abs(an.alpha_family_phase(k, m, c)) - 1))
        worst = max(worst, abs(abs(an.beta_family_phase(k, c)) - 1))
    return worst


@check("simultaneity_only_trivial", 1e-12)
def _simultaneity(rng):
    # trivial solutions must zero both residuals; any other constant phase must
    # leave at least one above 1e-6 (reported as a violation of size 1)
    worst = 0.0
    for R in (-1 / 3, -1.0):
        for k1, k2 in rng.uniform(0.1, 5, (20, 2)):
            spec = an.TwoModeSpec(k1, k2, R, R)
            worst = max(worst, abs(an.energy_cross_residual(spec, 1.0, 3)),
                        abs(an.charge_cross_residual(spec, 3)))
    pairs = rng.uniform(0.1, 5, (8, 2))
    for theta in rng.uniform(-math.pi, math.pi, 300):
        R = an.phase_to_amplitudes(theta, 1.0, 3).reflection
        biggest = max(
            max(abs(an.energy_cross_residual(an.TwoModeSpec(a, b, R, R), 1.0, 3)),
                abs(an.charge_cross_residual(an.TwoModeSpec(a, b, R, R), 3)))
            for a, b in pairs
        )
        if biggest <= 1e-6:
            worst = max(worst, 1.0)
    return worst


@check("kirchhoff_derivative_sum", 1e-13)
def _derivative_sum(rng):
    worst = 0.0
    for s in range(1, 7):
        R = an.kirchhoff_reflection(s)
        for k, t in zip(rng.uniform(0.01, 10, 50), rng.uniform(-10, 10, 50)):
            worst = max(worst, abs(an.junction_derivative_sum(k, R, t, s)) / k)
    return worst


@check("degenerate_two_mode_is_unitarity", 1e-12)
def _degenerate(rng):
    worst = 0.0
    for k, m, x, y in zip(*rng.uniform(0.1, 3, (4, 100))):
        R = complex(x - 1.5, y - 1.5)
        w = an.dispersion_omega(k, m)
        # the degenerate limit bypasses TwoModeSpec's distinct-k guard
        c, d = 1 + R, 1 + 3 * R
        combined = w * k * (np.conj(c) * d + np.conj(d) * c)
        worst = max(worst, abs(combined / (2 * w * k) - an.unitarity_residual(R, 3)))
    return worst


@check("lattice_mode_exactness", 1e-12)
def _mode_exact(rng):
    worst = 0.0
    g = StarGraphSpec(3, 1.0)
    for k in np.linspace(0.1, 10, 8):
        for delta in np.geomspace(0.005, 0.3, 8):
            lat = LatticeSpec(delta, 6, 0.1 * delta)
            R = ds.discrete_reflection(k, delta, 3).reflection
            st = sample_discrete_mode(g, lat, k, R, rng.uniform(0, 10))
            worst = max(worst, ds.eom_residual(st, g, lat, omega=ds.discrete_dispersion(k, 1.0, delta)).max())
    return worst


@check("continuum_limit_order", 0.1)
def _order(rng):
    deltas = np.array([0.2, 0.1, 0.05, 0.025])
    errs = [ds.continuum_limit_error(1.0, d, 3) for d in deltas]
    return abs(np.polyfit(np.log(deltas), np.log(errs), 1)[0] - 1.0)


@check("mode_junction_balances", 1e-10)
def _balances(rng):
    g = StarGraphSpec(3, 1.0)
    lat = LatticeSpec(0.05, 10, 0.01)
    worst = 0.0
    for k in rng.uniform(0.1, 20, 20):
        R = ds.discrete_reflection(k, lat.delta, 3).reflection
        st = sample_discrete_mode(g, lat, k, R, rng.uniform(0, 5))
        scale = ob.total_energy(st, g, lat)
        worst = max(worst, abs(ob.junction_energy_balance(st, g, lat)) / scale,
                    abs(ob.junction_charge_balance(st, g, lat)) / scale)
    return worst


def _small_packet():
    g = StarGraphSpec(3, 1.0)
    lat = LatticeSpec(0.1, 600, 0.025)
    packet = dy.WavePacketSpec(3.0, 15.0, 1.5)
    return g, lat, packet


@check("time_reversibility", 1e-9)
def _reversal(rng):
    g, lat, packet = _small_packet()
    st = dy.init_gaussian_packet(g, lat, packet)
    fwd = dy.evolve(st, g, lat, 1000)
    back = dy.evolve(dy.reverse_velocities(fwd), g, lat, 1000)
    back = dy.reverse_velocities(back)
    return float(np.linalg.norm(back.values_vector() - st.values_vector()) / np.linalg.norm(st.values_vector()))


@check("packet_energy_charge_drift", 1e-8)
def _drift(rng):
    g, lat, packet = _small_packet()
    m = dy.run_scattering_experiment(g, lat, packet)
    return max(m.energy_drift, m.charge_drift)


@check("packet_reflection_vs_lattice_prediction", 0.02)
def _packet_reflection(rng):
    g, lat, packet = _small_packet()
    m = dy.run_scattering_experiment(g, lat, packet)
    return abs(m.measured_R2 - m.predicted_R2_lattice) / m.predicted_R2_lattice


@check("decoupled_transmission", 1e-4)
def _decoupled(rng):
    g, lat, packet = _small_packet()
    return dy.run_scattering_experiment(g, lat, packet, family=DECOUPLED).total_transmitted_energy_fraction


@check("family_fit_roundtrip", 1e-8)
def _fit(rng):
    worst = 0.0
    grid = [0.5, 1.0, 2.0]
    for c in rng.uniform(-3, 3, 5):
        for kind in ("alpha", "beta"):
            R = [
                an.family_amplitudes(
                    an.AlphaFamily(c) if kind == "alpha" else an.BetaFamily(c), k, StarGraphSpec(3, 1.0)
                ).reflection
                for k in grid
            ]
            fit = an.solve_family_from_residuals(grid, R, 1.0, kind)
            worst = max(worst, abs(fit.constant - c))
    return worst


def run_validation(seed: int = 0) -> list[CheckResult]:
    results = []
    for name, tol, fn in CHECKS:
        rng = np.random.default_rng(seed)
        results.append(CheckResult(name, float(fn(rng)), tol))
    return results
