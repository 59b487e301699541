import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import stiffness_matrix
from scipy.integrate import quad

from starjunction import (
    DECOUPLED,
    KIRCHHOFF,
    DomainError,
    FieldState,
    LatticeSpec,
    Observer,
    StarGraphSpec,
    WavePacketSpec,
    charge_flux,
    discrete_dispersion,
    discrete_reflection,
    energy_flux,
    evolve,
    group_velocity,
    init_gaussian_packet,
    junction_charge_balance,
    junction_energy,
    junction_energy_balance,
    make_field_state,
    ray_energies,
    sample_discrete_mode,
    site_energies,
    total_charge,
    total_energy,
)


def _random_state(rng, s=3, n=12):
    z = lambda *shape: rng.normal(size=shape) + 1j * rng.normal(size=shape)  # noqa: E731
    return FieldState(complex(z(1)[0]), complex(z(1)[0]), z(s, n), z(s, n))


def test_zero_state(y_junction, small_lattice):
    z = make_field_state(y_junction, small_lattice)
    assert total_energy(z, y_junction, small_lattice) == 0
    assert total_charge(z, y_junction, small_lattice) == 0
    assert energy_flux(z, small_lattice, 0, 5) == 0 and charge_flux(z, small_lattice, 1, 1) == 0
    assert junction_energy_balance(z, y_junction, small_lattice) == 0
    assert junction_charge_balance(z, y_junction, small_lattice) == 0


def test_single_site_by_hand():
    g, lat = StarGraphSpec(3, 1.0), LatticeSpec(1.0, 5, 0.1)
    st0 = make_field_state(g, lat)
    st0.ray_values[1, 2] = 1.0
    # two links of unit stretch plus the mass term, halved
    assert total_energy(st0, g, lat) == pytest.approx(1.5)
    st0.ray_values[1, 2] = 0.0
    st0.junction_value = 1.0
    # three links to the rays plus mass
    assert junction_energy(st0, g, lat) == pytest.approx(2.0)
    assert total_energy(st0, g, lat, DECOUPLED) == pytest.approx(1.0)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_energy_is_the_quadratic_form(seed):
    rng = np.random.default_rng(seed)
    g, lat = StarGraphSpec(3, 0.7), LatticeSpec(0.2, 12, 0.01)
    st0 = _random_state(rng)
    x = np.concatenate([[st0.junction_value], st0.ray_values.ravel()])
    v = np.concatenate([[st0.junction_velocity], st0.ray_velocities.ravel()])
    K = stiffness_matrix(3, 12, 0.2, 0.7)
    expected = 0.5 * lat.delta * (np.vdot(v, v).real + np.vdot(x, K @ x).real)
    assert total_energy(st0, g, lat) == pytest.approx(expected, rel=1e-12)
    assert site_energies(st0, g, lat).shape == (3, 12)
    assert np.all(site_energies(st0, g, lat) >= 0)


@given(seed=st.integers(0, 2**32 - 1), chi=st.floats(-10, 10))
@settings(max_examples=25, deadline=None)
def test_global_phase_invariance(seed, chi):
    rng = np.random.default_rng(seed)
    g, lat = StarGraphSpec(3, 0.7), LatticeSpec(0.2, 12, 0.01)
    a = _random_state(rng)
    p = np.exp(1j * chi)
    b = FieldState(p * a.junction_value, p * a.junction_velocity, p * a.ray_values, p * a.ray_velocities)
    assert total_energy(b, g, lat) == pytest.approx(total_energy(a, g, lat), rel=1e-14)
    assert total_charge(b, g, lat) == pytest.approx(total_charge(a, g, lat), rel=1e-12, abs=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_ray_permutation_symmetry(seed):
    rng = np.random.default_rng(seed)
    g, lat = StarGraphSpec(3, 0.7), LatticeSpec(0.2, 12, 0.01)
    a = _random_state(rng)
    b = a.copy()
    b.ray_values[[1, 2]] = b.ray_values[[2, 1]]
    b.ray_velocities[[1, 2]] = b.ray_velocities[[2, 1]]
    for fn in (total_energy, junction_energy_balance, junction_charge_balance):
        assert fn(b, g, lat) == pytest.approx(fn(a, g, lat), rel=1e-14, abs=1e-12)
    assert total_charge(b, g, lat) == pytest.approx(total_charge(a, g, lat), rel=1e-14, abs=1e-12)
    np.testing.assert_allclose(ray_energies(b, g, lat)[[2, 1]], ray_energies(a, g, lat)[1:], rtol=1e-15)


def test_real_field_has_no_charge(y_junction, small_lattice):
    rng = np.random.default_rng(3)
    st0 = FieldState(0.3, -1.0, rng.normal(size=(3, 100)), rng.normal(size=(3, 100)))
    assert total_charge(st0, y_junction, small_lattice) == 0


def test_mode_charge(y_junction, small_lattice):
    k = 1.0
    R = discrete_reflection(k, small_lattice.delta, 3).reflection
    st0 = sample_discrete_mode(y_junction, small_lattice, k, R, 0.4)
    w = discrete_dispersion(k, 1.0, small_lattice.delta)
    norm = (np.sum(np.abs(st0.ray_values) ** 2) + abs(st0.junction_value) ** 2) * small_lattice.delta
    assert total_charge(st0, y_junction, small_lattice) == pytest.approx(2 * w * norm, rel=1e-13)
    later = sample_discrete_mode(y_junction, small_lattice, k, R, 7.9)
    assert total_charge(later, y_junction, small_lattice) == pytest.approx(
        total_charge(st0, y_junction, small_lattice), rel=1e-12
    )


def _smooth_state(delta, length=30.0, m=1.0):
    n = int(round(length / delta))
    x = np.arange(1, n + 1) * delta
    f = lambda x: np.exp(-((x - 15.0) ** 2) / 8) * np.cos(2 * x)  # noqa: E731
    h = lambda x: np.exp(-((x - 15.0) ** 2) / 8) * np.sin(x)  # noqa: E731
    rays = np.zeros((3, n), complex)
    vel = np.zeros((3, n), complex)
    rays[0], vel[0] = f(x), 1j * h(x)
    return FieldState(0, 0, rays, vel), LatticeSpec(delta, n, 0.1 * delta), f, h


def test_energy_converges_to_continuum_integral():
    g = StarGraphSpec(3, 1.0)
    _, _, f, h = _smooth_state(0.1)
    fp = lambda x: (f(x + 1e-5) - f(x - 1e-5)) / 2e-5  # noqa: E731
    exact = 0.5 * quad(lambda x: h(x) ** 2 + fp(x) ** 2 + f(x) ** 2, 0, 30, limit=400, epsabs=1e-13)[0]
    errs = []
    for delta in (0.1, 0.05, 0.025):
        st0, lat, _, _ = _smooth_state(delta)
        errs.append(abs(total_energy(st0, g, lat) - exact))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_outgoing_flux():
    g = StarGraphSpec(3, 1.0)
    k = 1.0
    errs = []
    for delta in (0.1, 0.05, 0.025):
        lat = LatticeSpec(delta, 50, 0.1 * delta)
        st0 = sample_discrete_mode(g, lat, k, 0.0, 0.3)  # ray 1 carries exp(ikx), |A| = 1
        w = math.sqrt(k * k + 1)
        errs.append(abs(energy_flux(st0, lat, 1, 20) - 2 * w * k))
        assert charge_flux(st0, lat, 1, 20) == pytest.approx(2 * k, rel=delta**2)
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[-1] <= 2e-3


def test_standing_wave_carries_no_flux():
    g, lat = StarGraphSpec(3, 1.0), LatticeSpec(0.1, 50, 0.01)
    for t in np.linspace(0, 3, 7):
        st0 = sample_discrete_mode(g, lat, 1.3, 1.0, t)
        assert abs(energy_flux(st0, lat, 0, 10)) <= 1e-12
        assert abs(charge_flux(st0, lat, 0, 10)) <= 1e-12


@pytest.mark.parametrize("site", [0, 100])
def test_flux_domain(y_junction, small_lattice, site):
    z = make_field_state(y_junction, small_lattice)
    with pytest.raises(DomainError):
        energy_flux(z, small_lattice, 0, site)


@pytest.mark.parametrize("family", [KIRCHHOFF, DECOUPLED])
def test_exact_mode_balances(family):
    g, lat = StarGraphSpec(3, 1.0), LatticeSpec(0.05, 10, 0.01)
    rng = np.random.default_rng(0)
    for k in rng.uniform(0.1, 20, 20):
        s_eff = 3 if family is KIRCHHOFF else 1
        R = discrete_reflection(k, lat.delta, s_eff).reflection
        st0 = sample_discrete_mode(g, lat, k, R, rng.uniform(0, 5))
        if family is DECOUPLED:
            st0.ray_values[1:] = 0
            st0.ray_velocities[1:] = 0
        e = total_energy(st0, g, lat, family)
        assert abs(junction_energy_balance(st0, g, lat, family)) <= 1e-10 * e
        assert abs(junction_charge_balance(st0, g, lat, family)) <= 1e-10 * e


def _mid_scattering(delta):
    """Worst balance residuals (relative to the energy) while the packet crosses the junction."""
    g = StarGraphSpec(3, 1.0)
    lat = LatticeSpec(delta, int(round(40 / delta)), delta / 4)
    # start far enough out that the Gaussian tail leaves no kink at the junction
    packet = WavePacketSpec(2.0, 20.0, 2.0)
    st0 = init_gaussian_packet(g, lat, packet)
    vg = group_velocity(2.0, 1.0, delta)
    start = evolve(st0, g, lat, int(round((packet.center - packet.width) / vg / lat.dt)))
    e = total_energy(st0, g, lat)
    probe = Observer(
        lambda i, t, s: (junction_energy_balance(s, g, lat), junction_charge_balance(s, g, lat)),
        every=max(1, int(round(0.05 / lat.dt))),
    )
    evolve(start, g, lat, int(round(2 * packet.width / vg / lat.dt)), [probe])
    return np.max(np.abs(probe.records), axis=0) / e


def test_packet_balances_converge_at_first_order():
    deltas = np.array([0.1, 0.05, 0.025, 0.0125])
    res = np.array([_mid_scattering(d) for d in deltas])
    for col in res.T:
        assert np.all(np.diff(col) < 0)
        assert np.polyfit(np.log(deltas), np.log(col), 1)[0] == pytest.approx(1.0, abs=0.1)
    assert res[-1].max() <= 5e-4


def test_energy_records_are_flat_while_packet_is_interior():
    g, lat = StarGraphSpec(3, 1.0), LatticeSpec(0.1, 600, 0.025)
    st0 = init_gaussian_packet(g, lat, WavePacketSpec(3.0, 15.0, 1.5))
    e0 = total_energy(st0, g, lat)
    rec = Observer(lambda i, t, s: total_energy(s, g, lat), every=20)
    evolve(st0, g, lat, 1000, [rec])
    assert np.max(np.abs(np.diff(rec.records))) / e0 <= 1e-8
