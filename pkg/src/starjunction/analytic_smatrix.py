"""Continuum scattering off the star-graph junction.

A wave of wavenumber ``k`` enters on ray 0; with reflection ``R`` the field is
``exp(-i(wt + kq)) + R exp(-i(wt - kq))`` on ray 0 and ``(1 + R) exp(-i(wt - kq))``
on every other ray.  Flux conservation pins ``R`` to the circle
``R = (exp(i theta) - (s - 1)) / s``; the junction conditions select ``theta``.

For ``s`` rays the sum of outward derivatives at the junction is
``i k ((s - 2) + s R)``, which is what the two-mode residuals below are built
from (``1 + 3R`` for the Y-junction).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, FamilyFitError, SpecError
from .graph_model import (
    AlphaFamily,
    BetaFamily,
    Decoupled,
    JunctionFamily,
    Kirchhoff,
    ScatteringAmplitudes,
    StarGraphSpec,
    canonical_family,
)

__all__ = [
    "TwoModeSpec",
    "FamilyFit",
    "dispersion_omega",
    "normalize_phase",
    "kirchhoff_reflection",
    "reflection_phase",
    "phase_to_amplitudes",
    "unitarity_residual",
    "alpha_family_phase",
    "beta_family_phase",
    "family_amplitudes",
    "monochromatic_field",
    "monochromatic_gradient",
    "junction_derivative_sum",
    "energy_cross_residual",
    "charge_cross_residual",
    "solve_family_from_residuals",
]


@dataclass(frozen=True)
class TwoModeSpec:
    """Two superposed incoming modes and their reflection amplitudes."""

    k1: float
    k2: float
    R1: complex
    R2: complex

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise SpecError("two-mode wavenumbers must be positive")
        if self.k1 == self.k2:
            raise SpecError("two-mode wavenumbers must be distinct")


@dataclass(frozen=True)
class FamilyFit:
    kind: str
    constant: float
    max_residual: float


def dispersion_omega(k, m):
    return np.sqrt(np.square(k) + m * m)


def normalize_phase(theta):
    """Wrap to the half-open interval (-pi, pi]."""
    wrapped = np.angle(np.exp(1j * np.asarray(theta, dtype=float)))
    wrapped = np.where(wrapped <= -np.pi, np.pi, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def _check_rays(s):
    if int(s) != s or s < 1:
        raise SpecError(f"ray count must be an integer >= 1, got {s!r}")


def kirchhoff_reflection(s: int) -> complex:
    _check_rays(s)
    return complex((2 - s) / s, 0.0)


def reflection_phase(R, s: int):
    """Phase ``theta`` with ``exp(i theta) = s R + (s - 1)``."""
    return normalize_phase(np.angle(s * np.asarray(R) + (s - 1)))


def phase_to_amplitudes(theta: float, k: float, s: int) -> ScatteringAmplitudes:
    _check_rays(s)
    if not k > 0:
        raise DomainError(f"k must be > 0, got {k!r}")
    theta = normalize_phase(theta)
    if theta == 0.0:
        R = kirchhoff_reflection(s)
    elif theta == math.pi:
        R = complex(-1.0, 0.0)
    else:
        R = (np.exp(1j * theta) - (s - 1)) / s
    R = complex(R)
    return ScatteringAmplitudes(k=k, reflection=R, transmission=1.0 + R, phase=theta)


def unitarity_residual(R, s: int):
    """``|R|^2 + (s - 1)|1 + R|^2 - 1``; zero iff the junction conserves flux."""
    R = np.asarray(R)
    res = np.abs(R) ** 2 + (s - 1) * np.abs(1.0 + R) ** 2 - 1.0
    return float(res) if res.ndim == 0 else res


def alpha_family_phase(k: float, m: float, alpha: float) -> complex:
    """``exp(i theta) = (k + i alpha w) / (k - i alpha w)``; infinite alpha gives -1."""
    if not k > 0:
        raise DomainError(f"alpha family needs k > 0, got {k!r}")
    if math.isinf(alpha):
        return complex(-1.0, 0.0)
    z = 1j * alpha * math.sqrt(k * k + m * m)
    return complex((k + z) / (k - z))


def beta_family_phase(k: float, beta: float) -> complex:
    if not k > 0:
        raise DomainError(f"beta family needs k > 0, got {k!r}")
    if math.isinf(beta):
        return complex(-1.0, 0.0)
    return complex((k + 1j * beta) / (k - 1j * beta))


def family_amplitudes(
    family: JunctionFamily, k: float, graph: StarGraphSpec
) -> ScatteringAmplitudes:
    family = canonical_family(family)
    s = graph.ray_count
    if isinstance(family, Kirchhoff):
        return phase_to_amplitudes(0.0, k, s)
    if isinstance(family, Decoupled):
        return phase_to_amplitudes(math.pi, k, s)
    if isinstance(family, AlphaFamily):
        e = alpha_family_phase(k, graph.mass, family.alpha)
    elif isinstance(family, BetaFamily):
        e = beta_family_phase(k, family.beta)
    else:  # pragma: no cover - canonical_family rejects everything else
        raise TypeError(family)
    return phase_to_amplitudes(math.atan2(e.imag, e.real), k, s)


def monochromatic_field(k, R, ray, q, t, *, mass=1.0, incoming_ray=0):
    """Value of the stationary scattering solution on ``ray`` at ``(q, t)``."""
    w = dispersion_omega(k, mass)
    clock = np.exp(-1j * w * np.asarray(t))
    out = np.exp(1j * k * np.asarray(q))
    if ray == incoming_ray:
        return (np.conj(out) + R * out) * clock
    return (1.0 + R) * out * clock


def monochromatic_gradient(k, R, ray, q, t, *, mass=1.0, incoming_ray=0):
    """Outward derivative ``d/dq`` of :func:`monochromatic_field`."""
    w = dispersion_omega(k, mass)
    clock = np.exp(-1j * w * np.asarray(t))
    out = np.exp(1j * k * np.asarray(q))
    if ray == incoming_ray:
        return 1j * k * (R * out - np.conj(out)) * clock
    return 1j * k * (1.0 + R) * out * clock


def junction_derivative_sum(k, R, t, s, *, mass=1.0):
    """Sum over rays of the outward derivative at the junction."""
    return sum(monochromatic_gradient(k, R, q, 0.0, t, mass=mass) for q in range(s))


def _junction_factors(R, s):
    # continuity factor (1 + R) and derivative-sum factor ((s - 2) + s R)
    return 1.0 + R, (s - 2) + s * R


def energy_cross_residual(spec: TwoModeSpec, m: float, s: int) -> complex:
    """Coefficient of ``exp(i(w1 - w2) t)`` in the junction energy-flux balance."""
    _check_rays(s)
    w1, w2 = dispersion_omega(spec.k1, m), dispersion_omega(spec.k2, m)
    c1, d1 = _junction_factors(spec.R1, s)
    c2, d2 = _junction_factors(spec.R2, s)
    return complex(
        w1 * spec.k2 * np.conj(c1) * d2 + w2 * spec.k1 * np.conj(d1) * c2
    )


def charge_cross_residual(spec: TwoModeSpec, s: int) -> complex:
    """Coefficient of ``exp(i(w1 - w2) t)`` in the junction charge-current balance."""
    _check_rays(s)
    c1, d1 = _junction_factors(spec.R1, s)
    c2, d2 = _junction_factors(spec.R2, s)
    return complex(spec.k2 * np.conj(c1) * d2 + spec.k1 * np.conj(d1) * c2)


def _model_reflection(kind, k, m, constant, s):
    e = alpha_family_phase(k, m, constant) if kind == "alpha" else beta_family_phase(k, constant)
    return (e - (s - 1)) / s


def _pair_residual(kind, spec, m, s):
    if kind == "alpha":
        return energy_cross_residual(spec, m, s)
    return charge_cross_residual(spec, s)


def solve_family_from_residuals(
    k_grid: Sequence[float],
    reflections: Sequence[complex],
    m: float,
    family_kind: str,
    s: int = 3,
    tol: float = 1e-9,
) -> FamilyFit:
    """Recover the alpha (energy) or beta (charge) constant behind ``reflections``.

    The constant is the value for which the cross residual between every observed
    mode and the model mode at every other grid point vanishes.  Raises
    FamilyFitError if the observed modes themselves violate the residual condition
    or no single constant reproduces them.
    """
    if family_kind not in ("alpha", "beta"):
        raise ValueError(f"family_kind must be 'alpha' or 'beta', got {family_kind!r}")
    k = np.asarray(k_grid, dtype=float)
    R = np.asarray(reflections, dtype=complex)
    if k.ndim != 1 or k.size < 2 or len(np.unique(k)) != k.size or np.any(k <= 0):
        raise SpecError("k_grid needs at least two distinct positive values")
    if R.shape != k.shape:
        raise SpecError("reflections must match k_grid in length")

    pairs = [(i, j) for i in range(k.size) for j in range(k.size) if i != j]
    observed = max(
        abs(_pair_residual(family_kind, TwoModeSpec(k[i], k[j], R[i], R[j]), m, s))
        for i, j in pairs
    )
    if observed > tol:
        raise FamilyFitError(f"observed modes violate the {family_kind} cross condition", observed)

    # per-point estimate: tan(theta/2) = c * (omega/k for alpha, 1/k for beta)
    theta = reflection_phase(R, s)
    scale = dispersion_omega(k, m) if family_kind == "alpha" else np.ones_like(k)
    if np.all(np.abs(np.abs(theta) - np.pi) < 1e-12):
        return FamilyFit(family_kind, math.inf, observed)
    finite = np.abs(np.abs(theta) - np.pi) > 1e-6
    guess = float(np.median(np.tan(theta[finite] / 2) * k[finite] / scale[finite]))

    def residuals(c):
        out = []
        for i, j in pairs:
            model = _model_reflection(family_kind, k[j], m, c[0], s)
            r = _pair_residual(family_kind, TwoModeSpec(k[i], k[j], R[i], model), m, s)
            out.extend((r.real, r.imag))
        return out

    fit = least_squares(residuals, [guess], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    constant = float(fit.x[0])
    worst = float(np.max(np.abs(residuals([constant]))))
    mismatch = float(
        np.max(np.abs(R - [_model_reflection(family_kind, kk, m, constant, s) for kk in k]))
    )
    if max(worst, mismatch) > math.sqrt(tol):
        raise FamilyFitError(
            f"no single {family_kind} constant reproduces the reflections", max(worst, mismatch)
        )
    return FamilyFit(family_kind, constant, max(observed, worst))
