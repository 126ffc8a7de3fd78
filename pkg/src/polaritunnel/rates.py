"""Fluctuation corrections and the cavity-induced tunneling rate modification r.

Only ratios are produced. Absolute rates, the fluctuation determinant and
powers of 2 pi all cancel in r = k / k(lambda = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, RWAViolation
from .instanton import Trajectory, frequency_weights, harmonic_frequency
from .model import CouplingMoments, SystemSpec, polariton_spectrum, validate_system

# boundary matching gdot = 2 fdot; the alternative 2 sqrt(3) would only rescale eps
BOUNDARY_FACTOR = 2.0


def arithmetic_frequency(spec: SystemSpec, i: int = 1, mode: str = "exact") -> float:
    validate_system(spec)
    freqs, weights = frequency_weights(spec, i, mode)
    if weights[0] == 1.0:
        return spec.omega0
    return float(np.sum(weights * freqs))


def epsilon_finite(spec: SystemSpec, i: int, beta: float, mode: str = "exact") -> float:
    """Closed-form finite-temperature correction eps_i(beta) to the zero mode."""
    if beta < 0:
        raise InvalidParameter("beta must be non-negative")
    validate_system(spec)
    omega_h, _ = harmonic_frequency(spec, i, mode)
    freqs, weights = frequency_weights(spec, i, mode)
    if weights[0] == 1.0:
        w0 = spec.omega0
        return 4.0 * w0 * w0 * math.exp(-beta * w0)
    return 4.0 * omega_h * float(np.sum(weights * freqs * np.exp(-beta * freqs)))


def epsilon_from_path(traj: Trajectory, spec: SystemSpec, beta: float) -> float:
    """eps(beta) from boundary derivatives of a zero-temperature path at tau_1 -+ beta/2.

    The denominator is the kinetic integral of the path (the bounce action).
    """
    t1 = traj.hit_time
    ends = np.array([t1 - 0.5 * beta, t1 + 0.5 * beta])
    vel = traj.evaluate(ends, order=1)
    acc = traj.evaluate(ends, order=2)
    numerator = float(np.dot(vel[0], acc[0]) - np.dot(vel[1], acc[1]))
    return BOUNDARY_FACTOR * numerator / traj.kinetic_integral()


@dataclass(frozen=True)
class EpsilonBounds:
    n: np.ndarray
    values: np.ndarray
    lower: float
    upper: float
    limit: float


def epsilon_ratio_bounds(spec: SystemSpec, i: int, beta: float, n_range,
                         mode: str = "exact") -> EpsilonBounds:
    """[eps(beta/n) / eps(0)]^n for each n, with its empirical extremes and n -> inf limit."""
    n = np.asarray(list(n_range), dtype=int)
    if n.size == 0 or np.any(n < 1):
        raise InvalidParameter("n_range must be a non-empty set of positive integers")
    eps0 = epsilon_finite(spec, i, 0.0, mode)
    ratios = np.array([epsilon_finite(spec, i, beta / k, mode) / eps0 for k in n])
    values = ratios ** n
    freqs, weights = frequency_weights(spec, i, mode)
    # log-ratio ~ -(beta/n) <w^2>/<w> for large n
    limit = math.exp(-beta * float(np.sum(weights * freqs**2) / np.sum(weights * freqs)))
    return EpsilonBounds(n, values, float(values.min()), float(values.max()), limit)


@dataclass(frozen=True)
class SystemRate:
    i: int
    omega_h: float
    omega_a: float
    action: float
    factor: float


@dataclass(frozen=True)
class RateBreakdown:
    per_system: tuple[SystemRate, ...]
    ensemble_r: float
    bare_action: float
    mode: str

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "S0": self.bare_action,
            "r": self.ensemble_r,
            "perSystem": [
                {"i": s.i, "omegaH": s.omega_h, "omegaA": s.omega_a,
                 "actionSE": s.action, "factor": s.factor}
                for s in self.per_system
            ],
        }


def rate_factor(omega_h_ratio, omega_a_ratio, s0):
    """Per-system (wH/w0) sqrt(wA/w0) exp[-S0 (wH/w0 - 1)]."""
    return omega_h_ratio * np.sqrt(omega_a_ratio) * np.exp(-s0 * (omega_h_ratio - 1.0))


def ensemble_frequencies(spec: SystemSpec, mode: str = "exact") -> tuple[np.ndarray, np.ndarray]:
    """omega_H and omega_A for every choice of bouncing quadrature, vectorised over i."""
    validate_system(spec)
    sp = polariton_spectrum(spec, mode)
    total = spec.collective_coupling
    c4 = spec.c**2
    share = c4 / total if total > 0 else np.zeros_like(c4)
    wp_weight = 0.5 * (1 + sp.delta) * share
    wm_weight = 0.5 * (1 - sp.delta) * share
    w0 = spec.omega0
    inv_h = (1 - share) / w0 + wp_weight / sp.omega_plus + wm_weight / sp.omega_minus
    arith = (1 - share) * w0 + wp_weight * sp.omega_plus + wm_weight * sp.omega_minus
    uncoupled = share == 0
    omega_h = np.where(uncoupled, w0, 1.0 / inv_h)
    omega_a = np.where(uncoupled, w0, arith)
    return omega_h, omega_a


def rate_modification_exact(spec: SystemSpec, s0: float | None = None,
                            mode: str = "exact") -> RateBreakdown:
    """Mean of the per-system rate factors over which quadrature bounces."""
    s0 = spec.bare_action if s0 is None else float(s0)
    w0 = spec.omega0
    omega_h, omega_a = ensemble_frequencies(spec, mode)
    factors = np.where(spec.c == 0, 1.0, rate_factor(omega_h / w0, omega_a / w0, s0))
    rows = tuple(
        SystemRate(i + 1, float(omega_h[i]), float(omega_a[i]), s0 * float(omega_h[i]) / w0,
                   float(factors[i]))
        for i in range(spec.n)
    )
    return RateBreakdown(rows, math.fsum(factors) / spec.n, s0, mode)


def ensemble_rate(spec: SystemSpec, s0: float | None = None, mode: str = "exact") -> float:
    """Just the ensemble r of :func:`rate_modification_exact`, without per-system records."""
    s0 = spec.bare_action if s0 is None else float(s0)
    omega_h, omega_a = ensemble_frequencies(spec, mode)
    w0 = spec.omega0
    factors = np.where(spec.c == 0, 1.0, rate_factor(omega_h / w0, omega_a / w0, s0))
    return math.fsum(factors) / spec.n


def rate_modification_single(g2ratio: float, s0: float) -> float:
    """Single system: (1 - g^2/w0wc) exp(S0 g^2/w0wc)."""
    if not 0 <= g2ratio < 1:
        raise InvalidParameter("g^2/(omega_c omega_0) must lie in [0, 1)")
    return (1.0 - g2ratio) * math.exp(s0 * g2ratio)


def rate_modification_single_linear(g2ratio: float, s0: float) -> float:
    """Lowest-order expansion 1 + (S0 - 1) g^2/w0wc."""
    return 1.0 + (s0 - 1.0) * g2ratio


@dataclass(frozen=True)
class CumulantRate:
    r: float
    r_large_n: float
    mean_ratio: float
    var_ratio: float


def rate_modification_cumulant(moments: CouplingMoments, spec: SystemSpec,
                               s0: float | None = None) -> CumulantRate:
    """Second-order cumulant estimate of r for N systems under the RWA.

    ``moments`` may come from the system's own couplings or from a population
    distribution; N and the bare frequencies are taken from ``spec``.
    """
    s0 = spec.bare_action if s0 is None else float(s0)
    n = spec.n
    w0wc = spec.omega0 * spec.omega_c
    ng2 = n * moments.mean_g2
    if ng2 >= w0wc:
        raise RWAViolation(f"N<g^2> = {ng2:.6g} >= omega0 omega_c = {w0wc:.6g}")
    mean = (w0wc - ng2) / (w0wc - (n - 1) * moments.mean_g2)
    var = mean**4 * moments.var_g2 / (w0wc - ng2) ** 2
    r = (mean - s0 * var) * math.exp(s0 - s0 * mean + 0.5 * s0**2 * var)
    x = moments.mean_g2 / w0wc
    return CumulantRate(r, (1.0 - x) * math.exp(s0 * x), mean, var)


@dataclass(frozen=True)
class HighTResult:
    beta: float
    actions: np.ndarray
    prefactors: np.ndarray
    ratios: np.ndarray


def high_t_action(spec: SystemSpec, beta: float) -> HighTResult:
    """Thermal-activation actions beta E_b * ratio_i and TST prefactors w0 sqrt(ratio_i)."""
    validate_system(spec)
    if beta <= 0:
        raise InvalidParameter("beta must be positive")
    w0wc = spec.omega0 * spec.omega_c
    g2 = spec.g2
    ng2 = float(np.sum(g2))
    ratios = (w0wc - ng2) / (w0wc - (ng2 - g2))
    ratios = np.where(g2 == 0, 1.0, ratios)
    return HighTResult(float(beta), beta * spec.barrier_energy * ratios,
                       spec.omega0 * np.sqrt(ratios), ratios)


def rwa_mean_harmonic_ratio(spec: SystemSpec) -> float:
    """Closed form of <omega_H/omega0> for equal couplings: ratio of polariton products."""
    w0wc = spec.omega0 * spec.omega_c
    g2 = float(np.mean(spec.g2))
    return (w0wc - spec.n * g2) / (w0wc - (spec.n - 1) * g2)

