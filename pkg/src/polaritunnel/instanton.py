"""Analytic bounce solutions of the coupled ski-jump problem in imaginary time.

A single quadrature ``q_i`` hits the wall at ``tau_1``; the wall acts as a
delta kick of strength ``A`` in the equations of motion. Every component of
the zero-temperature solution is a finite sum of ``exp(-rate * |tau - tau_1|)``
terms, which is how :class:`Trajectory` stores it so that time derivatives are
exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .errors import DivergentResponse, InvalidParameter, TruncationNotConverged
from .model import SystemSpec, polariton_spectrum, stiffness_matrix, validate_system

TAIL_RTOL = 1e-9
_ADAPTIVE_TAIL_RTOL = 1e-13
_MAX_MATSUBARA = 5_000_000


@dataclass(frozen=True)
class Trajectory:
    """Sampled path ``phi = (x, q_1, ..., q_N)`` plus its exponential expansion.

    ``phi[j](tau) = sum_k weights[j, k] * exp(-rates[k] * |tau - hit_time|)``.
    """

    tau_grid: np.ndarray
    values: np.ndarray
    hit_index: int
    hit_time: float
    amplitude: float
    rates: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def evaluate(self, tau, order: int = 0, side: int = 0) -> np.ndarray:
        """Path or its ``order``-th derivative at ``tau``, shape (len(tau), N+1).

        At the kink (``tau == hit_time``) odd derivatives are one-sided: pass
        ``side=-1`` for the limit from below, ``side=+1`` from above. With the
        default ``side=0`` odd derivatives there are NaN.
        """
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        s = tau - self.hit_time
        decay = np.exp(-np.abs(s)[:, None] * self.rates[None, :])
        if order % 2 == 0:
            factor = self.rates[None, :] ** order
        else:
            sgn = np.sign(s)
            at_kink = s == 0
            sgn = np.where(at_kink, float(side) if side else np.nan, sgn)
            factor = -sgn[:, None] * self.rates[None, :] ** order
        return (decay * factor) @ self.weights.T

    def velocity_jump(self, component: int | None = None) -> float:
        """phi_dot(tau_1+) - phi_dot(tau_1-) for one component (default: the bouncing one)."""
        j = self.hit_index if component is None else component
        return float(-2.0 * np.dot(self.rates, self.weights[j]))

    def kinetic_integral(self) -> float:
        """Closed-form integral of phi_dot^T phi_dot over the whole line."""
        r = self.rates
        gram = self.weights.T @ self.weights
        kernel = 2.0 * np.outer(r, r) / (r[:, None] + r[None, :])
        return float(np.sum(gram * kernel))

    def scaled(self, factor) -> "Trajectory":
        """Scale all components by a scalar, or each by its own entry of ``factor``."""
        f = np.broadcast_to(np.asarray(factor, dtype=float), (self.values.shape[1],))
        return Trajectory(self.tau_grid, self.values * f, self.hit_index, self.hit_time,
                          f[self.hit_index] * self.amplitude, self.rates, self.weights * f[:, None])


def _check_index(spec: SystemSpec, i: int) -> int:
    if not 1 <= i <= spec.n:
        raise InvalidParameter(f"hit index must be in 1..{spec.n}, got {i}")
    return i


def chi_p(spec: SystemSpec, omega_m):
    """Polaritonic response [(w_m^2 + w0^2)(w_m^2 + wc^2) - N<lambda^4>]^-1."""
    w2 = np.asarray(omega_m, dtype=float) ** 2
    denom = (w2 + spec.omega0**2) * (w2 + spec.omega_c**2) - spec.collective_coupling
    if np.any(denom <= 0):
        raise DivergentResponse("polaritonic response has a pole on the Matsubara axis")
    out = 1.0 / denom
    return float(out) if out.ndim == 0 else out


def frequency_weights(spec: SystemSpec, i: int, mode: str = "exact"):
    """Frequencies (w0, w+, w-) and their weights for a bounce of quadrature ``i``.

    The weights sum to one: the bare frequency carries the share of the
    collective coupling not due to system ``i``, the polaritons split the rest
    by (1 +- delta)/2.
    """
    _check_index(spec, i)
    sp = polariton_spectrum(spec, mode)
    total = spec.collective_coupling
    own = spec.couplings[i - 1] ** 2
    share = own / total if total > 0 else 0.0
    freqs = np.array([spec.omega0, sp.omega_plus, sp.omega_minus])
    weights = np.array([1.0 - share, share * 0.5 * (1 + sp.delta), share * 0.5 * (1 - sp.delta)])
    return freqs, weights


def harmonic_frequency(spec: SystemSpec, i: int = 1, mode: str = "exact") -> tuple[float, float]:
    """Weighted harmonic mean omega_H and the kick amplitude A = 2 a omega_H."""
    validate_system(spec)
    freqs, weights = frequency_weights(spec, i, mode)
    if weights[0] == 1.0:
        omega_h = spec.omega0
    else:
        omega_h = 1.0 / float(np.sum(weights / freqs))
    return omega_h, 2.0 * spec.wall_a * omega_h


def _instanton_expansion(spec: SystemSpec, i: int):
    sp = polariton_spectrum(spec, "exact")
    w0, wp, wm, delta = spec.omega0, sp.omega_plus, sp.omega_minus, sp.delta
    _, amp = harmonic_frequency(spec, i)
    c = spec.c
    total = spec.collective_coupling
    ci = c[i - 1]
    rates = np.array([w0, wp, wm])
    f = np.array([-1.0 / (2 * w0), (1 + delta) / (4 * wp), (1 - delta) / (4 * wm)])
    weights = np.zeros((spec.n + 1, 3))
    if total > 0 and ci != 0:
        weights[1:] = amp * np.outer(ci * c / total, f)
        # x(tau) from the residues of -A lambda_i^2 chi_P(w) / beta
        split2 = wp**2 - wm**2
        weights[0, 1:] = amp * ci / (2 * split2) * np.array([1 / wp, -1 / wm])
    weights[i, 0] += amp / (2 * w0)
    return rates, weights, amp


def instanton_path(spec: SystemSpec, i: int, tau_grid, tau1: float = 0.0) -> Trajectory:
    """Zero-temperature single-bounce path where quadrature ``i`` hits the wall at ``tau1``."""
    validate_system(spec)
    _check_index(spec, i)
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.size == 0 or not (tau_grid.min() <= tau1 <= tau_grid.max()):
        raise InvalidParameter("the time grid must cover the hitting time tau1")
    rates, weights, amp = _instanton_expansion(spec, i)
    traj = Trajectory(tau_grid, np.empty((0,)), i, float(tau1), amp, rates, weights)
    return Trajectory(tau_grid, traj.evaluate(tau_grid), i, float(tau1), amp, rates, weights)


@dataclass(frozen=True)
class FourierSolution:
    beta: float
    coefficients: dict
    hit_index: int
    amplitude: float
    hit_time: float = 0.0

    def synthesize(self, tau) -> np.ndarray:
        """Real path sum_m phi_m exp(i w_m tau), shape (len(tau), N+1)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        ms = np.array(sorted(self.coefficients))
        coeff = np.array([self.coefficients[m] for m in ms])
        phase = np.exp(1j * np.outer(tau, 2 * np.pi * ms / self.beta))
        return (phase @ coeff).real


def fourier_coefficients(spec: SystemSpec, i: int, beta: float, m_max: int,
                         tau1: float = 0.0, amplitude: float | None = None) -> FourierSolution:
    """Matsubara coefficients of the periodic single-bounce path for |m| <= m_max.

    Without an explicit ``amplitude`` the kick strength is fixed so that the
    truncated synthesis satisfies the wall condition q_i(tau1) = a exactly.
    """
    validate_system(spec)
    _check_index(spec, i)
    if beta <= 0 or m_max < 0:
        raise InvalidParameter("need beta > 0 and m_max >= 0")
    ms = np.arange(-m_max, m_max + 1)
    wm = 2 * np.pi * ms / beta
    chi = np.atleast_1d(chi_p(spec, wm))
    c = spec.c
    ci = c[i - 1]
    bare = 1.0 / (wm**2 + spec.omega0**2)
    if amplitude is None:
        amplitude = spec.wall_a * beta / float(np.sum(bare * (1 + ci**2 * chi)))
    phase = (amplitude / beta) * np.exp(-1j * wm * tau1)
    x = -ci * chi * phase
    q = np.outer(phase * ci * chi * bare, c)
    q[:, i - 1] = phase * bare * (1 + ci**2 * chi)
    coeffs = {int(m): np.concatenate(([x[k]], q[k])) for k, m in enumerate(ms)}
    return FourierSolution(float(beta), coeffs, i, float(amplitude), float(tau1))


def action_zero_t(spec: SystemSpec, i: int = 1) -> float:
    omega_h, _ = harmonic_frequency(spec, i)
    return spec.bare_action * omega_h / spec.omega0


def _coupled_tail(ci4: float, beta: float, m_max: int) -> float:
    # sum over |m| > m_max of the 1/w_m^6 asymptote of lambda_i^4 chi_P / (w0^2 + w_m^2), times 1/beta
    return 2.0 * ci4 / beta * (beta / (2 * np.pi)) ** 6 * float(zeta(6, m_max + 1))


def _adaptive_m_max(ci4: float, beta: float, reference: float) -> int:
    if ci4 == 0:
        return 0
    # tail <= 2 ci4/beta (beta/2pi)^6 / (5 M^5)
    bound = 2.0 * ci4 / beta * (beta / (2 * np.pi)) ** 6 / 5.0
    m = (bound / (_ADAPTIVE_TAIL_RTOL * reference)) ** 0.2
    return int(min(max(8, math.ceil(m)), _MAX_MATSUBARA))


def matsubara_sum(spec: SystemSpec, i: int, beta: float, m_max: int | None = None,
                  tail: bool = True) -> float:
    """(1/beta) sum_m (1 + lambda_i^4 chi_P(w_m)) / (w0^2 + w_m^2).

    With ``tail`` the uncoupled part is summed in closed form and the coupled
    remainder, which decays like 1/w_m^6, gets a zeta-function tail for
    |m| > m_max. Without it this is the raw truncated sum.
    """
    validate_system(spec)
    _check_index(spec, i)
    if beta <= 0:
        raise InvalidParameter("beta must be positive")
    w0 = spec.omega0
    ci4 = spec.couplings[i - 1] ** 2
    bare_total = 1.0 / (2 * w0 * math.tanh(0.5 * beta * w0))
    if m_max is None:
        m_max = _adaptive_m_max(ci4, beta, bare_total)
    ms = np.arange(1, m_max + 1)
    wm = 2 * np.pi * ms / beta
    if not tail:
        terms = (1 + ci4 * np.atleast_1d(chi_p(spec, wm))) / (w0**2 + wm**2)
        zero = (1 + ci4 * chi_p(spec, 0.0)) / w0**2
        return (zero + 2.0 * float(np.sum(terms))) / beta
    coupled = ci4 * np.atleast_1d(chi_p(spec, wm)) / (w0**2 + wm**2)
    coupled_sum = (ci4 * chi_p(spec, 0.0) / w0**2 + 2.0 * float(np.sum(coupled))) / beta
    tail_estimate = _coupled_tail(ci4, beta, m_max)
    total = bare_total + coupled_sum + tail_estimate
    if tail_estimate > TAIL_RTOL * total:
        raise TruncationNotConverged(
            f"Matsubara tail {tail_estimate:.3g} exceeds {TAIL_RTOL:g} of the sum at m_max={m_max}")
    return total


def action_finite_beta(spec: SystemSpec, i: int, beta: float, m_max: int | None = None,
                       tail: bool = True) -> float:
    """Bounce action 1/2 a^2 / [(1/beta) sum_m ...] on the circle of length beta."""
    return 0.5 * spec.wall_a**2 / matsubara_sum(spec, i, beta, m_max, tail)


def finite_beta_amplitude(spec: SystemSpec, i: int, beta: float, m_max: int | None = None) -> float:
    """Kick strength that puts q_i(tau_1) on the wall at inverse temperature beta."""
    return spec.wall_a / matsubara_sum(spec, i, beta, m_max)


def potential_energy(spec: SystemSpec, phi: np.ndarray) -> np.ndarray:
    """Harmonic part of V_tot, valid on the metastable side q_i <= a."""
    k = stiffness_matrix(spec)
    return 0.5 * np.einsum("ti,ij,tj->t", phi, k, phi)


def path_energy(traj: Trajectory, spec: SystemSpec) -> np.ndarray:
    """E(tau) = 1/2 phi_dot^T phi_dot - V_tot(phi) on the grid; NaN at the kink."""
    tau = traj.tau_grid
    vel = traj.evaluate(tau, order=1)
    phi = traj.evaluate(tau)
    energy = 0.5 * np.sum(vel**2, axis=1) - potential_energy(spec, phi)
    return np.where(tau == traj.hit_time, np.nan, energy)
