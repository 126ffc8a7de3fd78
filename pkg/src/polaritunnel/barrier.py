"""Stationary points of the smooth wall potential E_b[(q/a)^2 - theta(q)(q/a)^n].

Used to count unstable directions at a barrier configuration: one negative
Hessian eigenvalue marks a saddle (single bounce), two mark a maximum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import optimize

from .errors import InvalidParameter, StationaryPointNotFound
from .model import SystemSpec, validate_system

DEFAULT_EXPONENT = 8


def _well(spec: SystemSpec, q: np.ndarray, n: int, order: int) -> np.ndarray:
    a, e_b = spec.wall_a, spec.barrier_energy
    u = q / a
    pos = q > 0
    if order == 0:
        return e_b * (u**2 - np.where(pos, u**n, 0.0))
    if order == 1:
        return e_b / a * (2 * u - np.where(pos, n * u ** (n - 1), 0.0))
    return e_b / a**2 * (2 - np.where(pos, n * (n - 1) * u ** (n - 2), 0.0))


def regularized_potential(spec: SystemSpec, phi: np.ndarray, n: int = DEFAULT_EXPONENT) -> float:
    x, q = phi[0], phi[1:]
    return float(np.sum(_well(spec, q, n, 0)) + 0.5 * spec.omega_c**2 * x**2 + x * np.dot(spec.c, q))


def regularized_gradient(spec: SystemSpec, phi: np.ndarray, n: int = DEFAULT_EXPONENT) -> np.ndarray:
    x, q = phi[0], phi[1:]
    grad = np.empty_like(phi)
    grad[0] = spec.omega_c**2 * x + np.dot(spec.c, q)
    grad[1:] = _well(spec, q, n, 1) + spec.c * x
    return grad


def regularized_hessian(spec: SystemSpec, phi: np.ndarray, n: int = DEFAULT_EXPONENT) -> np.ndarray:
    q = phi[1:]
    m = spec.n
    hess = np.zeros((m + 1, m + 1))
    hess[0, 0] = spec.omega_c**2
    hess[0, 1:] = hess[1:, 0] = spec.c
    hess[np.arange(1, m + 1), np.arange(1, m + 1)] = _well(spec, q, n, 2)
    return hess


@dataclass(frozen=True)
class HessianSignature:
    point: np.ndarray
    eigenvalues: np.ndarray
    negative_count: int
    gradient_norm: float


def barrier_hessian_analysis(spec: SystemSpec, configuration: Iterable[int],
                             n: int = DEFAULT_EXPONENT) -> HessianSignature:
    """Hessian signature at the stationary point nearest the given barrier configuration.

    ``configuration`` lists the (1-based) quadratures placed at the barrier
    top; the rest start in the well, and the cavity starts at its slaved value.
    """
    validate_system(spec)
    if n < 4 or n % 2:
        raise InvalidParameter("regularization exponent must be even and >= 4")
    at_top = sorted(set(configuration))
    if not at_top or any(not 1 <= k <= spec.n for k in at_top):
        raise InvalidParameter(f"configuration must name quadratures in 1..{spec.n}")

    q_top = spec.wall_a * (2.0 / n) ** (1.0 / (n - 2))
    seed = np.zeros(spec.n + 1)
    for k in at_top:
        seed[k] = q_top
    seed[0] = -np.dot(spec.c, seed[1:]) / spec.omega_c**2

    sol = optimize.root(lambda p: regularized_gradient(spec, p, n), seed,
                        jac=lambda p: regularized_hessian(spec, p, n), method="hybr",
                        options={"xtol": 1e-14})
    point = sol.x
    for _ in range(5):  # Newton polish to the gradient tolerance
        step = np.linalg.solve(regularized_hessian(spec, point, n), regularized_gradient(spec, point, n))
        point = point - step
    grad_norm = float(np.linalg.norm(regularized_gradient(spec, point, n)))
    tol = 1e-12 * spec.barrier_energy / spec.wall_a
    q = point[1:]
    top_mask = np.zeros(spec.n, dtype=bool)
    top_mask[np.array(at_top) - 1] = True
    in_region = np.all((q[top_mask] > 0.5 * q_top) & (q[top_mask] < spec.wall_a)) and np.all(
        np.abs(q[~top_mask]) < 0.5 * q_top)
    if not np.all(np.isfinite(point)) or grad_norm > tol or not in_region:
        raise StationaryPointNotFound(
            f"no stationary point near configuration {at_top} (|grad| = {grad_norm:.3g})")
    eig = np.linalg.eigvalsh(regularized_hessian(spec, point, n))
    return HessianSignature(point, eig, int(np.sum(eig < 0)), grad_norm)
