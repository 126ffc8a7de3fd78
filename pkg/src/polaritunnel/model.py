"""N metastable ski-jump systems coupled bilinearly to one cavity quadrature.

Units: hbar = 1, energies are frequencies. Each coupling is stored as the signed
product ``c_i = lambda_i**2`` that multiplies ``x * q_i`` in the potential; the
QED coupling follows from ``lambda_i**2 = sqrt(omega_c * omega_0) * g_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, UnstableSystem

MODES = ("exact", "rwa")

# absolute tolerance (in units of omega0**2) for eigenvalue degeneracy checks
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class SystemSpec:
    omega0: float
    omega_c: float
    wall_a: float
    couplings: tuple[float, ...]
    barrier_energy: float = field(init=False, repr=False)
    bare_action: float = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(c) for c in self.couplings))
        e_b = 0.5 * self.omega0**2 * self.wall_a**2
        object.__setattr__(self, "barrier_energy", e_b)
        object.__setattr__(self, "bare_action", 2.0 * e_b / self.omega0 if self.omega0 else math.nan)

    @property
    def n(self) -> int:
        return len(self.couplings)

    @property
    def c(self) -> np.ndarray:
        """Signed couplings lambda_i**2 as an array."""
        return np.asarray(self.couplings, dtype=float)

    @property
    def collective_coupling(self) -> float:
        """N <lambda^4> = sum_i lambda_i**4."""
        return float(np.sum(self.c**2))

    @property
    def g2(self) -> np.ndarray:
        """Per-system g_i**2 = lambda_i**4 / (omega0 omega_c)."""
        return self.c**2 / (self.omega0 * self.omega_c)

    def with_couplings(self, couplings: Sequence[float]) -> "SystemSpec":
        return SystemSpec(self.omega0, self.omega_c, self.wall_a, tuple(couplings))

    def with_bare_action(self, s0: float) -> "SystemSpec":
        """Same system with the wall moved so that 2 E_b / omega0 = s0."""
        return SystemSpec(self.omega0, self.omega_c, math.sqrt(s0 / self.omega0), self.couplings)

    @classmethod
    def from_g2(cls, omega0: float, omega_c: float, wall_a: float, g2: Sequence[float],
                signs: Sequence[float] | None = None) -> "SystemSpec":
        g2 = np.asarray(g2, dtype=float)
        lam2 = np.sqrt(omega0 * omega_c * g2)
        if signs is not None:
            lam2 = lam2 * np.sign(signs)
        return cls(omega0, omega_c, wall_a, tuple(lam2))

    def to_dict(self) -> dict:
        return {"omega0": self.omega0, "omegaC": self.omega_c, "wallA": self.wall_a,
                "couplings": list(self.couplings)}

    @classmethod
    def from_dict(cls, d: dict) -> "SystemSpec":
        try:
            return cls(float(d["omega0"]), float(d["omegaC"]), float(d["wallA"]),
                       tuple(float(c) for c in d["couplings"]))
        except KeyError as exc:
            raise InvalidParameter(f"system descriptor missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise InvalidParameter(f"bad system descriptor: {exc}") from None


def validate_system(spec: SystemSpec) -> SystemSpec:
    for name in ("omega0", "omega_c", "wall_a"):
        value = getattr(spec, name)
        if not (math.isfinite(value) and value > 0):
            raise InvalidParameter(f"{name} must be positive and finite, got {value}")
    if spec.n < 1:
        raise InvalidParameter("at least one metastable system is required")
    if not all(math.isfinite(c) for c in spec.couplings):
        raise InvalidParameter("couplings must be finite")
    if spec.collective_coupling >= (spec.omega0 * spec.omega_c) ** 2:
        raise UnstableSystem(
            f"N<lambda^4> = {spec.collective_coupling:.6g} >= (omega0 omega_c)^2 = "
            f"{(spec.omega0 * spec.omega_c) ** 2:.6g}")
    return spec


@dataclass(frozen=True)
class CouplingMoments:
    mean_lambda2: float
    mean_lambda4: float
    mean_g2: float
    var_g2: float


def coupling_moments(spec: SystemSpec) -> CouplingMoments:
    c = spec.c
    g2 = spec.g2
    var = float(np.mean(g2**2) - np.mean(g2) ** 2)
    return CouplingMoments(
        mean_lambda2=float(np.mean(c)),
        mean_lambda4=float(np.mean(c**2)),
        mean_g2=float(np.mean(c**2)) / (spec.omega0 * spec.omega_c),
        var_g2=max(var, 0.0),
    )


@dataclass(frozen=True)
class PolaritonSpectrum:
    omega_plus: float
    omega_minus: float
    delta: float
    dark_count: int
    dark_frequency: float
    mode: str

    @property
    def rabi_splitting(self) -> float:
        return self.omega_plus - self.omega_minus


def _check_mode(mode: str) -> str:
    mode = mode.lower()
    if mode not in MODES:
        raise InvalidParameter(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def polariton_spectrum(spec: SystemSpec, mode: str = "exact") -> PolaritonSpectrum:
    mode = _check_mode(mode)
    validate_system(spec)
    w0, wc = spec.omega0, spec.omega_c
    total = spec.collective_coupling
    if mode == "exact":
        split2 = math.sqrt(4.0 * total + (w0**2 - wc**2) ** 2)  # omega_+^2 - omega_-^2
        wp2 = 0.5 * (w0**2 + wc**2) + 0.5 * split2
        wm2 = ((w0 * wc) ** 2 - total) / wp2  # product of eigenvalues; avoids cancellation
        wp, wm = math.sqrt(wp2), math.sqrt(wm2)
        delta = 0.0 if split2 == 0.0 else (w0**2 - wc**2) / split2
    else:
        ng2 = total / (w0 * wc)
        half = math.sqrt(ng2 + 0.25 * (wc - w0) ** 2)
        wp = 0.5 * (wc + w0) + half
        wm = (w0 * wc - ng2) / wp
        delta = 0.0 if half == 0.0 else (w0 - wc) / (2.0 * half)
    delta = min(1.0, max(-1.0, delta))
    wm = min(wm, wp)  # the product form can overshoot by an ulp at degeneracy
    return PolaritonSpectrum(wp, wm, delta, spec.n - 1, w0, mode)


def stiffness_matrix(spec: SystemSpec) -> np.ndarray:
    """Hessian of the harmonic part of V_tot in the ordering (x, q_1, ..., q_N)."""
    n = spec.n
    k = np.zeros((n + 1, n + 1))
    k[0, 0] = spec.omega_c**2
    k[np.arange(1, n + 1), np.arange(1, n + 1)] = spec.omega0**2
    k[0, 1:] = spec.c
    k[1:, 0] = spec.c
    return k
