"""Brute-force rederivations used to cross-check the closed forms.

Nothing here calls the analytic instanton or spectrum formulas: paths come
from an eigen-decomposition of the stiffness matrix, Matsubara sums are summed
term by term, and actions are integrated numerically.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import GridTooCoarse, InvalidParameter, UnstableDraw
from .instanton import Trajectory
from .model import SystemSpec, stiffness_matrix, validate_system

_CHUNK = 4_000_000


def normal_mode_path_oracle(spec: SystemSpec, i: int, tau_grid, tau1: float = 0.0) -> Trajectory:
    """Green's function of (-d^2/dtau^2 + K) on the line, kicked in component ``i``."""
    validate_system(spec)
    if not 1 <= i <= spec.n:
        raise InvalidParameter(f"hit index must be in 1..{spec.n}")
    mu, vecs = np.linalg.eigh(stiffness_matrix(spec))
    rates = np.sqrt(mu)
    overlap = vecs[i, :]
    shape = vecs * (overlap / (2.0 * rates))[None, :]  # column k: v_k (v_k . e_i) / (2 sqrt(mu_k))
    amplitude = spec.wall_a / float(np.sum(shape[i]))
    weights = amplitude * shape
    tau_grid = np.asarray(tau_grid, dtype=float)
    decay = np.exp(-np.abs(tau_grid - tau1)[:, None] * rates[None, :])
    return Trajectory(tau_grid, decay @ weights.T, i, float(tau1), amplitude, rates, weights)


def matsubara_sum_oracle(spec: SystemSpec, i: int, beta: float, m_max: int) -> float:
    """Raw truncated (1/beta) sum_{|m|<=m_max} (1 + lambda_i^4 chi_P) / (w0^2 + w_m^2)."""
    w0, wc = spec.omega0, spec.omega_c
    total = spec.collective_coupling
    ci4 = spec.couplings[i - 1] ** 2

    def terms(w2):
        chi = 1.0 / ((w2 + w0**2) * (w2 + wc**2) - total)
        return (1.0 + ci4 * chi) / (w0**2 + w2)

    acc = float(terms(np.array([0.0]))[0])
    partial = []
    for start in range(1, m_max + 1, _CHUNK):
        m = np.arange(start, min(start + _CHUNK, m_max + 1), dtype=float)
        partial.append(2.0 * float(np.sum(terms((2 * np.pi * m / beta) ** 2))))
    return (acc + math.fsum(partial)) / beta


def matsubara_tail_bound(spec: SystemSpec, i: int, beta: float, m_max: int) -> float:
    """Upper bound on what the raw sum omits beyond |m| = m_max (all terms are positive)."""
    w_edge = 2 * np.pi * max(m_max, 1) / beta
    ci4 = spec.couplings[i - 1] ** 2
    return (1.0 + ci4 / w_edge**4) * beta / (2 * np.pi**2 * max(m_max, 1))


def matsubara_action_oracle(spec: SystemSpec, i: int, beta: float, m_max: int) -> float:
    return 0.5 * spec.wall_a**2 / matsubara_sum_oracle(spec, i, beta, m_max)


def graded_grid(spec: SystemSpec, tau1: float = 0.0, ratio: float = 1.005,
                first_step: float | None = None, extent: float | None = None) -> np.ndarray:
    """Symmetric grid around tau1 with geometrically growing steps.

    Each half has a multiple of four intervals so that Simpson's rule can be
    applied on the grid and on every second node.
    """
    if not 1.0 < ratio <= 1.1:
        raise InvalidParameter("grid ratio must lie in (1, 1.1]")
    k = stiffness_matrix(spec)
    mu = np.linalg.eigvalsh(k)
    w_lo, w_hi = math.sqrt(mu[0]), math.sqrt(mu[-1])
    first_step = 1e-4 / w_hi if first_step is None else first_step
    extent = 40.0 / w_lo if extent is None else extent
    steps = math.ceil(math.log(1 + extent * (ratio - 1) / first_step) / math.log(ratio))
    steps += (-steps) % 4
    offsets = first_step * (ratio ** np.arange(steps + 1) - 1) / (ratio - 1)
    return np.concatenate((tau1 - offsets[:0:-1], tau1 + offsets))


def _simpson(t: np.ndarray, f: np.ndarray) -> float:
    h0 = t[1:-1:2] - t[:-2:2]
    h1 = t[2::2] - t[1:-1:2]
    f0, f1, f2 = f[:-2:2], f[1:-1:2], f[2::2]
    s = (h0 + h1) / 6 * ((2 - h1 / h0) * f0 + (h0 + h1) ** 2 / (h0 * h1) * f1 + (2 - h0 / h1) * f2)
    return math.fsum(s)


def _half_line_integral(t: np.ndarray, f: np.ndarray) -> tuple[float, float]:
    fine = _simpson(t, f)
    coarse = _simpson(t[::2], f[::2])
    err = abs(fine - coarse) / 15.0
    return fine + (fine - coarse) / 15.0, err


def numeric_action_oracle(traj: Trajectory, spec: SystemSpec, kinetic_only: bool = False,
                          rtol: float = 1e-9) -> float:
    """Euclidean action of a sampled path by Richardson-extrapolated composite Simpson.

    The grid must contain the hitting time as a node; each side is integrated
    separately so the kink never sits inside a panel.
    """
    t = traj.tau_grid
    k = int(np.searchsorted(t, traj.hit_time))
    if k >= t.size or t[k] != traj.hit_time:
        raise GridTooCoarse("the hitting time must be a grid node")
    vel = np.vstack((traj.evaluate(t[:k + 1], order=1, side=-1),
                     traj.evaluate(t[k + 1:], order=1, side=+1)))
    density = 0.5 * np.sum(vel**2, axis=1)
    if kinetic_only:
        density = 2.0 * density
    else:
        phi = traj.values
        density = density + 0.5 * np.einsum("ti,ij,tj->t", phi, stiffness_matrix(spec), phi)
    for part in (t[:k + 1], t[k:]):
        if (part.size - 1) % 4:
            raise GridTooCoarse("each half of the grid needs a multiple of four intervals")
    left, left_err = _half_line_integral(t[:k + 1], density[:k + 1])
    right, right_err = _half_line_integral(t[k:], density[k:])
    total = left + right
    if left_err + right_err > rtol * abs(total):
        raise GridTooCoarse(f"quadrature error estimate {left_err + right_err:.3g} "
                            f"exceeds {rtol:g} relative")
    return total


@dataclass(frozen=True)
class CouplingEnsemble:
    """Distribution of g^2 values for N systems.

    kind: ``explicit`` (params = the N values), ``uniform`` (lo, hi),
    ``gaussian`` (mean, sd) or ``twoPoint`` (v1, v2, p).
    """

    kind: str
    params: tuple[float, ...]
    count: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in ("explicit", "uniform", "gaussian", "twoPoint"):
            raise InvalidParameter(f"unknown ensemble kind {self.kind!r}")
        if self.count < 1:
            raise InvalidParameter("ensemble needs at least one system")
        if self.kind == "explicit" and len(self.params) != self.count:
            raise InvalidParameter("explicit ensemble needs one g^2 value per system")
        arity = {"uniform": 2, "gaussian": 2, "twoPoint": 3}.get(self.kind)
        if arity is not None and len(self.params) != arity:
            raise InvalidParameter(f"{self.kind} ensemble takes {arity} parameters")
        if self.kind == "twoPoint" and not 0 <= self.params[2] <= 1:
            raise InvalidParameter("twoPoint probability must lie in [0, 1]")

    def population_moments(self) -> tuple[float, float]:
        """Mean and variance of a single g^2 draw."""
        p = self.params
        if self.kind == "explicit":
            v = np.asarray(p)
            return float(v.mean()), float(v.var())
        if self.kind == "uniform":
            return 0.5 * (p[0] + p[1]), (p[1] - p[0]) ** 2 / 12.0
        if self.kind == "gaussian":
            return p[0], p[1] ** 2
        v1, v2, prob = p
        mean = prob * v1 + (1 - prob) * v2
        return mean, prob * (1 - prob) * (v1 - v2) ** 2

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        p, n = self.params, self.count
        if self.kind == "explicit":
            return np.asarray(p)
        if self.kind == "uniform":
            return rng.uniform(p[0], p[1], n)
        if self.kind == "gaussian":
            return rng.normal(p[0], p[1], n)
        return np.where(rng.random(n) < p[2], p[0], p[1])

    @classmethod
    def from_dict(cls, d: dict, count: int | None = None, seed: int = 0) -> "CouplingEnsemble":
        kind = d.get("kind")
        keys = {"explicit": ("values",), "uniform": ("lo", "hi"), "gaussian": ("mean", "sd"),
                "twoPoint": ("v1", "v2", "p")}
        if kind not in keys:
            raise InvalidParameter(f"unknown coupling distribution {kind!r}")
        try:
            if kind == "explicit":
                params = tuple(d["values"])
            else:
                params = tuple(d[k] for k in keys[kind])
        except KeyError as exc:
            raise InvalidParameter(f"coupling distribution missing {exc}") from None
        n = d.get("count", count if count is not None else len(params))
        return cls(kind, params, int(n), int(d.get("seed", seed)))


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for Monte Carlo sample ``index``: SeedSequence(seed, spawn_key=(index,))."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    stderr: float
    samples: int
    rejected: int
    values: np.ndarray = field(repr=False)


def monte_carlo_ensemble(ensemble: CouplingEnsemble, template: SystemSpec, s0: float | None,
                         samples: int, mode: str = "rwa") -> MonteCarloResult:
    """Average the ensemble r over independent coupling draws.

    Draws use the RWA by default because the estimate is compared with the
    cumulant expansion, which is an RWA result. Couplings are taken positive;
    r depends only on g_i^2.
    """
    from .rates import ensemble_rate

    if samples < 1:
        raise InvalidParameter("samples must be >= 1")
    s0 = template.bare_action if s0 is None else float(s0)
    w0wc = template.omega0 * template.omega_c
    cap = 100 * samples
    attempts = 0
    rejected = 0
    values = np.empty(samples)
    for k in range(samples):
        rng = sample_stream(ensemble.seed, k)
        while True:
            attempts += 1
            if attempts > cap:
                raise UnstableDraw(f"{rejected} unstable draws exceeded the cap of {cap} attempts")
            g2 = ensemble.draw(rng)
            if np.all(g2 >= 0) and float(np.sum(g2)) < w0wc:
                break
            rejected += 1
            if ensemble.kind == "explicit":
                raise UnstableDraw("explicit coupling set is unstable")
        spec = SystemSpec.from_g2(template.omega0, template.omega_c, template.wall_a, g2)
        values[k] = ensemble_rate(spec, s0, mode)
    if np.ptp(values) == 0:
        return MonteCarloResult(float(values[0]), 0.0, samples, rejected, values)
    stderr = float(np.std(values, ddof=1) / math.sqrt(samples)) if samples > 1 else math.nan
    return MonteCarloResult(math.fsum(values) / samples, stderr, samples, rejected, values)


@dataclass(frozen=True)
class OracleReport:
    check_name: str
    max_error: float
    tolerance: float
    passed: bool
    runtime: float

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"checkName": d["check_name"], "maxError": d["max_error"],
                "tolerance": d["tolerance"], "pass": d["passed"], "runtime": d["runtime"]}


# check name -> tolerance; errors are relative unless the name says otherwise
TOLERANCES = {
    "path_vs_normal_modes": 1e-10,
    "amplitude_vs_normal_modes": 1e-10,
    "wall_condition": 1e-12,
    "velocity_jump": 1e-10,
    "zero_energy": 1e-10,
    "action_vs_quadrature": 1e-8,
    "kinetic_vs_full_action": 1e-8,
    "matsubara_bracket": 1e-12,
    "finite_beta_to_zero_t": 1e-6,
    "epsilon_closed_vs_path": 1e-6,
    "epsilon_zero_limit": 1e-10,
    "rate_vs_normal_modes": 1e-10,
    "high_t_vs_static_mode": 1e-8,
}


def _timed(name: str, fn: Callable[[], float], tolerance: float) -> OracleReport:
    start = time.perf_counter()
    err = float(fn())
    return OracleReport(name, err, tolerance, bool(err <= tolerance), time.perf_counter() - start)


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def run_verification(spec: SystemSpec, tolerance: float | None = None) -> list[OracleReport]:
    """Run the full cross-check battery on one system; ``tolerance`` overrides every check."""
    from . import instanton, rates

    validate_system(spec)
    tol = dict(TOLERANCES)
    if tolerance is not None:
        tol = {k: float(tolerance) for k in tol}
    a, e_b, w0 = spec.wall_a, spec.barrier_energy, spec.omega0
    beta_eps = 5.0 / w0
    beta_hot = 0.01 / w0
    beta_cold = 60.0 / w0
    beta_sum = 1.0 / w0
    m_bracket = 100_000
    grid = graded_grid(spec)
    hits = range(1, spec.n + 1)
    paths = {i: instanton.instanton_path(spec, i, grid) for i in hits}
    modes = {i: normal_mode_path_oracle(spec, i, grid) for i in hits}
    off_kink = grid != 0.0

    def path_err():
        return max(np.max(np.abs(paths[i].values - modes[i].values)) / a for i in hits)

    def amp_err():
        return max(_rel(instanton.harmonic_frequency(spec, i)[1], modes[i].amplitude) for i in hits)

    def wall_err():
        return max(abs(paths[i].evaluate([0.0])[0, i] - a) / a for i in hits)

    def jump_err():
        return max(_rel(-paths[i].velocity_jump(), paths[i].amplitude) for i in hits)

    def energy_err():
        return max(np.nanmax(np.abs(instanton.path_energy(paths[i], spec)[off_kink])) / e_b
                   for i in hits)

    def action_err():
        return max(_rel(instanton.action_zero_t(spec, i), numeric_action_oracle(modes[i], spec))
                   for i in hits)

    def kinetic_err():
        return max(_rel(numeric_action_oracle(modes[i], spec, kinetic_only=True),
                        numeric_action_oracle(modes[i], spec)) for i in hits)

    def bracket_err():
        worst = 0.0
        for i in hits:
            exact = instanton.matsubara_sum(spec, i, beta_sum)
            raw = matsubara_sum_oracle(spec, i, beta_sum, m_bracket)
            gap = exact - raw
            bound = matsubara_tail_bound(spec, i, beta_sum, m_bracket)
            worst = max(worst, max(0.0, -gap, gap - bound) / exact)
        return worst

    def cold_err():
        return max(abs(instanton.action_finite_beta(spec, i, beta_cold) - instanton.action_zero_t(spec, i))
                   for i in hits)

    def eps_err():
        return max(_rel(rates.epsilon_finite(spec, i, beta_eps),
                        rates.epsilon_from_path(modes[i], spec, beta_eps)) for i in hits)

    def eps0_err():
        return max(_rel(rates.epsilon_finite(spec, i, 0.0),
                        4 * rates.arithmetic_frequency(spec, i) * instanton.harmonic_frequency(spec, i)[0])
                   for i in hits)

    def rate_err():
        factors = []
        for i in hits:
            tr = modes[i]
            w_h = tr.amplitude / (2 * a)
            # eigen-weights (v_k . e_i)^2 / weighted harmonic mean reproduce omega_A
            wk = (2 * tr.rates * tr.weights[i] / tr.amplitude)
            w_a = float(np.sum(wk * tr.rates))
            ratio = w_h / w0
            factors.append(ratio * math.sqrt(w_a / w0) * math.exp(-spec.bare_action * (ratio - 1)))
        return _rel(rates.rate_modification_exact(spec).ensemble_r, math.fsum(factors) / spec.n)

    def hot_err():
        high = rates.high_t_action(spec, beta_hot)
        static = [instanton.action_finite_beta(spec, i, beta_hot, m_max=0, tail=False) for i in hits]
        return _rel(high.actions, static)

    checks = [
        ("path_vs_normal_modes", path_err),
        ("amplitude_vs_normal_modes", amp_err),
        ("wall_condition", wall_err),
        ("velocity_jump", jump_err),
        ("zero_energy", energy_err),
        ("action_vs_quadrature", action_err),
        ("kinetic_vs_full_action", kinetic_err),
        ("matsubara_bracket", bracket_err),
        ("finite_beta_to_zero_t", cold_err),
        ("epsilon_closed_vs_path", eps_err),
        ("epsilon_zero_limit", eps0_err),
        ("rate_vs_normal_modes", rate_err),
        ("high_t_vs_static_mode", hot_err),
    ]
    return [_timed(name, fn, tol[name]) for name, fn in checks]
