import math

import numpy as np
import pytest

import polaritunnel.instanton as instanton
import polaritunnel.rates as rates
from polaritunnel import (GridTooCoarse, InvalidParameter, SystemSpec, UnstableDraw,
                          action_finite_beta, action_zero_t, coupling_moments, harmonic_frequency,
                          instanton_path, matsubara_sum_oracle, monte_carlo_ensemble,
                          normal_mode_path_oracle, numeric_action_oracle,
                          rate_modification_cumulant, run_verification)
from polaritunnel.oracles import (TOLERANCES, CouplingEnsemble, graded_grid, matsubara_action_oracle,
                                  matsubara_tail_bound)
from polaritunnel.presets import VERIFY_PRESETS, preset_system
from polaritunnel.rates import ensemble_rate

from conftest import random_specs


def test_normal_mode_oracle_bare(uncoupled):
    tau = np.linspace(-5, 5, 101)
    tr = normal_mode_path_oracle(uncoupled, 1, tau)
    np.testing.assert_allclose(tr.values[:, 1], 2.0 * np.exp(-np.abs(tau)), rtol=1e-14)
    np.testing.assert_allclose(np.delete(tr.values, 1, axis=1), 0.0, atol=1e-15)


@pytest.mark.parametrize("spec", random_specs(10, seed=21))
def test_normal_mode_amplitude_is_harmonic_frequency(spec):
    for i in range(1, spec.n + 1):
        tr = normal_mode_path_oracle(spec, i, np.array([0.0]))
        assert tr.amplitude == pytest.approx(2 * spec.wall_a * harmonic_frequency(spec, i)[0],
                                             rel=1e-10)


@pytest.mark.parametrize("spec", random_specs(10, seed=22))
def test_normal_mode_vs_closed_form_random(spec):
    tau = np.linspace(-20, 20, 161)
    ours = instanton_path(spec, 1, tau).values
    oracle = normal_mode_path_oracle(spec, 1, tau).values
    assert np.max(np.abs(ours - oracle)) < 1e-10 * spec.wall_a


def test_matsubara_uncoupled_beta20(uncoupled):
    m_max = 10**6
    raw = matsubara_action_oracle(uncoupled, 1, 20.0, m_max)
    exact = 4.0 * math.tanh(10.0)
    # the raw sum misses beta w0 / (pi^2 M) ~ 2e-6 of the total at M = 10^6
    assert raw == pytest.approx(exact, rel=3e-6)
    assert abs(raw / exact - 1) == pytest.approx(20.0 / (math.pi**2 * m_max), rel=1e-3)
    # to reach 1e-8 the brute force needs M ~ beta w0 / (pi^2 1e-8)
    assert matsubara_action_oracle(uncoupled, 1, 20.0, 250_000_000) == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("spec", random_specs(4, seed=23))
def test_matsubara_oracle_vs_accelerated(spec):
    beta = 1.0
    m = 20_000_000
    raw = matsubara_action_oracle(spec, 1, beta, m)
    assert raw == pytest.approx(action_finite_beta(spec, 1, beta), rel=1e-8)


@pytest.mark.parametrize("spec", random_specs(4, seed=24))
def test_matsubara_bracket(spec):
    beta = 3.0
    m = 2000
    raw = matsubara_sum_oracle(spec, 1, beta, m)
    accelerated = instanton.matsubara_sum(spec, 1, beta)
    assert 0 <= accelerated - raw <= matsubara_tail_bound(spec, 1, beta, m)


def test_numeric_action_bare(uncoupled):
    tr = instanton_path(uncoupled, 1, graded_grid(uncoupled))
    assert numeric_action_oracle(tr, uncoupled) == pytest.approx(uncoupled.bare_action, rel=1e-10)


@pytest.mark.parametrize("spec", random_specs(5, seed=25))
def test_numeric_action_random(spec):
    tr = instanton_path(spec, 1, graded_grid(spec))
    full = numeric_action_oracle(tr, spec)
    kinetic = numeric_action_oracle(tr, spec, kinetic_only=True)
    assert full == pytest.approx(action_zero_t(spec, 1), rel=1e-8)
    assert kinetic == pytest.approx(full, rel=1e-8)


def test_numeric_action_coarse_grid(fig3):
    tr = instanton_path(fig3, 1, np.linspace(-40, 40, 41))
    with pytest.raises(GridTooCoarse):
        numeric_action_oracle(tr, fig3)


# Monte Carlo

def template(n):
    return SystemSpec.from_g2(1.0, 1.0, 1.0, [0.0] * n).with_bare_action(4.0)


def test_mc_degenerate_is_exact():
    n, g2 = 50, 0.25 / 50
    ens = CouplingEnsemble("uniform", (g2, g2), n, seed=1)
    res = monte_carlo_ensemble(ens, template(n), 4.0, 20)
    assert res.stderr == 0.0
    exact = ensemble_rate(SystemSpec.from_g2(1.0, 1.0, 1.0, [g2] * n), 4.0, "rwa")
    assert res.mean == exact


def test_mc_deterministic():
    ens = CouplingEnsemble("gaussian", (0.001, 0.0005), 100, seed=99)
    a = monte_carlo_ensemble(ens, template(100), 4.0, 200)
    b = monte_carlo_ensemble(ens, template(100), 4.0, 200)
    assert a.mean == b.mean and a.stderr == b.stderr
    assert a.values.tobytes() == b.values.tobytes()
    other = monte_carlo_ensemble(CouplingEnsemble("gaussian", (0.001, 0.0005), 100, seed=7),
                                 template(100), 4.0, 200)
    assert other.mean != a.mean


def test_mc_streams_do_not_depend_on_order():
    ens = CouplingEnsemble("uniform", (0.0005, 0.0015), 100, seed=3)
    full = monte_carlo_ensemble(ens, template(100), 4.0, 30)
    first = monte_carlo_ensemble(ens, template(100), 4.0, 10)
    np.testing.assert_array_equal(full.values[:10], first.values)


def test_mc_vs_cumulant():
    n = 200
    mean_g2 = 0.25 / n
    ens = CouplingEnsemble("uniform", (0.5 * mean_g2, 1.5 * mean_g2), n, seed=2024)
    res = monte_carlo_ensemble(ens, template(n), 4.0, 2000)
    mu, var = ens.population_moments()
    cu = rate_modification_cumulant(
        coupling_moments(template(n)).__class__(0.0, 0.0, mu, var), template(n), 4.0)
    assert abs(res.mean - cu.r) < 3 * res.stderr


def test_mc_stderr_scaling():
    ens = CouplingEnsemble("uniform", (0.0005, 0.0015), 100, seed=11)
    small = monte_carlo_ensemble(ens, template(100), 4.0, 100)
    large = monte_carlo_ensemble(ens, template(100), 4.0, 10_000)
    assert small.stderr / large.stderr == pytest.approx(10.0, rel=0.2)


def test_mc_rejections_counted():
    # four or more large couplings in a draw put N<g^2> past the stability edge
    ens = CouplingEnsemble("twoPoint", (0.001, 0.25, 0.97), 100, seed=5)
    res = monte_carlo_ensemble(ens, template(100), 4.0, 50)
    assert res.rejected > 0
    assert np.all(np.isfinite(res.values))


def test_mc_rejection_cap():
    ens = CouplingEnsemble("uniform", (0.02, 0.03), 100, seed=5)
    with pytest.raises(UnstableDraw):
        monte_carlo_ensemble(ens, template(100), 4.0, 5)


def test_ensemble_validation():
    with pytest.raises(InvalidParameter):
        CouplingEnsemble("lognormal", (1.0, 2.0), 3)
    with pytest.raises(InvalidParameter):
        CouplingEnsemble("explicit", (1.0, 2.0), 3)
    with pytest.raises(InvalidParameter):
        CouplingEnsemble("twoPoint", (1.0, 2.0), 3)
    with pytest.raises(InvalidParameter):
        CouplingEnsemble.from_dict({"kind": "uniform", "lo": 0.1})
    ens = CouplingEnsemble.from_dict({"kind": "twoPoint", "v1": 0.1, "v2": 0.3, "p": 0.25,
                                      "count": 4, "seed": 9})
    assert ens.population_moments() == pytest.approx((0.25, 0.25 * 0.75 * 0.04))
    assert ens.seed == 9


# verification battery

@pytest.mark.parametrize("name", VERIFY_PRESETS)
def test_verification_passes(name):
    reports = run_verification(preset_system(name))
    assert {r.check_name for r in reports} == set(TOLERANCES)
    for r in reports:
        assert r.passed == (r.max_error <= r.tolerance)
        assert r.passed, r


def test_verification_uncoupled_is_tight():
    for r in run_verification(preset_system("uncoupled")):
        assert r.max_error < 1e-12, r


def test_verification_zero_tolerance_fails():
    reports = run_verification(preset_system("fig3"), tolerance=0.0)
    assert not all(r.passed for r in reports)


def test_verification_canary(monkeypatch, fig3):
    original = instanton.harmonic_frequency

    def corrupted(spec, i=1, mode="exact"):
        omega_h, amp = original(spec, i, mode)
        return 1.01 * omega_h, amp

    monkeypatch.setattr(instanton, "harmonic_frequency", corrupted)
    monkeypatch.setattr(rates, "harmonic_frequency", corrupted)
    failed = {r.check_name for r in run_verification(fig3) if not r.passed}
    assert "action_vs_quadrature" in failed
    assert "epsilon_closed_vs_path" in failed


def test_report_json_keys(fig3):
    d = run_verification(fig3)[0].to_dict()
    assert set(d) == {"checkName", "maxError", "tolerance", "pass", "runtime"}
