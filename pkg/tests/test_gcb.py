import math

import numpy as np
import pytest

from latgcb import (INF, ConfigSpace, DomainError, LocalFunction, Measure, ProcessSpec, Volume,
                    realize)
from latgcb.gcb import (brute_pressure, characterization_check, edi_check, etuve_check,
                        finite_pressure, function_suite, gcb_check, mcdiarmid_suite,
                        optimal_constant, pressure, range_suite, sample_nu, stationary_mean,
                        thermo_gcb_check, transfer_matrix)


def fair(n):
    return realize(ProcessSpec.bernoulli(0.5), Volume.interval(0, n))


def test_gcb_check_single_site_spot_value():
    mu = Measure.uniform(ConfigSpace.spins(Volume([0])))
    f = LocalFunction.from_callable(mu.space, lambda s: s[0])
    rep = gcb_check(mu, 0.25, 2, [f])
    _, lhs, rhs = rep.rows[0]
    assert lhs == pytest.approx(math.log(math.cosh(1)), abs=1e-15)
    assert rhs == pytest.approx(0.5, abs=1e-15)
    assert rep.passed
    with pytest.raises(DomainError):
        gcb_check(mu, 0.0, 2, [f])
    with pytest.raises(DomainError):
        gcb_check(mu, 0.25, 2, [])


def test_gcb_mcdiarmid_holds_for_products(rng):
    for n in (1, 2, 3, 4):
        mu = fair(n)
        suite = mcdiarmid_suite(mu.space, rng, 30)
        rep = gcb_check(mu, 0.25, 2, suite)
        assert rep.passed and rep.max_ratio <= 0.25 + 1e-12


def test_gcb_scaling_to_sup_norm(rng):
    # ||delta f||_2^2 <= |Lambda| ||delta f||_inf^2, so C|Lambda| works at q = inf
    mu = fair(3)
    suite = function_suite(mu.space, rng, 30)
    assert gcb_check(mu, 0.25, 2, suite).passed
    assert gcb_check(mu, 0.25 * 3, INF, suite).passed


def test_gcb_small_constant_fails():
    mu = fair(2)
    f = LocalFunction(mu.space, 0.01 * mu.space.values.sum(axis=1))
    assert not gcb_check(mu, 0.1, 2, [f]).passed


def test_optimal_constant_single_coin():
    oc = optimal_constant(Measure.uniform(ConfigSpace(Volume([0]), 2)))
    assert 0.2499 - 1e-3 <= oc.C_lower <= 0.25
    assert oc.variance_limit <= 0.25 + 1e-12
    assert optimal_constant(Measure.dirac(ConfigSpace(Volume([0]), 2), 0)).C_lower == 0.0


def test_sample_nu_kinds(rng):
    mu = fair(2)
    for kind in ("dirichlet", "sparse", "tilt"):
        nu = sample_nu(mu, rng, kind)
        assert nu.space == mu.space and abs(nu.probs.sum() - 1) < 1e-12
    with pytest.raises(DomainError):
        sample_nu(mu, rng, "gaussian")


def test_edi_pass_and_violation():
    mu = fair(2)
    assert edi_check(mu, 0.25, 2, trials=60, seed=1).passed
    oc = optimal_constant(mu)
    rep = edi_check(mu, 0.1, 2, trials=60, seed=1, directions=(oc.witness,))
    assert rep.violations
    js = rep.to_json()
    assert js["violations"] == len(rep.violations) and not js["passed"]


def test_characterization_agrees_with_gcb():
    out = characterization_check(ProcessSpec.bernoulli(0.5), 0.25,
                                 [Volume.interval(0, n) for n in (1, 2)], trials=40)
    for res in out.values():
        assert res["transport"].passed and res["gcb"].passed


def test_etuve_product_only(rng):
    assert etuve_check(fair(2), trials=40).passed
    sp = ConfigSpace(Volume([0, 1]), 2)
    with pytest.raises(DomainError):
        etuve_check(Measure(sp, [0.4, 0.1, 0.1, 0.4]))


def test_pressure_iid_single_site():
    spec = ProcessSpec.bernoulli(0.5)
    f = LocalFunction.from_callable(ConfigSpace(Volume([0]), 2, (-1, 1)), lambda s: s[0])
    assert pressure(spec, f).value == pytest.approx(math.log(math.cosh(1)), abs=1e-12)
    assert finite_pressure(spec, f, 7) == pytest.approx(math.log(math.cosh(1)), abs=1e-12)


def test_pressure_markov_single_site_is_log_spectral_radius():
    P = np.array([[0.9, 0.1], [0.3, 0.7]])
    spec = ProcessSpec.markov(P)
    f = LocalFunction(ConfigSpace(Volume([0]), 2), np.array([0.2, -0.7]))
    rho = max(abs(np.linalg.eigvals(P * np.exp(f.values)[None, :])))
    pv = pressure(spec, f)
    assert pv.value == pytest.approx(math.log(rho), abs=1e-12)
    assert pv.lower <= pv.value <= pv.upper


def test_finite_pressure_matches_enumeration(rng):
    spec = ProcessSpec.markov([[0.8, 0.2], [0.4, 0.6]])
    for r in (1, 2, 3):
        f = LocalFunction(ConfigSpace(Volume.interval(0, r), 2), rng.normal(size=2**r))
        for n in (1, 4, 6):
            assert finite_pressure(spec, f, n) == pytest.approx(brute_pressure(spec, f, n), abs=1e-12)
        T = transfer_matrix(spec, f)
        assert T.shape == (2**r, 2**r) and np.all(T >= 0)
        # finite-n values converge to the transfer-operator value
        assert abs(finite_pressure(spec, f, 200) - pressure(spec, f).value) < 0.05


def test_thermo_gcb_fair_coin(rng):
    spec = ProcessSpec.bernoulli(0.5)
    suite = range_suite(spec, rng, 12)
    rep = thermo_gcb_check(spec, 0.25, suite)
    assert rep.passed
    for k, lhs, rhs, env in rep.rows:
        assert lhs >= -1e-12
    f = suite[0]
    assert stationary_mean(spec, f) == pytest.approx(f.values.mean(), abs=1e-12)


def test_pressure_rejects_ising():
    f = LocalFunction.constant(ConfigSpace.spins(Volume([0])))
    with pytest.raises(DomainError):
        pressure(ProcessSpec.ising(0.1), f)
