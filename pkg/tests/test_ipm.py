import numpy as np
import pytest

from conftest import random_pair
from latgcb import (INF, AlphaWeights, ConfigSpace, DomainError, Measure, Volume, d_p,
                    d_p_fixed_alpha, dep_bound_check, duality_gap, osc_norm, q_p, solve_ot)
from latgcb.exponents import conjugate


def coin(a):
    return Measure(ConfigSpace(Volume([0]), 2), [1 - a, a])


def test_single_site():
    for p in (1, 2, INF):
        cert = d_p(coin(0.5), coin(0.2), p)
        assert cert.value == pytest.approx(0.3, abs=1e-12)
        assert cert.gap <= 1e-12


def test_alpha_weights():
    with pytest.raises(DomainError):
        AlphaWeights(np.array([-0.1, 1.0]), 2)
    assert AlphaWeights(np.array([0.6, 0.8]), 2).in_ball()
    assert not AlphaWeights(np.array([1.0, 1.0]), 2).in_ball()


@pytest.mark.parametrize("p", [1, "3/2", 2, 5, INF])
def test_witness_is_admissible_and_attains_value(p, rng):
    mu, nu = random_pair(rng, 2, 3)
    cert = d_p(mu, nu, p)
    f = cert.witness.f
    q = conjugate(cert.p)
    assert osc_norm(f, q) <= 1 + 1e-9
    assert nu.expect(f) - mu.expect(f) == pytest.approx(cert.value, abs=1e-12)
    assert cert.alpha.in_ball(1e-9)


def test_fixed_alpha_equals_weighted_transport(rng):
    for _ in range(15):
        mu, nu = random_pair(rng, 3, 2)
        alpha = rng.random(2)
        D = mu.space.digits
        cost = ((D[:, None, :] != D[None, :, :]) * alpha).sum(-1)
        val, wit = d_p_fixed_alpha(mu, nu, alpha)
        assert val == pytest.approx(solve_ot(mu, nu, cost, "highs").value, abs=1e-9)
        assert np.all(wit.f.oscillations().values <= alpha + 1e-9)


def test_symmetry_and_identity(rng):
    mu, nu = random_pair(rng, 2, 2)
    for p in (2, INF):
        assert d_p(mu, nu, p).value == pytest.approx(d_p(nu, mu, p).value, abs=1e-8)
    assert d_p(mu, mu, 2).value == 0.0


def test_supergradient_method_brackets(rng):
    mu, nu = random_pair(rng, 2, 3)
    ref = q_p(mu, nu, 2).value_upper
    cert = d_p(mu, nu, 2, method="supergradient", max_iter=200)
    assert cert.value <= ref + 1e-9 <= cert.upper + 2e-9
    with pytest.raises(DomainError):
        d_p(mu, nu, 2, method="newton")


def test_duality_report_and_dep_bound(rng):
    mu, nu = random_pair(rng, 3, 2)
    rep = duality_gap(mu, nu, "3/2")
    assert rep.gap <= 1e-8
    assert set(rep.to_json()) == {"p", "gap", "transport", "ipm"}
    for p in (1, 2, INF):
        assert dep_bound_check(mu, nu, p)
