import math

import numpy as np
import pytest

from conftest import random_pair
from latgcb import (INF, ConfigSpace, Coupling, DomainError, Measure, Volume, coupling_cost,
                    extend_coupling, hamming_w1, marginal, marton_bound, q_p, solve_ot,
                    wasserstein_p_hamming)
from latgcb.transport import q_inf_lp


def coin(a):
    return Measure(ConfigSpace(Volume([0]), 2), [1 - a, a])


def test_single_site_tv():
    mu, nu = coin(0.5), coin(0.2)
    for p in (1, 2, "3/2", INF):
        assert q_p(mu, nu, p).value_upper == pytest.approx(0.3, abs=1e-12)
    assert hamming_w1(mu, nu) == pytest.approx(0.3, abs=1e-15)


def test_product_example_q2():
    sp = ConfigSpace(Volume([0, 1]), 2)
    mu = Measure.product(sp, [[0.5, 0.5], [0.5, 0.5]])
    nu = Measure.product(sp, [[0.8, 0.2], [0.8, 0.2]])
    cert = q_p(mu, nu, 2)
    assert cert.value_upper == pytest.approx(0.3 * math.sqrt(2), abs=1e-9)
    assert cert.gap <= 1e-9
    # hand solution: 11 -> 01/10 (0.105 each), 01/10 -> 00 (0.195 each), all at distance 1
    assert wasserstein_p_hamming(mu, nu, 2) == pytest.approx(math.sqrt(0.6), abs=1e-9)


def test_identity_and_disjoint():
    sp = ConfigSpace(Volume([0, 1]), 2)
    mu = Measure.uniform(sp)
    assert q_p(mu, mu, 2).value_upper == 0.0
    d0 = Measure.dirac(sp, (0, 0))
    d1 = Measure.dirac(sp, (1, 1))
    assert q_p(d0, d1, 2).value_upper == pytest.approx(math.sqrt(2), abs=1e-12)
    assert q_p(d0, d1, INF).value_upper == pytest.approx(1.0, abs=1e-12)


def test_mismatched_spaces():
    with pytest.raises(DomainError):
        q_p(coin(0.5), Measure.uniform(ConfigSpace(Volume([0, 1]), 2)), 2)
    with pytest.raises(DomainError):
        q_p(coin(0.5), coin(0.2), "1/2")


@pytest.mark.parametrize("method", ["simplex", "emd", "highs"])
def test_solve_ot_methods_agree(method, rng):
    mu, nu = random_pair(rng, 2, 3, sparse=True)
    C = mu.space.hamming().astype(float)
    ref = solve_ot(mu, nu, C, "highs").value
    res = solve_ot(mu, nu, C, method)
    assert res.value == pytest.approx(ref, abs=1e-10)
    res.plan.check(mu, nu, 1e-9)
    assert np.all(res.u[:, None] + res.v[None, :] <= C + 1e-9)
    assert mu.probs @ res.u + nu.probs @ res.v == pytest.approx(res.value, abs=1e-9)


def test_certificate_structure(rng):
    for p in (2, "3/2", 5, INF):
        mu, nu = random_pair(rng, 3, 2)
        cert = q_p(mu, nu, p)
        cert.plan.check(mu, nu, 1e-9)
        assert cert.value_lower <= cert.value_upper
        assert cert.gap <= 1e-8
        assert coupling_cost(cert.plan, p) == pytest.approx(cert.value_upper, abs=1e-12)
        js = cert.to_json()
        assert set(js) == {"p", "value_upper", "value_lower", "gap", "alpha", "m"}


def test_q_inf_matches_full_lp(rng):
    for _ in range(20):
        mu, nu = random_pair(rng, 2, 3, sparse=True)
        assert q_p(mu, nu, INF).value_upper == pytest.approx(q_inf_lp(mu, nu), abs=1e-8)


def test_q_monotone_in_p(rng):
    mu, nu = random_pair(rng, 2, 3)
    vals = [q_p(mu, nu, p).value_upper for p in (1, "3/2", 2, 5, INF)]
    assert all(a >= b - 1e-8 for a, b in zip(vals, vals[1:]))


def test_coupling_constructors(rng):
    mu, nu = random_pair(rng, 2, 2)
    Coupling.product(mu, nu).check(mu, nu)
    d = Coupling.diagonal(mu)
    d.check(mu, mu)
    assert np.all(d.disagreement().values == 0)


def test_marton_bound_is_at_least_w1_squared_over_sites(rng):
    for _ in range(10):
        mu, nu = random_pair(rng, 2, 2)
        plan = q_p(mu, nu, 2).plan
        m = plan.disagreement().values
        assert marton_bound(mu, nu, plan) >= np.sum(m**2) - 1e-12


def test_extend_coupling(rng):
    big = ConfigSpace(Volume.interval(0, 3), 2)
    filler = Measure.normalized(big, rng.random(8))
    small = Volume([0, 1])
    mu, nu = marginal(filler, small), Measure.normalized(ConfigSpace(small, 2), rng.random(4))
    plan = q_p(mu, nu, 2).plan
    ext = extend_coupling(plan, big.volume, filler)
    m_small = plan.disagreement().values
    m_big = ext.disagreement().values
    assert np.allclose(m_big[:2], m_small)
    rest = marginal(filler, Volume([2])).probs
    assert m_big[2] == pytest.approx(1 - np.sum(rest**2), abs=1e-12)
    assert np.isclose(ext.mass.sum(), 1.0)
    with pytest.raises(DomainError):
        extend_coupling(plan, Volume([0]), filler)
