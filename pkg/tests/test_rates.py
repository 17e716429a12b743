import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ambc_v2x.config import NetworkConfig
from ambc_v2x.rates import (
    PowerSolution, end_to_end_rates, energy_efficiency, icsi_interference, rate, sinr_first_hop,
    sinr_second_hop, total_power,
)
from conftest import make_channel


def solution(alpha=(0.3, 0.5), beta=((0.25, 0.25), (0.25, 0.25)), xi=(0.4, 0.6), p=10.0, q=(4.0, 4.0)):
    return PowerSolution(np.array(alpha, float), np.array(beta, float), np.array(xi, float), p, np.array(q, float))


def random_instance(rng, n):
    """Batch of random channels and solutions spanning several orders of magnitude."""
    from ambc_v2x.channel import ChannelRealization

    def lg(lo, hi, *shape):
        return 10 ** rng.uniform(lo, hi, size=(n, *shape))

    ch = ChannelRealization(lg(-9, -5, 2), lg(-9, -4, 2, 2), lg(-4, -1, 2, 2), lg(-4, -1, 2), lg(-11, -8, 2, 2),
                            float(10 ** rng.uniform(-8, -4)), 1e-14)
    beta = rng.dirichlet(np.ones(3), size=(n, 2))[..., :2]
    sol = PowerSolution(rng.dirichlet(np.ones(3), size=n)[:, :2], beta, rng.uniform(size=(n, 2)),
                        rng.uniform(1, 30, size=n), rng.uniform(0.5, 15, size=(n, 2)))
    return ch, sol


def test_first_hop_zero_power():
    ch = make_channel()
    g1, g2 = sinr_first_hop(ch, solution(alpha=(0, 0)))
    assert g1 == 0 and g2 == 0


def test_first_hop_unit_snr():
    ch = make_channel(g_bs=(1e-14 / 10.0, 1e-15))
    g1, _ = sinr_first_hop(ch, solution(alpha=(1.0, 0.0), p=10.0))
    assert g1 == pytest.approx(1.0, rel=1e-12)


def test_first_hop_hand_evaluated():
    ch = make_channel(g_bs=(1e-8, 5e-9), sigma_eps_sq=1e-6)
    g1, g2 = sinr_first_hop(ch, solution(alpha=(0.2, 0.8), p=10.0))
    # 1e-8*10*0.2 / (10*1e-6*1.0 + 1e-14)
    assert g1 == pytest.approx(2e-8 / (1e-5 + 1e-14), rel=1e-12)
    # 5e-9*10*0.8 / (5e-9*10*0.2 + 1e-5 + 1e-14)
    assert g2 == pytest.approx(4e-8 / (1e-8 + 1e-5 + 1e-14), rel=1e-12)


def test_second_hop_silent_rsu():
    ch = make_channel()
    sol = solution(beta=((0, 0), (0.2, 0.3)), xi=(0, 0.5))
    g1, g2 = sinr_second_hop(ch, sol, 0)
    assert g1 == 0 and g2 == 0


def test_second_hop_without_reflection_ignores_tags():
    sol = solution(xi=(0.0, 0.0))
    a = make_channel(g_tag=((1e-2, 2e-2), (3e-2, 1e-3)), g_rt=(1e-3, 5e-4), sigma_eps_sq=1e-8)
    b = make_channel(g_tag=((7.0, 0.1), (0.0, 9.0)), g_rt=(0.4, 0.0), sigma_eps_sq=1e-8)
    for m in range(2):
        assert sinr_second_hop(a, sol, m) == sinr_second_hop(b, sol, m)


def test_second_hop_and_rates_match_single_expression_oracle():
    rng = np.random.default_rng(3)
    ch, sol = random_instance(rng, 1000)
    e = ch.sigma_eps_sq
    for m in range(2):
        o = 1 - m
        q, b1, b2, x = sol.q_rsu_w[:, m], sol.beta[:, m, 0], sol.beta[:, m, 1], sol.xi[:, m]
        h1, h2 = ch.g_rsu_veh[:, m, 0], ch.g_rsu_veh[:, m, 1]
        hb1, hb2 = ch.g_tag_veh[:, m, 0] * ch.g_rsu_tag[:, m], ch.g_tag_veh[:, m, 1] * ch.g_rsu_tag[:, m]
        qo = sol.q_rsu_w[:, o] * (sol.beta[:, o, 0] + sol.beta[:, o, 1])
        i1, i2 = ch.g_cross[:, m, 0] * qo, ch.g_cross[:, m, 1] * qo
        want1 = q * b1 * (h1 + x * hb1) / (e * (q * (b1 + b2) + x) + i1 + ch.noise_w)
        want2 = q * b2 * (h2 + x * hb2) / (q * b1 * (h2 + x * hb2) + e * (q * (b1 + b2) + x) + i2 + ch.noise_w)
        got1, got2 = sinr_second_hop(ch, sol, m)
        np.testing.assert_allclose(got1, want1, rtol=1e-12)
        np.testing.assert_allclose(got2, want2, rtol=1e-12)

    p, a1, a2 = sol.p_bs_w, sol.alpha[:, 0], sol.alpha[:, 1]
    want_g1 = ch.g_bs_rsu[:, 0] * p * a1 / (p * e * (a1 + a2) + ch.noise_w)
    want_g2 = ch.g_bs_rsu[:, 1] * p * a2 / (ch.g_bs_rsu[:, 1] * p * a1 + p * e * (a1 + a2) + ch.noise_w)
    g1, g2 = sinr_first_hop(ch, sol)
    np.testing.assert_allclose(g1, want_g1, rtol=1e-12)
    np.testing.assert_allclose(g2, want_g2, rtol=1e-12)

    rep = end_to_end_rates(ch, sol)
    total = np.zeros(1000)
    for m in range(2):
        for i in range(2):
            total += 0.5 * np.minimum(rep.c_bs[:, m], rep.c_veh[:, m, i])
    np.testing.assert_allclose(rep.sum_rate, total, rtol=1e-12)
    np.testing.assert_allclose(icsi_interference(ch, sol),
                               e * (p * (a1 + a2) + (sol.q_rsu_w * sol.beta.sum(-1)).sum(-1) + sol.xi.sum(-1)),
                               rtol=1e-12)


@pytest.mark.parametrize("sinr, expected", [(0, 0.0), (1, 0.5), (3, 1.0)])
def test_rate_examples(sinr, expected):
    assert rate(sinr, 0.5) == expected


def test_e2e_min_then_halve():
    ch = make_channel(g_bs=(1e-3, 1e-3), g_veh=((1e-3, 1e-3), (1e-3, 1e-3)))
    rep = end_to_end_rates(ch, solution(alpha=(0.5, 0.5)))
    np.testing.assert_allclose(rep.e2e, 0.5 * np.minimum(rep.c_bs[:, None], rep.c_veh))
    assert 0.5 * min(2.0, 1.0) == 0.5


def test_all_powers_zero_give_zero_rate_and_power():
    ch = make_channel()
    sol = solution(alpha=(0, 0), beta=((0, 0), (0, 0)), xi=(0, 0))
    assert end_to_end_rates(ch, sol).sum_rate == 0
    assert total_power(sol) == 0
    assert energy_efficiency(end_to_end_rates(ch, sol), sol, NetworkConfig()) == 0


def test_total_power_example():
    assert total_power(solution()) == pytest.approx(12.0, rel=1e-15)


def test_energy_efficiency_unit_construction():
    from ambc_v2x.rates import RateReport

    cfg = NetworkConfig(bandwidth_hz=1e6, circuit_power_dbm=30.0)
    sol = solution(alpha=(0, 0), beta=((0, 0), (0, 0)))
    rep = RateReport(np.zeros(2), np.zeros((2, 2)), np.zeros((2, 2)), 1.0)
    assert energy_efficiency(rep, sol, cfg) == pytest.approx(1.0, rel=1e-12)


def test_energy_efficiency_decreases_in_circuit_power():
    ch = make_channel()
    sol = solution()
    rep = end_to_end_rates(ch, sol)
    ee = [energy_efficiency(rep, sol, NetworkConfig(circuit_power_dbm=c)) for c in (2, 5, 8, 11)]
    assert all(a > b for a, b in zip(ee, ee[1:]))
    assert NetworkConfig().circuit_power_w == pytest.approx(3.162e-3, rel=1e-3)


def test_icsi_zero_under_perfect_csi():
    ch = make_channel(sigma_eps_sq=0.0)
    for p in (5.0, 50.0):
        assert icsi_interference(ch, solution(p=p)) == 0.0


def test_icsi_scales_with_variance_and_power():
    sol = solution()
    lo = icsi_interference(make_channel(sigma_eps_sq=1e-10), sol)
    hi = icsi_interference(make_channel(sigma_eps_sq=1e-8), sol)
    assert hi / lo == pytest.approx(100.0, rel=1e-12)
    doubled = solution(p=20.0, q=(8.0, 8.0))
    assert icsi_interference(make_channel(sigma_eps_sq=1e-8), doubled) > hi


@settings(max_examples=60, deadline=None)
@given(a2=st.floats(0, 0.5), a1=st.floats(0, 0.5), d=st.floats(0, 0.5), eps=st.sampled_from([0.0, 1e-8, 1e-4]))
def test_first_hop_monotone_in_own_share(a1, a2, d, eps):
    ch = make_channel(sigma_eps_sq=eps)
    lo, _ = sinr_first_hop(ch, solution(alpha=(a1, a2)))
    hi, _ = sinr_first_hop(ch, solution(alpha=(a1 + d, a2)))
    assert hi >= lo * (1 - 1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_e2e_never_exceeds_either_hop(seed):
    ch, sol = random_instance(np.random.default_rng(seed), 8)
    rep = end_to_end_rates(ch, sol)
    assert np.all(rep.e2e <= rep.c_bs[..., :, None] + 1e-15)
    assert np.all(rep.e2e <= rep.c_veh + 1e-15)
    assert np.all(total_power(sol) >= 0)


def test_zero_variance_recovers_perfect_csi():
    sol = solution()
    ch = make_channel(sigma_eps_sq=0.0)
    g1, _ = sinr_first_hop(ch, sol)
    assert g1 == 3e-6 * 10 * 0.3 / 1e-14
    assert math.isfinite(float(g1))
