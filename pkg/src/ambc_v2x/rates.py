"""SINR, rate, power and energy-efficiency formulas for both hops.

All functions broadcast over a leading batch axis of the channel and solution.
Rates are spectral efficiencies in bps/Hz; the bandwidth only enters
:func:`energy_efficiency`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .config import NetworkConfig

SLOT = 0.5


@dataclass(frozen=True)
class PowerSolution:
    """Primal variables of both stages plus the powers they scale.

    ``beta[..., m, i]`` is the share of RSU ``m``'s power given to vehicle ``i``.
    """

    alpha: np.ndarray  # (..., 2)
    beta: np.ndarray  # (..., 2, 2)
    xi: np.ndarray  # (..., 2)
    p_bs_w: np.ndarray | float
    q_rsu_w: np.ndarray  # (..., 2)

    @property
    def bs_power_w(self):
        """Radiated BS power P(alpha_1 + alpha_2)."""
        return self.p_bs_w * self.alpha.sum(axis=-1)

    @property
    def rsu_power_w(self):
        """Radiated power of each RSU, Q_m(beta_{1,m} + beta_{2,m})."""
        return self.q_rsu_w * self.beta.sum(axis=-1)

    def __getitem__(self, index) -> "PowerSolution":
        p = self.p_bs_w[index] if np.ndim(self.p_bs_w) else self.p_bs_w
        return PowerSolution(self.alpha[index], self.beta[index], self.xi[index], p, self.q_rsu_w[index])


@dataclass(frozen=True)
class RateReport:
    c_bs: np.ndarray  # (..., 2) first-hop rates C_m
    c_veh: np.ndarray  # (..., 2, 2) second-hop rates C_{i,m}
    e2e: np.ndarray  # (..., 2, 2)
    sum_rate: np.ndarray | float
    t1: float = SLOT
    t2: float = SLOT

    @property
    def c1(self):
        return self.c_bs[..., 0]

    @property
    def c2(self):
        return self.c_bs[..., 1]


def sinr_first_hop(ch: ChannelRealization, sol: PowerSolution):
    """(gamma_1, gamma_2) at the two RSUs; RSU 0 removes RSU 1's signal by SIC."""
    p = np.asarray(sol.p_bs_w)
    a1, a2 = sol.alpha[..., 0], sol.alpha[..., 1]
    g1, g2 = ch.g_bs_rsu[..., 0], ch.g_bs_rsu[..., 1]
    csi = p * ch.sigma_eps_sq * (a1 + a2)
    gamma1 = g1 * p * a1 / (csi + ch.noise_w)
    gamma2 = g2 * p * a2 / (g2 * p * a1 + csi + ch.noise_w)
    return gamma1, gamma2


def inter_rsu_interference(ch: ChannelRealization, sol: PowerSolution, m: int):
    """Interference at both vehicles of RSU ``m`` from the other RSU's radiated power."""
    other = 1 - m
    return ch.g_cross[..., m, :] * sol.rsu_power_w[..., other, None]


def second_hop_terms(g_direct, g_bs, q, beta, xi, sigma_eps_sq, interference, noise_w):
    """Useful power and interference-plus-noise at the two vehicles of one RSU.

    ``g_direct``/``g_bs``/``beta``/``interference`` carry the vehicle index on
    their last axis. Shared by the rate model, the solver and the oracle.
    """
    b1, b2 = beta[..., 0], beta[..., 1]
    eff1 = g_direct[..., 0] + xi * g_bs[..., 0]
    eff2 = g_direct[..., 1] + xi * g_bs[..., 1]
    csi = sigma_eps_sq * (q * (b1 + b2) + xi)
    noma = q * b1 * eff2
    signal = np.stack([q * b1 * eff1, q * b2 * eff2], axis=-1)
    disturbance = np.stack([csi + interference[..., 0] + noise_w,
                            noma + csi + interference[..., 1] + noise_w], axis=-1)
    return signal, disturbance


def sinr_second_hop(ch: ChannelRealization, sol: PowerSolution, m: int):
    """(gamma_{1,m}, gamma_{2,m}); the tag's reflection adds to both useful terms."""
    signal, disturbance = second_hop_terms(
        ch.g_rsu_veh[..., m, :], ch.g_backscatter[..., m, :], sol.q_rsu_w[..., m],
        sol.beta[..., m, :], sol.xi[..., m], ch.sigma_eps_sq,
        inter_rsu_interference(ch, sol, m), ch.noise_w,
    )
    gamma = signal / disturbance
    return gamma[..., 0], gamma[..., 1]


def rate(sinr, slot: float = SLOT):
    """slot * log2(1 + sinr) in bps/Hz."""
    return slot * np.log2(1.0 + np.asarray(sinr))


def end_to_end_rates(ch: ChannelRealization, sol: PowerSolution) -> RateReport:
    c_bs = rate(np.stack(sinr_first_hop(ch, sol), axis=-1))
    c_veh = np.stack([rate(np.stack(sinr_second_hop(ch, sol, m), axis=-1)) for m in range(2)], axis=-2)
    e2e = 0.5 * np.minimum(c_bs[..., :, None], c_veh)
    return RateReport(c_bs=c_bs, c_veh=c_veh, e2e=e2e, sum_rate=e2e.sum(axis=(-2, -1)))


def total_power(sol: PowerSolution):
    """Radiated power of the BS and both RSUs, in watts."""
    return sol.bs_power_w + sol.rsu_power_w.sum(axis=-1)


def energy_efficiency(report: RateReport, sol: PowerSolution, config: NetworkConfig):
    """Delivered throughput over consumed power, in Mb/J."""
    consumed = total_power(sol) + config.circuit_power_w
    if np.any(consumed <= 0):
        raise ValueError("total power consumption must be positive")
    return report.sum_rate * config.bandwidth_hz / consumed / 1e6


def icsi_interference(ch: ChannelRealization, sol: PowerSolution):
    """Sum of every sigma_eps^2-weighted disturbance term over both hops, in watts."""
    e = ch.sigma_eps_sq
    hop1 = np.asarray(sol.p_bs_w) * e * sol.alpha.sum(axis=-1)
    hop2 = e * (sol.rsu_power_w + sol.xi).sum(axis=-1)
    return hop1 + hop2
