"""Signed constraint slacks of both stages.

Rate slacks are in bps/Hz (log2(1 + SINR) - C_min, slot factor excluded),
budget slacks are relative to the budget, coefficient slacks are raw. A
non-negative slack means the constraint holds.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelRealization
from .config import NetworkConfig
from .rates import PowerSolution, inter_rsu_interference, second_hop_terms, sinr_first_hop


def rate_margin(signal, disturbance, c_min):
    return np.log2(1.0 + signal / disturbance) - c_min


def stage1_slacks(ch: ChannelRealization, sol: PowerSolution, config: NetworkConfig) -> dict[str, np.ndarray]:
    gamma1, gamma2 = sinr_first_hop(ch, sol)
    used = sol.alpha.sum(axis=-1)
    return {
        "A8": np.log2(1.0 + gamma1) - config.c_min,
        "A9": np.log2(1.0 + gamma2) - config.c_min,
        "A10": (config.p_max_w - np.asarray(sol.p_bs_w) * used) / config.p_max_w,
        "A11": 1.0 - used,
        "alpha>=0": sol.alpha.min(axis=-1),
    }


def stage2_rsu_slacks(signal, disturbance, q, beta, xi, config: NetworkConfig, suffix: str) -> dict[str, np.ndarray]:
    margin = rate_margin(signal, disturbance, config.c_min)
    used = beta.sum(axis=-1)
    return {
        f"A12{suffix}": margin[..., 0],
        f"A13{suffix}": margin[..., 1],
        f"A14{suffix}": (config.q_max_w - q * used) / config.q_max_w,
        f"A15{suffix}": 1.0 - used,
        f"A16lo{suffix}": np.asarray(xi, dtype=float),
        f"A16hi{suffix}": 1.0 - xi,
        f"beta>=0{suffix}": beta.min(axis=-1),
    }


def stage2_slacks(ch: ChannelRealization, sol: PowerSolution, config: NetworkConfig,
                  interference=None) -> dict[str, np.ndarray]:
    """Slacks of A12-A16 for both RSUs.

    ``interference`` (shape (..., 2, 2), watts) freezes the inter-RSU terms;
    by default they follow from the solution's own radiated powers.
    """
    out: dict[str, np.ndarray] = {}
    for m in range(2):
        interf = inter_rsu_interference(ch, sol, m) if interference is None else interference[..., m, :]
        signal, disturbance = second_hop_terms(
            ch.g_rsu_veh[..., m, :], ch.g_backscatter[..., m, :], sol.q_rsu_w[..., m],
            sol.beta[..., m, :], sol.xi[..., m], ch.sigma_eps_sq, interf, ch.noise_w,
        )
        out.update(stage2_rsu_slacks(signal, disturbance, sol.q_rsu_w[..., m], sol.beta[..., m, :],
                                     sol.xi[..., m], config, f"_m{m + 1}"))
    return out


def worst(slacks: dict[str, np.ndarray]):
    """Elementwise minimum over all slacks."""
    return np.min(np.stack([np.asarray(v, dtype=float) for v in slacks.values()]), axis=0)
