"""Scenario parameters and unit conversions."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

# Q_max defaults to half of P_max (symmetric split of the budget over the two RSUs).
HALF_DB = 10.0 * math.log10(2.0)


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending parameter."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def dbm_to_watt(level):
    """Convert dBm to watts. Works elementwise on arrays."""
    return 10.0 ** ((np.asarray(level, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(power):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power) + 30.0


@dataclass(frozen=True)
class NetworkConfig:
    """All knobs of one scenario. Powers are in dBm, everything else in SI units.

    ``q_max`` of ``None`` means "half of ``p_max``"; use :attr:`q_max_dbm` for
    the resolved value.
    """

    p_max: float = 45.0
    q_max: float | None = None
    sigma_eps: float = 1e-5
    c_min: float = 0.5
    pathloss_exp: float = 4.0
    noise_density_dbm: float = -170.0
    bandwidth_hz: float = 1e6
    circuit_power_dbm: float = 5.0
    bs_radius_m: float = 50.0
    rsu_radius_m: float = 20.0
    n_realizations: int = 1000
    seed: int = 2022
    step_size_initial: float = 0.5
    step_decay_iters: float = 1000.0
    max_iterations: int = 10000
    convergence_tol: float = 1e-5
    infeasible_window: int = 500

    def __post_init__(self):
        for name in ("p_max", "noise_density_dbm", "circuit_power_dbm", "pathloss_exp"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(name, "must be finite")
        if self.q_max is not None and not math.isfinite(self.q_max):
            raise ConfigError("q_max", "must be finite")
        positive = ("bandwidth_hz", "bs_radius_m", "rsu_radius_m", "c_min",
                    "convergence_tol", "step_size_initial", "step_decay_iters")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(name, f"must be > 0, got {value!r}")
        if not (math.isfinite(self.sigma_eps) and self.sigma_eps >= 0):
            raise ConfigError("sigma_eps", f"must be >= 0, got {self.sigma_eps!r}")
        for name in ("n_realizations", "max_iterations", "infeasible_window"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(name, f"must be a positive integer, got {value!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise ConfigError("seed", "must be an integer in [0, 2**64)")

    @property
    def q_max_dbm(self) -> float:
        return self.p_max - HALF_DB if self.q_max is None else self.q_max

    @property
    def p_max_w(self) -> float:
        return dbm_to_watt(self.p_max)

    @property
    def q_max_w(self) -> float:
        return dbm_to_watt(self.q_max_dbm)

    @property
    def circuit_power_w(self) -> float:
        return dbm_to_watt(self.circuit_power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watt(self.noise_density_dbm) * self.bandwidth_hz

    @property
    def rate_threshold(self) -> float:
        """SINR threshold 2**c_min - 1 shared by every rate constraint."""
        return 2.0 ** self.c_min - 1.0

    def replace(self, **changes: Any) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


FIELD_TYPES: dict[str, type] = {
    f.name: (int if f.name in ("n_realizations", "seed", "max_iterations", "infeasible_window") else float)
    for f in dataclasses.fields(NetworkConfig)
}


def coerce_field(name: str, text: str) -> Any:
    """Parse a textual value for ``name``; raises ConfigError on bad input."""
    if name not in FIELD_TYPES:
        raise KeyError(name)
    if name == "q_max" and text.strip().lower() in ("", "none", "auto"):
        return None
    try:
        if FIELD_TYPES[name] is int:
            try:
                return int(text)
            except ValueError:
                value = float(text)
                if not value.is_integer():
                    raise
                return int(value)
        return float(text)
    except ValueError:
        raise ConfigError(name, f"cannot parse {text!r}") from None
