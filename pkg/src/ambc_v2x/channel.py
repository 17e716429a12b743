"""Geometry, Rayleigh fading and imperfect-CSI channel realizations.

Index conventions used throughout the package (0-based):

* ``m`` -- RSU index; RSU 0 is the stronger BS->RSU link after relabeling.
* ``i`` -- vehicle index within an RSU; vehicle 0 is the stronger one.

Every gain is a *power* gain (|h|^2). A single realization has fields of
shape ``(2,)`` / ``(2, 2)``; :func:`stack_realizations` adds a leading batch
axis and every function in :mod:`ambc_v2x.rates` accepts either form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import NetworkConfig

MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class Placement:
    """Node coordinates in meters; the BS sits at the origin."""

    rsu: np.ndarray  # (2, 2): [m, xy]
    vehicles: np.ndarray  # (2, 2, 2): [m, i, xy]
    tags: np.ndarray  # (2, 2): [m, xy]

    def distances(self) -> dict[str, np.ndarray]:
        """All link distances that enter a path gain."""
        other = self.rsu[::-1]
        return {
            "bs_rsu": np.linalg.norm(self.rsu, axis=-1),
            "rsu_veh": np.linalg.norm(self.vehicles - self.rsu[:, None, :], axis=-1),
            "tag_veh": np.linalg.norm(self.vehicles - self.tags[:, None, :], axis=-1),
            "rsu_tag": np.linalg.norm(self.tags - self.rsu, axis=-1),
            "cross": np.linalg.norm(self.vehicles - other[:, None, :], axis=-1),
        }


@dataclass(frozen=True)
class ChannelRealization:
    """Estimated channel power gains of both hops plus the CSI error variance.

    ``g_cross[m, i]`` is the gain from the *other* RSU to vehicle ``i`` of RSU ``m``.
    """

    g_bs_rsu: np.ndarray
    g_rsu_veh: np.ndarray
    g_tag_veh: np.ndarray
    g_rsu_tag: np.ndarray
    g_cross: np.ndarray
    sigma_eps_sq: float
    noise_w: float

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.g_bs_rsu.shape[:-1]

    @property
    def g_backscatter(self) -> np.ndarray:
        """Cascaded RSU->tag->vehicle gain |h^b_{i,m}|^2 |h_{b,m}|^2, shape (..., 2, 2)."""
        return self.g_tag_veh * self.g_rsu_tag[..., :, None]

    def __getitem__(self, index) -> "ChannelRealization":
        if not self.batch_shape:
            raise TypeError("single realization is not indexable")
        return ChannelRealization(
            self.g_bs_rsu[index], self.g_rsu_veh[index], self.g_tag_veh[index],
            self.g_rsu_tag[index], self.g_cross[index],
            self.sigma_eps_sq, self.noise_w,
        )

    def __len__(self) -> int:
        if not self.batch_shape:
            raise TypeError("single realization has no length")
        return self.batch_shape[0]

    def with_gains(self, **changes) -> "ChannelRealization":
        fields = {
            "g_bs_rsu": self.g_bs_rsu, "g_rsu_veh": self.g_rsu_veh,
            "g_tag_veh": self.g_tag_veh, "g_rsu_tag": self.g_rsu_tag,
            "g_cross": self.g_cross, "sigma_eps_sq": self.sigma_eps_sq,
            "noise_w": self.noise_w,
        }
        fields.update(changes)
        return ChannelRealization(**fields)


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for realization ``index``; order-free, so parallel runs
    reproduce the serial sequence."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _uniform_in_disk(rng: np.random.Generator, radius: float, size=()) -> np.ndarray:
    r = radius * np.sqrt(rng.random(size))
    theta = 2.0 * np.pi * rng.random(size)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def sample_placement(config: NetworkConfig, rng: np.random.Generator) -> Placement:
    """Uniform RSUs in the BS disk, uniform vehicles and tags in each RSU disk.

    Positions violating the 1 m minimum link distance are redrawn.
    """
    for name in ("bs_radius_m", "rsu_radius_m"):
        radius = getattr(config, name)
        if not radius > MIN_DISTANCE_M:
            raise ValueError(f"{name} must exceed the {MIN_DISTANCE_M} m minimum link distance")

    rsu = np.empty((2, 2))
    for m in range(2):
        while True:
            p = _uniform_in_disk(rng, config.bs_radius_m)
            if np.hypot(*p) >= MIN_DISTANCE_M:
                rsu[m] = p
                break

    tags = np.empty((2, 2))
    vehicles = np.empty((2, 2, 2))
    for m in range(2):
        while True:
            p = rsu[m] + _uniform_in_disk(rng, config.rsu_radius_m)
            if np.hypot(*(p - rsu[m])) >= MIN_DISTANCE_M:
                tags[m] = p
                break
        for i in range(2):
            while True:
                p = rsu[m] + _uniform_in_disk(rng, config.rsu_radius_m)
                d = (np.hypot(*(p - rsu[m])), np.hypot(*(p - tags[m])), np.hypot(*(p - rsu[1 - m])))
                if min(d) >= MIN_DISTANCE_M:
                    vehicles[m, i] = p
                    break
    return Placement(rsu=rsu, vehicles=vehicles, tags=tags)


def draw_fading(rng: np.random.Generator, size=()) -> np.ndarray:
    """|H|^2 for unit-variance Rayleigh H, i.e. exponential(1) draws."""
    return rng.exponential(1.0, size)


def path_gain(fading_power, distance_m, zeta):
    """Power gain ``fading_power * distance_m ** -zeta``."""
    distance_m = np.asarray(distance_m, dtype=float)
    if np.any(distance_m < MIN_DISTANCE_M):
        raise ValueError(f"distance below {MIN_DISTANCE_M} m")
    if np.any(np.asarray(fading_power) < 0):
        raise ValueError("fading power must be non-negative")
    return fading_power * distance_m ** (-zeta)


def split_csi(gain, sigma_eps: float):
    """MMSE decomposition h = h_hat + eps with a constant error variance.

    The drawn gain is kept as the estimate |h_hat|^2; the error only ever
    enters the SINRs through its variance, returned alongside. With
    ``sigma_eps == 0`` the estimate is the channel itself.
    """
    if sigma_eps < 0:
        raise ValueError("sigma_eps must be >= 0")
    return gain, float(sigma_eps) ** 2


def sample_csi_error(sigma_eps: float, size, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean circularly-symmetric complex error samples with variance sigma_eps^2."""
    scale = sigma_eps / np.sqrt(2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def _enforce_ordering(g_bs_rsu, g_rsu_veh, g_tag_veh, g_rsu_tag, g_cross):
    if g_bs_rsu[1] > g_bs_rsu[0]:
        flip = [1, 0]
        g_bs_rsu, g_rsu_tag = g_bs_rsu[flip], g_rsu_tag[flip]
        g_rsu_veh, g_tag_veh, g_cross = g_rsu_veh[flip], g_tag_veh[flip], g_cross[flip]
    g_rsu_veh, g_tag_veh, g_cross = g_rsu_veh.copy(), g_tag_veh.copy(), g_cross.copy()
    for m in range(2):
        if g_rsu_veh[m, 1] > g_rsu_veh[m, 0]:
            for arr in (g_rsu_veh, g_tag_veh, g_cross):
                arr[m] = arr[m, ::-1]
    return g_bs_rsu, g_rsu_veh, g_tag_veh, g_rsu_tag, g_cross


def generate_realization(config: NetworkConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw one placement plus independent Rayleigh fading on every link."""
    placement = sample_placement(config, rng)
    dist = placement.distances()
    zeta = config.pathloss_exp
    gains = {}
    for name in ("bs_rsu", "rsu_veh", "tag_veh", "rsu_tag", "cross"):
        fading = draw_fading(rng, dist[name].shape)
        gains[name], sigma_eps_sq = split_csi(path_gain(fading, dist[name], zeta), config.sigma_eps)
    ordered = _enforce_ordering(gains["bs_rsu"], gains["rsu_veh"], gains["tag_veh"],
                                gains["rsu_tag"], gains["cross"])
    return ChannelRealization(*ordered, sigma_eps_sq=sigma_eps_sq, noise_w=float(config.noise_w))


def stack_realizations(realizations: Sequence[ChannelRealization]) -> ChannelRealization:
    """Stack single realizations into one batch (leading axis)."""
    first = realizations[0]
    for ch in realizations:
        if ch.sigma_eps_sq != first.sigma_eps_sq or ch.noise_w != first.noise_w:
            raise ValueError("cannot stack realizations with different sigma_eps or noise")
    return ChannelRealization(
        np.stack([c.g_bs_rsu for c in realizations]),
        np.stack([c.g_rsu_veh for c in realizations]),
        np.stack([c.g_tag_veh for c in realizations]),
        np.stack([c.g_rsu_tag for c in realizations]),
        np.stack([c.g_cross for c in realizations]),
        first.sigma_eps_sq, first.noise_w,
    )


def generate_batch(config: NetworkConfig, n: int | None = None, start: int = 0) -> ChannelRealization:
    """Realizations ``start .. start+n-1`` drawn from ``config.seed``."""
    n = config.n_realizations if n is None else n
    return stack_realizations(
        [generate_realization(config, realization_rng(config.seed, k)) for k in range(start, start + n)]
    )
