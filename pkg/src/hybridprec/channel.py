"""Clustered wideband geometric channel generation for multiuser MIMO.

Channels are frequency-domain matrices, one per (subcarrier, user) pair,
built from a small number of scattering clusters with a few rays each.
Transmit and receive arrays are square uniform planar arrays with
half-wavelength spacing. An ideal uncorrelated (rich scattering) channel
is available as a reference mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "SystemConfig",
    "ChannelParams",
    "PathComponent",
    "ChannelRealization",
    "subcarrier_frequencies",
    "upa_response",
    "sample_channel",
    "sample_uncorrelated_channel",
]


def _require(cond: bool, field_name: str, msg: str) -> None:
    if not cond:
        raise ConfigurationError(f"{field_name}: {msg}")


def _is_square(n: int) -> bool:
    return n >= 1 and math.isqrt(n) ** 2 == n


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and carrier parameters of the downlink system.

    The transmitter has ``n_tx`` antennas and ``n_rf_tx`` RF chains and
    serves ``n_users`` receivers with ``n_rx`` antennas each, sending
    ``n_streams`` data streams per user on each of ``n_carriers``
    subcarriers.
    """

    n_tx: int
    n_rx: int
    n_users: int
    n_streams: int
    n_rf_tx: int
    n_carriers: int = 1
    f_c: float = 300e9
    bandwidth: float = 0.0
    noise_var: float = 1.0
    rho_u: float = 1.0

    def __post_init__(self) -> None:
        _require(_is_square(self.n_tx), "n_tx", "must be a perfect square (UPA side length)")
        _require(_is_square(self.n_rx), "n_rx", "must be a perfect square (UPA side length)")
        _require(self.n_users >= 1, "n_users", "must be >= 1")
        _require(self.n_streams >= 1, "n_streams", "must be >= 1")
        _require(
            self.n_users * self.n_streams <= self.n_rf_tx,
            "n_rf_tx",
            f"n_users*n_streams = {self.n_users * self.n_streams} exceeds n_rf_tx = {self.n_rf_tx}",
        )
        _require(self.n_rf_tx <= self.n_tx, "n_rf_tx", "must not exceed n_tx")
        _require(self.n_streams <= self.n_rx, "n_streams", "must not exceed n_rx")
        _require(self.n_carriers >= 1, "n_carriers", "must be >= 1")
        _require(self.bandwidth >= 0, "bandwidth", "must be >= 0")
        _require(self.f_c > 0, "f_c", "must be > 0")
        _require(self.noise_var > 0, "noise_var", "must be > 0")
        _require(self.rho_u > 0, "rho_u", "must be > 0")

    @property
    def n_total_streams(self) -> int:
        return self.n_users * self.n_streams


@dataclass(frozen=True)
class ChannelParams:
    """Statistical parameters of the clustered channel model."""

    n_clusters: int = 6
    n_rays: int = 4
    angular_spread_deg: float = 10.0
    los_enabled: bool = False
    los_power_ratio: float = 10.0
    delay_spread: float = 20e-9
    beam_split_enabled: bool = False
    mode: str = "clustered"

    def __post_init__(self) -> None:
        _require(self.n_clusters >= 1, "n_clusters", "must be >= 1")
        _require(self.n_rays >= 1, "n_rays", "must be >= 1")
        _require(self.angular_spread_deg >= 0, "angular_spread_deg", "must be >= 0")
        _require(self.delay_spread >= 0, "delay_spread", "must be >= 0")
        _require(self.los_power_ratio > 0, "los_power_ratio", "must be > 0")
        _require(self.mode in ("clustered", "uncorrelated"), "mode", "must be 'clustered' or 'uncorrelated'")


@dataclass(frozen=True)
class PathComponent:
    """One propagation path: gain, delay and departure/arrival angles."""

    user: int
    cluster: int
    ray: int
    gain: complex
    delay: float
    aod: tuple[float, float]  # (azimuth, elevation), radians
    aoa: tuple[float, float]
    is_los: bool = False


@dataclass
class ChannelRealization:
    """One channel draw.

    ``h`` has shape (n_carriers, n_users, n_rx, n_tx). ``paths`` holds the
    geometry that generated it (empty in uncorrelated mode) and ``gamma``
    the scaling applied so the expected squared Frobenius norm of each
    matrix equals n_tx * n_rx.
    """

    h: np.ndarray
    paths: list[PathComponent] = field(default_factory=list)
    gamma: float = 1.0

    @property
    def n_carriers(self) -> int:
        return self.h.shape[0]

    @property
    def n_users(self) -> int:
        return self.h.shape[1]


def subcarrier_frequencies(cfg: SystemConfig) -> np.ndarray:
    """Center frequencies of the subcarrier grid, symmetric about f_c."""
    k = np.arange(1, cfg.n_carriers + 1)
    return cfg.f_c + (cfg.bandwidth / cfg.n_carriers) * (k - 1 - (cfg.n_carriers - 1) / 2)


def upa_response(phi: float, theta: float, n_antennas: int, freq_ratio: float = 1.0) -> np.ndarray:
    """Unit-norm response of a square UPA with half-wavelength spacing.

    Antennas are indexed row-major over the (p, q) grid with p the outer
    index. ``freq_ratio`` rescales the electrical spacing to model the
    frequency dependence of wideband steering; pass 1 to evaluate at the
    carrier.
    """
    if not _is_square(n_antennas):
        raise ConfigurationError(f"n_antennas: {n_antennas} is not a perfect square")
    if freq_ratio <= 0:
        raise ConfigurationError("freq_ratio: must be > 0")
    side = math.isqrt(n_antennas)
    idx = np.arange(n_antennas)
    p = idx // side
    q = idx % side
    phase = np.pi * freq_ratio * (p * np.sin(theta) * np.sin(phi) + q * np.cos(theta))
    return np.exp(1j * phase) / np.sqrt(n_antennas)


def _draw_user_paths(
    user: int, prm: ChannelParams, rng: np.random.Generator
) -> list[PathComponent]:
    spread = np.deg2rad(prm.angular_spread_deg)
    n_cl, n_ray = prm.n_clusters, prm.n_rays

    mean_aod_az = rng.uniform(0.0, 2 * np.pi, n_cl)
    mean_aod_el = rng.uniform(0.0, 2 * np.pi, n_cl)
    mean_aoa_az = rng.uniform(0.0, 2 * np.pi, n_cl)
    mean_aoa_el = rng.uniform(0.0, 2 * np.pi, n_cl)
    delays = rng.uniform(0.0, prm.delay_spread, n_cl) if prm.delay_spread > 0 else np.zeros(n_cl)

    aod_az = mean_aod_az[:, None] + spread * rng.standard_normal((n_cl, n_ray))
    aod_el = mean_aod_el[:, None] + spread * rng.standard_normal((n_cl, n_ray))
    aoa_az = mean_aoa_az[:, None] + spread * rng.standard_normal((n_cl, n_ray))
    aoa_el = mean_aoa_el[:, None] + spread * rng.standard_normal((n_cl, n_ray))

    ray_var = 1.0 / (n_cl * n_ray)
    gains = np.sqrt(ray_var / 2) * (
        rng.standard_normal((n_cl, n_ray)) + 1j * rng.standard_normal((n_cl, n_ray))
    )

    paths = [
        PathComponent(
            user=user,
            cluster=i,
            ray=l,
            gain=complex(gains[i, l]),
            delay=float(delays[i]),
            aod=(float(aod_az[i, l]), float(aod_el[i, l])),
            aoa=(float(aoa_az[i, l]), float(aoa_el[i, l])),
        )
        for i in range(n_cl)
        for l in range(n_ray)
    ]

    if prm.los_enabled:
        # LOS power ratio is relative to the total scattered power, which is 1.
        los_var = prm.los_power_ratio
        los_angles = rng.uniform(0.0, 2 * np.pi, 4)
        los_gain = np.sqrt(los_var / 2) * (rng.standard_normal() + 1j * rng.standard_normal())
        paths.append(
            PathComponent(
                user=user,
                cluster=-1,
                ray=-1,
                gain=complex(los_gain),
                delay=0.0,
                aod=(float(los_angles[0]), float(los_angles[1])),
                aoa=(float(los_angles[2]), float(los_angles[3])),
                is_los=True,
            )
        )
    return paths


def sample_channel(
    cfg: SystemConfig, prm: ChannelParams, rng: np.random.Generator
) -> ChannelRealization:
    """Draw one clustered channel realization for all users and subcarriers.

    Cluster mean angles are uniform on [0, 2pi); rays scatter around the
    mean with a Gaussian spread. Ray gains are circular complex Gaussian
    with total scattered power 1; an optional line-of-sight term carries
    ``los_power_ratio`` times that power at delay zero. Each path
    contributes a rank-one term with a per-subcarrier delay phase.
    """
    if prm.mode != "clustered":
        raise ConfigurationError("mode: sample_channel requires mode='clustered'")

    freqs = subcarrier_frequencies(cfg)
    total_var = 1.0 + (prm.los_power_ratio if prm.los_enabled else 0.0)
    gamma = math.sqrt(cfg.n_tx * cfg.n_rx / total_var)

    all_paths: list[PathComponent] = []
    h = np.zeros((cfg.n_carriers, cfg.n_users, cfg.n_rx, cfg.n_tx), dtype=complex)

    for u in range(cfg.n_users):
        paths = _draw_user_paths(u, prm, rng)
        all_paths.extend(paths)
        gains = np.array([p.gain for p in paths])
        delays = np.array([p.delay for p in paths])

        def steering(ratio: float) -> tuple[np.ndarray, np.ndarray]:
            a_t = np.stack([upa_response(p.aod[0], p.aod[1], cfg.n_tx, ratio) for p in paths], axis=1)
            a_r = np.stack([upa_response(p.aoa[0], p.aoa[1], cfg.n_rx, ratio) for p in paths], axis=1)
            return a_t, a_r

        if not prm.beam_split_enabled:
            a_t, a_r = steering(1.0)
        for k, f_k in enumerate(freqs):
            if prm.beam_split_enabled:
                a_t, a_r = steering(f_k / cfg.f_c)
            weights = gains * np.exp(-2j * np.pi * delays * f_k)
            h[k, u] = gamma * ((a_r * weights) @ a_t.conj().T)

    return ChannelRealization(h=h, paths=all_paths, gamma=gamma)


def sample_uncorrelated_channel(cfg: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw i.i.d. unit-variance entries for every (subcarrier, user) matrix."""
    shape = (cfg.n_carriers, cfg.n_users, cfg.n_rx, cfg.n_tx)
    h = np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return ChannelRealization(h=h, paths=[], gamma=1.0)
