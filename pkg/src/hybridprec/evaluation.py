"""Spectral efficiency, interference diagnostics and the hardware power model.

Rates follow the Gaussian-signaling formula: log-det of identity plus the
interference-plus-noise-whitened signal covariance, evaluated after the
per-user receive combiner. The power model counts devices per architecture
(RF chains, amplifiers, phase shifters, switches) at fixed per-device
consumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baseline import Combiner, stacked_channel
from .channel import ChannelRealization, SystemConfig
from .errors import ConfigurationError, UnsupportedArchitectureError
from .projections import Architecture, Connectivity, Element

__all__ = [
    "EvalParams",
    "PowerModel",
    "EvalRecord",
    "ResidualReport",
    "interference_covariance",
    "spectral_efficiency",
    "power_consumption",
    "fully_digital_power",
    "residual_metrics",
]


@dataclass(frozen=True)
class EvalParams:
    """Noise variance and per-user average received power (both linear)."""

    noise_var: float = 1.0
    rho_u: float = 1.0

    def __post_init__(self) -> None:
        if not self.noise_var > 0:
            raise ConfigurationError("noise_var: must be > 0")
        if not self.rho_u > 0:
            raise ConfigurationError("rho_u: must be > 0")

    @classmethod
    def from_snr_db(cls, snr_db: float, rho_u: float = 1.0) -> "EvalParams":
        return cls(noise_var=rho_u / 10.0 ** (snr_db / 10.0), rho_u=rho_u)


@dataclass(frozen=True)
class PowerModel:
    """Per-device consumption in milliwatts.

    ``p_ps_mw`` maps phase-shifter resolution in bits to consumption;
    unquantized and double phase shifters are billed at the 4-bit rate in
    fully connected structures and at the 3-bit rate in subarray
    structures.
    """

    p_bb: float = 200.0
    p_dac: float = 110.0
    p_os: float = 4.0
    p_m: float = 22.0
    p_pa: float = 60.0
    p_pc: float = 6.6
    p_swi: float = 24.0
    p_t: float = 100.0
    p_ps_mw: dict[int, float] = field(default_factory=lambda: {1: 10.0, 2: 20.0, 3: 40.0, 4: 100.0})

    def __post_init__(self) -> None:
        vals = [self.p_bb, self.p_dac, self.p_os, self.p_m, self.p_pa, self.p_pc, self.p_swi, self.p_t]
        if any(v < 0 for v in vals) or any(v < 0 for v in self.p_ps_mw.values()):
            raise ConfigurationError("power model: all device powers must be nonnegative")

    def p_ps(self, n_bits: int) -> float:
        if n_bits not in self.p_ps_mw:
            raise UnsupportedArchitectureError(f"no phase-shifter power defined for {n_bits} bits")
        return self.p_ps_mw[n_bits]


@dataclass
class EvalRecord:
    """Per-(subcarrier, user) rates plus aggregates.

    ``rates`` and ``interference`` have shape (n_carriers, n_users);
    ``mean_sum_se`` is the subcarrier-averaged sum spectral efficiency,
    the headline figure. ``residual_per_k`` is filled by callers that
    know the digital target.
    """

    rates: np.ndarray
    sum_rate_per_k: np.ndarray
    mean_sum_se: float
    interference: np.ndarray
    residual_per_k: np.ndarray | None = None


def interference_covariance(
    channels: ChannelRealization,
    precoder,
    combiners: Combiner,
    ev: EvalParams,
    k: int,
    u: int,
) -> np.ndarray:
    """Post-combiner covariance of inter-user interference plus noise."""
    w = combiners.w[k, u]
    h = channels.h[k, u]
    cov = ev.noise_var * (w.conj().T @ w)
    for j in range(channels.n_users):
        if j == u:
            continue
        g = w.conj().T @ (h @ precoder.user_block(k, j))
        cov = cov + ev.rho_u * (g @ g.conj().T)
    return cov


def _logdet_hermitian(m: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(m)
    if sign.real <= 0:
        raise FloatingPointError("covariance matrix is not positive definite")
    return float(logdet)


def spectral_efficiency(
    channels: ChannelRealization,
    precoder,
    combiners: Combiner,
    ev: EvalParams,
) -> EvalRecord:
    """Achievable rates for every (subcarrier, user) pair, in bits/s/Hz."""
    f, n_users = channels.n_carriers, channels.n_users
    rates = np.zeros((f, n_users))
    interference = np.zeros((f, n_users))
    ln2 = math.log(2.0)
    for k in range(f):
        for u in range(n_users):
            cov = interference_covariance(channels, precoder, combiners, ev, k, u)
            w = combiners.w[k, u]
            g = w.conj().T @ (channels.h[k, u] @ precoder.user_block(k, u))
            signal = ev.rho_u * (g @ g.conj().T)
            rate = (_logdet_hermitian(cov + signal) - _logdet_hermitian(cov)) / ln2
            rates[k, u] = max(rate, 0.0)
            interference[k, u] = float((cov.trace().real - ev.noise_var * np.trace(w.conj().T @ w).real))
    sum_per_k = rates.sum(axis=1)
    return EvalRecord(
        rates=rates,
        sum_rate_per_k=sum_per_k,
        mean_sum_se=float(sum_per_k.mean()),
        interference=interference,
    )


def _ps_bill_bits(arch: Architecture) -> int:
    """Phase-shifter billing resolution for the power model."""
    if arch.element is Element.QPS:
        return arch.n_bits
    if arch.element is Element.SI:
        return 1
    # Unquantized and double phase shifters: 4-bit rate in fully connected
    # structures, 3-bit rate in subarray structures.
    return 4 if arch.connectivity is Connectivity.FULLY_CONNECTED else 3


def power_consumption(arch: Architecture, cfg: SystemConfig, pm: PowerModel | None = None) -> float:
    """Total transmitter power in watts for one architecture.

    Device counts: fully connected structures use one phase shifter per
    antenna/RF-chain pair (two for double phase shifters); switch networks
    use one switch per pair; antenna selection uses one switch per antenna.
    Subarray structures count phase shifters over at most l_max subarrays
    per RF chain plus one connection switch per active link (dynamic only).
    """
    pm = pm or PowerModel()
    n_tx, n_rf = cfg.n_tx, cfg.n_rf_tx
    base = pm.p_bb + (pm.p_dac + pm.p_os + pm.p_m) * n_rf + (pm.p_pa + pm.p_pc) * n_tx + pm.p_t

    n_ps = 0.0
    n_swi = 0.0
    ps_rate = 0.0
    conn, elem = arch.connectivity, arch.element

    if conn is Connectivity.FULLY_CONNECTED:
        pairs = n_tx * n_rf
        if elem in (Element.UPS, Element.QPS, Element.SI):
            n_ps, ps_rate = pairs, pm.p_ps(_ps_bill_bits(arch))
        elif elem is Element.DPS:
            n_ps, ps_rate = 2 * pairs, pm.p_ps(_ps_bill_bits(arch))
        elif elem is Element.SWITCH:
            n_swi = pairs
        elif elem is Element.ANTENNA_SELECTION:
            n_swi = n_tx
        else:
            raise UnsupportedArchitectureError(f"no power convention for {arch.label}")
    else:
        if elem not in (Element.UPS, Element.QPS, Element.SI, Element.DPS):
            raise UnsupportedArchitectureError(f"no power convention for {arch.label}")
        n_sa = arch.n_subarrays if arch.n_subarrays else n_rf
        if n_tx % n_sa != 0:
            raise ConfigurationError(f"n_subarrays: {n_sa} does not divide n_tx = {n_tx}")
        sa_size = n_tx // n_sa
        links = arch.l_max * n_rf
        n_ps = links * sa_size * (2 if elem is Element.DPS else 1)
        ps_rate = pm.p_ps(_ps_bill_bits(arch))
        if conn is Connectivity.DAOSA:
            n_swi = links

    total_mw = base + ps_rate * n_ps + pm.p_swi * n_swi
    return total_mw / 1000.0


def fully_digital_power(cfg: SystemConfig, pm: PowerModel | None = None) -> float:
    """Power of a fully digital transmitter: one RF chain per antenna, no
    analog network."""
    pm = pm or PowerModel()
    total_mw = (
        pm.p_bb
        + (pm.p_dac + pm.p_os + pm.p_m) * cfg.n_tx
        + (pm.p_pa + pm.p_pc) * cfg.n_tx
        + pm.p_t
    )
    return total_mw / 1000.0


@dataclass
class ResidualReport:
    """Approximation residual and inter-user leakage of a precoder."""

    approx_residual: float
    leakage: np.ndarray  # (n_carriers, n_users)
    mean_leakage: float


def residual_metrics(f_opt, precoder, channels: ChannelRealization) -> ResidualReport:
    """Relative approximation error against the digital target, and the
    per-(subcarrier, user) interference power leaking into other users."""
    target = f_opt.f_opt if hasattr(f_opt, "f_opt") else np.asarray(f_opt)
    f, n_users = channels.n_carriers, channels.n_users
    num = 0.0
    den = 0.0
    leakage = np.zeros((f, n_users))
    for k in range(f):
        num += float(np.sum(np.abs(target[k] - precoder.tx_matrix(k)) ** 2))
        den += float(np.sum(np.abs(target[k]) ** 2))
        for u in range(n_users):
            h_bar = stacked_channel(channels, k, u)
            leakage[k, u] = float(np.sum(np.abs(h_bar @ precoder.user_block(k, u)) ** 2))
    return ResidualReport(
        approx_residual=num / den if den > 0 else 0.0,
        leakage=leakage,
        mean_leakage=float(leakage.mean()),
    )
