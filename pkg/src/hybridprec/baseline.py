"""Fully digital block-diagonalization precoder and receive combiners.

The digital precoder places each user's streams in the null space of all
other users' stacked channels, so inter-user interference is zero by
construction. It is both the strongest baseline and the target matrix
that the hybrid design approximates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, SystemConfig
from .errors import InfeasibleConfigurationError

__all__ = [
    "DigitalPrecoder",
    "Combiner",
    "stacked_channel",
    "bd_fully_digital_precoder",
    "fully_digital_combiner",
]

_RANK_RTOL = 1e-10


@dataclass
class DigitalPrecoder:
    """Per-subcarrier digital precoder, shape (n_carriers, n_tx, n_users*n_streams)."""

    f_opt: np.ndarray
    n_streams: int

    def tx_matrix(self, k: int) -> np.ndarray:
        return self.f_opt[k]

    def user_block(self, k: int, u: int) -> np.ndarray:
        return self.f_opt[k][:, u * self.n_streams : (u + 1) * self.n_streams]


@dataclass
class Combiner:
    """Per-(subcarrier, user) receive combiners with orthonormal columns.

    ``deficient`` lists (k, u) pairs whose effective channel had rank below
    the stream count; their trailing columns are an arbitrary orthonormal
    completion.
    """

    w: np.ndarray  # (n_carriers, n_users, n_rx, n_streams)
    deficient: list[tuple[int, int]] = field(default_factory=list)


def stacked_channel(channels: ChannelRealization, k: int, u: int) -> np.ndarray:
    """All users' channel rows at subcarrier k with user u's rows removed."""
    others = [channels.h[k, j] for j in range(channels.n_users) if j != u]
    if not others:
        return np.zeros((0, channels.h.shape[-1]), dtype=complex)
    return np.vstack(others)


def _null_basis(h_bar: np.ndarray, n_cols: int) -> np.ndarray:
    """Orthonormal basis of the null space of h_bar (all of C^n for 0 rows)."""
    if h_bar.shape[0] == 0:
        return np.eye(n_cols, dtype=complex)
    _, s, vh = np.linalg.svd(h_bar, full_matrices=True)
    rank = int(np.count_nonzero(s > _RANK_RTOL * s[0])) if s.size else 0
    return vh[rank:].conj().T


def bd_fully_digital_precoder(channels: ChannelRealization, cfg: SystemConfig) -> DigitalPrecoder:
    """Zero-interference digital precoder with equal power per stream.

    For each (subcarrier, user): project onto the null space of the other
    users' stacked channel, then take the dominant right singular vectors
    of the user's channel restricted to that null space. The per-subcarrier
    matrix is scaled so its squared Frobenius norm equals
    n_users * n_streams.
    """
    n_min_null = cfg.n_tx - (cfg.n_users - 1) * cfg.n_rx
    if n_min_null <= 0:
        raise InfeasibleConfigurationError(
            f"(n_users-1)*n_rx = {(cfg.n_users - 1) * cfg.n_rx} leaves no null space with n_tx = {cfg.n_tx}"
        )

    f = cfg.n_carriers
    total = cfg.n_total_streams
    f_opt = np.zeros((f, cfg.n_tx, total), dtype=complex)
    for k in range(f):
        for u in range(cfg.n_users):
            v0 = _null_basis(stacked_channel(channels, k, u), cfg.n_tx)
            if v0.shape[1] < cfg.n_streams:
                raise InfeasibleConfigurationError(
                    f"null space dimension {v0.shape[1]} < n_streams = {cfg.n_streams} at (k={k}, u={u})"
                )
            eff = channels.h[k, u] @ v0
            _, _, vh = np.linalg.svd(eff, full_matrices=False)
            f_opt[k, :, u * cfg.n_streams : (u + 1) * cfg.n_streams] = v0 @ vh[: cfg.n_streams].conj().T
        f_opt[k] *= np.sqrt(total) / np.linalg.norm(f_opt[k])
    return DigitalPrecoder(f_opt=f_opt, n_streams=cfg.n_streams)


def fully_digital_combiner(channels: ChannelRealization, precoder, cfg: SystemConfig) -> Combiner:
    """Dominant left singular vectors of each user's own effective channel."""
    f = cfg.n_carriers
    w = np.zeros((f, cfg.n_users, cfg.n_rx, cfg.n_streams), dtype=complex)
    deficient: list[tuple[int, int]] = []
    for k in range(f):
        for u in range(cfg.n_users):
            eff = channels.h[k, u] @ precoder.user_block(k, u)
            uu, s, _ = np.linalg.svd(eff, full_matrices=False)
            w[k, u] = uu[:, : cfg.n_streams]
            rank = int(np.count_nonzero(s > _RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
            if rank < cfg.n_streams:
                deficient.append((k, u))
    return Combiner(w=w, deficient=deficient)
