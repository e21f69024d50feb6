from types import SimpleNamespace

import numpy as np
import pytest


def complex_randn(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def duck_cfg(n_tx, n_rx, n_users, n_streams, n_rf_tx, n_carriers=1):
    """Dimension bag for precoder-level tests that do not involve arrays."""
    return SimpleNamespace(
        n_tx=n_tx,
        n_rx=n_rx,
        n_users=n_users,
        n_streams=n_streams,
        n_rf_tx=n_rf_tx,
        n_carriers=n_carriers,
        n_total_streams=n_users * n_streams,
    )


def random_channels(rng, cfg):
    """Uncorrelated channel draw for an arbitrary (duck) dimension bag."""
    from hybridprec.channel import ChannelRealization

    shape = (cfg.n_carriers, cfg.n_users, cfg.n_rx, cfg.n_tx)
    return ChannelRealization(h=complex_randn(rng, shape) * np.sqrt(0.5))


def fd_gradient_norm(fun, x, h=1e-5):
    """Central-difference gradient norm over all real/imag components."""
    g = 0.0
    for idx in np.ndindex(*x.shape):
        for comp in (1.0, 1j):
            e = np.zeros_like(x)
            e[idx] = comp * h
            g += ((fun(x + e) - fun(x - e)) / (2 * h)) ** 2
    return np.sqrt(g)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
