"""Iterative hybrid precoder design via ADMM matrix factorization.

The hybrid design approximates a fully digital target precoder by the
product of an analog matrix (shared across subcarriers, constrained to a
hardware feasibility set) and per-subcarrier digital matrices, subject to
a total power constraint and, when the interference penalty is active, a
null-space constraint that removes residual inter-user interference.

Each iteration alternates closed-form least-squares updates of the analog
and digital factors, three projections (architecture set, power sphere,
interference null space), and scaled dual-variable ascent. After the last
iteration the analog factor is frozen to its feasible auxiliary, the
digital factors are refit by least squares, and the power constraint is
enforced exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .baseline import DigitalPrecoder, stacked_channel
from .channel import ChannelRealization, SystemConfig
from .errors import ConfigurationError, SolverError
from .projections import Architecture, project

__all__ = [
    "AdmmParams",
    "AdmmState",
    "HybridPrecoder",
    "AdmmDiagnostics",
    "initialize",
    "update_frf",
    "update_fbb",
    "project_power_ball",
    "project_nullspace",
    "update_duals",
    "finalize",
    "design_hybrid",
    "augmented_lagrangian",
]

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class AdmmParams:
    """Penalty weights and iteration budget.

    ``rho`` weights the analog feasibility split, ``eta`` the power-sphere
    split and ``mu`` the interference null-space split. ``mu = 0`` disables
    interference cancellation and reduces the method to plain matrix
    approximation. ``ridge`` regularizes the digital-factor solve for
    degenerate analog matrices.
    """

    rho: float = 0.05
    eta: float = 0.05
    mu: float = 1.0
    max_iters: int = 100
    ridge: float = 0.0

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ConfigurationError("rho: must be > 0")
        if self.eta < 0:
            raise ConfigurationError("eta: must be >= 0")
        if self.mu < 0:
            raise ConfigurationError("mu: must be >= 0")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters: must be >= 1")
        if self.ridge < 0:
            raise ConfigurationError("ridge: must be >= 0")


@dataclass
class AdmmState:
    """Primal iterates, feasible auxiliaries and scaled duals.

    Shapes: ``f_rf, r, u`` are (n_tx, n_rf); ``f_bb`` is
    (n_carriers, n_rf, n_users*n_streams); ``b, f_approx, w, z`` are
    (n_carriers, n_tx, n_users*n_streams).
    """

    f_rf: np.ndarray
    f_bb: np.ndarray
    r: np.ndarray
    b: np.ndarray
    f_approx: np.ndarray
    u: np.ndarray
    w: np.ndarray
    z: np.ndarray
    n_streams: int
    power_fallbacks: int = 0


@dataclass
class HybridPrecoder:
    """Feasible analog matrix plus per-subcarrier digital matrices."""

    f_rf: np.ndarray
    f_bb: np.ndarray
    n_streams: int

    def tx_matrix(self, k: int) -> np.ndarray:
        return self.f_rf @ self.f_bb[k]

    def user_block(self, k: int, u: int) -> np.ndarray:
        return self.f_rf @ self.f_bb[k][:, u * self.n_streams : (u + 1) * self.n_streams]


@dataclass
class AdmmDiagnostics:
    """Per-iteration objective and primal residual trace."""

    objective: list[float] = field(default_factory=list)
    res_analog: list[float] = field(default_factory=list)
    res_power: list[float] = field(default_factory=list)
    res_null: list[float] = field(default_factory=list)
    power_fallbacks: int = 0


def _rowspace_basis(h_bar: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the row space of h_bar, as columns."""
    if h_bar.shape[0] == 0:
        return np.zeros((h_bar.shape[1], 0), dtype=complex)
    _, s, vh = np.linalg.svd(h_bar, full_matrices=False)
    rank = int(np.count_nonzero(s > _RANK_RTOL * s[0])) if s.size else 0
    return vh[:rank].conj().T


def _apply_nullspace(a: np.ndarray, v1: np.ndarray) -> np.ndarray:
    """Remove the component of each column of ``a`` in span(v1)."""
    if v1.shape[1] == 0:
        return np.array(a, dtype=complex)
    return a - v1 @ (v1.conj().T @ a)


def project_nullspace(a: np.ndarray, h_bar: np.ndarray) -> np.ndarray:
    """Orthogonal projection of the columns of ``a`` onto null(h_bar)."""
    return _apply_nullspace(a, _rowspace_basis(h_bar))


def project_power_ball(y: np.ndarray, target: float) -> tuple[np.ndarray, bool]:
    """Radial scaling onto the sphere of squared Frobenius norm ``target``.

    A zero input cannot be scaled; it maps to a flagged uniform-magnitude
    matrix of the right power.
    """
    nrm = np.linalg.norm(y)
    if nrm == 0:
        flat = np.full(y.shape, np.sqrt(target / y.size), dtype=complex)
        return flat, True
    return y * (np.sqrt(target) / nrm), False


def update_frf(state: AdmmState, f_opt: np.ndarray, prm: AdmmParams) -> np.ndarray:
    """Closed-form minimizer of the augmented Lagrangian over the analog factor."""
    t = f_opt + prm.eta * (state.b - state.w) + prm.mu * (state.f_approx - state.z)
    num = np.einsum("kij,klj->il", t, state.f_bb.conj()) + prm.rho * (state.r - state.u)
    gram = np.einsum("kin,kjn->ij", state.f_bb, state.f_bb.conj())
    den = (1.0 + prm.eta + prm.mu) * gram + prm.rho * np.eye(gram.shape[0])
    return np.linalg.solve(den.T, num.T).T


def update_fbb(state: AdmmState, f_opt: np.ndarray, prm: AdmmParams) -> np.ndarray:
    """Closed-form minimizer over the per-subcarrier digital factors."""
    frf = state.f_rf
    gram = frf.conj().T @ frf
    if prm.ridge > 0:
        gram = gram + prm.ridge * np.eye(gram.shape[0])
    t = f_opt + prm.eta * (state.b - state.w) + prm.mu * (state.f_approx - state.z)
    rhs = np.einsum("ij,kin->kjn", frf.conj(), t)
    try:
        sol = np.linalg.solve(gram[None, :, :], rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(
            "digital-factor normal equations are singular; set ridge > 0"
        ) from exc
    return sol / (1.0 + prm.eta + prm.mu)


def update_duals(
    state: AdmmState, products: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled dual ascent; ``products`` holds f_rf @ f_bb_k per subcarrier."""
    u = state.u + (state.f_rf - state.r)
    w = state.w + (products - state.b)
    z = state.z + (products - state.f_approx)
    return u, w, z


def _products(f_rf: np.ndarray, f_bb: np.ndarray) -> np.ndarray:
    return np.einsum("ij,kjn->kin", f_rf, f_bb)


def _nullspace_bases(channels: ChannelRealization) -> list[list[np.ndarray]]:
    return [
        [_rowspace_basis(stacked_channel(channels, k, u)) for u in range(channels.n_users)]
        for k in range(channels.n_carriers)
    ]


def _project_approx(
    products: np.ndarray, z: np.ndarray, bases: list[list[np.ndarray]], n_streams: int
) -> np.ndarray:
    out = np.empty_like(products)
    for k in range(products.shape[0]):
        for u, v1 in enumerate(bases[k]):
            cols = slice(u * n_streams, (u + 1) * n_streams)
            out[k][:, cols] = _apply_nullspace(products[k][:, cols] + z[k][:, cols], v1)
    return out


def initialize(
    f_opt: np.ndarray,
    channels: ChannelRealization,
    cfg: SystemConfig,
    arch: Architecture,
    prm: AdmmParams,
    rng: np.random.Generator,
) -> AdmmState:
    """Random feasible analog start, least-squares digital fit, zero duals."""
    n_tx = cfg.n_tx
    phases = rng.uniform(0.0, 2 * np.pi, (n_tx, cfg.n_rf_tx))
    f_rf = project(np.exp(1j * phases), arch)

    f = cfg.n_carriers
    f_bb = np.stack([np.linalg.lstsq(f_rf, f_opt[k], rcond=None)[0] for k in range(f)])

    products = _products(f_rf, f_bb)
    target = float(cfg.n_total_streams)
    b = np.empty_like(products)
    fallbacks = 0
    for k in range(f):
        b[k], flagged = project_power_ball(products[k], target)
        fallbacks += int(flagged)

    bases = _nullspace_bases(channels)
    zeros = np.zeros_like(products)
    f_approx = _project_approx(products, zeros, bases, cfg.n_streams)

    return AdmmState(
        f_rf=f_rf,
        f_bb=f_bb,
        r=f_rf.copy(),
        b=b,
        f_approx=f_approx,
        u=np.zeros_like(f_rf),
        w=np.zeros_like(products),
        z=np.zeros_like(products),
        n_streams=cfg.n_streams,
        power_fallbacks=fallbacks,
    )


def finalize(state: AdmmState, arch: Architecture, prm: AdmmParams) -> HybridPrecoder:
    """Freeze the feasible analog factor and refit the digital factors.

    The digital factors are the least-squares fit of the analog factor to
    the interference-free auxiliaries (to the power auxiliaries when the
    interference penalty is off), then rescaled so every per-subcarrier
    product meets the power constraint exactly.
    """
    f_rf = state.r.copy()
    target_mats = state.f_approx if prm.mu > 0 else state.b
    gram = f_rf.conj().T @ f_rf
    if prm.ridge > 0:
        gram = gram + prm.ridge * np.eye(gram.shape[0])
    rhs = np.einsum("ij,kin->kjn", f_rf.conj(), target_mats)
    try:
        f_bb = np.linalg.solve(gram[None, :, :], rhs)
    except np.linalg.LinAlgError:
        warnings.warn(
            "analog factor gram matrix is singular; falling back to a ridge-regularized solve",
            RuntimeWarning,
            stacklevel=2,
        )
        auto = 1e-10 * max(1.0, float(np.trace(gram).real) / gram.shape[0])
        f_bb = np.linalg.solve(gram[None, :, :] + auto * np.eye(gram.shape[0]), rhs)

    target = float(state.f_bb.shape[-1])
    for k in range(f_bb.shape[0]):
        nrm = np.linalg.norm(f_rf @ f_bb[k])
        if nrm == 0:
            raise SolverError(
                "hybrid product collapsed to zero at finalize; adjust penalties or ridge"
            )
        f_bb[k] *= np.sqrt(target) / nrm
    return HybridPrecoder(f_rf=f_rf, f_bb=f_bb, n_streams=state.n_streams)


def augmented_lagrangian(
    f_rf: np.ndarray,
    f_bb: np.ndarray,
    f_opt: np.ndarray,
    r: np.ndarray,
    b: np.ndarray,
    f_approx: np.ndarray,
    u: np.ndarray,
    w: np.ndarray,
    z: np.ndarray,
    prm: AdmmParams,
) -> float:
    """Smooth part of the scaled augmented Lagrangian (indicators omitted)."""
    products = _products(f_rf, f_bb)
    sq = lambda m: float(np.sum(np.abs(m) ** 2))  # noqa: E731
    val = sq(f_opt - products)
    val += prm.rho * (sq(f_rf - r + u) - sq(u))
    val += prm.eta * (sq(products - b + w) - sq(w))
    val += prm.mu * (sq(products - f_approx + z) - sq(z))
    return val


def design_hybrid(
    f_opt: DigitalPrecoder,
    channels: ChannelRealization,
    cfg: SystemConfig,
    arch: Architecture,
    prm: AdmmParams,
    rng: np.random.Generator,
) -> tuple[HybridPrecoder, AdmmDiagnostics]:
    """Run the full iterative design and return a feasible hybrid precoder.

    The returned precoder always satisfies the architecture constraint and
    the exact power constraint, regardless of convergence quality. The
    diagnostics trace records the approximation objective and the three
    primal residuals at every iteration.
    """
    fo = f_opt.f_opt
    expected = (cfg.n_carriers, cfg.n_tx, cfg.n_total_streams)
    if fo.shape != expected:
        raise ConfigurationError(f"f_opt: shape {fo.shape} does not match system dims {expected}")
    if channels.h.shape != (cfg.n_carriers, cfg.n_users, cfg.n_rx, cfg.n_tx):
        raise ConfigurationError("channels: shape does not match system dims")

    bases = _nullspace_bases(channels)
    state = initialize(fo, channels, cfg, arch, prm, rng)
    diag = AdmmDiagnostics(power_fallbacks=state.power_fallbacks)
    target = float(cfg.n_total_streams)

    for _ in range(prm.max_iters):
        state.f_rf = update_frf(state, fo, prm)
        state.f_bb = update_fbb(state, fo, prm)
        state.r = project(state.f_rf + state.u, arch)
        products = _products(state.f_rf, state.f_bb)
        for k in range(cfg.n_carriers):
            state.b[k], flagged = project_power_ball(products[k] + state.w[k], target)
            diag.power_fallbacks += int(flagged)
        state.f_approx = _project_approx(products, state.z, bases, cfg.n_streams)
        state.u, state.w, state.z = update_duals(state, products)

        diag.objective.append(float(np.sum(np.abs(fo - products) ** 2)))
        diag.res_analog.append(float(np.linalg.norm(state.f_rf - state.r)))
        diag.res_power.append(float(np.linalg.norm(products - state.b)))
        diag.res_null.append(float(np.linalg.norm(products - state.f_approx)))

    return finalize(state, arch, prm), diag
