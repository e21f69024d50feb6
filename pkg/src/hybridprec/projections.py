"""Nearest-point projections onto the feasible analog precoder sets.

An analog architecture combines a connectivity pattern (fully connected,
fixed array-of-subarrays, or dynamic array-of-subarrays with a bounded
number of RF-chain links) with an element technology (continuous or
quantized phase shifters, switch-plus-inverter, on/off switches, antenna
selection, or double phase shifters). The feasibility projection is the
only architecture-specific step of the iterative hybrid design.

All projections are deterministic total functions. Boundary ties are
resolved by fixed conventions: a zero entry projects to 1 under phase
shifters, Re = 1/2 projects to 1 under switches, and Re = 0 projects to
+1 under switch-plus-inverter. Outputs are exact fixed points, so
projecting twice returns the first output bit for bit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Connectivity",
    "Element",
    "Architecture",
    "parse_architecture",
    "validate_architecture",
    "project",
    "project_elementwise",
    "project_antenna_selection",
    "project_aosa",
    "project_daosa",
    "in_feasible_set",
]

# Tolerance for continuous-modulus membership checks (|x| = 1 cannot be
# represented exactly for most phases).
_MOD_TOL = 1e-12


class Connectivity(Enum):
    FULLY_CONNECTED = "fc"
    AOSA = "aosa"
    DAOSA = "daosa"


class Element(Enum):
    UPS = "ups"
    QPS = "qps"
    SI = "si"
    SWITCH = "switch"
    ANTENNA_SELECTION = "as"
    DPS = "dps"


@dataclass(frozen=True)
class Architecture:
    """Connectivity pattern plus element technology.

    ``l_max`` bounds subarray links and is required (>= 1) for AoSA and
    DAoSA, and must be 0 for fully connected. ``n_subarrays`` of 0 means
    one subarray per RF chain, resolved against the matrix shape at
    projection time.
    """

    connectivity: Connectivity = Connectivity.FULLY_CONNECTED
    element: Element = Element.UPS
    l_max: int = 0
    n_bits: int = 0
    n_subarrays: int = 0

    def __post_init__(self) -> None:
        fc = self.connectivity is Connectivity.FULLY_CONNECTED
        if self.element is Element.QPS and self.n_bits < 1:
            raise ConfigurationError("n_bits: QPS requires n_bits >= 1")
        if self.element is not Element.QPS and self.n_bits != 0:
            raise ConfigurationError("n_bits: only meaningful for QPS")
        if fc and self.l_max != 0:
            raise ConfigurationError("l_max: must be 0 for fully connected")
        if not fc and self.l_max < 1:
            raise ConfigurationError("l_max: AoSA/DAoSA require l_max >= 1")
        if self.element is Element.ANTENNA_SELECTION and not fc:
            raise ConfigurationError("element: antenna selection requires fully connected")
        if self.n_subarrays < 0:
            raise ConfigurationError("n_subarrays: must be >= 0")

    @property
    def label(self) -> str:
        parts = [self.connectivity.value, self.element.value]
        if self.element is Element.QPS:
            parts[1] += str(self.n_bits)
        out = "-".join(parts)
        if self.connectivity is not Connectivity.FULLY_CONNECTED:
            out += f"-l{self.l_max}"
            if self.n_subarrays:
                out += f"-sa{self.n_subarrays}"
        return out


_ARCH_RE = re.compile(
    r"^(?P<conn>fc|aosa|daosa)-(?P<elem>ups|qps(?P<bits>\d+)|si|switch|as|dps)"
    r"(?:-l(?P<lmax>\d+))?(?:-sa(?P<nsa>\d+))?$"
)


def parse_architecture(spec: str) -> Architecture:
    """Parse a compact label like ``fc-qps3`` or ``daosa-ups-l2``."""
    m = _ARCH_RE.match(spec.strip().lower())
    if m is None:
        raise ConfigurationError(
            f"architecture: cannot parse '{spec}' "
            "(expected <fc|aosa|daosa>-<ups|qpsN|si|switch|as|dps>[-lK][-saM])"
        )
    conn = Connectivity(m.group("conn"))
    elem_token = m.group("elem")
    if elem_token.startswith("qps"):
        element, n_bits = Element.QPS, int(m.group("bits"))
    else:
        element, n_bits = Element(elem_token), 0
    l_max = int(m.group("lmax")) if m.group("lmax") else 0
    n_sa = int(m.group("nsa")) if m.group("nsa") else 0
    return Architecture(conn, element, l_max=l_max, n_bits=n_bits, n_subarrays=n_sa)


def _resolve_subarrays(arch: Architecture, n_tx: int, n_rf: int) -> tuple[int, int]:
    """Return (n_subarrays, subarray_size) validated against a matrix shape."""
    n_sa = arch.n_subarrays if arch.n_subarrays else n_rf
    if n_tx % n_sa != 0:
        raise ConfigurationError(f"n_subarrays: {n_sa} does not divide n_tx = {n_tx}")
    if arch.connectivity is Connectivity.AOSA and arch.l_max > n_sa:
        raise ConfigurationError(f"l_max: {arch.l_max} exceeds n_subarrays = {n_sa}")
    if arch.connectivity is Connectivity.DAOSA:
        if arch.l_max > n_rf:
            raise ConfigurationError(f"l_max: {arch.l_max} exceeds n_rf = {n_rf}")
        if n_sa * arch.l_max < n_rf:
            raise ConfigurationError(
                f"l_max: capacity n_subarrays*l_max = {n_sa * arch.l_max} cannot cover {n_rf} RF chains"
            )
    return n_sa, n_tx // n_sa


def validate_architecture(arch: Architecture, n_tx: int, n_rf: int) -> None:
    """Check an architecture against concrete matrix dimensions."""
    if arch.element is Element.ANTENNA_SELECTION and n_rf > n_tx:
        raise ConfigurationError(f"n_rf: antenna selection needs n_rf <= n_tx, got {n_rf} > {n_tx}")
    if arch.connectivity is not Connectivity.FULLY_CONNECTED:
        _resolve_subarrays(arch, n_tx, n_rf)


def _unit(z: np.ndarray) -> np.ndarray:
    """Normalize to unit modulus; zeros map to 1. Output is bit-stable.

    Repeated floating-point normalization either reaches a fixed point or
    oscillates between two values straddling modulus 1; oscillating entries
    are canonicalized to the lexicographically smaller member so projecting
    an output reproduces it exactly.
    """
    out = np.where(z == 0, 1.0 + 0.0j, z)
    out = out / np.abs(out)
    for _ in range(8):
        m = np.abs(out)
        if np.all(m == 1.0):
            break
        nxt = np.where(m == 1.0, out, out / m)
        fixed = nxt == out
        m2 = np.abs(nxt)
        nxt2 = np.where(m2 == 1.0, nxt, nxt / m2)
        cycling = (nxt2 == out) & ~fixed
        resolved = fixed | cycling
        lex_nxt = (nxt.real < out.real) | ((nxt.real == out.real) & (nxt.imag < out.imag))
        out = np.where(cycling & lex_nxt, nxt, np.where(resolved, out, nxt))
        if resolved.all():
            break
    return out


@lru_cache(maxsize=None)
def _qps_grid(n_bits: int) -> np.ndarray:
    n = 1 << n_bits
    grid = np.exp(2j * np.pi * np.arange(n) / n)
    grid.setflags(write=False)
    return grid


def _project_values(x: np.ndarray, element: Element, n_bits: int) -> np.ndarray:
    """Elementwise nearest point of the element set (not antenna selection)."""
    x = np.asarray(x, dtype=complex)
    if element is Element.UPS:
        return _unit(x)
    if element is Element.QPS:
        grid = _qps_grid(n_bits)
        step = 2 * np.pi / grid.size
        k = np.mod(np.rint(np.angle(x) / step).astype(int), grid.size)
        return grid[k]
    if element is Element.SI:
        return np.where(x.real >= 0.0, 1.0 + 0.0j, -1.0 + 0.0j)
    if element is Element.SWITCH:
        return np.where(x.real >= 0.5, 1.0 + 0.0j, 0.0 + 0.0j)
    if element is Element.DPS:
        out = np.array(x, dtype=complex)
        for _ in range(4):
            mask = np.abs(out) > 2.0
            if not mask.any():
                break
            new = np.where(mask, 2.0 * _unit(out), out)
            if np.array_equal(new, out):
                break
            out = new
        return out
    raise ConfigurationError(f"element: {element} has no elementwise projection")


def project_elementwise(x: np.ndarray, arch: Architecture) -> np.ndarray:
    """Entrywise projection for fully connected phase-shifter/switch variants."""
    if arch.connectivity is not Connectivity.FULLY_CONNECTED:
        raise ConfigurationError("connectivity: project_elementwise requires fully connected")
    return _project_values(x, arch.element, arch.n_bits)


def project_antenna_selection(x: np.ndarray) -> np.ndarray:
    """One active antenna per RF chain, no antenna shared between chains.

    Columns are processed in descending order of their best real part;
    each claims the unclaimed row with the largest real part.
    """
    x = np.asarray(x)
    n_tx, n_rf = x.shape
    if n_rf > n_tx:
        raise ConfigurationError(f"n_rf: antenna selection needs n_rf <= n_tx, got {n_rf} > {n_tx}")
    realpart = x.real
    order = np.argsort(-realpart.max(axis=0), kind="stable")
    out = np.zeros((n_tx, n_rf), dtype=complex)
    taken = np.zeros(n_tx, dtype=bool)
    for j in order:
        col = np.where(taken, -np.inf, realpart[:, j])
        i = int(np.argmax(col))
        out[i, j] = 1.0
        taken[i] = True
    return out


def project_aosa(x: np.ndarray, arch: Architecture) -> np.ndarray:
    """Keep the strongest subarray blocks of each column, zero the rest.

    Each column retains exactly min(l_max, n_subarrays) blocks, ranked by
    the l1 norm of the block entries (stable on ties), and surviving
    entries pass through the element projection.
    """
    x = np.asarray(x, dtype=complex)
    n_tx, n_rf = x.shape
    n_sa, sa = _resolve_subarrays(arch, n_tx, n_rf)
    keep = min(arch.l_max, n_sa)

    block_l1 = np.abs(x).reshape(n_sa, sa, n_rf).sum(axis=1)  # (n_sa, n_rf)
    mask = np.zeros((n_sa, n_rf), dtype=bool)
    for j in range(n_rf):
        top = np.argsort(-block_l1[:, j], kind="stable")[:keep]
        mask[top, j] = True

    full_mask = np.repeat(mask, sa, axis=0)
    mapped = _project_values(x, arch.element, arch.n_bits)
    return np.where(full_mask, mapped, 0.0 + 0.0j)


def _daosa_support_single_link(w: np.ndarray) -> np.ndarray:
    """Exact support for one link per block: assign every column a distinct
    covering block (rectangular assignment on the opportunity cost against
    each block's free best pick), remaining blocks take their best column."""
    from scipy.optimize import linear_sum_assignment

    n_sa, n_rf = w.shape
    best = w.max(axis=1)  # per block, value of an unconstrained pick
    gain = w.T - best[None, :]  # (n_rf, n_sa): forcing block s to cover column j
    rows, cols = linear_sum_assignment(-gain)
    active = np.zeros((n_sa, n_rf), dtype=bool)
    covered_blocks = set()
    for j, s in zip(rows, cols):
        active[s, j] = True
        covered_blocks.add(int(s))
    for s in range(n_sa):
        if s not in covered_blocks and best[s] > 0:
            active[s, int(np.argmax(w[s]))] = True
    return active


def _daosa_support_lp(w: np.ndarray, l_max: int) -> np.ndarray:
    """Exact maximizer of retained weight with per-block capacity and column
    coverage constraints, via the integral LP vertex of the transportation
    relaxation."""
    from scipy.optimize import linprog

    n_sa, n_rf = w.shape
    n_var = n_sa * n_rf
    rows = []
    rhs = []
    for s in range(n_sa):
        row = np.zeros(n_var)
        row[s * n_rf : (s + 1) * n_rf] = 1.0
        rows.append(row)
        rhs.append(float(l_max))
    for j in range(n_rf):
        row = np.zeros(n_var)
        row[j::n_rf] = -1.0
        rows.append(row)
        rhs.append(-1.0)
    res = linprog(
        -w.reshape(-1),
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=(0.0, 1.0),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"subarray support selection LP failed: {res.message}")
    y = res.x.reshape(n_sa, n_rf)
    if not np.all((y < 1e-6) | (y > 1 - 1e-6)):
        raise RuntimeError("subarray support selection LP returned a fractional vertex")
    return y > 0.5


def project_daosa(x: np.ndarray, arch: Architecture) -> np.ndarray:
    """Per subarray block, keep the strongest RF-chain columns.

    Each block keeps at most l_max columns ranked by Euclidean norm, and
    every column of the full matrix keeps at least one block. When the
    per-block ranking leaves a column with no block, the support is
    recomputed as the exact maximizer of retained squared norm subject to
    both constraints. Surviving entries pass through the element
    projection.
    """
    x = np.asarray(x, dtype=complex)
    n_tx, n_rf = x.shape
    n_sa, sa = _resolve_subarrays(arch, n_tx, n_rf)
    l_max = min(arch.l_max, n_rf)

    w = (np.abs(x) ** 2).reshape(n_sa, sa, n_rf).sum(axis=1)  # (n_sa, n_rf)

    # Fast path: per-block top-l_max among positive-weight columns. This is
    # the exact optimum whenever it already covers every column.
    active = np.zeros((n_sa, n_rf), dtype=bool)
    for s in range(n_sa):
        pos = np.flatnonzero(w[s] > 0)
        top = pos[np.argsort(-w[s, pos], kind="stable")[:l_max]]
        active[s, top] = True

    if not active.any(axis=0).all():
        if l_max == 1:
            active = _daosa_support_single_link(w)
        else:
            active = _daosa_support_lp(w, l_max)
        # Drop zero-weight activations except one per otherwise-uncovered
        # column, so outputs stay fixed points of the projection.
        for j in range(n_rf):
            sel = np.flatnonzero(active[:, j])
            pos = sel[w[sel, j] > 0]
            if pos.size:
                active[:, j] = False
                active[pos, j] = True
            else:
                active[:, j] = False
                active[sel[0], j] = True

    full_mask = np.repeat(active, sa, axis=0)
    mapped = _project_values(x, arch.element, arch.n_bits)
    return np.where(full_mask, mapped, 0.0 + 0.0j)


def project(x: np.ndarray, arch: Architecture) -> np.ndarray:
    """Project onto the feasible set of the given architecture."""
    if arch.connectivity is Connectivity.FULLY_CONNECTED:
        if arch.element is Element.ANTENNA_SELECTION:
            return project_antenna_selection(x)
        return project_elementwise(x, arch)
    if arch.connectivity is Connectivity.AOSA:
        return project_aosa(x, arch)
    return project_daosa(x, arch)


def _values_in_element_set(x: np.ndarray, element: Element, n_bits: int) -> np.ndarray:
    """Boolean mask of entries belonging to the element set."""
    if element is Element.UPS:
        return np.abs(np.abs(x) - 1.0) <= _MOD_TOL
    if element is Element.QPS:
        grid = _qps_grid(n_bits)
        return (np.abs(x[..., None] - grid) <= _MOD_TOL).any(axis=-1)
    if element is Element.SI:
        return (np.abs(x - 1.0) <= _MOD_TOL) | (np.abs(x + 1.0) <= _MOD_TOL)
    if element is Element.SWITCH:
        return (np.abs(x) <= _MOD_TOL) | (np.abs(x - 1.0) <= _MOD_TOL)
    if element is Element.DPS:
        return np.abs(x) <= 2.0 + _MOD_TOL
    raise ConfigurationError(f"element: {element} has no elementwise set")


def _element_set_contains_zero(element: Element) -> bool:
    return element in (Element.SWITCH, Element.DPS)


def in_feasible_set(x: np.ndarray, arch: Architecture) -> bool:
    """Check membership in the architecture's feasible set.

    Discrete structure (supports, 0/1 patterns) is checked exactly;
    continuous moduli are checked to within a few ulp since values like
    unit modulus are not exactly representable.
    """
    x = np.asarray(x, dtype=complex)
    n_tx, n_rf = x.shape

    if arch.connectivity is Connectivity.FULLY_CONNECTED:
        if arch.element is Element.ANTENNA_SELECTION:
            is_zero = x == 0
            is_one = x == 1
            if not np.all(is_zero | is_one):
                return False
            ones = is_one.astype(int)
            return bool(np.all(ones.sum(axis=0) == 1) and np.all(ones.sum(axis=1) <= 1))
        return bool(_values_in_element_set(x, arch.element, arch.n_bits).all())

    n_sa, sa = _resolve_subarrays(arch, n_tx, n_rf)
    blocks = x.reshape(n_sa, sa, n_rf)
    nonzero_block = np.abs(blocks).sum(axis=1) > 0  # (n_sa, n_rf)
    member = _values_in_element_set(x, arch.element, arch.n_bits).reshape(n_sa, sa, n_rf)
    zero_ok = _element_set_contains_zero(arch.element)

    for s in range(n_sa):
        for j in range(n_rf):
            blk = blocks[s, :, j]
            if not nonzero_block[s, j]:
                continue
            if zero_ok:
                # Only nonzero entries need to be set members.
                if not member[s, blk != 0, j].all():
                    return False
            elif not member[s, :, j].all():
                return False

    if arch.connectivity is Connectivity.AOSA:
        return bool((nonzero_block.sum(axis=0) <= arch.l_max).all())

    if not (nonzero_block.sum(axis=1) <= arch.l_max).all():
        return False
    if zero_ok:
        # All-zero columns are coverable by a zero-valued active block.
        return True
    return bool(nonzero_block.any(axis=0).all())
