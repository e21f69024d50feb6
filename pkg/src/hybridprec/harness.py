"""Config-driven Monte-Carlo sweeps over SNR and architectures.

Experiments are described by a flat text config with dotted keys. Each
trial draws one channel realization, builds the fully digital target,
designs every architecture on that shared channel (paired comparisons),
and evaluates spectral efficiency across the SNR grid. Trial seeds are
derived from the master seed with an avalanche mix, so results are a pure
function of the config and independent of worker count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .admm import AdmmParams, design_hybrid
from .baseline import bd_fully_digital_precoder, fully_digital_combiner
from .channel import ChannelParams, SystemConfig, sample_channel, sample_uncorrelated_channel
from .errors import ConfigurationError, UnsupportedArchitectureError
from .evaluation import EvalParams, fully_digital_power, power_consumption, residual_metrics, spectral_efficiency
from .projections import Architecture, parse_architecture, validate_architecture

__all__ = [
    "Baselines",
    "ExperimentConfig",
    "ResultRow",
    "mix_seed",
    "parse_config",
    "run_sweep",
    "write_results",
]

FULLY_DIGITAL_LABEL = "fully-digital"
MU0_SUFFIX = "+mu0"
CSV_HEADER = "arch,l_max,element,snr_db,trials,mean_se,std_se,ci95,residual,leakage,power_w"


@dataclass(frozen=True)
class Baselines:
    fully_digital: bool = False
    admm_mu0: bool = False


@dataclass
class ExperimentConfig:
    system: SystemConfig
    channel: ChannelParams
    architectures: list[Architecture]
    admm: AdmmParams
    snr_grid_db: list[float]
    n_trials: int
    master_seed: int
    baselines: Baselines = field(default_factory=Baselines)
    output_path: str = "results.csv"
    threads: int = 1

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ConfigurationError("n_trials: must be >= 1")
        if not self.snr_grid_db:
            raise ConfigurationError("snr_grid_db: must be non-empty")
        if not self.architectures:
            raise ConfigurationError("architectures: must be non-empty")
        if self.threads < 1:
            raise ConfigurationError("threads: must be >= 1")
        for arch in self.architectures:
            validate_architecture(arch, self.system.n_tx, self.system.n_rf_tx)


@dataclass
class ResultRow:
    arch: str
    l_max: int
    element: str
    snr_db: float
    trials: int
    mean_se: float
    std_se: float
    ci95: float
    residual: float
    leakage: float
    power_w: float


def mix_seed(master_seed: int, trial: int) -> int:
    """Avalanche mix of (master seed, trial index) into a 64-bit seed.

    Injective in the trial index for any fixed master seed, so trial
    streams never collide.
    """
    mask = (1 << 64) - 1
    z = (master_seed + 0x9E3779B97F4A7C15 * (trial + 1)) & mask
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & mask
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & mask
    z ^= z >> 31
    return z


# --------------------------------------------------------------------------
# Config file parsing: flat "dotted.key = value" lines.
# --------------------------------------------------------------------------

_SCHEMA: dict[str, tuple[str, bool]] = {
    # key -> (type, required)
    "system.n_tx": ("int", True),
    "system.n_rx": ("int", True),
    "system.n_users": ("int", True),
    "system.n_streams": ("int", True),
    "system.n_rf_tx": ("int", True),
    "system.n_carriers": ("int", False),
    "system.f_c": ("float", False),
    "system.bandwidth": ("float", False),
    "system.noise_var": ("float", False),
    "system.rho_u": ("float", False),
    "channel.mode": ("str", False),
    "channel.n_clusters": ("int", False),
    "channel.n_rays": ("int", False),
    "channel.angular_spread_deg": ("float", False),
    "channel.los_enabled": ("bool", False),
    "channel.los_power_ratio": ("float", False),
    "channel.delay_spread": ("float", False),
    "channel.beam_split_enabled": ("bool", False),
    "admm.rho": ("float", False),
    "admm.eta": ("float", False),
    "admm.mu": ("float", False),
    "admm.max_iters": ("int", False),
    "admm.ridge": ("float", False),
    "architectures": ("str_list", True),
    "snr_grid_db": ("float_list", True),
    "n_trials": ("int", True),
    "master_seed": ("int", True),
    "baselines.fully_digital": ("bool", False),
    "baselines.admm_mu0": ("bool", False),
    "output_path": ("str", False),
    "threads": ("int", False),
}


def _coerce(key: str, kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind == "str":
            return raw
        if kind == "float_list":
            return [float(v.strip()) for v in raw.split(",") if v.strip()]
        if kind == "str_list":
            return [v.strip() for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"{key}: cannot parse '{raw}' as {kind}") from exc
    raise AssertionError(kind)


def _read_flat_config(path: str | Path) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got '{stripped}'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split(" #", 1)[0].strip()
        if key not in _SCHEMA:
            raise ConfigurationError(f"{key}: unknown configuration key (line {lineno})")
        if key in raw:
            raise ConfigurationError(f"{key}: duplicated (line {lineno})")
        raw[key] = value
    return raw


def parse_config(path: str | Path) -> ExperimentConfig:
    """Parse and fully validate an experiment config file."""
    raw = _read_flat_config(path)
    for key, (kind, required) in _SCHEMA.items():
        if required and key not in raw:
            raise ConfigurationError(f"{key}: required key is missing")
    vals = {key: _coerce(key, _SCHEMA[key][0], raw[key]) for key in raw}

    def group(prefix: str) -> dict:
        return {k.split(".", 1)[1]: v for k, v in vals.items() if k.startswith(prefix + ".")}

    system = SystemConfig(**group("system"))
    channel = ChannelParams(**group("channel"))
    admm = AdmmParams(**group("admm"))
    baselines = Baselines(**group("baselines"))
    architectures = [parse_architecture(s) for s in vals["architectures"]]
    return ExperimentConfig(
        system=system,
        channel=channel,
        architectures=architectures,
        admm=admm,
        snr_grid_db=vals["snr_grid_db"],
        n_trials=vals["n_trials"],
        master_seed=vals["master_seed"],
        baselines=baselines,
        output_path=vals.get("output_path", "results.csv"),
        threads=vals.get("threads", 1),
    )


# --------------------------------------------------------------------------
# Sweep execution.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _PlanEntry:
    label: str
    arch_index: int  # -1 for the fully digital baseline
    mu0: bool = False


def _row_plan(cfg: ExperimentConfig) -> list[_PlanEntry]:
    plan: list[_PlanEntry] = []
    if cfg.baselines.fully_digital:
        plan.append(_PlanEntry(FULLY_DIGITAL_LABEL, -1))
    for i, arch in enumerate(cfg.architectures):
        plan.append(_PlanEntry(arch.label, i))
        if cfg.baselines.admm_mu0:
            plan.append(_PlanEntry(arch.label + MU0_SUFFIX, i, mu0=True))
    return plan


@dataclass
class _TrialOutcome:
    trial: int
    se: dict[str, list[float]] = field(default_factory=dict)
    residual: dict[str, float] = field(default_factory=dict)
    leakage: dict[str, float] = field(default_factory=dict)
    error: str | None = None


def _trial_worker(cfg: ExperimentConfig, trial: int) -> _TrialOutcome:
    out = _TrialOutcome(trial=trial)
    try:
        seed = mix_seed(cfg.master_seed, trial)
        ch_rng = np.random.default_rng([seed, 0])
        if cfg.channel.mode == "uncorrelated":
            channels = sample_uncorrelated_channel(cfg.system, ch_rng)
        else:
            channels = sample_channel(cfg.system, cfg.channel, ch_rng)

        f_opt = bd_fully_digital_precoder(channels, cfg.system)
        evals = [EvalParams.from_snr_db(s, cfg.system.rho_u) for s in cfg.snr_grid_db]

        for entry in _row_plan(cfg):
            if entry.arch_index < 0:
                prec = f_opt
            else:
                arch = cfg.architectures[entry.arch_index]
                prm = cfg.admm if not entry.mu0 else AdmmParams(
                    rho=cfg.admm.rho,
                    eta=cfg.admm.eta,
                    mu=0.0,
                    max_iters=cfg.admm.max_iters,
                    ridge=cfg.admm.ridge,
                )
                rng = np.random.default_rng([seed, 1, entry.arch_index])
                prec, _ = design_hybrid(f_opt, channels, cfg.system, arch, prm, rng)
            comb = fully_digital_combiner(channels, prec, cfg.system)
            res = residual_metrics(f_opt, prec, channels)
            out.se[entry.label] = [
                spectral_efficiency(channels, prec, comb, ev).mean_sum_se for ev in evals
            ]
            out.residual[entry.label] = res.approx_residual
            out.leakage[entry.label] = res.mean_leakage
    except Exception as exc:  # noqa: BLE001 - any per-trial failure excludes the trial
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def _sample_std(values: list[float], mean: float) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def _power_for(entry: _PlanEntry, cfg: ExperimentConfig) -> float:
    if entry.arch_index < 0:
        return fully_digital_power(cfg.system)
    try:
        return power_consumption(cfg.architectures[entry.arch_index], cfg.system)
    except UnsupportedArchitectureError:
        return float("nan")


def run_sweep(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    """Execute all trials and aggregate per (architecture, SNR) rows.

    Returns the rows plus a manifest dict recording the config, seed, tool
    version, wall time and any excluded trials. Aggregation happens
    centrally over trial-ordered values, so worker count does not affect
    the result.
    """
    start = time.time()
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            outcomes = list(pool.map(_trial_worker, [cfg] * cfg.n_trials, range(cfg.n_trials)))
    else:
        outcomes = [_trial_worker(cfg, t) for t in range(cfg.n_trials)]
    outcomes.sort(key=lambda o: o.trial)

    ok = [o for o in outcomes if o.error is None]
    excluded = [(o.trial, o.error) for o in outcomes if o.error is not None]
    if not ok:
        raise RuntimeError(f"all {cfg.n_trials} trials failed; first error: {excluded[0][1]}")

    rows: list[ResultRow] = []
    for entry in _row_plan(cfg):
        if entry.arch_index < 0:
            l_max, element = 0, "digital"
        else:
            arch = cfg.architectures[entry.arch_index]
            l_max = arch.l_max
            element = arch.element.value + (str(arch.n_bits) if arch.n_bits else "")
        power_w = _power_for(entry, cfg)
        residual = _mean([o.residual[entry.label] for o in ok])
        leakage = _mean([o.leakage[entry.label] for o in ok])
        for si, snr in enumerate(cfg.snr_grid_db):
            vals = [o.se[entry.label][si] for o in ok]
            mean = _mean(vals)
            std = _sample_std(vals, mean)
            rows.append(
                ResultRow(
                    arch=entry.label,
                    l_max=l_max,
                    element=element,
                    snr_db=snr,
                    trials=len(ok),
                    mean_se=mean,
                    std_se=std,
                    ci95=1.96 * std / math.sqrt(len(vals)),
                    residual=residual,
                    leakage=leakage,
                    power_w=power_w,
                )
            )

    manifest = {
        "config": {
            "system": asdict(cfg.system),
            "channel": asdict(cfg.channel),
            "admm": asdict(cfg.admm),
            "architectures": [a.label for a in cfg.architectures],
            "snr_grid_db": cfg.snr_grid_db,
            "n_trials": cfg.n_trials,
            "master_seed": cfg.master_seed,
            "baselines": asdict(cfg.baselines),
            "output_path": cfg.output_path,
            "threads": cfg.threads,
        },
        "master_seed": cfg.master_seed,
        "tool_version": __version__,
        "wall_time_s": time.time() - start,
        "n_excluded": len(excluded),
        "excluded_trials": [{"trial": t, "error": e} for t, e in excluded],
    }
    return rows, manifest


def _fmt(x: float) -> str:
    return format(x, ".12g")


def write_results(rows: list[ResultRow], manifest: dict, path: str | Path) -> tuple[Path, Path]:
    """Write the results CSV and a JSON manifest next to it."""
    if not rows:
        raise ConfigurationError("rows: refusing to write an empty result set")
    path = Path(path)
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r.arch,
                    str(r.l_max),
                    r.element,
                    _fmt(r.snr_db),
                    str(r.trials),
                    _fmt(r.mean_se),
                    _fmt(r.std_se),
                    _fmt(r.ci95),
                    _fmt(r.residual),
                    _fmt(r.leakage),
                    _fmt(r.power_w),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path, manifest_path
