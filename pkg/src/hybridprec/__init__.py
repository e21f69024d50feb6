"""Hybrid analog/digital precoding for multiuser wideband MIMO.

Library layout: channel generation (``channel``), the fully digital
block-diagonalization baseline (``baseline``), feasible-set projections
for all analog architectures (``projections``), the iterative ADMM design
(``admm``), spectral-efficiency and power evaluation (``evaluation``) and
the Monte-Carlo experiment harness plus CLI (``harness``, ``cli``).
"""

__version__ = "0.1.0"

from .admm import (
    AdmmDiagnostics,
    AdmmParams,
    AdmmState,
    HybridPrecoder,
    design_hybrid,
)
from .baseline import (
    Combiner,
    DigitalPrecoder,
    bd_fully_digital_precoder,
    fully_digital_combiner,
    stacked_channel,
)
from .channel import (
    ChannelParams,
    ChannelRealization,
    SystemConfig,
    sample_channel,
    sample_uncorrelated_channel,
    subcarrier_frequencies,
    upa_response,
)
from .evaluation import (
    EvalParams,
    EvalRecord,
    PowerModel,
    power_consumption,
    residual_metrics,
    spectral_efficiency,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    mix_seed,
    parse_config,
    run_sweep,
    write_results,
)
from .projections import (
    Architecture,
    Connectivity,
    Element,
    in_feasible_set,
    parse_architecture,
    project,
)

__all__ = [
    "__version__",
    "AdmmDiagnostics",
    "AdmmParams",
    "AdmmState",
    "Architecture",
    "ChannelParams",
    "ChannelRealization",
    "Combiner",
    "Connectivity",
    "DigitalPrecoder",
    "Element",
    "EvalParams",
    "EvalRecord",
    "ExperimentConfig",
    "HybridPrecoder",
    "PowerModel",
    "ResultRow",
    "SystemConfig",
    "bd_fully_digital_precoder",
    "design_hybrid",
    "fully_digital_combiner",
    "in_feasible_set",
    "mix_seed",
    "parse_architecture",
    "parse_config",
    "power_consumption",
    "project",
    "residual_metrics",
    "run_sweep",
    "sample_channel",
    "sample_uncorrelated_channel",
    "spectral_efficiency",
    "stacked_channel",
    "subcarrier_frequencies",
    "upa_response",
    "write_results",
]
