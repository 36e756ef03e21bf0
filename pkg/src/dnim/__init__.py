"""Dynamic non-progressive influence maximization on temporal graphs."""

from .agent import (
    AgentConfig,
    TrainResult,
    load_checkpoint,
    save_checkpoint,
    select_seeds_by_policy,
    train,
)
from .autodiff import ParameterSet, Tensor, grad_check, no_grad
from .backend import USE_NUMBA, backend_name
from .influence_oracle import (
    DEFAULT_EVAL_REPS,
    DEFAULT_REWARD_REPS,
    InfluenceEstimate,
    estimate_influence,
    estimate_with_stats,
    marginal_gain,
)
from .seed_selectors import degree_top_k, greedy_lazy, random_k
from .social_sis import (
    MONTH_SECONDS,
    ActivationLog,
    DiffusionParams,
    DiffusionStats,
    fraction_active_activations,
    influence,
    run_diffusion,
    window_activity,
)
from .synth import heavy_tailed_graph, hub_graph
from .temporal_graph import EdgeListError, TemporalGraph, parse_edge_list
from .tgn import EmbeddingConfig, embed_graph

__all__ = [
    "ActivationLog",
    "AgentConfig",
    "DEFAULT_EVAL_REPS",
    "DEFAULT_REWARD_REPS",
    "DiffusionParams",
    "DiffusionStats",
    "EdgeListError",
    "EmbeddingConfig",
    "InfluenceEstimate",
    "MONTH_SECONDS",
    "ParameterSet",
    "TemporalGraph",
    "Tensor",
    "TrainResult",
    "USE_NUMBA",
    "backend_name",
    "degree_top_k",
    "embed_graph",
    "estimate_influence",
    "estimate_with_stats",
    "fraction_active_activations",
    "grad_check",
    "greedy_lazy",
    "heavy_tailed_graph",
    "hub_graph",
    "influence",
    "load_checkpoint",
    "marginal_gain",
    "no_grad",
    "parse_edge_list",
    "random_k",
    "run_diffusion",
    "save_checkpoint",
    "select_seeds_by_policy",
    "train",
    "window_activity",
]

__version__ = "0.1.0"
