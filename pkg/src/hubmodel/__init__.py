"""Latent network inference from grouped data with the Hub Model."""

__version__ = "0.1.0"

from .core import (
    AdjacencyMatrix,
    FitResult,
    GroupedData,
    HubAssignments,
    HubWeights,
    Responsibilities,
    load_grouped_data,
    load_matrix,
    save_matrix,
)
from .descriptive import co_occurrence, half_weight
from .hub_model import (
    EmConfig,
    e_step,
    fit_em,
    fit_known_hub,
    group_probability,
    log_likelihood,
    m_step,
    mom_pair_estimate,
)
from .simulate import SimConfig, simulate
