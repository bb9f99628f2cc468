"""Bounds and simulation for variable-length feedback codes under a strict delay constraint."""

from ._backend import NAME as BACKEND
from .bounds import (
    AtrBound,
    OptimizerSettings,
    VlfParams,
    approx_atr,
    lemma1_max_m,
    lemma2_etau_cap,
    nonfeedback_rate,
    sweep,
    theorem1_atr,
    theorem2_gap_bound,
)
from .channel import Channel, ChannelInfo, channel_info, info_density, make_bec, make_bsc, optimize_input_dist
from .sim import SimConfig, SimStats, exact_enumerate, run_pairwise, run_sim, run_trial

__all__ = [
    "BACKEND",
    "AtrBound",
    "Channel",
    "ChannelInfo",
    "OptimizerSettings",
    "SimConfig",
    "SimStats",
    "VlfParams",
    "approx_atr",
    "channel_info",
    "exact_enumerate",
    "info_density",
    "lemma1_max_m",
    "lemma2_etau_cap",
    "make_bec",
    "make_bsc",
    "nonfeedback_rate",
    "optimize_input_dist",
    "run_pairwise",
    "run_sim",
    "run_trial",
    "sweep",
    "theorem1_atr",
    "theorem2_gap_bound",
]
