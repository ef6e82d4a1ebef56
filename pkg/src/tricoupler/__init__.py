"""Supermodes and type-II down-conversion design of a three-guide lithium niobate coupler."""

from .material import MaterialModel, Polarization, calibrate_contrast, core_index, substrate_index
from .modesolver import ChannelMode, CouplerGeometry, solve_channel_modes, solve_coupler_y, solve_slab_z
from .spdc import assemble_state, entanglement_metrics, enumerate_processes

__all__ = [
    "ChannelMode",
    "CouplerGeometry",
    "MaterialModel",
    "Polarization",
    "assemble_state",
    "calibrate_contrast",
    "core_index",
    "entanglement_metrics",
    "enumerate_processes",
    "solve_channel_modes",
    "solve_coupler_y",
    "solve_slab_z",
    "substrate_index",
]
