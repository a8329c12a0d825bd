"""Reproducible studies: the phase diagram and four application demos."""
from .blind_deconv import BlindDeconvReport, demo_blind_deconv
from .doa import DoaReport, DoaScenario, DoaStudy, demo_doa, doa_study
from .phase import PhaseGridResult, PhaseGridSpec, run_phase_diagram
from .spikes_sines import SpikesSinesReport, demo_spikes_sines
from .texture import SyntheticTexture, TextureReport, demo_texture

__all__ = [
    "BlindDeconvReport",
    "demo_blind_deconv",
    "DoaReport",
    "DoaScenario",
    "DoaStudy",
    "demo_doa",
    "doa_study",
    "PhaseGridResult",
    "PhaseGridSpec",
    "run_phase_diagram",
    "SpikesSinesReport",
    "demo_spikes_sines",
    "SyntheticTexture",
    "TextureReport",
    "demo_texture",
]
