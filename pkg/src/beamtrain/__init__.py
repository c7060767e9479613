"""Near-field multi-beam training: codebooks, sweeps and channel reconstruction."""

from .channel import ChannelScene, NoiseModel, Scatterer, derive_noise, sample_scene, synthesize_channel
from .codebook import Codebook, CodewordMeta, build_dft_codebook, build_polar_codebook, codeword_at
from .errors import BeamTrainError, ConfigError, DimensionError, GeometryDomainError
from .geometry import ArrayGeometry, PolarPoint, element_distance, fresnel_rayleigh, near_field_steering
from .metrics import Scheme, TrialRecord, achievable_rate, l2_error, min_overhead_for_fraction
from .sweep import FeedbackReport, SweepResult, beam_sweep, select_top_k

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "BeamTrainError",
    "ChannelScene",
    "Codebook",
    "CodewordMeta",
    "ConfigError",
    "DimensionError",
    "FeedbackReport",
    "GeometryDomainError",
    "NoiseModel",
    "PolarPoint",
    "Scatterer",
    "Scheme",
    "SweepResult",
    "TrialRecord",
    "achievable_rate",
    "beam_sweep",
    "build_dft_codebook",
    "build_polar_codebook",
    "codeword_at",
    "derive_noise",
    "element_distance",
    "fresnel_rayleigh",
    "l2_error",
    "min_overhead_for_fraction",
    "near_field_steering",
    "sample_scene",
    "select_top_k",
    "synthesize_channel",
]
