"""Patch-based video deflickering and keyframe propagation."""
from .blend import BlendConfig, blend, blend_accurate, blend_balanced, blend_fast
from .frameio import SequenceError, Video, load_sequence, save_sequence
from .interp import InterpConfig, KeyframeSet, extend_single_keyframe, interpolate
from .nnf import LossSpec, MatchConfig, MatchError, estimate_nnf, estimate_nnf_batch, patch_error
from .remap import BlendAccumulator, remap
from .schedule import NNFScheduler

__version__ = "0.1.0"

__all__ = [
    "BlendAccumulator", "BlendConfig", "InterpConfig", "KeyframeSet", "LossSpec", "MatchConfig", "MatchError",
    "NNFScheduler", "SequenceError", "Video", "blend", "blend_accurate", "blend_balanced", "blend_fast",
    "estimate_nnf", "estimate_nnf_batch", "extend_single_keyframe", "interpolate", "load_sequence",
    "patch_error", "remap", "save_sequence",
]
