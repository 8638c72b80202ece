"""Blind video quality assessment with a prior-token transformer.

Core flow: per-frame feature maps plus content/distortion prior embeddings
are encoded by a transformer whose quality-token output feeds a GRU; frame
scores are pooled with a memory/current blend into one video score.
"""

__version__ = "0.1.0"

from .encoder import AblationConfig, EncoderConfig
from .model import ModelConfig, init_model, load_params, predict_video, save_params
from .temporal import PoolingConfig

__all__ = [
    "__version__",
    "AblationConfig",
    "EncoderConfig",
    "ModelConfig",
    "PoolingConfig",
    "init_model",
    "load_params",
    "predict_video",
    "save_params",
]
