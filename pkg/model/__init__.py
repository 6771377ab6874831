"""
model：encoder / transformation predictor / projection heads
"""

from model.base import Module, truncated_normal
from model.encoder import Encoder, EncoderConfig, encode, patchify
from model.equiav import (
    INTER_ANCHORS,
    EmbeddingSet,
    EquiAVModel,
    ModelConfig,
    build_model,
    equivariance_similarity,
)
from model.heads import ProjectionHead, project
from model.layers import FeedForward, LayerNorm, Linear, MultiHeadAttention, TransformerBlock
from model.predictor import (
    TransformationPredictor,
    compute_centroid,
    nearest_to_centroid,
    predict_equivariant,
)

__all__ = [
    'Module', 'truncated_normal',
    'Encoder', 'EncoderConfig', 'encode', 'patchify',
    'INTER_ANCHORS', 'EmbeddingSet', 'EquiAVModel', 'ModelConfig', 'build_model',
    'equivariance_similarity',
    'ProjectionHead', 'project',
    'FeedForward', 'LayerNorm', 'Linear', 'MultiHeadAttention', 'TransformerBlock',
    'TransformationPredictor', 'compute_centroid', 'nearest_to_centroid', 'predict_equivariant',
]
