"""
losses：intra / inter 對比損失、EquiMod 對照、oracle
"""

from losses.contrastive import (
    INTRA_LOSSES,
    INTRA_MODES,
    LossOutput,
    LossWeights,
    anchor_losses,
    cosine_logits,
    inter_loss,
    intra_loss,
    nt_xent,
    similarity_matrix,
    total_loss,
)
from losses.equimod import GradientFactors, equimod_loss, gradient_factor_check

__all__ = [
    'INTRA_LOSSES', 'INTRA_MODES', 'LossOutput', 'LossWeights',
    'anchor_losses', 'cosine_logits', 'inter_loss', 'intra_loss', 'nt_xent', 'similarity_matrix', 'total_loss',
    'GradientFactors', 'equimod_loss', 'gradient_factor_check',
]
