"""
augment：增強的抽樣、套用與向量化
"""

from augment.registry import AUGMENTATION_REGISTRY, VECTOR_DIMS, AugmentationEntry
from augment.sampler import AugmentationSampler, sample_spec, sample_specs
from augment.spec import (
    AUDIO,
    MODALITIES,
    VISUAL,
    AugmentationSpec,
    ModalityInput,
    identity_spec,
)
from augment.transforms import apply
from augment.vector import AugmentationVector, default_vector, parameterize

__all__ = [
    'AUDIO', 'VISUAL', 'MODALITIES',
    'AUGMENTATION_REGISTRY', 'VECTOR_DIMS', 'AugmentationEntry',
    'AugmentationSampler', 'sample_spec', 'sample_specs',
    'AugmentationSpec', 'ModalityInput', 'identity_spec',
    'apply', 'AugmentationVector', 'default_vector', 'parameterize',
]
