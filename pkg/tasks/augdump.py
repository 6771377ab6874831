"""
增強抽樣傾印：印出 spec 與其向量，供人工檢查 / 重現
"""

import logging
from typing import Optional

import config
from augment.registry import VECTOR_DIMS
from augment.sampler import AugmentationSampler
from augment.spec import AUDIO, check_modality
from augment.vector import parameterize
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


class AugDumpTask:

    def __init__(self, modality: str, seed: int = 0, count: int = 1, shape: Optional[tuple] = None):
        check_modality(modality)
        if count < 1:
            raise ConfigError(f"count must be >= 1, got {count}")
        self.modality = modality
        self.seed = seed
        self.count = count
        default = config.AUDIO_SHAPE if modality == AUDIO else config.VISUAL_SHAPE
        self.shape = tuple(shape or default)[:2]

    def run(self) -> dict:
        sampler = AugmentationSampler(seed=self.seed)
        records = []
        for i in range(self.count):
            spec = sampler.sample(self.modality, self.shape, i)
            records.append({
                'draw': i,
                'spec': spec.to_dict(),
                'vector': parameterize(spec).tolist(),
            })
        logger.debug(f"[augdump] {self.modality} seed={self.seed}：{self.count} 筆")
        return {
            'task': 'augdump',
            'modality': self.modality,
            'seed': self.seed,
            'vector_dim': VECTOR_DIMS[self.modality],
            'records': records,
        }
