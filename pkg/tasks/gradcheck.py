"""
梯度檢查任務

隨機初始化的模型 + 2 筆 batch，對完整加權損失的每個參數抽樣座標做中央差分（float64, step 1e-5）。
max_coords=0 檢查全部座標。相對誤差分母下限 REL_ERROR_FLOOR 隨報表輸出。
"""

import logging
from typing import Optional

from numerics import default_dtype, gradcheck
from numerics.gradcheck import REL_ERROR_FLOOR
from pipeline.batch import BatchBuilder
from pipeline.config import TrainConfig
from pipeline.data import generate_synthetic_pairs
from pipeline.trainer import compute_losses
from model.equiav import build_model
from utils.errors import ConfigError
from utils.rng import STREAM_CHECK, keyed_rng

logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_STEP = 1e-5


class GradCheckTask:

    def __init__(self, seed: int = 0, max_coords: Optional[int] = 4, cfg: Optional[TrainConfig] = None):
        if max_coords is not None and max_coords < 0:
            raise ConfigError(f"max_coords must be >= 0, got {max_coords}")
        self.seed = seed
        self.max_coords = max_coords or None
        base = cfg or TrainConfig()
        self.cfg = base.replace(seed=seed, batch_size=2, precision='float64')

    def run(self) -> dict:
        cfg = self.cfg
        with default_dtype('float64'):
            model = build_model(cfg)
            batch = BatchBuilder(generate_synthetic_pairs(cfg), cfg).build(0)
            params = model.parameters()
            result = gradcheck(
                lambda: compute_losses(model, batch, cfg).total,
                params,
                step=GRADCHECK_STEP,
                max_coords=self.max_coords,
                rng=keyed_rng(self.seed, STREAM_CHECK),
            )
        passed = result.max_rel_error < GRADCHECK_TOLERANCE
        log = logger.info if passed else logger.warning
        log(f"[gradcheck] {len(params)} 個參數、{result.checked} 個座標，最大相對誤差 {result.max_rel_error:.2e}")
        return {
            'task': 'gradcheck',
            'seed': self.seed,
            'parameters': len(params),
            'tolerance': GRADCHECK_TOLERANCE,
            'rel_error_floor': REL_ERROR_FLOOR,
            'max_coords': self.max_coords or 0,
            'passed': passed,
            **result.to_dict(),
        }
