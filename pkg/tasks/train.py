"""
訓練任務：讀 JSON 設定檔、跑 train_run、回報摘要
"""

import logging
from typing import Optional

from pipeline.config import TrainConfig
from pipeline.trainer import train_run

logger = logging.getLogger(__name__)


class TrainTask:

    def __init__(self, config_path, resume: Optional[str] = None, out_dir: Optional[str] = None):
        self.config_path = config_path
        self.resume = resume
        self.out_dir = out_dir

    def run(self) -> dict:
        cfg = TrainConfig.load(self.config_path)
        result = train_run(cfg, resume=self.resume, out_dir=self.out_dir)
        first = result.metrics[0] if result.metrics else None
        last = result.metrics[-1] if result.metrics else None
        return {
            'task': 'train',
            'run_dir': str(result.run_dir),
            'start_step': result.start_step,
            'steps': cfg.total_steps,
            'final_checkpoint': str(result.final_checkpoint),
            'first': first,
            'last': last,
            'model': result.model.get_status(),
            'prefetch': result.prefetch,
        }
