"""pytest 共用 fixture 與 path 設定"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 讓 tests/ 內的 import 能找到專案根目錄的模組
PROJECT_ROOT = Path(__file__).parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

# 小尺寸設定：gradcheck / loss oracle / 單步訓練都用這組
TINY_MODEL = dict(
    audio_shape=(8, 8),
    visual_shape=(8, 8, 3),
    patch_size=4,
    embed_dim=8,
    depth=1,
    heads=2,
    mlp_ratio=2,
    proj_dim=4,
    seed=0,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model_cfg():
    from model import ModelConfig
    return ModelConfig(**TINY_MODEL)


@pytest.fixture
def tiny_model(tiny_model_cfg):
    from model import build_model
    return build_model(tiny_model_cfg)


@pytest.fixture
def tiny_train_cfg(tmp_path):
    from pipeline.config import TrainConfig
    return TrainConfig(
        **TINY_MODEL,
        epochs=2,
        batch_size=4,
        centroid_count=2,
        num_classes=4,
        samples_per_class=4,
        eval_per_class=2,
        warmup_epochs=1,
        output_dir=str(tmp_path / 'run'),
    )
