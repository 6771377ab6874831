"""
pipeline：合成資料、batch 組裝、訓練迴圈、checkpoint
"""

from pipeline.batch import Batch, BatchBuilder, ModalityBatch
from pipeline.checkpoint import (
    Checkpoint,
    checkpoint_from_model,
    load_checkpoint,
    restore,
    save_checkpoint,
    write_checkpoint,
)
from pipeline.config import TrainConfig
from pipeline.data import (
    SyntheticDataset,
    SyntheticPairConfig,
    generate_synthetic_pairs,
    nearest_template_accuracy,
    normalize_audio,
    split_dataset,
)
from pipeline.prefetch import BatchPrefetcher
from pipeline.trainer import TrainResult, compute_losses, load_trained, lr_at, train_run, train_step

__all__ = [
    'Batch', 'BatchBuilder', 'ModalityBatch',
    'Checkpoint', 'checkpoint_from_model', 'load_checkpoint', 'restore', 'save_checkpoint', 'write_checkpoint',
    'TrainConfig',
    'SyntheticDataset', 'SyntheticPairConfig', 'generate_synthetic_pairs', 'nearest_template_accuracy',
    'normalize_audio', 'split_dataset',
    'BatchPrefetcher',
    'TrainResult', 'compute_losses', 'load_trained', 'lr_at', 'train_run', 'train_step',
]
