"""
TrainConfig：一次實驗的完整描述

設定檔為扁平 JSON，欄位與 dataclass 一對一；未知欄位、型別錯誤、超出範圍都丟 ConfigError。
每個欄位的預設值取自 config.py（環境變數可覆寫）。
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import config
from augment.registry import AUGMENTATION_REGISTRY
from losses.contrastive import INTRA_LOSSES, INTRA_MODES, LossWeights
from model.equiav import INTER_ANCHORS
from utils.errors import ConfigError, PersistenceError

logger = logging.getLogger(__name__)

_PRECISIONS = ('float64', 'float32')


def _aug_default(prefix: str):
    return field(default_factory=lambda: float(getattr(config, f'AUG_{prefix}_PROB')))


@dataclass
class TrainConfig:
    # 訓練
    epochs: int = config.EPOCHS
    batch_size: int = config.BATCH_SIZE
    centroid_count: int = config.CENTROID_COUNT
    temperature: float = config.TEMPERATURE
    lambda_inter: float = config.LAMBDA_INTER
    lambda_intra_a: float = config.LAMBDA_INTRA_A
    lambda_intra_v: float = config.LAMBDA_INTRA_V

    # 最佳化器與排程
    lr_init: float = config.LR_INIT
    lr_peak: float = config.LR_PEAK
    warmup_epochs: int = config.WARMUP_EPOCHS
    beta1: float = config.BETA1
    beta2: float = config.BETA2
    weight_decay: float = config.WEIGHT_DECAY
    adam_eps: float = config.ADAM_EPS
    layer_norm_eps: float = config.LAYER_NORM_EPS

    seed: int = config.SEED
    inter_anchor: str = 'centroid'
    intra_mode: str = 'equivariant'
    intra_loss: str = 'equiav'

    # 合成資料
    num_classes: int = config.NUM_CLASSES
    samples_per_class: int = config.SAMPLES_PER_CLASS
    noise_std: float = config.NOISE_STD
    eval_per_class: int = config.EVAL_PER_CLASS

    # 模型形狀
    embed_dim: int = config.EMBED_DIM
    depth: int = config.DEPTH
    heads: int = config.HEADS
    mlp_ratio: int = config.MLP_RATIO
    patch_size: int = config.PATCH_SIZE
    proj_dim: int = config.PROJ_DIM
    audio_shape: tuple = config.AUDIO_SHAPE
    visual_shape: tuple = config.VISUAL_SHAPE

    # 增強機率
    aug_jitter_prob: float = _aug_default('JITTER')
    aug_blur_prob: float = _aug_default('BLUR')
    aug_hflip_prob: float = _aug_default('HFLIP')
    aug_grayscale_prob: float = _aug_default('GRAYSCALE')
    aug_time_shift_prob: float = _aug_default('TIME_SHIFT')
    aug_specaug_prob: float = _aug_default('SPECAUG')

    # 執行
    checkpoint_every: int = config.CHECKPOINT_EVERY
    workers: int = config.BATCH_WORKERS
    precision: str = config.PRECISION
    output_dir: Optional[str] = None

    def __post_init__(self):
        self.audio_shape = self._shape('audio_shape', self.audio_shape, 2)
        self.visual_shape = self._shape('visual_shape', self.visual_shape, 3)
        self._validate()

    # ── 驗證 ──

    @staticmethod
    def _shape(name: str, value, ndim: int) -> tuple:
        if not isinstance(value, (list, tuple)) or len(value) != ndim:
            raise ConfigError(f"{name} must be a list of {ndim} integers, got {value!r}")
        if any(isinstance(v, bool) or not isinstance(v, int) or v <= 0 for v in value):
            raise ConfigError(f"{name} must contain positive integers, got {value!r}")
        return tuple(value)

    def _validate(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type in (int, 'int') and (isinstance(value, bool) or not isinstance(value, int)):
                raise ConfigError(f"{f.name} must be an integer, got {value!r}")
            if f.type in (float, 'float'):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{f.name} must be a number, got {value!r}")
                setattr(self, f.name, float(value))

        positive = ('epochs', 'batch_size', 'centroid_count', 'num_classes', 'samples_per_class',
                    'eval_per_class', 'embed_dim', 'heads', 'mlp_ratio', 'patch_size', 'proj_dim',
                    'workers', 'temperature', 'lr_peak', 'adam_eps', 'layer_norm_eps')
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

        non_negative = ('depth', 'warmup_epochs', 'seed', 'checkpoint_every', 'noise_std',
                        'lr_init', 'weight_decay', 'lambda_inter', 'lambda_intra_a', 'lambda_intra_v')
        for name in non_negative:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")

        for name in ('beta1', 'beta2'):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {getattr(self, name)}")

        for name, p in self.probabilities.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"aug_{name}_prob must be in [0, 1], got {p}")

        choices = (
            ('inter_anchor', INTER_ANCHORS),
            ('intra_mode', INTRA_MODES),
            ('intra_loss', INTRA_LOSSES),
            ('precision', _PRECISIONS),
        )
        for name, allowed in choices:
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")

        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.lr_peak < self.lr_init:
            raise ConfigError(f"lr_peak {self.lr_peak} is below lr_init {self.lr_init}")
        if self.warmup_epochs >= self.epochs:
            raise ConfigError(f"warmup_epochs {self.warmup_epochs} must be below epochs {self.epochs}")
        if self.embed_dim % self.heads:
            raise ConfigError(f"embed_dim {self.embed_dim} is not divisible by heads {self.heads}")
        if self.intra_loss == 'equimod' and self.batch_size < 2:
            raise ConfigError("intra_loss=equimod needs batch_size >= 2")
        if self.dataset_size < self.batch_size:
            raise ConfigError(
                f"dataset has {self.dataset_size} items, fewer than batch_size {self.batch_size}"
            )
        self.loss_weights  # 全部 λ 為 0 時 LossWeights 會丟 ConfigError

    # ── 衍生值 ──

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda_inter, self.lambda_intra_a, self.lambda_intra_v)

    @property
    def probabilities(self) -> dict:
        """augmentation name → 套用機率（AugmentationSampler 用）"""
        return {e.name: getattr(self, f'aug_{e.name}_prob') for e in AUGMENTATION_REGISTRY if e.prob_prefix}

    @property
    def dataset_size(self) -> int:
        return self.num_classes * self.samples_per_class

    @property
    def steps_per_epoch(self) -> int:
        """drop-last：不足一個 batch 的尾巴丟棄"""
        return self.dataset_size // self.batch_size

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps_per_epoch

    @property
    def warmup_steps(self) -> int:
        return self.warmup_epochs * self.steps_per_epoch

    def run_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return config.LOCAL_DATA_DIR / 'runs' / f'seed{self.seed}'

    # ── 序列化 ──

    def to_dict(self) -> dict:
        out = asdict(self)
        out['audio_shape'] = list(self.audio_shape)
        out['visual_shape'] = list(self.visual_shape)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> 'TrainConfig':
        if not isinstance(data, dict):
            raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> 'TrainConfig':
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise PersistenceError(f"cannot read config {path}: {e}") from e
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        cfg = cls.from_dict(data)
        logger.info(f"[config] 載入 {path}（seed={cfg.seed}, S={cfg.centroid_count}, anchor={cfg.inter_anchor}）")
        return cfg

    def save(self, path) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json() + '\n', encoding='utf-8')
        except OSError as e:
            raise PersistenceError(f"cannot write config {path}: {e}") from e
        return path

    def replace(self, **changes) -> 'TrainConfig':
        data = self.to_dict()
        data.update(changes)
        return self.from_dict(data)
