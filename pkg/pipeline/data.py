"""
合成 audio-visual 配對資料

每個類別有一個低解析度 latent grid（g×g×4），bilinear 放大後：
- visual template = 0.5 + 0.25 · latent[..., :3]
- audio template  = 0.6 · latent[..., 3] + 0.8 · mean(latent[..., :3])（與 visual 共用前 3 通道 → 跨模態相關）

audio 先在 log-mel 尺度生成（AUDIO_NORM_MEAN / AUDIO_NORM_STD），再標準化後存入 dataset。
每筆樣本 = 類別 template + 獨立高斯雜訊；train / eval 共用 template，雜訊串流不同。
"""

import logging
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

import config
from augment.spec import AUDIO, VISUAL, ModalityInput, check_modality
from augment.transforms import resize_bilinear
from utils.errors import ConfigError, ContractError
from utils.rng import STREAM_DATA, STREAM_EVAL, keyed_rng

logger = logging.getLogger(__name__)

SPLITS = ('train', 'eval')
_LATENT_GRID = 4
_LATENT_CHANNELS = 4
_VISUAL_SCALE = 0.25


@dataclass(frozen=True)
class SyntheticPairConfig:
    num_classes: int = config.NUM_CLASSES
    samples_per_class: int = config.SAMPLES_PER_CLASS
    noise_std: float = config.NOISE_STD
    seed: int = config.SEED
    audio_shape: tuple = config.AUDIO_SHAPE
    visual_shape: tuple = config.VISUAL_SHAPE
    audio_norm_mean: float = config.AUDIO_NORM_MEAN
    audio_norm_std: float = config.AUDIO_NORM_STD

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"synthetic data needs at least 2 classes, got K={self.num_classes}")
        if self.samples_per_class <= 0:
            raise ConfigError(f"samples_per_class must be positive, got {self.samples_per_class}")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be non-negative, got {self.noise_std}")
        if self.audio_norm_std <= 0:
            raise ConfigError(f"audio_norm_std must be positive, got {self.audio_norm_std}")

    @classmethod
    def from_config(cls, cfg, split: str = 'train') -> 'SyntheticPairConfig':
        """由 TrainConfig 取出資料欄位；eval split 每類筆數改用 eval_per_class"""
        kwargs = {f.name: getattr(cfg, f.name) for f in fields(cls) if hasattr(cfg, f.name)}
        if split == 'eval' and hasattr(cfg, 'eval_per_class'):
            kwargs['samples_per_class'] = cfg.eval_per_class
        for key in ('audio_shape', 'visual_shape'):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class SyntheticDataset:
    """class-major 排列：第 i 筆的類別為 labels[i]"""

    audio: np.ndarray               # M × T × F（已標準化）
    visual: np.ndarray              # M × H × W × 3
    labels: np.ndarray              # M
    audio_templates: np.ndarray     # K × T × F
    visual_templates: np.ndarray    # K × H × W × 3
    split: str = 'train'

    def __post_init__(self):
        m = len(self.labels)
        if self.audio.shape[0] != m or self.visual.shape[0] != m:
            raise ContractError(
                f"dataset streams are not aligned: audio {self.audio.shape[0]}, "
                f"visual {self.visual.shape[0]}, labels {m}"
            )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def num_classes(self) -> int:
        return self.audio_templates.shape[0]

    def inputs(self, modality: str) -> np.ndarray:
        check_modality(modality)
        return self.audio if modality == AUDIO else self.visual

    def templates(self, modality: str) -> np.ndarray:
        check_modality(modality)
        return self.audio_templates if modality == AUDIO else self.visual_templates

    def pair(self, i: int) -> tuple[ModalityInput, ModalityInput]:
        return ModalityInput(AUDIO, self.audio[i]), ModalityInput(VISUAL, self.visual[i])

    def subset(self, indices) -> 'SyntheticDataset':
        idx = np.asarray(indices, dtype=int)
        return replace(self, audio=self.audio[idx], visual=self.visual[idx], labels=self.labels[idx])


def normalize_audio(raw: np.ndarray, mean: float = config.AUDIO_NORM_MEAN,
                    std: float = config.AUDIO_NORM_STD) -> np.ndarray:
    return (raw - mean) / std


def _upsample(grid: np.ndarray, rows: int, cols: int) -> np.ndarray:
    if grid.ndim == 2:
        return resize_bilinear(grid[:, :, None], rows, cols)[:, :, 0]
    return resize_bilinear(grid, rows, cols)


def _class_templates(cfg: SyntheticPairConfig) -> tuple[np.ndarray, np.ndarray]:
    rng = keyed_rng(cfg.seed, STREAM_DATA, 0)
    t, f = cfg.audio_shape
    h, w, _ = cfg.visual_shape
    g_audio = (min(_LATENT_GRID, t), min(_LATENT_GRID, f))
    g_visual = (min(_LATENT_GRID, h), min(_LATENT_GRID, w))
    g = (max(g_audio[0], g_visual[0]), max(g_audio[1], g_visual[1]))

    audio_t, visual_t = [], []
    for _ in range(cfg.num_classes):
        latent = rng.standard_normal((g[0], g[1], _LATENT_CHANNELS))
        shared = latent[..., :3]
        visual_t.append(0.5 + _VISUAL_SCALE * _upsample(shared, h, w))
        audio_grid = 0.6 * latent[..., 3] + 0.8 * shared.mean(axis=-1)
        audio_t.append(_upsample(audio_grid, t, f))
    return np.stack(audio_t), np.stack(visual_t)


def generate_synthetic_pairs(cfg=None, split: str = 'train') -> SyntheticDataset:
    """決定性的 K 類配對資料

    Args:
        cfg: SyntheticPairConfig 或帶同名欄位的 TrainConfig（None = 全部預設）
        split: 'train' 或 'eval'；兩者 template 相同、雜訊獨立
    """
    if split not in SPLITS:
        raise ConfigError(f"unknown split {split!r}; expected one of {SPLITS}")
    if cfg is None:
        cfg = SyntheticPairConfig()
    elif not isinstance(cfg, SyntheticPairConfig):
        cfg = SyntheticPairConfig.from_config(cfg, split)

    audio_t, visual_t = _class_templates(cfg)
    noise_rng = keyed_rng(cfg.seed, STREAM_DATA, 1) if split == 'train' else keyed_rng(cfg.seed, STREAM_EVAL)

    labels = np.repeat(np.arange(cfg.num_classes), cfg.samples_per_class)
    m = len(labels)

    raw_audio = cfg.audio_norm_mean + cfg.audio_norm_std * audio_t[labels]
    raw_audio = raw_audio + cfg.audio_norm_std * cfg.noise_std * noise_rng.standard_normal(raw_audio.shape)
    visual = visual_t[labels] + _VISUAL_SCALE * cfg.noise_std * noise_rng.standard_normal((m, *visual_t.shape[1:]))

    dataset = SyntheticDataset(
        audio=normalize_audio(raw_audio, cfg.audio_norm_mean, cfg.audio_norm_std),
        visual=visual,
        labels=labels,
        audio_templates=audio_t,
        visual_templates=visual_t,
        split=split,
    )
    logger.debug(f"[data] {split}: K={cfg.num_classes} × {cfg.samples_per_class} = {m} 筆")
    return dataset


def split_dataset(dataset: SyntheticDataset, fraction: float, seed: int = config.SEED,
                  salt: int = 0) -> tuple[SyntheticDataset, SyntheticDataset]:
    """依類別分層切成 (前段, 後段)，每類取 floor(fraction · n_k) 筆到前段"""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"split fraction must be in (0, 1), got {fraction}")
    rng = keyed_rng(seed, STREAM_DATA, 2, salt)
    first, second = [], []
    for k in np.unique(dataset.labels):
        idx = np.nonzero(dataset.labels == k)[0]
        idx = idx[rng.permutation(len(idx))]
        cut = int(np.floor(fraction * len(idx)))
        first.extend(idx[:cut].tolist())
        second.extend(idx[cut:].tolist())
    return dataset.subset(sorted(first)), dataset.subset(sorted(second))


def nearest_template_accuracy(dataset: SyntheticDataset, modality: str,
                              templates: Optional[np.ndarray] = None) -> float:
    """以 L2 距離最近的類別 template 當預測，回傳準確率"""
    x = dataset.inputs(modality).reshape(len(dataset), -1)
    t = (dataset.templates(modality) if templates is None else templates).reshape(dataset.num_classes, -1)
    d = ((x[:, None, :] - t[None, :, :]) ** 2).sum(axis=-1)
    return float(np.mean(np.argmin(d, axis=1) == dataset.labels))
