"""
AugmentationSampler：依機率與參數範圍抽一份 AugmentationSpec

每次抽樣的 Generator 由 (seed, modality, draw_index) 決定，
draw_index 相同就得到相同的 spec。未指定 draw_index 時使用 sampler 自己的遞增計數。
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import config
from augment.registry import default_probabilities
from augment.spec import (
    AUDIO,
    IDENTITY_JITTER_FACTORS,
    JITTER_COMPONENTS,
    VISUAL,
    AugmentationSpec,
    BlurRecord,
    CropRecord,
    JitterRecord,
    SpecAugRecord,
    TimeShiftRecord,
    check_modality,
)
from utils.errors import ConfigError
from utils.rng import MODALITY_IDS, STREAM_AUGMENT, keyed_rng

_CROP_ATTEMPTS = 10


@dataclass
class AugmentationSampler:
    seed: int = config.SEED
    probabilities: dict = field(default_factory=default_probabilities)
    crop_scale: tuple = config.AUG_CROP_SCALE
    crop_ratio: tuple = config.AUG_CROP_RATIO
    brightness: float = config.AUG_BRIGHTNESS
    contrast: float = config.AUG_CONTRAST
    saturation: float = config.AUG_SATURATION
    hue: float = config.AUG_HUE
    blur_sigma: tuple = config.AUG_BLUR_SIGMA
    time_shift_max: int = config.AUG_TIME_SHIFT_MAX
    time_mask_max: int = config.AUG_TIME_MASK_MAX
    freq_mask_max: int = config.AUG_FREQ_MASK_MAX
    stream: int = STREAM_AUGMENT      # eval 用 STREAM_EVAL，與訓練抽樣分開
    draws: int = 0

    def __post_init__(self):
        for name, p in self.probabilities.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"probability for {name} must be in [0, 1], got {p}")
        lo, hi = self.crop_scale
        if not 0.0 < lo <= hi <= 1.0:
            raise ConfigError(f"crop_scale must satisfy 0 < lo <= hi <= 1, got {self.crop_scale}")
        if self.hue > 0.5:
            raise ConfigError(f"hue must be <= 0.5, got {self.hue}")

    def prob(self, name: str) -> float:
        return float(self.probabilities.get(name, 0.0))

    def rng_for(self, modality: str, draw_index: int) -> np.random.Generator:
        return keyed_rng(self.seed, self.stream, MODALITY_IDS[modality], draw_index)

    # ── 抽樣 ──

    def sample(self, modality: str, shape: tuple, draw_index: Optional[int] = None) -> AugmentationSpec:
        check_modality(modality)
        if draw_index is None:
            draw_index = self.draws
            self.draws += 1
        rng = self.rng_for(modality, draw_index)
        rows, cols = int(shape[0]), int(shape[1])

        crop = self._sample_crop(rng, rows, cols)
        jitter = self._sample_jitter(rng, modality)

        sigma = float(rng.uniform(*self.blur_sigma))
        blur = BlurRecord(sigma, True) if rng.random() < self.prob('blur') else BlurRecord()

        hflip = bool(rng.random() < self.prob('hflip'))

        grayscale = time_shift = specaug = None
        if modality == VISUAL:
            grayscale = bool(rng.random() < self.prob('grayscale'))
        else:
            shift = int(rng.integers(-self.time_shift_max, self.time_shift_max + 1))
            time_shift = (TimeShiftRecord(shift, True) if rng.random() < self.prob('time_shift')
                          else TimeShiftRecord())
            specaug = self._sample_specaug(rng, rows, cols)

        return AugmentationSpec(
            modality=modality,
            extent=(rows, cols),
            crop=crop,
            jitter=jitter,
            blur=blur,
            hflip=hflip,
            grayscale=grayscale,
            time_shift=time_shift,
            specaug=specaug,
        )

    def _sample_crop(self, rng, rows: int, cols: int) -> CropRecord:
        """random resized crop：面積比例 × 長寬比，失敗就退回整張"""
        area = rows * cols
        log_lo, log_hi = math.log(self.crop_ratio[0]), math.log(self.crop_ratio[1])
        for _ in range(_CROP_ATTEMPTS):
            target = area * rng.uniform(*self.crop_scale)
            aspect = math.exp(rng.uniform(log_lo, log_hi))
            w = int(round(math.sqrt(target * aspect)))
            h = int(round(math.sqrt(target / aspect)))
            if 0 < w <= cols and 0 < h <= rows:
                x = int(rng.integers(0, cols - w + 1))
                y = int(rng.integers(0, rows - h + 1))
                return CropRecord(x, y, w, h)
        return CropRecord(0, 0, cols, rows)

    def _sample_jitter(self, rng, modality: str) -> JitterRecord:
        ranges = {
            'brightness': (max(0.0, 1 - self.brightness), 1 + self.brightness),
            'contrast': (max(0.0, 1 - self.contrast), 1 + self.contrast),
            'saturation': (max(0.0, 1 - self.saturation), 1 + self.saturation),
            'hue': (-self.hue, self.hue),
        }
        components = JITTER_COMPONENTS[modality]
        factors = tuple(float(rng.uniform(*ranges[c])) for c in components)
        order = tuple(int(i) for i in rng.permutation(len(components)))
        if rng.random() < self.prob('jitter'):
            return JitterRecord(factors, order, True)
        return JitterRecord(IDENTITY_JITTER_FACTORS[modality], tuple(range(len(components))))

    def _sample_specaug(self, rng, rows: int, cols: int) -> SpecAugRecord:
        tw = int(rng.integers(0, min(self.time_mask_max, rows) + 1))
        t0 = int(rng.integers(0, rows - tw + 1))
        fw = int(rng.integers(0, min(self.freq_mask_max, cols) + 1))
        f0 = int(rng.integers(0, cols - fw + 1))
        if rng.random() < self.prob('specaug'):
            return SpecAugRecord((t0, t0 + tw), (f0, f0 + fw), True)
        return SpecAugRecord()


def sample_spec(sampler: AugmentationSampler, modality: str, shape: Optional[tuple] = None,
                draw_index: Optional[int] = None) -> AugmentationSpec:
    if shape is None:
        shape = config.AUDIO_SHAPE if modality == AUDIO else config.VISUAL_SHAPE
    return sampler.sample(modality, shape, draw_index)


def sample_specs(sampler: AugmentationSampler, modality: str, count: int,
                 draw_index: int = 0, shape: Optional[tuple] = None) -> list[AugmentationSpec]:
    """連續 count 個 draw index 的 spec"""
    return [sample_spec(sampler, modality, shape, draw_index + i) for i in range(count)]
