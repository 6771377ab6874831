"""Augmentation Registry：集中註冊每種增強的機率來源與向量 slot

新增增強只需在 AUGMENTATION_REGISTRY 加一筆：
    AugmentationEntry("my_aug", "MY_AUG", visual_slots=(17, 1))
並在 config._AUGMENT_TOGGLES 加上 ('MY_AUG', 預設機率)。

slot 以 (start, width) 表示；有連續參數的增強，block 最後一格是 applied flag。

Visual（18 維）:
    0-3   crop (x/W, y/H, w/W, h/H)，整張 = <0,0,0,0>
    4-7   jitter 偏移 (b-1, c-1, s-1, hue)
    8-11  jitter 順序（預設 <0,1,2,3>）
    12    jitter flag
    13-14 blur sigma, flag
    15    hflip
    16    grayscale
    17    保留（0）

Audio（24 維）:
    0-3   crop
    4-5   jitter 偏移 (b-1, c-1)
    6-7   jitter 順序（預設 <0,1>）
    8     jitter flag
    9-10  blur sigma, flag
    11    hflip（沿時間軸）
    12-13 time shift / T, flag
    14-18 SpecAugment (t0/T, t1/T, f0/F, f1/F), flag
    19-23 保留（0）
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import config
from augment.spec import AUDIO, VISUAL

VECTOR_DIMS = {
    AUDIO: config.AUDIO_VECTOR_DIM,
    VISUAL: config.VISUAL_VECTOR_DIM,
}


@dataclass(frozen=True)
class AugmentationEntry:
    """registry 的一筆：增強名稱 + 機率 prefix + 各 modality 的 slot"""

    name: str
    prob_prefix: Optional[str]                      # None = 一律套用
    visual_slots: Optional[Tuple[int, int]] = None  # (start, width)
    audio_slots: Optional[Tuple[int, int]] = None

    def slots(self, modality: str) -> Optional[Tuple[int, int]]:
        return self.visual_slots if modality == VISUAL else self.audio_slots

    def supports(self, modality: str) -> bool:
        return self.slots(modality) is not None

    def default_probability(self) -> float:
        if self.prob_prefix is None:
            return 1.0
        return float(getattr(config, f'AUG_{self.prob_prefix}_PROB'))


# ============================================================
# Registry（依套用順序排列）
# ============================================================

AUGMENTATION_REGISTRY: Tuple[AugmentationEntry, ...] = (
    AugmentationEntry('crop',       None,         visual_slots=(0, 4),  audio_slots=(0, 4)),
    AugmentationEntry('jitter',     'JITTER',     visual_slots=(4, 9),  audio_slots=(4, 5)),
    AugmentationEntry('blur',       'BLUR',       visual_slots=(13, 2), audio_slots=(9, 2)),
    AugmentationEntry('hflip',      'HFLIP',      visual_slots=(15, 1), audio_slots=(11, 1)),
    AugmentationEntry('grayscale',  'GRAYSCALE',  visual_slots=(16, 1)),
    AugmentationEntry('time_shift', 'TIME_SHIFT', audio_slots=(12, 2)),
    AugmentationEntry('specaug',    'SPECAUG',    audio_slots=(14, 5)),
)

_BY_NAME = {e.name: e for e in AUGMENTATION_REGISTRY}


def entries_for(modality: str) -> list[AugmentationEntry]:
    return [e for e in AUGMENTATION_REGISTRY if e.supports(modality)]


def optional_entries(modality: str) -> list[AugmentationEntry]:
    """有套用機率的增強（crop 以外）"""
    return [e for e in entries_for(modality) if e.prob_prefix is not None]


def default_probabilities() -> dict:
    """name → 套用機率（讀 config）"""
    return {e.name: e.default_probability() for e in AUGMENTATION_REGISTRY if e.prob_prefix}


def slot_range(name: str, modality: str) -> range:
    start, width = _BY_NAME[name].slots(modality)
    return range(start, start + width)


def flag_index(name: str, modality: str) -> int:
    """applied flag 的位置（block 最後一格）"""
    start, width = _BY_NAME[name].slots(modality)
    return start + width - 1


def flag_indices(modality: str) -> list[int]:
    return [flag_index(e.name, modality) for e in optional_entries(modality)]


def reserved_indices(modality: str) -> list[int]:
    used = set()
    for e in entries_for(modality):
        used.update(slot_range(e.name, modality))
    return [i for i in range(VECTOR_DIMS[modality]) if i not in used]


def _validate_layout():
    for modality, dim in VECTOR_DIMS.items():
        taken: dict[int, str] = {}
        for e in entries_for(modality):
            for i in slot_range(e.name, modality):
                if i >= dim or i in taken:
                    raise RuntimeError(f"{modality} slot {i} of {e.name} out of range or taken by {taken.get(i)}")
                taken[i] = e.name


_validate_layout()
