"""
增強相關的資料型別

ModalityInput 為單筆輸入（audio: T×F spectrogram；visual: H×W×3 frame）。
AugmentationSpec 記錄一次抽樣的完整結果；未套用的增強一律存成 identity 參數，
因此 spec → 向量是一對一的。

二維輸入統一視為影像：axis 0 = rows（visual 的 H / audio 的 T），
axis 1 = cols（visual 的 W / audio 的 F）。crop 的 x 沿 cols、y 沿 rows。
"""

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from utils.errors import ContractError

AUDIO = 'audio'
VISUAL = 'visual'
MODALITIES = (AUDIO, VISUAL)

# jitter 分量索引：0 brightness / 1 contrast / 2 saturation / 3 hue
JITTER_COMPONENTS = {
    VISUAL: ('brightness', 'contrast', 'saturation', 'hue'),
    AUDIO: ('brightness', 'contrast'),
}
IDENTITY_JITTER_FACTORS = {
    VISUAL: (1.0, 1.0, 1.0, 0.0),
    AUDIO: (1.0, 1.0),
}


def check_modality(modality: str):
    if modality not in MODALITIES:
        raise ContractError(f"unknown modality {modality!r}")


@dataclass(frozen=True)
class ModalityInput:
    modality: str
    data: np.ndarray

    def __post_init__(self):
        check_modality(self.modality)
        data = self.data
        if self.modality == AUDIO and data.ndim != 2:
            raise ContractError(f"audio input must be T×F, got shape {data.shape}")
        if self.modality == VISUAL and (data.ndim != 3 or data.shape[2] != 3):
            raise ContractError(f"visual input must be H×W×3, got shape {data.shape}")

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def extent(self) -> tuple:
        """(rows, cols)"""
        return self.data.shape[:2]


# ============================================================
# 各增強的參數紀錄
# ============================================================

@dataclass(frozen=True)
class CropRecord:
    """像素座標的裁切框（x 沿 cols、y 沿 rows）"""

    x: int
    y: int
    w: int
    h: int

    def is_full(self, extent: tuple) -> bool:
        rows, cols = extent
        return self.x == 0 and self.y == 0 and self.w == cols and self.h == rows


@dataclass(frozen=True)
class JitterRecord:
    factors: tuple
    order: tuple
    applied: bool = False


@dataclass(frozen=True)
class BlurRecord:
    sigma: float = 0.0
    applied: bool = False


@dataclass(frozen=True)
class TimeShiftRecord:
    shift: int = 0
    applied: bool = False


@dataclass(frozen=True)
class SpecAugRecord:
    """半開區間 [start, end)；start == end 表示不遮"""

    time_mask: tuple = (0, 0)
    freq_mask: tuple = (0, 0)
    applied: bool = False


@dataclass(frozen=True)
class AugmentationSpec:
    modality: str
    extent: tuple
    crop: CropRecord
    jitter: JitterRecord
    blur: BlurRecord = field(default_factory=BlurRecord)
    hflip: bool = False
    grayscale: Optional[bool] = None              # visual only
    time_shift: Optional[TimeShiftRecord] = None  # audio only
    specaug: Optional[SpecAugRecord] = None       # audio only

    def to_dict(self) -> dict:
        d = asdict(self)
        d['extent'] = list(self.extent)
        return d


def identity_spec(modality: str, shape: tuple) -> AugmentationSpec:
    """什麼都不做的 spec（crop = 整張）"""
    check_modality(modality)
    rows, cols = int(shape[0]), int(shape[1])
    is_audio = modality == AUDIO
    return AugmentationSpec(
        modality=modality,
        extent=(rows, cols),
        crop=CropRecord(0, 0, cols, rows),
        jitter=JitterRecord(
            factors=IDENTITY_JITTER_FACTORS[modality],
            order=tuple(range(len(JITTER_COMPONENTS[modality]))),
        ),
        blur=BlurRecord(),
        hflip=False,
        grayscale=None if is_audio else False,
        time_shift=TimeShiftRecord() if is_audio else None,
        specaug=SpecAugRecord() if is_audio else None,
    )
