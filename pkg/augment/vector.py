"""
AugmentationSpec → 固定長度實數向量（audio 24 / visual 18）

layout 見 augment/registry.py。
"""

import numpy as np

from augment.registry import VECTOR_DIMS, flag_index, slot_range
from augment.spec import VISUAL, AugmentationSpec, check_modality, identity_spec

AugmentationVector = np.ndarray


def parameterize(spec: AugmentationSpec) -> AugmentationVector:
    modality = spec.modality
    rows, cols = spec.extent
    vec = np.zeros(VECTOR_DIMS[modality], dtype=np.float64)

    crop = spec.crop
    if not crop.is_full(spec.extent):
        vec[list(slot_range('crop', modality))] = (crop.x / cols, crop.y / rows, crop.w / cols, crop.h / rows)

    jitter = spec.jitter
    k = len(jitter.factors)
    idx = list(slot_range('jitter', modality))
    deltas = [f - 1.0 for f in jitter.factors]
    if modality == VISUAL:
        deltas[3] = jitter.factors[3]  # hue 本身即偏移
    vec[idx[:k]] = deltas
    vec[idx[k:2 * k]] = jitter.order
    vec[flag_index('jitter', modality)] = float(jitter.applied)

    blur_idx = slot_range('blur', modality)
    vec[blur_idx[0]] = spec.blur.sigma
    vec[flag_index('blur', modality)] = float(spec.blur.applied)

    vec[flag_index('hflip', modality)] = float(spec.hflip)

    if modality == VISUAL:
        vec[flag_index('grayscale', modality)] = float(bool(spec.grayscale))
    else:
        ts_idx = slot_range('time_shift', modality)
        vec[ts_idx[0]] = spec.time_shift.shift / rows
        vec[flag_index('time_shift', modality)] = float(spec.time_shift.applied)

        sa = spec.specaug
        sa_idx = list(slot_range('specaug', modality))
        vec[sa_idx[:4]] = (sa.time_mask[0] / rows, sa.time_mask[1] / rows,
                           sa.freq_mask[0] / cols, sa.freq_mask[1] / cols)
        vec[flag_index('specaug', modality)] = float(sa.applied)

    return vec


_DEFAULTS: dict = {}


def default_vector(modality: str) -> AugmentationVector:
    """identity spec 的編碼（與輸入大小無關：整張 crop 一律編成 0）"""
    check_modality(modality)
    if modality not in _DEFAULTS:
        _DEFAULTS[modality] = parameterize(identity_spec(modality, (1, 1)))
        _DEFAULTS[modality].setflags(write=False)
    return _DEFAULTS[modality].copy()
