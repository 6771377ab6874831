"""
apply(spec, input)：依固定順序套用增強

順序：crop（bilinear resize 回原大小）→ jitter → blur → flip
      → grayscale（visual）/ time shift（audio）→ SpecAugment（audio）

audio spectrogram 視為單通道影像處理；hflip 在 audio 上翻轉時間軸。
未套用的步驟完全跳過，identity spec 的輸出與輸入逐位元相同。
"""

import math

import numpy as np

import config
from augment.spec import AUDIO, JITTER_COMPONENTS, VISUAL, AugmentationSpec, ModalityInput
from utils.errors import BoundsError, ContractError

_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

_RGB_TO_YIQ = np.array([
    [0.299, 0.587, 0.114],
    [0.596, -0.274, -0.322],
    [0.211, -0.523, 0.312],
])
_YIQ_TO_RGB = np.linalg.inv(_RGB_TO_YIQ)


# ============================================================
# 邊界檢查
# ============================================================

def check_bounds(spec: AugmentationSpec, extent: tuple):
    rows, cols = extent
    if tuple(spec.extent) != (rows, cols):
        raise BoundsError(f"spec extent {tuple(spec.extent)} does not match input extent {(rows, cols)}")

    c = spec.crop
    if c.w < 1 or c.h < 1 or c.x < 0 or c.y < 0 or c.x + c.w > cols or c.y + c.h > rows:
        raise BoundsError(f"crop {c} outside input extent {(rows, cols)}")

    n = len(JITTER_COMPONENTS[spec.modality])
    if sorted(spec.jitter.order) != list(range(n)) or len(spec.jitter.factors) != n:
        raise ContractError(f"jitter order {spec.jitter.order} is not a permutation of range({n})")

    if spec.blur.sigma < 0:
        raise BoundsError(f"blur sigma must be >= 0, got {spec.blur.sigma}")

    if spec.modality == AUDIO:
        if abs(spec.time_shift.shift) >= rows:
            raise BoundsError(f"time shift {spec.time_shift.shift} exceeds time axis {rows}")
        for (start, end), limit, label in ((spec.specaug.time_mask, rows, 'time'),
                                           (spec.specaug.freq_mask, cols, 'freq')):
            if not 0 <= start <= end <= limit:
                raise BoundsError(f"{label} mask [{start}, {end}) outside [0, {limit})")


# ============================================================
# 基本運算
# ============================================================

def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """half-pixel 對齊的 bilinear 重採樣，img 為 h×w×c"""
    in_h, in_w = img.shape[:2]

    def coords(n_out, n_in):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        i0 = np.floor(src).astype(int)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, src - i0

    y0, y1, wy = coords(out_h, in_h)
    x0, x1, wx = coords(out_w, in_w)
    wx = wx[None, :, None]
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    wy = wy[:, None, None]
    return top * (1 - wy) + bottom * wy


def _gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """可分離高斯模糊，reflect padding，半徑 ceil(3σ)（不超過軸長 - 1）"""
    if sigma <= 0:
        return img
    out = img
    for axis in (0, 1):
        n = img.shape[axis]
        radius = min(int(math.ceil(3 * sigma)), n - 1)
        if radius <= 0:
            continue
        offsets = np.arange(-radius, radius + 1)
        kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
        kernel /= kernel.sum()
        pad = [(0, 0)] * img.ndim
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad, mode='reflect')
        acc = np.zeros_like(out)
        for j, weight in enumerate(kernel):
            acc += weight * np.take(padded, np.arange(j, j + n), axis=axis)
        out = acc
    return out


def _gray(img: np.ndarray) -> np.ndarray:
    """h×w×1（單通道直接回傳）"""
    if img.shape[2] == 1:
        return img
    return (img @ _GRAY_WEIGHTS)[..., None]


def _adjust_brightness(img, factor):
    return img * factor


def _adjust_contrast(img, factor):
    m = _gray(img).mean()
    return (img - m) * factor + m


def _adjust_saturation(img, factor):
    g = _gray(img)
    return g + factor * (img - g)


def _adjust_hue(img, shift):
    """YIQ 空間中旋轉色度平面 2π·shift"""
    theta = 2 * math.pi * shift
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rot = np.array([[1, 0, 0], [0, cos_t, -sin_t], [0, sin_t, cos_t]])
    m = _YIQ_TO_RGB @ rot @ _RGB_TO_YIQ
    return img @ m.T


_JITTER_OPS = (_adjust_brightness, _adjust_contrast, _adjust_saturation, _adjust_hue)


# ============================================================
# apply
# ============================================================

def apply(spec: AugmentationSpec, inp: ModalityInput) -> ModalityInput:
    if spec.modality != inp.modality:
        raise ContractError(f"spec modality {spec.modality} != input modality {inp.modality}")
    check_bounds(spec, inp.extent)

    is_audio = inp.modality == AUDIO
    img = inp.data[..., None] if is_audio else inp.data
    # 內部以 float64 計算，輸出回到輸入的浮點精度
    out_dtype = inp.data.dtype if np.issubdtype(inp.data.dtype, np.floating) else np.float64
    img = np.array(img, dtype=np.float64)
    rows, cols = inp.extent

    c = spec.crop
    if not c.is_full(spec.extent):
        img = resize_bilinear(img[c.y:c.y + c.h, c.x:c.x + c.w], rows, cols)

    if spec.jitter.applied:
        for i in spec.jitter.order:
            img = _JITTER_OPS[i](img, spec.jitter.factors[i])

    if spec.blur.applied:
        img = _gaussian_blur(img, spec.blur.sigma)

    if spec.hflip:
        img = img[::-1] if is_audio else img[:, ::-1]

    if inp.modality == VISUAL and spec.grayscale:
        img = np.repeat(_gray(img), 3, axis=2)

    if is_audio:
        if spec.time_shift.applied and spec.time_shift.shift:
            img = np.roll(img, spec.time_shift.shift, axis=0)
        sa = spec.specaug
        if sa.applied:
            img = img.copy()
            img[sa.time_mask[0]:sa.time_mask[1], :] = config.AUG_MASK_VALUE
            img[:, sa.freq_mask[0]:sa.freq_mask[1]] = config.AUG_MASK_VALUE
        img = img[..., 0]

    return ModalityInput(inp.modality, np.ascontiguousarray(img, dtype=out_dtype))
