"""
共用設定模組

從環境變數讀取所有設定，提供預設值（desk-scale）。
TrainConfig（pipeline/config.py）的每個欄位預設值都從這裡取。
"""

import os
import sys
from pathlib import Path

# 載入 .env 檔案
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass  # dotenv 未安裝時略過


def _env_bool(key: str, default: bool) -> bool:
    return os.getenv(key, 'true' if default else 'false').lower() in ('true', '1', 'yes')


def _env_shape(key: str, default: str) -> tuple:
    """'64x16' → (64, 16)"""
    return tuple(int(p) for p in os.getenv(key, default).lower().split('x'))


# ============================================================
# 環境偵測
# ============================================================

IS_DEBUG = _env_bool('DEBUG', False)

# ============================================================
# 數值精度
# ============================================================

# 參考模式為 float64；float32 僅供 opt-in，不進入容差敏感的測試
PRECISION = os.getenv('PRECISION', 'float64')

# 數值穩定常數
ADAM_EPS = float(os.getenv('ADAM_EPS', '1e-8'))
LAYER_NORM_EPS = float(os.getenv('LAYER_NORM_EPS', '1e-6'))
NORMALIZE_EPS = float(os.getenv('NORMALIZE_EPS', '1e-12'))

# ============================================================
# 模型形狀（ViT 縮小版）
# ============================================================

AUDIO_SHAPE = _env_shape('AUDIO_SHAPE', '64x16')       # time x frequency
VISUAL_SHAPE = _env_shape('VISUAL_SHAPE', '32x32x3')   # H x W x C
PATCH_SIZE = int(os.getenv('PATCH_SIZE', '8'))
EMBED_DIM = int(os.getenv('EMBED_DIM', '64'))
DEPTH = int(os.getenv('DEPTH', '3'))
HEADS = int(os.getenv('HEADS', '4'))
MLP_RATIO = int(os.getenv('MLP_RATIO', '4'))
PROJ_DIM = int(os.getenv('PROJ_DIM', '32'))
INIT_STD = float(os.getenv('INIT_STD', '0.02'))

# 增強向量維度（audio 24 / visual 18）
AUDIO_VECTOR_DIM = 24
VISUAL_VECTOR_DIM = 18

# Audio 輸入標準化（沿用 AudioSet 預訓練的 mean/std）
AUDIO_NORM_MEAN = float(os.getenv('AUDIO_NORM_MEAN', '-4.346'))
AUDIO_NORM_STD = float(os.getenv('AUDIO_NORM_STD', '4.332'))

# ============================================================
# 訓練預設
# ============================================================

EPOCHS = int(os.getenv('EPOCHS', '20'))
BATCH_SIZE = int(os.getenv('BATCH_SIZE', '8'))
CENTROID_COUNT = int(os.getenv('CENTROID_COUNT', '16'))   # S
TEMPERATURE = float(os.getenv('TEMPERATURE', '0.07'))
LAMBDA_INTER = float(os.getenv('LAMBDA_INTER', '1'))
LAMBDA_INTRA_A = float(os.getenv('LAMBDA_INTRA_A', '1'))
LAMBDA_INTRA_V = float(os.getenv('LAMBDA_INTRA_V', '1'))

# AdamW + half-cycle cosine
LR_INIT = float(os.getenv('LR_INIT', '1e-6'))
# 大規模預訓練的 peak 為 1e-4（batch 256）；desk scale 步數少，預設拉到 1e-3
LR_PEAK = float(os.getenv('LR_PEAK', '1e-3'))
WARMUP_EPOCHS = int(os.getenv('WARMUP_EPOCHS', '2'))
BETA1 = float(os.getenv('BETA1', '0.9'))
BETA2 = float(os.getenv('BETA2', '0.95'))
WEIGHT_DECAY = float(os.getenv('WEIGHT_DECAY', '1e-5'))

SEED = int(os.getenv('SEED', '0'))

# 合成資料：K 類 × 每類筆數（預設 8 × 64 = 512）
NUM_CLASSES = int(os.getenv('NUM_CLASSES', '8'))
SAMPLES_PER_CLASS = int(os.getenv('SAMPLES_PER_CLASS', '64'))
NOISE_STD = float(os.getenv('NOISE_STD', '0.1'))
EVAL_PER_CLASS = int(os.getenv('EVAL_PER_CLASS', '2'))   # 2 × 8 = 16 筆 retrieval gallery

# 每幾個 step 存一次 checkpoint（0 = 只在 run 結束時存）
CHECKPOINT_EVERY = int(os.getenv('CHECKPOINT_EVERY', '0'))

# batch 組裝的 worker 數（1 = 單一 producer，決定性路徑）
BATCH_WORKERS = int(os.getenv('BATCH_WORKERS', '1'))
# 單一 batch 組裝超過此秒數記 warning（只觀察，不中斷）
BATCH_BUILD_TIMEOUT = float(os.getenv('BATCH_BUILD_TIMEOUT', '5'))

# ============================================================
# 增強機率
# ============================================================
# 每種可選增強的 AUG_{PREFIX}_PROB 由 _AUGMENT_TOGGLES 迴圈生成。
# 新增增強時：
#   1. 在 _AUGMENT_TOGGLES 加一筆 (prefix, default_probability)
#   2. 對應的向量 slot 在 augment/registry.py 定義
# random resized crop 一律套用，不在此表。

_AUGMENT_TOGGLES = (
    ('JITTER',      0.8),
    ('BLUR',        0.5),
    ('HFLIP',       0.5),
    ('GRAYSCALE',   0.2),   # visual only
    ('TIME_SHIFT',  0.5),   # audio only
    ('SPECAUG',     0.5),   # audio only
)

for _prefix, _p_default in _AUGMENT_TOGGLES:
    globals()[f'AUG_{_prefix}_PROB'] = float(os.getenv(f'AUG_{_prefix}_PROB', str(_p_default)))

# 參數範圍
AUG_CROP_SCALE = (0.2, 1.0)
AUG_CROP_RATIO = (3 / 4, 4 / 3)
AUG_BRIGHTNESS = 0.4
AUG_CONTRAST = 0.4
AUG_SATURATION = 0.2
AUG_HUE = 0.1
AUG_BLUR_SIGMA = (0.1, 2.0)
AUG_TIME_SHIFT_MAX = int(os.getenv('AUG_TIME_SHIFT_MAX', '8'))      # frames
AUG_TIME_MASK_MAX = int(os.getenv('AUG_TIME_MASK_MAX', '8'))        # frames
AUG_FREQ_MASK_MAX = int(os.getenv('AUG_FREQ_MASK_MAX', '4'))        # bins
AUG_MASK_VALUE = float(os.getenv('AUG_MASK_VALUE', '0'))

# ============================================================
# 儲存設定
# ============================================================

if os.getenv('DATA_DIR'):
    LOCAL_DATA_DIR = Path(os.getenv('DATA_DIR'))
else:
    LOCAL_DATA_DIR = Path(__file__).parent / 'data'

# ablation sweep 預設 manifest
ABLATION_MANIFEST_PATH = Path(__file__).parent / 'config' / 'ablation.yaml'

# 每幾個 step 寫一行 INFO log（metrics JSONL 每 step 都寫）
LOG_EVERY = int(os.getenv('LOG_EVERY', '16'))

# 日誌等級
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')


def validate_config():
    """驗證環境變數設定"""
    errors = []

    if PRECISION not in ('float64', 'float32'):
        errors.append(f"PRECISION 必須是 float64 或 float32（目前 {PRECISION}）")

    for prefix, _ in _AUGMENT_TOGGLES:
        p = globals()[f'AUG_{prefix}_PROB']
        if not 0.0 <= p <= 1.0:
            errors.append(f"AUG_{prefix}_PROB 必須介於 0 與 1（目前 {p}）")

    for name, shape in (('AUDIO_SHAPE', AUDIO_SHAPE), ('VISUAL_SHAPE', VISUAL_SHAPE)):
        if any(s <= 0 for s in shape):
            errors.append(f"{name} 每一軸都必須為正（目前 {shape}）")

    if EMBED_DIM % HEADS != 0:
        errors.append(f"EMBED_DIM={EMBED_DIM} 無法被 HEADS={HEADS} 整除")

    if errors:
        print("⚠️  設定錯誤:", file=sys.stderr)
        for error in errors:
            print(f"   - {error}", file=sys.stderr)
        return False

    return True


def print_config(stream=None):
    """顯示目前設定（stdout 只留給 JSON 報表，預設寫 stderr）"""
    stream = stream or sys.stderr
    print("=" * 50, file=stream)
    print("📋 設定", file=stream)
    print("=" * 50, file=stream)
    print(f"   精度: {PRECISION}", file=stream)
    print(f"   Audio: {'x'.join(map(str, AUDIO_SHAPE))} | Visual: {'x'.join(map(str, VISUAL_SHAPE))}", file=stream)
    print(f"   ViT: patch {PATCH_SIZE} | d {EMBED_DIM} | depth {DEPTH} | heads {HEADS}", file=stream)
    print(f"   Batch: N={BATCH_SIZE} | S={CENTROID_COUNT} | τ={TEMPERATURE}", file=stream)
    print(f"   資料目錄: {LOCAL_DATA_DIR}", file=stream)
    print("=" * 50, file=stream)
