"""
決定性亂數串流

每一次抽樣都由一組非負整數 key 決定（numpy SeedSequence 接受整數序列），
不依賴任何「呼叫了幾次」的共享狀態，因此：
- 同一 key 重播結果逐位元相同
- checkpoint 續跑時只要 step 對得上，後續抽樣與不中斷的 run 完全一致
- 多執行緒組 batch 時先後順序不影響結果
"""

import numpy as np

from utils.errors import ContractError

# 串流標籤：同一個 seed 底下區分用途
STREAM_INIT = 0        # 參數初始化
STREAM_DATA = 1        # 合成資料
STREAM_SHUFFLE = 2     # 每個 epoch 的洗牌
STREAM_AUGMENT = 3     # 增強抽樣
STREAM_EVAL = 4        # eval split 雜訊
STREAM_PROBE = 5       # linear probe 初始化
STREAM_CHECK = 6       # gradcheck / losscheck 輸入

MODALITY_IDS = {'audio': 0, 'visual': 1}


def keyed_rng(*key: int) -> np.random.Generator:
    """以整數 key 建立獨立的 Generator"""
    parts = [int(k) for k in key]
    if any(k < 0 for k in parts):
        raise ContractError(f"rng key must be non-negative, got {parts}")
    return np.random.default_rng(parts)


def rng_state(seed: int, next_step: int) -> dict:
    """checkpoint 用的 RNG 狀態描述

    所有串流都由 key 重建，沒有需要保存的內部狀態；記下 seed 與下一個 step 即可續跑。
    """
    return {
        'scheme': 'keyed',
        'seed': int(seed),
        'next_step': int(next_step),
        'streams': {
            'init': STREAM_INIT,
            'data': STREAM_DATA,
            'shuffle': STREAM_SHUFFLE,
            'augment': STREAM_AUGMENT,
            'eval': STREAM_EVAL,
            'probe': STREAM_PROBE,
            'check': STREAM_CHECK,
        },
    }
