"""
錯誤類別

全專案共用一棵例外樹，根為 EquiAVError。每個類別帶固定的 `code`，
CLI 依此決定 exit code（PersistenceError → 2，其餘 → 1），測試也用 code 比對。
"""


class EquiAVError(Exception):
    """所有領域錯誤的基底"""

    code: str = "error"


class ShapeError(EquiAVError, ValueError):
    """張量形狀不相容（訊息須列出兩邊 shape）"""

    code = "shape"


class ContractError(EquiAVError, ValueError):
    """呼叫端違反前置條件"""

    code = "contract"


class EmptyInputError(ContractError):
    code = "empty"


class DegenerateEmbeddingError(ContractError):
    """embedding 出現零範數列，cosine 無定義"""

    code = "degenerate_embedding"


class DegenerateBatchError(ContractError):
    """batch 太小導致分母為空（EquiMod loss 在 N=1 時）"""

    code = "degenerate_batch"


class DegenerateLabelError(ContractError):
    code = "degenerate_label"


class ConfigError(EquiAVError, ValueError):
    code = "config"


class BoundsError(EquiAVError, ValueError):
    """增強參數超出輸入範圍"""

    code = "bounds"


class PersistenceError(EquiAVError, OSError):
    """checkpoint / metrics 讀寫失敗"""

    code = "io"


class CheckpointFormatError(PersistenceError):
    code = "format"


class CheckpointVersionError(PersistenceError):
    code = "version"


class CheckpointTruncatedError(PersistenceError):
    code = "truncated"


class CheckpointChecksumError(PersistenceError):
    code = "checksum"
