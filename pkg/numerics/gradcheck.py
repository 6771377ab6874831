"""
有限差分梯度檢查

對每個參數抽樣座標做中央差分，與反向傳播結果比相對誤差
|a − n| / max(|a|, |n|, 1e-4)。
梯度小於 1e-4 的座標等同要求絕對誤差 < 1e-8。只在 float64 下有意義。
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from numerics.optim import Parameter
from numerics.tensor import Tape, Tensor, backward
from utils.errors import ContractError

logger = logging.getLogger(__name__)

REL_ERROR_FLOOR = 1e-4


@dataclass
class GradCheckResult:
    max_rel_error: float
    checked: int
    worst: str = ''
    per_param: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'max_rel_error': self.max_rel_error,
            'checked': self.checked,
            'worst': self.worst,
            'per_param': self.per_param,
        }


def rel_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), REL_ERROR_FLOOR)


def gradcheck(loss_fn: Callable[[], Tensor], params: list[Parameter],
              step: float = 1e-5, max_coords: Optional[int] = None,
              rng: Optional[np.random.Generator] = None) -> GradCheckResult:
    """比較 analytic 與 numeric 梯度

    Args:
        loss_fn: 無參數、回傳純量 Tensor 的函式（每次呼叫需完全決定性）
        params: 要檢查的參數
        step: 中央差分步長
        max_coords: 每個參數最多抽幾個座標（None = 全部）
        rng: 抽座標用
    """
    if step <= 0:
        raise ContractError(f"gradcheck step must be positive, got {step}")
    rng = rng or np.random.default_rng(0)

    with Tape() as tape:
        loss = loss_fn()
    backward(loss, tape, params)
    analytic = {p.name: p.grad.copy() for p in params}

    result = GradCheckResult(max_rel_error=0.0, checked=0)
    for p in params:
        flat = p.data.reshape(-1)
        if not np.shares_memory(flat, p.data):
            raise ContractError(f"parameter {p.name} is not contiguous")
        a_flat = analytic[p.name].reshape(-1)
        if max_coords is None or flat.size <= max_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))

        worst_here = 0.0
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + step
            lp = loss_fn().item()
            flat[idx] = orig - step
            lm = loss_fn().item()
            flat[idx] = orig
            numeric = (lp - lm) / (2 * step)
            err = rel_error(float(a_flat[idx]), numeric)
            worst_here = max(worst_here, err)
            result.checked += 1

        result.per_param[p.name] = worst_here
        if worst_here >= result.max_rel_error:
            result.max_rel_error = worst_here
            result.worst = p.name

    logger.debug(f"[gradcheck] {result.checked} coords, max rel err {result.max_rel_error:.2e} ({result.worst})")
    return result
