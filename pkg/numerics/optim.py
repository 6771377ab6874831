"""
AdamW（decoupled weight decay）與 warmup + half-cycle cosine 學習率
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

import config
from numerics.tensor import Tensor
from utils.errors import ConfigError, ContractError


@dataclass(eq=False)
class Parameter:
    """可訓練張量 + AdamW 的一階/二階動量"""

    name: str
    tensor: Tensor
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    step: int = 0

    def __post_init__(self):
        self.tensor.requires_grad = True
        if not self.tensor.name:
            self.tensor.name = self.name
        if self.m is None:
            self.m = np.zeros_like(self.tensor.data)
        if self.v is None:
            self.v = np.zeros_like(self.tensor.data)

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @property
    def grad(self) -> Optional[np.ndarray]:
        return self.tensor.grad

    @property
    def shape(self) -> tuple:
        return self.tensor.shape

    @property
    def size(self) -> int:
        return self.tensor.size


def zero_grad(params: Iterable[Parameter]):
    for p in params:
        p.tensor.grad = None


def adamw_step(params: list[Parameter], lr: float,
               beta1: float = config.BETA1,
               beta2: float = config.BETA2,
               weight_decay: float = config.WEIGHT_DECAY,
               eps: float = config.ADAM_EPS):
    """對每個參數做一步 AdamW（原地更新數值與動量）

    θ ← θ − lr·wd·θ − lr · m̂ / (√v̂ + eps)
    """
    missing = [p.name for p in params if p.tensor.grad is None]
    if missing:
        raise ContractError(f"adamw_step: missing gradient for {', '.join(missing)}")

    for p in params:
        g = p.tensor.grad
        if g.shape != p.data.shape:
            raise ContractError(f"adamw_step: grad shape {g.shape} != param {p.name} shape {p.data.shape}")
        p.step += 1
        p.m[...] = beta1 * p.m + (1.0 - beta1) * g
        p.v[...] = beta2 * p.v + (1.0 - beta2) * g * g
        m_hat = p.m / (1.0 - beta1 ** p.step)
        v_hat = p.v / (1.0 - beta2 ** p.step)
        theta = p.tensor.data
        theta -= lr * weight_decay * theta
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)


def cosine_lr(step: int, total_steps: int, warmup_steps: int,
              lr_init: float = config.LR_INIT, lr_peak: float = config.LR_PEAK) -> float:
    """線性 warmup（lr_init → lr_peak），之後 half-cycle cosine 回到 lr_init"""
    if total_steps <= 0 or warmup_steps < 0 or warmup_steps >= total_steps:
        raise ConfigError(f"invalid schedule: total={total_steps} warmup={warmup_steps}")
    if lr_init < 0 or lr_peak < lr_init:
        raise ConfigError(f"invalid learning rates: init={lr_init} peak={lr_peak}")

    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside schedule [0, {total_steps}]")
    if step < warmup_steps:
        return lr_init + (lr_peak - lr_init) * step / warmup_steps
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return lr_init + 0.5 * (lr_peak - lr_init) * (1.0 + math.cos(math.pi * progress))
