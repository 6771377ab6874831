"""
EquiMod 對照損失與正例梯度關係

EquiMod 的分母拿掉正例，EquiAV（intra_loss）保留正例。對單一 anchor：

    ℓ_EquiAV  = -log( s_pos / (s_pos + Σ s_n) )   → ∂/∂s_pos = -Σ s_n / (s_pos (s_pos + Σ s_n))
    ℓ_EquiMod = -log( s_pos / Σ s_n )             → ∂/∂s_pos = -1 / s_pos

兩者相差一個 factor = Σ s_n / (s_pos + Σ s_n) ∈ (0, 1)：正例越難（s_pos 越小）權重越高。
"""

from dataclasses import dataclass

import numpy as np

import config
from losses import contrastive
from losses.contrastive import nt_xent
from numerics import Tape, Tensor, as_tensor, backward, concat, log
from utils.errors import ContractError, DegenerateBatchError


def equimod_loss(z_hat, z_prime, tau: float = config.TEMPERATURE) -> Tensor:
    """分母不含正例的 NT-Xent；N=1 時分母為空"""
    z_hat = as_tensor(z_hat)
    if z_hat.ndim == 2 and z_hat.shape[0] == 1:
        raise DegenerateBatchError("equimod loss needs N >= 2 (empty denominator at N=1)")
    return nt_xent(z_hat, z_prime, tau, exclude_positive=True)


@dataclass(frozen=True)
class GradientFactors:
    d_equiav: float
    d_equimod: float
    factor: float
    autodiff_equiav: float
    autodiff_equimod: float

    def relation_error(self) -> float:
        """|dEquiAV − dEquiMod·factor|"""
        return abs(self.d_equiav - self.d_equimod * self.factor)

    def autodiff_error(self) -> float:
        return max(abs(self.autodiff_equiav - self.d_equiav), abs(self.autodiff_equimod - self.d_equimod))

    def to_dict(self) -> dict:
        return {
            'd_equiav': self.d_equiav,
            'd_equimod': self.d_equimod,
            'factor': self.factor,
            'autodiff_equiav': self.autodiff_equiav,
            'autodiff_equimod': self.autodiff_equimod,
            'relation_error': self.relation_error(),
            'autodiff_error': self.autodiff_error(),
        }


def _autodiff_pos_grad(s_pos: float, s_negs: np.ndarray, exclude_positive: bool) -> float:
    """把 (s_pos, s_negs) 當成單一 anchor 的一列 logits，走 anchor_losses 求 ∂ℓ/∂s_pos"""
    pos = Tensor(np.array([[s_pos]]), requires_grad=True, dtype=np.float64)
    with Tape() as tape:
        row = concat([log(pos), Tensor(np.log(s_negs)[None, :], dtype=np.float64)], axis=1)
        mask = np.ones(row.shape, dtype=bool)
        loss = contrastive.anchor_losses(row, np.array([0]), mask, exclude_positive).sum()
    backward(loss, tape, [pos])
    return float(pos.grad[0, 0])


def gradient_factor_check(s_pos: float, s_negs) -> GradientFactors:
    """∂ℓ/∂s_pos 的閉式解（兩種損失），並以 nt_xent / equimod_loss 共用的 anchor_losses 做 autodiff 交叉驗證"""
    s_negs = np.asarray(s_negs, dtype=np.float64).reshape(-1)
    if s_negs.size == 0:
        raise ContractError("gradient_factor_check needs at least one negative similarity")
    if not s_pos > 0 or np.any(s_negs <= 0):
        raise ContractError("similarities must be positive")

    neg_sum = float(s_negs.sum())
    d_equimod = -1.0 / s_pos
    d_equiav = -neg_sum / (s_pos * (s_pos + neg_sum))
    factor = neg_sum / (s_pos + neg_sum)

    autodiff_equiav = _autodiff_pos_grad(s_pos, s_negs, exclude_positive=False)
    autodiff_equimod = _autodiff_pos_grad(s_pos, s_negs, exclude_positive=True)
    return GradientFactors(d_equiav, d_equimod, factor, autodiff_equiav, autodiff_equimod)
