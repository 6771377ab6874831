"""
對比損失：similarity / intra-modal NT-Xent / inter-modal InfoNCE / 加權總和

全部在 log 空間計算：logits = cos / τ，分母用 masked logsumexp。
s_ij = exp(cos(z_i, z_j) / τ) 只在 similarity_matrix 需要明確輸出時才取 exp。
"""

from dataclasses import dataclass, field

import numpy as np

import config
from numerics import Tensor, as_tensor, concat, exp, l2_normalize, logsumexp, matmul
from utils.errors import ConfigError, ContractError, DegenerateEmbeddingError

INTRA_MODES = ('equivariant', 'invariant')
INTRA_LOSSES = ('equiav', 'equimod')


def _check_tau(tau: float):
    if not tau > 0:
        raise ContractError(f"temperature must be positive, got {tau}")


def _check_rows(z: Tensor, label: str):
    if z.ndim != 2:
        raise ContractError(f"{label} must be N×p, got shape {z.shape}")
    if z.shape[0] == 0:
        raise ContractError(f"{label} is empty (N=0)")
    norms = np.sqrt((z.data * z.data).sum(axis=-1))
    bad = np.nonzero(norms <= config.NORMALIZE_EPS)[0]
    if bad.size:
        raise DegenerateEmbeddingError(f"{label} has zero-norm rows {bad.tolist()}")


def _check_pair(a: Tensor, b: Tensor, la: str, lb: str):
    _check_rows(a, la)
    _check_rows(b, lb)
    if a.shape[1] != b.shape[1]:
        raise ContractError(f"embedding dims differ: {la} {a.shape} vs {lb} {b.shape}")


def cosine_logits(a, b, tau: float) -> Tensor:
    """cos(a_i, b_j) / τ，N×M"""
    a, b = as_tensor(a), as_tensor(b)
    _check_tau(tau)
    _check_pair(a, b, 'A', 'B')
    an, bn = l2_normalize(a), l2_normalize(b)
    return matmul(an, bn.T) * (1.0 / tau)


def similarity_matrix(a, b, tau: float = config.TEMPERATURE) -> Tensor:
    """s_ij = exp(cos(a_i, b_j) / τ)"""
    return exp(cosine_logits(a, b, tau))


def nt_xent(first: Tensor, second: Tensor, tau: float, exclude_positive: bool = False) -> Tensor:
    """雙向 NT-Xent：anchor 為 2N 個 embedding 中的每一個

    anchor i 的正例是另一組的第 i 個；分母含除自己以外的 2N-1 個
    （exclude_positive=True 時再拿掉正例）。回傳 1/(2N) Σ 各 anchor 損失。
    """
    first, second = as_tensor(first), as_tensor(second)
    _check_tau(tau)
    _check_pair(first, second, 'first', 'second')
    if first.shape != second.shape:
        raise ContractError(f"shape mismatch: {first.shape} vs {second.shape}")
    n = first.shape[0]
    z = l2_normalize(concat([first, second], axis=0))
    logits = matmul(z, z.T) * (1.0 / tau)

    idx = np.arange(2 * n)
    pos = (idx + n) % (2 * n)
    return anchor_losses(logits, pos, ~np.eye(2 * n, dtype=bool), exclude_positive).mean()


def anchor_losses(logits: Tensor, pos: np.ndarray, mask: np.ndarray,
                  exclude_positive: bool = False) -> Tensor:
    """每個 anchor 的 -log(s_pos / Σ 分母)，logits 第 i 列的正例在 pos[i] 欄

    mask 為 False 的欄位不進分母；exclude_positive=True 時正例也拿掉（EquiMod）。
    """
    logits = as_tensor(logits)
    idx = np.arange(logits.shape[0])
    mask = np.array(mask, dtype=bool)
    if exclude_positive:
        mask[idx, pos] = False
    return logsumexp(logits, axis=-1, mask=mask) - logits[idx, pos]


def intra_loss(z_hat, z_prime, tau: float = config.TEMPERATURE, mode: str = 'equivariant') -> Tensor:
    """L^intra = ½(ℓ(ẑ, z′) + ℓ(z′, ẑ))

    mode='invariant' 時第一個參數傳第二個增強 view 的 embedding，計算式相同。
    """
    if mode not in INTRA_MODES:
        raise ConfigError(f"unknown intra mode {mode!r}; expected one of {INTRA_MODES}")
    return nt_xent(z_hat, z_prime, tau)


def inter_loss(z_a, z_v, tau: float = config.TEMPERATURE) -> Tensor:
    """對稱 InfoNCE：½(ℓ(z_a, z_v) + ℓ(z_v, z_a))，正例在對角線"""
    z_a, z_v = as_tensor(z_a), as_tensor(z_v)
    if z_a.shape != z_v.shape:
        raise ContractError(f"shape mismatch: audio {z_a.shape} vs visual {z_v.shape}")
    logits = cosine_logits(z_a, z_v, tau)
    n = z_a.shape[0]
    idx = np.arange(n)
    positives = logits[idx, idx]
    a_to_v = (logsumexp(logits, axis=1) - positives).mean()
    v_to_a = (logsumexp(logits, axis=0) - positives).mean()
    return (a_to_v + v_to_a) * 0.5


# ============================================================
# 加權總和
# ============================================================

@dataclass(frozen=True)
class LossWeights:
    inter: float = config.LAMBDA_INTER
    intra_a: float = config.LAMBDA_INTRA_A
    intra_v: float = config.LAMBDA_INTRA_V

    def __post_init__(self):
        values = (self.inter, self.intra_a, self.intra_v)
        if any(v < 0 for v in values):
            raise ConfigError(f"loss weights must be non-negative, got {values}")
        if not any(v > 0 for v in values):
            raise ConfigError("at least one loss weight must be positive")

    def as_dict(self) -> dict:
        return {'inter': self.inter, 'intra_a': self.intra_a, 'intra_v': self.intra_v}


@dataclass
class LossOutput:
    total: Tensor
    components: dict = field(default_factory=dict)

    def as_floats(self) -> dict:
        out = {'loss_total': self.total.item()}
        for name, value in self.components.items():
            out[f'loss_{name}'] = value.item()
        return out


def total_loss(components: dict, weights: LossWeights = None) -> LossOutput:
    """λ_inter·L^inter + λ_a·L_a^intra + λ_v·L_v^intra"""
    weights = weights or LossWeights()
    w = weights.as_dict()
    missing = [k for k in w if k not in components]
    if missing:
        raise ContractError(f"missing loss components: {missing}")
    terms = {k: as_tensor(components[k]) for k in w}
    for name, t in terms.items():
        if not np.all(np.isfinite(t.data)):
            raise ContractError(f"loss component {name} is not finite")
    total = terms['inter'] * w['inter'] + terms['intra_a'] * w['intra_a'] + terms['intra_v'] * w['intra_v']
    return LossOutput(total=total, components=terms)
