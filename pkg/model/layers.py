"""
基本層：Linear / LayerNorm / MultiHeadAttention / FeedForward / TransformerBlock

所有 forward 都接受任意前置 batch 軸（最後兩軸為 tokens×d 或最後一軸為特徵）。
"""

import math

import numpy as np

import config
from model.base import Module, truncated_normal
from numerics import Tensor, gelu, layer_norm, matmul, softmax
from utils.errors import ConfigError, ContractError


class Linear(Module):
    """y = x·W + b；W 為 in×out"""

    def __init__(self, name: str, in_dim: int, out_dim: int, rng: np.random.Generator,
                 bias: bool = True, std: float = config.INIT_STD):
        super().__init__(name)
        self.in_dim, self.out_dim = in_dim, out_dim
        self.w = self.add_parameter('w', truncated_normal(rng, (in_dim, out_dim), std))
        self.b = self.add_parameter('b', np.zeros(out_dim)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_dim:
            raise ContractError(f"{self.name}: expected last dim {self.in_dim}, got shape {x.shape}")
        y = matmul(x, self.w.tensor) if x.ndim >= 2 else matmul(x.reshape(1, -1), self.w.tensor).reshape(-1)
        if self.b is not None:
            y = y + self.b.tensor
        return y


class LayerNorm(Module):

    def __init__(self, name: str, dim: int, eps: float = config.LAYER_NORM_EPS):
        super().__init__(name)
        self.eps = eps
        self.gamma = self.add_parameter('gamma', np.ones(dim))
        self.beta = self.add_parameter('beta', np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma.tensor, self.beta.tensor, self.eps)


def _head_axes(ndim: int) -> tuple:
    """(..., L, H, dh) ↔ (..., H, L, dh)"""
    lead = tuple(range(ndim - 3))
    return lead + (ndim - 2, ndim - 3, ndim - 1)


class MultiHeadAttention(Module):
    """無 bias 的多頭注意力；w_q/w_k/w_v 的第 j 段欄位即第 j 個 head 的投影"""

    def __init__(self, name: str, dim: int, heads: int, rng: np.random.Generator,
                 std: float = config.INIT_STD):
        super().__init__(name)
        if dim % heads != 0:
            raise ConfigError(f"embed dim {dim} not divisible by heads {heads}")
        self.dim, self.heads, self.head_dim = dim, heads, dim // heads
        self.wq = self.add_parameter('wq', truncated_normal(rng, (dim, dim), std))
        self.wk = self.add_parameter('wk', truncated_normal(rng, (dim, dim), std))
        self.wv = self.add_parameter('wv', truncated_normal(rng, (dim, dim), std))
        self.wo = self.add_parameter('wo', truncated_normal(rng, (dim, dim), std))

    def _split(self, x: Tensor) -> Tensor:
        shape = x.shape[:-1] + (self.heads, self.head_dim)
        y = x.reshape(shape)
        return y.transpose(_head_axes(y.ndim))

    def _merge(self, x: Tensor) -> Tensor:
        y = x.transpose(_head_axes(x.ndim))
        return y.reshape(y.shape[:-2] + (self.dim,))

    def attention_weights(self, query: Tensor, kv: Tensor) -> Tensor:
        """(..., H, Lq, Lk)，每列為 token 上的機率分布"""
        q = self._split(matmul(query, self.wq.tensor))
        k = self._split(matmul(kv, self.wk.tensor))
        scores = matmul(q, k.transpose(_swap_last(k.ndim))) * (1.0 / math.sqrt(self.head_dim))
        return softmax(scores, axis=-1)

    def forward(self, query: Tensor, kv: Tensor) -> Tensor:
        if query.shape[-1] != self.dim or kv.shape[-1] != self.dim:
            raise ContractError(f"{self.name}: expected dim {self.dim}, got {query.shape} / {kv.shape}")
        weights = self.attention_weights(query, kv)
        v = self._split(matmul(kv, self.wv.tensor))
        return matmul(self._merge(matmul(weights, v)), self.wo.tensor)


def _swap_last(ndim: int) -> tuple:
    return tuple(range(ndim - 2)) + (ndim - 1, ndim - 2)


class FeedForward(Module):
    """殘差形式：x + W2·GELU(W1·LN(x))，d → hidden → d"""

    def __init__(self, name: str, dim: int, hidden: int, rng: np.random.Generator,
                 eps: float = config.LAYER_NORM_EPS):
        super().__init__(name)
        self.norm = self.add_child('norm', LayerNorm(self._path('norm'), dim, eps))
        self.fc1 = self.add_child('fc1', Linear(self._path('fc1'), dim, hidden, rng))
        self.fc2 = self.add_child('fc2', Linear(self._path('fc2'), hidden, dim, rng))

    def forward(self, x: Tensor) -> Tensor:
        return x + self.fc2(gelu(self.fc1(self.norm(x))))


class TransformerBlock(Module):
    """pre-norm：x + MHA(LN(x)) → x + FFN(x)"""

    def __init__(self, name: str, dim: int, heads: int, mlp_ratio: int, rng: np.random.Generator,
                 eps: float = config.LAYER_NORM_EPS):
        super().__init__(name)
        self.norm = self.add_child('norm', LayerNorm(self._path('norm'), dim, eps))
        self.attn = self.add_child('attn', MultiHeadAttention(self._path('attn'), dim, heads, rng))
        self.ffn = self.add_child('ffn', FeedForward(self._path('ffn'), dim, dim * mlp_ratio, rng, eps))

    def forward(self, x: Tensor) -> Tensor:
        n = self.norm(x)
        return self.ffn(x + self.attn(n, n))
