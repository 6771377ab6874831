"""
TransformationPredictor：由 (h, t) 預測增強後的表示

    ĥ = FFN( MHA(f_t(t), h, h) + MeanPool(h) )

f_t 為單一 affine map（d_t → d），query 為單一 token；
一次給 S 個向量時就是 S 個獨立的 single-token query，centroid 為其平均。
同一個 predictor 物件同時服務 intra 與 inter 路徑。
"""

from typing import Optional

import numpy as np

import config
from model.base import Module
from model.layers import FeedForward, Linear, MultiHeadAttention
from numerics import Tensor, as_tensor, l2_normalize, mean, mean_pool, no_grad
from utils.errors import ContractError


class TransformationPredictor(Module):

    def __init__(self, name: str, embed_dim: int, vector_dim: int, heads: int, rng: np.random.Generator,
                 mlp_ratio: int = config.MLP_RATIO, eps: float = config.LAYER_NORM_EPS):
        super().__init__(name)
        self.embed_dim, self.vector_dim = embed_dim, vector_dim
        self.f_t = self.add_child('f_t', Linear(self._path('f_t'), vector_dim, embed_dim, rng))
        self.attn = self.add_child('attn', MultiHeadAttention(self._path('attn'), embed_dim, heads, rng))
        self.ffn = self.add_child('ffn', FeedForward(self._path('ffn'), embed_dim, embed_dim * mlp_ratio, rng, eps))

    def _check(self, h: Tensor, t: Tensor):
        if t.shape[-1] != self.vector_dim:
            raise ContractError(f"{self.name}: augmentation vector dim {t.shape[-1]} != {self.vector_dim}")
        if h.ndim < 2 or h.shape[-1] != self.embed_dim:
            raise ContractError(f"{self.name}: expected tokens×{self.embed_dim}, got {h.shape}")

    def forward(self, h: Tensor, t) -> Tensor:
        """h: (..., L, d)；t: (..., S, d_t) → (..., S, d)"""
        t = as_tensor(t)
        self._check(h, t)
        if t.ndim != h.ndim or t.shape[:-2] != h.shape[:-2]:
            raise ContractError(f"{self.name}: vector stack {t.shape} not aligned with tokens {h.shape}")
        query = self.f_t(t)
        pooled = mean_pool(h)
        pooled = pooled.reshape(pooled.shape[:-1] + (1, self.embed_dim))
        return self.ffn(self.attn(query, h) + pooled)

    def predict(self, h: Tensor, t) -> Tensor:
        """單一向量：h (..., L, d)、t (..., d_t) → (..., d)"""
        t = as_tensor(t)
        self._check(h, t)
        out = self.forward(h, t.reshape(t.shape[:-1] + (1, self.vector_dim)))
        return out.reshape(out.shape[:-2] + (self.embed_dim,))

    def centroid(self, h: Tensor, vectors) -> Tensor:
        """S 個向量的等變表示平均：h (..., L, d)、vectors (..., S, d_t) → (..., d)"""
        vectors = as_tensor(vectors)
        if vectors.ndim < 2 or vectors.shape[-2] == 0:
            raise ContractError(f"{self.name}: centroid needs S >= 1 vectors, got shape {vectors.shape}")
        return mean(self.forward(h, vectors), axis=-2)


def predict_equivariant(predictor: TransformationPredictor, h: Tensor, t) -> Tensor:
    return predictor.predict(h, t)


def compute_centroid(predictor: TransformationPredictor, h: Tensor, vectors) -> Tensor:
    return predictor.centroid(h, vectors)


def nearest_to_centroid(predictor: TransformationPredictor, h: Tensor, vectors) -> int:
    """S 個等變表示中 cosine 最接近其 centroid 的索引（h 為單筆 tokens×d）"""
    vectors = as_tensor(vectors)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ContractError(f"nearest_to_centroid needs S×d_t vectors, got shape {vectors.shape}")
    with no_grad():
        reps = predictor.forward(h.reshape((1,) + h.shape), vectors.reshape((1,) + vectors.shape))
        reps = reps.data[0]
    unit = l2_normalize(Tensor(reps)).data
    center = l2_normalize(Tensor(reps.mean(axis=0))).data
    return int(np.argmax(unit @ center))
