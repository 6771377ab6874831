"""
EquiAVModel：audio / visual 兩個 branch

每個 branch：encoder f_m、predictor u_m（intra 與 inter 共用同一物件）、
intra head g_m^intra、inter head g_m^inter。
"""

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

import config
from augment.registry import VECTOR_DIMS
from augment.spec import AUDIO, MODALITIES, check_modality
from model.base import Module
from model.encoder import Encoder, EncoderConfig
from model.heads import ProjectionHead
from model.predictor import TransformationPredictor
from numerics import Tensor, as_tensor, l2_normalize, mean_pool, no_grad
from utils.errors import ConfigError, ContractError
from utils.rng import STREAM_INIT, keyed_rng

INTER_ANCHORS = ('original', 'augmented', 'equivariant', 'centroid')


@dataclass(frozen=True)
class ModelConfig:
    audio_shape: tuple = config.AUDIO_SHAPE
    visual_shape: tuple = config.VISUAL_SHAPE
    patch_size: int = config.PATCH_SIZE
    embed_dim: int = config.EMBED_DIM
    depth: int = config.DEPTH
    heads: int = config.HEADS
    mlp_ratio: int = config.MLP_RATIO
    proj_dim: int = config.PROJ_DIM
    layer_norm_eps: float = config.LAYER_NORM_EPS
    seed: int = config.SEED

    def __post_init__(self):
        if self.proj_dim <= 0:
            raise ConfigError(f"proj_dim must be positive, got {self.proj_dim}")

    @classmethod
    def from_config(cls, cfg) -> 'ModelConfig':
        """從任何帶同名屬性的物件（例如 TrainConfig）取出模型欄位"""
        kwargs = {}
        for f in fields(cls):
            if hasattr(cfg, f.name):
                value = getattr(cfg, f.name)
                kwargs[f.name] = tuple(value) if f.name.endswith('_shape') else value
        return cls(**kwargs)

    def encoder_config(self, modality: str) -> EncoderConfig:
        shape = self.audio_shape if modality == AUDIO else self.visual_shape
        return EncoderConfig(
            modality=modality,
            input_shape=tuple(shape),
            patch_size=self.patch_size,
            embed_dim=self.embed_dim,
            depth=self.depth,
            heads=self.heads,
            mlp_ratio=self.mlp_ratio,
            layer_norm_eps=self.layer_norm_eps,
        )


@dataclass
class EmbeddingSet:
    """一個 modality 在一個 batch 上的 embedding（皆為 N×p）"""

    modality: str
    z_hat: Optional[Tensor] = None      # intra：等變預測
    z_prime: Optional[Tensor] = None    # intra：增強 view
    z_second: Optional[Tensor] = None   # intra：第二個增強 view（invariant mode）
    z_inter: Optional[Tensor] = None    # inter anchor（預設為 centroid z̄）

    def check(self):
        rows = None
        for name in ('z_hat', 'z_prime', 'z_second', 'z_inter'):
            t = getattr(self, name)
            if t is None:
                continue
            if rows is not None and t.shape[0] != rows:
                raise ContractError(f"{self.modality}.{name} has {t.shape[0]} rows, expected {rows}")
            rows = t.shape[0]
            if not np.all(np.isfinite(t.data)):
                raise ContractError(f"{self.modality}.{name} contains non-finite values")
        return self


class ModalityBranch(Module):

    def __init__(self, modality: str, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__(modality)
        self.modality = modality
        d = cfg.embed_dim
        self.encoder = self.add_child('encoder', Encoder(self._path('encoder'), cfg.encoder_config(modality), rng))
        self.predictor = self.add_child('predictor', TransformationPredictor(
            self._path('predictor'), d, VECTOR_DIMS[modality], cfg.heads, rng,
            mlp_ratio=cfg.mlp_ratio, eps=cfg.layer_norm_eps))
        self.intra_head = self.add_child('intra_head', ProjectionHead(
            self._path('intra_head'), 'intra', d, cfg.proj_dim, rng, eps=cfg.layer_norm_eps))
        self.inter_head = self.add_child('inter_head', ProjectionHead(
            self._path('inter_head'), 'inter', d, cfg.proj_dim, rng, eps=cfg.layer_norm_eps))

    def forward(self, x) -> Tensor:
        return self.encoder(x)


class EquiAVModel(Module):

    def __init__(self, cfg: ModelConfig):
        super().__init__('')
        self.cfg = cfg
        rng = keyed_rng(cfg.seed, STREAM_INIT)
        self.branches = {m: self.add_child(m, ModalityBranch(m, cfg, rng)) for m in MODALITIES}

    def branch(self, modality: str) -> ModalityBranch:
        check_modality(modality)
        return self.branches[modality]

    def forward(self, modality: str, x) -> Tensor:
        return self.branch(modality).encoder(x)

    def encode(self, modality: str, x) -> Tensor:
        return self.forward(modality, x)

    def embed_intra(self, modality: str, h: Tensor, h_aug: Tensor, vectors) -> tuple[Tensor, Tensor]:
        """(ẑ, z′)：ẑ = g^intra(u(h, t))、z′ = g^intra(MeanPool(h′))"""
        b = self.branch(modality)
        z_hat = b.intra_head(b.predictor.predict(h, vectors))
        z_prime = b.intra_head(mean_pool(h_aug))
        return z_hat, z_prime

    def embed_inter(self, modality: str, x, vectors) -> Tensor:
        """z̄ = g^inter(centroid(f(x), S 個向量))；x 為未增強輸入"""
        b = self.branch(modality)
        return b.inter_head(b.predictor.centroid(b.encoder(x), vectors))

    def inter_anchor(self, modality: str, mode: str, h: Tensor, h_aug: Optional[Tensor] = None,
                     intra_vectors=None, inter_vectors=None) -> Tensor:
        """依 anchor 模式取 inter embedding（original / augmented / equivariant / centroid）"""
        b = self.branch(modality)
        if mode == 'original':
            rep = mean_pool(h)
        elif mode == 'augmented':
            rep = mean_pool(h_aug)
        elif mode == 'equivariant':
            rep = b.predictor.predict(h, intra_vectors)
        elif mode == 'centroid':
            rep = b.predictor.centroid(h, inter_vectors)
        else:
            raise ConfigError(f"unknown inter anchor {mode!r}; expected one of {INTER_ANCHORS}")
        return b.inter_head(rep)


def build_model(cfg=None) -> EquiAVModel:
    """TrainConfig / ModelConfig / None（全部預設）→ EquiAVModel"""
    if cfg is None:
        model_cfg = ModelConfig()
    elif isinstance(cfg, ModelConfig):
        model_cfg = cfg
    else:
        model_cfg = ModelConfig.from_config(cfg)
    return EquiAVModel(model_cfg)


def equivariance_similarity(model: EquiAVModel, modality: str, x, x_aug, vectors) -> float:
    """ẑ 與 z′ 的平均 cosine（predictor 預測得多準）"""
    with no_grad():
        h = model.encode(modality, x)
        h_aug = model.encode(modality, x_aug)
        z_hat, z_prime = model.embed_intra(modality, h, h_aug, as_tensor(vectors))
        cos = (l2_normalize(z_hat).data * l2_normalize(z_prime).data).sum(axis=-1)
    return float(cos.mean())
