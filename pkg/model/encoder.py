"""
Encoder：縮小版 ViT（patch embedding + learned positional embedding + pre-norm blocks）

沒有 class token，也沒有最後一層 norm；輸出為 tokens×d 的序列，
只在需要的地方（predictor 殘差、intra 投影）做 mean pool。
"""

from dataclasses import dataclass

import numpy as np

import config
from augment.spec import AUDIO, ModalityInput, check_modality
from model.base import Module, truncated_normal
from model.layers import Linear, TransformerBlock
from numerics import Tensor
from utils.errors import ConfigError


@dataclass(frozen=True)
class EncoderConfig:
    modality: str
    input_shape: tuple
    patch_size: int = config.PATCH_SIZE
    embed_dim: int = config.EMBED_DIM
    depth: int = config.DEPTH
    heads: int = config.HEADS
    mlp_ratio: int = config.MLP_RATIO
    layer_norm_eps: float = config.LAYER_NORM_EPS

    def __post_init__(self):
        check_modality(self.modality)
        expected_axes = 2 if self.modality == AUDIO else 3
        if len(self.input_shape) != expected_axes:
            raise ConfigError(f"{self.modality} input shape must have {expected_axes} axes, got {self.input_shape}")
        p = self.patch_size
        if p <= 0 or any(s % p for s in self.input_shape[:2]):
            raise ConfigError(f"input shape {self.input_shape} not divisible by patch size {p}")
        if self.embed_dim <= 0 or self.heads <= 0 or self.embed_dim % self.heads:
            raise ConfigError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.depth < 0:
            raise ConfigError(f"depth must be >= 0, got {self.depth}")

    @property
    def grid(self) -> tuple:
        return self.input_shape[0] // self.patch_size, self.input_shape[1] // self.patch_size

    @property
    def num_tokens(self) -> int:
        rows, cols = self.grid
        return rows * cols

    @property
    def patch_dim(self) -> int:
        channels = 1 if len(self.input_shape) == 2 else self.input_shape[2]
        return self.patch_size * self.patch_size * channels


def patchify(x: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
    """(..., R, C[, ch]) → (..., tokens, p·p·ch)，tokens 以 row-major 排列"""
    shape = tuple(cfg.input_shape)
    lead = x.shape[:x.ndim - len(shape)]
    if x.shape[len(lead):] != shape:
        raise ConfigError(f"{cfg.modality} encoder expects {shape}, got {x.shape[len(lead):]}")
    if len(shape) == 2:
        x = x[..., None]
    p = cfg.patch_size
    gr, gc = cfg.grid
    ch = x.shape[-1]
    n = len(lead)
    x = x.reshape(lead + (gr, p, gc, p, ch))
    x = x.transpose(tuple(range(n)) + (n, n + 2, n + 1, n + 3, n + 4))
    return np.ascontiguousarray(x.reshape(lead + (gr * gc, p * p * ch)))


class Encoder(Module):
    """f_m：輸入 → tokens×d"""

    def __init__(self, name: str, cfg: EncoderConfig, rng: np.random.Generator):
        super().__init__(name)
        self.cfg = cfg
        self.modality = cfg.modality
        d = cfg.embed_dim
        self.patch_embed = self.add_child('patch_embed', Linear(self._path('patch_embed'), cfg.patch_dim, d, rng))
        self.pos = self.add_parameter('pos', truncated_normal(rng, (cfg.num_tokens, d), config.INIT_STD))
        self.blocks = [
            self.add_child(f'block{i}', TransformerBlock(self._path(f'block{i}'), d, cfg.heads,
                                                         cfg.mlp_ratio, rng, cfg.layer_norm_eps))
            for i in range(cfg.depth)
        ]

    def embed_patches(self, x: np.ndarray) -> Tensor:
        tokens = Tensor(patchify(np.asarray(x), self.cfg))
        return self.patch_embed(tokens) + self.pos.tensor

    def forward(self, x) -> Tensor:
        """x: 單筆 (*input_shape) 或 batch (N, *input_shape)"""
        data = x.data if isinstance(x, Tensor) else np.asarray(x)
        h = self.embed_patches(data)
        for block in self.blocks:
            h = block(h)
        return h


def encode(encoder: Encoder, inp) -> Tensor:
    """ModalityInput（或陣列）→ tokens×d"""
    if isinstance(inp, ModalityInput):
        if inp.modality != encoder.modality:
            raise ConfigError(f"{encoder.name} encodes {encoder.modality}, got {inp.modality} input")
        return encoder(inp.data)
    return encoder(inp)
