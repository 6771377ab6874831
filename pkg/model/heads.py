"""
ProjectionHead：3 層 MLP（Linear → LN → GELU → Linear → LN → GELU → Linear）
"""

import numpy as np

import config
from model.base import Module
from model.layers import LayerNorm, Linear
from numerics import Tensor, gelu
from utils.errors import ConfigError, ContractError

SCOPES = ('intra', 'inter')


class ProjectionHead(Module):

    def __init__(self, name: str, scope: str, in_dim: int, out_dim: int, rng: np.random.Generator,
                 hidden: int = None, eps: float = config.LAYER_NORM_EPS):
        super().__init__(name)
        if scope not in SCOPES:
            raise ConfigError(f"unknown projection scope {scope!r}")
        self.scope = scope
        self.in_dim, self.out_dim = in_dim, out_dim
        hidden = hidden or in_dim
        self.fc1 = self.add_child('fc1', Linear(self._path('fc1'), in_dim, hidden, rng))
        self.norm1 = self.add_child('norm1', LayerNorm(self._path('norm1'), hidden, eps))
        self.fc2 = self.add_child('fc2', Linear(self._path('fc2'), hidden, hidden, rng))
        self.norm2 = self.add_child('norm2', LayerNorm(self._path('norm2'), hidden, eps))
        self.fc3 = self.add_child('fc3', Linear(self._path('fc3'), hidden, out_dim, rng))

    def forward(self, rep: Tensor) -> Tensor:
        if rep.shape[-1] != self.in_dim:
            raise ContractError(f"{self.name}: expected representation dim {self.in_dim}, got {rep.shape}")
        x = gelu(self.norm1(self.fc1(rep)))
        x = gelu(self.norm2(self.fc2(x)))
        return self.fc3(x)


def project(head: ProjectionHead, rep: Tensor) -> Tensor:
    return head(rep)
