"""
模組基底類別

所有可學習元件（layer / encoder / predictor / head）都繼承 Module。
參數以完整路徑命名（例如 "audio.encoder.block0.attn.wq"），
子模組共用時（同一物件掛在兩處）parameters() 只回傳一次。
"""

from abc import ABC, abstractmethod
from typing import Iterator, Optional

import numpy as np

from numerics import Parameter, Tensor
from utils.errors import ConfigError


def truncated_normal(rng: np.random.Generator, shape: tuple, std: float) -> np.ndarray:
    """N(0, std²) 截在 ±2std（超出的重抽）"""
    x = rng.normal(0.0, std, size=shape)
    bad = np.abs(x) > 2 * std
    while bad.any():
        x[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(x) > 2 * std
    return x


class Module(ABC):
    """可學習元件基底"""

    def __init__(self, name: str):
        self.name = name
        self._params: dict[str, Parameter] = {}
        self._children: dict[str, 'Module'] = {}

    def _path(self, local: str) -> str:
        return f"{self.name}.{local}" if self.name else local

    def add_parameter(self, local: str, values: np.ndarray) -> Parameter:
        if local in self._params:
            raise ConfigError(f"duplicate parameter {self._path(local)}")
        p = Parameter(self._path(local), Tensor(values))
        self._params[local] = p
        return p

    def add_child(self, local: str, module: 'Module') -> 'Module':
        self._children[local] = module
        return module

    def named_parameters(self) -> Iterator[tuple[str, Parameter]]:
        """依註冊順序走訪；同一 Parameter 物件只出現一次"""
        seen: set[int] = set()
        order: list[Module] = []

        def walk(m: Module):
            order.append(m)
            for child in m._children.values():
                walk(child)

        walk(self)
        for module in order:
            for p in module._params.values():
                if id(p) in seen:
                    continue
                seen.add(id(p))
                yield p.name, p

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def parameter(self, name: str) -> Optional[Parameter]:
        for n, p in self.named_parameters():
            if n == name:
                return p
        return None

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    @abstractmethod
    def forward(self, *args, **kwargs) -> Tensor:
        pass

    def __call__(self, *args, **kwargs) -> Tensor:
        return self.forward(*args, **kwargs)

    def get_status(self) -> dict:
        return {
            'name': self.name,
            'type': type(self).__name__,
            'parameters': len(self.parameters()),
            'values': self.num_parameters(),
        }
