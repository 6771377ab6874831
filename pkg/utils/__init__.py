"""共用工具模組"""

from .errors import EquiAVError
from .rng import keyed_rng

__all__ = ['EquiAVError', 'keyed_rng']
