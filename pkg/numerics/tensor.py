"""
Tensor 與 Tape：define-by-run 反向模式自動微分（numpy 後端）

核心機制：
1. 每個可微 op 產生新的 Tensor；若當下有啟用中的 Tape 且任一輸入 requires_grad，
   就把 (輸出, 輸入, vjp) 記到 Tape 上
2. backward(loss, tape) 依紀錄的反序回放 chain rule，每筆紀錄恰好走一次
   （執行順序即拓撲順序，反序即反向拓撲順序）
3. Tape 以 thread-local stack 管理：不同執行緒可同時在各自的 Tape 上做 forward

用法：
    with Tape() as tape:
        loss = (x * x).sum()
    backward(loss, tape, params=[x])

Tape 之外執行的 op 不記錄（等同 no_grad），評估路徑就是這樣跑的。
加總一律交給 numpy 的 reduction，相同 shape 下結果逐位元決定。
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

import config
from utils.errors import ContractError, EmptyInputError, ShapeError

_DTYPES = {'float64': np.float64, 'float32': np.float32}

_PROCESS_DTYPE = _DTYPES.get(config.PRECISION, np.float64)

# tape stack 與預設精度都是 per-thread，prefetch worker 不受主執行緒切換影響
_local = threading.local()


def get_default_dtype():
    return getattr(_local, 'dtype', _PROCESS_DTYPE)


@contextmanager
def default_dtype(name: str):
    """暫時切換目前執行緒的預設精度（'float64' / 'float32'）"""
    if name not in _DTYPES:
        raise ContractError(f"unknown precision {name!r}")
    prev = get_default_dtype()
    _local.dtype = _DTYPES[name]
    try:
        yield
    finally:
        _local.dtype = prev


# ============================================================
# Tensor
# ============================================================

class Tensor:
    """稠密多維實數陣列 + gradient slot"""

    __slots__ = ('data', 'requires_grad', 'grad', 'name')

    # 讓 numpy 的 ndarray op Tensor 交回給 Tensor 的反向運算子
    __array_priority__ = 100

    def __init__(self, values, requires_grad: bool = False, name: str = '', dtype=None):
        self.data = np.array(values, dtype=dtype or get_default_dtype())
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool = False) -> 'Tensor':
        """包裝 op 的輸出（不複製）"""
        t = cls.__new__(cls)
        t.data = arr
        t.requires_grad = requires_grad
        t.grad = None
        t.name = ''
        return t

    # ── 屬性 ──
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def values(self) -> np.ndarray:
        """row-major 攤平後的數值"""
        return self.data.reshape(-1)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> 'Tensor':
        return Tensor._wrap(self.data, requires_grad=False)

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ''
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    def __len__(self):
        return self.shape[0]

    # ── 運算子 ──
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, power):
        return power_(self, power)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    # ── 方法形式 ──
    def sum(self, axis=None, keepdims: bool = False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)


def as_tensor(x) -> Tensor:
    """常數（不需梯度）包成 Tensor；已是 Tensor 則原樣回傳"""
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


# ============================================================
# Tape
# ============================================================

@dataclass(eq=False)
class _Record:
    """一筆已執行的 op"""

    op: str
    out: Tensor
    inputs: tuple
    vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def _stack() -> list:
    if not hasattr(_local, 'tapes'):
        _local.tapes = []
    return _local.tapes


def active_tape() -> Optional['Tape']:
    tapes = _stack()
    return tapes[-1] if tapes else None


class Tape:
    """依執行順序記錄可微 op（context manager）"""

    def __init__(self):
        self.records: list[_Record] = []

    def __enter__(self) -> 'Tape':
        _stack().append(self)
        return self

    def __exit__(self, *exc):
        tapes = _stack()
        if tapes and tapes[-1] is self:
            tapes.pop()
        return False

    def __len__(self):
        return len(self.records)

    def ops(self) -> list[str]:
        return [r.op for r in self.records]


@contextmanager
def no_grad():
    """區塊內的 op 不記錄到任何 tape"""
    tapes = _stack()
    saved = tapes[:]
    tapes.clear()
    try:
        yield
    finally:
        tapes[:] = saved


def _make(op: str, out_data: np.ndarray, inputs: tuple, vjp) -> Tensor:
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(np.asarray(out_data), requires_grad=needs)
    if needs:
        tape.records.append(_Record(op, out, inputs, vjp))
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """把 broadcasting 後的梯度加總回原 shape"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


def _params_as_tensors(params) -> list[Tensor]:
    return [getattr(p, 'tensor', p) for p in params]


def backward(loss: Tensor, tape: Tape, params: Optional[Iterable] = None) -> dict:
    """反向回放 tape，把 ∂loss/∂leaf 寫進各 leaf 的 `.grad`

    Args:
        loss: 純量 Tensor
        tape: 記錄了 forward 的 Tape
        params: 需要梯度的參數（Tensor 或 Parameter）；走不到的會得到全零梯度

    Returns:
        dict: id(leaf) → gradient（含 params 與 tape 上其他 requires_grad leaf）
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    produced = {id(r.out) for r in tape.records}

    for rec in reversed(tape.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        in_grads = rec.vjp(g)
        for t, gi in zip(rec.inputs, in_grads):
            if gi is None or not t.requires_grad:
                continue
            key = id(t)
            if key not in produced:
                leaves[key] = t
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi

    if loss.requires_grad and id(loss) not in produced:
        leaves[id(loss)] = loss

    for key, t in leaves.items():
        t.grad = grads.get(key, np.zeros_like(t.data))

    result = {key: t.grad for key, t in leaves.items()}
    if params is not None:
        for t in _params_as_tensors(params):
            if id(t) not in leaves:
                t.grad = np.zeros_like(t.data)
            result[id(t)] = t.grad
    return result


# ============================================================
# 逐元素 op
# ============================================================

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _make('add', a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _make('sub', a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return _make('mul', ad * bd, (a, b),
                 lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    out = ad / bd
    return _make('div', out, (a, b),
                 lambda g: (_unbroadcast(g / bd, ad.shape),
                            _unbroadcast(-g * out / bd, bd.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _make('neg', -a.data, (a,), lambda g: (-g,))


def power_(a, p: float) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return _make('pow', ad ** p, (a,), lambda g: (g * p * ad ** (p - 1),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _make('exp', out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return _make('log', np.log(ad), (a,), lambda g: (g / ad,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return _make('sqrt', out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _make('tanh', out, (a,), lambda g: (g * (1.0 - out * out),))


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a) -> Tensor:
    """GELU（tanh 近似，處處平滑）"""
    a = as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def vjp(g):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

    return _make('gelu', out, (a,), vjp)


# ============================================================
# 線性代數
# ============================================================

def matmul(a, b) -> Tensor:
    """矩陣乘法（支援前置 batch 軸的 broadcasting）"""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}") from e
    ad, bd = a.data, b.data

    def vjp(g):
        ga = np.matmul(g, np.swapaxes(bd, -1, -2))
        gb = np.matmul(np.swapaxes(ad, -1, -2), g)
        return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

    return _make('matmul', out, (a, b), vjp)


# ============================================================
# 形狀 op
# ============================================================

def _norm_axes(axis, ndim: int) -> tuple:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    axes = _norm_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, shape).copy(),)

    return _make('sum', out, (a,), vjp)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    if count == 0:
        raise EmptyInputError(f"mean over empty axis {axis} of shape {a.shape}")
    return sum_(a, axis=axes, keepdims=keepdims) * (1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"cannot reshape {src} into {tuple(shape)}") from e
    return _make('reshape', out, (a,), lambda g: (g.reshape(src),))


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = tuple(np.argsort(axes))
    return _make('transpose', a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),))


def getitem(a, index) -> Tensor:
    a = as_tensor(a)
    shape, dtype = a.shape, a.data.dtype

    def vjp(g):
        out = np.zeros(shape, dtype=dtype)
        np.add.at(out, index, g)
        return (out,)

    return _make('getitem', a.data[index], (a,), vjp)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat shape mismatch: {[t.shape for t in tensors]}") from e
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _make('concat', out, tensors, lambda g: tuple(np.split(g, splits, axis=axis)))


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    try:
        out = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"stack shape mismatch: {[t.shape for t in tensors]}") from e
    return _make('stack', out, tensors,
                 lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(tensors))))


# ============================================================
# 正規化 / 機率 op
# ============================================================

def softmax(x, axis: int = -1) -> Tensor:
    """數值穩定的 softmax（先減最大值）"""
    x = as_tensor(x)
    if not -x.ndim <= axis < x.ndim:
        raise ContractError(f"softmax axis {axis} invalid for shape {x.shape}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make('softmax', out, (x,), vjp)


def logsumexp(x, axis: int = -1, mask: Optional[np.ndarray] = None,
              keepdims: bool = False) -> Tensor:
    """log Σ exp(x)；mask 為 False 的位置不參與加總"""
    x = as_tensor(x)
    xd = x.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), xd.shape)
        if not mask.any(axis=axis).all():
            raise ContractError("logsumexp: a slice is fully masked (empty sum)")
        xd = np.where(mask, xd, -np.inf)
    m = xd.max(axis=axis, keepdims=True)
    e = np.exp(xd - m)
    s = e.sum(axis=axis, keepdims=True)
    out = m + np.log(s)
    weights = e / s
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * weights,)

    return _make('logsumexp', out, (x,), vjp)


def layer_norm(x, gamma, beta, eps: float = config.LAYER_NORM_EPS) -> Tensor:
    """最後一軸的 layer normalization：gamma · x̂ + beta"""
    if eps <= 0:
        raise ContractError(f"layer_norm eps must be positive, got {eps}")
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    centered = xd - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = gamma.data * xhat + beta.data
    gshape, bshape = gamma.shape, beta.shape

    def vjp(g):
        gxhat = g * gamma.data
        gx = inv_std * (gxhat - gxhat.mean(axis=-1, keepdims=True)
                        - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        return gx, _unbroadcast(g * xhat, gshape), _unbroadcast(g, bshape)

    return _make('layer_norm', out, (x, gamma, beta), vjp)


def mean_pool(x, axis: int = -2) -> Tensor:
    """token 軸的算術平均（tokens×d → d，前置 batch 軸保留）"""
    x = as_tensor(x)
    if x.ndim < 2:
        raise ContractError(f"mean_pool needs tokens×d input, got shape {x.shape}")
    if x.shape[axis] == 0:
        raise EmptyInputError(f"mean_pool over zero tokens (shape {x.shape})")
    return mean(x, axis=axis)


def l2_normalize(x, axis: int = -1, eps: float = config.NORMALIZE_EPS) -> Tensor:
    """沿 axis 除以 max(‖x‖, eps)"""
    x = as_tensor(x)
    xd = x.data
    norm = np.sqrt((xd * xd).sum(axis=axis, keepdims=True))
    safe = np.maximum(norm, eps)
    out = xd / safe
    clipped = norm <= eps

    def vjp(g):
        full = (g - out * (g * out).sum(axis=axis, keepdims=True)) / safe
        return (np.where(clipped, g / eps, full),)

    return _make('l2_normalize', out, (x,), vjp)
