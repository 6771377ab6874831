"""
numerics：自動微分與最佳化器
"""

from numerics.tensor import (
    Tape,
    Tensor,
    active_tape,
    add,
    as_tensor,
    backward,
    concat,
    default_dtype,
    div,
    exp,
    gelu,
    get_default_dtype,
    getitem,
    layer_norm,
    l2_normalize,
    log,
    logsumexp,
    matmul,
    mean,
    mean_pool,
    mul,
    no_grad,
    reshape,
    softmax,
    sqrt,
    stack,
    sub,
    sum_,
    tanh,
    transpose,
)
from numerics.optim import Parameter, adamw_step, cosine_lr, zero_grad
from numerics.gradcheck import GradCheckResult, gradcheck, rel_error

__all__ = [
    'Tape', 'Tensor', 'active_tape', 'add', 'as_tensor', 'backward', 'concat',
    'default_dtype', 'div', 'exp', 'gelu', 'get_default_dtype', 'getitem',
    'layer_norm', 'l2_normalize', 'log', 'logsumexp', 'matmul', 'mean',
    'mean_pool', 'mul', 'no_grad', 'reshape', 'softmax', 'sqrt', 'stack',
    'sub', 'sum_', 'tanh', 'transpose',
    'Parameter', 'adamw_step', 'cosine_lr', 'zero_grad',
    'GradCheckResult', 'gradcheck', 'rel_error',
]
