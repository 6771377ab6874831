"""
列舉式 oracle：逐 anchor、逐 pair 用純 Python float + math.fsum 重算

與向量化實作互相獨立，供 losscheck 與測試比對。
"""

import math
from typing import Sequence

import numpy as np


def _unit(row) -> list[float]:
    norm = math.sqrt(math.fsum(float(x) * float(x) for x in row))
    return [float(x) / norm for x in row]


def _cos(u, v) -> float:
    return math.fsum(a * b for a, b in zip(u, v))


def similarity_oracle(a, b, tau: float) -> np.ndarray:
    ua = [_unit(r) for r in np.asarray(a)]
    ub = [_unit(r) for r in np.asarray(b)]
    return np.array([[math.exp(_cos(x, y) / tau) for y in ub] for x in ua])


def _anchor_loss(anchor, positive, negatives: Sequence, tau: float, include_positive: bool) -> float:
    """-log( s_pos / (s_pos·[include_positive] + Σ s_neg) )，以 log-sum-exp 形式計算"""
    logits = [_cos(anchor, n) / tau for n in negatives]
    pos_logit = _cos(anchor, positive) / tau
    if include_positive:
        logits.append(pos_logit)
    m = max(logits)
    lse = m + math.log(math.fsum(math.exp(x - m) for x in logits))
    return lse - pos_logit


def intra_loss_oracle(z_hat, z_prime, tau: float, include_positive: bool = True) -> float:
    """對每個 i 列舉 2(N−1) 個負例 {ẑ_k, z′_k : k ≠ i}，雙向平均"""
    zh = [_unit(r) for r in np.asarray(z_hat)]
    zp = [_unit(r) for r in np.asarray(z_prime)]
    n = len(zh)
    terms = []
    for first, second in ((zh, zp), (zp, zh)):
        for i in range(n):
            negatives = [first[k] for k in range(n) if k != i] + [second[k] for k in range(n) if k != i]
            terms.append(_anchor_loss(first[i], second[i], negatives, tau, include_positive))
    return math.fsum(terms) / (2 * n)


def inter_loss_oracle(z_a, z_v, tau: float) -> float:
    za = [_unit(r) for r in np.asarray(z_a)]
    zv = [_unit(r) for r in np.asarray(z_v)]
    n = len(za)
    a_to_v = math.fsum(
        _anchor_loss(za[i], zv[i], [zv[k] for k in range(n) if k != i], tau, True) for i in range(n)
    ) / n
    v_to_a = math.fsum(
        _anchor_loss(zv[i], za[i], [za[k] for k in range(n) if k != i], tau, True) for i in range(n)
    ) / n
    return 0.5 * (a_to_v + v_to_a)


def anchor_similarities(z_hat, z_prime, tau: float, i: int) -> tuple[float, list[float]]:
    """anchor ẑ_i 的 (s_pos, [s_neg...])，供梯度關係檢查"""
    zh = [_unit(r) for r in np.asarray(z_hat)]
    zp = [_unit(r) for r in np.asarray(z_prime)]
    n = len(zh)
    s_pos = math.exp(_cos(zh[i], zp[i]) / tau)
    negs = [math.exp(_cos(zh[i], zh[k]) / tau) for k in range(n) if k != i]
    negs += [math.exp(_cos(zh[i], zp[k]) / tau) for k in range(n) if k != i]
    return s_pos, negs
