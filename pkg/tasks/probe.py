"""
Linear probe：凍結 encoder，只訓練一個 affine 分類器

特徵 = MeanPool(f_m(x))；concatenated 來源為 audio ‖ visual（維度 d_a + d_v）。
分類器用 numerics 的 Tape + AdamW 做 full-batch softmax regression，特徵先以訓練集統計量標準化。
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

import config
from augment.spec import AUDIO, VISUAL
from model.equiav import EquiAVModel
from numerics import Parameter, Tape, Tensor, adamw_step, backward, logsumexp, matmul, mean_pool, no_grad, zero_grad
from pipeline.data import SyntheticDataset, generate_synthetic_pairs, split_dataset
from pipeline.trainer import load_trained
from utils.errors import ConfigError, ContractError, DegenerateLabelError
from utils.rng import STREAM_PROBE, keyed_rng

logger = logging.getLogger(__name__)

SOURCES = ('audio', 'visual', 'concatenated')


@dataclass(frozen=True)
class ProbeReport:
    accuracy: float
    source: str
    feature_dim: int
    train_size: int
    test_size: int
    train_accuracy: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ContractError(f"accuracy must be in [0, 1], got {self.accuracy}")

    def to_dict(self) -> dict:
        return {
            'source': self.source,
            'accuracy': self.accuracy,
            'train_accuracy': self.train_accuracy,
            'feature_dim': self.feature_dim,
            'train_size': self.train_size,
            'test_size': self.test_size,
        }


class LinearProbe:

    def __init__(self, lr: float = 0.05, iterations: int = 300, weight_decay: float = 0.0,
                 seed: int = config.SEED):
        if lr <= 0 or iterations <= 0:
            raise ConfigError(f"probe needs positive lr and iterations, got lr={lr} iterations={iterations}")
        self.lr = lr
        self.iterations = iterations
        self.weight_decay = weight_decay
        self.seed = seed
        self.classes: Optional[np.ndarray] = None
        self.weight: Optional[Parameter] = None
        self.bias: Optional[Parameter] = None
        self._mu = self._sigma = None

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self._mu) / self._sigma

    def fit(self, features, labels) -> 'LinearProbe':
        x = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels)
        if x.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
            raise ContractError(f"features {x.shape} and labels {y.shape} are not aligned")
        self.classes, targets = np.unique(y, return_inverse=True)
        if len(self.classes) < 2:
            raise DegenerateLabelError(f"probe needs at least 2 classes, got {self.classes.tolist()}")

        self._mu = x.mean(axis=0)
        self._sigma = np.where(x.std(axis=0) > 0, x.std(axis=0), 1.0)
        xs = Tensor(self._standardize(x))

        k, d = len(self.classes), x.shape[1]
        rng = keyed_rng(self.seed, STREAM_PROBE)
        self.weight = Parameter('probe.w', Tensor(rng.normal(0.0, 0.01, size=(d, k))))
        self.bias = Parameter('probe.b', Tensor(np.zeros(k)))
        params = [self.weight, self.bias]
        rows = np.arange(len(targets))

        for _ in range(self.iterations):
            zero_grad(params)
            with Tape() as tape:
                logits = matmul(xs, self.weight.tensor) + self.bias.tensor
                loss = (logsumexp(logits, axis=-1) - logits[rows, targets]).mean()
            backward(loss, tape, params)
            adamw_step(params, self.lr, weight_decay=self.weight_decay)
        logger.debug(f"[probe] {len(targets)} 筆 × {d} 維，{k} 類，最終 loss {loss.item():.4f}")
        return self

    def decision_function(self, features) -> np.ndarray:
        if self.weight is None:
            raise ContractError("probe is not fitted")
        x = self._standardize(np.asarray(features, dtype=np.float64))
        return x @ self.weight.data + self.bias.data

    def predict(self, features) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(features), axis=1)]

    def score(self, features, labels) -> float:
        return float(np.mean(self.predict(features) == np.asarray(labels)))


# ============================================================
# 由模型產生特徵
# ============================================================

def probe_features(model: EquiAVModel, dataset: SyntheticDataset, source: str, chunk: int = 32) -> np.ndarray:
    if source not in SOURCES:
        raise ConfigError(f"unknown probe source {source!r}; expected one of {SOURCES}")
    modalities = (AUDIO, VISUAL) if source == 'concatenated' else (source,)
    parts = []
    with no_grad():
        for m in modalities:
            x = dataset.inputs(m)
            pooled = [mean_pool(model.encode(m, x[i:i + chunk])).data for i in range(0, len(x), chunk)]
            parts.append(np.concatenate(pooled, axis=0))
    return np.concatenate(parts, axis=1)


def linear_probe(model: EquiAVModel, dataset: SyntheticDataset, source: str = 'concatenated',
                 held_out: Optional[SyntheticDataset] = None, probe: Optional[LinearProbe] = None,
                 seed: int = config.SEED) -> ProbeReport:
    """held_out 未給時把 dataset 依類別對半切"""
    if held_out is None:
        dataset, held_out = split_dataset(dataset, 0.5, seed=seed, salt=1)
    probe = probe or LinearProbe(seed=seed)
    train_x = probe_features(model, dataset, source)
    test_x = probe_features(model, held_out, source)
    probe.fit(train_x, dataset.labels)
    return ProbeReport(
        accuracy=probe.score(test_x, held_out.labels),
        source=source,
        feature_dim=train_x.shape[1],
        train_size=len(dataset),
        test_size=len(held_out),
        train_accuracy=probe.score(train_x, dataset.labels),
    )


class ProbeTask:
    """eval --probe：train split 訓練分類器，eval split 回報準確率"""

    def __init__(self, checkpoint, source: str = 'concatenated'):
        if source not in SOURCES:
            raise ConfigError(f"unknown probe source {source!r}; expected one of {SOURCES}")
        self.checkpoint = checkpoint
        self.source = source

    def run(self) -> dict:
        model, cfg = load_trained(self.checkpoint)
        train = generate_synthetic_pairs(cfg, split='train')
        held_out = generate_synthetic_pairs(cfg, split='eval')
        report = linear_probe(model, train, self.source, held_out=held_out, seed=cfg.seed)
        logger.info(f"[probe] {self.source}：accuracy {report.accuracy:.3f}（{report.feature_dim} 維）")
        return {'task': 'probe', 'checkpoint': str(self.checkpoint), 'report': report.to_dict()}
