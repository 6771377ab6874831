"""
Zero-shot 檢索評估

1. 以未增強輸入計算 inter 空間 embedding（與訓練時 inter branch 同一空間）
2. cosine 排序，正解在對角線；同分時 index 小者排前
3. 兩個方向各回報 R@k 與 gallery 大小

inter embedding 依訓練時的 anchor 取：
- centroid：S 個 eval 串流抽出的增強向量之 centroid
- equivariant：predictor 配 identity 向量
- original / augmented：MeanPool(h)
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from augment.sampler import AugmentationSampler
from augment.spec import AUDIO, MODALITIES, VISUAL, ModalityInput
from augment.transforms import apply
from augment.vector import default_vector, parameterize
from losses.contrastive import cosine_logits
from model.equiav import EquiAVModel, equivariance_similarity
from numerics import mean_pool, no_grad
from pipeline.config import TrainConfig
from pipeline.data import SyntheticDataset, generate_synthetic_pairs
from pipeline.trainer import load_trained
from utils.errors import ContractError, EmptyInputError
from utils.rng import STREAM_EVAL

logger = logging.getLogger(__name__)

DEFAULT_KS = (1, 5, 10)
DIRECTIONS = ('video_to_audio', 'audio_to_video')


@dataclass(frozen=True)
class RetrievalReport:
    direction: str
    recalls: dict = field(default_factory=dict)    # k → R@k
    gallery_size: int = 0

    def __post_init__(self):
        values = [self.recalls[k] for k in sorted(self.recalls)]
        if any(not 0.0 <= r <= 1.0 for r in values) or any(a > b for a, b in zip(values, values[1:])):
            raise ContractError(f"recall values must be monotone in [0, 1], got {self.recalls}")

    def recall(self, k: int) -> float:
        return self.recalls[k]

    def to_dict(self) -> dict:
        out = {'direction': self.direction, 'gallery_size': self.gallery_size}
        out.update({f'R@{k}': self.recalls[k] for k in sorted(self.recalls)})
        return out


def _ranks(sim: np.ndarray) -> np.ndarray:
    """sim[i, j]：query i 對 gallery j，正解為 j = i；回傳 0-based 名次"""
    n = sim.shape[0]
    target = sim[np.arange(n), np.arange(n)][:, None]
    above = (sim > target).sum(axis=1)
    tied_before = np.tril(sim == target, k=-1).sum(axis=1)
    return above + tied_before


def _report(direction: str, sim: np.ndarray, ks: Sequence[int]) -> RetrievalReport:
    ranks = _ranks(sim)
    recalls = {int(k): float(np.mean(ranks < k)) for k in ks}
    return RetrievalReport(direction, recalls, sim.shape[0])


def retrieval_from_embeddings(z_a, z_v, ks: Sequence[int] = DEFAULT_KS) -> tuple[RetrievalReport, RetrievalReport]:
    """(video_to_audio, audio_to_video)"""
    z_a, z_v = np.asarray(z_a, dtype=np.float64), np.asarray(z_v, dtype=np.float64)
    if z_a.ndim != 2 or z_a.shape[0] == 0:
        raise EmptyInputError(f"retrieval needs a non-empty N×p gallery, got shape {z_a.shape}")
    if z_a.shape != z_v.shape:
        raise ContractError(f"shape mismatch: audio {z_a.shape} vs visual {z_v.shape}")
    if not ks or any(int(k) < 1 for k in ks):
        raise ContractError(f"ks must be positive integers, got {list(ks)}")
    cos = cosine_logits(z_a, z_v, 1.0).data   # audio i × visual j
    return _report('video_to_audio', cos.T, ks), _report('audio_to_video', cos, ks)


# ============================================================
# 由模型產生 embedding
# ============================================================

def eval_sampler(cfg: TrainConfig) -> AugmentationSampler:
    return AugmentationSampler(seed=cfg.seed, probabilities=cfg.probabilities, stream=STREAM_EVAL)


def inter_embeddings(model: EquiAVModel, dataset: SyntheticDataset, cfg: TrainConfig,
                     modality: str, chunk: int = 32) -> np.ndarray:
    x = dataset.inputs(modality)
    branch = model.branch(modality)
    sampler = eval_sampler(cfg)
    shape = x.shape[1:3]
    s_count = cfg.centroid_count
    out = []
    with no_grad():
        for start in range(0, len(x), chunk):
            xb = x[start:start + chunk]
            h = model.encode(modality, xb)
            if cfg.inter_anchor == 'centroid':
                vectors = np.asarray([
                    [parameterize(sampler.sample(modality, shape, (start + i) * s_count + s)) for s in range(s_count)]
                    for i in range(len(xb))
                ])
                rep = branch.predictor.centroid(h, vectors)
            elif cfg.inter_anchor == 'equivariant':
                rep = branch.predictor.predict(h, np.tile(default_vector(modality), (len(xb), 1)))
            else:
                rep = mean_pool(h)
            out.append(branch.inter_head(rep).data)
    return np.concatenate(out, axis=0)


def retrieval_eval(model: EquiAVModel, dataset: SyntheticDataset, cfg: TrainConfig,
                   ks: Sequence[int] = DEFAULT_KS) -> tuple[RetrievalReport, RetrievalReport]:
    if len(dataset) == 0:
        raise EmptyInputError("retrieval eval set is empty")
    z_a = inter_embeddings(model, dataset, cfg, AUDIO)
    z_v = inter_embeddings(model, dataset, cfg, VISUAL)
    return retrieval_from_embeddings(z_a, z_v, ks)


def equivariance_report(model: EquiAVModel, dataset: SyntheticDataset, cfg: TrainConfig) -> dict:
    """每個 modality：一個 eval 增強下 ẑ 與 z′ 的平均 cosine"""
    sampler = eval_sampler(cfg)
    offset = len(dataset) * cfg.centroid_count
    report = {}
    for m in MODALITIES:
        x = dataset.inputs(m)
        specs = [sampler.sample(m, x.shape[1:3], offset + i) for i in range(len(x))]
        x_aug = np.stack([apply(s, ModalityInput(m, xi)).data for s, xi in zip(specs, x)])
        vectors = np.stack([parameterize(s) for s in specs])
        report[m] = equivariance_similarity(model, m, x, x_aug, vectors)
    return report


class RetrievalTask:
    """eval --retrieval：載入 checkpoint，在 eval split 上做雙向檢索"""

    def __init__(self, checkpoint, ks: Sequence[int] = DEFAULT_KS):
        self.checkpoint = checkpoint
        self.ks = tuple(ks)

    def run(self) -> dict:
        model, cfg = load_trained(self.checkpoint)
        dataset = generate_synthetic_pairs(cfg, split='eval')
        v2a, a2v = retrieval_eval(model, dataset, cfg, self.ks)
        equivariance = equivariance_report(model, dataset, cfg)
        logger.info(
            f"[retrieval] gallery {len(dataset)}：V→A R@1={v2a.recall(self.ks[0]):.3f}，"
            f"A→V R@1={a2v.recall(self.ks[0]):.3f}"
        )
        return {
            'task': 'retrieval',
            'checkpoint': str(self.checkpoint),
            'anchor': cfg.inter_anchor,
            'reports': [v2a.to_dict(), a2v.to_dict()],
            'equivariance_similarity': equivariance,
        }
