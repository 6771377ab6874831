"""
訓練：train_step（單一 batch）與 train_run（完整 run）

一個 step 的流程（每個 modality 各做一次）：
1. encoder 編碼 original 與 augmented → h、h′
2. intra：ẑ = g^intra(u(h, t))、z′ = g^intra(MeanPool(h′))
3. inter：依 inter_anchor 取 anchor（預設 centroid：S 個等變表示的平均）再過 g^inter
4. L = λ_inter·L^inter + λ_a·L_a^intra + λ_v·L_v^intra → backward → AdamW

λ 為 0 的項在 no_grad 下計算（只記 log），它獨占的參數不會被碰到：
梯度為 0，也不做 weight decay、不增加 AdamW step。
"""

import logging
import time
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

import config
from augment.spec import AUDIO, MODALITIES, VISUAL
from losses import LossOutput, equimod_loss, inter_loss, intra_loss, total_loss
from model.equiav import EmbeddingSet, EquiAVModel, build_model
from numerics import Tape, adamw_step, backward, cosine_lr, default_dtype, mean_pool, no_grad, zero_grad
from pipeline.batch import Batch, BatchBuilder, ModalityBatch
from pipeline.checkpoint import load_checkpoint, restore, save_checkpoint
from pipeline.config import TrainConfig
from pipeline.data import SyntheticDataset, generate_synthetic_pairs
from pipeline.prefetch import BatchPrefetcher
from storage.local import LocalStorage
from utils.errors import ConfigError
from utils.rng import rng_state

logger = logging.getLogger(__name__)

METRICS_LOG = 'metrics'
METRIC_FIELDS = ('step', 'epoch', 'lr', 'loss_total', 'loss_inter', 'loss_intra_a', 'loss_intra_v')
INTRA_KEYS = {AUDIO: 'intra_a', VISUAL: 'intra_v'}

# 續跑時允許與 checkpoint 不同的欄位（不影響數值）
_RESUME_FREE_FIELDS = ('output_dir', 'workers', 'checkpoint_every')


def lr_at(cfg: TrainConfig, step: int) -> float:
    return cosine_lr(step, cfg.total_steps, cfg.warmup_steps, cfg.lr_init, cfg.lr_peak)


def _tracked(enabled: bool):
    return nullcontext() if enabled else no_grad()


# ============================================================
# 單一 step
# ============================================================

def modality_embeddings(model: EquiAVModel, mb: ModalityBatch, cfg: TrainConfig,
                        track_intra: bool = True, track_inter: bool = True) -> EmbeddingSet:
    m = mb.modality
    branch = model.branch(m)
    h = model.encode(m, mb.original)
    h_aug = model.encode(m, mb.augmented)

    emb = EmbeddingSet(m)
    with _tracked(track_intra):
        if cfg.intra_mode == 'equivariant':
            emb.z_hat, emb.z_prime = model.embed_intra(m, h, h_aug, mb.intra_vectors)
        else:
            emb.z_prime = branch.intra_head(mean_pool(h_aug))
            emb.z_second = branch.intra_head(mean_pool(model.encode(m, mb.second)))
    with _tracked(track_inter):
        emb.z_inter = model.inter_anchor(m, cfg.inter_anchor, h, h_aug, mb.intra_vectors, mb.inter_vectors)
    return emb.check()


def _intra_term(emb: EmbeddingSet, cfg: TrainConfig):
    first = emb.z_hat if cfg.intra_mode == 'equivariant' else emb.z_second
    if cfg.intra_loss == 'equimod':
        return equimod_loss(first, emb.z_prime, cfg.temperature)
    return intra_loss(first, emb.z_prime, cfg.temperature, mode=cfg.intra_mode)


def compute_losses(model: EquiAVModel, batch: Batch, cfg: TrainConfig) -> LossOutput:
    """forward 全部三項損失並加權（需在 Tape 內呼叫才會記錄梯度）"""
    weights = cfg.loss_weights
    w = weights.as_dict()
    components, anchors = {}, {}
    for m in MODALITIES:
        key = INTRA_KEYS[m]
        emb = modality_embeddings(model, batch.modality(m), cfg,
                                  track_intra=w[key] > 0, track_inter=w['inter'] > 0)
        with _tracked(w[key] > 0):
            components[key] = _intra_term(emb, cfg)
        anchors[m] = emb.z_inter
    with _tracked(w['inter'] > 0):
        components['inter'] = inter_loss(anchors[AUDIO], anchors[VISUAL], cfg.temperature)
    return total_loss(components, weights)


def train_step(model: EquiAVModel, batch: Batch, cfg: TrainConfig, lr: Optional[float] = None) -> LossOutput:
    """一個 batch 的 forward / backward / AdamW；回傳更新前的損失"""
    lr = lr_at(cfg, batch.step) if lr is None else lr
    params = model.parameters()
    zero_grad(params)
    with Tape() as tape:
        out = compute_losses(model, batch, cfg)
    backward(out.total, tape)

    reached = [p for p in params if p.grad is not None]
    for p in params:
        if p.grad is None:
            p.tensor.grad = np.zeros_like(p.data)
    adamw_step(reached, lr, cfg.beta1, cfg.beta2, cfg.weight_decay, cfg.adam_eps)
    return out


# ============================================================
# 完整 run
# ============================================================

@dataclass
class TrainResult:
    model: EquiAVModel
    cfg: TrainConfig
    run_dir: Path
    metrics: list = field(default_factory=list)     # 本次呼叫產生的紀錄
    checkpoints: list = field(default_factory=list)
    start_step: int = 0
    elapsed: float = 0.0
    prefetch: dict = field(default_factory=dict)    # BatchPrefetcher.get_status()

    @property
    def final_checkpoint(self) -> Optional[Path]:
        return self.checkpoints[-1] if self.checkpoints else None

    def losses(self, name: str = 'loss_total') -> list[float]:
        return [row[name] for row in self.metrics]


def check_resume_config(cfg: TrainConfig, saved: dict):
    current = cfg.to_dict()
    differing = sorted(
        k for k in set(current) | set(saved)
        if k not in _RESUME_FREE_FIELDS and current.get(k) != saved.get(k)
    )
    if differing:
        raise ConfigError(f"config differs from the checkpoint in {differing}; cannot resume bitwise")


def checkpoint_path(run_dir: Path, step: int) -> Path:
    return Path(run_dir) / 'checkpoints' / f'step{step:06d}.ckpt'


def train_run(cfg: TrainConfig, dataset: Optional[SyntheticDataset] = None,
              resume=None, out_dir=None) -> TrainResult:
    """完整訓練：epoch 洗牌、cosine 排程、每 step 一筆 metrics、定期 checkpoint

    Args:
        cfg: 訓練設定
        dataset: 訓練資料（None = 依 cfg 生成合成資料）
        resume: checkpoint 路徑；從其 step 接續，之後的 loss 與不中斷的 run 逐位元相同
        out_dir: 輸出目錄（None = cfg.run_dir()）
    """
    run_dir = Path(out_dir) if out_dir else cfg.run_dir()
    storage = LocalStorage(run_dir)
    total = cfg.total_steps
    started = time.monotonic()

    with default_dtype(cfg.precision):
        model = build_model(cfg)
        start = 0
        if resume is not None:
            ckpt = load_checkpoint(resume)
            check_resume_config(cfg, ckpt.config)
            restore(model, ckpt)
            start = ckpt.step
            logger.info(f"[trainer] 從 {resume} 續跑（step {start}/{total}）")

        kept = storage.truncate_jsonl(METRICS_LOG, lambda r: r['step'] < start)
        cfg.save(run_dir / 'config.json')
        dataset = dataset if dataset is not None else generate_synthetic_pairs(cfg)
        builder = BatchBuilder(dataset, cfg)

        logger.info(
            f"[trainer] 開始：{len(dataset)} 筆 × {cfg.epochs} epochs，N={cfg.batch_size}，"
            f"S={cfg.centroid_count}，anchor={cfg.inter_anchor}，{total} steps，{model.num_parameters()} 個參數值"
            + (f"（保留既有 {kept} 筆 metrics）" if kept else "")
        )

        result = TrainResult(model=model, cfg=cfg, run_dir=run_dir, start_step=start)
        epoch_losses: list[float] = []
        with BatchPrefetcher(builder, cfg.workers) as prefetcher:
            for batch in prefetcher.iter_batches(start, total):
                lr = lr_at(cfg, batch.step)
                out = train_step(model, batch, cfg, lr)
                row = {'step': batch.step, 'epoch': batch.epoch, 'lr': lr, **out.as_floats()}
                storage.save_append(METRICS_LOG, [row])
                result.metrics.append(row)
                epoch_losses.append(row['loss_total'])

                done = batch.step + 1
                if done % config.LOG_EVERY == 0:
                    logger.info(
                        f"[trainer] step {done}/{total} lr={lr:.3e} loss={row['loss_total']:.4f} "
                        f"(inter {row['loss_inter']:.4f}, intra_a {row['loss_intra_a']:.4f}, "
                        f"intra_v {row['loss_intra_v']:.4f})"
                    )
                if done % builder.steps_per_epoch == 0:
                    logger.info(f"[trainer] epoch {batch.epoch + 1}/{cfg.epochs} 平均 loss {np.mean(epoch_losses):.4f}")
                    epoch_losses = []
                if cfg.checkpoint_every and done % cfg.checkpoint_every == 0 and done < total:
                    result.checkpoints.append(save_checkpoint(
                        model, checkpoint_path(run_dir, done), done, cfg.to_dict(), rng_state(cfg.seed, done)))
            result.prefetch = prefetcher.get_status()

        result.checkpoints.append(save_checkpoint(
            model, run_dir / 'final.ckpt', total, cfg.to_dict(), rng_state(cfg.seed, total)))

    result.elapsed = time.monotonic() - started
    logger.info(f"[trainer] 完成 {total - start} steps，耗時 {result.elapsed:.1f}s")
    return result


def load_trained(path) -> tuple[EquiAVModel, TrainConfig]:
    """由 checkpoint 重建模型與其 TrainConfig（config echo）"""
    ckpt = load_checkpoint(path)
    cfg = TrainConfig.from_dict(ckpt.config)
    with default_dtype(cfg.precision):
        model = build_model(cfg)
    restore(model, ckpt)
    return model, cfg
