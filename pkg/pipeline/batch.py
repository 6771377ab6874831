"""
Batch 與 BatchBuilder

每個 step 取 N 筆配對，每個 modality 產生：
- original：未增強輸入（inter branch 只吃這個）
- augmented + intra vector：一個增強 view 及其向量
- second：invariant mode 才需要的第二個增強 view
- inter vectors：每筆 S 個新抽的增強向量（只向量化、不套用）

所有抽樣的 draw index 由 (step, item, slot) 決定，與組裝順序、執行緒無關。
epoch 內洗牌用 keyed_rng(seed, SHUFFLE, epoch)，尾端不足 N 筆丟棄。
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from augment.registry import VECTOR_DIMS
from augment.sampler import AugmentationSampler
from augment.spec import AUDIO, MODALITIES, VISUAL, AugmentationSpec, ModalityInput
from augment.transforms import apply
from augment.vector import parameterize
from pipeline.config import TrainConfig
from pipeline.data import SyntheticDataset
from utils.errors import ContractError
from utils.rng import STREAM_SHUFFLE, keyed_rng

SLOT_INTRA = 0
SLOT_SECOND = 1
SLOT_INTER = 2   # inter vectors 佔 SLOT_INTER .. SLOT_INTER + S - 1


@dataclass
class ModalityBatch:
    modality: str
    original: np.ndarray                 # N × (輸入形狀)
    augmented: np.ndarray
    specs: list                          # N 個 AugmentationSpec
    intra_vectors: np.ndarray            # N × d_t
    inter_vectors: np.ndarray            # N × S × d_t
    second: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.original.shape[0]

    def check(self):
        n = self.size
        d_t = VECTOR_DIMS[self.modality]
        if self.augmented.shape != self.original.shape:
            raise ContractError(f"{self.modality}: augmented {self.augmented.shape} != original {self.original.shape}")
        if len(self.specs) != n:
            raise ContractError(f"{self.modality}: {len(self.specs)} specs for {n} items")
        if self.intra_vectors.shape != (n, d_t):
            raise ContractError(f"{self.modality}: intra vectors {self.intra_vectors.shape}, expected ({n}, {d_t})")
        if self.inter_vectors.ndim != 3 or self.inter_vectors.shape[0] != n or self.inter_vectors.shape[2] != d_t:
            raise ContractError(f"{self.modality}: inter vectors {self.inter_vectors.shape}, expected ({n}, S, {d_t})")
        if self.second is not None and self.second.shape != self.original.shape:
            raise ContractError(f"{self.modality}: second view {self.second.shape} != original {self.original.shape}")


@dataclass
class Batch:
    step: int
    epoch: int
    indices: np.ndarray
    labels: np.ndarray
    audio: ModalityBatch
    visual: ModalityBatch

    @property
    def size(self) -> int:
        return len(self.indices)

    def modality(self, name: str) -> ModalityBatch:
        return self.audio if name == AUDIO else self.visual

    def inter_inputs(self, name: str) -> np.ndarray:
        """inter branch 的輸入：一律是未增強的 original"""
        return self.modality(name).original

    def check(self, dataset: Optional[SyntheticDataset] = None) -> 'Batch':
        """四條串流 index 對齊；給 dataset 時再確認 original 與資料逐位元相同"""
        n = self.size
        if len(self.labels) != n:
            raise ContractError(f"batch has {n} indices but {len(self.labels)} labels")
        for m in MODALITIES:
            mb = self.modality(m)
            if mb.size != n:
                raise ContractError(f"{m} stream has {mb.size} items, expected {n}")
            mb.check()
            if dataset is not None and not np.array_equal(mb.original, dataset.inputs(m)[self.indices]):
                raise ContractError(f"{m} inter inputs differ from the un-augmented dataset items")
        return self


class BatchBuilder:
    """依 step 組出 Batch；純函式式，可同時從多個執行緒呼叫"""

    def __init__(self, dataset: SyntheticDataset, cfg: TrainConfig,
                 sampler: Optional[AugmentationSampler] = None):
        if len(dataset) < cfg.batch_size:
            raise ContractError(f"dataset has {len(dataset)} items, fewer than batch_size {cfg.batch_size}")
        self.dataset = dataset
        self.cfg = cfg
        self.batch_size = cfg.batch_size
        self.centroid_count = cfg.centroid_count
        self.need_second = cfg.intra_mode == 'invariant'
        self.sampler = sampler or AugmentationSampler(seed=cfg.seed, probabilities=cfg.probabilities)
        self.steps_per_epoch = len(dataset) // cfg.batch_size

    # ── 索引 ──

    def epoch_order(self, epoch: int) -> np.ndarray:
        return keyed_rng(self.cfg.seed, STREAM_SHUFFLE, epoch).permutation(len(self.dataset))

    def locate(self, step: int) -> tuple[int, int]:
        """step → (epoch, epoch 內第幾個 batch)"""
        if step < 0:
            raise ContractError(f"step must be non-negative, got {step}")
        return divmod(step, self.steps_per_epoch)

    def indices_for(self, step: int) -> np.ndarray:
        epoch, pos = self.locate(step)
        order = self.epoch_order(epoch)
        return order[pos * self.batch_size:(pos + 1) * self.batch_size]

    def draw_index(self, step: int, item: int, slot: int) -> int:
        slots = SLOT_INTER + self.centroid_count
        return (step * self.batch_size + item) * slots + slot

    # ── 組裝 ──

    def _sample(self, modality: str, shape: tuple, step: int, item: int, slot: int) -> AugmentationSpec:
        return self.sampler.sample(modality, shape, self.draw_index(step, item, slot))

    def _modality_batch(self, modality: str, step: int, indices: np.ndarray) -> ModalityBatch:
        original = self.dataset.inputs(modality)[indices]
        shape = original.shape[1:3]
        augmented, second, specs, intra, inter = [], [], [], [], []
        for item, x in enumerate(original):
            inp = ModalityInput(modality, x)
            spec = self._sample(modality, shape, step, item, SLOT_INTRA)
            specs.append(spec)
            augmented.append(apply(spec, inp).data)
            intra.append(parameterize(spec))
            if self.need_second:
                second.append(apply(self._sample(modality, shape, step, item, SLOT_SECOND), inp).data)
            inter.append([
                parameterize(self._sample(modality, shape, step, item, SLOT_INTER + s))
                for s in range(self.centroid_count)
            ])
        return ModalityBatch(
            modality=modality,
            original=original,
            augmented=np.stack(augmented),
            specs=specs,
            intra_vectors=np.stack(intra),
            inter_vectors=np.asarray(inter, dtype=np.float64),
            second=np.stack(second) if second else None,
        )

    def build(self, step: int) -> Batch:
        epoch, _ = self.locate(step)
        indices = self.indices_for(step)
        batch = Batch(
            step=step,
            epoch=epoch,
            indices=indices,
            labels=self.dataset.labels[indices],
            audio=self._modality_batch(AUDIO, step, indices),
            visual=self._modality_batch(VISUAL, step, indices),
        )
        return batch.check()
