"""
Batch / BatchBuilder 單元測試

1. 四條串流 index 對齊；inter 輸入與 dataset 逐位元相同
2. 每個 epoch 是一個排列，尾端不足 N 筆丟棄
3. 同 (seed, step) 逐位元相同，與組裝順序無關
4. 向量形狀：intra N × d_t、inter N × S × d_t
5. invariant mode 才有第二個 view
"""

import numpy as np
import pytest

from augment import AUDIO, VISUAL
from augment.registry import VECTOR_DIMS
from pipeline.batch import SLOT_INTER, Batch, BatchBuilder
from pipeline.data import generate_synthetic_pairs
from utils.errors import ContractError


@pytest.fixture
def builder(tiny_train_cfg):
    return BatchBuilder(generate_synthetic_pairs(tiny_train_cfg), tiny_train_cfg)


# ============================================================
# 對齊
# ============================================================

def test_streams_are_index_aligned(builder):
    batch = builder.build(0)
    n = builder.batch_size
    assert batch.size == n
    assert batch.audio.size == batch.visual.size == len(batch.labels) == n
    assert np.array_equal(batch.labels, builder.dataset.labels[batch.indices])


def test_inter_inputs_are_unaugmented_dataset_rows(builder):
    for step in range(builder.steps_per_epoch):
        batch = builder.build(step)
        batch.check(builder.dataset)
        for m in (AUDIO, VISUAL):
            assert np.array_equal(batch.inter_inputs(m), builder.dataset.inputs(m)[batch.indices])


def test_check_rejects_misaligned_labels(builder):
    batch = builder.build(0)
    broken = Batch(batch.step, batch.epoch, batch.indices, batch.labels[:-1], batch.audio, batch.visual)
    with pytest.raises(ContractError):
        broken.check()


def test_check_rejects_tampered_original(builder):
    batch = builder.build(0)
    batch.visual.original = batch.visual.original + 1.0
    with pytest.raises(ContractError, match='un-augmented'):
        batch.check(builder.dataset)


# ============================================================
# Epoch 排列
# ============================================================

def test_epoch_visits_every_item_once(builder):
    seen = np.concatenate([builder.build(s).indices for s in range(builder.steps_per_epoch)])
    assert sorted(seen.tolist()) == list(range(len(builder.dataset)))


def test_epochs_are_shuffled_differently(builder):
    assert not np.array_equal(builder.epoch_order(0), builder.epoch_order(1))


def test_drop_last_partial_batch(tiny_train_cfg):
    cfg = tiny_train_cfg.replace(num_classes=3, samples_per_class=5)
    b = BatchBuilder(generate_synthetic_pairs(cfg), cfg)
    assert b.steps_per_epoch == 3
    seen = np.concatenate([b.build(s).indices for s in range(3)])
    assert len(set(seen.tolist())) == 12
    assert b.build(3).epoch == 1


def test_locate(builder):
    spe = builder.steps_per_epoch
    assert builder.locate(0) == (0, 0)
    assert builder.locate(spe + 1) == (1, 1)
    with pytest.raises(ContractError):
        builder.locate(-1)


# ============================================================
# 決定性
# ============================================================

def _assert_same(a, b):
    assert np.array_equal(a.indices, b.indices)
    for m in (AUDIO, VISUAL):
        x, y = a.modality(m), b.modality(m)
        assert np.array_equal(x.augmented, y.augmented)
        assert np.array_equal(x.intra_vectors, y.intra_vectors)
        assert np.array_equal(x.inter_vectors, y.inter_vectors)


def test_same_step_is_bitwise_identical(tiny_train_cfg):
    ds = generate_synthetic_pairs(tiny_train_cfg)
    _assert_same(BatchBuilder(ds, tiny_train_cfg).build(5), BatchBuilder(ds, tiny_train_cfg).build(5))


def test_build_order_does_not_matter(builder, tiny_train_cfg):
    for s in (3, 0, 2):
        builder.build(s)
    fresh = BatchBuilder(builder.dataset, tiny_train_cfg)
    _assert_same(builder.build(1), fresh.build(1))


def test_draw_index_layout(builder):
    slots = SLOT_INTER + builder.centroid_count
    assert builder.draw_index(0, 0, 0) == 0
    assert builder.draw_index(1, 2, 3) == (builder.batch_size + 2) * slots + 3
    # 不同 (step, item, slot) 不共用 draw index
    ids = {builder.draw_index(s, i, k) for s in range(3) for i in range(builder.batch_size) for k in range(slots)}
    assert len(ids) == 3 * builder.batch_size * slots


# ============================================================
# 向量與 view
# ============================================================

def test_vector_shapes(builder, tiny_train_cfg):
    batch = builder.build(0)
    n, s = tiny_train_cfg.batch_size, tiny_train_cfg.centroid_count
    for m in (AUDIO, VISUAL):
        mb = batch.modality(m)
        assert mb.intra_vectors.shape == (n, VECTOR_DIMS[m])
        assert mb.inter_vectors.shape == (n, s, VECTOR_DIMS[m])
        assert mb.augmented.shape == mb.original.shape
        assert len(mb.specs) == n


def test_inter_vectors_are_fresh_draws(builder):
    mb = builder.build(0).visual
    # 每筆 S 個向量各自抽樣，且與 intra 向量不同
    assert not np.array_equal(mb.inter_vectors[:, 0], mb.inter_vectors[:, 1])
    assert not np.array_equal(mb.inter_vectors[:, 0], mb.intra_vectors)


def test_equivariant_mode_has_no_second_view(builder):
    assert builder.build(0).audio.second is None


def test_invariant_mode_builds_second_view(tiny_train_cfg):
    cfg = tiny_train_cfg.replace(intra_mode='invariant')
    b = BatchBuilder(generate_synthetic_pairs(cfg), cfg)
    mb = b.build(0).visual
    assert mb.second is not None
    assert mb.second.shape == mb.original.shape
    assert not np.array_equal(mb.second, mb.augmented)


def test_dataset_smaller_than_batch_rejected(tiny_train_cfg):
    ds = generate_synthetic_pairs(tiny_train_cfg).subset([0, 1])
    with pytest.raises(ContractError):
        BatchBuilder(ds, tiny_train_cfg)
