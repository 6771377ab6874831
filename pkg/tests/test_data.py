"""
合成資料單元測試

1. 決定性：同 seed 逐位元相同、不同 seed 不同
2. noise 0 時每筆等於其類別 template；class-major 排列
3. nearest-template oracle：K=8、noise 0.1 時 visual / audio 皆 100%
4. train / eval 共用 template、雜訊獨立
5. K < 2、未知 split → ConfigError；分層切分
"""

import numpy as np
import pytest

from augment import AUDIO, VISUAL
from pipeline.data import (
    SyntheticPairConfig,
    generate_synthetic_pairs,
    nearest_template_accuracy,
    normalize_audio,
    split_dataset,
)
from utils.errors import ConfigError

SMALL = dict(num_classes=4, samples_per_class=3, audio_shape=(16, 8), visual_shape=(8, 8, 3))


# ============================================================
# 決定性與形狀
# ============================================================

def test_same_seed_is_bitwise_identical():
    a = generate_synthetic_pairs(SyntheticPairConfig(seed=7, **SMALL))
    b = generate_synthetic_pairs(SyntheticPairConfig(seed=7, **SMALL))
    assert np.array_equal(a.audio, b.audio)
    assert np.array_equal(a.visual, b.visual)
    assert np.array_equal(a.labels, b.labels)


def test_different_seed_differs():
    a = generate_synthetic_pairs(SyntheticPairConfig(seed=0, **SMALL))
    b = generate_synthetic_pairs(SyntheticPairConfig(seed=1, **SMALL))
    assert not np.allclose(a.visual, b.visual)


def test_shapes_and_class_major_labels():
    ds = generate_synthetic_pairs(SyntheticPairConfig(**SMALL))
    assert len(ds) == 12
    assert ds.audio.shape == (12, 16, 8)
    assert ds.visual.shape == (12, 8, 8, 3)
    assert ds.labels.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]
    assert ds.num_classes == 4


def test_pair_returns_aligned_inputs():
    ds = generate_synthetic_pairs(SyntheticPairConfig(**SMALL))
    a, v = ds.pair(5)
    assert a.modality == AUDIO and v.modality == VISUAL
    assert np.array_equal(a.data, ds.audio[5])
    assert np.array_equal(v.data, ds.visual[5])


def test_from_train_config(tiny_train_cfg):
    train = generate_synthetic_pairs(tiny_train_cfg)
    held_out = generate_synthetic_pairs(tiny_train_cfg, split='eval')
    assert len(train) == tiny_train_cfg.dataset_size
    assert len(held_out) == tiny_train_cfg.num_classes * tiny_train_cfg.eval_per_class
    assert train.audio.shape[1:] == tiny_train_cfg.audio_shape


# ============================================================
# 模板與雜訊
# ============================================================

def test_zero_noise_reproduces_templates():
    ds = generate_synthetic_pairs(SyntheticPairConfig(noise_std=0.0, **SMALL))
    assert np.array_equal(ds.visual, ds.visual_templates[ds.labels])
    np.testing.assert_allclose(ds.audio, ds.audio_templates[ds.labels], atol=1e-12)


def test_audio_is_normalized_from_log_mel_scale():
    raw = np.array([-4.346, -4.346 + 4.332])
    np.testing.assert_allclose(normalize_audio(raw, -4.346, 4.332), [0.0, 1.0])


def test_eval_split_shares_templates_with_independent_noise():
    cfg = SyntheticPairConfig(samples_per_class=2, **{k: v for k, v in SMALL.items() if k != 'samples_per_class'})
    train = generate_synthetic_pairs(cfg, split='train')
    held_out = generate_synthetic_pairs(cfg, split='eval')
    assert np.array_equal(train.visual_templates, held_out.visual_templates)
    assert np.array_equal(train.audio_templates, held_out.audio_templates)
    assert not np.allclose(train.visual, held_out.visual)


def test_nearest_template_oracle_is_perfect_at_low_noise():
    ds = generate_synthetic_pairs(SyntheticPairConfig(num_classes=8, samples_per_class=16, noise_std=0.1))
    assert nearest_template_accuracy(ds, VISUAL) == 1.0
    assert nearest_template_accuracy(ds, AUDIO) == 1.0


# ============================================================
# 錯誤與切分
# ============================================================

def test_single_class_rejected():
    with pytest.raises(ConfigError, match='at least 2 classes'):
        SyntheticPairConfig(num_classes=1)


def test_negative_noise_rejected():
    with pytest.raises(ConfigError):
        SyntheticPairConfig(noise_std=-0.1)


def test_unknown_split_rejected():
    with pytest.raises(ConfigError, match='unknown split'):
        generate_synthetic_pairs(split='test')


def test_split_is_stratified_and_disjoint():
    ds = generate_synthetic_pairs(SyntheticPairConfig(num_classes=4, samples_per_class=6,
                                                      audio_shape=(8, 8), visual_shape=(8, 8, 3)))
    first, second = split_dataset(ds, 0.5, seed=0)
    assert len(first) == len(second) == 12
    assert np.bincount(first.labels).tolist() == [3, 3, 3, 3]
    rows = {tuple(x.ravel()) for x in first.visual} & {tuple(x.ravel()) for x in second.visual}
    assert not rows


def test_split_fraction_must_be_open_interval():
    ds = generate_synthetic_pairs(SyntheticPairConfig(**SMALL))
    with pytest.raises(ConfigError):
        split_dataset(ds, 1.0)
