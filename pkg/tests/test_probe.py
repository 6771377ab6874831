"""
Linear probe 單元測試

1. 可線性分離的資料 → 100%；同 seed 結果一致
2. 單一類別 → DegenerateLabelError；未對齊 / 未 fit → ContractError
3. 特徵維度：單一 modality = d，concatenated = d_a + d_v
4. 無雜訊合成資料上 probe 準確率 = 1.0
"""

import numpy as np
import pytest

from model import build_model
from pipeline.data import generate_synthetic_pairs
from tasks.probe import LinearProbe, ProbeReport, linear_probe, probe_features
from utils.errors import ConfigError, ContractError, DegenerateLabelError


def _blobs(rng, k=3, per=20, d=5, spread=0.1):
    centers = rng.standard_normal((k, d)) * 3
    labels = np.repeat(np.arange(k), per)
    return centers[labels] + spread * rng.standard_normal((k * per, d)), labels


# ============================================================
# LinearProbe
# ============================================================

def test_separable_blobs_are_classified_perfectly(rng):
    x, y = _blobs(rng)
    probe = LinearProbe(seed=0).fit(x, y)
    assert probe.score(x, y) == 1.0
    assert probe.decision_function(x).shape == (60, 3)


def test_predict_returns_original_label_values(rng):
    x, y = _blobs(rng, k=2)
    labels = np.where(y == 0, 7, 11)
    probe = LinearProbe(seed=0).fit(x, labels)
    assert set(probe.predict(x).tolist()) <= {7, 11}


def test_same_seed_is_deterministic(rng):
    x, y = _blobs(rng)
    a = LinearProbe(seed=3).fit(x, y).decision_function(x)
    b = LinearProbe(seed=3).fit(x, y).decision_function(x)
    assert np.array_equal(a, b)


def test_single_class_rejected(rng):
    with pytest.raises(DegenerateLabelError) as exc:
        LinearProbe().fit(rng.standard_normal((5, 3)), np.zeros(5, dtype=int))
    assert exc.value.code == 'degenerate_label'


def test_misaligned_labels_rejected(rng):
    with pytest.raises(ContractError):
        LinearProbe().fit(rng.standard_normal((5, 3)), np.arange(4))


def test_unfitted_probe_rejected(rng):
    with pytest.raises(ContractError, match='not fitted'):
        LinearProbe().predict(rng.standard_normal((2, 3)))


def test_constant_feature_is_tolerated(rng):
    x, y = _blobs(rng)
    x[:, 0] = 4.0
    assert LinearProbe(seed=0).fit(x, y).score(x, y) == 1.0


def test_invalid_hyperparameters_rejected():
    with pytest.raises(ConfigError):
        LinearProbe(lr=0.0)


def test_report_accuracy_range():
    with pytest.raises(ContractError):
        ProbeReport(accuracy=1.5, source='audio', feature_dim=4, train_size=1, test_size=1)


# ============================================================
# 由模型產生特徵
# ============================================================

def test_feature_dimensions(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    ds = generate_synthetic_pairs(tiny_train_cfg)
    d = tiny_train_cfg.embed_dim
    assert probe_features(model, ds, 'audio').shape == (len(ds), d)
    assert probe_features(model, ds, 'visual').shape == (len(ds), d)
    assert probe_features(model, ds, 'concatenated').shape == (len(ds), 2 * d)


def test_concatenated_is_audio_then_visual(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    ds = generate_synthetic_pairs(tiny_train_cfg)
    both = probe_features(model, ds, 'concatenated')
    np.testing.assert_array_equal(both[:, :tiny_train_cfg.embed_dim], probe_features(model, ds, 'audio'))


def test_unknown_source_rejected(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    with pytest.raises(ConfigError):
        probe_features(model, generate_synthetic_pairs(tiny_train_cfg), 'text')


def test_noise_free_data_is_probed_perfectly(tiny_train_cfg):
    cfg = tiny_train_cfg.replace(noise_std=0.0)
    model = build_model(cfg)
    report = linear_probe(model, generate_synthetic_pairs(cfg), 'concatenated',
                          held_out=generate_synthetic_pairs(cfg, split='eval'), seed=cfg.seed)
    assert report.accuracy == 1.0
    assert report.feature_dim == 2 * cfg.embed_dim


def test_default_split_halves_each_class(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    report = linear_probe(model, generate_synthetic_pairs(tiny_train_cfg), 'audio', seed=0)
    assert report.train_size == report.test_size == tiny_train_cfg.dataset_size // 2
    assert 0.0 <= report.accuracy <= 1.0
