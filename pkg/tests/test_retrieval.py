"""
Zero-shot 檢索單元測試

1. 相同 embedding → R@1 = 1；全部同分 → 依 index 決定名次
2. 隨機 embedding 的 R@1 期望值 = 1/N（Monte Carlo）
3. R@k 對 k 單調；對列縮放不變
4. 空 gallery → EmptyInputError；形狀不符 → ContractError
5. 由模型產生 inter embedding：四種 anchor 形狀與決定性
"""

import numpy as np
import pytest

from augment import AUDIO, VISUAL
from model import build_model
from pipeline.data import generate_synthetic_pairs
from tasks.retrieval import (
    RetrievalReport,
    equivariance_report,
    inter_embeddings,
    retrieval_eval,
    retrieval_from_embeddings,
)
from utils.errors import ContractError, EmptyInputError


# ============================================================
# 排序核心
# ============================================================

def test_identical_embeddings_give_perfect_recall(rng):
    z = rng.standard_normal((16, 8))
    v2a, a2v = retrieval_from_embeddings(z, z.copy())
    assert v2a.direction == 'video_to_audio'
    assert a2v.direction == 'audio_to_video'
    assert v2a.recall(1) == a2v.recall(1) == 1.0
    assert v2a.gallery_size == 16


def test_ties_are_broken_by_index():
    z = np.ones((16, 4))
    v2a, _ = retrieval_from_embeddings(z, z, ks=(1, 5))
    assert v2a.recall(1) == pytest.approx(1 / 16)
    assert v2a.recall(5) == pytest.approx(5 / 16)


def test_random_embeddings_hit_chance_level():
    rng = np.random.default_rng(0)
    trials = [retrieval_from_embeddings(rng.standard_normal((16, 8)), rng.standard_normal((16, 8)),
                                        ks=(1,))[0].recall(1)
              for _ in range(2000)]
    assert abs(np.mean(trials) - 1 / 16) < 0.01


def test_recall_is_monotone_in_k(rng):
    z_a = rng.standard_normal((32, 8))
    z_v = z_a + 1.5 * rng.standard_normal((32, 8))
    for report in retrieval_from_embeddings(z_a, z_v, ks=(1, 5, 10)):
        assert report.recall(1) <= report.recall(5) <= report.recall(10)


def test_row_rescaling_does_not_change_recall(rng):
    z_a = rng.standard_normal((16, 8))
    z_v = z_a + rng.standard_normal((16, 8))
    scale = rng.uniform(0.1, 10.0, size=(16, 1))
    base = [r.to_dict() for r in retrieval_from_embeddings(z_a, z_v)]
    scaled = [r.to_dict() for r in retrieval_from_embeddings(z_a * scale, z_v)]
    assert base == scaled


def test_directions_differ_for_asymmetric_similarity():
    # audio 0、1 都最像 visual 0
    z_a = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
    z_v = np.array([[1.0, 0.0], [0.0, 1.0], [-0.2, 1.0]])
    v2a, a2v = retrieval_from_embeddings(z_a, z_v, ks=(1,))
    assert a2v.recall(1) != v2a.recall(1)


def test_report_dict_keys(rng):
    z = rng.standard_normal((12, 4))
    report = retrieval_from_embeddings(z, z, ks=(1, 5, 10))[0].to_dict()
    assert set(report) == {'direction', 'gallery_size', 'R@1', 'R@5', 'R@10'}


def test_non_monotone_report_rejected():
    with pytest.raises(ContractError):
        RetrievalReport('audio_to_video', {1: 0.5, 5: 0.4}, 10)


def test_empty_gallery_rejected():
    with pytest.raises(EmptyInputError) as exc:
        retrieval_from_embeddings(np.zeros((0, 4)), np.zeros((0, 4)))
    assert exc.value.code == 'empty'


def test_shape_mismatch_rejected(rng):
    with pytest.raises(ContractError):
        retrieval_from_embeddings(rng.standard_normal((4, 3)), rng.standard_normal((5, 3)))


def test_invalid_k_rejected(rng):
    z = rng.standard_normal((4, 3))
    with pytest.raises(ContractError):
        retrieval_from_embeddings(z, z, ks=(0,))


# ============================================================
# 由模型產生 embedding
# ============================================================

@pytest.mark.parametrize('anchor', ['original', 'augmented', 'equivariant', 'centroid'])
def test_inter_embeddings_shape_and_determinism(tiny_train_cfg, anchor):
    cfg = tiny_train_cfg.replace(inter_anchor=anchor)
    model = build_model(cfg)
    ds = generate_synthetic_pairs(cfg, split='eval')
    for m in (AUDIO, VISUAL):
        a = inter_embeddings(model, ds, cfg, m)
        b = inter_embeddings(model, ds, cfg, m, chunk=3)
        assert a.shape == (len(ds), cfg.proj_dim)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_retrieval_eval_on_model(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    ds = generate_synthetic_pairs(tiny_train_cfg, split='eval')
    v2a, a2v = retrieval_eval(model, ds, tiny_train_cfg, ks=(1, 5))
    for report in (v2a, a2v):
        assert report.gallery_size == len(ds)
        assert 0.0 <= report.recall(1) <= report.recall(5) <= 1.0


def test_retrieval_eval_empty_set_rejected(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    ds = generate_synthetic_pairs(tiny_train_cfg, split='eval').subset([])
    with pytest.raises(EmptyInputError):
        retrieval_eval(model, ds, tiny_train_cfg)


def test_equivariance_report_is_a_cosine(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    report = equivariance_report(model, generate_synthetic_pairs(tiny_train_cfg, split='eval'), tiny_train_cfg)
    assert set(report) == {AUDIO, VISUAL}
    assert all(-1.0 <= v <= 1.0 for v in report.values())
