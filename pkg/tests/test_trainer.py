"""
訓練流程單元測試

1. 一個 epoch（64 筆、N=8）→ 8 筆 metrics；欄位齊全；config echo 與 final checkpoint
2. 同 seed 兩次 run 逐位元相同
3. λ 為 0 的項：它獨占的 head 梯度為 0、數值與 AdamW step 都不變
4. 四種 inter anchor、invariant mode、equimod intra loss 都能跑
5. 續跑：剩餘 loss 與不中斷的 run 逐位元相同；config 不同 → ConfigError
"""

import json

import numpy as np
import pytest

from model import build_model
from pipeline.batch import BatchBuilder
from pipeline.data import generate_synthetic_pairs
from pipeline.trainer import (
    METRIC_FIELDS,
    checkpoint_path,
    compute_losses,
    load_trained,
    lr_at,
    train_run,
    train_step,
)
from utils.errors import ConfigError


@pytest.fixture
def epoch_cfg(tiny_train_cfg):
    """64 筆、N=8、1 epoch → 8 steps"""
    return tiny_train_cfg.replace(num_classes=8, samples_per_class=8, batch_size=8,
                                  epochs=1, warmup_epochs=0)


def _first_batch(cfg):
    return BatchBuilder(generate_synthetic_pairs(cfg), cfg).build(0)


def _params(model):
    return {name: p.data.copy() for name, p in model.named_parameters()}


# ============================================================
# train_run 輸出
# ============================================================

def test_one_epoch_logs_one_row_per_step(epoch_cfg):
    result = train_run(epoch_cfg)
    assert len(result.metrics) == 8
    assert [r['step'] for r in result.metrics] == list(range(8))
    for row in result.metrics:
        assert set(row) == set(METRIC_FIELDS)
        assert all(np.isfinite(row[k]) for k in METRIC_FIELDS if k.startswith('loss'))

    lines = (result.run_dir / 'metrics.jsonl').read_text(encoding='utf-8').splitlines()
    assert [json.loads(line) for line in lines] == result.metrics
    assert (result.run_dir / 'config.json').exists()
    assert result.final_checkpoint == result.run_dir / 'final.ckpt'


def test_logged_lr_follows_schedule(tiny_train_cfg):
    result = train_run(tiny_train_cfg)
    assert result.metrics[0]['lr'] == pytest.approx(tiny_train_cfg.lr_init)
    for row in result.metrics:
        assert row['lr'] == lr_at(tiny_train_cfg, row['step'])


def test_periodic_checkpoints(tiny_train_cfg):
    result = train_run(tiny_train_cfg.replace(checkpoint_every=3))
    names = [p.name for p in result.checkpoints]
    assert names == ['step000003.ckpt', 'step000006.ckpt', 'final.ckpt']


def test_same_seed_runs_are_bitwise_identical(tiny_train_cfg, tmp_path):
    a = train_run(tiny_train_cfg, out_dir=tmp_path / 'a')
    b = train_run(tiny_train_cfg, out_dir=tmp_path / 'b')
    assert a.losses() == b.losses()
    pa, pb = _params(a.model), _params(b.model)
    assert all(np.array_equal(pa[k], pb[k]) for k in pa)


def test_load_trained_rebuilds_model(tiny_train_cfg):
    result = train_run(tiny_train_cfg)
    model, cfg = load_trained(result.final_checkpoint)
    assert cfg == tiny_train_cfg
    trained = _params(result.model)
    assert all(np.array_equal(p.data, trained[name]) for name, p in model.named_parameters())


# ============================================================
# train_step
# ============================================================

def test_train_step_returns_weighted_total(tiny_train_cfg):
    cfg = tiny_train_cfg.replace(lambda_inter=1.0, lambda_intra_a=0.5, lambda_intra_v=2.0)
    out = train_step(build_model(cfg), _first_batch(cfg), cfg)
    f = out.as_floats()
    expected = f['loss_inter'] + 0.5 * f['loss_intra_a'] + 2.0 * f['loss_intra_v']
    assert f['loss_total'] == pytest.approx(expected, rel=1e-12)


def test_train_step_changes_parameters(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    before = _params(model)
    train_step(model, _first_batch(tiny_train_cfg), tiny_train_cfg)
    after = _params(model)
    assert any(not np.array_equal(before[k], after[k]) for k in before)


def test_zero_intra_weight_leaves_intra_heads_untouched(tiny_train_cfg):
    cfg = tiny_train_cfg.replace(lambda_intra_a=0.0, lambda_intra_v=0.0)
    model = build_model(cfg)
    before = _params(model)
    out = train_step(model, _first_batch(cfg), cfg)

    intra = [(n, p) for n, p in model.named_parameters() if '.intra_head.' in n]
    assert intra
    for name, p in intra:
        assert np.all(p.grad == 0), name
        assert np.array_equal(p.data, before[name]), name
        assert p.step == 0
    inter = [p for n, p in model.named_parameters() if '.inter_head.' in n]
    assert all(p.step == 1 for p in inter)
    # 權重 0 的項仍會記錄數值
    assert np.isfinite(out.as_floats()['loss_intra_a'])


def test_zero_inter_weight_leaves_inter_heads_untouched(tiny_train_cfg):
    cfg = tiny_train_cfg.replace(lambda_inter=0.0)
    model = build_model(cfg)
    before = _params(model)
    train_step(model, _first_batch(cfg), cfg)
    for name, p in model.named_parameters():
        if '.inter_head.' in name:
            assert np.all(p.grad == 0), name
            assert np.array_equal(p.data, before[name]), name


@pytest.mark.parametrize('anchor', ['original', 'augmented', 'equivariant', 'centroid'])
def test_every_inter_anchor_trains(tiny_train_cfg, anchor):
    cfg = tiny_train_cfg.replace(inter_anchor=anchor)
    out = train_step(build_model(cfg), _first_batch(cfg), cfg)
    assert np.isfinite(out.total.item())


@pytest.mark.parametrize('changes', [
    {'intra_mode': 'invariant'},
    {'intra_loss': 'equimod'},
    {'intra_mode': 'invariant', 'intra_loss': 'equimod'},
])
def test_intra_variants_train(tiny_train_cfg, changes):
    cfg = tiny_train_cfg.replace(**changes)
    out = train_step(build_model(cfg), _first_batch(cfg), cfg)
    assert np.isfinite(out.as_floats()['loss_intra_a'])


def test_equimod_intra_is_below_equiav(tiny_train_cfg):
    model = build_model(tiny_train_cfg)
    batch = _first_batch(tiny_train_cfg)
    equiav = compute_losses(model, batch, tiny_train_cfg).as_floats()
    equimod = compute_losses(model, batch, tiny_train_cfg.replace(intra_loss='equimod')).as_floats()
    assert equimod['loss_intra_a'] < equiav['loss_intra_a']
    assert equimod['loss_inter'] == equiav['loss_inter']


# ============================================================
# 續跑
# ============================================================

def test_resume_matches_uninterrupted_run(tiny_train_cfg, tmp_path):
    cfg = tiny_train_cfg.replace(checkpoint_every=4)
    full = train_run(cfg, out_dir=tmp_path / 'full')
    resumed = train_run(cfg, resume=checkpoint_path(tmp_path / 'full', 4), out_dir=tmp_path / 'resumed')

    assert resumed.start_step == 4
    assert resumed.metrics == full.metrics[4:]
    pf, pr = _params(full.model), _params(resumed.model)
    assert all(np.array_equal(pf[k], pr[k]) for k in pf)


def test_resume_in_place_rewrites_metrics_tail(tiny_train_cfg):
    cfg = tiny_train_cfg.replace(checkpoint_every=4)
    full = train_run(cfg)
    train_run(cfg, resume=checkpoint_path(full.run_dir, 4))
    lines = (full.run_dir / 'metrics.jsonl').read_text(encoding='utf-8').splitlines()
    assert [json.loads(line) for line in lines] == full.metrics


def test_resume_with_different_config_rejected(tiny_train_cfg, tmp_path):
    cfg = tiny_train_cfg.replace(checkpoint_every=4)
    full = train_run(cfg, out_dir=tmp_path / 'full')
    with pytest.raises(ConfigError, match='temperature'):
        train_run(cfg.replace(temperature=0.2), resume=full.checkpoints[0], out_dir=tmp_path / 'other')
