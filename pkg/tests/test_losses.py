"""
losses 單元測試

1. similarity_matrix：自身、正交、oracle、零範數列
2. intra_loss：N=1 為 0、列舉 oracle、batch 重排不變、非負
3. inter_loss：N=1 為 0、兩筆閉式解、cosine 尺度不變、modality 對稱
4. total_loss：λ 加權、λ=0 時梯度恰為 0
5. equimod_loss：嚴格小於 intra_loss、oracle、可為負、N=1 退化
6. gradient_factor_check：代入值、關係式、經由 anchor_losses 的 autodiff 交叉驗證、逐 anchor
"""

import math

import numpy as np
import pytest

from losses import (
    LossWeights,
    contrastive,
    equimod_loss,
    gradient_factor_check,
    inter_loss,
    intra_loss,
    similarity_matrix,
    total_loss,
)
from losses.oracles import anchor_similarities, inter_loss_oracle, intra_loss_oracle, similarity_oracle
from numerics import Parameter, Tape, Tensor, backward, gradcheck
from utils.errors import ConfigError, ContractError, DegenerateBatchError, DegenerateEmbeddingError

TAU = 0.07


def _emb(rng, n=4, p=8):
    return rng.normal(size=(n, p))


# ============================================================
# similarity_matrix
# ============================================================

class TestSimilarity:

    def test_self_similarity(self, rng):
        a = _emb(rng)
        s = similarity_matrix(a, a, TAU).data
        np.testing.assert_allclose(np.diag(s), math.exp(1 / TAU), rtol=1e-12)

    def test_orthogonal_rows(self):
        a = np.eye(3)[:2]
        s = similarity_matrix(a, a, TAU).data
        assert s[0, 1] == pytest.approx(1.0, abs=1e-15)

    def test_matches_oracle(self, rng):
        a, b = rng.normal(size=(3, 8)), rng.normal(size=(3, 8))
        np.testing.assert_allclose(similarity_matrix(a, b, TAU).data, similarity_oracle(a, b, TAU), rtol=1e-12)
        assert np.all(similarity_matrix(a, b, TAU).data > 0)

    def test_zero_norm_row(self, rng):
        a = _emb(rng)
        a[2] = 0.0
        with pytest.raises(DegenerateEmbeddingError) as exc:
            similarity_matrix(a, _emb(rng), TAU)
        assert exc.value.code == 'degenerate_embedding'

    def test_non_positive_temperature(self, rng):
        with pytest.raises(ContractError):
            similarity_matrix(_emb(rng), _emb(rng), 0.0)


# ============================================================
# intra_loss
# ============================================================

class TestIntraLoss:

    def test_single_item_is_zero(self, rng):
        assert intra_loss(_emb(rng, n=1), _emb(rng, n=1), TAU).item() == 0.0

    def test_two_items_match_oracle(self):
        zh = np.array([[1.0, 0.2, -0.3], [0.1, 1.0, 0.4]])
        zp = np.array([[0.9, 0.1, 0.0], [-0.2, 0.8, 0.6]])
        assert intra_loss(zh, zp, TAU).item() == pytest.approx(intra_loss_oracle(zh, zp, TAU), abs=1e-12)

    @pytest.mark.parametrize('seed', range(5))
    def test_random_batches_match_oracle(self, seed):
        rng = np.random.default_rng(seed)
        zh, zp = _emb(rng, n=5), _emb(rng, n=5)
        assert intra_loss(zh, zp, 0.5).item() == pytest.approx(intra_loss_oracle(zh, zp, 0.5), abs=1e-12)

    def test_permutation_invariance(self, rng):
        zh, zp = _emb(rng, n=6), _emb(rng, n=6)
        perm = rng.permutation(6)
        a = intra_loss(zh, zp, TAU).item()
        b = intra_loss(zh[perm], zp[perm], TAU).item()
        assert abs(a - b) < 1e-12

    def test_non_negative(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            assert intra_loss(_emb(rng), _emb(rng), TAU).item() >= 0.0

    def test_rescaling_invariance(self, rng):
        zh, zp = _emb(rng), _emb(rng)
        scale = rng.uniform(0.1, 10.0, size=(4, 1))
        a = intra_loss(zh, zp, TAU).item()
        b = intra_loss(zh * scale, zp, TAU).item()
        assert abs(a - b) < 1e-12

    def test_empty_batch(self):
        with pytest.raises(ContractError):
            intra_loss(np.zeros((0, 4)), np.zeros((0, 4)), TAU)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ContractError):
            intra_loss(_emb(rng, n=3), _emb(rng, n=4), TAU)

    def test_unknown_mode(self, rng):
        with pytest.raises(ConfigError):
            intra_loss(_emb(rng), _emb(rng), TAU, mode='contrastive')

    def test_finite_differences(self, rng):
        a = Parameter('z_hat', Tensor(_emb(rng)))
        b = Parameter('z_prime', Tensor(_emb(rng)))
        result = gradcheck(lambda: intra_loss(a.tensor, b.tensor, 0.5), [a, b])
        assert result.max_rel_error < 1e-4


# ============================================================
# inter_loss
# ============================================================

class TestInterLoss:

    def test_single_item_is_zero(self, rng):
        assert inter_loss(_emb(rng, n=1), _emb(rng, n=1), TAU).item() == 0.0

    def test_two_orthonormal_items(self):
        z = np.eye(2, 4)
        expected = -math.log(math.exp(1 / TAU) / (math.exp(1 / TAU) + math.exp(0.0)))
        assert inter_loss(z, z, TAU).item() == pytest.approx(expected, abs=1e-12)

    def test_matches_oracle(self, rng):
        za, zv = _emb(rng, n=5), _emb(rng, n=5)
        assert inter_loss(za, zv, 0.3).item() == pytest.approx(inter_loss_oracle(za, zv, 0.3), abs=1e-12)

    def test_rescaling_invariance(self, rng):
        za, zv = _emb(rng), _emb(rng)
        scale = rng.uniform(0.1, 10.0, size=(4, 1))
        assert abs(inter_loss(za, zv, TAU).item() - inter_loss(za * scale, zv, TAU).item()) < 1e-12

    def test_symmetric_in_modalities(self, rng):
        za, zv = _emb(rng), _emb(rng)
        assert abs(inter_loss(za, zv, TAU).item() - inter_loss(zv, za, TAU).item()) < 1e-12

    def test_permutation_invariance(self, rng):
        za, zv = _emb(rng, n=6), _emb(rng, n=6)
        perm = rng.permutation(6)
        assert abs(inter_loss(za, zv, TAU).item() - inter_loss(za[perm], zv[perm], TAU).item()) < 1e-12

    def test_finite_differences(self, rng):
        a = Parameter('z_a', Tensor(_emb(rng)))
        b = Parameter('z_v', Tensor(_emb(rng)))
        result = gradcheck(lambda: inter_loss(a.tensor, b.tensor, 0.5), [a, b])
        assert result.max_rel_error < 1e-4


# ============================================================
# total_loss
# ============================================================

class TestTotalLoss:

    def test_unit_weights(self):
        out = total_loss({'inter': 0.5, 'intra_a': 1.25, 'intra_v': 2.0}, LossWeights(1, 1, 1))
        assert out.total.item() == pytest.approx(3.75, abs=1e-12)

    def test_inter_only(self):
        out = total_loss({'inter': 0.5, 'intra_a': 1.25, 'intra_v': 2.0}, LossWeights(1, 0, 0))
        assert out.total.item() == 0.5

    def test_reweighted(self):
        out = total_loss({'inter': 0.5, 'intra_a': 1.25, 'intra_v': 2.0}, LossWeights(1, 2, 2))
        assert out.total.item() == pytest.approx(0.5 + 2.5 + 4.0, abs=1e-12)
        floats = out.as_floats()
        assert floats['loss_intra_a'] == 1.25

    def test_zero_weight_gives_zero_gradient(self, rng):
        za = Tensor(_emb(rng), requires_grad=True)
        zv = Tensor(_emb(rng), requires_grad=True)
        zh = Tensor(_emb(rng), requires_grad=True)
        with Tape() as tape:
            out = total_loss({
                'inter': inter_loss(za, zv, TAU),
                'intra_a': intra_loss(zh, za, TAU),
                'intra_v': inter_loss(zv, zv, TAU),
            }, LossWeights(0.0, 1.0, 0.0))
        backward(out.total, tape, [za, zv, zh])
        np.testing.assert_array_equal(zv.grad, np.zeros_like(zv.data))
        assert np.any(zh.grad != 0)

    @pytest.mark.parametrize('weights', [(-1, 1, 1), (0, 0, 0)])
    def test_invalid_weights(self, weights):
        with pytest.raises(ConfigError):
            LossWeights(*weights)

    def test_non_finite_component(self):
        with pytest.raises(ContractError):
            total_loss({'inter': float('nan'), 'intra_a': 1.0, 'intra_v': 1.0})


# ============================================================
# equimod_loss
# ============================================================

class TestEquiMod:

    @pytest.mark.parametrize('seed', range(5))
    def test_strictly_below_intra(self, seed):
        rng = np.random.default_rng(seed)
        zh, zp = _emb(rng, n=2 + seed), _emb(rng, n=2 + seed)
        assert equimod_loss(zh, zp, TAU).item() < intra_loss(zh, zp, TAU).item()

    def test_two_items_match_oracle(self):
        zh = np.array([[1.0, 0.2, -0.3], [0.1, 1.0, 0.4]])
        zp = np.array([[0.9, 0.1, 0.0], [-0.2, 0.8, 0.6]])
        expected = intra_loss_oracle(zh, zp, TAU, include_positive=False)
        assert equimod_loss(zh, zp, TAU).item() == pytest.approx(expected, abs=1e-12)

    def test_can_be_negative(self):
        zh = np.eye(2, 4)
        zp = zh + 1e-6
        assert equimod_loss(zh, zp, TAU).item() < 0.0

    def test_single_item_is_degenerate(self, rng):
        with pytest.raises(DegenerateBatchError):
            equimod_loss(_emb(rng, n=1), _emb(rng, n=1), TAU)


# ============================================================
# gradient_factor_check
# ============================================================

class TestGradientFactor:

    def test_unit_substitution(self):
        g = gradient_factor_check(1.0, [1.0])
        assert g.d_equimod == -1.0
        assert g.factor == 0.5
        assert g.d_equiav == -0.5

    def test_relation_on_random_values(self, rng):
        for _ in range(50):
            s_pos = float(rng.uniform(0.01, 100.0))
            negs = rng.uniform(0.01, 100.0, size=int(rng.integers(1, 10)))
            g = gradient_factor_check(s_pos, negs)
            assert g.relation_error() <= 1e-12 * max(1.0, abs(g.d_equimod))
            assert 0.0 < g.factor < 1.0

    def test_autodiff_agrees(self, rng):
        for _ in range(20):
            g = gradient_factor_check(float(rng.uniform(0.1, 10.0)), rng.uniform(0.1, 10.0, size=5))
            assert g.autodiff_error() < 1e-8

    def test_autodiff_runs_through_anchor_losses(self, monkeypatch):
        calls = []
        original = contrastive.anchor_losses

        def recording(logits, pos, mask, exclude_positive=False):
            calls.append(exclude_positive)
            return original(logits, pos, mask, exclude_positive)

        monkeypatch.setattr(contrastive, 'anchor_losses', recording)
        gradient_factor_check(2.0, [1.0, 3.0])
        assert calls == [False, True]

    def test_broken_denominator_is_caught(self, monkeypatch):
        # 正例永遠被拿出分母：EquiAV 的梯度會變成 EquiMod 的
        original = contrastive.anchor_losses
        monkeypatch.setattr(contrastive, 'anchor_losses',
                            lambda logits, pos, mask, exclude_positive=False: original(logits, pos, mask, True))
        g = gradient_factor_check(2.0, [1.0, 3.0])
        assert g.autodiff_error() > 0.1

    def test_anchor_losses_mean_is_nt_xent(self, rng):
        zh, zp = _emb(rng, n=3), _emb(rng, n=3)
        z = np.concatenate([zh, zp])
        z = z / np.linalg.norm(z, axis=1, keepdims=True)
        logits = Tensor(z @ z.T / TAU)
        pos = (np.arange(6) + 3) % 6
        mask = ~np.eye(6, dtype=bool)
        for exclude, loss_fn in ((False, intra_loss), (True, equimod_loss)):
            per_anchor = contrastive.anchor_losses(logits, pos, mask, exclude)
            assert per_anchor.mean().item() == pytest.approx(loss_fn(zh, zp, TAU).item(), abs=1e-10)

    def test_every_anchor_in_batch(self, rng):
        zh, zp = _emb(rng, n=4), _emb(rng, n=4)
        for i in range(4):
            s_pos, negs = anchor_similarities(zh, zp, 0.5, i)
            g = gradient_factor_check(s_pos, negs)
            assert g.relation_error() <= 1e-8 * abs(g.d_equimod)

    def test_empty_negatives(self):
        with pytest.raises(ContractError):
            gradient_factor_check(1.0, [])
