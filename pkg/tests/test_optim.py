"""
AdamW / cosine_lr 單元測試

1. decoupled weight decay：零梯度時只剩 lr·wd·θ
2. 單步手算
3. 決定性
4. 二次碗上的單調下降
5. 排程端點與錯誤範圍
"""

import math

import numpy as np
import pytest

from numerics import Parameter, Tape, Tensor, adamw_step, backward, cosine_lr
from utils.errors import ConfigError, ContractError


class TestAdamW:

    def test_zero_gradient_only_decays(self):
        theta = np.array([1.0, -2.0, 0.5])
        p = Parameter('w', Tensor(theta.copy()))
        p.tensor.grad = np.zeros(3)
        lr, wd = 0.1, 1e-2
        adamw_step([p], lr=lr, weight_decay=wd)
        np.testing.assert_array_equal(p.data, theta - lr * wd * theta)
        assert p.step == 1

    def test_single_step_hand_computation(self):
        p = Parameter('theta', Tensor(1.0))
        p.tensor.grad = np.array(1.0)
        adamw_step([p], lr=0.1, beta1=0.9, beta2=0.95, weight_decay=1e-5, eps=1e-8)
        # m = 0.1, v = 0.05, m̂ = 1, v̂ = 1
        expected = 1.0 - 0.1 * 1e-5 * 1.0
        expected -= 0.1 * 1.0 / (1.0 + 1e-8)
        assert float(p.data) == pytest.approx(expected, abs=1e-15)
        assert float(p.m) == pytest.approx(0.1)
        assert float(p.v) == pytest.approx(0.05)

    def test_missing_gradient_lists_names(self):
        a = Parameter('enc.w', Tensor(np.ones(2)))
        b = Parameter('enc.b', Tensor(np.ones(2)))
        a.tensor.grad = np.ones(2)
        with pytest.raises(ContractError) as exc:
            adamw_step([a, b], lr=0.1)
        assert 'enc.b' in str(exc.value)
        assert a.step == 0

    def test_deterministic(self):
        def run():
            rng = np.random.default_rng(11)
            p = Parameter('w', Tensor(rng.normal(size=(4, 3))))
            for _ in range(2):
                p.tensor.grad = rng.normal(size=(4, 3))
                adamw_step([p], lr=1e-2)
            return p.data.copy(), p.m.copy(), p.v.copy()

        first, second = run(), run()
        for x, y in zip(first, second):
            np.testing.assert_array_equal(x, y)

    def test_quadratic_bowl_monotone(self):
        target = np.array([3.0, -1.5, 2.0])
        p = Parameter('x', Tensor(np.zeros(3)))
        losses = []
        for _ in range(100):
            with Tape() as tape:
                diff = p.tensor - Tensor(target)
                loss = (diff * diff).sum()
            backward(loss, tape, [p])
            losses.append(loss.item())
            adamw_step([p], lr=0.01, beta1=0.9, beta2=0.999, weight_decay=0.0)
        assert all(b < a for a, b in zip(losses, losses[1:]))


class TestCosineLR:

    def test_start(self):
        assert cosine_lr(0, 100, 10, lr_init=1e-6, lr_peak=1e-4) == pytest.approx(1e-6, abs=1e-18)

    def test_warmup_endpoint(self):
        assert cosine_lr(10, 100, 10, lr_init=1e-6, lr_peak=1e-4) == pytest.approx(1e-4, abs=1e-18)

    def test_cosine_endpoint(self):
        assert abs(cosine_lr(100, 100, 10, lr_init=1e-6, lr_peak=1e-4) - 1e-6) < 1e-12

    def test_midpoint_of_decay(self):
        lr = cosine_lr(55, 100, 10, lr_init=0.0, lr_peak=2.0)
        assert lr == pytest.approx(1.0)

    def test_warmup_is_linear(self):
        values = [cosine_lr(s, 20, 4, lr_init=0.0, lr_peak=1.0) for s in range(5)]
        assert values == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_non_increasing_after_warmup(self):
        values = [cosine_lr(s, 50, 5, lr_init=1e-6, lr_peak=1e-3) for s in range(5, 51)]
        assert all(b <= a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize('total,warmup', [(0, 0), (10, 11), (10, 10), (10, -1)])
    def test_invalid_ranges(self, total, warmup):
        with pytest.raises(ConfigError):
            cosine_lr(0, total, warmup)

    def test_peak_below_init(self):
        with pytest.raises(ConfigError):
            cosine_lr(0, 10, 2, lr_init=1e-3, lr_peak=1e-4)

    @pytest.mark.parametrize('step', [-5, -1, 11, 100])
    def test_step_outside_schedule(self, step):
        with pytest.raises(ConfigError):
            cosine_lr(step, 10, 2)

    def test_last_step_returns_init_with_one_decay_step(self):
        # warmup 只差一步：第 total 步必須回到 lr_init，不是停在 peak
        assert cosine_lr(9, 10, 9, lr_init=1e-6, lr_peak=1e-3) == pytest.approx(1e-3, abs=1e-15)
        assert abs(cosine_lr(10, 10, 9, lr_init=1e-6, lr_peak=1e-3) - 1e-6) < 1e-12
