"""
損失檢查任務

1. Oracle 比對：intra / inter / equimod 與逐 pair 列舉的 oracle，N ∈ {1, 2, 3, 4} 輪流
2. 正例梯度關係：∂ℓ_EquiAV/∂s_pos = ∂ℓ_EquiMod/∂s_pos · Σs_n / (s_pos + Σs_n)
   閉式解誤差 ≤ 1e-12、autodiff 誤差 ≤ 1e-8、factor ∈ (0, 1)
3. N ≥ 2 時 ℓ_EquiAV > ℓ_EquiMod
"""

import logging

import numpy as np

from losses import equimod_loss, gradient_factor_check, inter_loss, intra_loss
from losses.oracles import inter_loss_oracle, intra_loss_oracle
from utils.rng import STREAM_CHECK, keyed_rng

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-12
RELATION_TOLERANCE = 1e-12
AUTODIFF_TOLERANCE = 1e-8
EMBED_DIM = 8


class LossCheckTask:

    def __init__(self, seed: int = 0, batches: int = 100, draws: int = 1000):
        self.seed = seed
        self.batches = batches
        self.draws = draws

    def _oracle_suite(self) -> dict:
        rng = keyed_rng(self.seed, STREAM_CHECK, 0)
        worst = {'intra': 0.0, 'inter': 0.0, 'equimod': 0.0}
        ordering_ok = True
        for b in range(self.batches):
            n = 1 + b % 4
            tau = float(rng.uniform(0.05, 1.0))
            z_1 = rng.standard_normal((n, EMBED_DIM))
            z_2 = rng.standard_normal((n, EMBED_DIM))

            ours = intra_loss(z_1, z_2, tau).item()
            worst['intra'] = max(worst['intra'], abs(ours - intra_loss_oracle(z_1, z_2, tau)))
            worst['inter'] = max(worst['inter'], abs(inter_loss(z_1, z_2, tau).item() - inter_loss_oracle(z_1, z_2, tau)))
            if n >= 2:
                em = equimod_loss(z_1, z_2, tau).item()
                worst['equimod'] = max(worst['equimod'],
                                       abs(em - intra_loss_oracle(z_1, z_2, tau, include_positive=False)))
                ordering_ok = ordering_ok and ours > em
        return {
            'batches': self.batches,
            'max_abs_error': worst,
            'equiav_above_equimod': ordering_ok,
            'passed': ordering_ok and all(v <= ORACLE_TOLERANCE for v in worst.values()),
        }

    def _relation_suite(self) -> dict:
        rng = keyed_rng(self.seed, STREAM_CHECK, 1)
        worst_relation = worst_autodiff = 0.0
        factor_ok = True
        for _ in range(self.draws):
            s_pos = float(rng.uniform(0.01, 100.0))
            s_negs = rng.uniform(0.01, 100.0, size=int(rng.integers(1, 17)))
            g = gradient_factor_check(s_pos, s_negs)
            worst_relation = max(worst_relation, g.relation_error() / max(1.0, abs(g.d_equimod)))
            worst_autodiff = max(worst_autodiff, g.autodiff_error())
            factor_ok = factor_ok and 0.0 < g.factor < 1.0
        return {
            'draws': self.draws,
            'max_relation_error': worst_relation,
            'max_autodiff_error': worst_autodiff,
            'factor_in_unit_interval': factor_ok,
            'passed': (factor_ok and worst_relation <= RELATION_TOLERANCE
                       and worst_autodiff <= AUTODIFF_TOLERANCE),
        }

    def run(self) -> dict:
        oracle = self._oracle_suite()
        relation = self._relation_suite()
        passed = oracle['passed'] and relation['passed']
        log = logger.info if passed else logger.warning
        log(
            f"[losscheck] oracle 最大誤差 {max(oracle['max_abs_error'].values()):.2e}，"
            f"梯度關係 {relation['max_relation_error']:.2e}，autodiff {relation['max_autodiff_error']:.2e}"
        )
        return {
            'task': 'losscheck',
            'seed': self.seed,
            'oracle': oracle,
            'gradient_relation': relation,
            'passed': passed,
        }
