"""
Ablation sweep

讀 YAML manifest（預設 config/ablation.yaml）：

    base:       所有 variant 共用的 TrainConfig 欄位
    seeds:      每個 variant 要跑的 seed
    variants:   [{name, <TrainConfig 欄位覆寫>...}, ...]

每個 (variant, seed) 跑一次 toy training，在 eval split 上做雙向檢索，
回報每個 variant 的 R@1 平均與標準差。
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

import config
from pipeline.config import TrainConfig
from pipeline.data import generate_synthetic_pairs
from pipeline.trainer import train_run
from tasks.retrieval import retrieval_eval
from utils.errors import ConfigError, PersistenceError

logger = logging.getLogger(__name__)


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        with open(path, encoding='utf-8') as f:
            manifest = yaml.safe_load(f) or {}
    except OSError as e:
        raise PersistenceError(f"cannot read manifest {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"manifest {path} is not valid YAML: {e}") from e

    if not isinstance(manifest, dict):
        raise ConfigError(f"manifest {path} must be a mapping")
    unknown = sorted(set(manifest) - {'base', 'seeds', 'variants'})
    if unknown:
        raise ConfigError(f"unknown manifest keys: {unknown}")
    variants = manifest.get('variants') or []
    if not variants:
        raise ConfigError(f"manifest {path} lists no variants")
    names = [v.get('name') if isinstance(v, dict) else None for v in variants]
    if any(not n for n in names) or len(set(names)) != len(names):
        raise ConfigError(f"every variant needs a unique name, got {names}")
    seeds = manifest.get('seeds') or [config.SEED]
    if any(not isinstance(s, int) or isinstance(s, bool) or s < 0 for s in seeds):
        raise ConfigError(f"seeds must be non-negative integers, got {seeds}")
    return {'base': manifest.get('base') or {}, 'seeds': list(seeds), 'variants': variants}


def variant_config(base: dict, variant: dict, seed: int, out_dir: Path) -> TrainConfig:
    overrides = {k: v for k, v in variant.items() if k != 'name'}
    return TrainConfig.from_dict({**base, **overrides, 'seed': seed, 'output_dir': str(out_dir)})


class SweepTask:

    def __init__(self, manifest_path=None, out_dir: Optional[str] = None):
        self.manifest_path = Path(manifest_path or config.ABLATION_MANIFEST_PATH)
        self.out_dir = Path(out_dir) if out_dir else config.LOCAL_DATA_DIR / 'sweeps' / self.manifest_path.stem

    def run(self) -> dict:
        manifest = load_manifest(self.manifest_path)
        # 先驗證全部組合，避免跑到一半才發現設定錯誤
        plan = [
            (variant, seed, variant_config(manifest['base'], variant, seed,
                                           self.out_dir / variant['name'] / f'seed{seed}'))
            for variant in manifest['variants'] for seed in manifest['seeds']
        ]
        logger.info(f"[sweep] {len(manifest['variants'])} 個 variant × {len(manifest['seeds'])} 個 seed")

        by_variant: dict[str, list] = {v['name']: [] for v in manifest['variants']}
        for variant, seed, cfg in plan:
            result = train_run(cfg)
            v2a, a2v = retrieval_eval(result.model, generate_synthetic_pairs(cfg, split='eval'), cfg, ks=(1,))
            run = {'seed': seed, 'video_to_audio_r1': v2a.recall(1), 'audio_to_video_r1': a2v.recall(1)}
            by_variant[variant['name']].append(run)
            logger.info(f"[sweep] {variant['name']} seed={seed}：V→A {run['video_to_audio_r1']:.3f}，"
                        f"A→V {run['audio_to_video_r1']:.3f}")

        variants = []
        for variant in manifest['variants']:
            runs = by_variant[variant['name']]
            summary = {'name': variant['name'], 'overrides': {k: v for k, v in variant.items() if k != 'name'},
                       'runs': runs}
            for key in ('video_to_audio_r1', 'audio_to_video_r1'):
                values = np.array([r[key] for r in runs])
                summary[f'{key}_mean'] = float(values.mean())
                summary[f'{key}_std'] = float(values.std())
            variants.append(summary)

        return {'task': 'sweep', 'manifest': str(self.manifest_path), 'seeds': manifest['seeds'],
                'variants': variants}
