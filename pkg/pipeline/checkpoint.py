"""
Checkpoint 讀寫

檔案格式（全部 little-endian）：

    offset  內容
    0       magic  b"EQUIAVCK"（8 bytes）
    8       version（uint32）
    12      header 長度 L（uint64）
    20      header：UTF-8 JSON（sort_keys、無多餘空白）
    20+L    payload：依 header.params 順序，每個參數連續存 value / m / v（float64）
    end-4   CRC32（uint32），涵蓋前面所有 bytes

header 欄位：version、step、params（name / shape / offset / count / step）、rng、config。
offset 以 float64 個數計，指向該參數 value 區段的起點；m、v 緊接其後。

讀取檢查順序：magic → 長度 → CRC → version → header / payload 一致性。
寫入先寫暫存檔再 os.replace，失敗時不留下半個檔案。
"""

import json
import logging
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from model.base import Module
from utils.errors import (
    CheckpointChecksumError,
    CheckpointFormatError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    ContractError,
    PersistenceError,
)

logger = logging.getLogger(__name__)

MAGIC = b"EQUIAVCK"
FORMAT_VERSION = 1
_PREFIX = struct.Struct('<8sIQ')
_CRC = struct.Struct('<I')
_MIN_SIZE = _PREFIX.size + _CRC.size
_F64 = np.dtype('<f8')


@dataclass
class Checkpoint:
    step: int
    params: dict                          # name → float64 ndarray
    m: dict
    v: dict
    param_steps: dict                     # name → AdamW step count
    rng: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def names(self) -> list[str]:
        return list(self.params)

    def header(self) -> dict:
        entries, offset = [], 0
        for name, value in self.params.items():
            count = int(value.size)
            entries.append({
                'name': name,
                'shape': list(value.shape),
                'offset': offset,
                'count': count,
                'step': int(self.param_steps[name]),
            })
            offset += 3 * count
        return {
            'version': self.version,
            'step': int(self.step),
            'params': entries,
            'rng': self.rng,
            'config': self.config,
        }

    def to_bytes(self) -> bytes:
        header = json.dumps(self.header(), sort_keys=True, separators=(',', ':'), ensure_ascii=False).encode('utf-8')
        chunks = [_PREFIX.pack(MAGIC, self.version, len(header)), header]
        for name in self.params:
            for store in (self.params, self.m, self.v):
                chunks.append(np.ascontiguousarray(store[name], dtype=_F64).tobytes())
        body = b''.join(chunks)
        return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)

    @classmethod
    def from_bytes(cls, blob: bytes, source: str = '<bytes>') -> 'Checkpoint':
        if blob[:len(MAGIC)] != MAGIC[:len(blob)]:
            raise CheckpointFormatError(f"{source}: not a checkpoint (bad magic)")
        if len(blob) < _MIN_SIZE:
            raise CheckpointTruncatedError(f"{source}: {len(blob)} bytes, shorter than the {_MIN_SIZE}-byte frame")
        body, (stored_crc,) = blob[:-_CRC.size], _CRC.unpack(blob[-_CRC.size:])
        if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
            raise CheckpointChecksumError(f"{source}: CRC32 mismatch (corrupt or truncated file)")
        _, version, header_len = _PREFIX.unpack(body[:_PREFIX.size])
        if version != FORMAT_VERSION:
            raise CheckpointVersionError(f"{source}: format version {version}, supported {FORMAT_VERSION}")

        start = _PREFIX.size
        try:
            header = json.loads(body[start:start + header_len].decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointFormatError(f"{source}: unreadable header: {e}") from e
        payload = np.frombuffer(body, dtype=_F64, offset=start + header_len)

        params, m, v, steps = {}, {}, {}, {}
        expected = 0
        for entry in header['params']:
            name, shape, off, count = entry['name'], tuple(entry['shape']), entry['offset'], entry['count']
            if off != expected or int(np.prod(shape, dtype=np.int64)) != count:
                raise CheckpointFormatError(f"{source}: inconsistent layout for {name}")
            chunk = payload[off:off + 3 * count]
            if chunk.size != 3 * count:
                raise CheckpointFormatError(f"{source}: payload too short for {name}")
            params[name] = chunk[:count].reshape(shape).astype(np.float64)
            m[name] = chunk[count:2 * count].reshape(shape).astype(np.float64)
            v[name] = chunk[2 * count:].reshape(shape).astype(np.float64)
            steps[name] = int(entry['step'])
            expected = off + 3 * count
        if expected != payload.size:
            raise CheckpointFormatError(f"{source}: {payload.size - expected} trailing values after the last parameter")

        return cls(
            step=int(header['step']),
            params=params,
            m=m,
            v=v,
            param_steps=steps,
            rng=header.get('rng', {}),
            config=header.get('config', {}),
            version=version,
        )


# ============================================================
# 與模型之間的轉換
# ============================================================

def checkpoint_from_model(model: Module, step: int, config: Optional[dict] = None,
                          rng: Optional[dict] = None) -> Checkpoint:
    params, m, v, steps = {}, {}, {}, {}
    for name, p in model.named_parameters():
        params[name] = np.array(p.data, dtype=np.float64)
        m[name] = np.array(p.m, dtype=np.float64)
        v[name] = np.array(p.v, dtype=np.float64)
        steps[name] = p.step
    return Checkpoint(step=step, params=params, m=m, v=v, param_steps=steps,
                      rng=rng or {}, config=config or {})


def restore(model: Module, ckpt: Checkpoint) -> Module:
    """把 checkpoint 的值、動量、step 寫回模型（名稱與形狀必須完全一致）"""
    own = dict(model.named_parameters())
    missing = sorted(set(own) - set(ckpt.params))
    extra = sorted(set(ckpt.params) - set(own))
    if missing or extra:
        raise ContractError(f"checkpoint does not match model: missing {missing}, unexpected {extra}")
    for name, p in own.items():
        value = ckpt.params[name]
        if value.shape != p.shape:
            raise ContractError(f"checkpoint shape {value.shape} != model shape {p.shape} for {name}")
        p.data[...] = value
        p.m[...] = ckpt.m[name]
        p.v[...] = ckpt.v[name]
        p.step = ckpt.param_steps[name]
        p.tensor.grad = None
    return model


# ============================================================
# 檔案 I/O
# ============================================================

def write_checkpoint(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + '.tmp')
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, 'wb') as f:
            f.write(ckpt.to_bytes())
        os.replace(tmp, path)
    except OSError as e:
        tmp.unlink(missing_ok=True)
        raise PersistenceError(f"cannot write checkpoint {path}: {e}") from e
    logger.info(f"[checkpoint] 寫入 {path}（step {ckpt.step}，{len(ckpt.params)} 個參數）")
    return path


def save_checkpoint(model: Module, path, step: int = 0, config: Optional[dict] = None,
                    rng: Optional[dict] = None) -> Path:
    return write_checkpoint(checkpoint_from_model(model, step, config, rng), path)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise PersistenceError(f"cannot read checkpoint {path}: {e}") from e
    ckpt = Checkpoint.from_bytes(blob, source=str(path))
    logger.info(f"[checkpoint] 載入 {path}（step {ckpt.step}）")
    return ckpt
