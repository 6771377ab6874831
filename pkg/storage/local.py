"""
本地檔案儲存

一次 run 的所有輸出都放在同一個目錄：metrics JSONL、報表 JSON、config echo。
"""

import json
from pathlib import Path
from typing import Callable, Optional

import numpy as np

import config
from utils.errors import PersistenceError


class _NumpyEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return super().default(obj)


def dumps(data, indent: Optional[int] = None) -> str:
    """固定 key 順序的 JSON（stdout 報表與檔案共用，確保輸出可重現）"""
    return json.dumps(data, ensure_ascii=False, sort_keys=True, indent=indent, cls=_NumpyEncoder)


class LocalStorage:
    """本地檔案儲存"""

    def __init__(self, base_dir: Path = None):
        self.base_dir = Path(base_dir or config.LOCAL_DATA_DIR)
        try:
            self.base_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise PersistenceError(f"cannot create output directory {self.base_dir}: {e}") from e

    def path(self, name: str) -> Path:
        return self.base_dir / name

    def save(self, name: str, data: dict) -> Path:
        """儲存單一 JSON 文件

        Args:
            name: 檔名（不含副檔名）
            data: 要儲存的資料

        Returns:
            Path: 儲存的檔案路徑
        """
        filepath = self.base_dir / f"{name}.json"
        try:
            with open(filepath, 'w', encoding='utf-8') as f:
                f.write(dumps(data, indent=2) + '\n')
        except OSError as e:
            raise PersistenceError(f"cannot write {filepath}: {e}") from e
        return filepath

    def save_append(self, name: str, records: list) -> Path:
        """追加儲存（JSONL 格式，一筆一行）"""
        filepath = self.base_dir / f"{name}.jsonl"
        try:
            with open(filepath, 'a', encoding='utf-8') as f:
                for record in records:
                    f.write(dumps(record) + '\n')
        except OSError as e:
            raise PersistenceError(f"cannot append to {filepath}: {e}") from e
        return filepath

    def read_jsonl(self, name: str) -> list:
        filepath = self.base_dir / f"{name}.jsonl"
        if not filepath.exists():
            return []
        try:
            with open(filepath, 'r', encoding='utf-8') as f:
                return [json.loads(line) for line in f if line.strip()]
        except OSError as e:
            raise PersistenceError(f"cannot read {filepath}: {e}") from e

    def truncate_jsonl(self, name: str, keep: Callable[[dict], bool]) -> int:
        """只保留 keep(record) 為真的行（續跑時丟掉 checkpoint 之後的紀錄），回傳保留筆數"""
        kept = [r for r in self.read_jsonl(name) if keep(r)]
        filepath = self.base_dir / f"{name}.jsonl"
        try:
            with open(filepath, 'w', encoding='utf-8') as f:
                for record in kept:
                    f.write(dumps(record) + '\n')
        except OSError as e:
            raise PersistenceError(f"cannot rewrite {filepath}: {e}") from e
        return len(kept)

    def get_latest(self, name: str) -> Optional[dict]:
        """JSON 文件或 JSONL 最後一筆"""
        doc = self.base_dir / f"{name}.json"
        if doc.exists():
            with open(doc, 'r', encoding='utf-8') as f:
                return json.load(f)
        rows = self.read_jsonl(name)
        return rows[-1] if rows else None


def write_report(path, data) -> Path:
    """把報表寫到指定路徑（CLI --out），內容與 stdout 相同"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(dumps(data, indent=2) + '\n')
    except OSError as e:
        raise PersistenceError(f"cannot write report {path}: {e}") from e
    return path
