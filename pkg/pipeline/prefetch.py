"""
BatchPrefetcher：在 worker 線程預先組 batch，訓練迴圈依 step 順序取用

核心機制：
1. ThreadPoolExecutor：增強套用在 worker 線程執行，與 optimizer step 重疊
2. 有界 look-ahead：最多預組 lookahead 個 step，避免記憶體無限成長
3. 線程名標準化：便於 log 追蹤（thread name = "batch-{step}"）
4. 耗時觀察：超過 BATCH_BUILD_TIMEOUT 記 warning（不中斷）

batch 內容只由 (seed, step, item, slot) 決定，因此 worker 數不影響結果；
取用順序固定為 step 遞增，optimizer step 永遠在主線程序列執行。
"""

import logging
import threading
import time
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Iterator, Optional

import config
from pipeline.batch import Batch, BatchBuilder
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


class BatchPrefetcher:
    """Batch 預取器

    Usage:
        with BatchPrefetcher(builder, workers=2) as prefetcher:
            for batch in prefetcher.iter_batches(start, stop):
                train_step(model, batch, cfg)
    """

    def __init__(self, builder: BatchBuilder, workers: int = config.BATCH_WORKERS,
                 lookahead: Optional[int] = None, timeout: float = config.BATCH_BUILD_TIMEOUT):
        """
        Args:
            builder: 組 batch 的 BatchBuilder
            workers: worker 線程數（1 = 單一 producer）
            lookahead: 最多預組幾個 step（預設 2 × workers）
            timeout: 單一 batch 組裝超過此秒數記 warning
        """
        if workers < 1:
            raise ConfigError(f"workers must be >= 1, got {workers}")
        self.builder = builder
        self.workers = workers
        self.lookahead = lookahead or 2 * workers
        if self.lookahead < 1:
            raise ConfigError(f"lookahead must be >= 1, got {self.lookahead}")
        self.timeout = timeout
        self.executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix='batch')
        self._built = 0
        self._slow = 0
        self._lock = threading.Lock()

    def __enter__(self) -> 'BatchPrefetcher':
        return self

    def __exit__(self, *exc):
        self.shutdown(wait=True, cancel_futures=True)

    def submit(self, step: int) -> Future:
        return self.executor.submit(self._safe_build, step)

    def _safe_build(self, step: int) -> Batch:
        """在 thread pool 內的執行包裝

        1. 設定線程名稱為 batch-{step}
        2. 觀察耗時（只記 warning）
        3. exception 記 log 後往上拋，由 iter_batches 在主線程重新丟出
        """
        thread = threading.current_thread()
        original_name = thread.name
        thread.name = f"batch-{step}"

        start = time.monotonic()
        try:
            batch = self.builder.build(step)
            elapsed = time.monotonic() - start
            with self._lock:
                self._built += 1
                if elapsed > self.timeout:
                    self._slow += 1
            if elapsed > self.timeout:
                logger.warning(
                    f"[prefetch] step {step} 組裝耗時 {elapsed:.1f}s "
                    f"超過 BATCH_BUILD_TIMEOUT={self.timeout}s（僅告警，不中斷）"
                )
            return batch
        except Exception as e:
            logger.error(f"[prefetch] step {step} 組裝失敗: {e!r}")
            raise
        finally:
            # pool 會 reuse thread，恢復原名避免誤導下一筆 log
            thread.name = original_name

    def iter_batches(self, start: int, stop: int) -> Iterator[Batch]:
        """依序產出 step ∈ [start, stop) 的 batch"""
        pending: deque = deque()
        next_step = start
        while next_step < stop and len(pending) < self.lookahead:
            pending.append(self.submit(next_step))
            next_step += 1
        while pending:
            batch = pending.popleft().result()
            if next_step < stop:
                pending.append(self.submit(next_step))
                next_step += 1
            yield batch

    def get_status(self) -> dict:
        with self._lock:
            return {
                'workers': self.workers,
                'lookahead': self.lookahead,
                'built': self._built,
                'slow': self._slow,
            }

    def shutdown(self, wait: bool = True, cancel_futures: bool = False) -> None:
        self.executor.shutdown(wait=wait, cancel_futures=cancel_futures)
