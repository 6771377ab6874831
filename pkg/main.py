#!/usr/bin/env python3
"""
EquiAV desk-scale 主程式

子命令：
    train      --config PATH [--resume CKPT] [--out-dir DIR]
    eval       --checkpoint PATH [--retrieval | --probe] [--source S] [--out PATH]
    gradcheck  [--seed N] [--max-coords K]
    augdump    --modality M --seed N [--count C]
    losscheck  [--seed N]
    sweep      --manifest PATH [--out PATH]

stdout 只輸出 JSON（報表、augdump 每筆一行），log 一律走 stderr。
Exit code：0 成功；1 驗證失敗 / 參數錯誤 / 檢查未通過；2 I/O 錯誤。
"""

import argparse
import logging
import sys

import config
from storage import dumps, write_report
from tasks import (AugDumpTask, GradCheckTask, LossCheckTask, ProbeTask, RetrievalTask,
                   SweepTask, TrainTask)
from tasks.probe import SOURCES
from utils.errors import EquiAVError, PersistenceError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class _ArgumentParser(argparse.ArgumentParser):
    """argparse 預設參數錯誤 exit 2，這裡改成 1（2 保留給 I/O 錯誤）"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _setup_logging():
    """初始化 logging（全部輸出到 stderr）"""
    level = getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s [%(threadName)s] %(levelname)s %(name)s: %(message)s',
        datefmt='%H:%M:%S',
        stream=sys.stderr,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='equiav', description='EquiAV desk-scale 訓練與評估')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('train', help='toy training run')
    p.add_argument('--config', required=True, help='TrainConfig JSON')
    p.add_argument('--resume', help='從 checkpoint 續跑')
    p.add_argument('--out-dir', help='覆寫輸出目錄')

    p = sub.add_parser('eval', help='zero-shot retrieval 或 linear probe')
    p.add_argument('--checkpoint', required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument('--retrieval', action='store_true', help='雙向檢索（預設）')
    mode.add_argument('--probe', action='store_true', help='linear probe')
    p.add_argument('--source', choices=SOURCES, default='concatenated', help='probe 特徵來源')
    p.add_argument('--out', help='報表另存路徑')

    p = sub.add_parser('gradcheck', help='完整損失的有限差分梯度檢查')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--max-coords', type=int, default=4, help='每個參數抽幾個座標（0 = 全部）')

    p = sub.add_parser('augdump', help='印出抽樣的增強 spec 與向量')
    p.add_argument('--modality', required=True, choices=('audio', 'visual'))
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--count', type=int, default=1)

    p = sub.add_parser('losscheck', help='損失 oracle 與正例梯度關係檢查')
    p.add_argument('--seed', type=int, default=0)

    p = sub.add_parser('sweep', help='ablation sweep')
    p.add_argument('--manifest', default=str(config.ABLATION_MANIFEST_PATH))
    p.add_argument('--out', help='報表另存路徑')

    return parser


def _make_task(args):
    if args.command == 'train':
        return TrainTask(args.config, resume=args.resume, out_dir=args.out_dir)
    if args.command == 'eval':
        if args.probe:
            return ProbeTask(args.checkpoint, source=args.source)
        return RetrievalTask(args.checkpoint)
    if args.command == 'gradcheck':
        return GradCheckTask(seed=args.seed, max_coords=args.max_coords)
    if args.command == 'augdump':
        return AugDumpTask(args.modality, seed=args.seed, count=args.count)
    if args.command == 'losscheck':
        return LossCheckTask(seed=args.seed)
    if args.command == 'sweep':
        return SweepTask(args.manifest)
    raise EquiAVError(f"unknown command {args.command!r}")


def _emit(command: str, report: dict, out=None):
    if command == 'augdump':
        # 每筆一行，方便語料測試逐行比對
        for record in report['records']:
            print(dumps({'modality': report['modality'], 'seed': report['seed'], **record}))
    else:
        print(dumps(report, indent=2))
    if out:
        write_report(out, report)
        logger.info(f"[main] 報表已寫入 {out}")


def cli_main(argv=None) -> int:
    """CLI 進入點，回傳 exit code（不直接 sys.exit，方便測試）"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INVALID

    if not config.validate_config():
        return EXIT_INVALID
    if config.IS_DEBUG:
        config.print_config()

    try:
        report = _make_task(args).run()
        _emit(args.command, report, getattr(args, 'out', None))
    except (PersistenceError, FileNotFoundError, OSError) as e:
        logger.error(f"[main] {args.command} I/O 錯誤: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except EquiAVError as e:
        logger.error(f"[main] {args.command} 失敗 ({e.code}): {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    if report.get('passed') is False:
        return EXIT_INVALID
    return EXIT_OK


def main():
    """主程式"""
    _setup_logging()
    sys.exit(cli_main())


if __name__ == '__main__':
    main()
