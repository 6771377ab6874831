"""CLI 任務模組：每個子命令一個 task 類別，run() 回傳可 JSON 化的 dict"""

from .augdump import AugDumpTask
from .gradcheck import GradCheckTask
from .losscheck import LossCheckTask
from .probe import ProbeTask
from .retrieval import RetrievalTask
from .sweep import SweepTask
from .train import TrainTask

__all__ = ['AugDumpTask', 'GradCheckTask', 'LossCheckTask', 'ProbeTask', 'RetrievalTask',
           'SweepTask', 'TrainTask']
