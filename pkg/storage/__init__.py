"""儲存後端模組"""

from .local import LocalStorage, dumps, write_report

__all__ = ['LocalStorage', 'dumps', 'write_report']
