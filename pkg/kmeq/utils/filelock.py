"""
Lock on an output directory, through filelock ( https://pypi.org/project/filelock/ ).

Only taken when several processes may write into the same directory: parallel trial
workers, or test runs under pytest-xdist.
"""

import contextlib
import os
from pathlib import Path
from typing import ContextManager

from filelock import FileLock

LOCK_NAME = ".kmeq.lock"


def output_lock(directory: Path, parallel: bool = False) -> ContextManager[object]:
    if parallel or os.getenv("PYTEST_XDIST_WORKER"):
        return FileLock(str(directory / LOCK_NAME))
    else:
        # single writer, nothing to race with
        return contextlib.nullcontext()
