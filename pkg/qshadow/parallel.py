#!/usr/bin/env python
# -*- coding: utf-8 -*-

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from tqdm import tqdm

from .exceptions import ConfigurationError

###############################################################################

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "QSHADOW_THREADS"

###############################################################################


def resolve_workers(n_workers: Optional[int] = None) -> Optional[int]:
    """
    Determine how many threads a pool may use. An explicit value wins, otherwise the QSHADOW_THREADS environment
    variable caps the pool, otherwise None is returned and the executor picks its own default.

    :param n_workers: Explicit number of workers.
    :return: The number of workers to hand to ThreadPoolExecutor.
    """
    if n_workers is not None:
        if n_workers < 1:
            raise ConfigurationError(f"Number of workers must be at least one. Received: {n_workers}")
        return n_workers

    env = os.environ.get(THREADS_ENV)
    if env is None or env.strip() == "":
        return None

    try:
        capped = int(env)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer. Received: '{env}'")
    if capped < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be at least one. Received: {capped}")

    return capped


def thread_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    n_workers: Optional[int] = None,
    desc: Optional[str] = None,
    show_progress: bool = False
) -> List[R]:
    """
    Order preserving map over a thread pool.

    :param fn: Function applied to every item.
    :param items: The items to process.
    :param n_workers: Number of threads, see resolve_workers.
    :param desc: Progress bar description.
    :param show_progress: Boolean option to show or hide progress bar.
    :return: The list of results in input order.
    """
    items = list(items)
    workers = resolve_workers(n_workers)

    # Single worker runs stay in the calling thread
    if workers == 1:
        if show_progress:
            return [fn(item) for item in tqdm(items, desc=desc)]
        return [fn(item) for item in items]

    with ThreadPoolExecutor(workers) as exe:
        if show_progress:
            with tqdm(total=len(items), desc=desc) as pbar:
                def _tracked(item):
                    result = fn(item)
                    pbar.update()
                    return result

                return list(exe.map(_tracked, items))

        return list(exe.map(fn, items))
