#!/usr/bin/env python
# -*- coding: utf-8 -*-

import threading

import numpy as np
import pytest

from qshadow.exceptions import ConfigurationError
from qshadow.parallel import THREADS_ENV, resolve_workers, thread_map
from qshadow.random_utils import named_rng


@pytest.mark.parametrize("n_workers, env, expected", [
    (None, None, None),
    (None, "", None),
    (None, "3", 3),
    (2, "3", 2),
    pytest.param(0, None, None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(None, "many", None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(None, "0", None, marks=pytest.mark.raises(exception=ConfigurationError)),
])
def test_resolve_workers(monkeypatch, n_workers, env, expected):
    if env is None:
        monkeypatch.delenv(THREADS_ENV, raising=False)
    else:
        monkeypatch.setenv(THREADS_ENV, env)
    assert resolve_workers(n_workers) == expected


@pytest.mark.parametrize("n_workers", [1, 2, 4])
@pytest.mark.parametrize("show_progress", [True, False])
def test_thread_map_preserves_order(n_workers, show_progress):
    assert thread_map(lambda x: x * x, range(20), n_workers=n_workers, show_progress=show_progress) == [
        x * x for x in range(20)
    ]


def test_thread_map_single_worker_stays_in_thread():
    caller = threading.get_ident()
    assert set(thread_map(lambda _: threading.get_ident(), range(5), n_workers=1)) == {caller}


def test_thread_map_raises():
    def _fail(x):
        if x == 3:
            raise ValueError("three")
        return x

    with pytest.raises(ValueError):
        thread_map(_fail, range(5), n_workers=2)


def test_named_rng():
    first = named_rng(7, "uniqueness").standard_normal(4)
    np.testing.assert_array_equal(first, named_rng(7, "uniqueness").standard_normal(4))
    assert not np.array_equal(first, named_rng(7, "continuity").standard_normal(4))
    assert not np.array_equal(first, named_rng(8, "uniqueness").standard_normal(4))

    # Negative seeds are accepted
    named_rng(-1, "uniqueness").standard_normal(1)
