#!/usr/bin/env python
# -*- coding: utf-8 -*-

from pathlib import Path

import pytest

from qshadow.gallery import GallerySystem
from qshadow.seqspace import Window


@pytest.fixture
def data_dir() -> Path:
    return Path(__file__).parent / "data"


@pytest.fixture
def small_window() -> Window:
    return Window(-20, 20)


@pytest.fixture
def diag3d(small_window) -> GallerySystem:
    return GallerySystem("diag-3d", small_window)


@pytest.fixture
def ed2d(small_window) -> GallerySystem:
    return GallerySystem("ed-2d", small_window)


@pytest.fixture(params=["diag-3d", "rotation-center", "switched-central", "ed-2d"])
def gallery_system(request, small_window) -> GallerySystem:
    return GallerySystem(request.param, small_window)
