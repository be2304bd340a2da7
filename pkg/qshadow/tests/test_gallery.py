#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from qshadow.dichotomy import check_constants, projection_bounds, validate_splitting
from qshadow.exceptions import ConfigurationError
from qshadow.gallery import DEFAULT_WINDOW, GALLERY, GallerySystem
from qshadow.seqspace import Window


def test_gallery_constants_pass(gallery_system):
    assert validate_splitting(gallery_system.system, gallery_system.split).passed
    report = check_constants(gallery_system.system, gallery_system.split, gallery_system.consts)
    assert report.passed, report.to_dict()
    assert gallery_system.consts.is_strong


@pytest.mark.parametrize("skew", [0.0, 0.3, -0.7])
def test_diag_skew(skew, small_window):
    gallery = GallerySystem("diag-3d", small_window, skew=skew)
    assert gallery.params == {"skew": skew}
    assert check_constants(gallery.system, gallery.split, gallery.consts).passed

    # The stable and unstable projections never exceed D
    bounds = projection_bounds(gallery.split)
    assert max(bounds[:2]) <= gallery.consts.D * (1 + 1e-12)


@pytest.mark.parametrize("name, dim, has_central", [
    ("diag-3d", 3, True),
    ("rotation-center", 4, True),
    ("switched-central", 3, True),
    ("ed-2d", 2, False),
])
def test_gallery_shapes(name, dim, has_central):
    gallery = GallerySystem(name)
    assert gallery.window == Window(*DEFAULT_WINDOW)
    assert gallery.dim == dim
    assert gallery.has_central == has_central
    assert gallery.split.central_rank == (dim - 2)


def test_switched_central_alternates(small_window):
    gallery = GallerySystem("switched-central", small_window, gamma=0.25)
    central = [gallery.system.A(n)[2, 2] for n in (0, 1, 2)]
    np.testing.assert_allclose(central, [np.exp(0.25), np.exp(-0.25), np.exp(0.25)])
    assert gallery.consts.D == pytest.approx(np.exp(0.25))


def test_closed_forms(gallery_system):
    closed = gallery_system.closed_form(1e-3)
    assert closed.y.window == gallery_system.window

    if gallery_system.has_central:
        # x = y and z lives on indices 0 and 1 only
        assert closed.x == closed.y
        support = np.flatnonzero(np.abs(closed.z.values).sum(axis=1))
        np.testing.assert_array_equal(gallery_system.window.indices[support], [0, 1])
    else:
        assert closed.x == closed.y * 0.0
        assert closed.z == -closed.y


def test_axes(small_window):
    gallery = GallerySystem("diag-3d", small_window, skew=0.5)
    for bundle in (1, 2, 3):
        axis = gallery.axis(bundle)
        np.testing.assert_allclose(gallery.split.P(bundle, 0) @ axis, axis, atol=1e-12)

    with pytest.raises(ConfigurationError):
        GallerySystem("ed-2d", small_window).axis(3)


def test_perturbations(small_window):
    gallery = GallerySystem("rotation-center", small_window)
    assert gallery.perturbation().kind == "zero"

    f = gallery.perturbation("tanh", lip_c=0.01)
    assert f.lip_c == pytest.approx(0.01)
    assert f.check_lipschitz() <= 0.01 * (1 + 1e-6)

    with pytest.raises(ConfigurationError):
        gallery.perturbation("cubic")


@pytest.mark.parametrize("name, window", [
    pytest.param("lorenz", None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param("diag-3d", Window(2, 10), marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param("diag-3d", Window(-10, 0), marks=pytest.mark.raises(exception=ConfigurationError)),
    ("diag-3d", Window(0, 2)),
])
def test_gallery_init(name, window):
    assert GallerySystem(name, window).name in GALLERY
