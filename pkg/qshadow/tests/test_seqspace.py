#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qshadow.exceptions import ConfigurationError, StructuralError
from qshadow.seqspace import NormFamily, OrliczFunction, VecSeq, Window, scalar_norm, seq_norm, shift

FAMILIES = [
    NormFamily.sup(),
    NormFamily.lp(1),
    NormFamily.lp(2),
    NormFamily.lp(3.5),
    NormFamily.orlicz(OrliczFunction.power(2)),
    NormFamily.orlicz(OrliczFunction.power(3)),
    NormFamily.orlicz(OrliczFunction.exp()),
]

finite_values = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("lo, hi", [
    (0, 2),
    (-10, 10),
    pytest.param(0, 1, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(3, 3, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(5, 0, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(0.5, 4, marks=pytest.mark.raises(exception=ConfigurationError)),
])
def test_window_init(lo, hi):
    window = Window(lo, hi)
    assert window.length == hi - lo + 1
    assert list(window) == list(range(lo, hi + 1))
    assert Window.from_config(window.to_config()) == window


def test_window_positions():
    window = Window(-3, 3)
    assert window.position(-3) == 0
    assert window.position(3) == 6
    assert 0 in window
    assert 4 not in window
    assert window.contains_window(window.sub(-1, 1))

    with pytest.raises(IndexError):
        window.position(4)
    with pytest.raises(StructuralError):
        window.sub(-5, 0)


@pytest.mark.parametrize("family", FAMILIES)
def test_zero_sequence(family):
    assert scalar_norm(np.zeros(9), family) == 0.0


@pytest.mark.parametrize("family, expected", [
    (NormFamily.sup(), 4.0),
    (NormFamily.lp(1), 7.0),
    (NormFamily.lp(2), 5.0),
    (NormFamily.orlicz(OrliczFunction.power(2)), 5.0),
])
def test_scalar_norm_examples(family, expected):
    s = np.zeros(7)
    s[3] = 3.0
    s[4] = -4.0
    assert scalar_norm(s, family) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_indicator_normalization(family):
    values = []
    for n in range(7):
        s = np.zeros(7)
        s[n] = 1.0
        values.append(scalar_norm(s, family))

    np.testing.assert_allclose(values, 1.0, rtol=1e-12)


def test_orlicz_without_normalization():
    psi = OrliczFunction.exp(normalize=False)
    s = np.zeros(5)
    s[2] = 1.0
    assert scalar_norm(s, NormFamily.orlicz(psi)) == pytest.approx(1.0 / np.log(2.0), rel=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"variant": "sup"},
    {"variant": "lp", "p": 1.0},
    pytest.param({"variant": "lp", "p": 0.5}, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param({"variant": "lp"}, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param({"variant": "orlicz", "psi": None}, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param({"variant": "weighted"}, marks=pytest.mark.raises(exception=ConfigurationError)),
])
def test_norm_family_init(kwargs):
    NormFamily(**kwargs)


@pytest.mark.parametrize("fn", [
    pytest.param(lambda t: t + 1.0, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(lambda t: -t, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(lambda t: np.sqrt(t), marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(lambda t: np.zeros_like(t), marks=pytest.mark.raises(exception=ConfigurationError)),
    lambda t: t ** 2,
    lambda t: np.cosh(t) - 1.0,
])
def test_custom_orlicz_checks(fn):
    psi = OrliczFunction.custom(fn)
    s = np.array([0.0, 1.0, 0.0])
    assert scalar_norm(s, NormFamily.orlicz(psi)) == pytest.approx(1.0, rel=1e-9)


def test_custom_orlicz_matches_power():
    family = NormFamily.orlicz(OrliczFunction.custom(lambda t: t ** 2))
    s = np.array([0.0, 3.0, -4.0, 0.0])
    assert scalar_norm(s, family) == pytest.approx(5.0, rel=1e-9)


@pytest.mark.parametrize("text, expected", [
    ("sup", NormFamily.sup()),
    ("c0", NormFamily.sup()),
    ("l1", NormFamily.lp(1)),
    ("l2", NormFamily.lp(2)),
    ("lp:1.5", NormFamily.lp(1.5)),
    ("orlicz:power:3", NormFamily.orlicz(OrliczFunction.power(3))),
    ("orlicz:exp", NormFamily.orlicz(OrliczFunction.exp())),
    pytest.param("l0.5", None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param("orlicz:log", None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param("banach", None, marks=pytest.mark.raises(exception=ConfigurationError)),
])
def test_norm_family_parse(text, expected):
    family = NormFamily.parse(text)
    assert family == expected
    assert NormFamily.from_config(family.to_config()) == family


def test_seq_norm_examples():
    window = Window(-2, 2)
    x = VecSeq(window, [[0, 0], [0, 0], [1, 0], [0, 1], [0, 0]])
    assert seq_norm(x, NormFamily.lp(1)) == pytest.approx(2.0)
    assert seq_norm(VecSeq.zeros(window, 2), NormFamily.lp(2)) == 0.0

    v = np.array([3.0, -4.0])
    single = VecSeq.delta(window, 0, v)
    assert seq_norm(single, NormFamily.sup()) == pytest.approx(5.0)
    assert seq_norm(single, NormFamily.sup(), ambient="sup") == pytest.approx(4.0)


def test_shift_examples():
    s = np.zeros(5)
    s[2] = 1.0
    np.testing.assert_array_equal(shift(s, 0), s)

    # Delta at n = 0 (position 2) shifted by 1 lands at n = -1 (position 1)
    shifted = shift(s, 1)
    assert shifted[1] == 1.0
    assert shifted.sum() == 1.0

    assert shift(s, 10).sum() == 0.0


@settings(deadline=None, max_examples=50)
@given(arrays(np.float64, 12, elements=finite_values), st.sampled_from(range(len(FAMILIES))))
def test_interior_shift_invariance(values, i):
    family = FAMILIES[i]
    s = np.zeros(16)
    s[2:14] = values
    for m in (-1, 1):
        assert scalar_norm(shift(s, m), family) == pytest.approx(scalar_norm(s, family), rel=1e-10, abs=1e-300)


@settings(deadline=None, max_examples=50)
@given(
    arrays(np.float64, 10, elements=finite_values),
    arrays(np.float64, 10, elements=st.floats(min_value=0, max_value=1)),
    st.sampled_from(range(len(FAMILIES))),
)
def test_monotone(values, scale, i):
    family = FAMILIES[i]
    smaller = values * scale
    assert scalar_norm(smaller, family) <= scalar_norm(values, family) * (1 + 1e-10) + 1e-300


@settings(deadline=None, max_examples=50)
@given(
    arrays(np.float64, 10, elements=finite_values),
    arrays(np.float64, 10, elements=finite_values),
    finite_values,
    st.sampled_from(range(len(FAMILIES))),
)
def test_triangle_and_homogeneity(a, b, scale, i):
    family = FAMILIES[i]
    size = scalar_norm(a, family) + scalar_norm(b, family)
    assert scalar_norm(a + b, family) <= size * (1 + 1e-10) + 1e-12
    assert scalar_norm(scale * a, family) == pytest.approx(
        abs(scale) * scalar_norm(a, family), rel=1e-10, abs=1e-12
    )


def test_vecseq_structure():
    window = Window(0, 3)
    with pytest.raises(StructuralError):
        VecSeq(window, np.zeros((3, 2)))

    x = VecSeq.delta(window, 1, [1.0, 2.0])
    y = VecSeq.delta(window, 2, [0.5, 0.0])
    np.testing.assert_array_equal((x + y)[2], [0.5, 0.0])
    np.testing.assert_array_equal((2 * x)[1], [2.0, 4.0])
    assert (x - x) == VecSeq.zeros(window, 2)
    assert x.replace(1, [0.0, 0.0]) == VecSeq.zeros(window, 2)

    with pytest.raises(StructuralError):
        x + VecSeq.zeros(Window(0, 4), 2)


def test_vecseq_frames():
    window = Window(-2, 2)
    x = VecSeq(window, np.arange(10, dtype=float).reshape(5, 2))
    assert VecSeq.from_frame(x.to_frame()) == x

    # Missing indices read as zero vectors
    sparse = pd.DataFrame({"n": [0], "c0": [1.5], "c1": [-1.0]})
    y = VecSeq.from_frame(sparse, window=window)
    np.testing.assert_array_equal(y[0], [1.5, -1.0])
    assert np.abs(y.values).sum() == 2.5

    with pytest.raises(StructuralError):
        VecSeq.from_frame(pd.DataFrame({"n": [0, 0, 1], "c0": [1, 2, 3]}))
    with pytest.raises(StructuralError):
        VecSeq.from_frame(pd.DataFrame({"index": [0, 1, 2], "c0": [1, 2, 3]}))
