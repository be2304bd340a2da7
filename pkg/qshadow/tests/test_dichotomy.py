#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from qshadow.dichotomy import (DichotomyConstants, SplittingTriple, StrongRates, WindowSystem, adapted_norm,
                               check_constants, cocycle, decompose, fit_constants, projection_bounds,
                               restricted_inverses, validate_splitting)
from qshadow.exceptions import (ConfigurationError, IllConditionedError, InvalidSplittingError, NotDichotomicError,
                                StructuralError)
from qshadow.random_utils import named_rng
from qshadow.seqspace import NormFamily, OrliczFunction, VecSeq, Window, seq_norm

LN2 = np.log(2.0)


@pytest.fixture
def window():
    return Window(-10, 10)


@pytest.fixture
def diagonal(window):
    return WindowSystem.constant(window, np.diag([0.5, 2.0, 1.0])), SplittingTriple.coordinate(window, 1, 1, 1)


def _conjugated(window, seed=0):
    rng = named_rng(seed, "conjugation")
    Q = np.eye(3)[None] + 0.2 * rng.standard_normal((window.length, 3, 3))
    Q_inv = np.linalg.inv(Q)
    core = np.diag([0.5, 2.0, 1.0])
    matrices = Q[1:] @ core @ Q_inv[:-1]
    projectors = [Q @ np.diag(e) @ Q_inv for e in np.eye(3)]
    return WindowSystem(window, matrices), SplittingTriple(window, *projectors)


def test_window_system_shapes(window):
    with pytest.raises(StructuralError):
        WindowSystem(window, np.zeros((window.length, 2, 2)))
    sys = WindowSystem.constant(window, np.diag([0.5, 2.0]))
    assert sys.dim == 2
    assert sys.sup_norm() == pytest.approx(2.0)
    assert sys.sup_inverse_norm() == pytest.approx(2.0)


def test_validate_diagonal(diagonal):
    report = validate_splitting(*diagonal)
    assert report.passed
    assert report.idempotence == 0
    assert report.sum_to_identity == 0
    assert report.annihilation == 0
    assert report.commutation == 0
    assert report.unstable_sigma_min == pytest.approx(2.0)


def test_validate_conjugated(window):
    report = validate_splitting(*_conjugated(window))
    assert report.passed
    assert max(report.idempotence, report.sum_to_identity, report.annihilation, report.commutation) <= 1e-10


def test_validate_not_idempotent(window, diagonal):
    sys, split = diagonal
    P1 = split.stack(1).copy()
    P1[:, 0, 0] = 0.5
    broken = SplittingTriple(window, P1, split.stack(2), split.stack(3))

    with pytest.raises(InvalidSplittingError, match="idempotence"):
        validate_splitting(sys, broken)

    report = validate_splitting(sys, broken, raise_on_error=False)
    assert not report.passed
    assert "idempotence" in [name for name, _ in report.violations]


def test_validate_not_invariant(window):
    # The splitting is not carried by a rotation of the stable and central axes
    c, s = np.cos(0.3), np.sin(0.3)
    A = np.array([[0.5 * c, 0.0, -s], [0.0, 2.0, 0.0], [0.5 * s, 0.0, c]])
    sys = WindowSystem.constant(window, A)

    report = validate_splitting(sys, SplittingTriple.coordinate(window, 1, 1, 1), raise_on_error=False)
    assert not report.passed
    assert report.violations[0][0] == "commutation"


def test_cocycle_diagonal(diagonal):
    sys, split = diagonal
    np.testing.assert_array_equal(cocycle(sys, split, 3, 3), np.eye(3))
    np.testing.assert_allclose(cocycle(sys, split, 2, 0), np.diag([0.25, 4.0, 1.0]))

    back = cocycle(sys, split, -1, 0, bundle=2)
    np.testing.assert_allclose(back, np.diag([0.0, 0.5, 0.0]), atol=1e-15)
    np.testing.assert_allclose(back @ cocycle(sys, split, 0, -1) @ split.P(2, -1), split.P(2, -1), atol=1e-14)

    central_back = cocycle(sys, split, -5, 0, bundle=3)
    np.testing.assert_allclose(central_back, np.diag([0.0, 0.0, 1.0]), atol=1e-14)


def test_cocycle_property(window):
    sys, split = _conjugated(window, seed=3)
    forward = cocycle(sys, split, 6, -2)
    np.testing.assert_allclose(forward, cocycle(sys, split, 6, 1) @ cocycle(sys, split, 1, -2), atol=1e-12)

    # Backward on the unstable bundle inverts forward products there
    P2 = split.P(2, 4)
    np.testing.assert_allclose(cocycle(sys, split, 4, -3) @ cocycle(sys, split, -3, 4) @ P2, P2, atol=1e-10)


def test_restricted_inverses_singular(window):
    sys = WindowSystem.constant(window, np.diag([0.5, 0.0, 1.0]))
    with pytest.raises(IllConditionedError):
        restricted_inverses(sys, SplittingTriple.coordinate(window, 1, 1, 1))


def test_fit_constants_diagonal(diagonal):
    consts = fit_constants(*diagonal, strong=True)
    assert consts.D == pytest.approx(1.0, abs=1e-10)
    assert consts.d == pytest.approx(LN2, abs=1e-10)
    assert consts.b == pytest.approx(LN2, abs=1e-10)
    assert consts.strong.a == pytest.approx(0.0, abs=1e-10)
    assert consts.strong.c_back == pytest.approx(0.0, abs=1e-10)

    assert check_constants(*diagonal, consts).passed


def test_fit_constants_growing_stable(window):
    sys = WindowSystem.constant(window, np.diag([2.0, 0.5, 1.0]))
    with pytest.raises(NotDichotomicError):
        fit_constants(sys, SplittingTriple.coordinate(window, 1, 1, 1))


def test_fit_constants_switched_central(window):
    signs = np.where(window.indices[:-1] % 2 == 0, 1.0, -1.0)
    sys = WindowSystem(window, np.array([np.diag([0.5, 2.0, np.exp(0.1 * s)]) for s in signs]))
    split = SplittingTriple.coordinate(window, 1, 1, 1)

    consts = fit_constants(sys, split, strong=True)
    assert consts.strong.a == pytest.approx(0.1, abs=1e-9)
    assert consts.strong.c_back == pytest.approx(0.1, abs=1e-9)
    assert check_constants(sys, split, consts).passed


def test_fit_constants_conjugated(window):
    sys, split = _conjugated(window, seed=7)
    consts = fit_constants(sys, split, strong=True)
    assert check_constants(sys, split, consts).passed


@pytest.mark.parametrize("D, d, b, passed, ratio", [
    (1.0, LN2, LN2, True, 1.0),
    (0.5, LN2, LN2, False, 2.0),
    (1.0, 2 * LN2, LN2, False, None),
    (1.0, LN2, 2 * LN2, False, None),
    (2.0, 0.5 * LN2, 0.5 * LN2, True, None),
])
def test_check_constants(diagonal, D, d, b, passed, ratio):
    report = check_constants(*diagonal, DichotomyConstants(D, d, b))
    assert report.passed == passed
    if ratio is not None:
        assert report.ratio == pytest.approx(ratio, rel=1e-12)
    if not passed and d > LN2:
        m, n = report.stable_pair
        assert m - n >= 1


def test_check_strong_constants(diagonal):
    sys, split = diagonal
    assert check_constants(sys, split, DichotomyConstants(1.0, LN2, LN2, StrongRates(0.0, 0.0))).passed

    growing = WindowSystem.constant(sys.window, np.diag([0.5, 2.0, 1.1]))
    assert not check_constants(growing, split, DichotomyConstants(1.0, LN2, LN2, StrongRates(0.0, 0.0))).passed
    assert check_constants(growing, split, DichotomyConstants(1.0, LN2, LN2, StrongRates(np.log(1.1), 0.0))).passed


@pytest.mark.parametrize("D, d, b, strong", [
    (1.0, 1.0, 1.0, None),
    (1.0, 1.0, 1.0, (0.5, 0.5)),
    pytest.param(0.0, 1.0, 1.0, None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(1.0, -1.0, 1.0, None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(1.0, 1.0, np.inf, None, marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(1.0, 1.0, 1.0, (1.0, 0.5), marks=pytest.mark.raises(exception=ConfigurationError)),
    pytest.param(1.0, 1.0, 1.0, (0.5, 2.0), marks=pytest.mark.raises(exception=ConfigurationError)),
])
def test_constants_init(D, d, b, strong):
    consts = DichotomyConstants(D, d, b, strong)
    assert DichotomyConstants.from_dict(consts.to_dict()) == consts


def test_decompose_examples(window, diagonal):
    _, split = diagonal
    family = NormFamily.sup()

    central = VecSeq.delta(window, 0, [0.0, 0.0, 2.0])
    parts = decompose(central, split)
    assert parts.hyperbolic == VecSeq.zeros(window, 3)
    assert adapted_norm(central, split, family) == pytest.approx(seq_norm(central, family))

    mixed = VecSeq.delta(window, 0, [1.0, 0.0, 1.0])
    assert adapted_norm(mixed, split, family) == pytest.approx(1.0)


def test_projection_bounds(window):
    _, split = _conjugated(window, seed=11)
    bounds = projection_bounds(split)
    assert len(bounds) == 3
    assert all(b >= 1.0 - 1e-12 for b in bounds)


@pytest.mark.parametrize("family", [
    NormFamily.sup(),
    NormFamily.lp(1),
    NormFamily.lp(2),
    NormFamily.orlicz(OrliczFunction.power(2)),
])
def test_norm_equivalence(gallery_system, family):
    # ||x|| / 2 <= ||x||' <= (1 + 2D) ||x|| with D bounding the stable and unstable projections
    split = gallery_system.split
    D = max(gallery_system.consts.D, *projection_bounds(split)[:2])
    rng = named_rng(0, f"equivalence-{gallery_system.name}")

    for _ in range(1000):
        x = VecSeq(gallery_system.window, rng.standard_normal((gallery_system.window.length, gallery_system.dim)))
        plain = seq_norm(x, family)
        adapted = adapted_norm(x, split, family)
        assert plain / 2 <= adapted * (1 + 1e-12)
        assert adapted <= (1 + 2 * D) * plain * (1 + 1e-12)
