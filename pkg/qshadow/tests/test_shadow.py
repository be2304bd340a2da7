#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from qshadow.dichotomy import DichotomyConstants
from qshadow.exceptions import (ContractionViolatedError, DomainError, LipschitzDeclarationError, MaxIterationsError,
                                PreconditionError, StructuralError)
from qshadow.gallery import GallerySystem
from qshadow.green import GreenContext
from qshadow.random_utils import named_rng
from qshadow.seqspace import NormFamily, OrliczFunction, VecSeq, Window
from qshadow.shadow import (PerturbationSeq, PseudoTrajectory, QuasiShadowReport, contraction_check,
                            default_max_iterations, delta_for_epsilon, quasi_shadow, shadow_ed, solve_affine_dense,
                            uniqueness_probe, verify_report)

ETA = 1e-3
EPSILON = 0.1
UNIT = DichotomyConstants(1.0, np.log(2.0), np.log(2.0))

FAMILIES = [
    NormFamily.sup(),
    NormFamily.lp(1),
    NormFamily.lp(2),
    NormFamily.orlicz(OrliczFunction.power(2)),
]


def _context(gallery, family=None):
    return GreenContext(gallery.system, gallery.split, gallery.consts, family or NormFamily.sup())


def _pseudo(ctx, f, y):
    return PseudoTrajectory.from_sequence(y, ctx.sys, f, ctx.family, ctx.ambient)


def _tanh(window, dim, kappa, seed):
    W = named_rng(seed, "tanh-weights").standard_normal((window.length - 1, dim, dim))
    W = W / np.linalg.norm(W, 2, axis=(1, 2))[:, None, None]
    return PerturbationSeq.tanh(window, kappa, W)


def _noisy(window, dim, size, seed):
    return VecSeq(window, size * named_rng(seed, "noise").standard_normal((window.length, dim)))


@pytest.mark.parametrize("lip_c, D, G_bound, ok, q", [
    (0.0, 1.0, 3.0, True, 0.0),
    (1 / 36, 1.0, 3.0, False, 1.0),
    (1 / 72, 1.0, 3.0, True, 0.5),
])
def test_contraction_check(lip_c, D, G_bound, ok, q):
    check = contraction_check(DichotomyConstants(D, 1.0, 1.0), lip_c, G_bound)
    assert check.ok == ok
    assert check.q == pytest.approx(q, abs=1e-15)


@pytest.mark.parametrize("lip_c, expected", [
    (0.0, EPSILON / 9),
    (1 / 72, EPSILON / 18),
    pytest.param(1 / 36, None, marks=pytest.mark.raises(exception=ContractionViolatedError)),
])
def test_delta_for_epsilon(lip_c, expected):
    delta = delta_for_epsilon(UNIT, 3.0, lip_c, EPSILON)
    assert delta == pytest.approx(expected, rel=1e-12)
    assert delta_for_epsilon(UNIT, 3.0, lip_c, 2 * EPSILON) == pytest.approx(2 * delta, rel=1e-12)


@pytest.mark.parametrize("q, expected", [
    (0.0, 10),
    (0.5, 400),
    (1 - 1e-9, 100000),
])
def test_default_max_iterations(q, expected):
    assert default_max_iterations(q) == expected


def test_perturbation_declarations(small_window):
    B = np.repeat(np.diag([0.1, 0.2, 0.0])[None], small_window.length - 1, axis=0)
    f = PerturbationSeq.affine(small_window, B)
    assert f.lip_c == pytest.approx(0.2)
    assert f.check_lipschitz() <= 0.2 * (1 + 1e-6)

    with pytest.raises(LipschitzDeclarationError):
        PerturbationSeq.affine(small_window, B, lip_c=0.1)
    with pytest.raises(StructuralError):
        PerturbationSeq.affine(small_window, B[1:])

    # A custom map declared too small is caught by sampling
    loose = PerturbationSeq(small_window, 3, 0.01, fn=lambda n, x: 0.5 * x)
    with pytest.raises(LipschitzDeclarationError):
        loose.check_lipschitz()

    g = _tanh(small_window, 3, 0.02, seed=0)
    assert g.check_lipschitz() <= 0.02 * (1 + 1e-6)
    np.testing.assert_allclose(g(0, np.zeros(3)), np.zeros(3))


def test_exact_trajectory(diag3d):
    ctx = _context(diag3d)
    f = PerturbationSeq.zero(ctx.window, 3)
    y = VecSeq.zeros(ctx.window, 3)
    report = quasi_shadow(ctx, f, _pseudo(ctx, f, y), EPSILON)

    assert report.iterations == 1
    assert report.z == VecSeq.zeros(ctx.window, 3)
    assert report.x == y


def test_central_bump_closed_form(diag3d):
    ctx = _context(diag3d)
    f = diag3d.perturbation()
    closed = diag3d.closed_form(ETA)
    pseudo = _pseudo(ctx, f, closed.y)
    report = quasi_shadow(ctx, f, pseudo, EPSILON)

    expected_central = np.zeros((ctx.window.length, 3))
    expected_central[ctx.window.position(0)] = [0.0, 0.0, ETA]
    expected_central[ctx.window.position(1)] = [0.0, 0.0, -ETA]
    np.testing.assert_allclose(report.z_central.values, expected_central, atol=1e-10)
    np.testing.assert_allclose(report.z_hyperbolic.values, 0.0, atol=1e-10)
    np.testing.assert_allclose(report.x.values, closed.x.values, atol=1e-10)

    # Dense oracle agrees
    np.testing.assert_allclose(solve_affine_dense(ctx, f, pseudo).values, report.z.values, atol=1e-10)
    assert verify_report(ctx, f, pseudo, report).passed


def test_stable_bump_closed_form(diag3d):
    ctx = _context(diag3d)
    f = diag3d.perturbation()
    y = diag3d.bump(1, ETA)
    pseudo = _pseudo(ctx, f, y)
    report = quasi_shadow(ctx, f, pseudo, EPSILON)

    expected = np.zeros((ctx.window.length, 3))
    expected[ctx.window.position(0)] = [-ETA, 0.0, 0.0]
    np.testing.assert_allclose(report.z.values, expected, atol=1e-10)
    np.testing.assert_allclose(report.x.values, 0.0, atol=1e-10)
    np.testing.assert_allclose(report.z_central.values, 0.0, atol=1e-10)
    np.testing.assert_allclose(solve_affine_dense(ctx, f, pseudo).values, expected, atol=1e-10)


@pytest.mark.parametrize("name", ["diag-3d", "rotation-center", "switched-central", "ed-2d"])
def test_gallery_closed_forms(name, small_window):
    gallery = GallerySystem(name, small_window)
    ctx = _context(gallery)
    f = gallery.perturbation()
    closed = gallery.closed_form(ETA)
    report = quasi_shadow(ctx, f, _pseudo(ctx, f, closed.y), EPSILON)

    np.testing.assert_allclose(report.z.values, closed.z.values, atol=1e-10)
    np.testing.assert_allclose(report.x.values, closed.x.values, atol=1e-10)


@pytest.mark.parametrize("family", FAMILIES)
def test_quasi_trajectory_contract(diag3d, family):
    ctx = _context(diag3d, family)
    for seed in range(3):
        f = _tanh(ctx.window, 3, 1 / 72, seed)
        y = _noisy(ctx.window, 3, 1e-5, seed)
        pseudo = _pseudo(ctx, f, y)
        report = quasi_shadow(ctx, f, pseudo, EPSILON)

        assert report.quasi_residuals.max() <= 1e-9
        central = np.einsum("nij,nj->ni", ctx.split.stack(3), report.z_central.values)
        np.testing.assert_allclose(central, report.z_central.values, atol=1e-9)
        assert ctx.adapted_norm(report.z) <= EPSILON

        verification = verify_report(ctx, f, pseudo, report)
        assert verification.passed, verification.failures
        assert verification.check("fixed_point").value <= 1e-9


def test_observed_contraction(diag3d):
    ctx = _context(diag3d)
    f = _tanh(ctx.window, 3, 1 / 72, seed=5)
    y = _noisy(ctx.window, 3, 1e-4, seed=5)
    report = quasi_shadow(ctx, f, _pseudo(ctx, f, y), EPSILON)

    assert report.q == pytest.approx(0.5)
    assert report.iterations > 1
    assert all(ratio <= report.q + 0.05 for ratio in report.contraction_ratios)


def test_lipschitz_scaling(diag3d):
    ctx = _context(diag3d)
    f = diag3d.perturbation()
    y = _noisy(ctx.window, 3, 1e-4, seed=2)
    full = quasi_shadow(ctx, f, _pseudo(ctx, f, y), EPSILON)
    half = quasi_shadow(ctx, f, _pseudo(ctx, f, y * 0.5), EPSILON)

    assert ctx.adapted_norm(half.z) == pytest.approx(0.5 * ctx.adapted_norm(full.z), rel=1e-9)


def test_affine_oracle():
    gallery = GallerySystem("diag-3d", Window(-10, 10))
    ctx = _context(gallery)
    rng = named_rng(0, "affine-oracle")
    lip_c = 0.8 / 36

    for _ in range(20):
        B = rng.standard_normal((ctx.window.length - 1, 3, 3))
        B = lip_c * B / np.linalg.norm(B, 2, axis=(1, 2))[:, None, None]
        v = 1e-5 * rng.standard_normal((ctx.window.length - 1, 3))
        f = PerturbationSeq.affine(ctx.window, B, v, lip_c=lip_c)
        pseudo = _pseudo(ctx, f, VecSeq(ctx.window, 1e-5 * rng.standard_normal((ctx.window.length, 3))))

        report = quasi_shadow(ctx, f, pseudo, EPSILON)
        assert report.q <= 0.8 + 1e-12
        np.testing.assert_allclose(solve_affine_dense(ctx, f, pseudo).values, report.z.values, atol=1e-9)


def test_precondition(diag3d):
    ctx = _context(diag3d)
    f = diag3d.perturbation()
    pseudo = _pseudo(ctx, f, diag3d.closed_form(0.05).y)

    with pytest.raises(PreconditionError):
        quasi_shadow(ctx, f, pseudo, EPSILON)

    report = quasi_shadow(ctx, f, pseudo, EPSILON, force=True)
    assert report.forced
    assert report.pseudo_norm > report.delta_used


def test_contraction_violated(diag3d):
    ctx = _context(diag3d)
    f = _tanh(ctx.window, 3, 0.1, seed=0)
    pseudo = _pseudo(ctx, f, VecSeq.zeros(ctx.window, 3))

    with pytest.raises(ContractionViolatedError):
        quasi_shadow(ctx, f, pseudo, EPSILON)
    with pytest.raises(ContractionViolatedError):
        uniqueness_probe(ctx, f, pseudo, EPSILON)


def test_max_iterations(diag3d):
    ctx = _context(diag3d)
    f = _tanh(ctx.window, 3, 1 / 72, seed=1)
    pseudo = _pseudo(ctx, f, _noisy(ctx.window, 3, 1e-4, seed=1))

    with pytest.raises(MaxIterationsError):
        quasi_shadow(ctx, f, pseudo, EPSILON, max_iterations=1)


def test_verify_detects_corruption(diag3d):
    ctx = _context(diag3d)
    f = diag3d.perturbation()
    closed = diag3d.closed_form(ETA)
    pseudo = _pseudo(ctx, f, closed.y)
    report = quasi_shadow(ctx, f, pseudo, EPSILON)

    stable_kick = VecSeq.delta(ctx.window, 3, [1e-3, 0.0, 0.0])
    corrupted = report._replace(z_central=report.z_central + stable_kick, z=report.z + stable_kick)
    assert not verify_report(ctx, f, pseudo, corrupted).check("central_membership").passed

    inflated = report._replace(z=report.z * 1e3, z_central=report.z_central * 1e3)
    verification = verify_report(ctx, f, pseudo, inflated)
    assert not verification.check("adapted_norm_bound").passed
    assert not verification.passed


def test_report_round_trip(diag3d):
    ctx = _context(diag3d, NormFamily.lp(2))
    f = diag3d.perturbation()
    pseudo = _pseudo(ctx, f, diag3d.closed_form(ETA).y)
    report = quasi_shadow(ctx, f, pseudo, EPSILON)

    restored = QuasiShadowReport.from_dict(report.to_dict())
    assert restored.z == report.z
    assert restored.family == report.family
    assert verify_report(ctx, f, pseudo, restored).passed


@pytest.mark.parametrize("kappa, expected_max", [
    (0.0, 1e-12),
    (1 / 72, 1e-10),
])
def test_uniqueness_probe(diag3d, kappa, expected_max):
    ctx = _context(diag3d)
    for seed in range(10):
        f = PerturbationSeq.zero(ctx.window, 3) if kappa == 0 else _tanh(ctx.window, 3, kappa, seed)
        pseudo = _pseudo(ctx, f, _noisy(ctx.window, 3, 1e-4, seed))
        assert uniqueness_probe(ctx, f, pseudo, EPSILON, trials=5, seed=seed) <= expected_max


def test_shadow_ed(ed2d):
    ctx = _context(ed2d)
    f = ed2d.perturbation()
    closed = ed2d.closed_form(ETA)
    report = shadow_ed(ctx, f, _pseudo(ctx, f, closed.y), EPSILON)

    assert np.all(report.z_central.values == 0)
    np.testing.assert_allclose(report.x.values, 0.0, atol=1e-12)

    g = _tanh(ctx.window, 2, 0.01, seed=4)
    y = _noisy(ctx.window, 2, 1e-4, seed=4)
    nonlinear = shadow_ed(ctx, g, _pseudo(ctx, g, y), EPSILON)
    # A genuine trajectory of the perturbed system
    assert nonlinear.quasi_residuals.max() <= 1e-9

    exact = shadow_ed(ctx, f, _pseudo(ctx, f, VecSeq.zeros(ctx.window, 2)), EPSILON)
    assert exact.x == VecSeq.zeros(ctx.window, 2)


def test_shadow_ed_requires_no_center(diag3d):
    ctx = _context(diag3d)
    f = diag3d.perturbation()
    with pytest.raises(DomainError):
        shadow_ed(ctx, f, _pseudo(ctx, f, VecSeq.zeros(ctx.window, 3)), EPSILON)
