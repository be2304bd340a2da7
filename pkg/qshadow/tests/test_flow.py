#!/usr/bin/env python
# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest
from scipy import linalg

from qshadow.exceptions import ConfigurationError, LipschitzDeclarationError, PreconditionError, StructuralError
from qshadow.flow import (FlowSpec, SampledPath, discretize, flow_quasi_shadow, integrate, jump_times,
                          linear_evolution, nonlinear_evolution)

LN2 = math.log(2.0)
ETA = 1e-3
EPSILON = 0.1
STEP = 1.0 / 32


def _config(A=None, f=None, t_lo=-5, t_hi=5):
    return {
        "A": A or {"family": "constant", "matrix": [[-LN2, 0.0, 0.0], [0.0, LN2, 0.0], [0.0, 0.0, 0.0]]},
        "f": f or {"family": "zero"},
        "t_lo": t_lo,
        "t_hi": t_hi,
        "projections": {"coordinate": [1, 1, 1]},
        "h": STEP,
    }


def _bump(t: float) -> np.ndarray:
    # eta cos^2(pi t / 2) along the central axis on |t| <= 1
    if abs(t) > 1:
        return np.zeros(3)
    return np.array([0.0, 0.0, ETA * math.cos(math.pi * t / 2.0) ** 2])


def test_integrate_scalar():
    # x' = x from 0 to 1
    end = integrate(lambda t, x: x, 1.0, 0.0, np.array([1.0]), 1.0 / 64)
    assert end[0] == pytest.approx(math.e, rel=1e-8)

    states = integrate(lambda t, x: x, 1.0, 0.0, np.array([1.0]), 0.25, record=True)
    assert states.shape == (5, 1)
    np.testing.assert_array_equal(integrate(lambda t, x: x, 0.0, 0.0, np.array([2.0]), 0.1), [2.0])


@pytest.mark.parametrize("t, s", [
    (1.0, 0.0),
    (-2.0, 1.0),
    (3.5, 0.25),
])
def test_linear_evolution_matches_exponential(t, s):
    matrix = [[-0.3, 1.0, 0.0], [-1.0, -0.3, 0.0], [0.0, 0.0, 0.5]]
    spec = FlowSpec.from_config(_config(A={"family": "constant", "matrix": matrix}), h=1.0 / 64)
    expected = linalg.expm(np.asarray(matrix) * (t - s))
    np.testing.assert_allclose(linear_evolution(spec, t, s), expected, atol=1e-8)


def test_switched_evolution():
    gamma = 0.1
    spec = FlowSpec.from_config(_config(A={"family": "switched", "lam": LN2, "gamma": gamma}), h=1.0 / 64)
    T = linear_evolution(spec, 1.0, 0.0)

    # The central entry integrates gamma sin(pi t) over [0, 1]
    assert T[2, 2] == pytest.approx(math.exp(2.0 * gamma / math.pi), rel=1e-8)
    assert T[0, 0] == pytest.approx(0.5, rel=1e-8)
    assert T[1, 1] == pytest.approx(2.0, rel=1e-8)


def test_periodic_rotation_preserves_central_norm():
    spec = FlowSpec.from_config(
        {
            **_config(A={"family": "periodic-rotation", "lam": LN2, "omega": 1.0, "alpha": 0.5}),
            "projections": {"coordinate": [1, 1, 2]},
        }
    )
    T = linear_evolution(spec, 2.0, 0.0)
    central = T[2:, 2:]
    np.testing.assert_allclose(central.T @ central, np.eye(2), atol=1e-8)


@pytest.mark.parametrize("config, error", [
    ({"t_lo": 0, "t_hi": 2}, ConfigurationError),
    ({"A": {"family": "oscillating"}}, ConfigurationError),
    ({"f": {"family": "cubic"}}, ConfigurationError),
    ({"f": {"family": "tanh", "kappa": 0.1, "W": [[1.0, 0.0], [0.0, 1.0]]}}, StructuralError),
    ({"projections": {"coordinate": [1, 1, 2]}}, StructuralError),
])
def test_flow_spec_rejects(config, error):
    with pytest.raises(error):
        FlowSpec.from_config({**_config(), **config})


def test_flow_spec_missing_keys():
    config = _config()
    del config["projections"]
    with pytest.raises(ConfigurationError):
        FlowSpec.from_config(config)


def test_flow_spec_step():
    with pytest.raises(ConfigurationError):
        FlowSpec.from_config(_config(), h=0.3)

    spec = FlowSpec.from_config(_config())
    assert spec.steps_per_unit == 32
    assert spec.with_step(1.0 / 8).steps_per_unit == 8
    assert spec.kappa == pytest.approx(2.0)
    assert FlowSpec.from_config(spec.to_config()).h == spec.h


def test_flow_spec_lipschitz_declaration():
    spec = FlowSpec.from_config(_config(f={"family": "tanh", "kappa": 0.01}))
    assert spec.lip_c == pytest.approx(0.01)

    linear = FlowSpec.from_config(_config(f={"family": "linear", "B": [[0.0, 0.02, 0.0], [0.0] * 3, [0.0] * 3]}))
    assert linear.lip_c == pytest.approx(0.02)

    def wrong(t, x):
        return 0.5 * np.sin(x)

    with pytest.raises(LipschitzDeclarationError):
        FlowSpec(lambda t: np.eye(3), 1.0, 0, 4, spec.projections.restrict(spec.window.sub(0, 4)), f=wrong, lip_c=0.1)


def test_discretize_linear():
    spec = FlowSpec.from_config(_config())
    model = discretize(spec, n_workers=2)

    assert model.kappa == pytest.approx(2.0)
    assert model.perturbation.kind == "zero"
    for n in spec.window.indices[:-1]:
        np.testing.assert_allclose(model.system.A(n), np.diag([0.5, 2.0, 1.0]), atol=1e-8)


def test_discretize_nonlinear():
    spec = FlowSpec.from_config(_config(f={"family": "tanh", "kappa": 0.01}))
    model = discretize(spec)
    x = np.array([0.1, -0.2, 0.3])

    expected = nonlinear_evolution(spec, 1.0, 0.0, x) - linear_evolution(spec, 1.0, 0.0) @ x
    np.testing.assert_allclose(model.perturbation(0, x), expected, atol=1e-14)
    assert model.perturbation.lip_c == pytest.approx(0.01 * math.exp(LN2 + 0.01))


def test_sampled_path():
    path = SampledPath.from_function(_bump, -5, 5, STEP)
    assert path.step == pytest.approx(STEP)
    assert path.dim == 3
    assert SampledPath.from_frame(path.to_frame()).values.shape == path.values.shape

    with pytest.raises(StructuralError):
        SampledPath(np.array([0.0, 0.1, 0.3]), np.zeros((3, 3)))
    with pytest.raises(ConfigurationError):
        SampledPath(np.array([0.0, 0.1, 0.2]), np.zeros((3, 3)), defect_bound=-1.0)


def test_sampled_path_defect():
    spec = FlowSpec.from_config(_config())
    declared = ETA * math.pi / 2
    path = SampledPath.from_function(_bump, -5, 5, STEP, defect_bound=declared)

    assert path.measured_defect(spec) <= declared + path.defect_tolerance(spec)
    assert path.resolved_defect(spec) == declared

    understated = SampledPath.from_function(_bump, -5, 5, STEP, defect_bound=declared / 10)
    with pytest.raises(PreconditionError):
        understated.resolved_defect(spec)


def test_flow_bump():
    spec = FlowSpec.from_config(_config())
    path = SampledPath.from_function(_bump, -5, 5, STEP, defect_bound=ETA * math.pi / 2)
    result = flow_quasi_shadow(spec, path, EPSILON, n_workers=2)

    assert result.passed
    assert result.sup_deviation <= EPSILON
    # The largest gap sits one sample away from the jumps
    assert result.sup_deviation == pytest.approx(ETA * math.cos(math.pi * STEP / 2) ** 2, rel=1e-6)
    assert result.jump_central_residual <= 1e-8
    bound = 10 * STEP ** 2 * (spec.N + spec.lip_c) * np.linalg.norm(result.x, axis=1).max()
    assert result.interval_bound == pytest.approx(bound)
    assert result.interval_residual <= result.interval_bound
    # Pieces that do not solve the equation on their interval fail the result
    assert not result._replace(interval_residual=2 * result.interval_bound).passed
    assert result.defect_bound <= result.delta

    # x(t) only jumps at the integers where the central correction lives
    assert jump_times(result, atol=1e-8) == [0, 1]
    assert result.deviations.shape == result.times.shape
    assert result.to_dict()["passed"]


def test_flow_tanh():
    spec = FlowSpec.from_config(_config(f={"family": "tanh", "kappa": 1e-3}))
    path = SampledPath.from_function(_bump, -5, 5, STEP)
    result = flow_quasi_shadow(spec, path, EPSILON)

    assert result.passed
    assert result.report.quasi_residuals.max() <= 1e-9
    assert np.all(np.diff(result.times) > 0)


def test_flow_precondition():
    spec = FlowSpec.from_config(_config())
    path = SampledPath.from_function(lambda t: 100 * _bump(t), -5, 5, STEP)

    with pytest.raises(PreconditionError):
        flow_quasi_shadow(spec, path, EPSILON)


@pytest.mark.parametrize("t_hi, h", [
    pytest.param(4, STEP, marks=pytest.mark.raises(exception=StructuralError)),
    pytest.param(5, STEP / 2, marks=pytest.mark.raises(exception=StructuralError)),
])
def test_flow_path_alignment(t_hi, h):
    spec = FlowSpec.from_config(_config())
    flow_quasi_shadow(spec, SampledPath.from_function(_bump, -5, t_hi, h), EPSILON)
