#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Continuous time quasi-shadowing for x' = A(t) x + f(t, x).

The flow is sampled at integer times: A_n = T(n + 1, n) and f_n(x) = U(n + 1, n) x - T(n + 1, n) x, where T and U
are the linear and nonlinear evolution families. An approximate solution y(t) with small defect sampled at integers is
a pseudotrajectory of the discrete system; its quasi-shadowing solution is spread back over every unit interval with
x(t) = U(t, n) x_n, leaving central jumps at the integers.
"""

import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from .dichotomy import DichotomyConstants, SplittingTriple, WindowSystem, fit_constants, spectral_norms
from .exceptions import (ConfigurationError, LipschitzDeclarationError, NumericalError, PreconditionError,
                         StructuralError)
from .file_utils import projections_from_config, projections_to_config
from .green import G_norm_upper, GreenContext
from .parallel import thread_map
from .random_utils import named_rng
from .seqspace import NormFamily, VecSeq, Window
from .shadow import (PerturbationSeq, PseudoTrajectory, QuasiShadowReport, contraction_check, delta_for_epsilon,
                     quasi_shadow)

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

DEFAULT_STEP = 1.0 / 64

# Classic fourth order Runge-Kutta tableau: stage coefficients, nodes and weights
RK4_A = ((), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0))
RK4_C = (0.0, 0.5, 0.5, 1.0)
RK4_B = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)

A_FAMILIES = ("constant", "periodic-rotation", "switched")
F_FAMILIES = ("zero", "tanh", "linear")

JUMP_TOL = 1e-8

###############################################################################


def rk4_step(rhs: Callable[[float, np.ndarray], np.ndarray], t: float, state: np.ndarray, dt: float) -> np.ndarray:
    stages = []
    for coefficients, node in zip(RK4_A, RK4_C):
        increment = state
        for a, k in zip(coefficients, stages):
            if a != 0:
                increment = increment + dt * a * k
        stages.append(rhs(t + node * dt, increment))

    return state + dt * sum(b * k for b, k in zip(RK4_B, stages))


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    s: float,
    state: np.ndarray,
    h: float,
    record: bool = False
):
    """
    Integrate state' = rhs(t, state) from s to t with fixed steps no longer than h.

    :param rhs: The right hand side.
    :param t: Final time, may be smaller than s.
    :param s: Initial time.
    :param state: The state at s.
    :param h: Largest step.
    :param record: Return every intermediate state as well.
    :return: The state at t, or the array of states at every step when recording.
    """
    state = np.array(state, dtype=float)
    steps = int(math.ceil(abs(t - s) / h - 1e-9)) if t != s else 0
    states = [state]
    if steps == 0:
        return np.array(states) if record else state

    dt = (t - s) / steps
    for j in range(steps):
        state = rk4_step(rhs, s + j * dt, state, dt)
        if not np.all(np.isfinite(state)):
            raise NumericalError(f"Integration from {s} to {t} produced nonfinite values near time {s + j * dt:.6g}")
        if record:
            states.append(state)

    return np.array(states) if record else state


###############################################################################


def _matrix(value, name: str) -> np.ndarray:
    matrix = np.asarray(value, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ConfigurationError(f"'{name}' must be a square matrix. Received shape: {matrix.shape}")
    return matrix


def linear_family(config: Dict) -> Tuple[Callable[[float], np.ndarray], float, int]:
    """
    Build t -> A(t) from its configuration. Returns the callable, the declared N = sup ||A(t)|| and the dimension.

    Families:
        constant: {"family": "constant", "matrix": [[...]]}
        periodic-rotation: {"family": "periodic-rotation", "lam", "omega", "alpha"}, a stable and an unstable axis at
            rates -lam and lam plus a central plane rotating at angular speed omega (1 + alpha cos(2 pi t))
        switched: {"family": "switched", "lam", "gamma"}, diag(-lam, lam, gamma sin(pi t))
    """
    family = config.get("family")
    if family == "constant":
        matrix = _matrix(config.get("matrix"), "matrix")
        return (lambda t: matrix), float(spectral_norms(matrix)), matrix.shape[0]

    if family == "periodic-rotation":
        lam = float(config.get("lam", math.log(2.0)))
        omega = float(config.get("omega", 1.0))
        alpha = float(config.get("alpha", 0.5))

        def rotation(t: float) -> np.ndarray:
            speed = omega * (1.0 + alpha * math.cos(2.0 * math.pi * t))
            return np.array([
                [-lam, 0.0, 0.0, 0.0],
                [0.0, lam, 0.0, 0.0],
                [0.0, 0.0, 0.0, -speed],
                [0.0, 0.0, speed, 0.0],
            ])

        return rotation, max(abs(lam), abs(omega) * (1.0 + abs(alpha))), 4

    if family == "switched":
        lam = float(config.get("lam", math.log(2.0)))
        gamma = float(config.get("gamma", 0.1))
        return (lambda t: np.diag([-lam, lam, gamma * math.sin(math.pi * t)])), max(abs(lam), abs(gamma)), 3

    raise ConfigurationError(f"Unknown linear family '{family}'. Available: {A_FAMILIES}")


def perturbation_family(config: Dict, dim: int) -> Tuple[Optional[Callable[[float, np.ndarray], np.ndarray]], float]:
    """
    Build (t, x) -> f(t, x) from its configuration. Returns the callable (None for the zero family) and its
    Lipschitz constant.

    Families:
        zero: {"family": "zero"}
        tanh: {"family": "tanh", "kappa", "W": [[...]]}, f(t, x) = kappa tanh(W x)
        linear: {"family": "linear", "B": [[...]]}, f(t, x) = B x
    """
    family = config.get("family", "zero")
    if family == "zero":
        return None, 0.0

    if family == "tanh":
        kappa = float(config.get("kappa", 0.0))
        W = _matrix(config.get("W", np.eye(dim)), "W")
        if W.shape[0] != dim:
            raise StructuralError(f"'W' must be {dim} x {dim}. Received: {W.shape}")
        return (lambda t, x: kappa * np.tanh(W @ x)), abs(kappa) * float(spectral_norms(W))

    if family == "linear":
        B = _matrix(config.get("B"), "B")
        if B.shape[0] != dim:
            raise StructuralError(f"'B' must be {dim} x {dim}. Received: {B.shape}")
        return (lambda t, x: B @ x), float(spectral_norms(B))

    raise ConfigurationError(f"Unknown perturbation family '{family}'. Available: {F_FAMILIES}")


class FlowSpec(object):
    def __init__(
        self,
        A: Callable[[float], np.ndarray],
        N: float,
        t_lo: int,
        t_hi: int,
        projections: SplittingTriple,
        f: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
        lip_c: float = 0.0,
        h: float = DEFAULT_STEP,
        constants: Optional[DichotomyConstants] = None,
        config: Optional[Dict] = None
    ):
        """
        A nonautonomous differential equation x' = A(t) x + f(t, x) on [t_lo, t_hi].

        :param A: t -> A(t), continuous.
        :param N: Declared sup ||A(t)||.
        :param t_lo: Integer start time.
        :param t_hi: Integer end time, at least t_lo + 3.
        :param projections: The splitting at integer times.
        :param f: (t, x) -> f(t, x) with f(t, 0) = 0. None for the linear equation.
        :param lip_c: Declared Lipschitz constant of f.
        :param h: Integration step, 1 / h must be an integer.
        :param constants: Optional dichotomy constants of the sampled system, fitted when missing.
        :param config: The configuration the spec was built from, if any.
        """
        if int(t_lo) != t_lo or int(t_hi) != t_hi:
            raise ConfigurationError(f"Flow time ranges must be integer aligned. Received: [{t_lo}, {t_hi}]")
        if t_hi - t_lo < 3:
            raise ConfigurationError(f"Flow time ranges need t_hi - t_lo >= 3. Received: [{t_lo}, {t_hi}]")
        if not h > 0 or abs(1.0 / h - round(1.0 / h)) > 1e-9:
            raise ConfigurationError(f"The integration step must divide one. Received: {h}")
        for name, value in (("N", N), ("lip_c", lip_c)):
            if not np.isfinite(value) or value < 0:
                raise ConfigurationError(f"'{name}' must be finite and nonnegative. Received: {value}")

        window = Window(int(t_lo), int(t_hi))
        if projections.window != window:
            raise StructuralError(f"Projections must be given at every integer of {window}")

        self._A = A
        self._f = f
        self._N = float(N)
        self._lip_c = float(lip_c) if f is not None else 0.0
        self._window = window
        self._projections = projections
        self._h = 1.0 / round(1.0 / h)
        self._constants = constants
        self._config = config

        self._check_declarations()

    @classmethod
    def from_config(cls, config: Dict, h: Optional[float] = None) -> "FlowSpec":
        """
        Build a spec from {"A": {...}, "f": {...}, "t_lo", "t_hi", "projections", ["h"], ["constants"]}.
        """
        try:
            t_lo, t_hi = int(config["t_lo"]), int(config["t_hi"])
            A, N, dim = linear_family(config["A"])
            f, lip_c = perturbation_family(config.get("f", {"family": "zero"}), dim)
            projections = projections_from_config(config["projections"], Window(t_lo, t_hi), dim)
        except KeyError as e:
            raise ConfigurationError(f"Flow specs are missing {e}")

        constants = None
        if config.get("constants") is not None:
            constants = DichotomyConstants.from_dict(config["constants"])

        return cls(
            A, N, t_lo, t_hi, projections,
            f=f,
            lip_c=lip_c,
            h=h if h is not None else float(config.get("h", DEFAULT_STEP)),
            constants=constants,
            config=config,
        )

    def to_config(self) -> Dict:
        if self._config is None:
            raise ConfigurationError("Flow specs built from callables can not be written to a configuration.")

        config = dict(self._config)
        config["h"] = self._h
        config["projections"] = projections_to_config(self._projections)
        if self._constants is not None:
            config["constants"] = self._constants.to_dict()
        return config

    def _check_declarations(self):
        times = np.arange(self._window.lo, self._window.hi + self._h / 2, self._h)
        largest = max(float(spectral_norms(self.A(t))) for t in times)
        if largest > self._N * (1 + 1e-9):
            raise ConfigurationError(f"Declared N = {self._N} is below the sampled sup ||A(t)|| = {largest}")

        if self._f is None:
            return

        rng = named_rng(0, "flow-lipschitz")
        for t in times[::8]:
            if np.linalg.norm(self._f(t, np.zeros(self.dim))) > 1e-14:
                raise ConfigurationError(f"Flow perturbations need f(t, 0) = 0. Violated at t = {t}")
            x = rng.standard_normal(self.dim)
            x_prime = x + rng.standard_normal(self.dim) * rng.uniform(1e-3, 1.0)
            quotient = np.linalg.norm(self._f(t, x) - self._f(t, x_prime)) / np.linalg.norm(x - x_prime)
            if quotient > self._lip_c * (1 + 1e-6):
                raise LipschitzDeclarationError(
                    f"Sampled Lipschitz quotient {quotient:.6g} exceeds the declared lip_c = {self._lip_c:.6g}"
                )

    @property
    def window(self) -> Window:
        return self._window

    @property
    def t_lo(self) -> int:
        return self._window.lo

    @property
    def t_hi(self) -> int:
        return self._window.hi

    @property
    def dim(self) -> int:
        return self._projections.dim

    @property
    def N(self) -> float:
        return self._N

    @property
    def lip_c(self) -> float:
        return self._lip_c

    @property
    def h(self) -> float:
        return self._h

    @property
    def steps_per_unit(self) -> int:
        return int(round(1.0 / self._h))

    @property
    def projections(self) -> SplittingTriple:
        return self._projections

    @property
    def constants(self) -> Optional[DichotomyConstants]:
        return self._constants

    @property
    def is_linear(self) -> bool:
        return self._f is None

    @property
    def kappa(self) -> float:
        """
        One unit interval Gronwall factor e^{N + lip_c}.
        """
        return float(np.exp(self._N + self._lip_c))

    def A(self, t: float) -> np.ndarray:
        return np.asarray(self._A(t), dtype=float)

    def f(self, t: float, x: np.ndarray) -> np.ndarray:
        if self._f is None:
            return np.zeros_like(x)
        return np.asarray(self._f(t, x), dtype=float)

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.A(t) @ x + self.f(t, x)

    def check_time(self, t: float):
        if not self._window.lo - 1e-12 <= t <= self._window.hi + 1e-12:
            raise ConfigurationError(f"Time {t} is outside of [{self._window.lo}, {self._window.hi}]")

    def with_step(self, h: float) -> "FlowSpec":
        return FlowSpec(
            self._A, self._N, self.t_lo, self.t_hi, self._projections,
            f=self._f, lip_c=self._lip_c, h=h, constants=self._constants, config=self._config,
        )

    def __str__(self):
        return (
            f"<FlowSpec [range: [{self.t_lo}, {self.t_hi}], dim: {self.dim}, N: {self._N:.6g}, "
            f"lip_c: {self._lip_c:.6g}, h: {self._h:.6g}]>"
        )

    def __repr__(self):
        return str(self)


###############################################################################


def linear_evolution(spec: FlowSpec, t: float, s: float) -> np.ndarray:
    """
    T(t, s): the fundamental matrix of x' = A(t) x from time s to time t.
    """
    spec.check_time(t)
    spec.check_time(s)
    return integrate(lambda tau, M: spec.A(tau) @ M, t, s, np.eye(spec.dim), spec.h)


def nonlinear_evolution(spec: FlowSpec, t: float, s: float, x: np.ndarray) -> np.ndarray:
    """
    U(t, s) x: the solution of x' = A(t) x + f(t, x) through (s, x) at time t.
    """
    spec.check_time(t)
    spec.check_time(s)
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,):
        raise StructuralError(f"State must have shape ({spec.dim},). Received: {x.shape}")
    return integrate(spec.rhs, t, s, x, spec.h)


class DiscreteModel(NamedTuple):
    system: WindowSystem
    perturbation: PerturbationSeq
    kappa: float


def discretize(spec: FlowSpec, n_workers: Optional[int] = None, show_progress: bool = False) -> DiscreteModel:
    """
    Sample the flow at integer times.

    :param spec: The FlowSpec.
    :param n_workers: Number of threads integrating unit intervals.
    :param show_progress: Boolean option to show or hide progress bar.
    :return: The DiscreteModel: A_n = T(n + 1, n), f_n = U(n + 1, n) - T(n + 1, n) with Lipschitz constant
        lip_c e^{N + lip_c}, and the Gronwall factor kappa.
    """
    window = spec.window
    matrices = np.array(thread_map(
        lambda n: linear_evolution(spec, n + 1, n),
        range(window.lo, window.hi),
        n_workers=n_workers,
        desc="Linear evolution",
        show_progress=show_progress,
    ))
    system = WindowSystem(window, matrices)

    if spec.is_linear:
        perturbation = PerturbationSeq.zero(window, spec.dim)
    else:
        def f_n(n: int, x: np.ndarray) -> np.ndarray:
            return nonlinear_evolution(spec, n + 1, n, x) - matrices[n - window.lo] @ x

        perturbation = PerturbationSeq(window, spec.dim, spec.lip_c * spec.kappa, kind="custom", fn=f_n)

    log.info(f"Discretized {spec}: sup ||A_n|| = {system.sup_norm():.6g}, kappa = {spec.kappa:.6g}")
    return DiscreteModel(system, perturbation, spec.kappa)


###############################################################################


class SampledPath(object):
    def __init__(self, times: np.ndarray, values: np.ndarray, defect_bound: Optional[float] = None):
        """
        An approximate solution sampled at a fixed step.

        :param times: Sample times, evenly spaced.
        :param values: Array of shape (number of samples, k).
        :param defect_bound: Declared sup ||y'(t) - A(t) y(t) - f(t, y(t))||. Estimated from the samples when None.
        """
        times = np.asarray(times, dtype=float)
        values = np.array(values, dtype=float)
        if times.ndim != 1 or values.ndim != 2 or values.shape[0] != times.shape[0] or times.shape[0] < 3:
            raise StructuralError(
                f"Sampled paths need matching times and values. Received: {times.shape} and {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalError("Sampled path values must be finite.")

        steps = np.diff(times)
        if np.any(np.abs(steps - steps[0]) > 1e-9) or steps[0] <= 0:
            raise StructuralError("Sampled paths must be evenly spaced in increasing time.")
        if defect_bound is not None and (not np.isfinite(defect_bound) or defect_bound < 0):
            raise ConfigurationError(f"Defect bounds must be finite and nonnegative. Received: {defect_bound}")

        self._times = times
        self._values = values
        self._defect_bound = defect_bound

    @classmethod
    def from_function(
        cls,
        fn: Callable[[float], np.ndarray],
        t_lo: float,
        t_hi: float,
        h: float,
        defect_bound: Optional[float] = None
    ) -> "SampledPath":
        count = int(round((t_hi - t_lo) / h)) + 1
        times = t_lo + h * np.arange(count)
        return cls(times, np.array([np.asarray(fn(t), dtype=float) for t in times]), defect_bound)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, defect_bound: Optional[float] = None) -> "SampledPath":
        """
        Read a frame with columns t, c0, ..., c{k-1}.
        """
        if "t" not in frame.columns:
            raise StructuralError(f"Path frames require a 't' column. Received columns: {list(frame.columns)}")
        components = [c for c in frame.columns if c != "t"]
        expected = [f"c{i}" for i in range(len(components))]
        if components != expected:
            raise StructuralError(f"Path frame components must be named {expected}. Received: {components}")
        return cls(frame["t"].to_numpy(dtype=float), frame[components].to_numpy(dtype=float), defect_bound)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self._values, columns=[f"c{i}" for i in range(self.dim)])
        frame.insert(0, "t", self._times)
        return frame

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return self._values.shape[1]

    @property
    def step(self) -> float:
        return float(self._times[1] - self._times[0])

    @property
    def defect_bound(self) -> Optional[float]:
        return self._defect_bound

    def measured_defect(self, spec: FlowSpec) -> float:
        """
        Central difference estimate of max ||y'(t) - A(t) y(t) - f(t, y(t))|| over interior samples.
        """
        derivative = (self._values[2:] - self._values[:-2]) / (2.0 * self.step)
        defects = [
            np.linalg.norm(d - spec.rhs(t, y))
            for d, t, y in zip(derivative, self._times[1:-1], self._values[1:-1])
        ]
        return float(max(defects))

    def defect_tolerance(self, spec: FlowSpec) -> float:
        """
        10 h^2 scale, with scale the size of the sampled path and its difference quotients.
        """
        quotients = np.abs(np.diff(self._values, axis=0)).max() / self.step
        scale = max(float(np.abs(self._values).max()), float(quotients)) * (1.0 + spec.N + spec.lip_c)
        return 10.0 * self.step ** 2 * scale

    def resolved_defect(self, spec: FlowSpec) -> float:
        """
        The declared defect bound after checking it against the samples, or the estimate when nothing was declared.
        """
        measured = self.measured_defect(spec)
        tolerance = self.defect_tolerance(spec)
        if self._defect_bound is None:
            return measured + tolerance
        if measured > self._defect_bound + tolerance:
            raise PreconditionError(
                f"Sampled defect {measured:.6g} exceeds the declared bound {self._defect_bound:.6g} "
                f"(tolerance {tolerance:.3g})",
                measured=measured,
            )
        return self._defect_bound

    def __str__(self):
        return f"<SampledPath [range: [{self._times[0]:.6g}, {self._times[-1]:.6g}], step: {self.step:.6g}]>"

    def __repr__(self):
        return str(self)


class FlowShadowResult(NamedTuple):
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    jumps: np.ndarray
    jump_central_residual: float
    interval_residual: float
    interval_bound: float
    sup_deviation: float
    epsilon: float
    epsilon_discrete: float
    delta: float
    defect_bound: float
    kappa: float
    L_discrete: float
    L_flow: float
    gronwall_bound: float
    constants: DichotomyConstants
    report: QuasiShadowReport

    @property
    def deviations(self) -> np.ndarray:
        return np.linalg.norm(self.x - self.y, axis=1)

    @property
    def passed(self) -> bool:
        return (
            self.sup_deviation <= self.epsilon
            and self.jump_central_residual <= JUMP_TOL
            and self.interval_residual <= self.interval_bound
        )

    def to_dict(self) -> Dict:
        return {
            "epsilon": self.epsilon,
            "epsilon_discrete": self.epsilon_discrete,
            "delta": self.delta,
            "defect_bound": self.defect_bound,
            "kappa": self.kappa,
            "L_discrete": self.L_discrete,
            "L_flow": self.L_flow,
            "gronwall_bound": self.gronwall_bound,
            "sup_deviation": self.sup_deviation,
            "jump_central_residual": self.jump_central_residual,
            "interval_residual": self.interval_residual,
            "interval_bound": self.interval_bound,
            "passed": self.passed,
            "constants": self.constants.to_dict(),
            "jumps": self.jumps.tolist(),
            "discrete": self.report.to_dict(),
        }


def flow_quasi_shadow(
    spec: FlowSpec,
    path: SampledPath,
    epsilon: float,
    tol: float = 1e-12,
    force: bool = False,
    n_workers: Optional[int] = None,
    show_progress: bool = False
) -> FlowShadowResult:
    """
    Quasi-shadow an approximate solution of x' = A(t) x + f(t, x).

    With L' = delta / epsilon of the sampled system and kappa = e^{N + lip_c}, defects up to
    delta = epsilon / ((1 + kappa / L') e^{N + lip_c}) are accepted. The sampled path is then a pseudotrajectory of the
    sampled system of size at most kappa delta, which is quasi-shadowed within kappa delta / L'.

    :param spec: The FlowSpec.
    :param path: The approximate solution, sampled at the spec's step from t_lo to t_hi.
    :param epsilon: The requested sup distance between x(t) and y(t).
    :param tol: Fixed point tolerance of the discrete solver.
    :param force: Run even when the defect exceeds delta.
    :param n_workers: Number of threads integrating unit intervals.
    :param show_progress: Boolean option to show or hide progress bar.
    :return: A FlowShadowResult.
    """
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ConfigurationError(f"Epsilon must be finite and positive. Received: {epsilon}")
    if path.dim != spec.dim:
        raise StructuralError(f"Path dimension {path.dim} does not match {spec}")

    per_unit = spec.steps_per_unit
    expected = spec.t_lo + spec.h * np.arange((spec.t_hi - spec.t_lo) * per_unit + 1)
    if path.times.shape != expected.shape or np.abs(path.times - expected).max() > 1e-9:
        raise StructuralError(f"Path samples must run from {spec.t_lo} to {spec.t_hi} at step {spec.h}")

    model = discretize(spec, n_workers=n_workers, show_progress=show_progress)
    split = spec.projections
    consts = spec.constants if spec.constants is not None else fit_constants(model.system, split)

    family = NormFamily.sup()
    ctx = GreenContext(model.system, split, consts, family)
    G_bound = G_norm_upper(consts)
    L_discrete = delta_for_epsilon(consts, G_bound, model.perturbation.lip_c, 1.0)
    _, q = contraction_check(consts, model.perturbation.lip_c, G_bound)

    kappa = model.kappa
    growth = float(np.exp(spec.N + spec.lip_c))
    L_flow = 1.0 / ((1.0 + kappa / L_discrete) * growth)
    delta = L_flow * epsilon

    defect = path.resolved_defect(spec)
    if defect > delta:
        message = f"Path defect {defect:.6g} exceeds delta = {delta:.6g} for epsilon = {epsilon:.6g}"
        if not force:
            raise PreconditionError(message, defect=defect, delta=delta)
        log.warning(f"{message}. Running anyway.")

    epsilon_discrete = kappa * max(defect, delta) / L_discrete
    window = spec.window
    y = VecSeq(window, path.values[::per_unit])
    pseudo = PseudoTrajectory.from_sequence(y, model.system, model.perturbation, family)
    report = quasi_shadow(ctx, model.perturbation, pseudo, epsilon_discrete, tol=tol, force=force)

    def _interval(n: int) -> np.ndarray:
        return integrate(spec.rhs, n + 1, n, report.x[n], spec.h, record=True)

    pieces = thread_map(
        _interval, range(window.lo, window.hi), n_workers=n_workers, desc="Reconstruction", show_progress=show_progress
    )

    x = np.concatenate([piece[:-1] for piece in pieces] + [report.x.values[-1:]])
    ends = np.array([piece[-1] for piece in pieces])
    jumps = report.x.values[1:] - ends

    P3 = split.stack(3)[1:]
    off_central = jumps - np.einsum("nij,nj->ni", P3, jumps)
    jump_central_residual = float(np.linalg.norm(off_central, axis=1).max())

    # Central differences inside every unit interval, the end point of a piece is its continuous extension
    interval_residual = 0.0
    for p, piece in enumerate(pieces):
        n = window.lo + p
        for i in range(1, per_unit):
            derivative = (piece[i + 1] - piece[i - 1]) / (2.0 * spec.h)
            residual = np.linalg.norm(derivative - spec.rhs(n + i * spec.h, piece[i]))
            interval_residual = max(interval_residual, float(residual))
    interval_bound = 10.0 * spec.h ** 2 * (spec.N + spec.lip_c) * float(np.linalg.norm(x, axis=1).max())

    sup_deviation = float(np.linalg.norm(x - path.values, axis=1).max())
    gronwall_bound = defect * (1.0 + kappa / L_discrete) * growth

    result = FlowShadowResult(
        times=path.times,
        x=x,
        y=path.values,
        jumps=jumps,
        jump_central_residual=jump_central_residual,
        interval_residual=interval_residual,
        interval_bound=interval_bound,
        sup_deviation=sup_deviation,
        epsilon=float(epsilon),
        epsilon_discrete=float(epsilon_discrete),
        delta=float(delta),
        defect_bound=float(defect),
        kappa=kappa,
        L_discrete=float(L_discrete),
        L_flow=float(L_flow),
        gronwall_bound=float(gronwall_bound),
        constants=consts,
        report=report,
    )

    log.info(
        f"Flow quasi-shadowing: sup deviation {sup_deviation:.6g} (epsilon {epsilon:.6g}, Gronwall bound "
        f"{gronwall_bound:.6g}), q = {q:.6g}"
    )
    if not result.passed:
        log.warning(
            f"Flow quasi-shadowing checks failed: sup deviation {sup_deviation:.6g}, "
            f"off-central jump size {jump_central_residual:.3e}, interval residual {interval_residual:.3e} "
            f"(bound {interval_bound:.3e})"
        )

    return result


def jump_times(result: FlowShadowResult, atol: float = 1e-12) -> List[int]:
    """
    Integer times at which x(t) jumps by more than atol.
    """
    lo = int(round(result.times[0]))
    return [lo + 1 + p for p, jump in enumerate(result.jumps) if np.linalg.norm(jump) > atol]
