#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Pointwise quasi-conjugacies between x_{n+1} = A_n x_n + f_n(x_n) and its linear part.

For a base index m and a point y, the orbit of (m, y) under the perturbed dynamics is a pseudotrajectory of the linear
system in the sup norm. Quasi-shadowing it against the linear system gives h_m(y) = y + z^{s,u}_m and tau_m(y) = z^c_m,
which satisfy h_{m+1}(F_m(y)) = A_m h_m(y) + tau_{m+1}(F_m(y)).
"""

import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .dichotomy import DichotomyConstants, SplittingTriple, WindowSystem
from .exceptions import ConfigurationError, NotInvertibleError, NumericalError, StructuralError
from .green import GreenContext
from .parallel import thread_map
from .random_utils import named_rng
from .reports import conjugacy_table, render_html
from .seqspace import NormFamily, VecSeq, Window
from .shadow import PerturbationSeq, PseudoTrajectory, QuasiShadowReport, quasi_shadow

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

INVERT_TOL = 1e-13
INVERT_MAX_ITERATIONS = 200
GH_TOL = 1e-8
MEMBERSHIP_TOL = 1e-9

###############################################################################


class ConjugacyQuery(NamedTuple):
    m: int
    y: np.ndarray
    probe_window: Window
    epsilon: float

    def validate(self, sys: Optional[WindowSystem] = None) -> "ConjugacyQuery":
        if not (self.probe_window.lo <= self.m - 1 and self.m + 1 <= self.probe_window.hi):
            raise ConfigurationError(
                f"Probe window {self.probe_window} must contain m = {self.m} with a margin of at least one index"
            )
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ConfigurationError(f"Epsilon must be finite and positive. Received: {self.epsilon}")
        if sys is not None:
            if not sys.window.contains_window(self.probe_window):
                raise StructuralError(f"Probe window {self.probe_window} is not contained in {sys.window}")
            if np.asarray(self.y).shape != (sys.dim,):
                raise StructuralError(f"Point must have shape ({sys.dim},). Received: {np.asarray(self.y).shape}")
        return self


class ConjugacyValue(NamedTuple):
    m: int
    y: np.ndarray
    h: np.ndarray
    tau: np.ndarray
    z: VecSeq
    orbit: VecSeq
    report: QuasiShadowReport

    def to_dict(self) -> Dict:
        return {
            "m": self.m,
            "y": [float(v) for v in self.y],
            "h": [float(v) for v in self.h],
            "tau": [float(v) for v in self.tau],
        }


def default_margin(consts: DichotomyConstants, tol: float = 1e-12) -> int:
    """
    2 * ceil(ln(1 / tol) / min(d, b)) indices on each side of the base index.
    """
    return 2 * int(math.ceil(math.log(1.0 / tol) / min(consts.d, consts.b)))


def probe_window_for(sys: WindowSystem, m: int, margin: int) -> Window:
    """
    The probe window [m - margin, m + 1 + margin] clipped to the system window. It serves both (m, y) and
    (m + 1, F_m(y)).
    """
    window = sys.window
    return Window(max(window.lo, m - margin), min(window.hi, m + 1 + margin))


###############################################################################


def invert_step(
    sys: WindowSystem,
    f: PerturbationSeq,
    n: int,
    target: np.ndarray,
    tol: float = INVERT_TOL,
    max_iterations: int = INVERT_MAX_ITERATIONS
) -> np.ndarray:
    """
    Solve F_n(x) = A_n x + f_n(x) = target with the iteration x <- A_n^{-1}(target - f_n(x)).

    :param sys: The linear window system.
    :param f: The perturbation.
    :param n: The step index.
    :param target: The image point.
    :param tol: Stop when the step is below tol * max(1, ||x||).
    :param max_iterations: Iteration cap.
    :return: The preimage.
    """
    A = sys.A(n)
    target = np.asarray(target, dtype=float)

    x = np.linalg.solve(A, target - f(n, np.zeros_like(target)))
    if f.kind == "zero":
        return x

    for _ in range(max_iterations):
        following = np.linalg.solve(A, target - f(n, x))
        if not np.all(np.isfinite(following)):
            raise NumericalError(f"Inverting F_{n} produced nonfinite values")
        step = float(np.linalg.norm(following - x))
        x = following
        if step <= tol * max(1.0, float(np.linalg.norm(x))):
            return x

    raise NumericalError(f"Inverting F_{n} did not converge within {max_iterations} iterations (last step {step:.3e})")


def _check_invertible(sys: WindowSystem, f: PerturbationSeq) -> float:
    inverse_bound = sys.sup_inverse_norm()
    if not np.isfinite(inverse_bound):
        raise NotInvertibleError(f"Some A_n on {sys.window} is singular")
    if f.lip_c * inverse_bound >= 1:
        raise NotInvertibleError(
            f"F_n is not known to be invertible: lip_c * max ||A_n^-1|| = {f.lip_c * inverse_bound:.6g} >= 1",
            product=f.lip_c * inverse_bound,
        )
    return inverse_bound


def perturbed_orbit(
    sys: WindowSystem,
    f: PerturbationSeq,
    m: int,
    y: np.ndarray,
    probe_window: Window,
    tol: float = INVERT_TOL,
    max_iterations: int = INVERT_MAX_ITERATIONS
) -> VecSeq:
    """
    The orbit of (m, y) under F_n = A_n + f_n over the probe window.

    :param sys: The linear window system.
    :param f: The perturbation on the same window.
    :param m: The base index.
    :param y: The point at the base index.
    :param probe_window: The window to compute the orbit on, inside the system window.
    :param tol: Tolerance of the backward steps.
    :param max_iterations: Iteration cap of the backward steps.
    :return: The orbit as a VecSeq on the probe window.
    """
    if not sys.window.contains_window(probe_window) or m not in probe_window:
        raise StructuralError(f"Probe window {probe_window} must contain m = {m} and lie in {sys.window}")

    y = np.asarray(y, dtype=float)
    values = np.zeros((probe_window.length, sys.dim))
    position = probe_window.position(m)
    values[position] = y

    for p in range(position, probe_window.length - 1):
        n = probe_window.lo + p
        values[p + 1] = sys.A(n) @ values[p] + f(n, values[p])

    if position > 0:
        _check_invertible(sys.restrict(probe_window), f.restrict(probe_window))
    for p in range(position - 1, -1, -1):
        values[p] = invert_step(sys, f, probe_window.lo + p, values[p + 1], tol, max_iterations)

    if not np.all(np.isfinite(values)):
        raise NumericalError(f"Orbit of (m={m}, y={y}) left the floating point range")

    return VecSeq(probe_window, values)


def conjugacy_point(
    sys: WindowSystem,
    split: SplittingTriple,
    consts: DichotomyConstants,
    f: PerturbationSeq,
    query: ConjugacyQuery,
    force: bool = False,
    tol: float = 1e-12
) -> ConjugacyValue:
    """
    Evaluate h_m(y) and tau_m(y).

    The orbit of (m, y) is quasi-shadowed against the linear system with a zero perturbation in the sup norm; its
    defects are exactly f_n along the orbit.

    :param sys: The linear window system.
    :param split: The splitting.
    :param consts: Strong dichotomy constants.
    :param f: The perturbation.
    :param query: The ConjugacyQuery.
    :param force: Run even when the sup norm of f along the orbit exceeds delta(epsilon).
    :param tol: Fixed point tolerance.
    :return: A ConjugacyValue.
    """
    if not consts.is_strong:
        raise ConfigurationError("Quasi-conjugacies require strong dichotomy constants (a, c_back).")
    if not np.isfinite(sys.sup_norm()):
        raise NotInvertibleError("sup ||A_n|| must be finite.")
    query.validate(sys)

    window = query.probe_window
    local_sys = sys.restrict(window)
    local_f = f.restrict(window)
    orbit = perturbed_orbit(sys, f, query.m, query.y, window)

    family = NormFamily.sup()
    residual = np.zeros_like(orbit.values)
    residual[:-1] = local_f.evaluate(orbit.values)
    pseudo = PseudoTrajectory(orbit, VecSeq(window, residual), family)

    ctx = GreenContext(local_sys, split.restrict(window), consts, family, validate=False)
    report = quasi_shadow(ctx, PerturbationSeq.zero(window, sys.dim), pseudo, query.epsilon, tol=tol, force=force)

    position = window.position(query.m)
    y = np.asarray(query.y, dtype=float)
    return ConjugacyValue(
        m=query.m,
        y=y,
        h=y + report.z_hyperbolic.values[position],
        tau=np.array(report.z_central.values[position]),
        z=report.z,
        orbit=orbit,
        report=report,
    )


###############################################################################


class ConjugacyPointCheck(NamedTuple):
    m: int
    y: List[float]
    gh_residual: float
    h_minus_id: float
    tau_norm: float
    hyperbolic_membership: float
    central_membership: float
    tau_recurrence: float
    pseudo_norm: float
    delta: float

    def to_dict(self) -> Dict:
        return dict(self._asdict())


class ConjugacyReport(NamedTuple):
    points: List[ConjugacyPointCheck]
    epsilon: float
    tol: float

    @property
    def max_gh_residual(self) -> float:
        return max(p.gh_residual for p in self.points)

    @property
    def sup_h_minus_id(self) -> float:
        return max(p.h_minus_id for p in self.points)

    @property
    def sup_tau(self) -> float:
        return max(p.tau_norm for p in self.points)

    @property
    def max_membership(self) -> float:
        return max(max(p.hyperbolic_membership, p.central_membership) for p in self.points)

    @property
    def max_tau_recurrence(self) -> float:
        return max(p.tau_recurrence for p in self.points)

    @property
    def within_delta(self) -> bool:
        return all(p.pseudo_norm <= p.delta for p in self.points)

    @property
    def failures(self) -> List[str]:
        failures = []
        if self.max_gh_residual > self.tol:
            failures.append(f"conjugacy residual {self.max_gh_residual:.3e} > {self.tol:.1e}")
        if self.sup_h_minus_id > self.epsilon:
            failures.append(f"sup ||h - Id|| = {self.sup_h_minus_id:.6g} > epsilon = {self.epsilon:.6g}")
        if self.sup_tau > self.epsilon:
            failures.append(f"sup ||tau|| = {self.sup_tau:.6g} > epsilon = {self.epsilon:.6g}")
        if self.max_membership > MEMBERSHIP_TOL:
            failures.append(f"bundle membership residual {self.max_membership:.3e} > {MEMBERSHIP_TOL:.1e}")
        if self.max_tau_recurrence > MEMBERSHIP_TOL:
            failures.append(f"tau recurrence residual {self.max_tau_recurrence:.3e} > {MEMBERSHIP_TOL:.1e}")
        if not self.within_delta:
            failures.append("sup ||f_n|| along some orbit exceeds delta(epsilon)")
        return failures

    @property
    def passed(self) -> bool:
        return len(self.failures) == 0

    def to_dict(self) -> Dict:
        return {
            "epsilon": self.epsilon,
            "tol": self.tol,
            "max_gh_residual": self.max_gh_residual,
            "sup_h_minus_id": self.sup_h_minus_id,
            "sup_tau": self.sup_tau,
            "max_membership": self.max_membership,
            "max_tau_recurrence": self.max_tau_recurrence,
            "within_delta": self.within_delta,
            "failures": self.failures,
            "passed": self.passed,
            "points": [p.to_dict() for p in self.points],
        }

    def _repr_html_(self) -> str:
        return render_html("Quasi-conjugacy verification", conjugacy_table(self))


def verify_conjugacy(
    sys: WindowSystem,
    split: SplittingTriple,
    consts: DichotomyConstants,
    f: PerturbationSeq,
    grid: Sequence[Tuple[int, np.ndarray]],
    epsilon: float,
    margin: Optional[int] = None,
    tol: float = GH_TOL,
    n_workers: Optional[int] = None,
    show_progress: bool = False
) -> ConjugacyReport:
    """
    Check h_{m+1}(F_m(y)) = A_m h_m(y) + tau_{m+1}(F_m(y)) and the epsilon bounds on a grid of points.

    Points where f exceeds delta(epsilon) along the orbit are still evaluated and reported as failures.

    :param sys: The linear window system.
    :param split: The splitting.
    :param consts: Strong dichotomy constants.
    :param f: The perturbation.
    :param grid: Pairs (m, y).
    :param epsilon: The requested shadowing distance.
    :param margin: Probe margin on each side, defaults to default_margin(consts).
    :param tol: Tolerance of the conjugacy residual.
    :param n_workers: Number of threads evaluating grid points.
    :param show_progress: Boolean option to show or hide progress bar.
    :return: A ConjugacyReport.
    """
    if len(grid) == 0:
        raise ConfigurationError("Conjugacy grids need at least one point.")
    if margin is None:
        margin = default_margin(consts)
    # Both (m, y) and (m + 1, F_m(y)) need an index on either side inside the window
    for m, y in grid:
        if not sys.window.lo < int(m) < sys.window.hi - 1:
            raise ConfigurationError(
                f"Grid point (m = {m}, y = {np.asarray(y).tolist()}) needs lo < m < hi - 1 for {sys.window}"
            )
    log.info(f"Verifying the quasi-conjugacy on {len(grid)} points with probe margin {margin}")

    P3 = split.stack(3)

    def _check_point(point: Tuple[int, np.ndarray]) -> ConjugacyPointCheck:
        m, y = int(point[0]), np.asarray(point[1], dtype=float)
        window = probe_window_for(sys, m, margin)

        here = conjugacy_point(sys, split, consts, f, ConjugacyQuery(m, y, window, epsilon), force=True)
        image = here.orbit[m + 1]
        there = conjugacy_point(
            sys, split, consts, f, ConjugacyQuery(m + 1, image, window, epsilon), force=True
        )

        gh_residual = np.linalg.norm(there.h - sys.A(m) @ here.h - there.tau)

        p = sys.window.position(m)
        displacement = here.h - y
        hyperbolic_membership = np.linalg.norm(P3[p] @ displacement)
        central_membership = np.linalg.norm(here.tau - P3[p] @ here.tau)

        # With a zero perturbation in the linear problem, tau_m(y) = P^3_m f_{m-1}(y_{m-1})
        previous = here.orbit[m - 1]
        tau_recurrence = np.linalg.norm(here.tau - P3[p] @ f(m - 1, previous))

        return ConjugacyPointCheck(
            m=m,
            y=[float(v) for v in y],
            gh_residual=float(gh_residual),
            h_minus_id=float(np.linalg.norm(displacement)),
            tau_norm=float(np.linalg.norm(here.tau)),
            hyperbolic_membership=float(hyperbolic_membership),
            central_membership=float(central_membership),
            tau_recurrence=float(tau_recurrence),
            pseudo_norm=max(here.report.pseudo_norm, there.report.pseudo_norm),
            delta=here.report.delta_used,
        )

    points = thread_map(_check_point, grid, n_workers=n_workers, desc="Conjugacy grid", show_progress=show_progress)
    report = ConjugacyReport(points, float(epsilon), tol)

    failures = report.failures
    for failure in failures[:10]:
        log.warning(f"Quasi-conjugacy check failed: {failure}")
    if len(failures) > 10:
        log.warning("...")

    return report


###############################################################################


class ContinuityTable(NamedTuple):
    radii: List[float]
    modulus: List[float]
    atol: float

    @property
    def nonincreasing(self) -> bool:
        return all(b <= a * (1 + 1e-9) + self.atol for a, b in zip(self.modulus, self.modulus[1:]))

    @property
    def vanishing(self) -> bool:
        """
        The modulus at the smallest radius is negligible relative to a linear decay from the largest radius.
        """
        linear = 10.0 * self.modulus[0] * self.radii[-1] / self.radii[0]
        return self.modulus[-1] <= max(self.atol, linear)

    def to_dict(self) -> Dict:
        return {
            "radii": list(self.radii),
            "modulus": list(self.modulus),
            "nonincreasing": self.nonincreasing,
            "vanishing": self.vanishing,
        }


def continuity_probe(
    sys: WindowSystem,
    split: SplittingTriple,
    consts: DichotomyConstants,
    f: PerturbationSeq,
    m: int,
    y: np.ndarray,
    radii: Sequence[float],
    epsilon: float,
    directions: int = 16,
    margin: Optional[int] = None,
    seed: int = 0,
    atol: float = 1e-9,
    h_map: Optional[Callable[[np.ndarray], np.ndarray]] = None
) -> ContinuityTable:
    """
    Empirical modulus of continuity of h_m at y: for every radius r the largest ||h_m(w) - h_m(y)|| over sampled
    points w with ||w - y|| = r.

    :param sys: The linear window system.
    :param split: The splitting.
    :param consts: Strong dichotomy constants.
    :param f: The perturbation.
    :param m: Base index.
    :param y: Base point.
    :param radii: Strictly decreasing positive radii.
    :param epsilon: The requested shadowing distance.
    :param directions: Number of sampled unit directions.
    :param margin: Probe margin, defaults to default_margin(consts).
    :param seed: Seed of the direction generator.
    :param atol: Absolute tolerance of the vanishing test.
    :param h_map: Replaces h_m, used to probe hand made maps.
    :return: A ContinuityTable.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2 or any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ConfigurationError(f"Radii must be positive and strictly decreasing. Received: {radii}")

    y = np.asarray(y, dtype=float)
    if h_map is None:
        window = probe_window_for(sys, m, default_margin(consts) if margin is None else margin)

        def h_map(w: np.ndarray) -> np.ndarray:
            query = ConjugacyQuery(m, w, window, epsilon)
            return conjugacy_point(sys, split, consts, f, query, force=True).h

    rng = named_rng(seed, "continuity")
    units = rng.standard_normal((directions, y.shape[0]))
    units /= np.linalg.norm(units, axis=1, keepdims=True)

    base = h_map(y)
    modulus = []
    for r in radii:
        modulus.append(max(float(np.linalg.norm(h_map(y + r * u) - base)) for u in units))

    table = ContinuityTable(radii, modulus, atol)
    if not table.vanishing:
        log.warning(f"Continuity modulus of h_{m} at {y} does not vanish: {modulus}")
    return table


class MarginDrift(NamedTuple):
    margin: int
    h_change: float
    tau_change: float

    def to_dict(self) -> Dict:
        return dict(self._asdict())


def margin_drift(
    sys: WindowSystem,
    split: SplittingTriple,
    consts: DichotomyConstants,
    f: PerturbationSeq,
    m: int,
    y: np.ndarray,
    epsilon: float,
    margin: Optional[int] = None
) -> MarginDrift:
    """
    Change of h_m(y) and tau_m(y) when the probe margin is doubled.
    """
    if margin is None:
        margin = default_margin(consts)

    values = []
    for size in (margin, 2 * margin):
        query = ConjugacyQuery(m, np.asarray(y, dtype=float), probe_window_for(sys, m, size), epsilon)
        values.append(conjugacy_point(sys, split, consts, f, query, force=True))

    drift = MarginDrift(
        margin=int(margin),
        h_change=float(np.linalg.norm(values[1].h - values[0].h)),
        tau_change=float(np.linalg.norm(values[1].tau - values[0].tau)),
    )
    log.info(f"Doubling the probe margin from {margin} moves h by {drift.h_change:.3e}, tau by {drift.tau_change:.3e}")
    return drift
