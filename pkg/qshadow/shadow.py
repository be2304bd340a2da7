#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Quasi-shadowing of pseudotrajectories of x_{n+1} = A_n x_n + f_n(x_n).

The correction z is the fixed point of Phi = G o S where (S z)_n = g_{n-1}(z^{s,u}_{n-1}) and

    g_n(x) = f_n(x + y_n) - f_n(y_n) + F_n(y_n) - y_{n+1}.

The quasi-trajectory x = y + z^{s,u} then satisfies x_{n+1} = F_n(x_n) + z^c_{n+1}.
"""

import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np

from .dichotomy import DichotomyConstants, WindowSystem, decompose, spectral_norms
from .exceptions import (ConfigurationError, ContractionSoundnessError, ContractionViolatedError, DomainError,
                         LipschitzDeclarationError, MaxIterationsError, NumericalError, PreconditionError,
                         StructuralError)
from .green import GreenContext, assemble_G_dense, g_values
from .random_utils import named_rng
from .reports import render_html, verification_table
from .seqspace import NormFamily, VecSeq, Window, seq_norm, vector_norms

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

FIXED_POINT_TOL = 1e-12
VERIFY_TOL = 1e-9
MAX_ITERATIONS_CAP = 100000

# Relative slack accepted between a declared Lipschitz constant and sampled difference quotients
LIPSCHITZ_SLACK = 1e-6

# Iterates larger than this multiple of the starting scale count as divergent
DIVERGENCE_FACTOR = 1e8

###############################################################################


class PerturbationSeq(object):
    KINDS = ("zero", "affine", "tanh", "custom")

    def __init__(
        self,
        window: Window,
        dim: int,
        lip_c: float,
        kind: str = "custom",
        fn: Optional[Callable[[int, np.ndarray], np.ndarray]] = None,
        **params: np.ndarray
    ):
        """
        A sequence of maps f_n : R^k -> R^k for n in [lo, hi - 1] with a declared global Lipschitz constant.

        Prefer the builtin constructors `zero`, `affine` and `tanh`. The custom kind wraps any callable fn(n, x).

        :param window: The window the perturbation lives on.
        :param dim: The state dimension k.
        :param lip_c: Declared Lipschitz constant of every f_n.
        :param kind: One of "zero", "affine", "tanh" or "custom".
        :param fn: The callable of the custom kind.
        :param params: Per index arrays of the builtin kinds.
        """
        if kind not in self.KINDS:
            raise ConfigurationError(f"Perturbation kind must be one of {self.KINDS}. Received: '{kind}'")
        if not np.isfinite(lip_c) or lip_c < 0:
            raise ConfigurationError(f"Lipschitz constant must be finite and nonnegative. Received: {lip_c}")
        if kind == "custom" and not callable(fn):
            raise ConfigurationError("Custom perturbations require a callable fn(n, x).")

        self._window = window
        self._dim = int(dim)
        self._lip_c = float(lip_c)
        self._kind = kind
        self._fn = fn
        self._params = {key: np.asarray(value, dtype=float) for key, value in params.items()}

        for value in self._params.values():
            if value.ndim >= 1 and value.shape[0] != window.length - 1:
                raise StructuralError(
                    f"Perturbation parameters need one entry per index in [{window.lo}, {window.hi - 1}]. "
                    f"Received shape: {value.shape}"
                )

    @classmethod
    def zero(cls, window: Window, dim: int) -> "PerturbationSeq":
        return cls(window, dim, 0.0, kind="zero")

    @classmethod
    def affine(
        cls,
        window: Window,
        B: np.ndarray,
        v: Optional[np.ndarray] = None,
        lip_c: Optional[float] = None
    ) -> "PerturbationSeq":
        """
        f_n(x) = B_n x + v_n.

        :param window: The window.
        :param B: Array of shape (window length - 1, k, k).
        :param v: Array of shape (window length - 1, k). Defaults to zero.
        :param lip_c: Declared Lipschitz constant, defaults to max ||B_n||. Must bound every ||B_n||.
        """
        B = np.asarray(B, dtype=float)
        if B.ndim != 3 or B.shape[1] != B.shape[2]:
            raise StructuralError(f"Affine perturbations require B of shape (length - 1, k, k). Received: {B.shape}")
        if v is None:
            v = np.zeros(B.shape[:2])

        largest = float(spectral_norms(B).max())
        if lip_c is None:
            lip_c = largest
        elif largest > lip_c * (1 + LIPSCHITZ_SLACK):
            raise LipschitzDeclarationError(
                f"Declared Lipschitz constant {lip_c} is below max ||B_n|| = {largest}", largest=largest
            )

        return cls(window, B.shape[1], lip_c, kind="affine", B=B, v=np.asarray(v, dtype=float))

    @classmethod
    def constant_shift(cls, window: Window, vector: np.ndarray) -> "PerturbationSeq":
        """
        f_n(x) = vector for every n.
        """
        vector = np.asarray(vector, dtype=float)
        k = vector.shape[0]
        return cls.affine(window, np.zeros((window.length - 1, k, k)), np.tile(vector, (window.length - 1, 1)))

    @classmethod
    def tanh(
        cls,
        window: Window,
        kappa: float,
        W: np.ndarray,
        offset: Optional[np.ndarray] = None,
        lip_c: Optional[float] = None
    ) -> "PerturbationSeq":
        """
        f_n(x) = kappa * tanh(W_n x + offset_n), componentwise.

        :param window: The window.
        :param kappa: Amplitude.
        :param W: Array of shape (window length - 1, k, k).
        :param offset: Array of shape (window length - 1, k). Defaults to zero.
        :param lip_c: Declared Lipschitz constant, defaults to |kappa| max ||W_n||.
        """
        W = np.asarray(W, dtype=float)
        if W.ndim != 3 or W.shape[1] != W.shape[2]:
            raise StructuralError(f"Tanh perturbations require W of shape (length - 1, k, k). Received: {W.shape}")
        if offset is None:
            offset = np.zeros(W.shape[:2])

        bound = abs(float(kappa)) * float(spectral_norms(W).max())
        if lip_c is None:
            lip_c = bound
        elif bound > lip_c * (1 + LIPSCHITZ_SLACK):
            raise LipschitzDeclarationError(
                f"Declared Lipschitz constant {lip_c} is below |kappa| max ||W_n|| = {bound}", largest=bound
            )

        return cls(
            window, W.shape[1], lip_c, kind="tanh",
            kappa=np.float64(kappa), W=W, offset=np.asarray(offset, dtype=float)
        )

    @property
    def window(self) -> Window:
        return self._window

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def lip_c(self) -> float:
        return self._lip_c

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def params(self) -> Dict[str, np.ndarray]:
        return dict(self._params)

    @property
    def is_affine(self) -> bool:
        return self._kind in ("zero", "affine")

    def affine_parts(self):
        """
        The pair (B, v) of an affine (or zero) perturbation.
        """
        if not self.is_affine:
            raise DomainError(f"Perturbations of kind '{self._kind}' are not affine.")

        length = self._window.length - 1
        if self._kind == "zero":
            return np.zeros((length, self._dim, self._dim)), np.zeros((length, self._dim))
        return self._params["B"], self._params["v"]

    def __call__(self, n: int, x: np.ndarray) -> np.ndarray:
        if n not in self._window or n == self._window.hi:
            raise IndexError(f"f_n is defined for n in [{self._window.lo}, {self._window.hi - 1}]. Received: {n}")

        x = np.asarray(x, dtype=float)
        p = n - self._window.lo
        if self._kind == "zero":
            return np.zeros(self._dim)
        if self._kind == "affine":
            return self._params["B"][p] @ x + self._params["v"][p]
        if self._kind == "tanh":
            return self._params["kappa"] * np.tanh(self._params["W"][p] @ x + self._params["offset"][p])
        return np.asarray(self._fn(n, x), dtype=float)

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """
        Evaluate f_n(values_n) for every n in [lo, hi - 1].

        :param values: Array of shape (window length, k); the row at hi is ignored.
        :return: Array of shape (window length - 1, k).
        """
        values = np.asarray(values, dtype=float)[:-1]
        if self._kind == "zero":
            return np.zeros_like(values)
        if self._kind == "affine":
            return np.einsum("nij,nj->ni", self._params["B"], values) + self._params["v"]
        if self._kind == "tanh":
            inner = np.einsum("nij,nj->ni", self._params["W"], values) + self._params["offset"]
            return self._params["kappa"] * np.tanh(inner)
        lo = self._window.lo
        return np.array([np.asarray(self._fn(lo + p, x), dtype=float) for p, x in enumerate(values)])

    def restrict(self, window: Window) -> "PerturbationSeq":
        if not self._window.contains_window(window):
            raise StructuralError(f"{window} is not contained in {self._window}")

        start = window.lo - self._window.lo
        stop = start + window.length - 1
        params = {
            key: value[start:stop] if value.ndim >= 1 else value for key, value in self._params.items()
        }
        return PerturbationSeq(window, self._dim, self._lip_c, kind=self._kind, fn=self._fn, **params)

    def sample_lipschitz(self, seed: int = 0, pairs: int = 64, scale: float = 1.0) -> float:
        """
        Largest difference quotient ||f_n(x) - f_n(x')|| / ||x - x'|| over random pairs at every index.
        """
        rng = named_rng(seed, "lipschitz")
        length = self._window.length
        worst = 0.0
        for _ in range(pairs):
            x = rng.standard_normal((length, self._dim)) * scale
            x_prime = x + rng.standard_normal((length, self._dim)) * scale * rng.uniform(1e-3, 1.0)
            top = np.linalg.norm(self.evaluate(x) - self.evaluate(x_prime), axis=1)
            bottom = np.linalg.norm((x - x_prime)[:-1], axis=1)
            worst = max(worst, float((top / bottom).max()))
        return worst

    def check_lipschitz(self, seed: int = 0, pairs: int = 64, scale: float = 1.0) -> float:
        """
        Flag a declared Lipschitz constant that sampled pairs violate.
        """
        estimate = self.sample_lipschitz(seed, pairs, scale)
        if estimate > self._lip_c * (1 + LIPSCHITZ_SLACK):
            raise LipschitzDeclarationError(
                f"Sampled Lipschitz quotient {estimate:.6g} exceeds the declared constant {self._lip_c:.6g}",
                estimate=estimate,
            )
        return estimate

    def __str__(self):
        return (
            f"<PerturbationSeq [kind: {self._kind}, window: [{self._window.lo}, {self._window.hi}], "
            f"lip_c: {self._lip_c:.6g}]>"
        )

    def __repr__(self):
        return str(self)


def step_values(sys: WindowSystem, f: PerturbationSeq, values: np.ndarray) -> np.ndarray:
    """
    F_n(values_n) = A_n values_n + f_n(values_n) for every n in [lo, hi - 1].
    """
    values = np.asarray(values, dtype=float)
    return np.einsum("nij,nj->ni", sys.matrices, values[:-1]) + f.evaluate(values)


class PseudoTrajectory(object):
    def __init__(self, y: VecSeq, residual: VecSeq, family: NormFamily, ambient: str = "euclidean"):
        """
        A sequence y together with its one step defects residual_n = y_{n+1} - F_n(y_n) for n in [lo, hi - 1].
        The residual lives on the full window with a zero entry at hi.

        Use `from_sequence` to compute the residual from a system and perturbation.

        :param y: The sequence.
        :param residual: The defects.
        :param family: The norm family the defects are measured in.
        :param ambient: Norm on R^k.
        """
        if residual.window != y.window or residual.dim != y.dim:
            raise StructuralError(f"Residual {residual} does not match {y}")
        if np.any(residual.values[-1] != 0):
            raise StructuralError("Pseudotrajectory residuals have no entry at the last window index.")

        self._y = y
        self._residual = residual
        self._family = family
        self._ambient = ambient

    @classmethod
    def from_sequence(
        cls,
        y: VecSeq,
        sys: WindowSystem,
        f: PerturbationSeq,
        family: NormFamily,
        ambient: str = "euclidean"
    ) -> "PseudoTrajectory":
        if y.window != sys.window or y.dim != sys.dim:
            raise StructuralError(f"Sequence {y} does not match {sys}")

        residual = np.zeros_like(y.values)
        residual[:-1] = y.values[1:] - step_values(sys, f, y.values)
        return cls(y, VecSeq(y.window, residual), family, ambient)

    @property
    def y(self) -> VecSeq:
        return self._y

    @property
    def residual(self) -> VecSeq:
        return self._residual

    @property
    def family(self) -> NormFamily:
        return self._family

    @property
    def ambient(self) -> str:
        return self._ambient

    @property
    def window(self) -> Window:
        return self._y.window

    @property
    def pseudo_norm(self) -> float:
        return seq_norm(self._residual, self._family, self._ambient)

    def consistency(self, sys: WindowSystem, f: PerturbationSeq) -> float:
        """
        Largest difference between the stored residual and a recomputed one.
        """
        recomputed = self._y.values[1:] - step_values(sys, f, self._y.values)
        return float(np.abs(recomputed - self._residual.values[:-1]).max())

    def __str__(self):
        return f"<PseudoTrajectory [window: [{self.window.lo}, {self.window.hi}], pseudo norm: {self.pseudo_norm:.6g}]>"

    def __repr__(self):
        return str(self)


class QuasiShadowReport(NamedTuple):
    z: VecSeq
    z_central: VecSeq
    z_hyperbolic: VecSeq
    x: VecSeq
    y: VecSeq
    epsilon: float
    delta_used: float
    pseudo_norm: float
    q: float
    G_bound: float
    lip_c: float
    iterations: int
    fixed_point_residual: float
    certificate: float
    quasi_residuals: np.ndarray
    step_norms: List[float]
    family: NormFamily
    ambient: str
    forced: bool

    @property
    def window(self) -> Window:
        return self.z.window

    @property
    def contraction_ratios(self) -> List[float]:
        """
        Observed ratios of consecutive iteration steps, from the second step on.
        """
        steps = self.step_norms
        return [steps[i] / steps[i - 1] for i in range(1, len(steps)) if steps[i - 1] > 0]

    def to_dict(self) -> Dict:
        return {
            "window": self.window.to_config(),
            "dim": self.z.dim,
            "family": self.family.to_config(),
            "ambient": self.ambient,
            "epsilon": self.epsilon,
            "delta_used": self.delta_used,
            "pseudo_norm": self.pseudo_norm,
            "q": self.q,
            "G_bound": self.G_bound,
            "lip_c": self.lip_c,
            "iterations": self.iterations,
            "fixed_point_residual": self.fixed_point_residual,
            "certificate": self.certificate,
            "forced": self.forced,
            "quasi_residuals": [float(r) for r in self.quasi_residuals],
            "step_norms": [float(s) for s in self.step_norms],
            "y": self.y.values.tolist(),
            "z": self.z.values.tolist(),
            "z_central": self.z_central.values.tolist(),
            "z_hyperbolic": self.z_hyperbolic.values.tolist(),
            "x": self.x.values.tolist(),
        }

    @classmethod
    def from_dict(cls, values: Dict) -> "QuasiShadowReport":
        try:
            window = Window.from_config(values["window"])

            def _seq(name: str) -> VecSeq:
                return VecSeq(window, np.asarray(values[name], dtype=float).reshape(window.length, values["dim"]))

            return cls(
                z=_seq("z"),
                z_central=_seq("z_central"),
                z_hyperbolic=_seq("z_hyperbolic"),
                x=_seq("x"),
                y=_seq("y"),
                epsilon=float(values["epsilon"]),
                delta_used=float(values["delta_used"]),
                pseudo_norm=float(values["pseudo_norm"]),
                q=float(values["q"]),
                G_bound=float(values["G_bound"]),
                lip_c=float(values["lip_c"]),
                iterations=int(values["iterations"]),
                fixed_point_residual=float(values["fixed_point_residual"]),
                certificate=float(values["certificate"]),
                quasi_residuals=np.asarray(values["quasi_residuals"], dtype=float),
                step_norms=[float(s) for s in values["step_norms"]],
                family=NormFamily.from_config(values["family"]),
                ambient=values["ambient"],
                forced=bool(values["forced"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Malformed quasi-shadowing report: {e}")


###############################################################################


class ContractionCheck(NamedTuple):
    ok: bool
    q: float


def contraction_check(consts: DichotomyConstants, lip_c: float, G_bound: float) -> ContractionCheck:
    """
    q = 4 lip_c D (1 + 2D) G_bound; the fixed point map contracts when q < 1.
    """
    q = 4.0 * lip_c * consts.D * (1.0 + 2.0 * consts.D) * G_bound
    return ContractionCheck(q < 1.0, float(q))


def delta_for_epsilon(consts: DichotomyConstants, G_bound: float, lip_c: float, epsilon: float) -> float:
    """
    The largest pseudo norm accepted for a requested shadowing distance epsilon:

        delta = (1 - q) / ((1 + 2D) G_bound) * epsilon

    :param consts: The dichotomy constants.
    :param G_bound: Upper bound for the norm of G.
    :param lip_c: Lipschitz constant of the perturbation.
    :param epsilon: The requested shadowing distance.
    :return: delta, the Lipschitz constant of the shadowing property is delta / epsilon.
    """
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ConfigurationError(f"Epsilon must be finite and positive. Received: {epsilon}")

    ok, q = contraction_check(consts, lip_c, G_bound)
    if not ok:
        raise ContractionViolatedError(
            f"Contraction condition fails: q = 4 c D (1 + 2D) ||G|| = {q:.6g} >= 1", q=q
        )

    return float((1.0 - q) / ((1.0 + 2.0 * consts.D) * G_bound) * epsilon)


def default_max_iterations(q: float, tol: float = FIXED_POINT_TOL) -> int:
    if q <= 0:
        return 10
    return int(min(MAX_ITERATIONS_CAP, max(10, 10 * math.ceil(math.log(tol) / math.log(q)))))


def _check_inputs(ctx: GreenContext, f: PerturbationSeq, y: PseudoTrajectory):
    if f.window != ctx.window or f.dim != ctx.dim:
        raise StructuralError(f"Perturbation {f} does not match {ctx}")
    if y.window != ctx.window or y.y.dim != ctx.dim:
        raise StructuralError(f"Pseudotrajectory {y} does not match {ctx}")
    if y.family != ctx.family or y.ambient != ctx.ambient:
        raise ConfigurationError(
            f"Pseudotrajectory is measured in {y.family} ({y.ambient}), the context in {ctx.family} ({ctx.ambient})"
        )


def _s_values(
    sys: WindowSystem,
    f: PerturbationSeq,
    split_central: np.ndarray,
    y: PseudoTrajectory,
    f_at_y: np.ndarray,
    z_values: np.ndarray
) -> np.ndarray:
    # (S z)_n = f_{n-1}(z^{su}_{n-1} + y_{n-1}) - f_{n-1}(y_{n-1}) - residual_{n-1}, zero at lo
    hyperbolic = z_values - np.einsum("nij,nj->ni", split_central, z_values)
    out = np.zeros_like(z_values)
    if f.kind == "zero":
        out[1:] = -y.residual.values[:-1]
    else:
        out[1:] = f.evaluate(hyperbolic + y.y.values) - f_at_y - y.residual.values[:-1]
    return out


def quasi_shadow(
    ctx: GreenContext,
    f: PerturbationSeq,
    y: PseudoTrajectory,
    epsilon: float,
    tol: float = FIXED_POINT_TOL,
    max_iterations: Optional[int] = None,
    force: bool = False,
    start: Optional[VecSeq] = None
) -> QuasiShadowReport:
    """
    Quasi-shadow a pseudotrajectory of x_{n+1} = A_n x_n + f_n(x_n).

    :param ctx: The GreenContext of the linear part.
    :param f: The perturbation.
    :param y: The pseudotrajectory, measured in the context's norm.
    :param epsilon: The requested shadowing distance in the adapted norm.
    :param tol: Stop once the adapted norm of an iteration step, or the a priori error certificate, is below tol.
    :param max_iterations: Iteration cap. Defaults to 10 * ceil(log(tol) / log(q)), capped at 100000.
    :param force: Run even when the pseudo norm exceeds delta(epsilon).
    :param start: Starting point of the iteration, defaults to zero.
    :return: A QuasiShadowReport.
    """
    _check_inputs(ctx, f, y)

    G_bound = ctx.G_bound
    ok, q = contraction_check(ctx.consts, f.lip_c, G_bound)
    if not ok:
        raise ContractionViolatedError(f"Contraction condition fails: q = {q:.6g} >= 1", q=q)

    delta = delta_for_epsilon(ctx.consts, G_bound, f.lip_c, epsilon)
    pseudo_norm = y.pseudo_norm
    if pseudo_norm > delta:
        message = f"Pseudo norm {pseudo_norm:.6g} exceeds delta(epsilon) = {delta:.6g} for epsilon = {epsilon:.6g}"
        if not force:
            raise PreconditionError(message, pseudo_norm=pseudo_norm, delta=delta)
        log.warning(f"{message}. Running anyway.")

    if max_iterations is None:
        max_iterations = default_max_iterations(q, tol)

    central = ctx.split.stack(3)
    f_at_y = f.evaluate(y.y.values)

    def phi(z_values: np.ndarray) -> np.ndarray:
        return g_values(ctx, _s_values(ctx.sys, f, central, y, f_at_y, z_values))

    def size(values: np.ndarray) -> float:
        return ctx.adapted_norm(VecSeq(ctx.window, values))

    z = np.zeros((ctx.window.length, ctx.dim)) if start is None else np.array(start.values)
    scale = max(size(z), pseudo_norm, epsilon)

    step_norms = []
    first_step = None
    certificate = float("inf")
    iterations = 0
    while True:
        if iterations >= max_iterations:
            raise MaxIterationsError(
                f"No fixed point within {max_iterations} iterations (last step {step_norms[-1]:.3e})",
                iterations=iterations,
                step_norms=step_norms,
            )

        following = phi(z)
        iterations += 1
        if not np.all(np.isfinite(following)):
            raise NumericalError(f"Iteration {iterations} produced nonfinite values", iterations=iterations)

        step = size(following - z)
        step_norms.append(step)
        z = following

        if first_step is None:
            first_step = step
        certificate = q ** iterations / (1.0 - q) * first_step
        log.debug(f"Iteration {iterations}: step {step:.3e}, certificate {certificate:.3e}")

        if step <= tol or certificate <= tol:
            break
        if size(z) > DIVERGENCE_FACTOR * scale:
            raise NumericalError(f"Iteration {iterations} diverged", iterations=iterations, step_norms=step_norms)

    z_seq = VecSeq(ctx.window, z)
    parts = decompose(z_seq, ctx.split)
    x = y.y + parts.hyperbolic
    fixed_point_residual = size(phi(z) - z)

    report = QuasiShadowReport(
        z=z_seq,
        z_central=parts.central,
        z_hyperbolic=parts.hyperbolic,
        x=x,
        y=y.y,
        epsilon=float(epsilon),
        delta_used=delta,
        pseudo_norm=pseudo_norm,
        q=q,
        G_bound=G_bound,
        lip_c=f.lip_c,
        iterations=iterations,
        fixed_point_residual=fixed_point_residual,
        certificate=float(certificate),
        quasi_residuals=quasi_residuals(ctx.sys, f, x, parts.central, ctx.ambient),
        step_norms=step_norms,
        family=ctx.family,
        ambient=ctx.ambient,
        forced=bool(force and pseudo_norm > delta),
    )

    log.info(
        f"Quasi-shadowed {y} in {iterations} iterations: ||z||' = {ctx.adapted_norm(z_seq):.6g}, "
        f"q = {q:.6g}, delta = {delta:.6g}"
    )

    return report


def quasi_residuals(
    sys: WindowSystem,
    f: PerturbationSeq,
    x: VecSeq,
    z_central: VecSeq,
    ambient: str = "euclidean"
) -> np.ndarray:
    """
    ||x_{n+1} - F_n(x_n) - z^c_{n+1}|| for n in [lo, hi - 1].
    """
    defects = x.values[1:] - step_values(sys, f, x.values) - z_central.values[1:]
    return vector_norms(defects, ambient)


###############################################################################


class Check(NamedTuple):
    name: str
    value: float
    bound: float
    passed: bool

    def to_dict(self) -> Dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "passed": self.passed}


class VerificationReport(NamedTuple):
    checks: List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def to_dict(self) -> Dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def _repr_html_(self) -> str:
        return render_html("Quasi-shadowing verification", verification_table(self))


def _check(name: str, value: float, bound: float) -> Check:
    return Check(name, float(value), float(bound), bool(value <= bound))


def verify_report(
    ctx: GreenContext,
    f: PerturbationSeq,
    y: PseudoTrajectory,
    report: QuasiShadowReport,
    tol: float = VERIFY_TOL
) -> VerificationReport:
    """
    Independently recheck a QuasiShadowReport.

    :param ctx: The GreenContext used to solve.
    :param f: The perturbation.
    :param y: The pseudotrajectory.
    :param report: The report to recheck.
    :param tol: Tolerance of the residual, membership and fixed point checks.
    :return: A VerificationReport with one Check per property.
    """
    _check_inputs(ctx, f, y)
    z = report.z
    if z.window != ctx.window or z.dim != ctx.dim:
        raise StructuralError(f"Report on {z.window} does not match {ctx}")

    # Membership of the central part and consistency of the decomposition
    central = report.z_central.values
    projected = np.einsum("nij,nj->ni", ctx.split.stack(3), central)
    membership = float(np.linalg.norm(central - projected, axis=1).max())
    hyperbolic = report.z_hyperbolic.values
    hyperbolic_membership = float(
        np.linalg.norm(np.einsum("nij,nj->ni", ctx.split.stack(3), hyperbolic), axis=1).max()
    )
    reconstruction = float(np.abs(central + hyperbolic - z.values).max())
    x_consistency = float(np.abs(report.x.values - y.y.values - hyperbolic).max())

    residuals = quasi_residuals(ctx.sys, f, report.x, report.z_central, ctx.ambient)

    z_size = ctx.adapted_norm(z)
    deviation = seq_norm(report.x - y.y, ctx.family, ctx.ambient)

    central_stack = ctx.split.stack(3)
    fixed = g_values(ctx, _s_values(ctx.sys, f, central_stack, y, f.evaluate(y.y.values), z.values))
    fixed_point = ctx.adapted_norm(VecSeq(ctx.window, fixed) - z)

    checks = [
        _check("quasi_residual", float(residuals.max()), tol),
        _check("central_membership", membership, tol),
        _check("hyperbolic_membership", hyperbolic_membership, tol),
        _check("decomposition", max(reconstruction, x_consistency), tol),
        _check("adapted_norm_bound", z_size, report.epsilon * (1 + 1e-12)),
        _check("deviation_bound", deviation, 2.0 * report.epsilon * (1 + 1e-12)),
        _check("fixed_point", fixed_point, tol),
        _check("pseudo_consistency", y.consistency(ctx.sys, f), 1e-12 * max(1.0, float(np.abs(y.y.values).max()))),
    ]
    verification = VerificationReport(checks)

    failures = verification.failures
    if failures:
        for check in failures[:10]:
            log.warning(f"Check '{check.name}' failed: {check.value:.6g} > {check.bound:.6g}")
        if len(failures) > 10:
            log.warning("...")

    return verification


###############################################################################


def uniqueness_probe(
    ctx: GreenContext,
    f: PerturbationSeq,
    y: PseudoTrajectory,
    epsilon: float,
    trials: int = 5,
    seed: int = 0,
    tol: float = FIXED_POINT_TOL
) -> float:
    """
    Rerun the fixed point iteration from random starts inside the ball ||z||' <= epsilon and return the largest
    adapted distance between the fixed points found (including the one reached from zero).

    :param ctx: The GreenContext.
    :param f: The perturbation.
    :param y: The pseudotrajectory.
    :param epsilon: Radius of the starting ball and requested shadowing distance.
    :param trials: Number of random starts.
    :param seed: Seed of the starting point generator.
    :param tol: Fixed point tolerance.
    :return: Max pairwise distance.
    """
    rng = named_rng(seed, "uniqueness")
    solutions = [quasi_shadow(ctx, f, y, epsilon, tol=tol).z]

    for trial in range(trials):
        values = rng.standard_normal((ctx.window.length, ctx.dim))
        start = VecSeq(ctx.window, values)
        start = start * (epsilon * rng.uniform(0.1, 1.0) / ctx.adapted_norm(start))

        try:
            solutions.append(quasi_shadow(ctx, f, y, epsilon, tol=tol, start=start).z)
        except (MaxIterationsError, NumericalError) as e:
            raise ContractionSoundnessError(
                f"Iteration from random start {trial} inside the epsilon ball did not converge: {e}",
                trial=trial,
            )

    distance = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            distance = max(distance, ctx.adapted_norm(solutions[i] - solutions[j]))

    log.info(f"Uniqueness probe over {trials} random starts: max distance {distance:.3e}")
    return distance


def shadow_ed(
    ctx: GreenContext,
    f: PerturbationSeq,
    y: PseudoTrajectory,
    epsilon: float,
    **kwargs
) -> QuasiShadowReport:
    """
    Shadowing under an exponential dichotomy: with no central bundle the quasi-trajectory is a true trajectory.
    Keyword arguments are forwarded to quasi_shadow.
    """
    if ctx.split.central_rank != 0:
        raise DomainError(
            f"Exponential dichotomy shadowing requires an empty central bundle. Central rank: {ctx.split.central_rank}"
        )

    report = quasi_shadow(ctx, f, y, epsilon, **kwargs)
    if np.any(report.z_central.values != 0):
        raise NumericalError("Central correction is nonzero although the central bundle is empty.")

    return report


def solve_affine_dense(ctx: GreenContext, f: PerturbationSeq, y: PseudoTrajectory) -> VecSeq:
    """
    Dense oracle for affine perturbations: with S z = M_S z + s_0 the fixed point of G o S solves
    (I - G M_S) z = G s_0.

    :param ctx: The GreenContext.
    :param f: An affine or zero perturbation.
    :param y: The pseudotrajectory.
    :return: The fixed point.
    """
    _check_inputs(ctx, f, y)
    B, _ = f.affine_parts()

    length = ctx.window.length
    k = ctx.dim
    size = length * k
    M_G = assemble_G_dense(ctx)

    identity = np.eye(k)
    M_S = np.zeros((size, size))
    for p in range(1, length):
        block = B[p - 1] @ (identity - ctx.split.stack(3)[p - 1])
        M_S[p * k:(p + 1) * k, (p - 1) * k:p * k] = block

    s_0 = np.zeros((length, k))
    s_0[1:] = -y.residual.values[:-1]

    solution = np.linalg.solve(np.eye(size) - M_G @ M_S, M_G @ s_0.reshape(-1))
    return VecSeq(ctx.window, solution.reshape(length, k))
