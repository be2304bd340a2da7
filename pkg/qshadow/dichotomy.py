#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Linear window systems x_{n+1} = A_n x_n, their three way splittings E^s + E^u + E^c and the verification and fitting
of partial (and strong partial) exponential dichotomy constants.
"""

import logging
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg

from .exceptions import (ConfigurationError, IllConditionedError, InvalidSplittingError, NotDichotomicError,
                         StructuralError)
from .seqspace import NormFamily, VecSeq, Window, seq_norm

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

# Default tolerance for splitting checks
SPLITTING_TOL = 1e-10

# Smallest admissible singular value of a restricted block before it is treated as singular
SIGMA_MIN = 1e-10

# Cap used for the decay rate of empty or nilpotent bundles, keeps constants finite
RATE_CAP = 36.0

BUNDLES = (1, 2, 3)

###############################################################################


def spectral_norms(matrices: np.ndarray) -> np.ndarray:
    """
    Spectral norms of a stack of matrices (or of a single matrix).
    """
    matrices = np.asarray(matrices, dtype=float)
    if matrices.shape[-1] == 0 or matrices.shape[-2] == 0:
        return np.zeros(matrices.shape[:-2])
    return np.linalg.norm(matrices, ord=2, axis=(-2, -1))


class WindowSystem(object):
    def __init__(self, window: Window, matrices: np.ndarray):
        """
        A linear system on a window: one k x k matrix A_n for every n in [lo, hi - 1].

        :param window: The window of the system.
        :param matrices: Array of shape (window length - 1, k, k).
        """
        if not isinstance(window, Window):
            raise TypeError(f"WindowSystem requires a Window. Received: {type(window)}")

        matrices = np.array(matrices, dtype=float, copy=True)
        expected = window.length - 1
        if matrices.ndim != 3 or matrices.shape[0] != expected or matrices.shape[1] != matrices.shape[2]:
            raise StructuralError(
                f"WindowSystem matrices must have shape ({expected}, k, k). Received: {matrices.shape}"
            )
        if not np.all(np.isfinite(matrices)):
            raise StructuralError("WindowSystem matrices must have finite entries.")

        matrices.flags.writeable = False
        self._window = window
        self._matrices = matrices

    @classmethod
    def constant(cls, window: Window, matrix: np.ndarray) -> "WindowSystem":
        matrix = np.asarray(matrix, dtype=float)
        return cls(window, np.repeat(matrix[None, :, :], window.length - 1, axis=0))

    @property
    def window(self) -> Window:
        return self._window

    @property
    def dim(self) -> int:
        return self._matrices.shape[1]

    @property
    def matrices(self) -> np.ndarray:
        return self._matrices

    def A(self, n: int) -> np.ndarray:
        if n not in self._window or n == self._window.hi:
            raise IndexError(f"A_n is defined for n in [{self._window.lo}, {self._window.hi - 1}]. Received: {n}")
        return self._matrices[n - self._window.lo]

    def restrict(self, window: Window) -> "WindowSystem":
        if not self._window.contains_window(window):
            raise StructuralError(f"{window} is not contained in {self._window}")
        start = window.lo - self._window.lo
        return WindowSystem(window, self._matrices[start:start + window.length - 1])

    def sup_norm(self) -> float:
        return float(spectral_norms(self._matrices).max())

    def sup_inverse_norm(self) -> float:
        """
        max_n ||A_n^{-1}||, infinite when some A_n is numerically singular.
        """
        smallest = np.linalg.svd(self._matrices, compute_uv=False)[:, -1]
        if np.any(smallest < SIGMA_MIN):
            return float("inf")
        return float((1.0 / smallest).max())

    def __str__(self):
        return f"<WindowSystem [window: [{self._window.lo}, {self._window.hi}], dim: {self.dim}]>"

    def __repr__(self):
        return str(self)


class SplittingTriple(object):
    def __init__(self, window: Window, P1: np.ndarray, P2: np.ndarray, P3: np.ndarray):
        """
        Per index projections realizing E^s + E^u + E^c.

        :param window: The window of the splitting.
        :param P1: Stable projections, array of shape (window length, k, k).
        :param P2: Unstable projections, same shape.
        :param P3: Central projections, same shape.
        """
        if not isinstance(window, Window):
            raise TypeError(f"SplittingTriple requires a Window. Received: {type(window)}")

        stacked = np.array([P1, P2, P3], dtype=float)
        if stacked.ndim != 4 or stacked.shape[1] != window.length or stacked.shape[2] != stacked.shape[3]:
            raise StructuralError(
                f"Projections must each have shape ({window.length}, k, k). Received: {stacked.shape[1:]}"
            )
        if not np.all(np.isfinite(stacked)):
            raise StructuralError("Projections must have finite entries.")

        stacked.flags.writeable = False
        self._window = window
        self._projectors = stacked

        # Lazy loaded orthonormal bases of the projection images
        self._bases: Dict[int, List[np.ndarray]] = {}

    @classmethod
    def constant(cls, window: Window, P1: np.ndarray, P2: np.ndarray, P3: np.ndarray) -> "SplittingTriple":
        def _tile(P):
            return np.repeat(np.asarray(P, dtype=float)[None, :, :], window.length, axis=0)

        return cls(window, _tile(P1), _tile(P2), _tile(P3))

    @classmethod
    def coordinate(cls, window: Window, stable: int, unstable: int, central: int) -> "SplittingTriple":
        """
        Constant coordinate projections: the first `stable` axes, then `unstable` axes, then `central` axes.
        """
        k = stable + unstable + central
        diagonals = np.zeros((3, k))
        diagonals[0, :stable] = 1
        diagonals[1, stable:stable + unstable] = 1
        diagonals[2, stable + unstable:] = 1
        return cls.constant(window, *[np.diag(d) for d in diagonals])

    @property
    def window(self) -> Window:
        return self._window

    @property
    def dim(self) -> int:
        return self._projectors.shape[2]

    @property
    def projectors(self) -> np.ndarray:
        return self._projectors

    def P(self, i: int, n: int) -> np.ndarray:
        if i not in BUNDLES:
            raise ValueError(f"Bundle index must be one of {BUNDLES}. Received: {i}")
        return self._projectors[i - 1, self._window.position(n)]

    def stack(self, i: int) -> np.ndarray:
        if i not in BUNDLES:
            raise ValueError(f"Bundle index must be one of {BUNDLES}. Received: {i}")
        return self._projectors[i - 1]

    def ranks(self, i: int) -> np.ndarray:
        return np.array([np.linalg.matrix_rank(P, tol=1e-8) for P in self.stack(i)])

    @property
    def central_rank(self) -> int:
        return int(self.ranks(3).max())

    def bases(self, i: int) -> List[np.ndarray]:
        """
        Orthonormal bases of Im P_n^i for every index of the window.
        """
        if i not in self._bases:
            self._bases[i] = [linalg.orth(P, rcond=1e-8) for P in self.stack(i)]
        return self._bases[i]

    def restrict(self, window: Window) -> "SplittingTriple":
        if not self._window.contains_window(window):
            raise StructuralError(f"{window} is not contained in {self._window}")
        start = window.lo - self._window.lo
        return SplittingTriple(window, *self._projectors[:, start:start + window.length])

    def __str__(self):
        ranks = [int(self.ranks(i).max()) for i in BUNDLES]
        return f"<SplittingTriple [window: [{self._window.lo}, {self._window.hi}], ranks (s, u, c): {ranks}]>"

    def __repr__(self):
        return str(self)


class StrongRates(NamedTuple):
    a: float
    c_back: float


class DichotomyConstants(object):
    def __init__(self, D: float, d: float, b: float, strong: Optional[StrongRates] = None):
        """
        Constants of a partial exponential dichotomy.

        :param D: The multiplier.
        :param d: Decay rate along the stable bundle.
        :param b: Growth rate along the unstable bundle.
        :param strong: Optional central growth rates (a, c_back) of a strong partial dichotomy.
        """
        for name, value in (("D", D), ("d", d), ("b", b)):
            if not np.isfinite(value) or value <= 0:
                raise ConfigurationError(f"Dichotomy constant {name} must be finite and positive. Received: {value}")

        if strong is not None:
            strong = StrongRates(float(strong[0]), float(strong[1]))
            if not 0 <= strong.a < b:
                raise ConfigurationError(f"Strong dichotomies require 0 <= a < b. Received: a={strong.a}, b={b}")
            if not 0 <= strong.c_back < d:
                raise ConfigurationError(
                    f"Strong dichotomies require 0 <= c_back < d. Received: c_back={strong.c_back}, d={d}"
                )

        self._D = float(D)
        self._d = float(d)
        self._b = float(b)
        self._strong = strong

    @property
    def D(self) -> float:
        return self._D

    @property
    def d(self) -> float:
        return self._d

    @property
    def b(self) -> float:
        return self._b

    @property
    def strong(self) -> Optional[StrongRates]:
        return self._strong

    @property
    def is_strong(self) -> bool:
        return self._strong is not None

    def replace(self, **kwargs) -> "DichotomyConstants":
        values = {"D": self._D, "d": self._d, "b": self._b, "strong": self._strong}
        values.update(kwargs)
        return DichotomyConstants(**values)

    def to_dict(self) -> Dict[str, float]:
        values = {"D": self._D, "d": self._d, "b": self._b}
        if self._strong is not None:
            values["a"] = self._strong.a
            values["c_back"] = self._strong.c_back
        return values

    @classmethod
    def from_dict(cls, values: Dict[str, float]) -> "DichotomyConstants":
        try:
            strong = None
            if "a" in values or "c_back" in values:
                strong = StrongRates(values["a"], values["c_back"])
            return cls(values["D"], values["d"], values["b"], strong)
        except KeyError as e:
            raise ConfigurationError(f"Dichotomy constants are missing {e}. Received: {values}")

    def __eq__(self, other):
        return isinstance(other, DichotomyConstants) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(sorted(self.to_dict().items())))

    def __str__(self):
        details = ", ".join(f"{k}: {v:.6g}" for k, v in self.to_dict().items())
        return f"<DichotomyConstants [{details}]>"

    def __repr__(self):
        return str(self)


###############################################################################


class SplittingReport(NamedTuple):
    idempotence: float
    sum_to_identity: float
    annihilation: float
    commutation: float
    unstable_sigma_min: float
    rank_constant: bool
    worst: Dict[str, str]
    tol: float

    @property
    def violations(self) -> List[Tuple[str, float]]:
        """
        Failing checks ordered from worst to mildest.
        """
        failing = [
            (name, value) for name, value in (
                ("idempotence", self.idempotence),
                ("sum_to_identity", self.sum_to_identity),
                ("annihilation", self.annihilation),
                ("commutation", self.commutation),
            ) if value > self.tol
        ]
        failing.sort(key=lambda item: -item[1])
        if self.unstable_sigma_min < SIGMA_MIN:
            failing.append(("unstable_invertibility", self.unstable_sigma_min))
        if not self.rank_constant:
            failing.append(("rank_constancy", 0.0))
        return failing

    @property
    def passed(self) -> bool:
        return len(self.violations) == 0

    def to_dict(self) -> Dict:
        return {
            "idempotence": self.idempotence,
            "sum_to_identity": self.sum_to_identity,
            "annihilation": self.annihilation,
            "commutation": self.commutation,
            "unstable_sigma_min": _finite_or_none(self.unstable_sigma_min),
            "rank_constant": self.rank_constant,
            "worst": dict(sorted(self.worst.items())),
            "tol": self.tol,
            "passed": self.passed,
        }


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


def _check_shapes(sys: WindowSystem, split: SplittingTriple):
    if sys.window != split.window:
        raise StructuralError(f"System and splitting windows differ: {sys.window} and {split.window}")
    if sys.dim != split.dim:
        raise StructuralError(f"System and splitting dimensions differ: {sys.dim} and {split.dim}")


def _restricted_blocks(sys: WindowSystem, split: SplittingTriple, bundle: int) -> List[np.ndarray]:
    # R_n = U_{n+1}^T A_n U_n represents A_n : Im P_n -> Im P_{n+1} in orthonormal coordinates
    bases = split.bases(bundle)
    return [bases[j + 1].T @ sys.matrices[j] @ bases[j] for j in range(sys.window.length - 1)]


def validate_splitting(
    sys: WindowSystem,
    split: SplittingTriple,
    tol: float = SPLITTING_TOL,
    raise_on_error: bool = True
) -> SplittingReport:
    """
    Check that a splitting is a valid invariant three way decomposition for the system.

    :param sys: The linear window system.
    :param split: The candidate splitting.
    :param tol: Largest accepted violation of every algebraic identity.
    :param raise_on_error: Raise an InvalidSplittingError naming the worst offender when a check fails.
    :return: A SplittingReport with the max violation of every check.
    """
    _check_shapes(sys, split)

    P = split.projectors
    k = split.dim
    identity = np.eye(k)
    worst: Dict[str, str] = {}

    def _track(name: str, norms: np.ndarray, labels: List[str]) -> float:
        flat = norms.reshape(-1)
        position = int(np.argmax(flat))
        worst[name] = labels[position]
        return float(flat[position])

    indices = list(split.window)
    labels_by_bundle = [f"P{i} at n={n}" for i in BUNDLES for n in indices]

    idempotence = _track("idempotence", spectral_norms(P @ P - P), labels_by_bundle)
    sum_to_identity = _track("sum_to_identity", spectral_norms(P.sum(axis=0) - identity), [f"n={n}" for n in indices])

    pairs = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    annihilation = _track(
        "annihilation",
        np.stack([spectral_norms(P[i] @ P[j]) for i, j in pairs]),
        [f"P{i + 1}P{j + 1} at n={n}" for i, j in pairs for n in indices]
    )

    A = sys.matrices
    commutation = _track(
        "commutation",
        np.stack([spectral_norms(A @ P[i, :-1] - P[i, 1:] @ A) for i in range(3)]),
        [f"P{i} at n={n}" for i in BUNDLES for n in indices[:-1]]
    )

    rank_constant = all(len(np.unique(split.ranks(i))) == 1 for i in BUNDLES)

    # Invertibility of A_n restricted to the unstable bundle
    unstable_sigma_min = float("inf")
    if rank_constant and split.ranks(2)[0] > 0:
        blocks = _restricted_blocks(sys, split, 2)
        smallest = np.array([linalg.svdvals(R).min() for R in blocks])
        position = int(np.argmin(smallest))
        unstable_sigma_min = float(smallest[position])
        worst["unstable_invertibility"] = f"n={indices[position]}"

    report = SplittingReport(
        idempotence=idempotence,
        sum_to_identity=sum_to_identity,
        annihilation=annihilation,
        commutation=commutation,
        unstable_sigma_min=unstable_sigma_min,
        rank_constant=rank_constant,
        worst=worst,
        tol=tol,
    )

    if not report.passed:
        name, value = report.violations[0]
        failing = ", ".join(v[0] for v in report.violations)
        message = (
            f"Invalid splitting. Worst violation: {name} ({worst.get(name, 'ranks vary along the window')}, "
            f"value {value:.3e}, tol {tol:.1e}). Failing checks: {failing}"
        )
        if raise_on_error:
            raise InvalidSplittingError(message, report=report)
        log.warning(message)

    return report


###############################################################################


def restricted_inverses(
    sys: WindowSystem,
    split: SplittingTriple,
    bundle: int = 2,
    sigma_min: float = SIGMA_MIN
) -> np.ndarray:
    """
    Matrices B_n realizing (A_n restricted to Im P_n -> Im P_{n+1})^{-1} composed with P_{n+1}, so that B_n maps
    Im P_{n+1} back onto Im P_n and annihilates the complementary bundles.

    :param sys: The linear window system.
    :param split: The splitting.
    :param bundle: Which bundle to invert on, 2 (unstable) or 3 (central).
    :param sigma_min: Smallest singular value accepted before the block is treated as singular.
    :return: Array of shape (window length - 1, k, k).
    """
    _check_shapes(sys, split)

    k = sys.dim
    bases = split.bases(bundle)
    projectors = split.stack(bundle)
    inverses = np.zeros((sys.window.length - 1, k, k))

    for j, R in enumerate(_restricted_blocks(sys, split, bundle)):
        if R.size == 0:
            continue
        if R.shape[0] != R.shape[1]:
            raise IllConditionedError(
                f"Rank of P{bundle} changes between n={sys.window.lo + j} and n={sys.window.lo + j + 1}"
            )

        U, sigma, Vt = linalg.svd(R)
        if sigma.min() < sigma_min:
            raise IllConditionedError(
                f"A_n restricted to Im P{bundle} is numerically singular at n={sys.window.lo + j} "
                f"(smallest singular value {sigma.min():.3e} < {sigma_min:.1e})",
                index=sys.window.lo + j,
                sigma=float(sigma.min()),
            )

        R_inv = (Vt.T / sigma) @ U.T
        inverses[j] = bases[j] @ R_inv @ bases[j + 1].T @ projectors[j + 1]

    return inverses


def cocycle(
    sys: WindowSystem,
    split: SplittingTriple,
    m: int,
    n: int,
    bundle: int = 2,
    sigma_min: float = SIGMA_MIN
) -> np.ndarray:
    """
    The cocycle A(m, n).

    Forward (m > n) it is the product A_{m-1} ... A_n, for m = n the identity and backward (m < n) the inverse of
    A(n, m) restricted to Im P_m (bundle) composed with P_n (bundle), annihilating the complementary bundles.

    :param sys: The linear window system.
    :param split: The splitting, used by backward requests.
    :param m: Target index.
    :param n: Source index.
    :param bundle: The bundle backward requests are restricted to, 2 (unstable) or 3 (central).
    :param sigma_min: Singularity threshold for the restricted blocks.
    :return: The k x k matrix.
    """
    window = sys.window
    if m not in window or n not in window:
        raise IndexError(f"Cocycle indices must lie in {window}. Received: m={m}, n={n}")

    if m == n:
        return np.eye(sys.dim)

    if m > n:
        product = np.eye(sys.dim)
        for j in range(n, m):
            product = sys.A(j) @ product
        return product

    # Only the blocks between m and n are needed
    sub = window.sub(m, n) if n - m >= 2 else None
    if sub is None:
        # Windows need three indices, pad on whichever side has room
        lo, hi = (m, m + 2) if m + 2 <= window.hi else (n - 2, n)
        sub = window.sub(lo, hi)

    inverses = restricted_inverses(sys.restrict(sub), split.restrict(sub), bundle, sigma_min)
    product = split.P(bundle, n)
    for j in range(n - 1, m - 1, -1):
        product = inverses[j - sub.lo] @ product
    return product


###############################################################################


def _forward_norms(sys: WindowSystem, projectors: np.ndarray) -> np.ndarray:
    """
    norms[p, g] = ||A(n + g, n) P_n|| with n the index at position p, NaN where n + g leaves the window.
    """
    length = sys.window.length
    norms = np.full((length, length), np.nan)
    products = projectors.copy()
    norms[:, 0] = spectral_norms(products)

    for g in range(1, length):
        # products[p] = A(n + g - 1, n) P_n for p in [0, length - g]
        products = sys.matrices[g - 1:g - 1 + length - g] @ products[:length - g]
        norms[:length - g, g] = spectral_norms(products)

    return norms


def _backward_norms(inverses: np.ndarray, projectors: np.ndarray) -> np.ndarray:
    """
    norms[p, g] = ||A(n - g, n) P_n|| with n the index at position p, NaN where n - g leaves the window.
    """
    length = projectors.shape[0]
    norms = np.full((length, length), np.nan)
    products = projectors.copy()
    norms[:, 0] = spectral_norms(products)

    for g in range(1, length):
        # products holds A(n - g + 1, n) P_n for positions p in [g - 1, length - 1]
        products = inverses[:length - g] @ products[1:]
        norms[g:, g] = spectral_norms(products)

    return norms


def _envelope(norms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Max over start indices for every gap, together with the start position of the maximum.
    """
    filled = np.where(np.isnan(norms), -np.inf, norms)
    return filled.max(axis=0), filled.argmax(axis=0)


def _log_multiplier(envelope: np.ndarray, rate: float, sign: float) -> float:
    """
    log of max_g envelope[g] * exp(sign * rate * g), computed in the log domain.
    """
    gaps = np.arange(envelope.shape[0])
    positive = envelope > 0
    if not np.any(positive):
        return -np.inf
    return float((np.log(envelope[positive]) + sign * rate * gaps[positive]).max())


def _fit_rate(envelope: np.ndarray, bundle_name: str) -> float:
    gaps = np.arange(envelope.shape[0])
    positive = envelope > 0

    # Empty or nilpotent bundles decay as fast as we care to represent
    if positive.sum() < 2:
        return RATE_CAP

    slope = np.polyfit(gaps[positive], np.log(envelope[positive]), 1)[0]
    rate = -float(slope)
    if rate <= 0:
        raise NotDichotomicError(
            f"No positive rate fits the {bundle_name} bundle: its norms grow at log-rate {-rate:.4g} per step.",
            bundle=bundle_name,
            log_rate=-rate,
        )

    return min(rate, RATE_CAP)


def fit_constants(
    sys: WindowSystem,
    split: SplittingTriple,
    strong: bool = False,
    validate: bool = True
) -> DichotomyConstants:
    """
    Fit the tightest dichotomy constants that hold on every pair of window indices.

    The rates d and b come from log-linear fits of the per-gap envelopes max_n ||A(n + g, n) P_n^1|| and
    max_n ||A(n - g, n) P_n^2||, the multiplier D is the largest residual factor needed for every pair. With `strong`
    the central rates a and c_back are the smallest rates that keep the central envelopes under the same D.

    :param sys: The linear window system.
    :param split: The splitting.
    :param strong: Also fit the strong central rates.
    :param validate: Validate the splitting first.
    :return: The fitted DichotomyConstants.
    """
    if validate:
        validate_splitting(sys, split)

    stable_env, _ = _envelope(_forward_norms(sys, split.stack(1)))
    unstable_env, _ = _envelope(_backward_norms(restricted_inverses(sys, split, 2), split.stack(2)))

    d = _fit_rate(stable_env, "stable")
    b = _fit_rate(unstable_env, "unstable")

    log_D = max(_log_multiplier(stable_env, d, 1.0), _log_multiplier(unstable_env, b, 1.0))
    D = float(np.exp(log_D)) if np.isfinite(log_D) else 1.0

    strong_rates = None
    if strong:
        central_fwd, _ = _envelope(_forward_norms(sys, split.stack(3)))
        central_bwd, _ = _envelope(_backward_norms(restricted_inverses(sys, split, 3), split.stack(3)))

        # The gap zero term bounds ||P_n^3|| and has no rate to absorb it
        D = max(D, float(central_fwd[0]))
        log_D = np.log(D)

        def _growth(envelope: np.ndarray) -> float:
            gaps = np.arange(1, envelope.shape[0])
            tail = envelope[1:]
            positive = tail > 0
            if not np.any(positive):
                return 0.0
            return max(0.0, float(((np.log(tail[positive]) - log_D) / gaps[positive]).max()))

        a = _growth(central_fwd)
        c_back = _growth(central_bwd)
        if a >= b:
            raise NotDichotomicError(f"Central forward growth a={a:.4g} is not dominated by b={b:.4g}")
        if c_back >= d:
            raise NotDichotomicError(f"Central backward growth c_back={c_back:.4g} is not dominated by d={d:.4g}")
        strong_rates = StrongRates(a, c_back)

    constants = DichotomyConstants(D, d, b, strong_rates)
    log.info(f"Fitted {constants} on {sys.window}; sup ||A_n|| = {sys.sup_norm():.6g}")

    return constants


class ConstantsReport(NamedTuple):
    D: float
    stable_max: float
    stable_pair: Tuple[int, int]
    unstable_max: float
    unstable_pair: Tuple[int, int]
    central_forward_max: Optional[float]
    central_forward_pair: Optional[Tuple[int, int]]
    central_backward_max: Optional[float]
    central_backward_pair: Optional[Tuple[int, int]]
    tol: float

    @property
    def ratio(self) -> float:
        """
        Worst multiplier relative to D over every checked inequality.
        """
        values = [self.stable_max, self.unstable_max, self.central_forward_max, self.central_backward_max]
        return max(v for v in values if v is not None) / self.D

    @property
    def passed(self) -> bool:
        return self.ratio <= 1.0 + self.tol

    def to_dict(self) -> Dict:
        return {
            "D": self.D,
            "stable_max": self.stable_max,
            "stable_pair": list(self.stable_pair),
            "unstable_max": self.unstable_max,
            "unstable_pair": list(self.unstable_pair),
            "central_forward_max": self.central_forward_max,
            "central_forward_pair": list(self.central_forward_pair) if self.central_forward_pair else None,
            "central_backward_max": self.central_backward_max,
            "central_backward_pair": list(self.central_backward_pair) if self.central_backward_pair else None,
            "ratio": self.ratio,
            "tol": self.tol,
            "passed": self.passed,
        }


def _worst_pair(norms: np.ndarray, rate: float, lo: int, forward: bool) -> Tuple[float, Tuple[int, int]]:
    # Weighted values norms[p, g] * exp(rate * g), computed in the log domain
    gaps = np.arange(norms.shape[1])[None, :]
    with np.errstate(divide="ignore"):
        logs = np.where(np.isnan(norms) | (norms <= 0), -np.inf, np.log(np.where(norms > 0, norms, 1.0)))
    weighted = logs + rate * gaps
    position, gap = np.unravel_index(int(np.argmax(weighted)), weighted.shape)
    value = float(np.exp(weighted[position, gap])) if np.isfinite(weighted[position, gap]) else 0.0
    n = lo + int(position)
    m = n + int(gap) if forward else n - int(gap)
    return value, (m, n)


def check_constants(
    sys: WindowSystem,
    split: SplittingTriple,
    consts: DichotomyConstants,
    tol: float = 1e-9
) -> ConstantsReport:
    """
    Check dichotomy constants on every pair of window indices.

    :param sys: The linear window system.
    :param split: The splitting.
    :param consts: The constants to check. Strong rates are checked when present.
    :param tol: Relative slack: the check passes when every weighted norm is at most D * (1 + tol).
    :return: A ConstantsReport listing the worst pair of every inequality.
    """
    _check_shapes(sys, split)
    lo = sys.window.lo

    stable_max, stable_pair = _worst_pair(_forward_norms(sys, split.stack(1)), consts.d, lo, True)
    unstable_max, unstable_pair = _worst_pair(
        _backward_norms(restricted_inverses(sys, split, 2), split.stack(2)), consts.b, lo, False
    )

    central_forward = (None, None)
    central_backward = (None, None)
    if consts.is_strong:
        central_forward = _worst_pair(_forward_norms(sys, split.stack(3)), -consts.strong.a, lo, True)
        central_backward = _worst_pair(
            _backward_norms(restricted_inverses(sys, split, 3), split.stack(3)), -consts.strong.c_back, lo, False
        )

    report = ConstantsReport(
        D=consts.D,
        stable_max=stable_max,
        stable_pair=stable_pair,
        unstable_max=unstable_max,
        unstable_pair=unstable_pair,
        central_forward_max=central_forward[0],
        central_forward_pair=central_forward[1],
        central_backward_max=central_backward[0],
        central_backward_pair=central_backward[1],
        tol=tol,
    )

    if not report.passed:
        log.warning(f"Dichotomy constants {consts} fail on {sys.window}: worst ratio {report.ratio:.6g}")

    return report


def projection_bounds(split: SplittingTriple) -> Tuple[float, float, float]:
    """
    max_n ||P_n^i|| for i = 1, 2, 3.
    """
    return tuple(float(spectral_norms(split.stack(i)).max()) for i in BUNDLES)


###############################################################################


class AdaptedDecomposition(NamedTuple):
    central: VecSeq
    hyperbolic: VecSeq


def decompose(x: VecSeq, split: SplittingTriple) -> AdaptedDecomposition:
    """
    Split a sequence into its central part x_n^c = P_n^3 x_n and hyperbolic part x_n - x_n^c.
    """
    if x.window != split.window or x.dim != split.dim:
        raise StructuralError(f"Sequence {x} does not match splitting {split}")

    central = np.einsum("nij,nj->ni", split.stack(3), x.values)
    return AdaptedDecomposition(VecSeq(x.window, central), VecSeq(x.window, x.values - central))


def adapted_norm(x: VecSeq, split: SplittingTriple, family: NormFamily, ambient: str = "euclidean") -> float:
    """
    max(||x^c||, ||x^{s,u}||) in the chosen sequence norm.
    """
    parts = decompose(x, split)
    return max(seq_norm(parts.central, family, ambient), seq_norm(parts.hyperbolic, family, ambient))
