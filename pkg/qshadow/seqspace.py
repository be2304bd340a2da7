#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Sequence norms on finite windows of the integers.

A window [lo, hi] stands in for the full index set; sequences are treated as zero outside of it. Three families of
admissible sequence norms are available (sup, lp and Orlicz / Luxemburg norms) and are lifted to sequences of vectors
by taking the family norm of the pointwise vector norms.
"""

import logging
import operator
from typing import Callable, Dict, Iterator, Optional, Union

import numpy as np
import pandas as pd
from scipy import optimize

from .exceptions import ConfigurationError, NumericalError, StructuralError

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

AMBIENTS = ("euclidean", "sup")

# Relative tolerance of the Luxemburg bisection
LUXEMBURG_RTOL = 1e-12

MIN_WINDOW_LENGTH = 3

###############################################################################


class Window(object):
    def __init__(self, lo: int, hi: int):
        """
        A finite, contiguous block of integer indices [lo, hi].

        :param lo: First index of the window.
        :param hi: Last index of the window (inclusive).
        """
        try:
            lo = operator.index(lo)
            hi = operator.index(hi)
        except TypeError:
            raise ConfigurationError(f"Window bounds must be integers. Received: lo={lo!r}, hi={hi!r}")

        if lo >= hi:
            raise ConfigurationError(f"Window requires lo < hi. Received: lo={lo}, hi={hi}")
        if hi - lo + 1 < MIN_WINDOW_LENGTH:
            raise ConfigurationError(
                f"Window must contain at least {MIN_WINDOW_LENGTH} indices. Received: [{lo}, {hi}]"
            )

        self._lo = int(lo)
        self._hi = int(hi)

    @property
    def lo(self) -> int:
        return self._lo

    @property
    def hi(self) -> int:
        return self._hi

    @property
    def length(self) -> int:
        return self._hi - self._lo + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self._lo, self._hi + 1)

    def position(self, n: int) -> int:
        """
        Array position of the index n inside this window.
        """
        if n not in self:
            raise IndexError(f"Index {n} is outside of {self}")
        return int(n) - self._lo

    def contains_window(self, other: "Window") -> bool:
        return self._lo <= other.lo and other.hi <= self._hi

    def sub(self, lo: int, hi: int) -> "Window":
        """
        Create a window [lo, hi] that must lie inside this one.
        """
        sub = Window(lo, hi)
        if not self.contains_window(sub):
            raise StructuralError(f"{sub} is not contained in {self}")
        return sub

    def to_config(self) -> Dict[str, int]:
        return {"lo": self._lo, "hi": self._hi}

    @classmethod
    def from_config(cls, config: Dict[str, int]) -> "Window":
        try:
            return cls(config["lo"], config["hi"])
        except (KeyError, TypeError):
            raise ConfigurationError(f"Window configuration requires 'lo' and 'hi'. Received: {config}")

    def __contains__(self, n) -> bool:
        try:
            n = operator.index(n)
        except TypeError:
            return False
        return self._lo <= n <= self._hi

    def __iter__(self) -> Iterator[int]:
        return iter(range(self._lo, self._hi + 1))

    def __len__(self):
        return self.length

    def __eq__(self, other):
        return isinstance(other, Window) and self._lo == other.lo and self._hi == other.hi

    def __hash__(self):
        return hash((self._lo, self._hi))

    def __str__(self):
        return f"<Window [lo: {self._lo}, hi: {self._hi}]>"

    def __repr__(self):
        return str(self)


class OrliczFunction(object):
    KINDS = ("power", "exp", "custom")

    def __init__(
        self,
        kind: str = "power",
        exponent: float = 2.0,
        fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        inverse: Optional[Callable[[float], float]] = None,
        normalize: bool = True
    ):
        """
        A Young function psi used to build an Orlicz sequence norm. Only finite functions are accepted.

        :param kind: One of "power" (psi(t) = t ** exponent), "exp" (psi(t) = exp(t) - 1) or "custom".
        :param exponent: Exponent for the power function, must be at least one.
        :param fn: The vectorized function for the custom kind.
        :param inverse: Optional inverse of the custom function. Computed by root finding when not provided.
        :param normalize: Rescale the Luxemburg value so that the norm of an indicator sequence is one.
        """
        if kind not in self.KINDS:
            raise ConfigurationError(f"Orlicz function kind must be one of {self.KINDS}. Received: '{kind}'")

        if kind == "power":
            if not np.isfinite(exponent) or exponent < 1:
                raise ConfigurationError(
                    f"Power Orlicz functions require a finite exponent of at least one. Received: {exponent}"
                )
        if kind == "custom":
            if fn is None or not callable(fn):
                raise ConfigurationError("Custom Orlicz functions require a callable 'fn'.")
            if inverse is not None and not callable(inverse):
                raise ConfigurationError("Custom Orlicz inverse must be callable.")

        self._kind = kind
        self._exponent = float(exponent)
        self._fn = fn
        self._inverse = inverse
        self.normalize = normalize

        if kind == "custom":
            self._check_custom()

    @classmethod
    def power(cls, exponent: float = 2.0, normalize: bool = True) -> "OrliczFunction":
        return cls("power", exponent=exponent, normalize=normalize)

    @classmethod
    def exp(cls, normalize: bool = True) -> "OrliczFunction":
        return cls("exp", normalize=normalize)

    @classmethod
    def custom(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        inverse: Optional[Callable[[float], float]] = None,
        normalize: bool = True
    ) -> "OrliczFunction":
        return cls("custom", fn=fn, inverse=inverse, normalize=normalize)

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def exponent(self) -> float:
        return self._exponent

    def _check_custom(self):
        # Sample the function on a grid spanning several orders of magnitude
        grid = np.concatenate([[0.0], np.logspace(-6, 2, 400)])
        with np.errstate(over="ignore", invalid="ignore"):
            values = np.asarray(self(grid), dtype=float)

        if values.shape != grid.shape:
            raise ConfigurationError("Custom Orlicz functions must be vectorized over numpy arrays.")
        if values[0] != 0:
            raise ConfigurationError(f"Orlicz functions must satisfy psi(0) = 0. Received psi(0) = {values[0]}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("Orlicz functions must be finite on [0, inf).")
        if np.any(np.diff(values) < -1e-12 * np.maximum(1.0, np.abs(values[1:]))):
            raise ConfigurationError("Orlicz functions must be nondecreasing.")
        if values[-1] <= 0:
            raise ConfigurationError("Orlicz functions must be nonconstant.")

        # Convexity on an evenly spaced grid
        linear = np.linspace(0, 10, 201)
        second = np.diff(np.asarray(self(linear), dtype=float), 2)
        if np.any(second < -1e-9 * np.maximum(1.0, np.abs(second).max())):
            raise ConfigurationError("Orlicz functions must be convex.")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self._kind == "power":
            return t ** self._exponent
        if self._kind == "exp":
            with np.errstate(over="ignore"):
                return np.expm1(t)
        return np.asarray(self._fn(t), dtype=float)

    def inverse(self, v: float) -> float:
        """
        The generalized inverse sup{t : psi(t) <= v} for v > 0.
        """
        if v <= 0:
            raise ValueError(f"Orlicz inverse is only evaluated at positive levels. Received: {v}")

        if self._kind == "power":
            return float(v ** (1.0 / self._exponent))
        if self._kind == "exp":
            return float(np.log1p(v))
        if self._inverse is not None:
            return float(self._inverse(v))

        # Expand the bracket until psi crosses the level
        hi = 1.0
        for _ in range(200):
            if float(self(np.array([hi]))[0]) >= v:
                break
            hi *= 2.0
        else:
            raise NumericalError(f"Could not bracket the Orlicz inverse at level {v}")

        return float(optimize.brentq(lambda t: float(self(np.array([t]))[0]) - v, 0.0, hi, xtol=1e-15))

    @property
    def unit_level(self) -> float:
        return self.inverse(1.0)

    def to_config(self) -> Dict[str, Union[str, float]]:
        if self._kind == "custom":
            raise ConfigurationError("Custom Orlicz functions can not be written to a configuration.")
        if self._kind == "power":
            return {"psi": "power", "exponent": self._exponent}
        return {"psi": "exp"}

    def __str__(self):
        if self._kind == "power":
            return f"<OrliczFunction [power, exponent: {self._exponent}]>"
        return f"<OrliczFunction [{self._kind}]>"

    def __repr__(self):
        return str(self)


class NormFamily(object):
    VARIANTS = ("sup", "lp", "orlicz")

    def __init__(self, variant: str, p: Optional[float] = None, psi: Optional[OrliczFunction] = None):
        """
        A family of admissible sequence norms.

        :param variant: One of "sup", "lp" or "orlicz".
        :param p: The exponent of the lp family, a real number of at least one.
        :param psi: The Orlicz function of the orlicz family.
        """
        if variant not in self.VARIANTS:
            raise ConfigurationError(f"Norm family must be one of {self.VARIANTS}. Received: '{variant}'")

        if variant == "lp":
            if p is None or not np.isfinite(p) or p < 1:
                raise ConfigurationError(f"The lp family requires a finite p of at least one. Received: {p}")
            p = float(p)
        if variant == "orlicz":
            if not isinstance(psi, OrliczFunction):
                raise ConfigurationError(f"The orlicz family requires an OrliczFunction. Received: {psi!r}")

        self._variant = variant
        self._p = p if variant == "lp" else None
        self._psi = psi if variant == "orlicz" else None

    @classmethod
    def sup(cls) -> "NormFamily":
        return cls("sup")

    @classmethod
    def c0(cls) -> "NormFamily":
        # On a finite window c0 and the sup space share their norm
        log.info("The c0 norm coincides with the sup norm on finite windows, using the sup family.")
        return cls("sup")

    @classmethod
    def lp(cls, p: float) -> "NormFamily":
        return cls("lp", p=p)

    @classmethod
    def orlicz(cls, psi: Optional[OrliczFunction] = None) -> "NormFamily":
        return cls("orlicz", psi=psi if psi is not None else OrliczFunction.power(2.0))

    @property
    def variant(self) -> str:
        return self._variant

    @property
    def p(self) -> Optional[float]:
        return self._p

    @property
    def psi(self) -> Optional[OrliczFunction]:
        return self._psi

    @classmethod
    def from_config(cls, config: Dict) -> "NormFamily":
        """
        Build a family from its configuration form, for example {"norm": "lp", "p": 2}.
        """
        if not isinstance(config, dict) or "norm" not in config:
            raise ConfigurationError(f"Norm family configuration requires a 'norm' key. Received: {config}")

        norm = config["norm"]
        if norm == "sup":
            return cls.sup()
        if norm == "c0":
            return cls.c0()
        if norm == "lp":
            if "p" not in config:
                raise ConfigurationError(f"The lp family requires 'p'. Received: {config}")
            return cls.lp(config["p"])
        if norm == "orlicz":
            psi = config.get("psi", "power")
            if psi == "power":
                return cls.orlicz(OrliczFunction.power(config.get("exponent", 2.0)))
            if psi == "exp":
                return cls.orlicz(OrliczFunction.exp())
            raise ConfigurationError(f"Unknown Orlicz function '{psi}'. Available: 'power', 'exp'")

        raise ConfigurationError(f"Unknown norm family '{norm}'. Available: 'sup', 'c0', 'lp', 'orlicz'")

    @classmethod
    def parse(cls, text: str) -> "NormFamily":
        """
        Parse the command line shorthand: sup, c0, l1, l2, lp:<p>, orlicz:power:<e> or orlicz:exp.
        """
        parts = text.strip().lower().split(":")
        head = parts[0]
        try:
            if head in ("sup", "c0") and len(parts) == 1:
                return cls.from_config({"norm": head})
            if head.startswith("l") and head[1:].replace(".", "", 1).isdigit() and len(parts) == 1:
                return cls.lp(float(head[1:]))
            if head == "lp" and len(parts) == 2:
                return cls.lp(float(parts[1]))
            if head == "orlicz" and len(parts) == 3 and parts[1] == "power":
                return cls.orlicz(OrliczFunction.power(float(parts[2])))
            if head == "orlicz" and len(parts) == 2 and parts[1] == "exp":
                return cls.orlicz(OrliczFunction.exp())
        except ValueError as e:
            raise ConfigurationError(f"Could not parse norm family '{text}': {e}")

        raise ConfigurationError(
            f"Could not parse norm family '{text}'. "
            f"Expected one of: sup, c0, l1, l2, lp:<p>, orlicz:power:<e>, orlicz:exp"
        )

    def to_config(self) -> Dict[str, Union[str, float]]:
        if self._variant == "sup":
            return {"norm": "sup"}
        if self._variant == "lp":
            return {"norm": "lp", "p": self._p}
        return {"norm": "orlicz", **self._psi.to_config()}

    def __eq__(self, other):
        if not isinstance(other, NormFamily) or other.variant != self._variant:
            return False
        if self._variant == "orlicz" and (self._psi.kind == "custom" or other.psi.kind == "custom"):
            return self._psi is other.psi
        return self.to_config() == other.to_config()

    def __hash__(self):
        return hash(self._variant)

    def __str__(self):
        if self._variant == "lp":
            return f"<NormFamily [lp, p: {self._p}]>"
        if self._variant == "orlicz":
            return f"<NormFamily [orlicz, psi: {self._psi}]>"
        return "<NormFamily [sup]>"

    def __repr__(self):
        return str(self)


###############################################################################


def vector_norms(values: np.ndarray, ambient: str = "euclidean") -> np.ndarray:
    """
    Norms of the rows of a (length, k) array in the chosen ambient norm of R^k.
    """
    if ambient not in AMBIENTS:
        raise ConfigurationError(f"Ambient norm must be one of {AMBIENTS}. Received: '{ambient}'")

    values = np.asarray(values, dtype=float)
    if ambient == "euclidean":
        return np.linalg.norm(values, axis=-1)
    return np.abs(values).max(axis=-1)


def _luxemburg(s: np.ndarray, psi: OrliczFunction) -> float:
    nonzero = s[s > 0]
    if nonzero.size == 0:
        return 0.0

    top = float(nonzero.max())

    def excess(c: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.sum(psi(nonzero / c))) - 1.0

    # The modular c -> sum(psi(|s_n| / c)) is nonincreasing, these bounds bracket the level set by construction
    lo = top / psi.inverse(1.0)
    hi = top / psi.inverse(1.0 / nonzero.size)

    # Custom functions with a loose inverse may need a wider bracket
    attempts = 0
    while excess(lo) < 0 and attempts < 200:
        lo /= 2.0
        attempts += 1
    while excess(hi) > 0 and attempts < 400:
        hi *= 2.0
        attempts += 1
    if excess(lo) < 0 or excess(hi) > 0:
        raise NumericalError(f"Could not bracket the Luxemburg value. Bracket: [{lo}, {hi}]")

    if excess(lo) == 0 or lo == hi:
        value = lo
    elif excess(hi) == 0:
        value = hi
    else:
        value = optimize.bisect(excess, lo, hi, xtol=np.finfo(float).tiny, rtol=LUXEMBURG_RTOL, maxiter=400)

    if psi.normalize:
        value *= psi.unit_level

    return float(value)


def scalar_norm(s: np.ndarray, family: NormFamily) -> float:
    """
    The sequence norm of a real sequence on a window.

    :param s: One dimensional array holding the sequence on the window.
    :param family: The norm family to evaluate.
    :return: The norm value.
    """
    if not isinstance(family, NormFamily):
        raise ConfigurationError(f"Expected a NormFamily. Received: {family!r}")

    s = np.abs(np.asarray(s, dtype=float))
    if s.ndim != 1:
        raise StructuralError(f"Scalar sequences must be one dimensional. Received shape: {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NumericalError("Sequence norms are only defined for finite sequences.")
    if s.size == 0:
        return 0.0

    if family.variant == "sup":
        return float(s.max())

    if family.variant == "lp":
        top = s.max()
        if top == 0:
            return 0.0
        # Scale first so large exponents do not overflow
        return float(top * np.sum((s / top) ** family.p) ** (1.0 / family.p))

    return _luxemburg(s, family.psi)


def shift(s: np.ndarray, m: int) -> np.ndarray:
    """
    The shifted sequence s^m with s^m_n = s_{n + m}. Entries that would come from outside of the window are zero.

    :param s: One dimensional array holding the sequence on the window.
    :param m: The shift.
    :return: The shifted sequence on the same window.
    """
    s = np.asarray(s, dtype=float)
    m = operator.index(m)
    length = s.shape[0]
    shifted = np.zeros_like(s)

    if abs(m) >= length:
        return shifted
    if m >= 0:
        shifted[:length - m] = s[m:]
    else:
        shifted[-m:] = s[:length + m]

    return shifted


###############################################################################


class VecSeq(object):
    def __init__(self, window: Window, values: np.ndarray):
        """
        A window indexed sequence of vectors. Values are copied and frozen on construction.

        :param window: The window the sequence lives on.
        :param values: Array of shape (window length, k) with one row per window index.
        """
        if not isinstance(window, Window):
            raise TypeError(f"VecSeq requires a Window. Received: {type(window)}")

        values = np.array(values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[0] != window.length or values.shape[1] < 1:
            raise StructuralError(
                f"VecSeq values must have shape ({window.length}, k) with k >= 1. Received: {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalError("VecSeq values must be finite.")

        values.flags.writeable = False
        self._window = window
        self._values = values

    @classmethod
    def zeros(cls, window: Window, dim: int) -> "VecSeq":
        return cls(window, np.zeros((window.length, dim)))

    @classmethod
    def delta(cls, window: Window, n: int, vector: np.ndarray) -> "VecSeq":
        """
        The sequence that is zero everywhere except at index n.
        """
        vector = np.asarray(vector, dtype=float)
        values = np.zeros((window.length, vector.shape[0]))
        values[window.position(n)] = vector
        return cls(window, values)

    @classmethod
    def from_function(cls, window: Window, fn: Callable[[int], np.ndarray]) -> "VecSeq":
        return cls(window, np.array([np.asarray(fn(n), dtype=float) for n in window]))

    @property
    def window(self) -> Window:
        return self._window

    @property
    def dim(self) -> int:
        return self._values.shape[1]

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __getitem__(self, n: int) -> np.ndarray:
        return self._values[self._window.position(n)]

    def pointwise_norms(self, ambient: str = "euclidean") -> np.ndarray:
        return vector_norms(self._values, ambient)

    def norm(self, family: NormFamily, ambient: str = "euclidean") -> float:
        return seq_norm(self, family, ambient)

    def replace(self, n: int, vector: np.ndarray) -> "VecSeq":
        values = self._values.copy()
        values[self._window.position(n)] = vector
        return VecSeq(self._window, values)

    def restrict(self, window: Window) -> "VecSeq":
        if not self._window.contains_window(window):
            raise StructuralError(f"{window} is not contained in {self._window}")
        start = self._window.position(window.lo)
        return VecSeq(window, self._values[start:start + window.length])

    def _check_compatible(self, other: "VecSeq"):
        if not isinstance(other, VecSeq):
            raise TypeError(f"Expected a VecSeq. Received: {type(other)}")
        if other.window != self._window or other.dim != self.dim:
            raise StructuralError(f"Incompatible sequences: {self} and {other}")

    def __add__(self, other: "VecSeq") -> "VecSeq":
        self._check_compatible(other)
        return VecSeq(self._window, self._values + other.values)

    def __sub__(self, other: "VecSeq") -> "VecSeq":
        self._check_compatible(other)
        return VecSeq(self._window, self._values - other.values)

    def __neg__(self) -> "VecSeq":
        return VecSeq(self._window, -self._values)

    def __mul__(self, scalar: float) -> "VecSeq":
        return VecSeq(self._window, self._values * float(scalar))

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, VecSeq)
            and other.window == self._window
            and other.dim == self.dim
            and np.array_equal(other.values, self._values)
        )

    def __hash__(self):
        return hash((self._window, self._values.tobytes()))

    def to_frame(self) -> pd.DataFrame:
        """
        Frame with columns n, c0, ..., c{k-1}: one row per window index.
        """
        frame = pd.DataFrame(self._values, columns=[f"c{i}" for i in range(self.dim)])
        frame.insert(0, "n", self._window.indices)
        return frame

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        window: Optional[Window] = None,
        dim: Optional[int] = None
    ) -> "VecSeq":
        """
        Read a frame with columns n, c0, ..., c{k-1}. Indices missing from the frame are zero vectors.

        :param frame: The frame to read.
        :param window: The window to place the sequence on. Defaults to the span of the frame's indices.
        :param dim: Expected dimension. Defaults to the number of component columns.
        """
        if "n" not in frame.columns:
            raise StructuralError(f"Sequence frames require an 'n' column. Received columns: {list(frame.columns)}")

        components = [c for c in frame.columns if c != "n"]
        expected = [f"c{i}" for i in range(len(components))]
        if components != expected:
            raise StructuralError(f"Sequence frame components must be named {expected}. Received: {components}")
        if dim is not None and dim != len(components):
            raise StructuralError(f"Expected {dim} components. Received: {len(components)}")

        indices = frame["n"].to_numpy()
        if not np.issubdtype(indices.dtype, np.integer):
            raise StructuralError("Sequence frame 'n' column must hold integers.")
        if len(np.unique(indices)) != len(indices):
            raise StructuralError("Sequence frame 'n' column holds duplicate indices.")

        if window is None:
            window = Window(int(indices.min()), int(indices.max()))

        values = np.zeros((window.length, len(components)))
        for n, row in zip(indices, frame[components].to_numpy(dtype=float)):
            values[window.position(int(n))] = row

        return cls(window, values)

    def __str__(self):
        return f"<VecSeq [window: [{self._window.lo}, {self._window.hi}], dim: {self.dim}]>"

    def __repr__(self):
        return str(self)


def seq_norm(x: VecSeq, family: NormFamily, ambient: str = "euclidean") -> float:
    """
    The norm of a vector sequence: the family norm of its pointwise ambient norms.

    :param x: The vector sequence.
    :param family: The norm family.
    :param ambient: Norm on R^k, "euclidean" or "sup".
    :return: The norm value.
    """
    return scalar_norm(x.pointwise_norms(ambient), family)
