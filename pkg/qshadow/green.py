#!/usr/bin/env python
# -*- coding: utf-8 -*-

import logging
from typing import Optional

import numpy as np

from .dichotomy import (DichotomyConstants, SplittingTriple, WindowSystem, adapted_norm, check_constants,
                        restricted_inverses, validate_splitting)
from .exceptions import ConfigurationError, DomainError, NotDichotomicError, ResourceError, StructuralError
from .parallel import thread_map
from .random_utils import named_rng
from .seqspace import AMBIENTS, NormFamily, VecSeq

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

# Relative size of the central component tolerated in inputs to the hyperbolic series
CENTRAL_TOL = 1e-10

DENSE_MAX_SIZE = 4000

# Columns handled by one dense assembly task
DENSE_BLOCK = 256

###############################################################################


class GreenContext(object):
    def __init__(
        self,
        sys: WindowSystem,
        split: SplittingTriple,
        consts: DichotomyConstants,
        family: NormFamily,
        ambient: str = "euclidean",
        validate: bool = True
    ):
        """
        Everything the Green type operators need: the system, its splitting, verified dichotomy constants and the
        sequence norm used for the adapted norm.

        :param sys: The linear window system.
        :param split: The splitting of the system.
        :param consts: The dichotomy constants.
        :param family: The sequence norm family.
        :param ambient: Norm on R^k, "euclidean" or "sup".
        :param validate: Validate the splitting and check the constants on every window pair.
        """
        if not isinstance(family, NormFamily):
            raise ConfigurationError(f"GreenContext requires a NormFamily. Received: {family!r}")
        if ambient not in AMBIENTS:
            raise ConfigurationError(f"Ambient norm must be one of {AMBIENTS}. Received: '{ambient}'")

        if validate:
            validate_splitting(sys, split)
            report = check_constants(sys, split, consts)
            if not report.passed:
                raise NotDichotomicError(
                    f"Dichotomy constants {consts} do not hold on {sys.window} (worst ratio {report.ratio:.6g})",
                    report=report,
                )
        elif sys.window != split.window or sys.dim != split.dim:
            raise StructuralError(f"System {sys} and splitting {split} do not match")

        self._sys = sys
        self._split = split
        self._consts = consts
        self._family = family
        self._ambient = ambient

        # Lazy loaded
        self._unstable_inverses = None

    @property
    def sys(self) -> WindowSystem:
        return self._sys

    @property
    def split(self) -> SplittingTriple:
        return self._split

    @property
    def consts(self) -> DichotomyConstants:
        return self._consts

    @property
    def family(self) -> NormFamily:
        return self._family

    @property
    def ambient(self) -> str:
        return self._ambient

    @property
    def window(self):
        return self._sys.window

    @property
    def dim(self) -> int:
        return self._sys.dim

    @property
    def G_bound(self) -> float:
        return G_norm_upper(self._consts)

    @property
    def unstable_inverses(self) -> np.ndarray:
        if self._unstable_inverses is None:
            self._unstable_inverses = restricted_inverses(self._sys, self._split, 2)
        return self._unstable_inverses

    def with_family(self, family: NormFamily, ambient: Optional[str] = None) -> "GreenContext":
        """
        The same context measured in another sequence norm, without repeating the checks.
        """
        ctx = GreenContext(
            self._sys, self._split, self._consts, family, ambient or self._ambient, validate=False
        )
        ctx._unstable_inverses = self._unstable_inverses
        return ctx

    def adapted_norm(self, x: VecSeq) -> float:
        return adapted_norm(x, self._split, self._family, self._ambient)

    def __str__(self):
        return f"<GreenContext [window: [{self.window.lo}, {self.window.hi}], consts: {self._consts}]>"

    def __repr__(self):
        return str(self)


###############################################################################


def _as_batch(values: np.ndarray) -> np.ndarray:
    return values[:, :, None] if values.ndim == 2 else values


def asu_values(ctx: GreenContext, values: np.ndarray) -> np.ndarray:
    """
    The hyperbolic series on raw arrays of shape (length, k) or a batch of shape (length, k, batch). No domain check.
    """
    squeeze = values.ndim == 2
    Y = _as_batch(np.asarray(values, dtype=float))
    A = ctx.sys.matrices
    P1 = ctx.split.stack(1)
    P2 = ctx.split.stack(2)
    inverses = ctx.unstable_inverses
    length = Y.shape[0]

    stable_in = P1 @ Y
    unstable_in = P2 @ Y

    # u_n = sum over m <= n of A(n, m) P_m^1 y_m, accumulated upward
    u = np.empty_like(Y)
    u[0] = stable_in[0]
    for p in range(1, length):
        u[p] = A[p - 1] @ u[p - 1] + stable_in[p]

    # v_n = sum over m > n of A(n, m) P_m^2 y_m, accumulated downward
    v = np.empty_like(Y)
    v[length - 1] = 0.0
    for p in range(length - 2, -1, -1):
        v[p] = inverses[p] @ (unstable_in[p + 1] + v[p + 1])

    out = u - v
    return out[:, :, 0] if squeeze else out


def g_values(ctx: GreenContext, values: np.ndarray) -> np.ndarray:
    """
    The operator G on raw arrays of shape (length, k) or (length, k, batch).
    """
    squeeze = values.ndim == 2
    X = _as_batch(np.asarray(values, dtype=float))
    central = ctx.split.stack(3) @ X
    out = -central + asu_values(ctx, X - central)
    return out[:, :, 0] if squeeze else out


def apply_Asu(ctx: GreenContext, y: VecSeq) -> VecSeq:
    """
    Apply the Green type operator of the hyperbolic bundle:

        (A y)_n = sum_{m <= n} A(n, m) P_m^1 y_m - sum_{m > n} A(n, m) P_m^2 y_m

    with both sums running over the window.

    :param ctx: The GreenContext.
    :param y: A sequence with values in the hyperbolic bundle.
    :return: The sequence x solving x_n - A_{n-1} x_{n-1} = y_n for n in (lo, hi].
    """
    if y.window != ctx.window or y.dim != ctx.dim:
        raise StructuralError(f"Sequence {y} does not match {ctx}")

    central = np.einsum("nij,nj->ni", ctx.split.stack(3), y.values)
    central_size = float(np.linalg.norm(central, axis=1).max())
    allowed = CENTRAL_TOL * max(1.0, float(np.linalg.norm(y.values, axis=1).max()))
    if central_size > allowed:
        raise DomainError(
            f"Input to the hyperbolic series has a central component of size {central_size:.3e} "
            f"(allowed {allowed:.1e})",
            central_size=central_size,
        )

    return VecSeq(ctx.window, asu_values(ctx, y.values))


def apply_G(ctx: GreenContext, x: VecSeq) -> VecSeq:
    """
    G x = -x^c + A x^{s,u}.
    """
    if x.window != ctx.window or x.dim != ctx.dim:
        raise StructuralError(f"Sequence {x} does not match {ctx}")
    return VecSeq(ctx.window, g_values(ctx, x.values))


def G_norm_upper(consts: DichotomyConstants) -> float:
    """
    Upper bound for the norm of G in the adapted norm, valid for every admissible sequence norm:

        max(1, D / (1 - e^-d) + D e^-b / (1 - e^-b))

    :param consts: The dichotomy constants.
    :return: The bound.
    """
    stable = consts.D / -np.expm1(-consts.d)
    unstable = consts.D * np.exp(-consts.b) / -np.expm1(-consts.b)
    return float(max(1.0, stable + unstable))


def assemble_G_dense(
    ctx: GreenContext,
    max_size: int = DENSE_MAX_SIZE,
    n_workers: Optional[int] = None,
    show_progress: bool = False
) -> np.ndarray:
    """
    Dense matrix of G acting on stacked coordinates: position p and component i map to row p * k + i.

    :param ctx: The GreenContext.
    :param max_size: Largest accepted window length times dimension.
    :param n_workers: Number of threads assembling column blocks.
    :param show_progress: Boolean option to show or hide progress bar.
    :return: Square matrix of size window length times k.
    """
    length = ctx.window.length
    k = ctx.dim
    size = length * k
    if size > max_size:
        raise ResourceError(f"Dense assembly of size {size} exceeds the cap of {max_size}", size=size)

    # Compute the unstable inverses once before the threads share them
    ctx.unstable_inverses

    def _block(start: int) -> np.ndarray:
        stop = min(start + DENSE_BLOCK, size)
        columns = np.zeros((size, stop - start))
        columns[np.arange(start, stop), np.arange(stop - start)] = 1.0
        images = g_values(ctx, columns.reshape(length, k, stop - start))
        return images.reshape(size, stop - start)

    blocks = thread_map(
        _block,
        range(0, size, DENSE_BLOCK),
        n_workers=n_workers,
        desc="Assembling G",
        show_progress=show_progress,
    )

    return np.concatenate(blocks, axis=1)


def probe_G_norm(ctx: GreenContext, probes: int = 200, seed: int = 0) -> float:
    """
    Empirical lower bound of the norm of G: the largest ratio ||G x||' / ||x||' over random probes.

    Half of the probes are spread over the whole window, the other half are localized around a random index where the
    Green kernel is largest.

    :param ctx: The GreenContext.
    :param probes: Number of random probes.
    :param seed: Seed of the probe generator.
    :return: The largest observed ratio.
    """
    rng = named_rng(seed, "g-probe")
    length = ctx.window.length
    best = 0.0

    for i in range(probes):
        values = rng.standard_normal((length, ctx.dim))
        if i % 2 == 1:
            centre = rng.integers(length)
            width = rng.integers(1, 4)
            mask = np.abs(np.arange(length) - centre) <= width
            values = values * mask[:, None]

        x = VecSeq(ctx.window, values)
        size = ctx.adapted_norm(x)
        if size == 0:
            continue
        best = max(best, ctx.adapted_norm(apply_G(ctx, x)) / size)

    log.info(f"Largest probed ||G x||' / ||x||' over {probes} probes: {best:.6g} (bound {ctx.G_bound:.6g})")
    return best
