#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Builtin example systems with known splittings and closed form dichotomy constants.

    diag-3d            diag(1/2, 2, 1), optionally conjugated by a skewed change of basis
    rotation-center    stable 1/2, unstable 2 and a rotation of the central plane
    switched-central   diag(1/2, 2, e^{+-gamma}) with the central entry alternating in sign of the exponent
    ed-2d              diag(1/2, 2) with no central bundle
"""

import logging
from typing import Dict, NamedTuple, Optional

import numpy as np

from .dichotomy import DichotomyConstants, SplittingTriple, StrongRates, WindowSystem
from .exceptions import ConfigurationError
from .seqspace import VecSeq, Window
from .shadow import PerturbationSeq

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

GALLERY = ("diag-3d", "rotation-center", "switched-central", "ed-2d")

DEFAULT_WINDOW = (-50, 50)
DEFAULT_ETA = 1e-3

###############################################################################


class ClosedForm(NamedTuple):
    y: VecSeq
    z: VecSeq
    x: VecSeq


class GallerySystem(object):
    def __init__(
        self,
        name: str,
        window: Optional[Window] = None,
        skew: float = 0.0,
        theta: float = 0.5,
        gamma: float = 0.5
    ):
        """
        A builtin system together with its splitting and constants that pass check_constants.

        :param name: One of "diag-3d", "rotation-center", "switched-central" or "ed-2d".
        :param window: The window, defaults to [-50, 50]. Must contain 0 and 1.
        :param skew: Off diagonal entry of the change of basis of diag-3d.
        :param theta: Rotation angle per step of rotation-center.
        :param gamma: Central exponent of switched-central.
        """
        if name not in GALLERY:
            raise ConfigurationError(f"Unknown gallery system '{name}'. Available: {GALLERY}")
        window = window or Window(*DEFAULT_WINDOW)
        if 0 not in window or 1 not in window:
            raise ConfigurationError(f"Gallery windows must contain 0 and 1. Received: {window}")

        self._name = name
        self._window = window
        self._params = {}
        count = window.length - 1

        if name == "diag-3d":
            frame = np.eye(3) + float(skew) * np.diag(np.ones(2), 1)
            core = np.diag([0.5, 2.0, 1.0])
            matrices = np.repeat((frame @ core @ np.linalg.inv(frame))[None], count, axis=0)
            axes = {1: 0, 2: 1, 3: 2}
            diagonals = np.eye(3)
            D = float(np.linalg.cond(frame))
            self._params = {"skew": float(skew)}

        elif name == "rotation-center":
            frame = np.eye(4)
            c, s = np.cos(theta), np.sin(theta)
            core = np.array([
                [0.5, 0.0, 0.0, 0.0],
                [0.0, 2.0, 0.0, 0.0],
                [0.0, 0.0, c, -s],
                [0.0, 0.0, s, c],
            ])
            matrices = np.repeat(core[None], count, axis=0)
            axes = {1: 0, 2: 1, 3: 2}
            diagonals = np.diag([1.0, 0.0, 0.0, 0.0]), np.diag([0.0, 1.0, 0.0, 0.0]), np.diag([0.0, 0.0, 1.0, 1.0])
            D = 1.0
            self._params = {"theta": float(theta)}

        elif name == "switched-central":
            frame = np.eye(3)
            signs = np.where((window.indices[:-1] % 2) == 0, 1.0, -1.0)
            matrices = np.array([np.diag([0.5, 2.0, np.exp(gamma * sign)]) for sign in signs])
            axes = {1: 0, 2: 1, 3: 2}
            diagonals = np.eye(3)
            # Central products never exceed one factor e^gamma
            D = float(np.exp(abs(gamma)))
            self._params = {"gamma": float(gamma)}

        else:
            frame = np.eye(2)
            matrices = np.repeat(np.diag([0.5, 2.0])[None], count, axis=0)
            axes = {1: 0, 2: 1}
            diagonals = np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.zeros((2, 2))
            D = 1.0

        if not isinstance(diagonals, tuple):
            diagonals = tuple(np.diag(row) for row in diagonals)

        inverse = np.linalg.inv(frame)
        projectors = [frame @ P @ inverse for P in diagonals]

        self._frame = frame
        self._axes = axes
        self._sys = WindowSystem(window, matrices)
        self._split = SplittingTriple.constant(window, *projectors)
        self._consts = DichotomyConstants(D, np.log(2.0), np.log(2.0), StrongRates(0.0, 0.0))

    @property
    def name(self) -> str:
        return self._name

    @property
    def params(self) -> Dict[str, float]:
        return dict(self._params)

    @property
    def window(self) -> Window:
        return self._window

    @property
    def dim(self) -> int:
        return self._sys.dim

    @property
    def system(self) -> WindowSystem:
        return self._sys

    @property
    def split(self) -> SplittingTriple:
        return self._split

    @property
    def consts(self) -> DichotomyConstants:
        return self._consts

    @property
    def has_central(self) -> bool:
        return 3 in self._axes

    def axis(self, bundle: int) -> np.ndarray:
        """
        The first basis vector of bundle 1 (stable), 2 (unstable) or 3 (central).
        """
        if bundle not in self._axes:
            raise ConfigurationError(f"{self._name} has no bundle {bundle}")
        return self._frame[:, self._axes[bundle]].copy()

    def bump(self, bundle: int, eta: float = DEFAULT_ETA, n: int = 0) -> VecSeq:
        """
        The sequence that is zero except y_n = eta times the axis of the bundle.
        """
        return VecSeq.delta(self._window, n, eta * self.axis(bundle))

    def closed_form(self, eta: float = DEFAULT_ETA) -> ClosedForm:
        """
        The unperturbed closed form case: a central bump y_0 = eta e_c, corrected by z_0 = eta e_c and
        z_1 = -A_0 eta e_c with x = y. Systems without a central bundle use a stable bump y_0 = eta e_s, corrected by
        z_0 = -eta e_s so that x vanishes.
        """
        if self.has_central:
            y = self.bump(3, eta)
            z = y.replace(1, -self._sys.A(0) @ y[0])
            return ClosedForm(y, z, y)

        y = self.bump(1, eta)
        return ClosedForm(y, -y, VecSeq.zeros(self._window, self.dim))

    def perturbation(self, kind: str = "zero", lip_c: float = 0.0, seed_matrix: Optional[np.ndarray] = None):
        """
        A zero perturbation, or f_n(x) = lip_c * tanh(W x) with a fixed unit norm W.
        """
        if kind == "zero":
            return PerturbationSeq.zero(self._window, self.dim)
        if kind == "tanh":
            W = np.eye(self.dim) if seed_matrix is None else np.asarray(seed_matrix, dtype=float)
            W = W / np.linalg.norm(W, 2)
            return PerturbationSeq.tanh(
                self._window, lip_c, np.repeat(W[None], self._window.length - 1, axis=0), lip_c=lip_c
            )
        raise ConfigurationError(f"Gallery perturbations are 'zero' or 'tanh'. Received: '{kind}'")

    def __str__(self):
        return f"<GallerySystem [name: {self._name}, window: [{self._window.lo}, {self._window.hi}]]>"

    def __repr__(self):
        return str(self)
