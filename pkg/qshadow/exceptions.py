#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Error hierarchy for qshadow. Every error carries a human readable message and, optionally, keyword diagnostics that
callers (mostly the command line front end) can attach to reports.
"""

from typing import Any, Dict

###############################################################################


class QuasiShadowError(Exception):
    def __init__(self, message: str, **diagnostics: Any):
        super().__init__(message)
        self.message = message
        self.diagnostics: Dict[str, Any] = diagnostics

    def __str__(self):
        return self.message


class ConfigurationError(QuasiShadowError, ValueError):
    pass


class StructuralError(QuasiShadowError, ValueError):
    pass


class InvalidSplittingError(QuasiShadowError):
    pass


class IllConditionedError(QuasiShadowError):
    pass


class NotDichotomicError(QuasiShadowError):
    pass


class DomainError(QuasiShadowError, ValueError):
    pass


class ResourceError(QuasiShadowError):
    pass


class ContractionViolatedError(QuasiShadowError):
    pass


class PreconditionError(QuasiShadowError):
    pass


class MaxIterationsError(QuasiShadowError):
    pass


class ContractionSoundnessError(QuasiShadowError):
    pass


class NotInvertibleError(QuasiShadowError):
    pass


class NumericalError(QuasiShadowError, ArithmeticError):
    pass


class LipschitzDeclarationError(QuasiShadowError, ValueError):
    pass
