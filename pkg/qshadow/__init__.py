# -*- coding: utf-8 -*-

"""Top-level package for qshadow."""

__author__ = 'qshadow developers'
__email__ = 'qshadow@users.noreply.github.com'
__version__ = '0.1.0'


def get_module_version():
    return __version__


from .dichotomy import (DichotomyConstants, SplittingTriple, WindowSystem, adapted_norm, check_constants,  # noqa: F401
                        cocycle, fit_constants, validate_splitting)
from .flow import FlowSpec, SampledPath, flow_quasi_shadow  # noqa: F401
from .gallery import GallerySystem  # noqa: F401
from .green import GreenContext, G_norm_upper, apply_Asu, apply_G  # noqa: F401
from .seqspace import NormFamily, OrliczFunction, VecSeq, Window, seq_norm  # noqa: F401
from .shadow import PerturbationSeq, PseudoTrajectory, quasi_shadow, verify_report  # noqa: F401
from .stability import conjugacy_point, verify_conjugacy  # noqa: F401
