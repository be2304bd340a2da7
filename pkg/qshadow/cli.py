#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Run configurations and the dispatch behind the `qshadow` command.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from . import file_utils
from .dichotomy import check_constants, fit_constants, validate_splitting
from .exceptions import (ConfigurationError, ContractionSoundnessError, ContractionViolatedError,
                         InvalidSplittingError, LipschitzDeclarationError, MaxIterationsError, NotDichotomicError,
                         NotInvertibleError, PreconditionError, StructuralError)
from .flow import FlowShadowResult, FlowSpec, SampledPath, flow_quasi_shadow
from .gallery import DEFAULT_ETA, GALLERY, GallerySystem
from .green import GreenContext
from .reports import (conjugacy_table, constants_table, flow_table, render_markdown, shadow_table, splitting_table,
                      verification_table)
from .seqspace import AMBIENTS, NormFamily, Window
from .shadow import (PerturbationSeq, PseudoTrajectory, QuasiShadowReport, quasi_shadow, uniqueness_probe,
                     verify_report)
from .stability import continuity_probe, margin_drift, verify_conjugacy

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

COMMANDS = ("solve", "verify", "verify-dichotomy", "conjugacy", "flow", "gallery")

EXIT_PASS = 0
EXIT_UNEXPECTED = 1
EXIT_PRECONDITION = 2
EXIT_VERIFICATION = 3
EXIT_IO = 4

###############################################################################


class RunConfig(NamedTuple):
    command: str
    out: Optional[str] = None
    system: Optional[str] = None
    perturbation: Optional[str] = None
    pseudo: Optional[str] = None
    report: Optional[str] = None
    grid: Optional[str] = None
    spec: Optional[str] = None
    path: Optional[str] = None
    plot_data: Optional[str] = None
    norm: str = "sup"
    ambient: str = "euclidean"
    epsilon: float = 0.1
    tol: float = 1e-12
    verify_tol: float = 1e-9
    max_iterations: Optional[int] = None
    force: bool = False
    seed: int = 0
    trials: int = 0
    margin: Optional[int] = None
    h: Optional[float] = None
    defect: Optional[float] = None
    name: Optional[str] = None
    eta: float = DEFAULT_ETA
    n_workers: Optional[int] = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigurationError(f"Unknown command '{self.command}'. Available: {COMMANDS}")
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ConfigurationError(f"Epsilon must be finite and positive. Received: {self.epsilon}")
        if self.ambient not in AMBIENTS:
            raise ConfigurationError(f"Ambient norm must be one of {AMBIENTS}. Received: '{self.ambient}'")
        NormFamily.parse(self.norm)

        required = {
            "solve": ("system", "pseudo", "out"),
            "verify": ("system", "pseudo", "report"),
            "verify-dichotomy": ("system",),
            "conjugacy": ("system", "grid", "out"),
            "flow": ("spec", "path", "out"),
            "gallery": ("name", "out"),
        }[self.command]
        missing = [field for field in required if getattr(self, field) is None]
        if missing:
            raise ConfigurationError(f"Command '{self.command}' requires: {', '.join(missing)}")
        return self

    @property
    def family(self) -> NormFamily:
        return NormFamily.parse(self.norm)

    def to_dict(self) -> Dict:
        return dict(self._asdict())

    @classmethod
    def from_dict(cls, values: Dict) -> "RunConfig":
        unknown = sorted(set(values) - set(cls._fields))
        if unknown:
            raise ConfigurationError(f"Unknown run configuration fields: {unknown}")
        try:
            return cls(**values).validate()
        except TypeError as e:
            raise ConfigurationError(f"Malformed run configuration: {e}")

    @classmethod
    def load(cls, fp: Union[str, Path]) -> "RunConfig":
        return cls.from_dict(file_utils.read_json(fp))


###############################################################################


def exit_code(error: BaseException) -> int:
    """
    Map an error raised by a run to the process exit code.
    """
    if isinstance(error, (ContractionViolatedError, PreconditionError, MaxIterationsError,
                          ContractionSoundnessError, NotInvertibleError)):
        return EXIT_PRECONDITION
    if isinstance(error, (InvalidSplittingError, NotDichotomicError)):
        return EXIT_VERIFICATION
    if isinstance(error, (OSError, json.JSONDecodeError, ConfigurationError, StructuralError, LipschitzDeclarationError,
                          pd.errors.ParserError, pd.errors.EmptyDataError)):
        return EXIT_IO
    return EXIT_UNEXPECTED


def _load_system(config: RunConfig, strong: bool = False):
    sys, split, consts = file_utils.load_system(config.system)
    if consts is None or (strong and not consts.is_strong):
        log.info(f"No{' strong' if strong else ''} dichotomy constants declared, fitting them on {sys.window}")
        consts = fit_constants(sys, split, strong=strong)
    return sys, split, consts


def _load_perturbation(config: RunConfig, window: Window, dim: int) -> PerturbationSeq:
    if config.perturbation is None:
        return PerturbationSeq.zero(window, dim)
    f = file_utils.load_perturbation(config.perturbation, window, dim)
    f.check_lipschitz(seed=config.seed)
    return f


def _inputs(config: RunConfig) -> List[str]:
    fields = ("system", "perturbation", "pseudo", "report", "grid", "spec", "path")
    return [file_utils.input_digest(getattr(config, f)) for f in fields if getattr(config, f) is not None]


def _write(config: RunConfig, document: Dict, title: str, sections: List[Dict]):
    document = {"command": config.command, "inputs": _inputs(config), "seed": config.seed, **document}
    fp = file_utils.write_json(config.out, document)
    file_utils.write_text(fp.with_suffix(".md"), render_markdown(title, sections, document["inputs"]))
    log.info(f"Wrote {fp}")


###############################################################################


def emit_plot_data(report: Union[QuasiShadowReport, FlowShadowResult], fp: Union[str, Path]) -> Path:
    """
    Write per index norms of a quasi-shadowing report, or the deviation curve of a flow result, to CSV.

    Discrete reports give columns n, residual, zc, zsu and x_minus_y where residual is the quasi residual
    ||x_{n+1} - F_n(x_n) - z^c_{n+1}|| (zero at the last index). Flow results give columns t, deviation and epsilon.

    :param report: A QuasiShadowReport or FlowShadowResult.
    :param fp: Target CSV path.
    :return: The written path.
    """
    if isinstance(report, FlowShadowResult):
        frame = pd.DataFrame({
            "t": report.times,
            "deviation": report.deviations,
            "epsilon": np.full(report.times.shape, report.epsilon),
        })
        return file_utils.write_frame(fp, frame)

    residual = np.zeros(report.window.length)
    residual[:-1] = report.quasi_residuals
    frame = pd.DataFrame({
        "n": report.window.indices,
        "residual": residual,
        "zc": report.z_central.pointwise_norms(report.ambient),
        "zsu": report.z_hyperbolic.pointwise_norms(report.ambient),
        "x_minus_y": (report.x - report.y).pointwise_norms(report.ambient),
    })
    return file_utils.write_frame(fp, frame)


###############################################################################


def _solve(config: RunConfig) -> int:
    sys, split, consts = _load_system(config)
    f = _load_perturbation(config, sys.window, sys.dim)
    y = file_utils.load_sequence(config.pseudo, window=sys.window, dim=sys.dim)

    ctx = GreenContext(sys, split, consts, config.family, config.ambient)
    pseudo = PseudoTrajectory.from_sequence(y, sys, f, ctx.family, ctx.ambient)
    report = quasi_shadow(
        ctx, f, pseudo, config.epsilon, tol=config.tol, max_iterations=config.max_iterations, force=config.force
    )
    verification = verify_report(ctx, f, pseudo, report, tol=config.verify_tol)

    document = {
        "constants": consts.to_dict(),
        "report": report.to_dict(),
        "verification": verification.to_dict(),
    }
    if config.trials > 0:
        document["uniqueness_distance"] = uniqueness_probe(
            ctx, f, pseudo, config.epsilon, trials=config.trials, seed=config.seed, tol=config.tol
        )

    _write(config, document, "Quasi-shadowing", [
        {"title": "Constants", "table": constants_table(consts)},
        {"title": "Solution", "table": shadow_table(report)},
        {"title": "Verification", "table": verification_table(verification)},
    ])
    if config.plot_data is not None:
        emit_plot_data(report, config.plot_data)

    return EXIT_PASS if verification.passed else EXIT_VERIFICATION


def _verify(config: RunConfig) -> int:
    sys, split, consts = _load_system(config)
    f = _load_perturbation(config, sys.window, sys.dim)
    y = file_utils.load_sequence(config.pseudo, window=sys.window, dim=sys.dim)

    stored = file_utils.read_json(config.report)
    report = QuasiShadowReport.from_dict(stored.get("report", stored))

    ctx = GreenContext(sys, split, consts, report.family, report.ambient)
    pseudo = PseudoTrajectory.from_sequence(y, sys, f, ctx.family, ctx.ambient)
    verification = verify_report(ctx, f, pseudo, report, tol=config.verify_tol)

    log.info("\n" + verification_table(verification, fmt="simple"))
    if config.out is not None:
        _write(config, {"verification": verification.to_dict()}, "Quasi-shadowing verification", [
            {"title": "Verification", "table": verification_table(verification)},
        ])

    return EXIT_PASS if verification.passed else EXIT_VERIFICATION


def _verify_dichotomy(config: RunConfig) -> int:
    sys, split, consts = file_utils.load_system(config.system)
    splitting = validate_splitting(sys, split, raise_on_error=False)
    log.info("\n" + splitting_table(splitting, fmt="simple"))
    if not splitting.passed:
        for name, value in splitting.violations[:10]:
            log.warning(f"Splitting property '{name}' violated: {value:.3e}")
        if config.out is not None:
            _write(config, {"splitting": splitting.to_dict()}, "Dichotomy verification", [
                {"title": "Splitting", "table": splitting_table(splitting)},
            ])
        return EXIT_VERIFICATION

    fitted = consts is None
    if fitted:
        consts = fit_constants(sys, split, strong=split.central_rank > 0, validate=False)
    checked = check_constants(sys, split, consts)
    log.info("\n" + constants_table(consts, fmt="simple"))

    if config.out is not None:
        _write(config, {
            "splitting": splitting.to_dict(),
            "constants": consts.to_dict(),
            "fitted": fitted,
            "check": checked.to_dict(),
        }, "Dichotomy verification", [
            {"title": "Splitting", "table": splitting_table(splitting)},
            {"title": "Constants", "table": constants_table(consts)},
        ])

    return EXIT_PASS if checked.passed else EXIT_VERIFICATION


def _conjugacy(config: RunConfig) -> int:
    sys, split, consts = _load_system(config, strong=True)
    f = _load_perturbation(config, sys.window, sys.dim)
    points, radii = file_utils.load_grid(config.grid, sys.dim)
    if not points:
        raise ConfigurationError("Conjugacy grids need at least one point.")

    report = verify_conjugacy(
        sys, split, consts, f, points, config.epsilon,
        margin=config.margin, n_workers=config.n_workers, show_progress=True,
    )
    document = {"constants": consts.to_dict(), "conjugacy": report.to_dict()}

    m, y = points[0]
    if radii:
        table = continuity_probe(
            sys, split, consts, f, m, y, radii, config.epsilon, margin=config.margin, seed=config.seed
        )
        document["continuity"] = table.to_dict()
    document["margin_drift"] = margin_drift(sys, split, consts, f, m, y, config.epsilon, margin=config.margin).to_dict()

    _write(config, document, "Quasi-conjugacy", [
        {"title": "Constants", "table": constants_table(consts)},
        {"title": "Grid", "table": conjugacy_table(report)},
    ])

    for failure in report.failures[:10]:
        log.warning(failure)
    return EXIT_PASS if report.passed else EXIT_VERIFICATION


def _flow(config: RunConfig) -> int:
    spec = FlowSpec.from_config(file_utils.read_json(config.spec), h=config.h)
    path = SampledPath.from_frame(file_utils.read_frame(config.path), defect_bound=config.defect)

    result = flow_quasi_shadow(
        spec, path, config.epsilon, tol=config.tol, force=config.force,
        n_workers=config.n_workers, show_progress=True,
    )
    _write(config, {"flow": result.to_dict()}, "Flow quasi-shadowing", [
        {"title": "Summary", "table": flow_table(result)},
    ])
    if config.plot_data is not None:
        emit_plot_data(result, config.plot_data)

    return EXIT_PASS if result.passed else EXIT_VERIFICATION


def _gallery(config: RunConfig) -> int:
    if config.name not in GALLERY:
        raise ConfigurationError(f"Unknown gallery system '{config.name}'. Available: {GALLERY}")

    gallery = GallerySystem(config.name)
    target = Path(config.out).expanduser().resolve()
    target.mkdir(parents=True, exist_ok=True)

    system_fp = file_utils.write_json(
        target / "system.json", file_utils.system_to_config(gallery.system, gallery.split, gallery.consts)
    )
    perturbation_fp = file_utils.write_json(
        target / "perturbation.json", file_utils.perturbation_to_config(gallery.perturbation())
    )
    pseudo_fp = file_utils.save_sequence(target / "pseudo.csv", gallery.closed_form(config.eta).y)

    run = RunConfig(
        command="solve",
        system=str(system_fp),
        perturbation=str(perturbation_fp),
        pseudo=str(pseudo_fp),
        out=str(target / "report.json"),
        plot_data=str(target / "plot.csv"),
        norm=config.norm,
        ambient=config.ambient,
        epsilon=config.epsilon,
        seed=config.seed,
    )
    file_utils.write_json(target / "run.json", run.to_dict())

    log.info(f"Wrote gallery system '{gallery.name}' to {target}")
    return EXIT_PASS


_DISPATCH = {
    "solve": _solve,
    "verify": _verify,
    "verify-dichotomy": _verify_dichotomy,
    "conjugacy": _conjugacy,
    "flow": _flow,
    "gallery": _gallery,
}


def run(config: RunConfig) -> int:
    """
    Run one command.

    :param config: The RunConfig.
    :return: The exit code: 0 pass, 3 when a verification reports failures. Errors are raised, see exit_code.
    """
    config = config.validate()
    log.info(f"Running '{config.command}'")
    return _DISPATCH[config.command](config)
