#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Plain text, markdown and html renderings of the result types. Works on any object with the documented fields, so
this module never imports the solver modules.
"""

import logging
from typing import Dict, Iterable, List, Optional

from markdown2 import markdown
from tabulate import tabulate

###############################################################################

log = logging.getLogger(__name__)

###############################################################################

FLOAT_FORMAT = ".6g"

###############################################################################


def _mark(passed: bool) -> str:
    return "pass" if passed else "FAIL"


def verification_table(report, fmt: str = "pipe") -> str:
    """
    One row per check of a VerificationReport.
    """
    rows = [[c.name, c.value, c.bound, _mark(c.passed)] for c in report.checks]
    return tabulate(rows, headers=["check", "value", "bound", "status"], tablefmt=fmt, floatfmt=FLOAT_FORMAT)


def conjugacy_table(report, fmt: str = "pipe") -> str:
    """
    One row per grid point of a ConjugacyReport.
    """
    rows = [
        [
            p.m,
            ", ".join(f"{v:.4g}" for v in p.y),
            p.gh_residual,
            p.h_minus_id,
            p.tau_norm,
            max(p.hyperbolic_membership, p.central_membership),
            p.pseudo_norm <= p.delta,
        ]
        for p in report.points
    ]
    return tabulate(
        rows,
        headers=["m", "y", "conjugacy residual", "||h - Id||", "||tau||", "membership", "within delta"],
        tablefmt=fmt,
        floatfmt=FLOAT_FORMAT,
    )


def constants_table(consts, fmt: str = "pipe") -> str:
    rows = [["D", consts.D], ["d", consts.d], ["b", consts.b]]
    if consts.is_strong:
        rows += [["a", consts.strong.a], ["c_back", consts.strong.c_back]]
    return tabulate(rows, headers=["constant", "value"], tablefmt=fmt, floatfmt=FLOAT_FORMAT)


def splitting_table(report, fmt: str = "pipe") -> str:
    """
    Worst residual per splitting identity of a SplittingReport.
    """
    rows = [
        ["idempotence", report.idempotence],
        ["sum to identity", report.sum_to_identity],
        ["annihilation", report.annihilation],
        ["commutation", report.commutation],
        ["unstable sigma min", report.unstable_sigma_min],
        ["rank constant", report.rank_constant],
    ]
    return tabulate(rows, headers=["property", "value"], tablefmt=fmt, floatfmt=FLOAT_FORMAT)


def shadow_table(report, fmt: str = "pipe") -> str:
    """
    Headline numbers of a QuasiShadowReport.
    """
    rows = [
        ["epsilon", report.epsilon],
        ["delta", report.delta_used],
        ["pseudo norm", report.pseudo_norm],
        ["q", report.q],
        ["G bound", report.G_bound],
        ["lipschitz constant", report.lip_c],
        ["iterations", report.iterations],
        ["fixed point residual", report.fixed_point_residual],
        ["certificate", report.certificate],
        ["max quasi residual", max(report.quasi_residuals) if len(report.quasi_residuals) else 0.0],
        ["forced", report.forced],
    ]
    return tabulate(rows, headers=["quantity", "value"], tablefmt=fmt, floatfmt=FLOAT_FORMAT)


def flow_table(result, fmt: str = "pipe") -> str:
    rows = [
        ["epsilon", result.epsilon],
        ["discrete epsilon", result.epsilon_discrete],
        ["delta", result.delta],
        ["defect bound", result.defect_bound],
        ["kappa", result.kappa],
        ["sup deviation", result.sup_deviation],
        ["jumps", len(result.jumps)],
        ["off-central jump size", result.jump_central_residual],
        ["interval residual", result.interval_residual],
        ["interval residual bound", result.interval_bound],
        ["passed", result.passed],
    ]
    return tabulate(rows, headers=["quantity", "value"], tablefmt=fmt, floatfmt=FLOAT_FORMAT)


def render_html(title: str, table_markdown: str) -> str:
    return markdown(f"## {title}\n\n{table_markdown}\n", extras=["tables"])


def render_markdown(title: str, sections: Iterable[Dict], inputs: Optional[List[str]] = None) -> str:
    """
    Assemble a markdown document from {"title": ..., "table": ...} sections.

    :param title: Document title.
    :param sections: Sections in order.
    :param inputs: Input digests listed under the title.
    :return: The markdown text.
    """
    lines = [f"# {title}", ""]
    if inputs:
        lines += ["Inputs:", ""] + [f"- `{digest}`" for digest in inputs] + [""]
    for section in sections:
        lines += [f"## {section['title']}", "", section["table"], ""]
    return "\n".join(lines)
