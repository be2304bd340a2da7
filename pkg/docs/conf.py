#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# qshadow documentation build configuration file.
#
# Only the options that differ from the Sphinx defaults are set here.

import os
import sys

import sphinx_rtd_theme  # noqa: F401

sys.path.insert(0, os.path.abspath(".."))

import qshadow  # noqa: E402

# -- General configuration ---------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
    "m2r",
]

# Docstrings use the sphinx :param: style
napoleon_google_docstring = False
napoleon_use_ivar = True
napoleon_use_param = False
autoclass_content = "both"
autodoc_member_order = "bysource"

source_suffix = {
    ".rst": "restructuredtext",
    ".md": "markdown",
}
master_doc = "index"

project = u"qshadow"
copyright = u"2026, qshadow developers"
author = u"qshadow developers"
version = qshadow.__version__
release = qshadow.__version__

exclude_patterns = ["_build", "schemas"]
pygments_style = "sphinx"

# -- Options for HTML output -------------------------------------------

html_theme = "sphinx_rtd_theme"
html_theme_options = {
    "collapse_navigation": False,
    "prev_next_buttons_location": "top",
}
html_extra_path = ["schemas"]
htmlhelp_basename = "qshadowdoc"

# -- Options for other outputs -----------------------------------------

latex_documents = [
    (master_doc, "qshadow.tex", u"qshadow Documentation", author, "manual"),
]
man_pages = [
    (master_doc, "qshadow", u"qshadow Documentation", [author], 1),
]
