# Configuration file for the Sphinx documentation builder.  # noqa: INP001
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import sys
from datetime import UTC, datetime
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

# -- Project information -----------------------------------------------------

project = "nbody-spin"
copyright = f"{datetime.now(tz=UTC).year}, nbody-spin developers"  # noqa: A001
author = "nbody-spin developers"

try:
    from nbody_spin import __version__

    release = __version__
    version = __version__
except ImportError:
    release = "0.1.0"
    version = "0.1.0"

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.viewcode",
    "sphinx.ext.napoleon",
    "sphinx_copybutton",
    "sphinx_autodoc_typehints",
    "sphinx_design",
    "myst_parser",
]

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

source_suffix = {
    ".rst": "restructuredtext",
    ".md": "markdown",
}

master_doc = "index"

# -- Options for HTML output -------------------------------------------------

html_theme = "shibuya"

html_theme_options = {
    "accent_color": "teal",
}

html_title = "nbody-spin"

# -- Extension configuration -------------------------------------------------

# Google-style docstrings only
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_use_ivar = True  # dataclass Attributes sections
napoleon_attr_annotations = True

autodoc_default_options = {
    "members": True,
    "member-order": "bysource",
    "show-inheritance": True,
}

autodoc_typehints = "description"
autodoc_typehints_description_target = "documented"

typehints_fully_qualified = False

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "msgspec": ("https://jcristharif.com/msgspec/", None),
}

# tab-set blocks in getting-started use colon fences
myst_enable_extensions = ["colon_fence"]

myst_heading_anchors = 3

copybutton_prompt_text = r"\$ "

suppress_warnings = ["myst.header"]
