"""Coated-ball composites: homogenized conductivity, dispersive corrections,
and greedy ball packings of the flat torus.

Everything computational lives in the compiled extension; this package
re-exports it and locates the bundled command-line tool.
"""

from pathlib import Path

from ._hsdisp import *  # noqa: F401,F403
from ._hsdisp import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"


def cli_path():
    """Path to the bundled ``hsdisp`` command-line tool.

    Returns None when the tool is not shipped alongside the package, which is
    the case for editable installs where only the extension is materialized.
    """
    exe = Path(__file__).resolve().parent / "bin" / "hsdisp"
    return exe if exe.exists() else None
