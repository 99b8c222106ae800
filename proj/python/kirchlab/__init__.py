"""Spectral laboratory for the Kirchhoff equation on the torus."""

try:
    from ._kirchlab import *  # noqa: F401,F403  (installed package layout)
    from ._kirchlab import __version__  # noqa: F401
except ImportError:  # build-tree layout: the module sits on PYTHONPATH
    from _kirchlab import *  # noqa: F401,F403
    from _kirchlab import __version__  # noqa: F401
