"""Desk-scale graph prompt-tuning laboratory (C++ core bindings)."""

try:
    # Installed layout: the compiled module lives inside this package.
    from ._supt import *  # noqa: F401,F403
    from ._supt import __version__  # noqa: F401
except ImportError:
    # In-tree layout: the module built by CMake is on PYTHONPATH.
    from _supt import *  # noqa: F401,F403
    from _supt import __version__  # noqa: F401
