"""Analytical grid-strength indicators with time-domain validation."""

try:
    from ._core import *  # noqa: F401,F403
except ImportError:  # build-tree layout: extension sits next to the package dir
    from _core import *  # noqa: F401,F403
