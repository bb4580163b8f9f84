"""Knife-threat evidence fusion, alerting and evaluation."""

try:
    from ._threatwatch import *  # noqa: F401,F403
    from ._threatwatch import __version__  # noqa: F401
except ImportError:  # in-tree build: extension sits next to the package
    from _threatwatch import *  # noqa: F401,F403
    from _threatwatch import __version__  # noqa: F401
