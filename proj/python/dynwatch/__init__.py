"""Topology-aware anomaly detection for power-grid sensor streams."""

try:
    from ._dynwatch import *  # noqa: F401,F403
    from ._dynwatch import __doc__ as _doc
except ImportError:  # build-tree layout: extension lives next to this package
    from _dynwatch import *  # noqa: F401,F403
    from _dynwatch import __doc__ as _doc

__doc__ = _doc
__version__ = "0.1.0"
