"""Python surface of the constraint-learning toolkit.

The compiled module carries the numerical core: radial power flow, rectifier
network training and geometry, the LP/MILP kernel, and the pipeline stages.
"""

try:
    from ._polyflow import *  # noqa: F401,F403  (installed package layout)
except ImportError:  # pragma: no cover - build-tree layout
    from _polyflow import *  # noqa: F401,F403
