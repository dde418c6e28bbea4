"""Quantum transport laboratory on rooted regular trees.

Thin wrapper over the compiled ``_core`` module: exact Green-function
recursions on truncated trees, population-dynamics sampling of the
infinite-tree Green-function distribution, Chebyshev wave-packet
propagation, and the inequality-check harness.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
