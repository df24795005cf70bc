"""Fold-singular Lagrangian mechanics: oscillator jumps, characteristics, optics.

The compiled core lives in ``folddyn._folddyn``; everything it exports is
re-exported here.
"""

from ._folddyn import *  # noqa: F401,F403
from ._folddyn import __version__  # noqa: F401
