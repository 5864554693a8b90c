"""Secure beamforming and pinching-antenna placement (C++ core)."""

from ._pinchsec import *  # noqa: F401,F403
from ._pinchsec import __doc__  # noqa: F401
