"""Two NV centers in a cavity under off-resonant Zeno dynamics.

Full and reduced Hamiltonians, closed and open time evolution, and the
state-transfer, phase-gate and entanglement protocols built on them.
"""
__version__ = "0.1.0"

from .hamiltonians import SystemParams, ZenoRegimeWarning  # noqa: E402
from .dynamics import BACKEND  # noqa: E402

__all__ = ["BACKEND", "SystemParams", "ZenoRegimeWarning", "__version__"]
