"""Diffraction, number variance and rigidity of cut-and-project and suspension point processes.

Submodules: lattice, window, diffraction, pointset, nonhyper, suspension, padic, cli.
The compiled kernels are optional; `qcs.kernels.BACKEND` says which one is in use.
"""

__version__ = "0.1.0"

from .errors import BudgetError, CheckFailed, PrecisionError, QCSError  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "BudgetError", "CheckFailed", "PrecisionError", "QCSError", "__version__"]
