"""Concentration tail bounds for coupled statistics, with validation tooling.

The package computes analytic tail bounds for statistics that admit either an
exchangeable-pair coupling with a linear regression structure or a bounded
size-bias coupling, implements the concrete statistic families those bounds
cover (U-statistics, doubly indexed permutation statistics, rank and graph
overlap tests, circular permutation-pattern counts), and validates every bound
and coupling identity against exact enumeration at small scale and seeded
Monte Carlo at moderate scale.
"""

__version__ = "0.1.0"

from .errors import ResourceLimitError, DegenerateKernelWarning

__all__ = ["ResourceLimitError", "DegenerateKernelWarning", "__version__"]
