"""Shared exception and warning types."""


class ResourceLimitError(RuntimeError):
    """An enumeration or memory guard was exceeded.

    Raised instead of silently truncating when an exact computation would
    need more than the documented desk-scale budget.
    """


class DegenerateKernelWarning(UserWarning):
    """The kernel's first conditional projection vanishes on every atom.

    Exchangeable-pair tail bounds for U-statistics assume a non-degenerate
    kernel; results for degenerate kernels are still computed but the
    underlying statistic collapses at a faster scale.
    """
