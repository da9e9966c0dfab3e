"""Exception taxonomy shared across the package.

Three families matter to callers: usage problems (argparse handles those),
file/format problems, and violated numeric contracts.  The CLI maps them to
distinct exit codes, so keep the inheritance flat and predictable.
"""

from __future__ import annotations


class LitsphereError(Exception):
    """Base class for everything raised deliberately by this package."""


class ContractError(LitsphereError):
    """A documented precondition or numeric invariant was violated."""


class FileFormatError(LitsphereError):
    """An on-disk artifact could not be parsed or written."""


class PfmHeaderError(FileFormatError):
    """PFM header is malformed (bad magic, dimensions, or scale line)."""


class PfmTruncatedError(FileFormatError):
    """PFM payload ended before width*height*3 floats were read."""


class NonFiniteError(ContractError):
    """NaN or infinity where finite values are required."""
