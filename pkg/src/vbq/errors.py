"""Exception hierarchy.

Every error carries a short machine-readable ``category`` which the CLI maps
to a fixed exit code.
"""


class VBQError(Exception):
    category = "error"
    exit_code = 1


class InvalidArgumentError(VBQError, ValueError):
    category = "invalid-argument"
    exit_code = 3


class DomainError(InvalidArgumentError):
    category = "domain"
    exit_code = 3


class NonCanonicalError(InvalidArgumentError):
    category = "non-canonical"
    exit_code = 3


class UnboundedSearchError(InvalidArgumentError):
    category = "unbounded-search"
    exit_code = 3


class ParseError(VBQError, ValueError):
    category = "parse"
    exit_code = 4


class DegeneratePriorError(VBQError, ValueError):
    category = "degenerate-prior"
    exit_code = 5


class CodingError(VBQError):
    category = "coding"
    exit_code = 6


class DecodeError(CodingError):
    """Corrupt or truncated arithmetic-coded stream."""

    category = "decode"

    def __init__(self, message, bit_offset=None):
        if bit_offset is not None:
            message = f"{message} (at bit offset {bit_offset})"
        super().__init__(message)
        self.bit_offset = bit_offset


class ContainerError(VBQError):
    category = "container"
    exit_code = 7


class MagicError(ContainerError):
    category = "container-magic"


class ChecksumError(ContainerError):
    category = "container-checksum"


class TruncatedError(ContainerError):
    category = "container-truncated"
