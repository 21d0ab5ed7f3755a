"""Variational Bayesian Quantization.

Quantize mean-field Gaussian posteriors onto a dyadic quantile grid of the
prior, spending bits where the posterior is certain, then entropy-code the
resulting code points.
"""
from ._accel import NUMBA_AVAILABLE, backend, set_backend, use_backend
from .codec import (
    Bitstring,
    CompressedContainer,
    FrequencyTable,
    ac_decode,
    ac_encode,
    build_frequency_table,
    concat_decode,
    concat_encode,
    encode_container,
    information_content,
    read_container,
    write_container,
)
from .core import (
    GaussianPosterior,
    QuantizedVector,
    RdConfig,
    RdPoint,
    SearchDiagnostics,
    objective,
    optimize_dimension,
    quantize_arrays,
    quantize_vector,
    sweep_lambda,
)
from .dyadic import CodePoint, from_bits, neighbors_at_rate, shortest_in_interval
from .errors import (
    ChecksumError,
    CodingError,
    ContainerError,
    DecodeError,
    DegeneratePriorError,
    DomainError,
    InvalidArgumentError,
    MagicError,
    NonCanonicalError,
    ParseError,
    TruncatedError,
    UnboundedSearchError,
    VBQError,
)
from .prior import (
    EmpiricalPiecewise,
    PriorModel,
    ScaledGaussian,
    StandardNormal,
    cdf,
    fit_empirical_gaussian,
    fit_empirical_piecewise,
    quantile,
)

__version__ = "0.1.0"
