"""Prior models: the CDF/quantile pair that maps latents to quantiles and back.

All CDF outputs are clamped into ``[CDF_LO, CDF_HI]`` so the dyadic search
never sees exactly 0 or 1.
"""
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit
from .errors import DegeneratePriorError, DomainError, InvalidArgumentError, ParseError
from .normal import INV_SQRT_2PI, norm_cdf, norm_cdf_vec, norm_ppf, norm_ppf_vec

CDF_LO = 2.0 ** -60
# 1 - 2**-60 rounds to 1.0 in binary64; this is the largest double below 1.
CDF_HI = 1.0 - 2.0 ** -53

KIND_GAUSSIAN = 0
KIND_PIECEWISE = 1

TAG_STANDARD_NORMAL = 0
TAG_SCALED_GAUSSIAN = 1
TAG_EMPIRICAL_PIECEWISE = 2

_EMPTY = np.zeros(0, dtype=np.float64)


# -- kernels ---------------------------------------------------------------

@njit
def prior_cdf(kind, loc, scale, kz, kp, slo, shi, z):
    """Clamped prior CDF for one value; see :meth:`PriorModel.kernel_args`."""
    if kind == KIND_GAUSSIAN:
        v = norm_cdf((z - loc) / scale)
    else:
        n = kz.shape[0]
        if z <= kz[0]:
            v = kp[0] * 2.0 * norm_cdf((z - kz[0]) / slo)
        elif z >= kz[n - 1]:
            v = 1.0 - (1.0 - kp[n - 1]) * 2.0 * norm_cdf(-(z - kz[n - 1]) / shi)
        else:
            j = np.searchsorted(kz, z, side="right") - 1
            t = (z - kz[j]) / (kz[j + 1] - kz[j])
            v = kp[j] + t * (kp[j + 1] - kp[j])
    if v < CDF_LO:
        return CDF_LO
    if v > CDF_HI:
        return CDF_HI
    return v


@njit
def prior_ppf(kind, loc, scale, kz, kp, slo, shi, xi):
    if kind == KIND_GAUSSIAN:
        return loc + scale * norm_ppf(xi)
    n = kz.shape[0]
    if xi <= kp[0]:
        return kz[0] + slo * norm_ppf(xi / (2.0 * kp[0]))
    if xi >= kp[n - 1]:
        return kz[n - 1] - shi * norm_ppf((1.0 - xi) / (2.0 * (1.0 - kp[n - 1])))
    j = np.searchsorted(kp, xi, side="right") - 1
    t = (xi - kp[j]) / (kp[j + 1] - kp[j])
    return kz[j] + t * (kz[j + 1] - kz[j])


def prior_cdf_vec(kind, loc, scale, kz, kp, slo, shi, z):
    z = np.asarray(z, dtype=np.float64)
    if kind == KIND_GAUSSIAN:
        v = norm_cdf_vec((z - loc) / scale)
    else:
        n = kz.shape[0]
        v = np.empty_like(z)
        lo = z <= kz[0]
        hi = (z >= kz[n - 1]) & ~lo
        mid = ~(lo | hi)
        v[lo] = kp[0] * 2.0 * norm_cdf_vec((z[lo] - kz[0]) / slo)
        v[hi] = 1.0 - (1.0 - kp[n - 1]) * 2.0 * norm_cdf_vec(-(z[hi] - kz[n - 1]) / shi)
        zm = z[mid]
        j = np.searchsorted(kz, zm, side="right") - 1
        t = (zm - kz[j]) / (kz[j + 1] - kz[j])
        v[mid] = kp[j] + t * (kp[j + 1] - kp[j])
    return np.minimum(np.maximum(v, CDF_LO), CDF_HI)


def prior_ppf_vec(kind, loc, scale, kz, kp, slo, shi, xi):
    xi = np.asarray(xi, dtype=np.float64)
    if kind == KIND_GAUSSIAN:
        return loc + scale * norm_ppf_vec(xi)
    n = kz.shape[0]
    out = np.empty_like(xi)
    lo = xi <= kp[0]
    hi = (xi >= kp[n - 1]) & ~lo
    mid = ~(lo | hi)
    out[lo] = kz[0] + slo * norm_ppf_vec(xi[lo] / (2.0 * kp[0]))
    out[hi] = kz[n - 1] - shi * norm_ppf_vec((1.0 - xi[hi]) / (2.0 * (1.0 - kp[n - 1])))
    xm = xi[mid]
    j = np.searchsorted(kp, xm, side="right") - 1
    t = (xm - kp[j]) / (kp[j + 1] - kp[j])
    out[mid] = kz[j] + t * (kz[j + 1] - kz[j])
    return out


# -- models ----------------------------------------------------------------

class PriorModel:
    """Base class. Subclasses implement :meth:`kernel_args` and serialization."""

    tag = None

    def kernel_args(self):
        """``(kind, loc, scale, knots_z, knots_p, tail_lo, tail_hi)``."""
        raise NotImplementedError

    def cdf(self, z):
        z = float(z)
        if not math.isfinite(z):
            raise InvalidArgumentError(f"cdf argument must be finite, got {z}")
        return float(prior_cdf(*self.kernel_args(), z))

    def quantile(self, xi):
        xi = float(xi)
        if not 0.0 < xi < 1.0:
            raise DomainError(f"quantile argument must lie in (0, 1), got {xi}")
        return float(prior_ppf(*self.kernel_args(), xi))

    def cdf_array(self, z):
        z = np.asarray(z, dtype=np.float64)
        if not np.all(np.isfinite(z)):
            raise InvalidArgumentError("cdf arguments must be finite")
        return prior_cdf_vec(*self.kernel_args(), z)

    def quantile_array(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        if not np.all((xi > 0.0) & (xi < 1.0)):
            raise DomainError("quantile arguments must lie in (0, 1)")
        return prior_ppf_vec(*self.kernel_args(), xi)

    def to_bytes(self):
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class StandardNormal(PriorModel):
    tag = TAG_STANDARD_NORMAL

    def kernel_args(self):
        return (KIND_GAUSSIAN, 0.0, 1.0, _EMPTY, _EMPTY, 1.0, 1.0)

    def to_bytes(self):
        return bytes([self.tag])

    def describe(self):
        return "std-normal"


@dataclass(frozen=True)
class ScaledGaussian(PriorModel):
    mean: float
    variance: float
    tag = TAG_SCALED_GAUSSIAN

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise InvalidArgumentError("prior mean and variance must be finite")
        if self.variance <= 0.0:
            raise DegeneratePriorError(f"prior variance must be > 0, got {self.variance}")

    @property
    def std(self):
        return math.sqrt(self.variance)

    def kernel_args(self):
        return (KIND_GAUSSIAN, float(self.mean), self.std, _EMPTY, _EMPTY, 1.0, 1.0)

    def to_bytes(self):
        return bytes([self.tag]) + struct.pack("<dd", self.mean, self.variance)

    def describe(self):
        return f"gaussian:{self.mean!r},{self.variance!r}"


@dataclass(frozen=True, eq=False)
class EmpiricalPiecewise(PriorModel):
    """Piecewise-linear CDF through ``(z, cumprob)`` knots with Gaussian tails.

    Each tail is a half-Gaussian whose density matches the adjacent linear
    segment at the outermost knot.
    """

    knots_z: np.ndarray
    knots_p: np.ndarray
    tail_lo: float = field(init=False)
    tail_hi: float = field(init=False)
    tag = TAG_EMPIRICAL_PIECEWISE

    def __post_init__(self):
        kz = np.array(self.knots_z, dtype=np.float64)
        kp = np.array(self.knots_p, dtype=np.float64)
        if kz.ndim != 1 or kz.shape != kp.shape or kz.size < 2:
            raise InvalidArgumentError("need at least two (z, cumprob) knots")
        if not (np.all(np.isfinite(kz)) and np.all(np.isfinite(kp))):
            raise InvalidArgumentError("knots must be finite")
        if np.any(np.diff(kz) <= 0) or np.any(np.diff(kp) <= 0):
            raise DegeneratePriorError("knots must be strictly increasing in both coordinates")
        if kp[0] <= 0.0 or kp[-1] >= 1.0:
            raise InvalidArgumentError("knot probabilities must lie in (0, 1)")
        kz.setflags(write=False)
        kp.setflags(write=False)
        object.__setattr__(self, "knots_z", kz)
        object.__setattr__(self, "knots_p", kp)
        d_lo = (kp[1] - kp[0]) / (kz[1] - kz[0])
        d_hi = (kp[-1] - kp[-2]) / (kz[-1] - kz[-2])
        object.__setattr__(self, "tail_lo", float(2.0 * kp[0] * INV_SQRT_2PI / d_lo))
        object.__setattr__(self, "tail_hi", float(2.0 * (1.0 - kp[-1]) * INV_SQRT_2PI / d_hi))

    def __eq__(self, other):
        return (
            isinstance(other, EmpiricalPiecewise)
            and np.array_equal(self.knots_z, other.knots_z)
            and np.array_equal(self.knots_p, other.knots_p)
        )

    __hash__ = None

    def kernel_args(self):
        return (KIND_PIECEWISE, 0.0, 1.0, self.knots_z, self.knots_p, self.tail_lo, self.tail_hi)

    def to_bytes(self):
        pairs = np.column_stack([self.knots_z, self.knots_p]).astype("<f8")
        return bytes([self.tag]) + struct.pack("<I", self.knots_z.size) + pairs.tobytes()

    def describe(self):
        return f"empirical-piecewise({self.knots_z.size} knots)"


# -- functional API --------------------------------------------------------

def cdf(prior, z):
    return prior.cdf(z)


def quantile(prior, xi):
    return prior.quantile(xi)


def fit_empirical_gaussian(means):
    """Zero-centred Gaussian whose variance is the population variance of ``means``."""
    means = np.asarray(means, dtype=np.float64).ravel()
    if means.size < 2:
        raise DegeneratePriorError("need at least two means to fit an empirical prior")
    var = float(np.var(means))
    if not var >= 1e-12:
        raise DegeneratePriorError(f"empirical variance {var!r} is degenerate")
    return ScaledGaussian(0.0, var)


def fit_empirical_piecewise(samples, knots):
    samples = np.asarray(samples, dtype=np.float64).ravel()
    knots = int(knots)
    if knots < 2 or samples.size < knots:
        raise InvalidArgumentError("need samples >= knots >= 2")
    probs = np.arange(1, knots + 1) / (knots + 1)
    kz = np.quantile(samples, probs)
    if np.any(np.diff(kz) <= 0):
        raise DegeneratePriorError("too few distinct samples for the requested knot count")
    return EmpiricalPiecewise(kz, probs)


def read_prior(buf, offset=0):
    """Parse a serialized prior; returns ``(prior, new_offset)``."""
    if offset >= len(buf):
        raise ParseError("missing prior tag")
    tag = buf[offset]
    offset += 1
    if tag == TAG_STANDARD_NORMAL:
        return StandardNormal(), offset
    if tag == TAG_SCALED_GAUSSIAN:
        if offset + 16 > len(buf):
            raise ParseError("truncated gaussian prior")
        mean, var = struct.unpack_from("<dd", buf, offset)
        return ScaledGaussian(mean, var), offset + 16
    if tag == TAG_EMPIRICAL_PIECEWISE:
        if offset + 4 > len(buf):
            raise ParseError("truncated piecewise prior")
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        end = offset + 16 * n
        if end > len(buf):
            raise ParseError("truncated piecewise prior knots")
        pairs = np.frombuffer(bytes(buf[offset:end]), dtype="<f8").reshape(n, 2)
        return EmpiricalPiecewise(pairs[:, 0].copy(), pairs[:, 1].copy()), end
    raise ParseError(f"unknown prior tag {tag}")
