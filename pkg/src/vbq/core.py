"""Variational Bayesian Quantization of mean-field Gaussian posteriors.

Each latent dimension ``i`` with posterior ``N(mu_i, sigma2_i)`` is mapped to a
dyadic code point ``xi_hat`` minimizing::

    (F^-1(xi_hat) - mu_i)**2 + 2 * lam * sigma2_i * R(xi_hat)

where ``F`` is the prior CDF and ``R`` the bitlength of ``xi_hat``.
Dimensions are independent.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dyadic import HALF, MAX_RATE, CodePoint
from .errors import InvalidArgumentError, ParseError, UnboundedSearchError


@dataclass(frozen=True)
class GaussianPosterior:
    mu: float
    sigma2: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma2)):
            raise InvalidArgumentError(f"posterior must be finite, got ({self.mu}, {self.sigma2})")
        if self.sigma2 < 0:
            raise InvalidArgumentError(f"posterior variance must be >= 0, got {self.sigma2}")


@dataclass(frozen=True)
class RdConfig:
    """Search settings. ``lam=math.inf`` selects the all-medians limit."""

    lam: float
    rate_cap: int | None = 32
    sigma2_floor: float = 1e-12

    def __post_init__(self):
        lam = float(self.lam)
        if math.isnan(lam) or lam < 0:
            raise InvalidArgumentError(f"lambda must be >= 0, got {self.lam}")
        if self.rate_cap is not None and not 1 <= self.rate_cap <= MAX_RATE:
            raise InvalidArgumentError(f"rate_cap must be in [1, {MAX_RATE}]")
        if lam == 0 and self.rate_cap is None:
            raise UnboundedSearchError("lambda = 0 needs a rate cap")
        if not self.sigma2_floor > 0:
            raise InvalidArgumentError("sigma2_floor must be positive")

    @property
    def infinite(self):
        return math.isinf(self.lam)

    @property
    def effective_cap(self):
        return MAX_RATE if self.rate_cap is None else self.rate_cap


@dataclass(frozen=True)
class SearchDiagnostics:
    r: int
    evaluations: int
    capped: bool
    objective: float


@dataclass
class QuantizedVector:
    numerators: np.ndarray
    rates: np.ndarray
    objective: np.ndarray
    reconstruction: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    r_term: np.ndarray
    evaluations: np.ndarray
    capped: np.ndarray
    lam: float = field(default=math.nan)

    def __len__(self):
        return self.rates.shape[0]

    @property
    def code_points(self):
        return [CodePoint(int(n), int(r)) for n, r in zip(self.numerators, self.rates)]

    @property
    def total_rate(self):
        return int(self.rates.sum())

    @property
    def total_objective(self):
        return float(self.objective.sum())

    @property
    def mse_z(self):
        return float(np.mean((self.reconstruction - self.mu) ** 2))

    @property
    def log_q(self):
        """Unnormalized Gaussian log-density of the reconstruction."""
        return float(-np.sum((self.reconstruction - self.mu) ** 2 / (2.0 * self.sigma2)))


@dataclass(frozen=True)
class RdPoint:
    lam: float
    total_rate_bits: int
    entropy_coded_bits: int
    mse_z: float
    log_q: float


def objective(xi_hat, post, prior, lam):
    """Per-dimension rate-distortion objective, no constant terms."""
    z = prior.quantile(xi_hat.value)
    return (z - post.mu) ** 2 + 2.0 * lam * post.sigma2 * xi_hat.rate


def _as_arrays(posteriors):
    if isinstance(posteriors, tuple) and len(posteriors) == 2:
        mu, sigma2 = posteriors
        mu = np.asarray(mu, dtype=np.float64).ravel()
        sigma2 = np.asarray(sigma2, dtype=np.float64).ravel()
    else:
        posteriors = list(posteriors)
        mu = np.array([p.mu for p in posteriors], dtype=np.float64)
        sigma2 = np.array([p.sigma2 for p in posteriors], dtype=np.float64)
    if mu.shape != sigma2.shape:
        raise InvalidArgumentError("mu and sigma2 lengths differ")
    bad = ~(np.isfinite(mu) & np.isfinite(sigma2)) | (sigma2 < 0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InvalidArgumentError(
            f"dimension {i}: invalid posterior (mu={mu[i]!r}, sigma2={sigma2[i]!r})"
        )
    return mu, sigma2


def quantize_arrays(mu, sigma2, prior, cfg):
    mu, sigma2 = _as_arrays((mu, sigma2))
    s2 = np.maximum(sigma2, cfg.sigma2_floor)
    k = mu.shape[0]
    if cfg.infinite:
        n = np.ones(k, dtype=np.int64)
        r = np.ones(k, dtype=np.int64)
        ell = np.full(k, np.inf)
        r_term = np.zeros(k, dtype=np.int64)
        evals = np.zeros(k, dtype=np.int64)
        capped = np.zeros(k, dtype=np.bool_)
    else:
        n, r, ell, r_term, evals, capped = kernels.search(
            prior.kernel_args(), mu, s2, cfg.lam, cfg.effective_cap
        )
    values = n * kernels.INV_POW2[r]
    recon = prior.quantile_array(values) if k else np.zeros(0)
    return QuantizedVector(n, r, ell, recon, mu, s2, r_term, evals, capped, lam=float(cfg.lam))


def quantize_vector(posteriors, prior, cfg):
    """Quantize every dimension; ``posteriors`` is a list of
    :class:`GaussianPosterior` or a ``(mu, sigma2)`` tuple of arrays."""
    mu, sigma2 = _as_arrays(posteriors)
    return quantize_arrays(mu, sigma2, prior, cfg)


def optimize_dimension(post, prior, cfg):
    """Return ``(CodePoint, SearchDiagnostics)`` for a single posterior."""
    if cfg.infinite:
        return HALF, SearchDiagnostics(0, 0, False, math.inf)
    q = quantize_arrays([post.mu], [post.sigma2], prior, cfg)
    diag = SearchDiagnostics(int(q.r_term[0]), int(q.evaluations[0]), bool(q.capped[0]),
                             float(q.objective[0]))
    return CodePoint(int(q.numerators[0]), int(q.rates[0])), diag


def sweep_lambda(posteriors, prior, lambdas, table=None, rate_cap=32):
    """One :class:`RdPoint` per penalty value.

    ``entropy_coded_bits`` is the full container size: header-table mode with
    the empirical table, or external-table mode when ``table`` is given.
    """
    from .codec import encode_container

    lambdas = list(lambdas)
    if not lambdas:
        raise InvalidArgumentError("need at least one lambda")
    mu, sigma2 = _as_arrays(posteriors)
    points = []
    for lam in lambdas:
        if not lam > 0:
            raise InvalidArgumentError(f"lambda must be > 0, got {lam}")
        q = quantize_arrays(mu, sigma2, prior, RdConfig(lam, rate_cap=rate_cap))
        mode = "header-table" if table is None else "external-table"
        container = encode_container(q.code_points, prior, mode=mode, table=table)
        points.append(RdPoint(float(lam), q.total_rate, container.total_bits, q.mse_z, q.log_q))
    return points


# -- CSV -------------------------------------------------------------------

def read_posteriors_csv(path):
    """Read a ``mu,sigma2`` CSV; returns ``(mu, sigma2)`` arrays."""
    mu, sigma2 = [], []
    with open(path, newline="") as fh:
        rows = (row for row in csv.reader(fh))
        header = None
        for lineno, row in enumerate(rows, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                for col in ("mu", "sigma2"):
                    if col not in header:
                        raise ParseError(f"{path}:{lineno}: missing column {col!r}")
                i_mu, i_s2 = header.index("mu"), header.index("sigma2")
                continue
            try:
                m, s = float(row[i_mu]), float(row[i_s2])
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: cannot parse row {row!r}") from None
            if not (math.isfinite(m) and math.isfinite(s)) or s < 0:
                raise ParseError(f"{path}:{lineno}: invalid posterior ({m}, {s})")
            mu.append(m)
            sigma2.append(s)
    if header is None:
        raise ParseError(f"{path}: empty file, expected header 'mu,sigma2'")
    return np.array(mu, dtype=np.float64), np.array(sigma2, dtype=np.float64)


def write_posteriors_csv(path, mu, sigma2):
    with open(path, "w", newline="") as fh:
        fh.write("mu,sigma2\n")
        for m, s in zip(mu, sigma2):
            fh.write(f"{float(m)!r},{float(s)!r}\n")


def fmt(x):
    """17-significant-digit float formatting used by every report."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


RD_HEADER = ("lambda", "total_rate_bits", "entropy_coded_bits", "mse_z", "log_q")


def write_rd_csv(fh, points, comments=()):
    for c in comments:
        fh.write(f"# {c}\n")
    fh.write(",".join(RD_HEADER) + "\n")
    for p in points:
        fh.write(",".join(fmt(v) for v in (p.lam, p.total_rate_bits, p.entropy_coded_bits,
                                            p.mse_z, p.log_q)) + "\n")
