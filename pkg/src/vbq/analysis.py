"""Experiment harness on synthetic posteriors.

Every report is a pure function of its seed and arguments.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import baselines
from .codec import build_frequency_table, information_content
from .core import RdConfig, fmt, quantize_arrays
from .errors import InvalidArgumentError
from .prior import ScaledGaussian, StandardNormal


# -- sources ---------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSource:
    """Mean-field Gaussian posteriors for ``k`` dimensions.

    Variances are log-uniform on ``[var_low, var_high]``. With
    ``mean_model="independent"`` the means are ``N(0, mean_var)``; with
    ``"calibrated"`` they are ``N(0, mean_var - sigma2)`` so that the
    aggregate posterior matches an ``N(0, mean_var)`` prior.
    """

    seed: int
    k: int
    mean_var: float = 1.0
    var_low: float = 1e-4
    var_high: float = 1.0
    mean_model: str = "independent"

    def posteriors(self):
        rng = np.random.default_rng(self.seed)
        sigma2 = np.exp(rng.uniform(math.log(self.var_low), math.log(self.var_high), self.k))
        if self.mean_model == "independent":
            spread = np.full(self.k, self.mean_var)
        elif self.mean_model == "calibrated":
            spread = np.maximum(self.mean_var - sigma2, 0.0)
        else:
            raise InvalidArgumentError(f"unknown mean model {self.mean_model!r}")
        mu = rng.standard_normal(self.k) * np.sqrt(spread)
        return mu, sigma2

    def describe(self):
        return (f"seed={self.seed} k={self.k} mean_var={self.mean_var!r} "
                f"var=[{self.var_low!r},{self.var_high!r}] means={self.mean_model}")


def _prior_moments(prior):
    if isinstance(prior, StandardNormal):
        return 0.0, 1.0
    if isinstance(prior, ScaledGaussian):
        return prior.mean, prior.variance
    raise InvalidArgumentError("closed-form KL needs a Gaussian prior")


def gaussian_kl(mu, sigma2, prior_mean=0.0, prior_var=1.0):
    """KL(N(mu, sigma2) || N(prior_mean, prior_var)) in nats."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    return (0.5 * np.log(prior_var / sigma2)
            + (sigma2 + (mu - prior_mean) ** 2) / (2.0 * prior_var) - 0.5)


def psnr(mse, peak=1.0):
    return 10.0 * math.log10(peak ** 2 / mse) if mse > 0 else math.inf


# -- anisotropy ------------------------------------------------------------

@dataclass(frozen=True)
class AnisotropyReport:
    mode: tuple
    sigma2: tuple
    lam: float
    vbq_point: tuple
    vbq_rates: tuple
    vbq_distance: float
    vbq_log_q: float
    uniform_delta: float
    uniform_point: tuple
    uniform_distance: float
    uniform_log_q: float
    vbq_log_post: float = math.nan
    uniform_log_post: float = math.nan

    def rows(self):
        yield ("vbq", self.vbq_point, self.vbq_distance, self.vbq_log_q, self.vbq_log_post)
        yield ("uniform", self.uniform_point, self.uniform_distance, self.uniform_log_q,
               self.uniform_log_post)


def _mf_log_q(z, mu, sigma2):
    return float(-np.sum((np.asarray(z) - mu) ** 2 / (2.0 * sigma2)))


def _round_distance(delta, mode):
    return float(np.linalg.norm(np.rint(mode / delta) * delta - mode))


def match_uniform_delta(mode, target, n_grid=4000):
    """Smallest grid spacing whose rounding of ``mode`` lies at distance ``target``.

    Distance is continuous in ``delta`` while the rounded indices stay fixed,
    so sign changes inside such a piece are refined by bisection.
    """
    mode = np.asarray(mode, dtype=np.float64)
    if target <= 0:
        raise InvalidArgumentError("target distance must be positive")
    hi = 4.0 * (float(np.max(np.abs(mode))) + target)
    deltas = np.geomspace(target * math.sqrt(2.0) * 0.999, hi, n_grid)
    best = None
    prev = None
    for d in deltas:
        idx = np.rint(mode / d)
        f = _round_distance(d, mode) - target
        if prev is not None:
            pd, pidx, pf = prev
            if np.array_equal(idx, pidx) and pf * f <= 0:
                a, b = pd, d
                for _ in range(200):
                    m = 0.5 * (a + b)
                    fm = _round_distance(m, mode) - target
                    if (fm <= 0) == (pf <= 0):
                        a, pf = m, fm
                    else:
                        b = m
                return 0.5 * (a + b)
        if best is None or abs(f) < best[1]:
            best = (d, abs(f))
        prev = (d, idx, f)
    return best[0]


def anisotropy_comparison(mode, sigma2, prior, lam, precision=None):
    """Quantize a 2-D (or K-D) diagonal posterior with VBQ and with
    distance-matched uniform rounding of its mode."""
    mode = np.asarray(mode, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    q = quantize_arrays(mode, sigma2, prior, RdConfig(lam))
    z_v = q.reconstruction
    d_v = float(np.linalg.norm(z_v - mode))
    delta = match_uniform_delta(mode, d_v) if d_v > 0 else math.inf
    z_u = np.rint(mode / delta) * delta if d_v > 0 else mode.copy()
    d_u = float(np.linalg.norm(z_u - mode))

    def full(z):
        if precision is None:
            return math.nan
        e = z - mode
        return float(-0.5 * e @ precision @ e)

    return AnisotropyReport(
        tuple(mode.tolist()), tuple(sigma2.tolist()), float(lam),
        tuple(z_v.tolist()), tuple(int(r) for r in q.rates), d_v, _mf_log_q(z_v, mode, sigma2),
        float(delta), tuple(z_u.tolist()), d_u, _mf_log_q(z_u, mode, sigma2),
        full(z_v), full(z_u),
    )


def toy_regression_demo(seed=0, sigma_ratio=0.1, lam=1.0, n=20, noise_std=0.5,
                        prior_var=1.0, true_params=(0.8, -0.4)):
    """Bayesian linear regression ``y = a x + b`` with a Gaussian prior.

    The inputs are rescaled so the mean-field posterior standard deviations
    satisfy ``sigma_a / sigma_b == sigma_ratio``. Returns an
    :class:`AnisotropyReport` on the mean-field approximation, with the full
    posterior's log-density alongside.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, n)
    alpha = 1.0 / prior_var
    beta = 1.0 / noise_std ** 2
    lam_bb = alpha + beta * n
    scale2 = (lam_bb / sigma_ratio ** 2 - alpha) / (beta * np.sum(x ** 2))
    if scale2 <= 0:
        raise InvalidArgumentError("sigma_ratio not attainable")
    x = x * math.sqrt(scale2)
    a, b = true_params
    y = a * x + b + noise_std * rng.standard_normal(n)
    design = np.column_stack([x, np.ones(n)])
    precision = alpha * np.eye(2) + beta * design.T @ design
    mode = np.linalg.solve(precision, beta * design.T @ y)
    mf_var = 1.0 / np.diag(precision)
    return anisotropy_comparison(mode, mf_var, ScaledGaussian(0.0, prior_var), lam,
                                 precision=precision)


# -- rate vs information content -------------------------------------------

@dataclass(frozen=True)
class RateInfoScatter:
    pairs: tuple
    slope: float
    rank_correlation: float


def rate_info_scatter(symbols, table=None):
    """``(R, -log2 p)`` per distinct symbol, with the least-squares slope of
    ``h`` on ``R`` and the Spearman rank correlation."""
    symbols = list(symbols)
    if table is None:
        table = build_frequency_table(symbols)
    present = sorted(set(symbols), key=lambda s: s.sort_key())
    total = table.total
    pairs = tuple((s.rate, -math.log2(table.count(s) / total)) for s in present)
    r = np.array([p[0] for p in pairs], dtype=np.float64)
    h = np.array([p[1] for p in pairs])
    slope = math.nan
    corr = math.nan
    if r.size >= 2 and np.ptp(r) > 0:
        slope = float(np.polyfit(r, h, 1)[0])
        if np.ptp(h) > 0:
            corr = float(stats.spearmanr(r, h)[0])
    return RateInfoScatter(pairs, slope, corr)


# -- posterior collapse ----------------------------------------------------

@dataclass(frozen=True)
class ChannelReport:
    channel: str
    n_dims: int
    vbq_bits: float
    vbq_info_bits: float
    uniform_bits: float
    kl: float


def _uniform_bits(means, delta):
    idx, _ = baselines.uniform_quantize(means, delta)
    _, inv, counts = np.unique(idx, return_inverse=True, return_counts=True)
    return -np.log2(counts[inv] / idx.size)


def match_uniform_rate(means, target_bits, rel_tol=0.01, iters=100):
    """Bisect the grid spacing so the uniform baseline's total information
    content matches ``target_bits``; returns ``(delta, per-dim bits)``."""
    means = np.asarray(means, dtype=np.float64)
    spread = float(np.max(np.abs(means))) + 1e-12
    lo, hi = spread * 1e-9, spread * 4.0
    best = None
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        bits = _uniform_bits(means, mid)
        total = float(bits.sum())
        if best is None or abs(total - target_bits) < abs(best[2] - target_bits):
            best = (mid, bits, total)
        if abs(total - target_bits) <= rel_tol * target_bits:
            break
        if total > target_bits:
            lo = mid
        else:
            hi = mid
    return best[0], best[1]


def collapse_report(channels, prior, lam):
    """Per-channel bit allocation of VBQ against a rate-matched uniform grid.

    ``channels`` maps a channel name to ``(mu, sigma2)`` arrays. ``vbq_bits``
    is the mean code-point bitlength, ``vbq_info_bits`` the mean information
    content under the pooled empirical table, ``uniform_bits`` the mean
    information content of a uniform grid whose pooled total matches VBQ's
    within 1%.
    """
    names = list(channels)
    mus = [np.asarray(channels[c][0], dtype=np.float64) for c in names]
    s2s = [np.asarray(channels[c][1], dtype=np.float64) for c in names]
    mu = np.concatenate(mus)
    sigma2 = np.concatenate(s2s)
    q = quantize_arrays(mu, sigma2, prior, RdConfig(lam))
    pts = q.code_points
    table = build_frequency_table(pts)
    total = table.total
    info = np.array([-math.log2(table.count(s) / total) for s in pts])
    _, u_bits = match_uniform_rate(mu, float(info.sum()))
    m0, v0 = _prior_moments(prior)
    kl = gaussian_kl(mu, q.sigma2, m0, v0)
    out = []
    start = 0
    for name, m in zip(names, mus):
        sl = slice(start, start + m.size)
        start += m.size
        out.append(ChannelReport(str(name), m.size, float(q.rates[sl].mean()),
                                 float(info[sl].mean()), float(u_bits[sl].mean()),
                                 float(kl[sl].mean())))
    return out


def collapse_replica(seed=0, dims=4096, collapsed=(2, 3, 5), n_channels=6):
    """Six-channel source shaped like a VAE with partial posterior collapse.

    Collapsed channels have ``sigma2 ~ 1`` and means tight around 0;
    the others have small variances and means spread like the prior.
    """
    rng = np.random.default_rng(seed)
    channels = {}
    for c in range(1, n_channels + 1):
        if c in collapsed:
            s2 = rng.uniform(0.9, 1.0, dims)
            mu = rng.standard_normal(dims) * 0.05
        else:
            s2 = np.exp(rng.uniform(math.log(1e-3), math.log(1e-1), dims))
            mu = rng.standard_normal(dims) * np.sqrt(1.0 - s2)
        channels[f"ch{c}"] = (mu, s2)
    return channels


# -- rate-distortion comparison --------------------------------------------

@dataclass(frozen=True)
class RdRow:
    method: str
    param: float
    bitrate_per_dim: float
    mse_z: float
    weighted_mse: float = math.nan


def _weighted(z_hat, mu, sigma2):
    return float(np.mean((z_hat - mu) ** 2 / np.maximum(sigma2, 1e-12)))


def vbq_curve(mu, sigma2, prior, lambdas, rate_cap=32):
    rows = []
    for lam in lambdas:
        q = quantize_arrays(mu, sigma2, prior, RdConfig(lam, rate_cap=rate_cap))
        pts = q.code_points
        bits = information_content(pts, build_frequency_table(pts))
        rows.append(RdRow("vbq", float(lam), bits / len(pts), q.mse_z,
                          _weighted(q.reconstruction, q.mu, q.sigma2)))
    return rows


def compare_rd(mu, sigma2, prior, lambdas, deltas=(), ks=(), lloyd_lams=(), k_init=32, seed=0):
    """R-D rows for VBQ and the posterior-blind baselines on the same means.

    Bitrates are information contents per dimension under each method's
    empirical codeword frequencies; ``mse_z`` is measured against the means.
    ``weighted_mse`` divides each squared error by the posterior variance.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    rows = vbq_curve(mu, sigma2, prior, lambdas)

    def row(method, param, cb):
        idx, bits, mse = baselines.codebook_quantize(mu, cb)
        rows.append(RdRow(method, float(param), bits / mu.size, mse,
                          _weighted(cb.grid[idx], mu, sigma2)))

    for d in deltas:
        row("uniform", d, baselines.uniform_quantize(mu, d)[1])
    for k in ks:
        row("kmeans", k, baselines.kmeans_codebook(mu, k, seed=seed))
    for lam in lloyd_lams:
        row("lloyd", lam, baselines.lloyd_ec_codebook(mu, k_init, lam, seed=seed))
    return rows


def interpolate_mse(rows, rate, metric="mse_z"):
    """Linear interpolation of a method's distortion at ``rate``; NaN outside its range."""
    pts = sorted((r.bitrate_per_dim, getattr(r, metric)) for r in rows)
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if rate < xs[0] or rate > xs[-1]:
        return math.nan
    # collapse duplicate rates to their best MSE
    ux, inv = np.unique(xs, return_inverse=True)
    uy = np.full(ux.size, np.inf)
    np.minimum.at(uy, inv, ys)
    return float(np.interp(rate, ux, uy))


def matched_rate_wins(vbq_rows, other_rows, metric="mse_z"):
    """``(wins, comparisons)`` over ``other_rows`` points inside VBQ's rate
    range, counting where interpolated VBQ distortion is no worse."""
    wins = n = 0
    for r in other_rows:
        m = interpolate_mse(vbq_rows, r.bitrate_per_dim, metric)
        if math.isnan(m):
            continue
        n += 1
        wins += m <= getattr(r, metric)
    return wins, n


def write_rd_rows(fh, rows, comments=()):
    for c in comments:
        fh.write(f"# {c}\n")
    fh.write("method,param,bitrate_per_dim,mse_z,weighted_mse\n")
    for r in rows:
        fh.write(f"{r.method},{fmt(r.param)},{fmt(r.bitrate_per_dim)},{fmt(r.mse_z)},"
                 f"{fmt(r.weighted_mse)}\n")


def write_channel_reports(fh, reports, comments=()):
    for c in comments:
        fh.write(f"# {c}\n")
    fh.write("channel,n_dims,vbq_bits,vbq_info_bits,uniform_bits,kl\n")
    for r in reports:
        fh.write(",".join([r.channel, str(r.n_dims), fmt(r.vbq_bits), fmt(r.vbq_info_bits),
                           fmt(r.uniform_bits), fmt(r.kl)]) + "\n")
