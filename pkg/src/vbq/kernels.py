"""Per-dimension rate-distortion search over dyadic code points.

For each dimension the search walks rates r = 1, 2, ... and evaluates the
two rate-r grid points that bracket the posterior mode's quantile. It keeps
a candidate only on strict improvement, left before right, so ties go to
the lower rate and then to the smaller value. It stops once no longer code
point can beat the incumbent, or at the rate cap.

``search_numba`` and ``search_numpy`` are interchangeable and bit-identical.
"""
import math

import numpy as np

from ._accel import backend, njit
from .prior import prior_cdf, prior_cdf_vec, prior_ppf, prior_ppf_vec

POW2 = np.array([math.ldexp(1.0, k) for k in range(62)])
INV_POW2 = np.array([math.ldexp(1.0, -k) for k in range(62)])


@njit
def _search_kernel(kind, loc, scale, kz, kp, slo, shi, mu, sigma2, lam, rate_cap,
                   pow2, inv_pow2, out_n, out_r, out_ell, out_rterm, out_evals, out_capped):
    for i in range(mu.shape[0]):
        m = mu[i]
        s2 = sigma2[i]
        xi = prior_cdf(kind, loc, scale, kz, kp, slo, shi, m)
        d_dag = (prior_ppf(kind, loc, scale, kz, kp, slo, shi, xi) - m) ** 2
        best_n = 0
        best_r = 0
        best_l = np.inf
        best_d = np.inf
        evals = 0
        capped = False
        r = 0
        while True:
            r += 1
            x = xi * pow2[r]
            nl = np.int64(math.floor(x))
            nr = np.int64(math.ceil(x))
            if nl != 0:
                n = nl
                rr = r
                while (n & 1) == 0:
                    n >>= 1
                    rr -= 1
                d = (prior_ppf(kind, loc, scale, kz, kp, slo, shi, n * inv_pow2[rr]) - m) ** 2
                ell = d + 2.0 * lam * s2 * rr
                evals += 1
                if ell < best_l:
                    best_n, best_r, best_l, best_d = n, rr, ell, d
            if nr != (np.int64(1) << r) and nr != nl:
                n = nr
                rr = r
                while (n & 1) == 0:
                    n >>= 1
                    rr -= 1
                d = (prior_ppf(kind, loc, scale, kz, kp, slo, shi, n * inv_pow2[rr]) - m) ** 2
                ell = d + 2.0 * lam * s2 * rr
                evals += 1
                if ell < best_l:
                    best_n, best_r, best_l, best_d = n, rr, ell, d
            if (best_d - d_dag) / (2.0 * s2) < lam * (r + 1 - best_r):
                break
            if r >= rate_cap:
                capped = True
                break
        out_n[i] = best_n
        out_r[i] = best_r
        out_ell[i] = best_l
        out_rterm[i] = r
        out_evals[i] = evals
        out_capped[i] = capped


def _alloc(k):
    return (
        np.zeros(k, dtype=np.int64),
        np.zeros(k, dtype=np.int64),
        np.full(k, np.inf),
        np.zeros(k, dtype=np.int64),
        np.zeros(k, dtype=np.int64),
        np.zeros(k, dtype=np.bool_),
    )


def search_numba(prior_args, mu, sigma2, lam, rate_cap):
    out = _alloc(mu.shape[0])
    _search_kernel(*prior_args, mu, sigma2, float(lam), int(rate_cap), POW2, INV_POW2, *out)
    return out


def _canonical(n, r):
    """Strip trailing zero bits from positive integers ``n`` at rate ``r``."""
    n = n.copy()
    rr = np.full(n.shape, r, dtype=np.int64)
    even = (n & 1) == 0
    while even.any():
        n[even] >>= 1
        rr[even] -= 1
        even = (n & 1) == 0
    return n, rr


def search_numpy(prior_args, mu, sigma2, lam, rate_cap):
    """Vectorized over dimensions; one pass per rate."""
    k = mu.shape[0]
    out_n, out_r, out_ell, out_rterm, out_evals, out_capped = _alloc(k)
    best_d = np.full(k, np.inf)
    lam = float(lam)

    xi = prior_cdf_vec(*prior_args, mu)
    d_dag = (prior_ppf_vec(*prior_args, xi) - mu) ** 2
    active = np.arange(k)

    def consider(idx, n_grid, r):
        n, rr = _canonical(n_grid, r)
        d = (prior_ppf_vec(*prior_args, n * INV_POW2[rr]) - mu[idx]) ** 2
        ell = d + 2.0 * lam * sigma2[idx] * rr
        out_evals[idx] += 1
        better = ell < out_ell[idx]
        j = idx[better]
        out_n[j] = n[better]
        out_r[j] = rr[better]
        out_ell[j] = ell[better]
        best_d[j] = d[better]

    for r in range(1, int(rate_cap) + 1):
        x = xi[active] * POW2[r]
        nl = np.floor(x).astype(np.int64)
        nr = np.ceil(x).astype(np.int64)
        ok = nl != 0
        if ok.any():
            consider(active[ok], nl[ok], r)
        ok = (nr != (1 << r)) & (nr != nl)
        if ok.any():
            consider(active[ok], nr[ok], r)
        out_rterm[active] = r
        stop = (best_d[active] - d_dag[active]) / (2.0 * sigma2[active]) < lam * (r + 1 - out_r[active])
        if r == rate_cap:
            out_capped[active[~stop]] = True
        active = active[~stop]
        if active.size == 0:
            break
    return out_n, out_r, out_ell, out_rterm, out_evals, out_capped


def search(prior_args, mu, sigma2, lam, rate_cap):
    """Dispatch to the active backend."""
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    sigma2 = np.ascontiguousarray(sigma2, dtype=np.float64)
    if backend() == "numba":
        return search_numba(prior_args, mu, sigma2, lam, rate_cap)
    return search_numpy(prior_args, mu, sigma2, lam, rate_cap)
