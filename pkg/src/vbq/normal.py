"""Standard normal CDF and quantile function, scalar (jittable) and vectorized.

The quantile uses Wichura's AS241 (PPND16) rational approximation, relative
accuracy about 1e-16 over the whole open unit interval.

The vectorized variants route ``log``/``erfc`` through :mod:`math` (libm),
the same library numba calls, so both backends agree to the last bit.
"""
import math

import numpy as np

from ._accel import njit

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

_ulog = np.frompyfunc(math.log, 1, 1)
_uerfc = np.frompyfunc(math.erfc, 1, 1)


def _libm(ufunc, x):
    return np.asarray(ufunc(x), dtype=np.float64)


@njit
def norm_cdf(z):
    return 0.5 * math.erfc(-z / SQRT2)


@njit
def norm_ppf(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    if q < 0.0:
        return -num / den
    return num / den


def norm_cdf_vec(z):
    z = np.asarray(z, dtype=np.float64)
    return 0.5 * _libm(_uerfc, -z / SQRT2)


def norm_ppf_vec(p):
    """Vectorized AS241; same operation order as :func:`norm_ppf`."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        out[central] = qc * num / den

    tail = ~central
    if tail.any():
        qt = q[tail]
        pt = p[tail]
        r = np.where(qt < 0.0, pt, 1.0 - pt)
        r = np.sqrt(-_libm(_ulog, r))
        val = np.empty_like(r)
        near = r <= 5.0
        if near.any():
            s = r[near] - 1.6
            num = (((((((7.7454501427834140764e-4 * s + 0.0227238449892691845833) * s
                        + 0.24178072517745061177) * s + 1.27045825245236838258) * s
                      + 3.64784832476320460504) * s + 5.7694972214606914055) * s
                    + 4.6303378461565452959) * s + 1.42343711074968357734)
            den = (((((((1.05075007164441684324e-9 * s + 5.475938084995344946e-4) * s
                        + 0.0151986665636164571966) * s + 0.14810397642748007459) * s
                      + 0.68976733498510000455) * s + 1.6763848301838038494) * s
                    + 2.05319162663775882187) * s + 1.0)
            val[near] = num / den
        far = ~near
        if far.any():
            s = r[far] - 5.0
            num = (((((((2.01033439929228813265e-7 * s + 2.71155556874348757815e-5) * s
                        + 0.0012426609473880784386) * s + 0.026532189526576123093) * s
                      + 0.29656057182850489123) * s + 1.7848265399172913358) * s
                    + 5.4637849111641143699) * s + 6.6579046435011037772)
            den = (((((((2.04426310338993978564e-15 * s + 1.4215117583164458887e-7) * s
                        + 1.8463183175100546818e-5) * s + 7.868691311456132591e-4) * s
                      + 0.0148753612908506148525) * s + 0.13692988092273580531) * s
                    + 0.59983220655588793769) * s + 1.0)
            val[far] = num / den
        out[tail] = np.where(qt < 0.0, -val, val)
    return out
