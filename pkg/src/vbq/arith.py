"""Static-model binary arithmetic coder kernels.

62-bit integer state held in int64, frequency totals below 2**32. Each
symbol narrows ``[low, high]`` by ``step = range // total`` so no product
exceeds the state width. Termination follows Witten, Neal & Cleary: two
final bits plus pending underflow bits, decoder pads with zeros. For ``S``
renormalization shifts the encoder writes exactly ``S + 2`` bits.

The same source runs under numba and as plain Python (on Python ints).
"""
import numpy as np

from ._accel import backend, njit

STATE_BITS = 62
FULL = 1 << STATE_BITS
MASK = FULL - 1
HALF = 1 << (STATE_BITS - 1)
QUARTER = 1 << (STATE_BITS - 2)
THREE_QUARTERS = 3 * QUARTER
MAX_TOTAL = (1 << 32) - 1


def _encode(sym, cum, total, out):
    """Write bits of ``sym`` into ``out``; returns bit count or -1 if ``out`` is full."""
    cap = len(out)
    low = 0
    high = MASK
    pending = 0
    pos = 0
    for k in range(len(sym)):
        s = sym[k]
        step = (high - low + 1) // total
        high = low + step * cum[s + 1] - 1
        low = low + step * cum[s]
        while True:
            if high < HALF:
                bit = 0
            elif low >= HALF:
                bit = 1
                low -= HALF
                high -= HALF
            elif low >= QUARTER and high < THREE_QUARTERS:
                pending += 1
                low -= QUARTER
                high -= QUARTER
                low = low << 1
                high = (high << 1) | 1
                continue
            else:
                break
            if pos + pending + 1 > cap:
                return -1
            out[pos] = bit
            pos += 1
            while pending > 0:
                out[pos] = 1 - bit
                pos += 1
                pending -= 1
            low = low << 1
            high = (high << 1) | 1
    pending += 1
    bit = 0 if low < QUARTER else 1
    if pos + pending + 1 > cap:
        return -1
    out[pos] = bit
    pos += 1
    while pending > 0:
        out[pos] = 1 - bit
        pos += 1
        pending -= 1
    return pos


def _decode(bits, nbits, cum, total, count, out):
    """Decode ``count`` symbols into ``out``.

    Returns ``(status, shifts)``: status is ``count`` on success or the
    index of the symbol that failed; ``shifts`` is the number of
    renormalization shifts so far.
    """
    nsym = len(cum) - 1
    low = 0
    high = MASK
    code = 0
    pos = 0
    for _ in range(STATE_BITS):
        b = bits[pos] if pos < nbits else 0
        code = (code << 1) | b
        pos += 1
    for k in range(count):
        step = (high - low + 1) // total
        v = (code - low) // step
        if v >= total:
            return k, pos - STATE_BITS
        lo = 0
        hi = nsym
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if cum[mid] <= v:
                lo = mid
            else:
                hi = mid
        out[k] = lo
        high = low + step * cum[lo + 1] - 1
        low = low + step * cum[lo]
        while True:
            if high < HALF:
                pass
            elif low >= HALF:
                low -= HALF
                high -= HALF
                code -= HALF
            elif low >= QUARTER and high < THREE_QUARTERS:
                low -= QUARTER
                high -= QUARTER
                code -= QUARTER
            else:
                break
            b = bits[pos] if pos < nbits else 0
            low = low << 1
            high = (high << 1) | 1
            code = (code << 1) | b
            pos += 1
    return count, pos - STATE_BITS


_encode_nb = njit(_encode)
_decode_nb = njit(_decode)


def encode_indices(sym, cum, capacity):
    """Encode symbol indices; returns a uint8 array of bits (or None on overflow)."""
    sym = np.ascontiguousarray(sym, dtype=np.int64)
    cum = np.ascontiguousarray(cum, dtype=np.int64)
    total = int(cum[-1])
    out = np.zeros(capacity, dtype=np.uint8)
    if backend() == "numba":
        n = _encode_nb(sym, cum, total, out)
    else:
        n = _encode(sym.tolist(), cum.tolist(), total, out)
    if n < 0:
        return None
    return out[:n]


def decode_indices(bits, cum, count):
    """Returns ``(indices, status, shifts)``; see :func:`_decode`."""
    bits = np.ascontiguousarray(bits, dtype=np.int64)
    cum = np.ascontiguousarray(cum, dtype=np.int64)
    total = int(cum[-1])
    out = np.zeros(count, dtype=np.int64)
    if backend() == "numba":
        status, shifts = _decode_nb(bits, bits.shape[0], cum, total, count, out)
    else:
        status, shifts = _decode(bits.tolist(), bits.shape[0], cum.tolist(), total, count, out)
    return out, int(status), int(shifts)
