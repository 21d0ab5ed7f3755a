"""Lossless coding of code-point sequences and the ``.vbq`` container.

Two schemes are provided:

* arithmetic coding of the code points as symbols under a static
  :class:`FrequencyTable` (the scheme used for reported bitrates), and
* concatenation of the binary fractions with the terminal 1 dropped, plus an
  arithmetic-coded stream of the rates.

Container layout (little-endian)::

    b"VBQ1" | version u8 | mode u8 | K u64 | prior
    | header-table:   u32 n_symbols, n_symbols x (code point wire form, count u32)
    | external-table: u32 crc32 of the serialized table
    | payload bit-length u64 | payload bytes (zero padded)
"""
import math
import struct
import zlib
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import arith
from .dyadic import MAX_RATE, CodePoint
from .errors import (
    ChecksumError,
    CodingError,
    ContainerError,
    DecodeError,
    InvalidArgumentError,
    MagicError,
    ParseError,
    TruncatedError,
)
from .prior import read_prior

MAGIC = b"VBQ1"
VERSION = 1
MODES = {"header-table": 0, "external-table": 1}
MODE_NAMES = {v: k for k, v in MODES.items()}


# -- bitstrings ------------------------------------------------------------

@dataclass(frozen=True)
class Bitstring:
    """``nbits`` bits packed MSB-first into ``data`` (zero padded)."""

    data: bytes
    nbits: int

    @classmethod
    def from_array(cls, bits):
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(np.packbits(bits).tobytes(), int(bits.size))

    @classmethod
    def from01(cls, text):
        return cls.from_array([int(c) for c in text])

    def to_array(self):
        return np.unpackbits(np.frombuffer(self.data, dtype=np.uint8), count=self.nbits)

    def to01(self):
        return "".join(map(str, self.to_array().tolist()))

    def __len__(self):
        return self.nbits

    def __add__(self, other):
        return Bitstring.from_array(np.concatenate([self.to_array(), other.to_array()]))


EMPTY_BITS = Bitstring(b"", 0)


# -- frequency tables ------------------------------------------------------

def _key(symbol):
    return symbol.sort_key() if isinstance(symbol, CodePoint) else (symbol,)


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """Static symbol counts, stored sorted by symbol key ((rate, numerator)
    for code points)."""

    symbols: tuple
    counts: np.ndarray
    _index: dict = field(repr=False, compare=False)

    @classmethod
    def from_counts(cls, mapping):
        items = sorted(mapping.items(), key=lambda kv: _key(kv[0]))
        if not items:
            raise InvalidArgumentError("frequency table needs at least one symbol")
        counts = np.array([int(c) for _, c in items], dtype=np.int64)
        if np.any(counts < 1):
            raise InvalidArgumentError("every count must be >= 1")
        if int(counts.sum()) > arith.MAX_TOTAL:
            raise InvalidArgumentError("table total exceeds 2^32 - 1")
        symbols = tuple(s for s, _ in items)
        counts.setflags(write=False)
        return cls(symbols, counts, {s: i for i, s in enumerate(symbols)})

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def cumulative(self):
        return np.concatenate([[0], np.cumsum(self.counts)])

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def __eq__(self, other):
        return (isinstance(other, FrequencyTable) and self.symbols == other.symbols
                and np.array_equal(self.counts, other.counts))

    __hash__ = None

    def count(self, symbol):
        return int(self.counts[self._index[symbol]])

    def as_dict(self):
        return dict(zip(self.symbols, self.counts.tolist()))

    def indices(self, symbols):
        idx = np.empty(len(symbols), dtype=np.int64)
        for i, s in enumerate(symbols):
            j = self._index.get(s)
            if j is None:
                raise CodingError(f"symbol {s!r} at index {i} is not in the frequency table")
            idx[i] = j
        return idx

    def to_bytes(self):
        """Header serialization of a code-point table."""
        parts = [struct.pack("<I", len(self.symbols))]
        for s, c in zip(self.symbols, self.counts.tolist()):
            parts.append(s.to_wire() + struct.pack("<I", c))
        return b"".join(parts)

    @classmethod
    def read(cls, buf, offset=0):
        """Parse :meth:`to_bytes` output; returns ``(table_or_None, new_offset)``."""
        if offset + 4 > len(buf):
            raise TruncatedError("truncated frequency table")
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        mapping = {}
        for _ in range(n):
            try:
                cp, offset = CodePoint.read_wire(buf, offset)
            except (ParseError, InvalidArgumentError) as exc:
                raise TruncatedError(f"bad frequency table entry: {exc}") from None
            if offset + 4 > len(buf):
                raise TruncatedError("truncated frequency table count")
            (c,) = struct.unpack_from("<I", buf, offset)
            offset += 4
            mapping[cp] = c
        if not mapping:
            return None, offset
        return cls.from_counts(mapping), offset

    def checksum(self):
        return zlib.crc32(self.to_bytes()) & 0xFFFFFFFF


def build_frequency_table(symbols, smoothing="none"):
    """Empirical counts; ``add_one`` adds one to every code point up to the
    largest observed rate."""
    symbols = list(symbols)
    if not symbols:
        raise InvalidArgumentError("need at least one symbol")
    counts = Counter(symbols)
    if smoothing == "add_one":
        rmax = max(s.rate for s in symbols)
        for r in range(1, rmax + 1):
            for n in range(1, 1 << r, 2):
                counts[CodePoint(n, r)] += 1
    elif smoothing != "none":
        raise InvalidArgumentError(f"unknown smoothing {smoothing!r}")
    return FrequencyTable.from_counts(counts)


def write_table_csv(path, table):
    with open(path, "w") as fh:
        fh.write("rate,numerator,count\n")
        for s, c in zip(table.symbols, table.counts.tolist()):
            fh.write(f"{s.rate},{s.numerator},{c}\n")


def read_table_csv(path):
    mapping = {}
    with open(path) as fh:
        header = None
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                if header != ["rate", "numerator", "count"]:
                    raise ParseError(f"{path}:{lineno}: expected header 'rate,numerator,count'")
                continue
            try:
                r, n, c = (int(v) for v in line.split(","))
                mapping[CodePoint(n, r)] = c
            except (ValueError, InvalidArgumentError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return FrequencyTable.from_counts(mapping)


# -- arithmetic coding -----------------------------------------------------

def information_content(symbols, table):
    """Total information content in bits, ``-sum log2(count / total)``."""
    idx = table.indices(list(symbols))
    if idx.size == 0:
        return 0.0
    occ = np.bincount(idx, minlength=len(table))
    bits = -np.log2(table.counts / table.total)
    return float(np.dot(occ, bits))


def ac_encode(symbols, table):
    symbols = list(symbols)
    idx = table.indices(symbols)
    h = information_content(symbols, table)
    capacity = int(math.ceil(h)) + idx.size + 4 * arith.STATE_BITS
    bits = arith.encode_indices(idx, table.cumulative, capacity)
    if bits is None:  # pragma: no cover - capacity bound is generous
        raise CodingError("arithmetic coder output buffer overflow")
    return Bitstring.from_array(bits)


def ac_decode(bits, table, count):
    if count == 0:
        if bits.nbits:
            raise DecodeError("trailing bits after an empty sequence", 0)
        return []
    idx, status, shifts = arith.decode_indices(bits.to_array(), table.cumulative, count)
    if status < count:
        raise DecodeError(f"corrupt stream while decoding symbol {status}", shifts)
    expected = shifts + 2
    if bits.nbits < expected:
        raise DecodeError(f"truncated stream: need {expected} bits, have {bits.nbits}", bits.nbits)
    if bits.nbits > expected:
        raise DecodeError(f"{bits.nbits - expected} unexpected trailing bits", expected)
    return [table.symbols[i] for i in idx.tolist()]


# -- concatenation codec ---------------------------------------------------

def _rate_table_bits(table):
    header = bytes([len(table)]) + b"".join(
        struct.pack("<BI", r, c) for r, c in zip(table.symbols, table.counts.tolist())
    )
    return Bitstring(header, 8 * len(header))


def concat_encode(symbols):
    """Returns ``(rate_stream, payload)``.

    ``payload`` holds bits ``b1..b(R-1)`` of every code point. ``rate_stream``
    is a rate histogram (u8 n, then n x (u8 rate, u32 count)) followed by the
    arithmetic-coded rates.
    """
    symbols = list(symbols)
    if not symbols:
        return EMPTY_BITS, EMPTY_BITS
    rates = [s.rate for s in symbols]
    table = FrequencyTable.from_counts(Counter(rates))
    rate_stream = _rate_table_bits(table) + ac_encode(rates, table)
    payload = "".join(s.to_bits()[:-1] for s in symbols)
    return rate_stream, Bitstring.from01(payload)


def concat_decode(rate_stream, payload, count):
    if count == 0:
        if rate_stream.nbits or payload.nbits:
            raise DecodeError("non-empty streams for an empty sequence", 0)
        return []
    raw = rate_stream.to_array()
    if raw.size < 8:
        raise DecodeError("truncated rate histogram", raw.size)
    head = np.packbits(raw[: (raw.size // 8) * 8]).tobytes()
    n = head[0]
    end = 1 + 5 * n
    if n == 0 or len(head) < end:
        raise DecodeError("truncated rate histogram", 8 * len(head))
    mapping = {}
    for j in range(n):
        r, c = struct.unpack_from("<BI", head, 1 + 5 * j)
        if not 1 <= r <= MAX_RATE:
            raise DecodeError(f"invalid rate {r} in histogram", 8 * (1 + 5 * j))
        mapping[r] = c
    table = FrequencyTable.from_counts(mapping)
    rates = ac_decode(Bitstring.from_array(raw[8 * end:]), table, count)
    need = sum(rates) - count
    if payload.nbits != need:
        raise DecodeError(f"payload holds {payload.nbits} bits, rates need {need}",
                          min(payload.nbits, need))
    bits = payload.to01()
    out = []
    pos = 0
    for r in rates:
        out.append(CodePoint(int(bits[pos:pos + r - 1] + "1", 2), r))
        pos += r - 1
    return out


# -- container -------------------------------------------------------------

@dataclass
class CompressedContainer:
    mode: str
    prior: object
    k: int
    payload: Bitstring
    table: FrequencyTable | None = None
    checksum: int | None = None
    code_points: list | None = None
    version: int = VERSION

    def header_bytes(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"unknown mode {self.mode!r}")
        parts = [MAGIC, bytes([self.version, MODES[self.mode]]), struct.pack("<Q", self.k),
                 self.prior.to_bytes()]
        if self.mode == "header-table":
            parts.append(self.table.to_bytes() if self.table is not None else struct.pack("<I", 0))
        else:
            parts.append(struct.pack("<I", self.checksum or 0))
        parts.append(struct.pack("<Q", self.payload.nbits))
        return b"".join(parts)

    def to_bytes(self):
        return self.header_bytes() + self.payload.data

    @property
    def header_bits(self):
        return 8 * len(self.header_bytes())

    @property
    def payload_bits(self):
        return self.payload.nbits

    @property
    def total_bits(self):
        return self.header_bits + self.payload_bits


def encode_container(code_points, prior, mode="header-table", table=None):
    code_points = list(code_points)
    if mode not in MODES:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if mode == "external-table" and table is None:
        raise InvalidArgumentError("external-table mode needs a frequency table")
    if mode == "header-table":
        table = build_frequency_table(code_points) if code_points else None
    payload = ac_encode(code_points, table) if code_points else EMPTY_BITS
    checksum = table.checksum() if (mode == "external-table") else None
    return CompressedContainer(mode, prior, len(code_points), payload, table, checksum,
                               code_points)


def write_container(code_points, prior, mode="header-table", table=None):
    return encode_container(code_points, prior, mode, table).to_bytes()


def read_container(data, table=None):
    """Parse and decode a container. External-table mode needs ``table``."""
    data = bytes(data)
    if len(data) < 6:
        raise TruncatedError("container shorter than its fixed header")
    if data[:4] != MAGIC:
        raise MagicError(f"bad magic {data[:4]!r}")
    if data[4] != VERSION:
        raise MagicError(f"unsupported version {data[4]}")
    mode = MODE_NAMES.get(data[5])
    if mode is None:
        raise ContainerError(f"unknown mode byte {data[5]}")
    off = 6
    if off + 8 > len(data):
        raise TruncatedError("truncated dimension count")
    (k,) = struct.unpack_from("<Q", data, off)
    off += 8
    try:
        prior, off = read_prior(data, off)
    except ParseError as exc:
        raise TruncatedError(str(exc)) from None
    checksum = None
    if mode == "header-table":
        table, off = FrequencyTable.read(data, off)
    else:
        if off + 4 > len(data):
            raise TruncatedError("truncated table checksum")
        (checksum,) = struct.unpack_from("<I", data, off)
        off += 4
        if k and table is None:
            raise ContainerError("external-table container needs the decoder's table")
        if table is not None and table.checksum() != checksum:
            raise ChecksumError(
                f"table checksum {table.checksum():08x} does not match container {checksum:08x}"
            )
    if off + 8 > len(data):
        raise TruncatedError("truncated payload length")
    (nbits,) = struct.unpack_from("<Q", data, off)
    off += 8
    nbytes = (nbits + 7) // 8
    if len(data) - off < nbytes:
        raise TruncatedError(f"payload needs {nbytes} bytes, have {len(data) - off}")
    if len(data) - off > nbytes:
        raise ContainerError(f"{len(data) - off - nbytes} trailing bytes after payload")
    payload = Bitstring(data[off:], nbits)
    if nbits % 8 and data[-1] & ((1 << (8 - nbits % 8)) - 1):
        raise ContainerError("nonzero padding bits")
    if k and table is None:
        raise ContainerError("header table is empty for a non-empty container")
    symbols = ac_decode(payload, table, k) if k else []
    if not k and nbits:
        raise ContainerError("payload present for an empty container")
    return CompressedContainer(mode, prior, k, payload, table, checksum, symbols)
