"""Posterior-blind scalar quantizers applied to posterior means.

Three codebook families are provided: a uniform grid, 1-D k-means, and
entropy-constrained generalized Lloyd. One codebook is shared across all
dimensions. Rates are information contents under the codebook's empirical
codeword frequencies.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, ParseError

REL_TOL = 1e-9
MAX_ITER = 500


@dataclass(frozen=True, eq=False)
class ScalarCodebook:
    grid: np.ndarray
    counts: np.ndarray
    origin: str
    delta: float | None = None
    lam: float | None = None
    history: tuple = field(default=(), repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0 or grid.shape != counts.shape:
            raise InvalidArgumentError("codebook needs matching non-empty grid and counts")
        if np.any(np.diff(grid) <= 0):
            raise InvalidArgumentError("codebook grid must be strictly increasing")
        if np.any(counts < 0) or counts.sum() <= 0:
            raise InvalidArgumentError("codebook counts must be nonnegative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "counts", counts)

    @property
    def probabilities(self):
        return self.counts / self.counts.sum()

    @property
    def code_lengths(self):
        with np.errstate(divide="ignore"):
            return -np.log2(self.probabilities)

    @property
    def entropy(self):
        p = self.probabilities
        p = p[p > 0]
        return float(-np.sum(p * np.log2(p)))

    def __len__(self):
        return self.grid.size


def _nearest(x, grid):
    """Index of the nearest grid point; exact midpoints go to the lower one."""
    if grid.size == 1:
        return np.zeros(x.shape, dtype=np.int64)
    mids = 0.5 * (grid[1:] + grid[:-1])
    return np.searchsorted(mids, x, side="left").astype(np.int64)


def _penalized(x, grid, lengths, lam, chunk=1 << 16):
    out = np.empty(x.shape, dtype=np.int64)
    for s in range(0, x.size, chunk):
        xs = x[s:s + chunk, None]
        out[s:s + chunk] = np.argmin((xs - grid[None, :]) ** 2 + lam * lengths[None, :], axis=1)
    return out


def uniform_quantize(means, delta):
    """Round to the nearest multiple of ``delta`` (half to even).

    Returns ``(indices, codebook)`` where ``indices`` are the integer grid
    multiples and the codebook holds the used grid points with their counts.
    """
    if not delta > 0:
        raise InvalidArgumentError(f"delta must be > 0, got {delta}")
    means = np.asarray(means, dtype=np.float64).ravel()
    idx = np.rint(means / delta).astype(np.int64)
    used, counts = np.unique(idx, return_counts=True)
    return idx, ScalarCodebook(used * delta, counts, f"uniform(delta={delta!r})", delta=delta)


def _quantile_init(x, k):
    return np.quantile(x, np.arange(1, k + 1) / (k + 1))


def kmeans_codebook(samples, k, seed=0):
    """1-D Lloyd iterations from quantile initialization.

    An empty cluster is re-seeded at the sample farthest from its centroid;
    ``seed`` only breaks ties among equally far samples.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    k = int(k)
    if k < 1 or np.unique(x).size < k:
        raise InvalidArgumentError("need k >= 1 and at least k distinct samples")
    rng = np.random.default_rng(seed)
    c = np.sort(_quantile_init(x, k))
    history = []
    for _ in range(MAX_ITER):
        a = _nearest(x, c)
        occ = np.bincount(a, minlength=k)
        while np.any(occ == 0):
            j = int(np.flatnonzero(occ == 0)[0])
            err = np.abs(x - c[a])
            far = np.flatnonzero(err == err.max())
            c[j] = x[rng.choice(far)]
            c = np.sort(c)
            a = _nearest(x, c)
            occ = np.bincount(a, minlength=k)
        history.append(float(np.mean((x - c[a]) ** 2)))
        new = np.bincount(a, weights=x, minlength=k) / occ
        shift = np.max(np.abs(new - c))
        c = new
        if shift <= REL_TOL * max(1.0, float(np.max(np.abs(c)))):
            break
    a = _nearest(x, c)
    occ = np.bincount(a, minlength=k)
    keep = occ > 0
    return ScalarCodebook(c[keep], occ[keep], "kmeans", history=tuple(history))


def lloyd_ec_codebook(samples, k_init, lam, seed=0):
    """Entropy-constrained generalized Lloyd (Chou, Lookabaugh & Gray).

    Alternates penalized assignment ``(x - c_j)**2 + lam * (-log2 p_j)``,
    conditional-mean centroids and occupancy probabilities until the
    Lagrangian ``MSE + lam * H`` improves by less than 1e-9 relative.
    Unused codewords are pruned. ``history`` records the Lagrangian.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    k = int(k_init)
    if k < 1 or np.unique(x).size < k:
        raise InvalidArgumentError("need k_init >= 1 and at least k_init distinct samples")
    if not lam >= 0:
        raise InvalidArgumentError(f"lambda must be >= 0, got {lam}")
    del seed  # initialization is deterministic; kept for a uniform signature
    c = np.sort(_quantile_init(x, k))
    lengths = np.full(k, np.log2(k))
    history = []
    for _ in range(MAX_ITER):
        a = _penalized(x, c, lengths, lam)
        occ = np.bincount(a, minlength=c.size)
        keep = occ > 0
        c = (np.bincount(a, weights=x, minlength=c.size)[keep] / occ[keep])
        occ = occ[keep]
        p = occ / x.size
        lengths = -np.log2(p)
        remap = np.cumsum(keep) - 1
        a = remap[a]
        order = np.argsort(c, kind="stable")
        c, occ, lengths = c[order], occ[order], lengths[order]
        inv = np.empty_like(order)
        inv[order] = np.arange(order.size)
        a = inv[a]
        mse = float(np.mean((x - c[a]) ** 2))
        entropy = float(np.dot(p[order], lengths))
        cost = mse + lam * entropy
        history.append(cost)
        if c.size == 1 or (len(history) > 1 and history[-2] - cost <= REL_TOL * abs(history[-2])):
            break
    # merge any coincident centroids so the grid is strictly increasing
    c, inv_u = np.unique(c, return_inverse=True)
    occ = np.bincount(inv_u, weights=occ)
    return ScalarCodebook(c, occ, f"lloyd(lambda={lam!r})", lam=float(lam), history=tuple(history))


def codebook_quantize(means, codebook):
    """Returns ``(indices, rate_bits, mse)``.

    Lloyd codebooks use their penalized assignment; others use nearest
    codeword. ``rate_bits`` sums ``-log2 p`` of the chosen codewords.
    """
    x = np.asarray(means, dtype=np.float64).ravel()
    if codebook.lam is not None and codebook.lam > 0:
        lengths = codebook.code_lengths
        idx = _penalized(x, codebook.grid, lengths, codebook.lam)
    else:
        idx = _nearest(x, codebook.grid)
    lengths = codebook.code_lengths[idx]
    rate = float(np.sum(lengths))
    mse = float(np.mean((x - codebook.grid[idx]) ** 2)) if x.size else 0.0
    return idx, rate, mse


def write_codebook_csv(path, codebook):
    with open(path, "w") as fh:
        fh.write(f"# origin: {codebook.origin}\n")
        fh.write(f"# samples: {int(round(codebook.counts.sum()))}\n")
        fh.write("grid_point,probability\n")
        for g, p in zip(codebook.grid, codebook.probabilities):
            fh.write(f"{g:.17g},{p:.17g}\n")


def read_codebook_csv(path):
    origin = "unknown"
    n = None
    grid, probs = [], []
    with open(path) as fh:
        header_seen = False
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                if key.strip() == "origin":
                    origin = val.strip()
                elif key.strip() == "samples":
                    n = int(val)
                continue
            if not header_seen:
                if line != "grid_point,probability":
                    raise ParseError(f"{path}:{lineno}: expected header 'grid_point,probability'")
                header_seen = True
                continue
            try:
                g, p = (float(v) for v in line.split(","))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: cannot parse {line!r}") from None
            grid.append(g)
            probs.append(p)
    probs = np.array(probs)
    counts = np.rint(probs * n) if n else probs
    lam = None
    delta = None
    if origin.startswith("lloyd(lambda="):
        lam = float(origin[len("lloyd(lambda="):-1])
    elif origin.startswith("uniform(delta="):
        delta = float(origin[len("uniform(delta="):-1])
    return ScalarCodebook(np.array(grid), counts, origin, delta=delta, lam=lam)
