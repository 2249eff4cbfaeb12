"""Seeding, chunked sampling and standard-error helpers.

Every stochastic routine in the package takes an explicit 64-bit seed.  The
sample index range is partitioned into fixed-size chunks with per-chunk
generators derived through :class:`numpy.random.SeedSequence`, and reductions
run in chunk order, so results are bit-reproducible for a fixed seed and
chunk size no matter how chunks would be scheduled.
"""

import math

import numpy as np

DEFAULT_CHUNK = 1 << 14
N_BATCHES = 32


def chunk_generators(seed: int, n: int, chunk: int = DEFAULT_CHUNK):
    """Yield ``(lo, hi, rng)`` triples covering ``range(n)`` in fixed chunks."""
    if n <= 0:
        return
    n_chunks = math.ceil(n / chunk)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    for idx in range(n_chunks):
        lo = idx * chunk
        hi = min(n, lo + chunk)
        yield lo, hi, np.random.default_rng(children[idx])


def collect_chunks(seed: int, n: int, fn, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Concatenate ``fn(size, rng)`` outputs over the chunk partition."""
    parts = [fn(hi - lo, rng) for lo, hi, rng in chunk_generators(seed, n, chunk)]
    return np.concatenate(parts, axis=0)


def batch_means_se(x: np.ndarray, n_batches: int = N_BATCHES) -> float:
    """Standard error of the mean of ``x`` by contiguous batch means.

    Robust for the bounded, possibly mildly dependent statistics produced by
    the samplers here; reduces to the usual s/sqrt(n) for independent data.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        return float("nan")
    nb = min(n_batches, n)
    edges = np.linspace(0, n, nb + 1, dtype=int)
    means = np.array([x[a:b].mean() for a, b in zip(edges[:-1], edges[1:])])
    return float(means.std(ddof=1) / math.sqrt(nb))


def mean_and_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float).ravel()
    return float(x.mean()), batch_means_se(x)


def enumerate_bit_vectors(n: int) -> np.ndarray:
    """All 2**n binary vectors of length n as a (2**n, n) uint8 array."""
    if n > 24:
        raise ValueError("refusing to enumerate more than 2**24 vectors")
    codes = np.arange(1 << n, dtype=np.uint32)
    return ((codes[:, None] >> np.arange(n, dtype=np.uint32)[None, :]) & 1).astype(np.uint8)


def bernoulli_weights(bits: np.ndarray, p: float) -> np.ndarray:
    """Product-Bernoulli(p) probability of each row of a 0/1 array."""
    ones = bits.sum(axis=1).astype(np.int64)
    n = bits.shape[1]
    return np.exp(ones * math.log(p) + (n - ones) * math.log1p(-p))
