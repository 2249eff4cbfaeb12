"""Pure NumPy implementations of the hot batch kernels.

These are the fallback for :mod:`steinpairs.kernels._ext`; both backends
implement the same contracts and are compared in the benchmark suite and in
the kernel tests.
"""

import numpy as np

BACKEND = "pure"


def circular_run_counts(xi: np.ndarray, d: int) -> np.ndarray:
    """Count circular windows of consecutive ones, for all lengths 1..d.

    Parameters
    ----------
    xi : uint8 array, shape (B, n)
        Batch of 0/1 sequences, circular indexing.
    d : int
        Largest window length.

    Returns
    -------
    int64 array, shape (B, d)
        ``out[b, i-1] = sum_m xi[b, m] * ... * xi[b, m+i-1]`` (indices mod n).
    """
    xi = np.ascontiguousarray(xi, dtype=np.uint8)
    B, n = xi.shape
    out = np.empty((B, d), dtype=np.int64)
    prod = xi.astype(np.int64)
    out[:, 0] = prod.sum(axis=1)
    for i in range(1, d):
        prod = prod * np.roll(xi, -i, axis=1)
        out[:, i] = prod.sum(axis=1)
    return out


def window_replace_deltas(xi: np.ndarray, fresh: np.ndarray, d: int) -> np.ndarray:
    """Per-position count changes for the block-resampling move.

    For every start position I, the block of d-1 consecutive entries
    ``I..I+d-2`` (circular) of ``xi`` is replaced by the matching entries of
    ``fresh``, and the change in every circular run count of length 1..d is
    recorded.

    Returns
    -------
    int16 array, shape (B, n, d)
        ``out[b, I, i-1]`` = count(length i, modified row b) - count(length i, row b).
    """
    xi = np.ascontiguousarray(xi, dtype=np.uint8)
    fresh = np.ascontiguousarray(fresh, dtype=np.uint8)
    B, n = xi.shape
    if n < 3 * d - 2:
        raise ValueError("sequence too short for unambiguous circular windows")
    out = np.zeros((B, n, d), dtype=np.int16)
    xi16 = xi.astype(np.int16)
    fresh16 = fresh.astype(np.int16)
    for I in range(n):
        lo, hi = I, I + d - 2  # replaced block, unwrapped coordinates
        for i in range(1, d + 1):
            acc = np.zeros(B, dtype=np.int16)
            for m in range(I - i + 1, I + d - 1):
                old = np.ones(B, dtype=np.int16)
                new = np.ones(B, dtype=np.int16)
                for l in range(i):
                    j = m + l
                    col = j % n
                    old *= xi16[:, col]
                    new *= fresh16[:, col] if lo <= j <= hi else xi16[:, col]
                acc += new - old
            out[:, I, i - 1] = acc
    return out
