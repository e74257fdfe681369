"""Row-partitioned sparse products.

Each output row is summed by scipy over its own nonzeros in stored (ascending
column) order, so splitting rows across workers gives bit-identical results
for any worker count.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_threads = 1


def set_threads(n):
    global _threads
    _threads = max(1, int(n))


def get_threads():
    return _threads


def row_product(mat, x, threads=None):
    """``mat @ x`` for a CSR ``mat``, rows split over ``threads`` workers."""
    threads = _threads if threads is None else max(1, int(threads))
    n = mat.shape[0]
    if threads == 1 or n < 2 * threads:
        return np.asarray(mat @ x)
    bounds = np.linspace(0, n, threads + 1).astype(np.int64)
    out = np.empty((n,) + x.shape[1:], dtype=np.result_type(mat.dtype, x.dtype))

    def work(k):
        lo, hi = bounds[k], bounds[k + 1]
        out[lo:hi] = mat[lo:hi] @ x

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return out
