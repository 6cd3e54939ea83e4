"""Pure NumPy fallback for the force accumulation kernel.

Vectorised over field points with a Python loop over sources, so each
field point's contributions are summed in ascending source order -- the
same order and per-pair arithmetic as the compiled kernel, which keeps
the two backends bit-identical.
"""

import numpy as np


def accumulate(src, q_src, field, q_field, constant, min_dist, out, j0, j1):
    fld = field[j0:j1]
    qf = q_field[j0:j1]
    acc = out[j0:j1]
    dim = src.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(src.shape[0]):
            diff = fld - src[i]
            r2 = diff[:, 0] * diff[:, 0]
            for k in range(1, dim):
                r2 = r2 + diff[:, k] * diff[:, k]
            r = np.sqrt(r2)
            r = np.maximum(r, min_dist)
            rd = r
            for _ in range(dim - 1):
                rd = rd * r
            w = ((constant * q_src[i]) * qf) / rd
            w = np.where(r2 == 0.0, 0.0, w)
            for k in range(dim):
                acc[:, k] += w * diff[:, k]
