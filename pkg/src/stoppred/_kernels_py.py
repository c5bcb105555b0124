"""Pure-numpy fallback for the per-trial scan kernel.

Mirrors stoppred._kernels exactly; both consume the same pre-generated
batches, so results are bit-identical whichever backend is active.
"""

from __future__ import annotations

import numpy as np


def scan_first_accept(values, qvals, thresh):
    """First accepted position per row of a time-ordered batch.

    Position j of row i is accepted when values[i, j] is greater than or
    equal to every earlier value in the row (running-max criterion) and its
    level clears the threshold: qvals[i, j] > thresh[i, j], or the threshold
    is 0 (the zero phase is prior-free; under a full-support prior the two
    readings coincide, but a mispredicted support can pin qvals to exactly
    0).  Returns (pos, accepted_value) with pos = -1 and value 0.0 for rows
    that accept nothing.
    """
    rows = values.shape[0]
    prev = np.maximum.accumulate(values, axis=1)
    prev = np.concatenate([np.zeros((rows, 1)), prev[:, :-1]], axis=1)
    ok = (values >= prev) & ((qvals > thresh) | (thresh == 0.0))
    hit = ok.any(axis=1)
    pos = np.where(hit, ok.argmax(axis=1), -1).astype(np.int64)
    picked = np.take_along_axis(values, np.maximum(pos, 0)[:, None], axis=1)[:, 0]
    acc = np.where(hit, picked, 0.0)
    return pos, acc
