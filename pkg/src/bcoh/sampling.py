"""Counter-based uniform sampling.

Samples come in fixed-size blocks; block k of stream `tag` under `seed` is
drawn from a Philox generator keyed by (seed, tag, k) alone.  A sample's
value therefore depends only on (seed, its index), never on which worker
produced it or in what order blocks were scheduled.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from bcoh.eightmodel import ModelGeometry

BLOCK_SIZE = 16384

DOMAIN, COLLAR, CORES = 0, 1, 2


def block_generator(seed: int, tag: int, block: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    key = seed | (tag << 64) | (block << 72)
    return np.random.Generator(np.random.Philox(key=key))


def n_blocks(samples: int, block_size: int = BLOCK_SIZE) -> int:
    return -(-samples // block_size)


def block_count(samples: int, block: int, block_size: int = BLOCK_SIZE) -> int:
    return min(block_size, samples - block * block_size)


def domain_block(geom: ModelGeometry, seed: int, block: int, n: int) -> np.ndarray:
    """n uniform points of the surface: polar draws in the ambient disk, holes rejected."""
    gen = block_generator(seed, DOMAIN, block)
    out = []
    got = 0
    while got < n:
        m = int((n - got) * 1.05) + 32
        u = gen.random((m, 2))
        r = geom.R * np.sqrt(u[:, 0])
        th = 2.0 * math.pi * u[:, 1]
        pts = np.stack([r * np.cos(th), r * np.sin(th)], -1)
        pts = pts[geom.in_domain(pts)]
        out.append(pts)
        got += len(pts)
    return np.concatenate(out)[:n]


def annuli_block(
    bands: Sequence[tuple[np.ndarray, float, float]], seed: int, tag: int, block: int, n: int
) -> np.ndarray:
    """n uniform points of a union of annuli (center, r_in, r_out)."""
    gen = block_generator(seed, tag, block)
    areas = np.array([math.pi * (r1 * r1 - r0 * r0) for _, r0, r1 in bands])
    cum = np.cumsum(areas) / areas.sum()
    out = []
    got = 0
    while got < n:
        m = int((n - got) * 1.3) + 32
        u = gen.random((m, 4))
        k = np.minimum(np.searchsorted(cum, u[:, 0], side="right"), len(bands) - 1)
        pts = np.empty((m, 2))
        for j, (c, r0, r1) in enumerate(bands):
            sel = k == j
            r = np.sqrt(r0 * r0 + u[sel, 1] * (r1 * r1 - r0 * r0))
            th = 2.0 * math.pi * u[sel, 2]
            pts[sel, 0] = c[0] + r * np.cos(th)
            pts[sel, 1] = c[1] + r * np.sin(th)
        mult = np.zeros(m)
        for c, r0, r1 in bands:
            d = np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])
            mult += (d >= r0) & (d <= r1)
        keep = u[:, 3] * np.maximum(mult, 1) < 1.0
        out.append(pts[keep])
        got += int(keep.sum())
    return np.concatenate(out)[:n]
