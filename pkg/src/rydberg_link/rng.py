"""Counter-based random streams that can be reproduced outside this package.

Generator: Philox4x64-10 as implemented by ``numpy.random.Philox``. A stream
is identified by a user seed and a text label:

* key = (seed mod 2**64, tag) where ``tag`` is the first 8 bytes of
  SHA-256(label), read little-endian;
* a stream is split into blocks; block ``b`` starts from counter
  ``(0, 0, 0, b)`` (word 3 is the most significant), so blocks never overlap.

Derived variates from the raw 64-bit words ``r``:

* uniform double in [0, 1): ``(r >> 11) * 2**-53``;
* fair bit: ``r >> 63``;
* standard normal: Marsaglia polar method on consecutive uniform pairs
  ``(a, b)``: ``x = 2a - 1``, ``y = 2b - 1``, ``s = x^2 + y^2``; pairs with
  ``s == 0`` or ``s >= 1`` are rejected, accepted pairs emit
  ``x f`` then ``y f`` with ``f = sqrt(-2 ln s / s)``.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def label_tag(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


class Stream:
    """One block of a labeled Philox stream."""

    def __init__(self, seed: int, label: str, block: int = 0):
        self.seed = int(seed) & _MASK64
        self.label = label
        self.block = int(block)
        key = np.array([self.seed, label_tag(label)], dtype=np.uint64)
        counter = np.array([0, 0, 0, self.block], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key, counter=counter)

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(int(n)).astype(np.uint64)

    def uniforms(self, n: int) -> np.ndarray:
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def bits(self, n: int) -> np.ndarray:
        return (self.raw(n) >> np.uint64(63)).astype(np.int8)

    def normals(self, n: int) -> np.ndarray:
        """Polar-method normals; accepted pairs are used in draw order."""
        n = int(n)
        out = np.empty(n)
        filled = 0
        while filled < n:
            need_pairs = (n - filled + 1) // 2
            batch = max(64, int(need_pairs * 1.3) + 16)
            u = self.uniforms(2 * batch).reshape(batch, 2)
            x = 2.0 * u[:, 0] - 1.0
            y = 2.0 * u[:, 1] - 1.0
            s = x * x + y * y
            ok = (s > 0.0) & (s < 1.0)
            x, y, s = x[ok], y[ok], s[ok]
            f = np.sqrt(-2.0 * np.log(s) / s)
            vals = np.empty(2 * x.size)
            vals[0::2] = x * f
            vals[1::2] = y * f
            take = min(vals.size, n - filled)
            out[filled:filled + take] = vals[:take]
            filled += take
        return out
