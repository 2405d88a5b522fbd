"""Pure-numpy twin of the compiled walk kernels.

Vectorised across walkers instead of across steps. Every arithmetic step
mirrors ``_walk_core.h`` so both backends return identical bits for the same
seed; ``tests/test_sim_backends.py`` checks this.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)


def simd_available() -> bool:
    return False


def mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _ctr(k: int) -> np.uint64:
    return np.uint64((k * _GOLDEN) & _MASK)


def walker_keys(base: int, first: int, count: int) -> np.ndarray:
    idx = np.arange(first + 1, first + count + 1, dtype=np.uint64)
    return mix64(np.uint64(base & _MASK) + idx * np.uint64(_GOLDEN))


class _Stepper:
    """Slices a draw into ``bits``-wide uniforms and maps them to categories."""

    def __init__(self, spec: dict):
        self.bits = int(spec["bits"])
        self.per_draw = 64 // self.bits
        self.mask = np.uint64((1 << self.bits) - 1 if self.bits < 64 else _MASK)
        self.cut = [np.uint64(c) for c in spec["cut"]]
        self.sx = np.asarray(spec["sx"], dtype=np.float64)
        self.sy = np.asarray(spec["sy"], dtype=np.float64)

    def category(self, r: np.ndarray, h: int) -> np.ndarray:
        u = (r >> np.uint64(self.bits * h)) & self.mask
        c = (u >= self.cut[0]).astype(np.intp)
        for k in self.cut[1:]:
            c += u >= k
        return c


def absorb(spec: dict, x0: float, base: int, first: int, count: int,
           max_steps: int, threads: int = 1, simd: bool = True) -> np.ndarray:
    out = np.empty(count, dtype=np.float64)
    if count == 0:
        return out
    a, tau = spec["a"], spec["tau"]
    if x0 >= a:
        out[:] = 0.0
        return out
    st = _Stepper(spec)
    S = st.per_draw
    keys = walker_keys(base, first, count)
    alive = np.arange(count)
    x = np.full(count, x0, dtype=np.float64)
    m = 0
    while alive.size:
        r = mix64(keys + _ctr(m + 1))
        for h in range(S):
            xn = x + st.sx[st.category(r, h)]
            hit = xn >= a
            if hit.any():
                xo = x[hit]
                out[alive[hit]] = (float(m * S + h) + (a - xo) / (xn[hit] - xo)) * tau
                keep = ~hit
                alive, keys, xn, r = alive[keep], keys[keep], xn[keep], r[keep]
            x = np.abs(xn)
        m += 1
        if m * S >= max_steps and alive.size:
            out[alive] = np.inf
            break
    return out


def reflect(spec: dict, x0: float, y0: float, base: int, first: int,
            count: int, n_steps: int, threads: int = 1, simd: bool = True):
    a, two_a = spec["a"], spec["two_a"]
    b, half_b = spec["b"], spec["half_b"]
    st = _Stepper(spec)
    S = st.per_draw
    keys = walker_keys(base, first, count)
    x = np.full(count, x0, dtype=np.float64)
    y = np.full(count, y0, dtype=np.float64)
    for m in range((n_steps + S - 1) // S):
        r = mix64(keys + _ctr(m + 1))
        for h in range(min(S, n_steps - m * S)):
            c = st.category(r, h)
            xn = np.abs(x + st.sx[c])
            x = np.where(xn > a, two_a - xn, xn)
            yn = y + st.sy[c]
            y = np.where(yn > half_b, b - yn, np.where(yn < -half_b, -b - yn, yn))
    return x, y
