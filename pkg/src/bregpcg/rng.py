"""Deterministic random streams used wherever the package needs randomness.

The generator is pinned so that results reproduce bitwise across platforms
and library versions, and so that an independent implementation can replay
every stream from this module's documentation alone:

* Raw 64-bit words come from SplitMix64.  Output ``i`` (counting from 0) for
  seed ``s`` is ``mix(s + (i + 1) * 0x9E3779B97F4A7C15)`` where ``mix`` is
  the standard SplitMix64 finalizer: xor-shift right 30, multiply by
  0xBF58476D1CE4E5B9, xor-shift right 27, multiply by 0x94D049BB133111EB,
  xor-shift right 31, with every operation modulo 2**64.
* A word ``w`` maps to the uniform ``((w >> 11) + 1) * 2.0**-53`` in (0, 1].
* Standard normals come from the Box-Muller transform.  Pair ``k`` consumes
  uniforms ``2k`` and ``2k + 1`` and yields
  ``sqrt(-2 log u1) * cos(2 pi u2)`` and ``sqrt(-2 log u1) * sin(2 pi u2)``
  as stream elements ``2k`` and ``2k + 1``; an odd request drops the final
  sine half.
* Matrices are filled from the normal stream in row-major order.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def words(seed: int, count: int) -> np.ndarray:
    """First ``count`` raw 64-bit outputs of SplitMix64 for ``seed``."""
    idx = np.arange(1, count + 1, dtype=np.uint64)
    base = np.uint64(seed & _MASK)
    return _mix64(base + idx * np.uint64(_GOLDEN))


def uniforms(seed: int, count: int) -> np.ndarray:
    """Uniform deviates in (0, 1], one per raw word."""
    return ((words(seed, count) >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53


def normals(seed: int, count: int) -> np.ndarray:
    """``count`` standard normal deviates from the pinned Box-Muller stream."""
    if count == 0:
        return np.zeros(0)
    pairs = (count + 1) // 2
    u = uniforms(seed, 2 * pairs)
    radius = np.sqrt(-2.0 * np.log(u[0::2]))
    angle = 2.0 * np.pi * u[1::2]
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


def normal_matrix(seed: int, n_rows: int, n_cols: int) -> np.ndarray:
    """Row-major (n_rows, n_cols) matrix of standard normals."""
    return normals(seed, n_rows * n_cols).reshape(n_rows, n_cols)


def unit_vector(seed: int, n: int) -> np.ndarray:
    """Random direction: a normalized standard normal vector."""
    v = normals(seed, n)
    return v / np.linalg.norm(v)


def derive(seed: int, label: str) -> int:
    """Stable sub-seed for a named task, independent of call order."""
    h = seed & _MASK
    for byte in label.encode("utf-8"):
        h = _mix64_int(h ^ byte)
    return h
