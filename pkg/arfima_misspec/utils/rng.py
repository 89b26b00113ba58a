"""Counter-based standard normal streams.

Draws come from Philox-4x64 keyed by ``(seed, stream)`` with a zero counter, so
every stream is reachable without skipping. Each raw 64-bit word ``k`` gives the
uniform ``((k >> 11) + 0.5) * 2**-53`` and the normal quantile of that uniform,
which keeps the output independent of platform-specific normal samplers.
"""
import numpy as np
from scipy.special import ndtri

# Streams at or above this index are reserved for limit-law sampling.
SAMPLER_STREAM_OFFSET = 1 << 63
# Gaussian limit-law draws.
NORMAL_STREAM = SAMPLER_STREAM_OFFSET - 1

_UINT64_MASK = (1 << 64) - 1


def standard_normals(seed: int, stream: int, size: int) -> np.ndarray:
    """Return ``size`` standard normal variates of stream ``(seed, stream)``."""
    key = np.array([seed & _UINT64_MASK, stream & _UINT64_MASK], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(size)
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(uniforms)
