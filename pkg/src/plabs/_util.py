"""Small shared helpers: magnitude scales, sign vectors, sign-pattern stacks."""

from __future__ import annotations

import numpy as np


def scale_of(*arrays) -> float:
    """Magnitude scale of a collection of arrays: max(1, largest |entry|).

    Used to turn absolute tolerances like 1e-12 into data-relative ones.
    Empty arrays and scalars are fine.
    """
    top = 1.0
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size:
            top = max(top, float(np.max(np.abs(a))))
    return top


def as_float_array(a, name: str, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def freeze(arr: np.ndarray) -> np.ndarray:
    """Return a read-only view so dataclass instances stay immutable."""
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


def sign_vector(z: np.ndarray, zeros_to_plus: bool = False) -> np.ndarray:
    """Componentwise sign in {-1, 0, +1} as int8; optionally map 0 to +1."""
    s = np.sign(z).astype(np.int8)
    if zeros_to_plus:
        s[s == 0] = 1
    return s


def sign_stack(s: int, dtype=float) -> np.ndarray:
    """All 2**s sign vectors as a (2**s, s) array.

    Row k encodes the pattern with bit i of k set exactly when component i
    is +1; ascending k gives a deterministic enumeration order.
    """
    if s == 0:
        return np.zeros((1, 0), dtype=dtype)
    k = np.arange(2**s, dtype=np.int64)
    bits = (k[:, None] >> np.arange(s)) & 1
    return (2 * bits - 1).astype(dtype)


def sigma_to_mask(sigma: np.ndarray) -> int:
    """Bitmask of a definite sign vector (bit i set <=> sigma_i = +1)."""
    mask = 0
    for i, v in enumerate(sigma):
        if v > 0:
            mask |= 1 << i
    return mask


def mask_to_sigma(mask: int, s: int) -> np.ndarray:
    return np.array([1 if (mask >> i) & 1 else -1 for i in range(s)], dtype=np.int8)
