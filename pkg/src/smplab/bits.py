"""Bit strings as '0'/'1' text, with hex round-trips and seeded sampling."""
from __future__ import annotations

import numpy as np


def validate_bits(bits: str, n: int | None = None, name: str = "bits") -> str:
    if not isinstance(bits, str) or any(ch not in "01" for ch in bits):
        raise ValueError(f"{name} must be a string over '0'/'1'")
    if n is not None and len(bits) != n:
        raise ValueError(f"{name} must have length {n}, got {len(bits)}")
    return bits


def bits_to_hex(bits: str) -> str:
    """Hex encoding; bit 0 is the most significant bit of the padded value."""
    validate_bits(bits)
    width = (len(bits) + 3) // 4
    return format(int(bits, 2) if bits else 0, f"0{width}x")


def hex_to_bits(hex_str: str, n: int) -> str:
    value = int(hex_str, 16) if hex_str else 0
    if value >= 1 << n:
        raise ValueError(f"hex value does not fit in {n} bits")
    return format(value, f"0{n}b")


def bits_to_array(bits: str) -> np.ndarray:
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return "".join("1" if ca != cb else "0" for ca, cb in zip(a, b))


def weight(bits: str) -> int:
    return bits.count("1")


def random_bits(n: int, rng: np.random.Generator) -> str:
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=n))


def fisher_yates_subset(n: int, k: int, rng: np.random.Generator) -> tuple[int, ...]:
    """k distinct positions from range(n) by partial Fisher-Yates selection."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    pool = list(range(n))
    for j in range(k):
        t = j + int(rng.integers(0, n - j))
        pool[j], pool[t] = pool[t], pool[j]
    return tuple(sorted(pool[:k]))


def subset_to_mask_bits(positions: tuple[int, ...], n: int) -> str:
    chars = ["0"] * n
    for pos in positions:
        chars[pos] = "1"
    return "".join(chars)
