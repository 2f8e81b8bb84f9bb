"""The index relation: report some (i, x_i, y_i) with s_i = 1, or pass.

Alice holds x in {0,1}^n; Bob holds y plus a selector s of weight n/2.
A protocol answer (i, a, b) is valid when s_i = 1, a = x_i, and b = y_i;
the dont_know token is budgeted separately; anything else is invalid.

Two protocols are built here, both with k independent repetitions and
dont_know probability exactly 2^-k:

* public-coin: the shared coin names k indices; each party forwards the
  indexed bit(s) with the index, the referee takes the first repetition
  whose selector bit is 1.  Cost k*(2*ceil(log2 n) + 3).
* grid (private coin): inputs are laid out in a sqrt(n) x sqrt(n) square;
  Alice sends a random row of x with its row index, Bob a random column
  of y and the same column of s with its column index.  The intersection
  cell yields (i, x_i, y_i, s_i).  Cost k*(3*sqrt(n) + 2*ceil(log2 sqrt(n))).

Both protocols also carry vectorized token paths used by the evaluators;
tests prove them equal to scalar message-level enumeration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bits import (
    bits_to_array,
    bits_to_hex,
    fisher_yates_subset,
    hex_to_bits,
    random_bits,
    subset_to_mask_bits,
    validate_bits,
)
from .protocols import DONT_KNOW, INVALID, VALID, ClassicalSmpProtocol, ProblemSpec
from .seeds import derive_rng


@dataclass(frozen=True)
class RelationPInstance:
    """One (x, y, s) input triple; n even, |s| = n/2."""

    n: int
    x: str
    y: str
    s: str

    def __post_init__(self) -> None:
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"n must be even and at least 2, got {self.n}")
        validate_bits(self.x, self.n, "x")
        validate_bits(self.y, self.n, "y")
        validate_bits(self.s, self.n, "s")
        if self.s.count("1") != self.n // 2:
            raise ValueError("s must have weight exactly n/2")

    def to_input(self) -> tuple:
        """The (x, y_aux) pair fed to protocol evaluators."""
        return (self.x, (self.y, self.s))

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "x": bits_to_hex(self.x), "y": bits_to_hex(self.y), "s": bits_to_hex(self.s)}
        )

    @staticmethod
    def from_json(text: str) -> "RelationPInstance":
        data = json.loads(text)
        n = int(data["n"])
        return RelationPInstance(
            n=n,
            x=hex_to_bits(data["x"], n),
            y=hex_to_bits(data["y"], n),
            s=hex_to_bits(data["s"], n),
        )


def random_instance_p(n: int, seed: int) -> RelationPInstance:
    """Uniform x and y; s uniform over weight-n/2 strings via Fisher-Yates."""
    rng = derive_rng(seed, "relation-p-instance", n)
    positions = fisher_yates_subset(n, n // 2, rng)
    return RelationPInstance(
        n=n,
        x=random_bits(n, rng),
        y=random_bits(n, rng),
        s=subset_to_mask_bits(positions, n),
    )


def judge_p(instance: RelationPInstance, token) -> str:
    """valid / dont_know / invalid for one referee token."""
    if token == DONT_KNOW:
        return DONT_KNOW
    if isinstance(token, tuple) and len(token) == 3:
        i, a, b = token
        if (
            isinstance(i, int)
            and 0 <= i < instance.n
            and instance.s[i] == "1"
            and a == int(instance.x[i])
            and b == int(instance.y[i])
        ):
            return VALID
    return INVALID


def relation_p_problem(eps: float) -> ProblemSpec:
    def judge(pair: tuple, token) -> str:
        x, (y, s) = pair
        inst = RelationPInstance(n=len(x), x=x, y=y, s=s)
        return judge_p(inst, token)

    return ProblemSpec(judge=judge, eps=eps)


# Tokens are coded for the vectorized paths as 0 = dont_know and
# 1 + 4i + 2a + b for the triple (i, a, b).
def _token_table(n: int) -> list:
    table: list = [DONT_KNOW]
    for i in range(n):
        for a in (0, 1):
            for b in (0, 1):
                table.append((i, a, b))
    return table


def _decode_digits(values: np.ndarray, base: int, count: int) -> np.ndarray:
    """Digit j of each value in base `base`, most significant first."""
    digits = np.empty((values.size, count), dtype=np.int64)
    rest = values.astype(np.int64)
    for j in range(count - 1, -1, -1):
        digits[:, j] = rest % base
        rest = rest // base
    return digits


def public_coin_protocol_p(n: int, k: int) -> ClassicalSmpProtocol:
    """k shared random indices; parties forward the indexed bits.

    Message layout per repetition (fixed-width big-endian index fields):
    Alice [index:w][x_i], Bob [index:w][y_i][s_i] with w = ceil(log2 n).
    The referee outputs the first repetition whose selector bit is 1.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    w = (n - 1).bit_length()

    def decode(r: int) -> list[int]:
        digits = []
        for _ in range(k):
            digits.append(r % n)
            r //= n
        return digits[::-1]

    def alice_msg(x: str, r: int, ra: int) -> str:
        return "".join(format(i, f"0{w}b") + x[i] for i in decode(r))

    def bob_msg(y_aux: tuple, r: int, rb: int) -> str:
        y, s = y_aux
        return "".join(format(i, f"0{w}b") + y[i] + s[i] for i in decode(r))

    def referee(msg_a: str, msg_b: str):
        for j in range(k):
            off_b = j * (w + 2)
            if msg_b[off_b + w + 1] == "1":
                i = int(msg_b[off_b : off_b + w], 2)
                a_bit = int(msg_a[j * (w + 1) + w])
                b_bit = int(msg_b[off_b + w])
                return (i, a_bit, b_bit)
        return DONT_KNOW

    def batch_tokens(x: str, y_aux: tuple, pub: np.ndarray, ra: np.ndarray, rb: np.ndarray):
        y, s = y_aux
        x_arr, y_arr, s_arr = bits_to_array(x), bits_to_array(y), bits_to_array(s)
        digits = _decode_digits(pub, n, k)
        return _tokens_from_indices(digits, x_arr, y_arr, s_arr), _token_table(n)

    def sample_tokens(x: str, y_aux: tuple, trials: int, rng: np.random.Generator):
        y, s = y_aux
        x_arr, y_arr, s_arr = bits_to_array(x), bits_to_array(y), bits_to_array(s)
        digits = rng.integers(0, n, size=(trials, k), dtype=np.int64)
        return _tokens_from_indices(digits, x_arr, y_arr, s_arr), _token_table(n)

    return ClassicalSmpProtocol(
        public_coin_size=n**k,
        alice_private_size=1,
        bob_private_size=1,
        alice_msg=alice_msg,
        bob_msg=bob_msg,
        referee=referee,
        alice_cost_bits=k * (w + 1),
        bob_cost_bits=k * (w + 2),
        batch_tokens=batch_tokens,
        sample_tokens=sample_tokens,
    )


def _tokens_from_indices(
    indices: np.ndarray, x_arr: np.ndarray, y_arr: np.ndarray, s_arr: np.ndarray
) -> np.ndarray:
    """Token codes for per-repetition index draws (rows = coin settings)."""
    hits = s_arr[indices] == 1
    any_hit = hits.any(axis=1)
    first = hits.argmax(axis=1)
    i = indices[np.arange(indices.shape[0]), first]
    codes = 1 + 4 * i + 2 * x_arr[i].astype(np.int64) + y_arr[i].astype(np.int64)
    return np.where(any_hit, codes, 0)


def grid_protocol_p(n: int, k: int) -> ClassicalSmpProtocol:
    """Private-coin protocol over a sqrt(n) x sqrt(n) layout of the inputs.

    Cell (u, v) is index u*sqrt(n) + v.  Per repetition Alice picks row u
    and sends [u:wsq][row of x], Bob picks column v and sends
    [v:wsq][column of y][column of s]; the referee reads the intersection.
    Requires n to be a perfect square.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    sq = math.isqrt(n)
    if sq * sq != n:
        raise ValueError(f"grid layout needs a perfect square, got n={n}")
    wsq = max((sq - 1).bit_length(), 1)

    def decode(r: int) -> list[int]:
        digits = []
        for _ in range(k):
            digits.append(r % sq)
            r //= sq
        return digits[::-1]

    def alice_msg(x: str, r: int, ra: int) -> str:
        parts = []
        for u in decode(ra):
            parts.append(format(u, f"0{wsq}b") + x[u * sq : (u + 1) * sq])
        return "".join(parts)

    def bob_msg(y_aux: tuple, r: int, rb: int) -> str:
        y, s = y_aux
        parts = []
        for v in decode(rb):
            col_y = "".join(y[u * sq + v] for u in range(sq))
            col_s = "".join(s[u * sq + v] for u in range(sq))
            parts.append(format(v, f"0{wsq}b") + col_y + col_s)
        return "".join(parts)

    def referee(msg_a: str, msg_b: str):
        stride_a = wsq + sq
        stride_b = wsq + 2 * sq
        for j in range(k):
            off_a, off_b = j * stride_a, j * stride_b
            u = int(msg_a[off_a : off_a + wsq], 2)
            v = int(msg_b[off_b : off_b + wsq], 2)
            s_bit = msg_b[off_b + wsq + sq + u]
            if s_bit == "1":
                i = u * sq + v
                a_bit = int(msg_a[off_a + wsq + v])
                b_bit = int(msg_b[off_b + wsq + u])
                return (i, a_bit, b_bit)
        return DONT_KNOW

    def _tokens_for_choices(rows: np.ndarray, cols: np.ndarray, x: str, y_aux: tuple) -> np.ndarray:
        y, s = y_aux
        x_arr, y_arr, s_arr = bits_to_array(x), bits_to_array(y), bits_to_array(s)
        indices = rows * sq + cols
        return _tokens_from_indices(indices, x_arr, y_arr, s_arr)

    def batch_tokens(x: str, y_aux: tuple, pub: np.ndarray, ra: np.ndarray, rb: np.ndarray):
        rows = _decode_digits(ra, sq, k)
        cols = _decode_digits(rb, sq, k)
        return _tokens_for_choices(rows, cols, x, y_aux), _token_table(n)

    def sample_tokens(x: str, y_aux: tuple, trials: int, rng: np.random.Generator):
        rows = rng.integers(0, sq, size=(trials, k), dtype=np.int64)
        cols = rng.integers(0, sq, size=(trials, k), dtype=np.int64)
        return _tokens_for_choices(rows, cols, x, y_aux), _token_table(n)

    return ClassicalSmpProtocol(
        public_coin_size=1,
        alice_private_size=sq**k,
        bob_private_size=sq**k,
        alice_msg=alice_msg,
        bob_msg=bob_msg,
        referee=referee,
        alice_cost_bits=k * (wsq + sq),
        bob_cost_bits=k * (wsq + 2 * sq),
        batch_tokens=batch_tokens,
        sample_tokens=sample_tokens,
    )


def cost_formula(protocol_name: str, n: int, k: int) -> int:
    """Closed-form worst-case bit cost for the two relation protocols."""
    if protocol_name == "public-coin":
        return k * (2 * (n - 1).bit_length() + 3)
    if protocol_name == "grid":
        sq = math.isqrt(n)
        if sq * sq != n:
            raise ValueError(f"grid layout needs a perfect square, got n={n}")
        return k * (3 * sq + 2 * max((sq - 1).bit_length(), 1))
    raise ValueError(f"unknown protocol {protocol_name!r}")
