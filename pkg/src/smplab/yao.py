"""Compiling tabulated public-coin SMP protocols into fingerprint states.

A classical public-coin protocol for a Boolean function, given as full
message tables plus a referee truth table, induces acceptance
probabilities P(x, y).  When every P lands outside the forbidden band
(1/3, 2/3), the protocol compiles into unit fingerprints with
<alpha_x, beta_y> = P(x, y)/sqrt(2^c) exactly, hence a threshold
embedding with delta0 = 1/(9*2^c) and delta1 = 4/(9*2^c), and from there
into a repeated-fingerprinting quantum protocol.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .geometry import ThresholdEmbedding, compile_repeated_fingerprinting
from .protocols import ClassicalSmpProtocol, ProblemSpec, QuantumSmpProtocol, boolean_problem_spec
from .seeds import derive_rng

BAND_LOW = Fraction(1, 3)
BAND_HIGH = Fraction(2, 3)


class ForbiddenBandError(ValueError):
    """Some pair's acceptance probability falls strictly inside (1/3, 2/3)."""

    def __init__(self, x: Any, y: Any, probability: Fraction):
        self.x = x
        self.y = y
        self.probability = probability
        super().__init__(
            f"pair ({x!r}, {y!r}) has acceptance probability {probability} "
            f"inside the forbidden band ({BAND_LOW}, {BAND_HIGH})"
        )


@dataclass(frozen=True)
class PublicCoinProtocolTable:
    """Message tables and referee truth table of a public-coin protocol.

    a_table[x][r] and b_table[y][r] are the c-bit messages (as integers)
    sent under coin r; referee_table[a, b] is the referee's accept bit.
    """

    n_prime: int
    c: int
    a_table: Mapping[Any, tuple[int, ...]]
    b_table: Mapping[Any, tuple[int, ...]]
    referee_table: np.ndarray

    def __post_init__(self) -> None:
        if self.n_prime < 1:
            raise ValueError("n_prime must be positive")
        if not 1 <= self.c <= 16:
            raise ValueError(f"c must lie in [1, 16], got {self.c}")
        size = 1 << self.c
        table = np.array(self.referee_table, dtype=np.int64)
        if table.shape != (size, size) or not np.all((table == 0) | (table == 1)):
            raise ValueError(f"referee table must be a {size}x{size} bit matrix")
        table.setflags(write=False)
        a_table = {x: tuple(int(v) for v in row) for x, row in dict(self.a_table).items()}
        b_table = {y: tuple(int(v) for v in row) for y, row in dict(self.b_table).items()}
        if not a_table or not b_table:
            raise ValueError("both input sides must be nonempty")
        for side, name in ((a_table, "a_table"), (b_table, "b_table")):
            for label, row in side.items():
                if len(row) != self.n_prime:
                    raise ValueError(f"{name}[{label!r}] must list one message per coin")
                if any(not 0 <= v < size for v in row):
                    raise ValueError(f"{name}[{label!r}] has a message outside [0, 2^c)")
        object.__setattr__(self, "referee_table", table)
        object.__setattr__(self, "a_table", a_table)
        object.__setattr__(self, "b_table", b_table)

    @property
    def xs(self) -> tuple:
        return tuple(self.a_table)

    @property
    def ys(self) -> tuple:
        return tuple(self.b_table)

    def acceptance_probability(self, x: Any, y: Any) -> Fraction:
        """P(x, y) = (1/n') sum_r R(a_rx, b_ry), exact."""
        hits = sum(
            int(self.referee_table[a, b])
            for a, b in zip(self.a_table[x], self.b_table[y])
        )
        return Fraction(hits, self.n_prime)

    def function_value(self, x: Any, y: Any) -> int:
        """0/1 read off the acceptance probability; band values rejected."""
        p = self.acceptance_probability(x, y)
        if p >= BAND_HIGH:
            return 1
        if p <= BAND_LOW:
            return 0
        raise ForbiddenBandError(x, y, p)

    def accepted_messages(self, y: Any, r: int) -> tuple[int, ...]:
        """A_ry: the Alice messages the referee accepts against b_ry."""
        b = self.b_table[y][r]
        return tuple(int(a) for a in np.nonzero(self.referee_table[:, b])[0])

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_prime": self.n_prime,
                "c": self.c,
                "a_table": {str(x): list(row) for x, row in self.a_table.items()},
                "b_table": {str(y): list(row) for y, row in self.b_table.items()},
                "R": self.referee_table.tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "PublicCoinProtocolTable":
        data = json.loads(text)
        return PublicCoinProtocolTable(
            n_prime=int(data["n_prime"]),
            c=int(data["c"]),
            a_table={x: tuple(row) for x, row in data["a_table"].items()},
            b_table={y: tuple(row) for y, row in data["b_table"].items()},
            referee_table=np.array(data["R"]),
        )


# ---------------------------------------------------------------------------
# fingerprints
# ---------------------------------------------------------------------------

def alice_fingerprint(table: PublicCoinProtocolTable, x: Any) -> np.ndarray:
    """(1/sqrt(n')) sum_r |r>|a_rx> in the (2^c + 1)-slot block layout."""
    size = 1 << table.c
    block = size + 1
    vec = np.zeros(table.n_prime * block)
    amp = 1.0 / math.sqrt(table.n_prime)
    for r, a in enumerate(table.a_table[x]):
        vec[r * block + a] = amp
    return vec


def bob_fingerprint(table: PublicCoinProtocolTable, y: Any) -> np.ndarray:
    """Uniform over the accepted set A_ry per coin, dummy slot to unit norm.

    Block r holds amplitude 1/sqrt(n' 2^c) on each accepted message and
    sqrt((1 - |A_ry|/2^c)/n') on the dummy slot (index 2^c), so the block
    norms telescope to exactly 1 and <alpha_x, beta_y> = P(x,y)/sqrt(2^c).
    """
    size = 1 << table.c
    block = size + 1
    vec = np.zeros(table.n_prime * block)
    amp = 1.0 / math.sqrt(table.n_prime * size)
    for r in range(table.n_prime):
        accepted = table.accepted_messages(y, r)
        for a in accepted:
            vec[r * block + a] = amp
        vec[r * block + size] = math.sqrt((1.0 - len(accepted) / size) / table.n_prime)
    return vec


def build_fingerprint_states(table: PublicCoinProtocolTable) -> ThresholdEmbedding:
    """Threshold embedding of the whole table; band pairs are rejected."""
    domain = tuple(
        (x, y, table.function_value(x, y)) for x in table.xs for y in table.ys
    )
    alpha = {x: alice_fingerprint(table, x) for x in table.xs}
    beta = {y: bob_fingerprint(table, y) for y in table.ys}
    size = 1 << table.c
    return ThresholdEmbedding(
        alpha=alpha,
        beta=beta,
        delta0=1.0 / (9.0 * size),
        delta1=4.0 / (9.0 * size),
        domain=domain,
    )


def simulate_public_coin(table: PublicCoinProtocolTable, eps: float) -> QuantumSmpProtocol:
    """Compile the table's embedding into a repeated-fingerprinting protocol.

    The gap is 1/(3*2^c), so the repetition count follows
    r = ceil(8 ln(1/eps) (3*2^c)^2) and quadruples per unit increase of c.
    """
    return compile_repeated_fingerprinting(build_fingerprint_states(table), eps)


# ---------------------------------------------------------------------------
# the classical protocol itself, for dual-route comparisons
# ---------------------------------------------------------------------------

def classical_protocol_from_table(table: PublicCoinProtocolTable) -> ClassicalSmpProtocol:
    """Run the tabulated protocol directly: c-bit messages, bit token."""
    width = table.c
    referee_table = table.referee_table

    def alice_msg(x: Any, r: int, ra: int) -> str:
        return format(table.a_table[x][r], f"0{width}b")

    def bob_msg(y: Any, r: int, rb: int) -> str:
        return format(table.b_table[y][r], f"0{width}b")

    def referee(msg_a: str, msg_b: str) -> int:
        return int(referee_table[int(msg_a, 2), int(msg_b, 2)])

    def batch_tokens(
        x: Any, y: Any, pub: np.ndarray, ra: np.ndarray, rb: np.ndarray
    ) -> tuple[np.ndarray, list]:
        a_row = np.array(table.a_table[x], dtype=np.int64)[pub]
        b_row = np.array(table.b_table[y], dtype=np.int64)[pub]
        return referee_table[a_row, b_row], [0, 1]

    def sample_tokens(
        x: Any, y: Any, trials: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, list]:
        pub = rng.integers(0, table.n_prime, size=trials)
        a_row = np.array(table.a_table[x], dtype=np.int64)[pub]
        b_row = np.array(table.b_table[y], dtype=np.int64)[pub]
        return referee_table[a_row, b_row], [0, 1]

    return ClassicalSmpProtocol(
        public_coin_size=table.n_prime,
        alice_private_size=1,
        bob_private_size=1,
        alice_msg=alice_msg,
        bob_msg=bob_msg,
        referee=referee,
        alice_cost_bits=width,
        bob_cost_bits=width,
        batch_tokens=batch_tokens,
        sample_tokens=sample_tokens,
    )


def table_problem(table: PublicCoinProtocolTable) -> tuple[ProblemSpec, list[tuple]]:
    """Boolean problem induced by the table, over all listed pairs."""
    values = {
        (x, y): table.function_value(x, y) for x in table.xs for y in table.ys
    }
    spec = boolean_problem_spec(lambda x, y: values[(x, y)])
    return spec, list(values)


# ---------------------------------------------------------------------------
# random band-avoiding tables
# ---------------------------------------------------------------------------

def random_band_avoiding_table(
    x_count: int, y_count: int, c: int, n_prime: int, seed: int
) -> PublicCoinProtocolTable:
    """Random tables whose acceptance probabilities avoid (1/3, 2/3).

    Coins split into two groups of mass 3/4 and 1/4; every party's message
    is constant on each group.  The referee verdict is then constant per
    group too, so P(x, y) ∈ {0, 1/4, 3/4, 1} for every pair, all outside
    the band, while messages and referee table stay otherwise uniform.
    """
    if x_count < 1 or y_count < 1:
        raise ValueError("input counts must be positive")
    if n_prime < 4 or n_prime % 4 != 0:
        raise ValueError(f"n_prime must be a positive multiple of 4, got {n_prime}")
    rng = derive_rng(seed, "band-avoiding-table", x_count, y_count, c, n_prime)
    size = 1 << c
    heavy = 3 * n_prime // 4

    def grouped_messages() -> tuple[int, ...]:
        first, second = (int(v) for v in rng.integers(0, size, size=2))
        return (first,) * heavy + (second,) * (n_prime - heavy)

    a_table = {f"x{i}": grouped_messages() for i in range(x_count)}
    b_table = {f"y{j}": grouped_messages() for j in range(y_count)}
    referee_table = rng.integers(0, 2, size=(size, size))
    return PublicCoinProtocolTable(
        n_prime=n_prime, c=c, a_table=a_table, b_table=b_table, referee_table=referee_table
    )
