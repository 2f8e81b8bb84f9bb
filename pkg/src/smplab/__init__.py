"""Simulation lab for simultaneous-message-passing protocols.

Core layers: exact quantum states and measurements, classical and quantum
one-round protocols with exact or sampled evaluation, threshold-embedding
geometry with margin conversions and spectral bounds, and the concrete
protocol families built on top (relation protocols, public-coin tables
compiled to fingerprints, Hamming-distance sketches and ball searches).
"""
from __future__ import annotations

from . import geometry, hamming, protocols, quantum, relation_p, seeds, yao, zero_error
from .geometry import (
    MarginRealization,
    ThresholdEmbedding,
    compile_repeated_fingerprinting,
    embedding_to_realization,
    forster_bound,
    realization_to_embedding,
    repetition_count,
    spectral_norm,
)
from .hamming import (
    LinearCode,
    ball_search_protocol,
    classical_ball_protocol,
    hamming_distance,
    parity_sketch_protocol,
    rac_reduction,
)
from .protocols import (
    ClassicalSmpProtocol,
    ProblemSpec,
    QuantumSmpProtocol,
    SwapTestThresholdReferee,
    evaluate_exact,
    evaluate_monte_carlo,
)
from .quantum import DensityMatrix, Ensemble, PureState, holevo_chi, swap_test
from .relation_p import grid_protocol_p, public_coin_protocol_p, random_instance_p
from .seeds import derive_rng, derive_seed
from .yao import (
    PublicCoinProtocolTable,
    build_fingerprint_states,
    random_band_avoiding_table,
    simulate_public_coin,
)
from .zero_error import direct_product_check, zero_error_rates

__version__ = "0.1.0"

__all__ = [
    "ClassicalSmpProtocol",
    "DensityMatrix",
    "Ensemble",
    "LinearCode",
    "MarginRealization",
    "ProblemSpec",
    "PublicCoinProtocolTable",
    "PureState",
    "QuantumSmpProtocol",
    "SwapTestThresholdReferee",
    "ThresholdEmbedding",
    "ball_search_protocol",
    "build_fingerprint_states",
    "classical_ball_protocol",
    "compile_repeated_fingerprinting",
    "derive_rng",
    "derive_seed",
    "direct_product_check",
    "embedding_to_realization",
    "evaluate_exact",
    "evaluate_monte_carlo",
    "forster_bound",
    "geometry",
    "grid_protocol_p",
    "hamming",
    "hamming_distance",
    "holevo_chi",
    "parity_sketch_protocol",
    "protocols",
    "public_coin_protocol_p",
    "quantum",
    "rac_reduction",
    "random_band_avoiding_table",
    "random_instance_p",
    "realization_to_embedding",
    "relation_p",
    "repetition_count",
    "seeds",
    "simulate_public_coin",
    "spectral_norm",
    "swap_test",
    "yao",
    "zero_error",
    "__version__",
]
