"""Batch experiment runners behind the CLI and service.

Each runner turns one validated config into an ExperimentTable whose
cells all come from module operations; the only work done here is
orchestration and formatting.  Cell rendering is deterministic (repr for
floats, num/den for rationals), so identical configs reproduce identical
CSV bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import geometry, hamming, relation_p, yao
from .protocols import evaluate_exact, evaluate_monte_carlo
from .quantum import (
    DensityMatrix,
    Ensemble,
    PureState,
    SwapTestSampler,
    holevo_chi,
    random_density_matrix,
    random_pure_state,
    swap_test,
)
from .schemas import (
    HammingConfig,
    LemmasConfig,
    MarginsConfig,
    RelationPConfig,
    YaoSimConfig,
)
from .seeds import derive_rng, derive_seed
from .zero_error import direct_product_check


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentTable:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    all_pass: bool
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width disagrees with column count")

    def rendered_rows(self) -> list[list[str]]:
        return [[format_cell(cell) for cell in row] for row in self.rows]

    def to_csv(self) -> str:
        import csv
        import io

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rendered_rows():
            writer.writerow(row)
        return buffer.getvalue()

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "name": self.name,
                "columns": list(self.columns),
                "rows": self.rendered_rows(),
                "all_pass": self.all_pass,
                "notes": list(self.notes),
            },
            indent=2,
        )


# ---------------------------------------------------------------------------
# relation P
# ---------------------------------------------------------------------------

def run_relation_p(cfg: RelationPConfig) -> ExperimentTable:
    """Exact dont_know rates and MC cross-checks for both relation protocols."""
    if cfg.n < 2 or cfg.n % 2:
        raise ValueError(f"n must be even and at least 2, got {cfg.n}")
    if cfg.k < 1:
        raise ValueError("k must be at least 1")
    if cfg.instances < 1:
        raise ValueError("instances must be positive")

    notes: list[str] = []
    builders = [("public-coin", relation_p.public_coin_protocol_p)]
    if math.isqrt(cfg.n) ** 2 == cfg.n:
        builders.append(("grid", relation_p.grid_protocol_p))
    else:
        notes.append(f"grid protocol skipped: n={cfg.n} is not a perfect square")

    inputs = [
        relation_p.random_instance_p(cfg.n, derive_seed(cfg.seed, "instance", t)).to_input()
        for t in range(cfg.instances)
    ]

    rows = []
    all_pass = True
    for name, build in builders:
        for k in range(1, cfg.k + 1):
            protocol = build(cfg.n, k)
            eps = cfg.eps if cfg.eps is not None else 0.5**k
            problem = relation_p.relation_p_problem(eps)
            expected = Fraction(1, 2**k)

            exact = evaluate_exact(protocol, problem, inputs)
            exact_ok = all(
                rep.p_dont_know == expected and rep.p_invalid == 0 for rep in exact.inputs
            )
            if not exact_ok:
                all_pass = False
                notes.append(f"{name} n={cfg.n} k={k}: exact outcome law deviates")

            if protocol.cost_bits != relation_p.cost_formula(name, cfg.n, k):
                all_pass = False
                notes.append(f"{name} n={cfg.n} k={k}: cost disagrees with formula")

            mc = evaluate_monte_carlo(
                protocol, problem, inputs[:1], cfg.trials, derive_seed(cfg.seed, "mc", name, k)
            )
            estimate = float(mc.inputs[0].p_dont_know)
            radius = mc.inputs[0].radius
            if abs(estimate - float(expected)) > radius:
                all_pass = False
                notes.append(f"{name} n={cfg.n} k={k}: MC estimate outside 3-sigma radius")

            rows.append((name, cfg.n, k, protocol.cost_bits, expected, estimate, radius))

    return ExperimentTable(
        name="relation-p",
        columns=("protocol", "n", "k", "cost_bits", "exact_dontknow", "mc_estimate", "radius"),
        rows=tuple(rows),
        all_pass=all_pass,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# margins
# ---------------------------------------------------------------------------

def run_margins(cfg: MarginsConfig) -> ExperimentTable:
    """Forster bounds against constructed margins for equality and inner product."""
    if not 2 <= cfg.n <= 4:
        raise ValueError(f"inner-product size must lie in [2, 4], got {cfg.n}")
    if cfg.points < 2:
        raise ValueError("equality needs at least two points")

    rows = []
    notes: list[str] = []
    all_pass = True

    def add_row(function: str, size: int, bound: float, margin: float, deltas: str) -> None:
        nonlocal all_pass
        if margin > bound + 1e-6:
            all_pass = False
            notes.append(f"{function} n={size}: margin {margin} exceeds bound {bound}")
        rows.append((function, size, bound, margin, deltas))

    labels = list(range(cfg.points))
    eq_embedding = geometry.equality_embedding(labels)
    eq_realization = geometry.embedding_to_realization(eq_embedding)
    eq_sign = geometry.sign_matrix_from_function(lambda x, y: int(x == y), labels, labels)
    add_row(
        "equality",
        cfg.points,
        geometry.forster_bound(eq_sign),
        eq_realization.gamma,
        f"{eq_embedding.delta0!r};{eq_embedding.delta1!r}",
    )

    for size in range(2, cfg.n + 1):
        realization = geometry.ip_realization(size)
        embedding = geometry.realization_to_embedding(realization)
        add_row(
            "inner-product",
            size,
            geometry.forster_bound(geometry.ip_sign_matrix(size)),
            realization.gamma,
            f"{embedding.delta0!r};{embedding.delta1!r}",
        )

    return ExperimentTable(
        name="margins",
        columns=("function", "n", "forster_bound", "constructed_margin", "embedding_deltas"),
        rows=tuple(rows),
        all_pass=all_pass,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Yao simulation sweep
# ---------------------------------------------------------------------------

def run_yao_sim(cfg: YaoSimConfig) -> ExperimentTable:
    """Random tables compiled to fingerprints; identity and error audits."""
    if cfg.tables < 1:
        raise ValueError("tables must be positive")
    if not 0.0 < cfg.eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")

    rows = []
    notes: list[str] = []
    all_pass = True
    for t in range(cfg.tables):
        dims = derive_rng(cfg.seed, "yao-dims", t)
        c = int(dims.integers(1, 4))
        n_prime = int(dims.choice([4, 8]))
        x_count = int(dims.integers(2, 17))
        y_count = int(dims.integers(2, 17))
        table = yao.random_band_avoiding_table(
            x_count, y_count, c, n_prime, derive_seed(cfg.seed, "yao-table", t)
        )

        embedding = yao.build_fingerprint_states(table)
        scale = 1.0 / math.sqrt(1 << c)
        identity_dev = max(
            abs(
                float(np.vdot(embedding.alpha[x], embedding.beta[y]).real)
                - float(table.acceptance_probability(x, y)) * scale
            )
            for x in table.xs
            for y in table.ys
        )
        protocol = yao.simulate_public_coin(table, cfg.eps)
        expected_r = geometry.repetition_count(embedding.gap, cfg.eps)
        exact_error = geometry.compiled_worst_error(protocol, embedding)

        row_pass = (
            identity_dev <= 1e-12 and protocol.copies == expected_r and exact_error <= cfg.eps
        )
        if not row_pass:
            all_pass = False
            notes.append(f"table {t}: identity or error audit failed")
        rows.append(
            (
                t,
                c,
                n_prime,
                x_count,
                y_count,
                identity_dev,
                protocol.copies,
                protocol.cost_qubits,
                exact_error,
                row_pass,
            )
        )

    return ExperimentTable(
        name="yao-sim",
        columns=(
            "table",
            "c",
            "n_prime",
            "x_count",
            "y_count",
            "identity_dev",
            "copies",
            "cost_qubits",
            "exact_error",
            "row_pass",
        ),
        rows=tuple(rows),
        all_pass=all_pass,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Hamming suite
# ---------------------------------------------------------------------------

def run_hamming(cfg: HammingConfig) -> ExperimentTable:
    """One row per protocol variant, each with its measured error."""
    if not 0.0 < cfg.eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if cfg.trials < 1 or cfg.coherent_runs < 1:
        raise ValueError("trial counts must be positive")

    rows = []
    notes: list[str] = []
    all_pass = True

    # parity sketch at (n, d), exact tails cross-checked by sampling
    protocol, params = hamming.parity_sketch_protocol(
        cfg.n, cfg.d, cfg.eps, derive_seed(cfg.seed, "sketch")
    )
    exact_error = max(
        hamming.parity_sketch_error(params, cfg.d),
        hamming.parity_sketch_error(params, cfg.d + 1),
    )
    sketch_pass = exact_error <= cfg.eps
    for delta in (cfg.d, cfg.d + 1):
        inst = hamming.random_ham_instance(
            cfg.n, cfg.d, delta, derive_seed(cfg.seed, "sketch-inst", delta)
        )
        mc = evaluate_monte_carlo(
            protocol,
            hamming.ham_problem(cfg.d),
            [(inst.x, inst.y)],
            cfg.trials,
            derive_seed(cfg.seed, "sketch-mc", delta),
        )
        measured = float(mc.inputs[0].p_invalid)
        exact_p = hamming.parity_sketch_error(params, delta)
        # radius from the exact rate: the estimate-based one collapses when
        # no error shows up in the sample
        tolerance = max(
            mc.inputs[0].radius, 3.0 * math.sqrt(exact_p * (1.0 - exact_p) / cfg.trials)
        )
        if abs(measured - exact_p) > tolerance:
            sketch_pass = False
            notes.append(f"parity-sketch delta={delta}: MC outside 3-sigma of exact")
    rows.append(
        (
            "parity-sketch",
            cfg.n,
            cfg.d,
            f"{protocol.cost_bits} bits",
            exact_error,
            None,
            sketch_pass,
        )
    )
    all_pass &= sketch_pass

    # classical ball at (ball_n, ball_d)
    ball = hamming.classical_ball_protocol(cfg.ball_n, cfg.ball_d, cfg.eps)
    ball_pass = True
    for delta in range(cfg.ball_d + 1):
        inst = hamming.random_ham_instance(
            cfg.ball_n, cfg.ball_d, delta, derive_seed(cfg.seed, "ball-close", delta)
        )
        mc = evaluate_monte_carlo(
            ball,
            hamming.ham_problem(cfg.ball_d),
            [(inst.x, inst.y)],
            cfg.trials,
            derive_seed(cfg.seed, "ball-close-mc", delta),
        )
        if float(mc.inputs[0].p_invalid) != 0.0:
            ball_pass = False
            notes.append(f"classical-ball delta={delta}: rejection on a close pair")
    soundness = 0.0
    for j in range(3):
        inst = hamming.random_ham_instance(
            cfg.ball_n, cfg.ball_d, cfg.ball_d + 1, derive_seed(cfg.seed, "ball-far", j)
        )
        mc = evaluate_monte_carlo(
            ball,
            hamming.ham_problem(cfg.ball_d),
            [(inst.x, inst.y)],
            cfg.trials,
            derive_seed(cfg.seed, "ball-far-mc", j),
        )
        soundness = max(soundness, float(mc.inputs[0].p_invalid))
    if soundness > cfg.eps:
        ball_pass = False
        notes.append("classical-ball: measured soundness error above eps")
    rows.append(
        (
            "classical-ball",
            cfg.ball_n,
            cfg.ball_d,
            f"{ball.cost_bits} bits",
            soundness,
            None,
            ball_pass,
        )
    )
    all_pass &= ball_pass

    # quantum ball, fresh copies, exact outcome law
    code = hamming.random_linear_code(
        cfg.ball_n,
        cfg.ball_rate,
        max(1, math.ceil(0.05 * cfg.ball_n / cfg.ball_rate)),
        derive_seed(cfg.seed, "ball-code"),
    )
    fresh = hamming.ball_search_protocol(cfg.ball_n, cfg.ball_d, cfg.eps, code, "fresh_copies")
    fresh_pass = True
    worst = 0.0
    for delta in range(cfg.ball_d + 2):
        inst = hamming.random_ham_instance(
            cfg.ball_n, cfg.ball_d, delta, derive_seed(cfg.seed, "fresh-inst", delta)
        )
        accept = fresh.referee_procedure.accept_probability(
            fresh.alice_state(inst.x), fresh.bob_state(inst.y)
        )
        if delta <= cfg.ball_d:
            if accept != 1.0:
                fresh_pass = False
                notes.append(f"fresh-copies delta={delta}: completeness below 1")
        else:
            worst = max(worst, accept)
    if worst > min(cfg.eps, fresh.referee_procedure.soundness_bound):
        fresh_pass = False
        notes.append("fresh-copies: exact soundness above budget")
    rows.append(
        (
            "quantum-ball-fresh",
            cfg.ball_n,
            cfg.ball_d,
            f"{fresh.cost_qubits} qubits",
            worst,
            None,
            fresh_pass,
        )
    )
    all_pass &= fresh_pass

    # quantum ball, coherent reuse at the fixed state-vector budget
    demo_code = hamming.random_linear_code(
        4, 0.5, 2, derive_seed(cfg.seed, "coherent-code"), max_weight_ceiling=6
    )
    coherent = hamming.ball_search_protocol(
        4, 1, cfg.eps, demo_code, "coherent_reuse", tests_per_candidate=3
    )
    demo = hamming.coherent_agreement_demo(
        coherent, 4, 1, cfg.coherent_runs, derive_seed(cfg.seed, "coherent-demo")
    )
    coherent_error = 1.0 - demo.agreement_rate
    coherent_pass = coherent_error <= cfg.eps and demo.telemetry_complete
    if not coherent_pass:
        notes.append("coherent-reuse: agreement or telemetry check failed")
    rows.append(
        (
            "quantum-ball-coherent",
            4,
            1,
            f"{coherent.cost_qubits} qubits",
            coherent_error,
            f"{demo.fidelity_values}/{demo.steps_total}",
            coherent_pass,
        )
    )
    all_pass &= coherent_pass

    return ExperimentTable(
        name="hamming",
        columns=("variant", "n", "d", "cost", "exact_or_mc_error", "fidelity", "row_pass"),
        rows=tuple(rows),
        all_pass=bool(all_pass),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# measurement lemmas and state statistics
# ---------------------------------------------------------------------------

def run_lemmas(cfg: LemmasConfig) -> ExperimentTable:
    """Direct-product, swap statistics, entropy values, conversions, norms."""
    if cfg.trials < 1 or cfg.swap_pairs < 1 or cfg.swap_trials < 1 or cfg.conversions < 1:
        raise ValueError("all counts must be positive")

    rows = []
    notes: list[str] = []
    all_pass = True

    def add_row(check: str, cases: int, value: Any, expected: str, ok: bool) -> None:
        nonlocal all_pass
        if not ok:
            all_pass = False
            notes.append(f"{check}: check failed")
        rows.append((check, cases, value, expected, ok))

    # direct-product lemma on random mixed-state quadruples
    max_factorization = 0.0
    chain_ok = True
    for t in range(cfg.trials):
        rng = derive_rng(cfg.seed, "dp", t)
        dim_a = int(rng.integers(2, 5))
        dim_b = int(rng.integers(2, 5))
        report = direct_product_check(
            random_density_matrix(dim_a, rng),
            random_density_matrix(dim_a, rng),
            random_density_matrix(dim_b, rng),
            random_density_matrix(dim_b, rng),
        )
        max_factorization = max(max_factorization, report.max_factorization_error)
        chain_ok &= report.chain_holds
    add_row(
        "direct-product",
        cfg.trials,
        max_factorization,
        "<=1e-9 and chain holds",
        chain_ok and max_factorization <= 1e-9,
    )

    # swap-test sampling statistics
    within = 0
    for t in range(cfg.swap_pairs):
        rng = derive_rng(cfg.seed, "swap-states", t)
        dim = int(rng.integers(2, 9))
        a = random_pure_state(dim, rng)
        b = random_pure_state(dim, rng)
        p = swap_test(a, b)
        sampler = SwapTestSampler(a, b, derive_rng(cfg.seed, "swap-draws", t))
        outcomes = sampler.draw_many(cfg.swap_trials)
        freq = float(np.mean(outcomes == 0))
        sigma = math.sqrt(p * (1.0 - p) / cfg.swap_trials)
        within += int(abs(freq - p) <= 3.0 * sigma)
    add_row(
        "swap-statistics",
        cfg.swap_pairs,
        f"{within}/{cfg.swap_pairs}",
        "within 3-sigma on all but at most one",
        within >= cfg.swap_pairs - 1,
    )

    # Holevo quantity on the three reference ensembles
    zero = DensityMatrix.from_pure(PureState(np.array([1.0, 0.0])))
    one = DensityMatrix.from_pure(PureState(np.array([0.0, 1.0])))
    plus = DensityMatrix.from_pure(PureState(np.array([1.0, 1.0]) / math.sqrt(2.0)))
    chi_orth = holevo_chi(Ensemble(((0.5, zero), (0.5, one))))
    chi_same = holevo_chi(Ensemble(((0.5, zero), (0.5, zero))))
    chi_skew = holevo_chi(Ensemble(((0.5, zero), (0.5, plus))))
    add_row("holevo-orthogonal", 1, chi_orth, "1", abs(chi_orth - 1.0) <= 1e-9)
    add_row("holevo-identical", 1, chi_same, "0", abs(chi_same) <= 1e-9)
    add_row(
        "holevo-zero-plus", 1, chi_skew, "0.6009 within 1e-3", abs(chi_skew - 0.6009) <= 1e-3
    )

    # conversion formulas on random geometries
    max_dev = 0.0
    for t in range(cfg.conversions):
        rng = derive_rng(cfg.seed, "conv-dims", t)
        dim = int(rng.integers(2, 7))
        pairs = int(rng.integers(1, 5))
        embedding = geometry.random_threshold_embedding(
            dim, pairs, derive_seed(cfg.seed, "conv-e", t)
        )
        realization = geometry.embedding_to_realization(embedding)
        a = (embedding.delta1 + embedding.delta0) / (2.0 + embedding.delta1 + embedding.delta0)
        gamma = (embedding.delta1 - embedding.delta0) / (
            2.0 + embedding.delta1 + embedding.delta0
        )
        max_dev = max(max_dev, abs(realization.gamma - gamma))
        for x, y, _ in embedding.domain:
            got = float(np.vdot(realization.alpha[x], realization.beta[y]).real)
            want = a - (1.0 - a) * abs(complex(np.vdot(embedding.alpha[x], embedding.beta[y]))) ** 2
            max_dev = max(max_dev, abs(got - want))

        back = geometry.random_margin_realization(dim, pairs, derive_seed(cfg.seed, "conv-r", t))
        lifted = geometry.realization_to_embedding(back)
        max_dev = max(max_dev, abs(lifted.delta0 - (1.0 - back.gamma) ** 2 / 4.0))
        max_dev = max(max_dev, abs(lifted.delta1 - (1.0 + back.gamma) ** 2 / 4.0))
        for x, y, _ in back.domain:
            got = abs(complex(np.vdot(lifted.alpha[x], lifted.beta[y]))) ** 2
            want = (1.0 - float(np.vdot(back.alpha[x], back.beta[y]).real)) ** 2 / 4.0
            max_dev = max(max_dev, abs(got - want))
    add_row("conversion-formulas", cfg.conversions, max_dev, "<=1e-9", max_dev <= 1e-9)

    # inner-product sign matrices: spectral norm and Gram identity
    max_rel = 0.0
    gram_ok = True
    for size in (2, 3, 4):
        sign = geometry.ip_sign_matrix(size)
        norm = geometry.spectral_norm(sign.entries)
        target = math.sqrt(2.0**size)
        max_rel = max(max_rel, abs(norm - target) / target)
        gram = sign.entries @ sign.entries.T
        gram_ok &= bool(np.array_equal(gram, (1 << size) * np.eye(1 << size, dtype=np.int64)))
    add_row(
        "forster-ip-norms",
        3,
        max_rel,
        "relative dev <=1e-9, Gram identity exact",
        gram_ok and max_rel <= 1e-9,
    )

    return ExperimentTable(
        name="lemmas",
        columns=("check", "cases", "value", "expected", "pass"),
        rows=tuple(rows),
        all_pass=all_pass,
        notes=tuple(notes),
    )
