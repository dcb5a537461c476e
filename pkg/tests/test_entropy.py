import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recurlab.entropy import (
    AtomLaw,
    block_codes,
    chain_rule_check,
    check_tree_lemma_hypotheses,
    conditional_entropy,
    entropy,
    entropy_rate,
    lemma_trend,
    pattern_constant,
    rate_ladder,
    typical_set,
)
from recurlab.errors import ModelError, ParameterError, UndersampledError, ValidationError
from recurlab.process import BlockDistribution, block_distribution, empirical, function_of_markov, iid, markov
from recurlab.words import all_words

STICKY = [[0.9, 0.1], [0.1, 0.9]]
H025 = -(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75))


def dist(probs, ell=None):
    probs = np.asarray(probs, dtype=float)
    ell = ell or max(1, math.ceil(math.log2(len(probs))))
    return BlockDistribution(ell, 2, all_words(2, ell)[: len(probs)], probs, "exact")


class TestEntropy:
    def test_uniform_four(self):
        assert entropy(dist([0.25] * 4)).bits == 2.0

    def test_deterministic(self):
        assert entropy(dist([1.0, 0.0])).bits == 0.0

    def test_bernoulli_quarter(self):
        assert entropy(dist([0.25, 0.75])).bits == pytest.approx(0.811278, abs=1e-6)
        assert entropy(dist([0.25, 0.75])).bits == pytest.approx(H025, abs=1e-15)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            entropy(dist([1.5, -0.5]))

    def test_sub_probability_needs_opt_in(self):
        d = dist([0.25, 0.25])
        with pytest.raises(ValidationError):
            entropy(d)
        assert entropy(d, normalize=True).bits == pytest.approx(1.0)

    def test_nats(self):
        assert entropy(dist([0.5, 0.5])).nats == pytest.approx(math.log(2))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=16).filter(lambda xs: sum(xs) > 1e-3))
    def test_bounds(self, xs):
        p = np.array(xs) / sum(xs)
        h = entropy(dist(p)).bits
        assert -1e-12 <= h <= math.log2(np.count_nonzero(p)) + 1e-9


class TestConditionalEntropy:
    def test_table_example(self):
        h = conditional_entropy({(0, "a"): 0.4, (0, "b"): 0.1, (1, "a"): 0.1, (1, "b"): 0.4})
        assert h.bits == pytest.approx(0.721928, abs=1e-6)

    def test_independent(self):
        pw = np.array([0.2, 0.3, 0.5])
        joint = np.outer([0.6, 0.4], pw)
        assert conditional_entropy(joint).bits == pytest.approx(-(pw * np.log2(pw)).sum(), abs=1e-12)

    def test_function_of_atom(self):
        assert conditional_entropy(np.diag([0.3, 0.7])).bits == 0.0

    def test_mass_checked(self):
        with pytest.raises(ValidationError):
            conditional_entropy(np.array([[0.5, 0.1]]))
        with pytest.raises(ValidationError):
            conditional_entropy(np.array([[1.5, -0.5]]))

    def test_conditioning_never_increases(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            J = rng.random((3, 4, 5)) ** 3  # axes: F, G, W
            J /= J.sum()
            h_f = conditional_entropy(J.sum(axis=1)).bits
            h_fg = conditional_entropy(J.reshape(12, 5)).bits
            assert h_fg <= h_f + 1e-9


class TestChainRule:
    def test_independent(self):
        J = np.einsum("i,j->ij", [0.3, 0.7], [0.6, 0.4])[None]
        assert chain_rule_check(J) < 1e-12
        assert conditional_entropy(J.reshape(1, -1)).bits == pytest.approx(
            entropy(dist([0.3, 0.7])).bits + entropy(dist([0.6, 0.4])).bits, abs=1e-12
        )

    def test_copy(self):
        J = np.diag([0.25, 0.75])[None]
        assert chain_rule_check(J) < 1e-12
        assert conditional_entropy(J[0]).bits == 0.0

    def test_random_three_variable(self):
        rng = np.random.default_rng(42)
        J = rng.random((2, 3, 4, 2))
        J /= J.sum()
        assert chain_rule_check(J) < 1e-9

    def test_thousand_tables(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(1000):
            shape = tuple(rng.integers(1, 5, size=int(rng.integers(2, 5))))
            J = rng.random(shape) * (rng.random(shape) > 0.3)
            if J.sum() == 0:
                J.flat[0] = 1.0
            J /= J.sum()
            worst = max(worst, chain_rule_check(J))
        assert worst <= 1e-9


class TestRates:
    def test_iid_uniform(self):
        for a in (2, 3, 5):
            assert entropy_rate(iid([1 / a] * a)).bits == pytest.approx(math.log2(a), abs=1e-12)

    def test_sticky_markov(self):
        assert entropy_rate(markov(STICKY)).bits == pytest.approx(0.468996, abs=1e-6)

    def test_permutation_chain(self):
        P = np.roll(np.eye(3), 1, axis=1)
        assert entropy_rate(markov(P)).bits == 0.0

    def test_reducible(self):
        with pytest.raises(ModelError):
            entropy_rate(markov(np.eye(2)))

    def test_exact_mode_needs_iid_or_markov(self):
        with pytest.raises(ParameterError):
            entropy_rate(function_of_markov(STICKY, [0, 1]))

    def test_function_of_markov_identity_map(self):
        h = entropy_rate(function_of_markov(STICKY, [0, 1]), mode="ladder", max_length=10)
        assert h.bits == pytest.approx(0.468996, abs=1e-6)

    def test_ladder_closed_form(self):
        # stationary start: H(X_1^l) = H(pi) + (l - 1) h with H(pi) = 1 bit
        h = entropy_rate(markov(STICKY)).bits
        ladder = rate_ladder(markov(STICKY), 20)
        for ell, H in zip(ladder.lengths, ladder.block_entropies):
            assert H == pytest.approx(1 + (ell - 1) * h, abs=1e-9)
        assert ladder.extrapolated == pytest.approx(h, abs=1e-9)

    def test_ladder_gap_decreases(self):
        h = entropy_rate(markov(STICKY)).bits
        gaps = [abs(r - h) for r in rate_ladder(markov(STICKY), 20).per_symbol]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    def test_empirical_plugin(self):
        ladder = rate_ladder(markov(STICKY), 8, path_length=200_000, seed=1, source="sample")
        assert ladder.method == "empirical"
        assert abs(ladder.extrapolated - 0.468996) < 0.02

    def test_empirical_mode_rate(self):
        h = entropy_rate(markov(STICKY), mode="empirical", max_length=8, path_length=200_000, seed=2)
        assert h.method == "empirical" and h.sample_size == 200_000
        assert abs(h.bits - 0.468996) < 0.02

    def test_empirical_model(self):
        m = empirical([0, 1] * 500)
        ladder = rate_ladder(m, 4)
        assert ladder.block_entropies[0] == pytest.approx(1.0)
        assert ladder.extrapolated == pytest.approx(0.0, abs=1e-12)


class TestTypicalSet:
    def test_uniform(self):
        for N, eps in [(8, 0.1), (16, 0.3), (4, 0.5)]:
            d = BlockDistribution(4, 2, all_words(2, 4)[:N], np.full(N, 1 / N), "exact")
            assert len(typical_set(d, eps)) == math.ceil((1 - eps) * N)

    def test_deterministic(self):
        ts = typical_set(block_distribution(iid([1.0, 0.0]), 3), 0.2)
        assert len(ts) == 1 and ts.mass == 1.0

    def test_bernoulli_09(self):
        ts = typical_set(block_distribution(iid([0.1, 0.9]), 4), 0.1)
        assert ts.word_tuples() == [(1, 1, 1, 1), (0, 1, 1, 1), (1, 0, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0)]
        assert ts.mass == pytest.approx(0.9477, abs=1e-12)

    def test_epsilon_range(self):
        with pytest.raises(ParameterError):
            typical_set(block_distribution(iid([0.5, 0.5]), 2), 0.0)

    def test_mass_is_member_sum(self):
        ts = typical_set(block_distribution(markov(STICKY), 6), 0.2)
        assert ts.mass == pytest.approx(ts.probs.sum(), abs=1e-15)
        assert np.all(np.diff(ts.probs) <= 0)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 20), min_size=1, max_size=12).filter(sum), st.floats(0.01, 0.99))
    def test_minimum_cardinality_bruteforce(self, counts, eps):
        p = np.array(counts, dtype=float) / sum(counts)
        d = BlockDistribution(4, 2, all_words(2, 4)[: len(p)], p, "exact")
        got = len(typical_set(d, eps))
        best = min(
            r
            for r in range(len(p) + 1)
            for combo in itertools.combinations(range(len(p)), r)
            if sum(p[list(combo)]) >= 1 - eps - 1e-12
        )
        assert got == best


class TestLemmaChecker:
    def test_uniform_single_block(self):
        B = list(range(8))
        atom = AtomLaw(1.0, np.array(B)[:, None], np.full(8, 1 / 8))
        rep = check_tree_lemma_hypotheses([atom], [B], 8, eta=0.1, epsilon=0.1)
        assert rep.condition3_gap == pytest.approx(0.0, abs=1e-12)
        assert rep.condition1_ok and rep.condition2_ok and rep.condition3_ok
        assert rep.admitting_fraction == 1.0

    def test_constant_block(self):
        B = list(range(4))
        atom = AtomLaw(1.0, np.array([[2]]), np.array([1.0]))
        rep = check_tree_lemma_hypotheses([atom], [B], 4, eta=0.1, epsilon=0.1)
        assert rep.condition3_gap_bits == pytest.approx(math.log2(4))
        assert rep.condition3_gap > 0.1 and not rep.condition3_ok
        assert rep.admitting_fraction == 0.0

    def test_fair_bits_four_blocks(self):
        ell, m = 5, 4
        B = list(range(2**ell))
        words = all_words(32, m).astype(np.int64)
        atom = AtomLaw(1.0, words, np.full(words.shape[0], 1 / words.shape[0]))
        rep = check_tree_lemma_hypotheses([atom], [B] * m, 2**ell, eta=0.1)
        assert rep.condition1_ok and rep.condition2_ok and rep.condition3_ok
        assert rep.condition3_gap == pytest.approx(0.0, abs=1e-9)
        assert rep.admitting_fraction == 1.0

    def test_weighted_atoms(self):
        B = [0, 1]
        good = AtomLaw(0.75, np.array([[0], [1]]), np.array([0.5, 0.5]), label="good")
        bad = AtomLaw(0.25, np.array([[0]]), np.array([1.0]), label="bad")
        rep = check_tree_lemma_hypotheses([good, bad], [B], 2, eta=0.5)
        assert rep.admitting_fraction == pytest.approx(0.75)
        assert [a["admits"] for a in rep.atoms] == [True, False]

    def test_undersampled_atoms_are_flagged(self):
        B = [0, 1]
        good = AtomLaw(0.5, np.array([[0], [1]]), np.array([0.5, 0.5]), hits=1000)
        thin = AtomLaw(0.5, np.array([[0]]), np.array([1.0]), undersampled=True, hits=3, label="thin")
        rep = check_tree_lemma_hypotheses([good, thin], [B], 2, eta=0.5)
        assert rep.admitting_fraction == 1.0
        assert rep.excluded == [{"label": "thin", "weight": 0.5, "hits": 3}]
        with pytest.raises(UndersampledError):
            check_tree_lemma_hypotheses([thin], [B], 2, eta=0.5)

    def test_support_restricted_to_block_sets(self):
        # the second block value 3 lies outside B_2, leaving a single child per node
        words = np.array([[0, 0], [0, 3], [1, 0], [1, 3]])
        atom = AtomLaw(1.0, words, np.full(4, 0.25))
        rep = check_tree_lemma_hypotheses([atom], [[0, 1], [0, 1, 2]], 4, eta=0.1)
        assert rep.admitting_fraction == 0.0
        assert rep.block_masses[1] == pytest.approx(0.5)

    def test_parameter_checks(self):
        atom = AtomLaw(1.0, np.array([[0]]), np.array([1.0]))
        with pytest.raises(ParameterError):
            check_tree_lemma_hypotheses([atom], [], 2, eta=0.1)
        with pytest.raises(ParameterError):
            check_tree_lemma_hypotheses([atom], [[0]], 2, eta=1.5)

    def test_block_codes_preserve_order(self):
        rows = all_words(3, 3)
        assert block_codes(rows, 3).tolist() == list(range(27))

    def test_pattern_constant(self):
        assert pattern_constant(2) == pytest.approx(0.25)

    def test_trend_smoke(self):
        trend = lemma_trend(markov(STICKY), block_lengths=(4, 8), samples=20_000, replicates=2, seed=3)
        assert trend.block_lengths == [4, 8]
        assert all(0.0 <= f <= 1.0 for f in trend.admitting_fractions)
        assert trend.typical_sizes == [7, 33]
