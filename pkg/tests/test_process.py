import itertools
import math

import numpy as np
import pytest

from recurlab import _rng
from recurlab.errors import ConditioningError, ModelError, SizeError, UndersampledError, ValidationError
from recurlab.process import (
    BlockDistribution,
    SamplePath,
    block_distribution,
    chain_structure,
    conditional_block_distribution,
    conditional_weights,
    constant_model,
    cyclic_model,
    empirical,
    function_of_markov,
    iid,
    markov,
    markov_stationary,
    model_from_json,
    path_from_text,
    path_to_text,
    read_model,
    read_path,
    read_path_any,
    sample_conditional,
    sample_path,
    support_mask,
    write_model,
    write_path,
)
from recurlab.words import all_words

STICKY = [[0.9, 0.1], [0.1, 0.9]]


def table(dist):
    return {tuple(w): p for w, p in zip(dist.words.tolist(), dist.probs.tolist())}


class TestModels:
    def test_row_sums_checked(self):
        with pytest.raises(ValidationError):
            markov([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(ValidationError):
            iid([0.5, 0.6])
        with pytest.raises(ValidationError):
            iid([1.2, -0.2])

    def test_symbol_map_total(self):
        with pytest.raises((ValidationError, ModelError)):
            function_of_markov(STICKY, [0])

    def test_chain_structure(self):
        assert chain_structure(np.array(STICKY)) == (True, 1)
        assert chain_structure(np.array([[0.0, 1.0], [1.0, 0.0]])) == (True, 2)
        assert chain_structure(np.eye(2))[0] is False

    def test_json_roundtrip(self, tmp_path):
        for model in (iid([0.25, 0.75]), markov(STICKY), function_of_markov([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]], [0, 1, 1])):
            p = tmp_path / f"{model.variant}.json"
            write_model(model, p)
            again = read_model(p)
            assert again.to_json() == model.to_json()

    def test_empirical_path_file(self, tmp_path):
        path = SamplePath(0, np.array([0, 1, 1, 0, 1]), 0, 2)
        write_path(path, tmp_path / "ref.rlp")
        model = model_from_json({"variant": "empirical", "alphabet_size": 2, "path_file": "ref.rlp"}, base_dir=tmp_path)
        assert model.reference.tolist() == [0, 1, 1, 0, 1]

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            model_from_json({"variant": "hidden", "alphabet_size": 2})


class TestStationary:
    def test_doubly_stochastic(self):
        P = np.array([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2], [0.3, 0.2, 0.5]])
        assert np.allclose(markov_stationary(P), [1 / 3] * 3, atol=1e-12)

    def test_hand_solved(self):
        assert np.allclose(markov_stationary(np.array([[0.9, 0.1], [0.5, 0.5]])), [5 / 6, 1 / 6], atol=1e-12)

    def test_periodic_rejected(self):
        with pytest.raises(ModelError):
            markov_stationary(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_reducible_rejected(self):
        with pytest.raises(ModelError):
            markov_stationary(np.eye(2))


class TestSampling:
    def test_fair_bits_mean(self):
        path = sample_path(iid([0.5, 0.5]), (0, 999_999), 0)
        assert 0.499 <= path.symbols.mean() <= 0.501

    def test_short_path(self):
        path = sample_path(iid([0.5, 0.5]), (0, 9), 3)
        assert len(path) == 10 and path.lo == 0 and path.hi == 9

    def test_sticky_flip_rate(self):
        s = sample_path(markov(STICKY), (0, 999_999), 0).symbols
        assert 0.095 <= np.mean(s[1:] != s[:-1]) <= 0.105

    def test_reducible_rejected(self):
        with pytest.raises(ModelError):
            sample_path(markov([[1.0, 0.0], [0.0, 1.0]]), (0, 9), 0)

    def test_seed_determinism(self):
        m = markov(STICKY)
        a, b = sample_path(m, (-50, 50), 7), sample_path(m, (-50, 50), 7)
        assert np.array_equal(a.symbols, b.symbols)
        assert not np.array_equal(a.symbols, sample_path(m, (-50, 50), 8).symbols)

    def test_function_of_markov_sampling(self):
        m = function_of_markov([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]], [0, 1, 1])
        s = sample_path(m, (0, 199_999), 1).symbols
        assert abs(s.mean() - 2 / 3) < 0.01

    def test_empirical_model_cycles_reference(self):
        m = empirical([0, 1, 1])
        s = sample_path(m, (0, 8), 0).symbols.tolist()
        assert sorted(set(tuple(s[i : i + 3]) for i in range(0, 6, 3))) in ([(0, 1, 1)], [(1, 1, 0)], [(1, 0, 1)])

    def test_derived_seeds_depend_on_keys(self):
        assert _rng.derive_seed(1, 2, 3) != _rng.derive_seed(1, 3, 2)
        assert _rng.derive_seed(1, 2, 3) == _rng.derive_seed(1, 2, 3)


class TestBlockLaws:
    def test_fair_pairs(self):
        d = block_distribution(iid([0.5, 0.5]), 2)
        assert d.probs.tolist() == [0.25] * 4

    def test_sticky_pairs(self):
        t = table(block_distribution(markov(STICKY), 2))
        assert t[(0, 0)] == pytest.approx(0.45, abs=1e-15)
        assert t[(0, 1)] == pytest.approx(0.05, abs=1e-15)
        assert t[(1, 0)] == pytest.approx(0.05, abs=1e-15)
        assert t[(1, 1)] == pytest.approx(0.45, abs=1e-15)

    def test_constant(self):
        d = block_distribution(constant_model(), 3)
        assert table(d) == {(0, 0, 0): 1.0}

    def test_size_guard(self):
        with pytest.raises(SizeError):
            block_distribution(iid([0.5, 0.5]), 25)

    @pytest.mark.parametrize("model", [markov(STICKY), markov([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8]])])
    def test_marginalisation(self, model):
        for ell in range(1, 5):
            small = table(block_distribution(model, ell))
            big = table(block_distribution(model, ell + 1))
            summed = {}
            for w, p in big.items():
                summed[w[:-1]] = summed.get(w[:-1], 0.0) + p
            assert all(abs(summed[w] - small[w]) < 1e-12 for w in small)

    def test_stationarity_via_offset_conditioning(self):
        m = markov([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8]])
        a = table(conditional_block_distribution(m, (0, 2), {}))
        b = table(conditional_block_distribution(m, (17, 19), {}))
        assert all(abs(a[w] - b[w]) < 1e-12 for w in a)

    def test_function_of_markov_exact_matches_empirical(self):
        m = function_of_markov([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]], [0, 1, 1])
        exact = table(block_distribution(m, 3))
        emp = table(block_distribution(m, 3, "empirical", samples=200_000, seed=3))
        assert 0.5 * sum(abs(exact.get(w, 0) - emp.get(w, 0)) for w in set(exact) | set(emp)) < 0.01

    def test_empirical_converges(self):
        m = markov(STICKY)
        exact = table(block_distribution(m, 3))
        emp = table(block_distribution(m, 3, "empirical", samples=1_000_000, seed=0))
        tv = 0.5 * sum(abs(exact.get(w, 0) - emp.get(w, 0)) for w in set(exact) | set(emp))
        assert tv < 0.01

    def test_json_roundtrip(self):
        d = block_distribution(markov(STICKY), 3)
        again = BlockDistribution.from_json(d.to_json())
        assert table(again) == table(d)


class TestConditioning:
    def test_iid_ignores_conditioning(self):
        m = iid([0.3, 0.7])
        a = table(conditional_block_distribution(m, (0, 2), {-1: 0, 5: 1}))
        b = table(block_distribution(m, 3))
        assert all(abs(a[w] - b[w]) < 1e-15 for w in b)

    def test_sticky_row(self):
        d = table(conditional_block_distribution(markov(STICKY), (1, 1), {0: 0}))
        assert d[(0,)] == pytest.approx(0.9, abs=1e-14)

    def test_two_sided_bridge_by_brute_force(self):
        P = np.array([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8]])
        m = markov(P)
        pi = m.stationary
        cond = {-2: 1, 0: 2, 4: 0}
        got = table(conditional_block_distribution(m, (1, 3), cond))
        joint = {}
        for w in itertools.product(range(3), repeat=7):  # indices -2..4
            x = dict(zip(range(-2, 5), w))
            if any(x[t] != s for t, s in cond.items()):
                continue
            p = pi[x[-2]] * math.prod(P[x[t], x[t + 1]] for t in range(-2, 4))
            key = (x[1], x[2], x[3])
            joint[key] = joint.get(key, 0.0) + p
        z = sum(joint.values())
        assert all(abs(got[w] - joint[w] / z) < 1e-12 for w in joint)

    def test_conditional_mixture_reproduces_marginal(self):
        m = markov([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8]])
        marg = table(block_distribution(m, 2))
        prior = table(block_distribution(m, 2))
        mixed = {}
        for c, pc in prior.items():
            cond = {-2: c[0], -1: c[1]}
            for w, p in table(conditional_block_distribution(m, (0, 1), cond)).items():
                mixed[w] = mixed.get(w, 0.0) + pc * p
        assert all(abs(mixed[w] - marg[w]) < 1e-10 for w in marg)

    def test_function_of_markov_conditioning(self):
        m = function_of_markov([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]], [0, 1, 1])
        exact = table(conditional_block_distribution(m, (1, 2), {0: 0}))
        emp = table(conditional_block_distribution(m, (1, 2), {0: 0}, mode="empirical", samples=200_000, seed=2))
        assert all(abs(exact[w] - emp.get(w, 0)) < 0.01 for w in exact)

    def test_impossible_event(self):
        with pytest.raises(ConditioningError):
            conditional_block_distribution(constant_model(), (1, 2), {0: 1})
        with pytest.raises(ConditioningError):
            conditional_block_distribution(markov([[0.5, 0.5], [1.0, 0.0]]), (2, 2), {0: 1, 1: 1})
        with pytest.raises(ModelError):
            conditional_block_distribution(cyclic_model(2), (1, 1), {0: 0})

    def test_undersampled_carries_hits(self):
        m = markov(STICKY)
        cond = {t: t % 2 for t in range(12)}  # alternating pattern, probability ~1e-12
        with pytest.raises(UndersampledError) as info:
            conditional_block_distribution(m, (12, 12), cond, mode="empirical", samples=10_000, seed=0)
        assert info.value.hits < 200

    def test_weights_and_mask_agree(self):
        m = function_of_markov([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]], [0, 1, 1])
        rows = all_words(2, 6)
        cond = {-3: 1, 9: 0}
        assert np.array_equal(support_mask(m, (0, 5), cond, rows), conditional_weights(m, (0, 5), cond, rows) > 0)

    def test_conditional_sampler_matches_weights(self):
        m = markov(STICKY)
        cond = {-1: 0, 4: 1}
        draws = sample_conditional(m, (0, 3), cond, 200_000, np.random.default_rng(0))
        rows = all_words(2, 4)
        w = conditional_weights(m, (0, 3), cond, rows)
        codes = draws @ (2 ** np.arange(3, -1, -1))
        freq = np.bincount(codes, minlength=16) / len(codes)
        assert 0.5 * np.abs(freq - w).sum() < 0.01


class TestPathFiles:
    def test_binary_roundtrip(self, tmp_path):
        p = sample_path(markov(STICKY), (-20, 20), 5)
        write_path(p, tmp_path / "p.rlp")
        q = read_path(tmp_path / "p.rlp")
        assert (q.lo, q.seed, q.alphabet_size) == (p.lo, p.seed, p.alphabet_size)
        assert np.array_equal(q.symbols, p.symbols)

    def test_text_roundtrip(self, tmp_path):
        p = sample_path(iid([0.5, 0.5]), (-3, 3), 5)
        again = path_from_text(path_to_text(p))
        assert np.array_equal(again.symbols, p.symbols) and again.lo == -3
        (tmp_path / "p.txt").write_text(path_to_text(p))
        assert np.array_equal(read_path_any(tmp_path / "p.txt").symbols, p.symbols)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "junk.rlp").write_bytes(b"XXXX" + bytes(40))
        with pytest.raises(ValidationError):
            read_path(tmp_path / "junk.rlp")

    def test_path_window(self):
        p = SamplePath(-2, np.array([0, 1, 0, 1]), 0, 2)
        assert p.window(-1, 1).tolist() == [1, 0]
        assert p.at(1) == 1
