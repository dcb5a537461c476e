"""Shannon entropy, entropy rates, typical sets and the binary-tree lemma checker.

All logarithms are base 2.  Sums over probability tables use ``math.fsum``
so results do not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from recurlab import _rng
from recurlab.errors import ModelError, ParameterError, UndersampledError, ValidationError
from recurlab.process import (
    BlockDistribution,
    EmpiricalModel,
    FunctionOfMarkovModel,
    IIDModel,
    MarkovModel,
    ProcessModel,
    _stationary_solve,
    block_distribution,
    chain_structure,
    markov_stationary,
    sample_path,
    sample_paths,
)
from recurlab.words import Language, admits_full_binary_tree, format_word, symbol_dtype

MASS_TOL = 1e-9


@dataclass(frozen=True)
class EntropyValue:
    bits: float
    method: str = "exact"
    sample_size: int | None = None

    def __float__(self):
        return float(self.bits)

    @property
    def nats(self) -> float:
        return self.bits * math.log(2)

    def to_json(self) -> dict:
        return {"bits": self.bits, "method": self.method, "sample_size": self.sample_size}


def _h(probs) -> float:
    """``-sum p log2 p`` of a non-negative vector (taken as is)."""
    p = np.asarray(probs, dtype=np.float64).ravel()
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    return max(0.0, -math.fsum((p * np.log2(p)).tolist()))


def entropy(dist: BlockDistribution, normalize: bool = False) -> EntropyValue:
    """Entropy of a block law.

    The law must have total mass 1 within ``1e-9`` unless ``normalize`` is
    set, in which case the entropy of the renormalised law is returned.
    """
    probs = np.asarray(dist.probs if isinstance(dist, BlockDistribution) else list(dist.values()) if isinstance(dist, Mapping) else dist, dtype=np.float64)
    if np.any(probs < 0):
        raise ValidationError("negative probabilities")
    total = math.fsum(probs.tolist())
    if abs(total - 1.0) > MASS_TOL:
        if not normalize:
            raise ValidationError(f"total mass {total} is not 1; pass normalize=True for sub-probability laws")
        if total <= 0:
            raise ValidationError("empty law")
        probs = probs / total
    method = getattr(dist, "method", "exact")
    size = getattr(dist, "sample_size", None)
    return EntropyValue(_h(probs), method, size)


def _table_from_mapping(joint: Mapping) -> np.ndarray:
    atoms = sorted({k[0] for k in joint}, key=repr)
    words = sorted({k[1] for k in joint}, key=repr)
    ai = {a: i for i, a in enumerate(atoms)}
    wi = {w: i for i, w in enumerate(words)}
    table = np.zeros((len(atoms), len(words)))
    for (f, w), p in joint.items():
        table[ai[f], wi[w]] += p
    return table


def _conditional_entropy_2d(table: np.ndarray) -> float:
    """``sum_f P(f) H(W | f)`` for a table indexed ``[f, w]``."""
    parts = []
    for row in table:
        pf = math.fsum(row.tolist())
        if pf > 0:
            parts.append(pf * _h(row / pf))
    return math.fsum(parts)


def conditional_entropy(joint) -> EntropyValue:
    """``H(W | F)`` from a joint law given as ``{(atom, word): p}`` or an ``[atom, word]`` array."""
    table = _table_from_mapping(joint) if isinstance(joint, Mapping) else np.asarray(joint, dtype=np.float64)
    table = table.reshape(table.shape[0], -1)
    if np.any(table < 0):
        raise ValidationError("negative probabilities")
    total = math.fsum(table.ravel().tolist())
    if abs(total - 1.0) > MASS_TOL:
        raise ValidationError(f"joint law has total mass {total}")
    return EntropyValue(_conditional_entropy_2d(table))


def chain_rule_check(joint) -> float:
    """``|H(W|F) - sum_i H(W_i | F, W_1..W_{i-1})|`` for an ``[atom, w1, ..., wm]`` array.

    Both sides are computed directly from conditional laws, not from
    differences of joint entropies.
    """
    joint = np.asarray(joint, dtype=np.float64)
    if joint.ndim < 2:
        raise ValidationError("joint table needs an atom axis and at least one word axis")
    F = joint.shape[0]
    lhs = _conditional_entropy_2d(joint.reshape(F, -1))
    rhs = []
    for i in range(1, joint.ndim):
        marginal = joint.sum(axis=tuple(range(i + 1, joint.ndim))) if i + 1 < joint.ndim else joint
        rhs.append(_conditional_entropy_2d(marginal.reshape(-1, joint.shape[i])))
    return abs(lhs - math.fsum(rhs))


# ---------------------------------------------------------------------------
# entropy rates


@dataclass(frozen=True)
class RateLadder:
    """Block entropies ``H(X_1^l)`` for a ladder of lengths.

    ``per_symbol[i] = H_l / l`` and ``increments[i] = H_l - H_{l-1}``; the
    increment at the top of the ladder is the extrapolated rate.
    """

    lengths: tuple[int, ...]
    block_entropies: tuple[float, ...]
    per_symbol: tuple[float, ...]
    increments: tuple[float, ...]
    method: str
    sample_size: int | None = None

    @property
    def extrapolated(self) -> float:
        return self.increments[-1]

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "sample_size": self.sample_size,
            "extrapolated_bits": self.extrapolated,
            "rows": [
                {"length": l, "block_entropy": h, "per_symbol": r, "increment": d}
                for l, h, r, d in zip(self.lengths, self.block_entropies, self.per_symbol, self.increments)
            ],
        }

    def to_csv(self) -> str:
        lines = ["length,block_entropy,per_symbol,increment"]
        lines += [f"{l},{h:.12g},{r:.12g},{d:.12g}" for l, h, r, d in zip(self.lengths, self.block_entropies, self.per_symbol, self.increments)]
        return "\n".join(lines) + "\n"


def _exact_markov_rate(P) -> float:
    irreducible, period = chain_structure(P)
    if not irreducible:
        raise ModelError("Markov chain is not ergodic (reducible)")
    pi = markov_stationary(P) if period == 1 else _stationary_solve(P)
    return math.fsum(float(pi[i]) * _h(P[i]) for i in range(P.shape[0]))


def rate_ladder(
    model: ProcessModel,
    max_length: int = 12,
    path_length: int = 1_000_000,
    seed: int = 0,
    source: str = "auto",
) -> RateLadder:
    """``H(X_1^l)`` for ``l = 1..max_length``.

    ``source="exact"`` uses exact block laws, ``source="sample"`` plug-in
    frequencies of a seeded path of ``path_length`` symbols (or of the
    reference path of an empirical model), keeping only lengths with
    ``|A|**l <= N / 10``.  ``"auto"`` picks exact whenever the model allows.
    """
    if source not in ("auto", "exact", "sample"):
        raise ParameterError(f"unknown ladder source {source!r}")
    a = model.alphabet.size
    if isinstance(model, MarkovModel):
        irreducible, _ = chain_structure(model.transition)
        if not irreducible:
            raise ModelError("Markov chain is not ergodic (reducible)")
    exact = model.exact and not (isinstance(model, MarkovModel) and chain_structure(model.transition)[1] != 1)
    if source == "exact" and not exact:
        raise ParameterError(f"exact block laws are not available for this {model.variant} model")
    if exact and source != "sample":
        lengths = [l for l in range(1, max_length + 1) if a**l <= 2**22]
        H = [entropy(block_distribution(model, l)).bits for l in lengths]
        method, size = "exact", None
    else:
        if isinstance(model, EmpiricalModel):
            symbols = model.reference
            circular = True
        else:
            symbols = _rng_path(model, path_length, seed)
            circular = False
        n = symbols.shape[0]
        lengths = [l for l in range(1, max_length + 1) if a**l * 10 <= n] or [1]
        H = []
        for l in lengths:
            if circular:
                idx = (np.arange(n)[:, None] + np.arange(l)[None, :]) % n
            else:
                idx = np.arange(n - l + 1)[:, None] + np.arange(l)[None, :]
            _, counts = np.unique(symbols[idx], axis=0, return_counts=True)
            H.append(_h(counts / counts.sum()))
        method, size = "empirical", int(n)
    prev = [0.0] + H[:-1]
    prev_len = [0] + lengths[:-1]
    inc = [(h - p) / (l - pl) for h, p, l, pl in zip(H, prev, lengths, prev_len)]
    return RateLadder(tuple(lengths), tuple(H), tuple(h / l for h, l in zip(H, lengths)), tuple(inc), method, size)


def _rng_path(model, length, seed):
    """Long stationary path; periodic chains start from their solved stationary law."""
    if isinstance(model, MarkovModel) and chain_structure(model.transition)[1] != 1:
        P = model.transition
        pi = _stationary_solve(P)
        rng = _rng.generator(seed, _rng.RATE)
        x = np.empty(length, dtype=np.int64)
        x[0] = rng.choice(P.shape[0], p=pi)
        u = rng.random(length)
        cum = np.cumsum(P, axis=1)
        for t in range(1, length):
            x[t] = min(int(np.searchsorted(cum[x[t - 1]], u[t], side="right")), P.shape[0] - 1)
        return x
    return sample_path(model, (0, length - 1), _rng.derive_seed(seed, _rng.RATE)).symbols.astype(np.int64)


def entropy_rate(model: ProcessModel, mode: str = "exact", max_length: int = 12, path_length: int = 1_000_000, seed: int = 0) -> EntropyValue:
    """Entropy rate in bits per symbol.

    ``"exact"`` covers IID and Markov models (irreducible periodic chains
    included).  ``"ladder"`` returns the top increment ``H_l - H_{l-1}`` of
    exact block entropies, and ``"empirical"`` the same increment from
    plug-in frequencies of a sampled path.
    """
    if mode == "exact":
        if isinstance(model, IIDModel):
            return EntropyValue(_h(model.probabilities))
        if isinstance(model, MarkovModel):
            return EntropyValue(_exact_markov_rate(model.transition))
        raise ParameterError(f"exact entropy rate is not available for {model.variant} models; use mode='empirical'")
    if mode not in ("ladder", "empirical"):
        raise ParameterError(f"unknown mode {mode!r}")
    source = {"ladder": "auto", "empirical": "sample"}[mode]
    ladder = rate_ladder(model, max_length, path_length, seed, source)
    return EntropyValue(max(0.0, ladder.extrapolated), ladder.method, ladder.sample_size)


# ---------------------------------------------------------------------------
# typical sets


@dataclass(frozen=True, eq=False)
class TypicalSet:
    """Greedy high-probability block set, ordered by descending probability then lexicographically."""

    block_length: int
    alphabet_size: int
    words: np.ndarray
    probs: np.ndarray
    epsilon: float

    @property
    def mass(self) -> float:
        return math.fsum(self.probs.tolist())

    @property
    def log2_size(self) -> float:
        return math.log2(len(self)) if len(self) else float("-inf")

    @property
    def rate(self) -> float:
        """``log2 |A'| / l`` for comparison with the entropy rate."""
        return self.log2_size / self.block_length

    def __len__(self):
        return self.words.shape[0]

    def word_tuples(self) -> list[tuple[int, ...]]:
        return [tuple(w) for w in self.words.tolist()]

    def to_json(self) -> dict:
        a = self.alphabet_size
        return {
            "block_length": self.block_length,
            "epsilon": self.epsilon,
            "size": len(self),
            "mass": self.mass,
            "log2_size": self.log2_size,
            "log2_size_per_symbol": self.rate,
            "words": [format_word(w, a) for w in self.words.tolist()],
            "probabilities": self.probs.tolist(),
        }


def typical_set(dist: BlockDistribution, epsilon: float) -> TypicalSet:
    """Smallest-first greedy set of mass at least ``1 - epsilon`` (within 1e-12)."""
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    if np.any(dist.probs < 0):
        raise ValidationError("negative probabilities")
    order = np.argsort(-dist.probs, kind="stable")
    cum = np.cumsum(dist.probs[order])
    hit = np.flatnonzero(cum >= (1.0 - epsilon) - 1e-12)
    k = int(hit[0]) + 1 if hit.size else len(order)
    chosen = order[:k]
    return TypicalSet(dist.block_length, dist.alphabet_size, dist.words[chosen], dist.probs[chosen], float(epsilon))


# ---------------------------------------------------------------------------
# binary-tree lemma hypotheses


def block_codes(rows, alphabet_size: int) -> np.ndarray:
    """Integer code of each block (row), preserving lexicographic order."""
    rows = np.asarray(rows, dtype=np.int64)
    codes = np.zeros(rows.shape[0], dtype=np.int64)
    for d in range(rows.shape[1]):
        codes = codes * alphabet_size + rows[:, d]
    return codes


@dataclass(frozen=True, eq=False)
class AtomLaw:
    """Conditional law of ``(W_1, ..., W_m)`` on one atom of the conditioning algebra."""

    weight: float
    words: np.ndarray
    probs: np.ndarray
    undersampled: bool = False
    hits: int | None = None
    label: str = ""


@dataclass
class LemmaHypothesisReport:
    eta: float
    epsilon: float
    epsilon_achieved: float
    base_size: int
    block_sizes: list[int]
    block_masses: list[float]
    condition1_ok: bool
    condition2_ok: bool
    condition3_gap: float
    condition3_gap_bits: float
    condition3_ok: bool
    conditional_entropy_bits: float
    admitting_fraction: float
    atoms: list[dict] = field(default_factory=list)
    excluded: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def check_tree_lemma_hypotheses(
    atoms: Sequence[AtomLaw],
    block_sets: Sequence[Sequence[int]],
    base_size: int,
    eta: float,
    epsilon: float = 0.1,
) -> LemmaHypothesisReport:
    """Evaluate the three size/mass/entropy hypotheses and per-atom tree admission.

    ``block_sets[i]`` is ``B_i`` as symbols of the block alphabet of size
    ``base_size``.  Undersampled atoms are listed under ``excluded`` and do
    not enter any average.
    """
    m = len(block_sets)
    if m == 0:
        raise ParameterError("need at least one block")
    if not 0 < eta < 1:
        raise ParameterError("eta must lie in (0, 1)")
    sets = [np.array(sorted(set(int(s) for s in b)), dtype=np.int64) for b in block_sets]
    included = [a for a in atoms if not a.undersampled]
    excluded = [{"label": a.label, "weight": a.weight, "hits": a.hits} for a in atoms if a.undersampled]
    if not included:
        raise UndersampledError("every atom is undersampled", 0)
    total_w = math.fsum(a.weight for a in included)
    if total_w <= 0:
        raise ValidationError("atoms need positive mass")
    log_b = math.log2(base_size) if base_size > 1 else 1.0
    masses = [0.0] * m
    h_parts = []
    atom_rows = []
    admitted_w = []
    for atom in included:
        words = np.asarray(atom.words, dtype=np.int64).reshape(-1, m)
        probs = np.asarray(atom.probs, dtype=np.float64)
        if words.shape[0] != probs.shape[0]:
            raise ValidationError("one probability per atom word required")
        pa = math.fsum(probs.tolist())
        if pa <= 0:
            raise ValidationError("atom law has no mass")
        probs = probs / pa
        w = atom.weight / total_w
        inside = np.ones(words.shape[0], dtype=bool)
        for i in range(m):
            member = np.isin(words[:, i], sets[i])
            masses[i] += w * math.fsum(probs[member].tolist())
            inside &= member
        h_parts.append(w * _h(probs))
        support = words[inside & (probs > 0)]
        lang = Language.from_rows(support, base_size)
        cert = admits_full_binary_tree(lang)
        if cert is not None:
            admitted_w.append(w)
        atom_rows.append(
            {"label": atom.label, "weight": w, "support_size": int(len(lang)), "admits": cert is not None, "hits": atom.hits}
        )
    H = math.fsum(h_parts)
    target = math.fsum(math.log2(len(s)) if len(s) else float("-inf") for s in sets)
    gap_bits = abs(H - target)
    gap = gap_bits / log_b
    sizes = [int(len(s)) for s in sets]
    eps_achieved = max(max(1.0 - x for x in masses), gap)
    return LemmaHypothesisReport(
        eta=float(eta),
        epsilon=float(epsilon),
        epsilon_achieved=float(eps_achieved),
        base_size=int(base_size),
        block_sizes=sizes,
        block_masses=[float(x) for x in masses],
        condition1_ok=all(s > base_size**eta for s in sizes),
        condition2_ok=all(x > 1 - epsilon for x in masses),
        condition3_gap=float(gap),
        condition3_gap_bits=float(gap_bits),
        condition3_ok=gap < epsilon,
        conditional_entropy_bits=float(H),
        admitting_fraction=float(math.fsum(admitted_w)),
        atoms=atom_rows,
        excluded=excluded,
    )


def pattern_constant(alphabet_size: int) -> float:
    """``log 2 / (4 log |A|)``: exponent of the typical block count in ``|A|**n``."""
    return math.log(2) / (4 * math.log(alphabet_size))


@dataclass
class LemmaTrend:
    block_lengths: list[int]
    admitting_fractions: list[float]
    epsilon_achieved: list[float]
    condition3_gaps: list[float]
    typical_sizes: list[int]
    samples: int
    replicates: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def lemma_trend(
    model: ProcessModel,
    block_lengths: Sequence[int] = (4, 8, 12),
    m: int = 4,
    epsilon: float = 0.1,
    samples: int = 200_000,
    replicates: int = 4,
    seed: int = 0,
    eta: float | None = None,
) -> LemmaTrend:
    """Admitting fraction of typical-restricted sampled supports, trivial conditioning.

    For each block length ``l`` the support of ``(W_1..W_m)`` (consecutive
    ``l``-blocks) is estimated from ``samples`` seeded draws, restricted to
    the ``epsilon``-typical set of a single block, and tested for a full
    binary tree; the fraction is averaged over ``replicates`` seeds.
    """
    a = model.alphabet.size
    if eta is None:
        eta = pattern_constant(a) / 2
    fractions, eps, gaps, sizes = [], [], [], []
    for ell in block_lengths:
        law = block_distribution(model, ell) if model.exact else block_distribution(model, ell, "empirical", seed=seed)
        B = typical_set(law, epsilon)
        codes_b = block_codes(B.words, a)
        base = a**ell
        fr, ea, ga = [], [], []
        for r in range(replicates):
            rng = _rng.generator(seed, _rng.LEMMA, ell, r)
            paths = sample_paths(model, m * ell, samples, rng)
            blocks = np.stack([block_codes(paths[:, i * ell : (i + 1) * ell], a) for i in range(m)], axis=1)
            words, counts = np.unique(blocks, axis=0, return_counts=True)
            atom = AtomLaw(1.0, words, counts / counts.sum(), hits=samples, label=f"replicate-{r}")
            report = check_tree_lemma_hypotheses([atom], [codes_b] * m, base, eta, epsilon)
            fr.append(report.admitting_fraction)
            ea.append(report.epsilon_achieved)
            ga.append(report.condition3_gap)
        fractions.append(float(np.mean(fr)))
        eps.append(float(np.mean(ea)))
        gaps.append(float(np.mean(ga)))
        sizes.append(len(B))
    return LemmaTrend(list(block_lengths), fractions, eps, gaps, sizes, samples, replicates)
