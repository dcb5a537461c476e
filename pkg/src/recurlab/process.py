"""Stationary symbolic processes: models, seeded sampling and block laws.

Four model classes are supported:

``IIDModel``
    independent symbols with a fixed law.
``MarkovModel``
    a finite chain started from its stationary vector.
``FunctionOfMarkovModel``
    a hidden finite chain observed through a total symbol map.
``EmpiricalModel``
    the shift-invariant measure of a reference path read circularly.

The first three share a hidden-chain representation (``hmm()``) on which all
exact computations are done by forward/backward message passing.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from recurlab import _rng, kernels
from recurlab.errors import (
    ConditioningError,
    ModelError,
    ParameterError,
    SizeError,
    UndersampledError,
    ValidationError,
)
from recurlab.words import Alphabet, all_words, format_word, parse_word, symbol_dtype

ROW_TOL = 1e-12
EXACT_MAX_WORDS = 2**24
MIN_ATOM_SAMPLES = 200


# ---------------------------------------------------------------------------
# chain utilities


def _check_stochastic(P, name="transition matrix", square=True):
    P = np.array(P, dtype=np.float64)
    if P.ndim != 2 or P.size == 0 or (square and P.shape[0] != P.shape[1]):
        raise ValidationError(f"{name} must be a non-empty square matrix")
    if np.any(P < 0):
        raise ValidationError(f"{name} has negative entries")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL):
        raise ValidationError(f"{name} rows must sum to 1 within {ROW_TOL}")
    return P


def chain_structure(P) -> tuple[bool, int]:
    """Return ``(irreducible, period)`` of the support graph of ``P``."""
    adj = np.asarray(P) > 0
    k = adj.shape[0]
    level = np.full(k, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for s in frontier:
            for t in np.flatnonzero(adj[s]):
                if level[t] < 0:
                    level[t] = level[s] + 1
                    nxt.append(int(t))
        frontier = nxt
    forward = level >= 0
    back = np.zeros(k, dtype=bool)
    back[0] = True
    frontier = [0]
    while frontier:
        nxt = []
        for t in frontier:
            for s in np.flatnonzero(adj[:, t]):
                if not back[s]:
                    back[s] = True
                    nxt.append(int(s))
        frontier = nxt
    irreducible = bool(forward.all() and back.all())
    if not irreducible:
        return False, 0
    period = 0
    for s, t in zip(*np.nonzero(adj)):
        period = math.gcd(period, int(level[s] + 1 - level[t]))
    return True, abs(period)


def _stationary_solve(P):
    """Stationary vector of an irreducible (possibly periodic) chain."""
    k = P.shape[0]
    A = np.vstack([P.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def markov_stationary(P) -> np.ndarray:
    """Unique stationary vector of an irreducible aperiodic chain.

    Power iteration with repeated squaring until ``|pi P - pi|_1 < 1e-12``.
    """
    P = _check_stochastic(P)
    irreducible, period = chain_structure(P)
    if not irreducible:
        raise ModelError("Markov chain is reducible")
    if period != 1:
        raise ModelError(f"Markov chain is periodic (period {period})")
    k = P.shape[0]
    pi = np.full(k, 1.0 / k)
    Q = P.copy()
    for _ in range(200):
        pi = pi @ Q
        pi /= pi.sum()
        if np.abs(pi @ P - pi).sum() < 1e-12:
            return pi
        Q = Q @ Q
        Q /= Q.sum(axis=1, keepdims=True)
    raise ModelError("power iteration did not converge")


def _cumulative(rows):
    """Row-wise CDFs that reach exactly 1.0 at the last positive entry."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    cum = np.cumsum(rows, axis=1)
    for r in range(rows.shape[0]):
        last = np.flatnonzero(rows[r] > 0)[-1]
        cum[r, last:] = 1.0
    return np.ascontiguousarray(cum)


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True, eq=False)
class ProcessModel:
    alphabet: Alphabet

    variant = "abstract"

    def hmm(self):
        """``(P, pi, symbol_map)`` of the hidden-chain representation."""
        raise ModelError(f"{self.variant} model has no exact representation")

    @property
    def exact(self) -> bool:
        return True

    def check_ergodic(self) -> None:
        pass

    def to_json(self) -> dict:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class IIDModel(ProcessModel):
    probabilities: np.ndarray = field(default=None)

    variant = "iid"

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=np.float64).ravel()
        if p.shape[0] != self.alphabet.size:
            raise ValidationError("need one probability per symbol")
        _check_stochastic(p[None, :], "symbol law", square=False)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def hmm(self):
        k = self.alphabet.size
        P = np.tile(self.probabilities, (k, 1))
        return P, self.probabilities.copy(), np.arange(k)

    def to_json(self):
        return {"variant": self.variant, "alphabet_size": self.alphabet.size, "probabilities": self.probabilities.tolist()}


@dataclass(frozen=True, eq=False)
class MarkovModel(ProcessModel):
    transition: np.ndarray = field(default=None)

    variant = "markov"

    def __post_init__(self):
        P = _check_stochastic(self.transition)
        if P.shape[0] != self.alphabet.size:
            raise ValidationError("transition matrix size differs from the alphabet")
        P.setflags(write=False)
        object.__setattr__(self, "transition", P)

    @cached_property
    def stationary(self) -> np.ndarray:
        return markov_stationary(self.transition)

    def check_ergodic(self):
        self.stationary

    def hmm(self):
        return self.transition, self.stationary, np.arange(self.alphabet.size)

    def to_json(self):
        return {"variant": self.variant, "alphabet_size": self.alphabet.size, "transition": self.transition.tolist()}


@dataclass(frozen=True, eq=False)
class FunctionOfMarkovModel(ProcessModel):
    transition: np.ndarray = field(default=None)
    symbol_map: np.ndarray = field(default=None)

    variant = "function_of_markov"

    def __post_init__(self):
        P = _check_stochastic(self.transition, "hidden transition matrix")
        g = np.array(self.symbol_map, dtype=np.int64).ravel()
        if g.shape[0] != P.shape[0]:
            raise ValidationError("symbol map must be total on hidden states")
        if g.min() < 0 or g.max() >= self.alphabet.size:
            raise ValidationError("symbol map leaves the alphabet")
        P.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "symbol_map", g)

    @cached_property
    def stationary(self) -> np.ndarray:
        return markov_stationary(self.transition)

    def check_ergodic(self):
        self.stationary

    def hmm(self):
        return self.transition, self.stationary, self.symbol_map

    def to_json(self):
        return {
            "variant": self.variant,
            "alphabet_size": self.alphabet.size,
            "transition": self.transition.tolist(),
            "symbol_map": self.symbol_map.tolist(),
        }


@dataclass(frozen=True, eq=False)
class EmpiricalModel(ProcessModel):
    """Shift-invariant law of a reference path, read circularly."""

    reference: np.ndarray = field(default=None)

    variant = "empirical"

    def __post_init__(self):
        ref = np.array(self.reference, dtype=np.int64).ravel()
        if ref.size == 0:
            raise ValidationError("empirical model needs a non-empty reference path")
        if ref.min() < 0 or ref.max() >= self.alphabet.size:
            raise ValidationError("reference path leaves the alphabet")
        ref.setflags(write=False)
        object.__setattr__(self, "reference", ref)

    @property
    def exact(self) -> bool:
        return False

    def windows(self, length: int) -> np.ndarray:
        """All circular windows of the reference path, one per start offset."""
        n = self.reference.shape[0]
        idx = (np.arange(n)[:, None] + np.arange(length)[None, :]) % n
        return self.reference[idx]

    def to_json(self):
        return {
            "variant": self.variant,
            "alphabet_size": self.alphabet.size,
            "path": format_word(self.reference.tolist(), self.alphabet.size),
        }


def iid(probabilities) -> IIDModel:
    p = np.asarray(probabilities, dtype=np.float64)
    return IIDModel(Alphabet(p.shape[0]), p)


def markov(transition) -> MarkovModel:
    P = np.asarray(transition, dtype=np.float64)
    return MarkovModel(Alphabet(P.shape[0]), P)


def function_of_markov(transition, symbol_map, alphabet_size=None) -> FunctionOfMarkovModel:
    g = np.asarray(symbol_map, dtype=np.int64)
    a = int(alphabet_size) if alphabet_size is not None else int(g.max()) + 1
    return FunctionOfMarkovModel(Alphabet(a), np.asarray(transition, dtype=np.float64), g)


def empirical(reference, alphabet_size=None) -> EmpiricalModel:
    ref = np.asarray(reference, dtype=np.int64)
    a = int(alphabet_size) if alphabet_size is not None else max(2, int(ref.max()) + 1)
    return EmpiricalModel(Alphabet(a), ref)


def constant_model(alphabet_size: int = 2, symbol: int = 0) -> IIDModel:
    p = np.zeros(alphabet_size)
    p[symbol] = 1.0
    return IIDModel(Alphabet(alphabet_size), p)


def cyclic_model(period: int = 2) -> MarkovModel:
    """Deterministic rotation through ``period`` symbols (periodic, entropy 0)."""
    return markov(np.roll(np.eye(period), 1, axis=1))


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Symbols on the integer interval ``[lo, hi]``."""

    lo: int
    symbols: np.ndarray
    seed: int
    alphabet_size: int

    def __post_init__(self):
        s = np.ascontiguousarray(self.symbols, dtype=symbol_dtype(self.alphabet_size))
        if s.ndim != 1 or s.size == 0:
            raise ValidationError("a sample path needs a non-empty interval")
        if s.max() >= self.alphabet_size:
            raise ValidationError("path symbols leave the alphabet")
        s.setflags(write=False)
        object.__setattr__(self, "symbols", s)

    @property
    def hi(self) -> int:
        return self.lo + len(self.symbols) - 1

    def __len__(self):
        return len(self.symbols)

    def covers(self, a: int, b: int) -> bool:
        """True when the half-open window ``[a, b)`` lies inside the path."""
        return self.lo <= a and b - 1 <= self.hi

    def at(self, index: int) -> int:
        if not self.lo <= index <= self.hi:
            raise ParameterError(f"index {index} outside [{self.lo}, {self.hi}]")
        return int(self.symbols[index - self.lo])

    def window(self, a: int, b: int) -> np.ndarray:
        """Symbols on the half-open window ``[a, b)``."""
        if not self.covers(a, b):
            raise ParameterError(f"window [{a}, {b}) outside [{self.lo}, {self.hi}]")
        return self.symbols[a - self.lo : b - self.lo]

    def replaced(self, a: int, values) -> "SamplePath":
        s = self.symbols.copy()
        values = np.asarray(values)
        s[a - self.lo : a - self.lo + len(values)] = values
        return SamplePath(self.lo, s, self.seed, self.alphabet_size)

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "seed": self.seed,
            "alphabet_size": self.alphabet_size,
            "symbols": format_word(self.symbols.tolist(), self.alphabet_size),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SamplePath":
        a = int(data["alphabet_size"])
        return cls(int(data["lo"]), np.array(parse_word(data["symbols"], a)), int(data["seed"]), a)


@dataclass(frozen=True, eq=False)
class BlockDistribution:
    """Law of a block of ``block_length`` symbols; ``words`` sorted lexicographically."""

    block_length: int
    alphabet_size: int
    words: np.ndarray
    probs: np.ndarray
    method: str = "exact"
    sample_size: int | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(self.words, dtype=symbol_dtype(self.alphabet_size)).reshape(-1, self.block_length)
        p = np.ascontiguousarray(self.probs, dtype=np.float64).ravel()
        if w.shape[0] != p.shape[0]:
            raise ValidationError("one probability per word required")
        if np.any(p < 0):
            raise ValidationError("negative probabilities")
        if p.sum() > 1 + 1e-12 * max(1, p.shape[0]) ** 0.5 + 1e-12:
            raise ValidationError(f"total mass {p.sum()} exceeds 1")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "words", w)
        object.__setattr__(self, "probs", p)

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self.probs))

    @cached_property
    def support(self) -> dict:
        return {tuple(w): float(p) for w, p in zip(self.words.tolist(), self.probs)}

    def __len__(self):
        return self.words.shape[0]

    def prob(self, word) -> float:
        return self.support.get(tuple(int(s) for s in word), 0.0)

    def to_json(self) -> dict:
        a = self.alphabet_size
        return {
            "block_length": self.block_length,
            "alphabet_size": a,
            "method": self.method,
            "sample_size": self.sample_size,
            "support": {format_word(w, a) or "-": float(p) for w, p in zip(self.words.tolist(), self.probs)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "BlockDistribution":
        try:
            a, ell, support = int(data["alphabet_size"]), int(data["block_length"]), dict(data["support"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"block law JSON needs alphabet_size, block_length and support ({exc})") from None
        items = sorted((parse_word("" if k == "-" else k, a), float(v)) for k, v in support.items())
        words = np.array([w for w, _ in items], dtype=np.int64).reshape(len(items), ell)
        probs = np.array([p for _, p in items])
        return cls(ell, a, words, probs, data.get("method", "exact"), data.get("sample_size"))

    @classmethod
    def from_mapping(cls, table: Mapping, alphabet_size: int) -> "BlockDistribution":
        items = sorted((tuple(int(s) for s in k), float(v)) for k, v in table.items())
        ell = len(items[0][0]) if items else 0
        words = np.array([w for w, _ in items], dtype=np.int64).reshape(len(items), ell)
        return cls(ell, alphabet_size, words, np.array([p for _, p in items]))


# ---------------------------------------------------------------------------
# sampling


def _as_interval(interval) -> tuple[int, int]:
    lo, hi = (int(v) for v in interval)
    if hi < lo:
        raise ParameterError(f"empty interval [{lo}, {hi}]")
    return lo, hi


def _inverse_cdf(cum, u):
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.shape[0] - 1)


def sample_path(model: ProcessModel, interval, seed: int) -> SamplePath:
    """Stationary sample on ``[lo, hi]``, deterministic in ``(model, interval, seed)``.

    The leftmost symbol is drawn from the stationary law and the chain is
    evolved forward.
    """
    lo, hi = _as_interval(interval)
    length = hi - lo + 1
    rng = _rng.generator(seed, _rng.SAMPLE_PATH, length)
    model.check_ergodic()
    if isinstance(model, EmpiricalModel):
        start = int(rng.integers(0, model.reference.shape[0]))
        idx = (start + np.arange(length)) % model.reference.shape[0]
        symbols = model.reference[idx]
    elif isinstance(model, IIDModel):
        u = rng.random(length)
        symbols = _inverse_cdf(_cumulative(model.probabilities)[0], u)
    else:
        P, pi, g = model.hmm()
        u = rng.random(length)
        hidden = kernels.markov_sample(_cumulative(pi)[0], _cumulative(P), u)
        symbols = g[hidden]
    return SamplePath(lo, symbols, int(seed), model.alphabet.size)


def _evidence(g, k_symbols):
    """``E[s, h] = 1`` when hidden state ``h`` emits symbol ``s``."""
    E = np.zeros((k_symbols, g.shape[0]))
    E[g, np.arange(g.shape[0])] = 1.0
    return E


def _boundary_messages(model, lo, hi, conditioning):
    """Left message at ``lo`` and right message at ``hi`` given the conditioning.

    Both are normalised; the conditioning must avoid ``[lo, hi]``.
    """
    P, pi, g = model.hmm()
    E = _evidence(g, model.alphabet.size)
    cond = {int(k): int(v) for k, v in conditioning.items()}
    for t, s in cond.items():
        if lo <= t <= hi:
            raise ParameterError(f"conditioning index {t} overlaps the target [{lo}, {hi}]")
        if not 0 <= s < model.alphabet.size:
            raise ValidationError(f"conditioning symbol {s} outside the alphabet")
    left = sorted(t for t in cond if t < lo)
    right = sorted(t for t in cond if t > hi)
    if left:
        alpha = pi * E[cond[left[0]]]
        for t in range(left[0] + 1, lo):
            alpha = alpha @ P
            if t in cond:
                alpha = alpha * E[cond[t]]
            total = alpha.sum()
            if total <= 0:
                raise ConditioningError("conditioning event has probability zero")
            alpha = alpha / total
        if alpha.sum() <= 0:
            raise ConditioningError("conditioning event has probability zero")
        lam = alpha @ P
    else:
        lam = pi.astype(np.float64)
    lam = lam / lam.sum()
    if right:
        beta = E[cond[right[-1]]].copy()
        for t in range(right[-1] - 1, hi, -1):
            beta = P @ beta
            if t in cond:
                beta = beta * E[cond[t]]
            total = beta.sum()
            if total <= 0:
                raise ConditioningError("conditioning event has probability zero")
            beta = beta / total
        rho = P @ beta
    else:
        rho = np.ones(P.shape[0])
    if rho.sum() <= 0:
        raise ConditioningError("conditioning event has probability zero")
    rho = rho / rho.sum()
    return P, g, E, lam, rho


def _log_normaliser(P, lam, rho, length):
    z = lam.copy()
    logz = 0.0
    for _ in range(length - 1):
        z = z @ P
        s = z.sum()
        logz += math.log(s)
        z = z / s
    total = float(z @ rho)
    if total <= 0:
        raise ConditioningError("conditioning event has probability zero")
    return logz + math.log(total)


def conditional_weights(model: ProcessModel, target_interval, conditioning: Mapping[int, int], rows) -> np.ndarray:
    """Exact conditional probabilities of the given target words.

    ``rows`` is an ``(N, hi - lo + 1)`` array of candidate words for the
    target interval ``[lo, hi]``.
    """
    lo, hi = _as_interval(target_interval)
    length = hi - lo + 1
    rows = np.asarray(rows)
    if rows.ndim != 2 or rows.shape[1] != length:
        raise ParameterError("candidate words must match the target length")
    P, g, E, lam, rho = _boundary_messages(model, lo, hi, conditioning)
    logz = _log_normaliser(P, lam, rho, length)
    n = rows.shape[0]
    v = lam[None, :] * E[rows[:, 0]]
    logw = np.zeros(n)
    with np.errstate(divide="ignore"):
        for t in range(1, length):
            s = v.sum(axis=1)
            alive = s > 0
            logw[alive] += np.log(s[alive])
            v[alive] /= s[alive, None]
            v = (v @ P) * E[rows[:, t]]
        last = v @ rho
        out = np.zeros(n)
        ok = last > 0
        out[ok] = np.exp(logw[ok] + np.log(last[ok]) - logz)
    return out


def support_mask(model: ProcessModel, target_interval, conditioning: Mapping[int, int], rows) -> np.ndarray:
    """Boolean version of :func:`conditional_weights`: which rows have positive probability."""
    lo, hi = _as_interval(target_interval)
    rows = np.asarray(rows)
    if rows.ndim != 2 or rows.shape[1] != hi - lo + 1:
        raise ParameterError("candidate words must match the target length")
    P, g, E, lam, rho = _boundary_messages(model, lo, hi, conditioning)
    step = P > 0
    k = P.shape[0]
    preds = [np.flatnonzero(step[:, j]) for j in range(k)]
    # state-major layout: v[h] is a contiguous mask over rows
    cols = np.ascontiguousarray(rows.T)
    Eb = np.ascontiguousarray((E > 0).T)
    v = Eb[:, cols[0]] & (lam > 0)[:, None]
    for t in range(1, cols.shape[0]):
        ev = Eb[:, cols[t]]
        nxt = np.zeros_like(v)
        for j in range(k):
            for i in preds[j]:
                nxt[j] |= v[i]
        v = nxt & ev
    return (v & (rho > 0)[:, None]).any(axis=0)


def _sample_hidden(model, lo, hi, conditioning, size, rng):
    """Forward-filtering backward-sampling of the hidden chain on ``[lo, hi]``."""
    length = hi - lo + 1
    P, g, E, lam, rho = _boundary_messages(model, lo, hi, conditioning)
    back = np.empty((length, P.shape[0]))
    back[-1] = rho
    for t in range(length - 2, -1, -1):
        b = P @ back[t + 1]
        back[t] = b / b.sum()
    u = rng.random((size, length))
    out = np.empty((size, length), dtype=np.int64)
    w = lam * back[0]
    cum = _cumulative(w / w.sum())[0]
    out[:, 0] = _inverse_cdf(cum, u[:, 0])
    for t in range(1, length):
        w = P[out[:, t - 1]] * back[t][None, :]
        w /= w.sum(axis=1, keepdims=True)
        cum = np.cumsum(w, axis=1)
        cum[:, -1] = 1.0
        out[:, t] = np.minimum((u[:, t, None] >= cum).sum(axis=1), P.shape[0] - 1)
    return g[out]


def sample_conditional(model: ProcessModel, target_interval, conditioning: Mapping[int, int], size: int, rng) -> np.ndarray:
    """``size`` exact conditional draws of the target block (rows)."""
    lo, hi = _as_interval(target_interval)
    if isinstance(model, EmpiricalModel):
        raise ModelError("exact conditional sampling needs an IID, Markov or function-of-Markov model")
    return _sample_hidden(model, lo, hi, conditioning, size, rng)


def sample_paths(model: ProcessModel, length: int, count: int, rng) -> np.ndarray:
    """``count`` independent stationary blocks of ``length`` symbols (rows)."""
    if isinstance(model, EmpiricalModel):
        starts = rng.integers(0, model.reference.shape[0], size=count)
        idx = (starts[:, None] + np.arange(length)[None, :]) % model.reference.shape[0]
        return model.reference[idx]
    model.check_ergodic()
    if isinstance(model, IIDModel):
        u = rng.random((count, length))
        return _inverse_cdf(_cumulative(model.probabilities)[0], u)
    return _sample_hidden(model, 0, length - 1, {}, count, rng)


# ---------------------------------------------------------------------------
# block laws


def _frequencies(rows, alphabet_size, length, method):
    rows = np.asarray(rows).reshape(-1, length)
    if length == 0:
        return BlockDistribution(0, alphabet_size, np.zeros((1, 0)), np.ones(1), method, rows.shape[0])
    words, counts = np.unique(rows, axis=0, return_counts=True)
    return BlockDistribution(length, alphabet_size, words, counts / counts.sum(), method, int(rows.shape[0]))


def block_distribution(
    model: ProcessModel,
    block_length: int,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
) -> BlockDistribution:
    """Law of ``X_1 ... X_l``.

    ``mode="exact"`` multiplies along the chain over all ``|A|**l`` words
    (zero-probability words are dropped); ``mode="empirical"`` counts blocks
    in ``samples`` seeded stationary draws.  For an empirical model the
    "empirical" law is the exact circular block frequency of its reference.
    """
    ell = int(block_length)
    if ell < 1:
        raise ParameterError("block length must be >= 1")
    a = model.alphabet.size
    if mode == "exact" and isinstance(model, EmpiricalModel):
        raise ParameterError("empirical models only support empirical block laws")
    if mode == "empirical":
        if isinstance(model, EmpiricalModel):
            return _frequencies(model.windows(ell), a, ell, "empirical")
        rng = _rng.generator(seed, _rng.BLOCK_SAMPLE, ell)
        return _frequencies(sample_paths(model, ell, int(samples), rng), a, ell, "empirical")
    if mode != "exact":
        raise ParameterError(f"unknown mode {mode!r}")
    if a**ell > EXACT_MAX_WORDS:
        raise SizeError(f"exact block law over {a}^{ell} words exceeds {EXACT_MAX_WORDS}")
    words = all_words(a, ell)
    if isinstance(model, IIDModel):
        probs = np.ones(words.shape[0])
        for d in range(ell):
            probs *= model.probabilities[words[:, d]]
    elif isinstance(model, MarkovModel):
        P = model.transition
        probs = model.stationary[words[:, 0]].astype(np.float64)
        for d in range(1, ell):
            probs *= P[words[:, d - 1], words[:, d]]
    else:
        model.check_ergodic()
        probs = conditional_weights(model, (0, ell - 1), {}, words)
    keep = probs > 0
    return BlockDistribution(ell, a, words[keep], probs[keep], "exact")


def conditional_block_distribution(
    model: ProcessModel,
    target_interval,
    conditioning: Mapping[int, int],
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    min_atom_samples: int = MIN_ATOM_SAMPLES,
) -> BlockDistribution:
    """Law of the target block given fixed symbols on a disjoint index set.

    Exact mode runs forward/backward messages through the gaps.  Empirical
    mode accepts draws matching the conditioning (every circular position of
    an empirical model's reference, or ``samples`` seeded stationary draws
    otherwise) and raises :class:`UndersampledError` below
    ``min_atom_samples`` acceptances.
    """
    lo, hi = _as_interval(target_interval)
    length = hi - lo + 1
    a = model.alphabet.size
    cond = {int(k): int(v) for k, v in conditioning.items()}
    if any(lo <= t <= hi for t in cond):
        raise ParameterError("conditioning indices must be disjoint from the target")
    if mode == "exact":
        if isinstance(model, EmpiricalModel):
            raise ParameterError("empirical models only support empirical conditioning")
        if a**length > EXACT_MAX_WORDS:
            raise SizeError(f"exact conditional law over {a}^{length} words exceeds {EXACT_MAX_WORDS}")
        model.check_ergodic()
        words = all_words(a, length)
        probs = conditional_weights(model, (lo, hi), cond, words)
        keep = probs > 0
        return BlockDistribution(length, a, words[keep], probs[keep], "exact")
    if mode != "empirical":
        raise ParameterError(f"unknown mode {mode!r}")
    start = min([lo] + list(cond))
    stop = max([hi] + list(cond))
    span = stop - start + 1
    if isinstance(model, EmpiricalModel):
        draws = model.windows(span)
    else:
        rng = _rng.generator(seed, _rng.CONDITIONAL, span)
        draws = sample_paths(model, span, int(samples), rng)
    keep = np.ones(draws.shape[0], dtype=bool)
    for t, s in cond.items():
        keep &= draws[:, t - start] == s
    hits = int(keep.sum())
    if hits < min_atom_samples:
        if model.exact:
            _boundary_messages(model, lo, hi, cond)  # raises for impossible events
        raise UndersampledError(f"only {hits} accepted samples (need {min_atom_samples})", hits)
    return _frequencies(draws[keep][:, lo - start : hi - start + 1], a, length, "empirical")


# ---------------------------------------------------------------------------
# file formats

_PATH_MAGIC = b"RLP1"
_PATH_HEADER = struct.Struct("<4sBBxxIqQQ")
_DTYPES = {1: np.uint8, 2: np.uint16, 4: np.uint32, 8: np.int64}


def model_from_json(data: dict, base_dir=None) -> ProcessModel:
    variant = data.get("variant")
    try:
        a = int(data["alphabet_size"])
        if variant == "iid":
            return IIDModel(Alphabet(a), np.asarray(data["probabilities"], dtype=np.float64))
        if variant == "markov":
            return MarkovModel(Alphabet(a), np.asarray(data["transition"], dtype=np.float64))
        if variant == "function_of_markov":
            return FunctionOfMarkovModel(Alphabet(a), np.asarray(data["transition"]), np.asarray(data["symbol_map"]))
        if variant == "empirical":
            if "path_file" in data:
                p = Path(data["path_file"])
                if base_dir is not None and not p.is_absolute():
                    p = Path(base_dir) / p
                ref = read_path(p).symbols
            elif isinstance(data["path"], str):
                ref = np.array(parse_word(data["path"], a))
            else:
                ref = np.asarray(data["path"])
            return EmpiricalModel(Alphabet(a), ref)
    except KeyError as exc:
        raise ValidationError(f"model file is missing field {exc}") from exc
    raise ValidationError(f"unknown model variant {variant!r}")


def read_model(path) -> ProcessModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file {path.name} is not valid JSON") from exc
    return model_from_json(data, base_dir=path.parent)


def write_model(model: ProcessModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=2) + "\n")


def write_path(path_obj: SamplePath, path) -> None:
    """Binary path file: fixed header (alphabet, lo, length, seed) then raw symbols."""
    dtype = np.dtype(path_obj.symbols.dtype)
    header = _PATH_HEADER.pack(
        _PATH_MAGIC, 1, dtype.itemsize, path_obj.alphabet_size, path_obj.lo, len(path_obj), path_obj.seed & ((1 << 64) - 1)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(path_obj.symbols.astype(dtype.newbyteorder("<"), copy=False).tobytes())


def read_path(path) -> SamplePath:
    raw = Path(path).read_bytes()
    if len(raw) < _PATH_HEADER.size:
        raise ValidationError("path file is truncated")
    magic, version, width, a, lo, length, seed = _PATH_HEADER.unpack_from(raw)
    if magic != _PATH_MAGIC or version != 1 or width not in _DTYPES:
        raise ValidationError("not a recurlab path file")
    body = np.frombuffer(raw, dtype=np.dtype(_DTYPES[width]).newbyteorder("<"), offset=_PATH_HEADER.size)
    if body.shape[0] != length:
        raise ValidationError("path file length does not match its header")
    return SamplePath(int(lo), body.astype(_DTYPES[width]), int(seed), int(a))


def path_to_text(path_obj: SamplePath) -> str:
    head = f"# alphabet: {path_obj.alphabet_size}\n# lo: {path_obj.lo}\n# seed: {path_obj.seed}\n"
    return head + format_word(path_obj.symbols.tolist(), path_obj.alphabet_size) + "\n"


def path_from_text(text: str) -> SamplePath:
    meta = {}
    body = []
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            k, _, v = s[1:].partition(":")
            meta[k.strip()] = int(v)
        elif s:
            body.append(s)
    a = meta.get("alphabet")
    symbols = np.array(parse_word("".join(body) if (a or 0) <= 10 else ".".join(body), a))
    if a is None:
        a = max(2, int(symbols.max()) + 1)
    return SamplePath(meta.get("lo", 0), symbols, meta.get("seed", 0), a)


def read_path_any(path) -> SamplePath:
    """Read a binary path file, falling back to the text export."""
    raw = Path(path).read_bytes()
    if raw[:4] == _PATH_MAGIC:
        return read_path(path)
    return path_from_text(raw.decode())
