"""Finite words, fixed-length languages and full-binary-tree certificates.

A language ``L`` of words of length ``m`` admits a full binary tree when the
trie of ``L`` contains a complete binary subtree of depth ``m`` rooted at the
empty word whose ``2**m`` leaves all lie in ``L``.  Admission is decided by a
bottom-up supportability pass over the sorted word array (see
:mod:`recurlab.kernels`) and the tree is then read off top-down.

Words are tuples of ints.  On disk a word is a string of digits when the
alphabet has at most 10 symbols and a ``.``-separated list otherwise.
"""

from __future__ import annotations

import bisect

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from recurlab import kernels
from recurlab.errors import CertificateError, ParameterError, SizeError, ValidationError

Word = tuple[int, ...]

ORACLE_MAX_WORDS = 2**16
ORACLE_MAX_CHAINS = 10**7


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if int(self.size) < 1:
            raise ParameterError(f"alphabet size must be >= 1, got {self.size}")

    @property
    def symbols(self) -> range:
        return range(self.size)


def symbol_dtype(alphabet_size: int) -> np.dtype:
    """Smallest dtype supported by the kernels that holds ``alphabet_size`` symbols."""
    if alphabet_size <= 1 << 8:
        return np.dtype(np.uint8)
    if alphabet_size <= 1 << 16:
        return np.dtype(np.uint16)
    if alphabet_size <= 1 << 32:
        return np.dtype(np.uint32)
    return np.dtype(np.int64)


def format_word(word: Sequence[int], alphabet_size: int) -> str:
    if alphabet_size <= 10:
        return "".join(str(int(s)) for s in word)
    return ".".join(str(int(s)) for s in word)


def parse_word(text: str, alphabet_size: int | None = None) -> Word:
    text = text.strip()
    if not text:
        return ()
    if "." in text or (alphabet_size is not None and alphabet_size > 10):
        parts = text.split(".")
    else:
        parts = list(text)
    try:
        word = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ParameterError(f"malformed word {text!r}") from exc
    if alphabet_size is not None and any(s < 0 or s >= alphabet_size for s in word):
        raise ValidationError(f"word {text!r} has symbols outside alphabet of size {alphabet_size}")
    return word


class Language:
    """An immutable set of words of a common length over ``range(alphabet_size)``.

    The words are kept as a lexicographically sorted, duplicate-free 2-D
    array (``rows``); the longest-common-prefix array of consecutive rows is
    the implicit trie used by admission.
    """

    __slots__ = ("alphabet", "word_length", "rows", "lcp", "__dict__")

    def __init__(self, alphabet_size: int, word_length: int, words: Iterable[Sequence[int]] = ()):
        rows = [tuple(int(s) for s in w) for w in words]
        for w in rows:
            if len(w) != word_length:
                raise ValidationError(f"word {w} does not have length {word_length}")
        arr = np.array(rows, dtype=np.int64).reshape(len(rows), word_length)
        self._init_rows(alphabet_size, word_length, arr, assume_sorted=False)

    @classmethod
    def from_rows(cls, rows: np.ndarray, alphabet_size: int, assume_sorted: bool = False) -> "Language":
        """Build from an ``(N, m)`` integer array; sorts and deduplicates unless told not to."""
        rows = np.asarray(rows)
        if rows.ndim != 2:
            raise ValidationError("rows must be a 2-D array")
        obj = cls.__new__(cls)
        obj._init_rows(alphabet_size, rows.shape[1], rows, assume_sorted)
        return obj

    @classmethod
    def full(cls, alphabet_size: int, word_length: int) -> "Language":
        return cls.from_rows(all_words(alphabet_size, word_length), alphabet_size, assume_sorted=True)

    def _init_rows(self, alphabet_size, word_length, arr, assume_sorted):
        self.alphabet = Alphabet(int(alphabet_size))
        if word_length < 0:
            raise ParameterError("word length must be non-negative")
        self.word_length = int(word_length)
        if arr.size and (arr.min() < 0 or arr.max() >= self.alphabet.size):
            raise ValidationError(f"symbols outside alphabet of size {self.alphabet.size}")
        arr = np.ascontiguousarray(arr, dtype=symbol_dtype(self.alphabet.size))
        if self.word_length == 0:
            arr = arr[: min(len(arr), 1)]
            lcp = np.zeros(len(arr), dtype=np.int64)
        else:
            lcp, ok = kernels.lcp_array(arr)
            if not ok:
                if assume_sorted:
                    raise ValidationError("rows are not strictly increasing")
                order = np.lexsort(arr.T[::-1])
                arr = np.ascontiguousarray(arr[order])
                lcp, _ = kernels.lcp_array(arr)
                keep = lcp < self.word_length
                keep[0] = True
                if not keep.all():
                    arr = np.ascontiguousarray(arr[keep])
                    lcp, _ = kernels.lcp_array(arr)
        arr.setflags(write=False)
        lcp.setflags(write=False)
        self.rows = arr
        self.lcp = lcp

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def __iter__(self) -> Iterator[Word]:
        for row in self.rows.tolist():
            yield tuple(row)

    def __contains__(self, word) -> bool:
        return self.index(word) is not None

    def __eq__(self, other):
        if not isinstance(other, Language):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.word_length == other.word_length
            and np.array_equal(self.rows, other.rows)
        )

    def __hash__(self):
        return hash((self.alphabet.size, self.word_length, self.rows.tobytes()))

    def __repr__(self):
        return f"Language(alphabet_size={self.alphabet.size}, word_length={self.word_length}, size={len(self)})"

    def index(self, word) -> int | None:
        """Row index of ``word`` by column-wise binary search, or None."""
        word = tuple(int(s) for s in word)
        if len(word) != self.word_length:
            return None
        lo, hi = 0, len(self)
        for d, s in enumerate(word):
            # bisect works on the strided column view without copying it
            col = self.rows[:, d]
            lo, hi = bisect.bisect_left(col, s, lo, hi), bisect.bisect_right(col, s, lo, hi)
            if lo >= hi:
                return None
        return lo if lo < hi else None

    @cached_property
    def words(self) -> frozenset:
        return frozenset(self)

    def restrict(self, block_sets: Sequence[Iterable[int]]) -> "Language":
        """Keep only words whose ``i``-th symbol lies in ``block_sets[i]``."""
        if len(block_sets) != self.word_length:
            raise ParameterError("need one symbol set per position")
        keep = np.ones(len(self), dtype=bool)
        for d, allowed in enumerate(block_sets):
            keep &= np.isin(self.rows[:, d], np.fromiter(allowed, dtype=np.int64))
        return Language.from_rows(self.rows[keep], self.alphabet.size, assume_sorted=True)

    def to_lines(self) -> list[str]:
        return [format_word(w, self.alphabet.size) for w in self.rows.tolist()]


def all_words(alphabet_size: int, word_length: int) -> np.ndarray:
    """All words of the given length, in lexicographic order, as an ``(a**m, m)`` array."""
    total = alphabet_size**word_length
    if total > 2**26:
        raise SizeError(f"refusing to enumerate {alphabet_size}^{word_length} words")
    dtype = symbol_dtype(alphabet_size)
    codes = np.arange(total, dtype=np.int64)
    out = np.empty((total, word_length), dtype=dtype)
    for d in range(word_length - 1, -1, -1):
        out[:, d] = codes % alphabet_size
        codes //= alphabet_size
    return out


def product_rows(symbol_sets: Sequence[Sequence[int]], alphabet_size: int) -> np.ndarray:
    """Cartesian product of per-position symbol sets, lexicographically sorted."""
    sets = [np.array(sorted(set(int(s) for s in ss)), dtype=np.int64) for ss in symbol_sets]
    total = 1
    for s in sets:
        total *= len(s)
    if total > 2**26:
        raise SizeError(f"product language of size {total} is too large")
    dtype = symbol_dtype(alphabet_size)
    out = np.empty((total, len(sets)), dtype=dtype)
    idx = np.arange(total, dtype=np.int64)
    for d in range(len(sets) - 1, -1, -1):
        k = len(sets[d])
        out[:, d] = sets[d][idx % k]
        idx //= k
    return out


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class TreeCertificate:
    """Level sets ``L_0, ..., L_m`` of a full binary tree; ``L_0`` holds the empty word."""

    alphabet_size: int
    levels: tuple[tuple[Word, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def leaves(self) -> tuple[Word, ...]:
        return self.levels[-1]

    @staticmethod
    def parent(word: Word) -> Word:
        return word[:-1]

    @cached_property
    def _children(self) -> dict:
        out: dict = {}
        for level in self.levels[1:]:
            for w in level:
                out.setdefault(w[:-1], []).append(w)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    def children(self, word: Word) -> tuple[Word, ...]:
        return self._children.get(tuple(word), ())

    def to_json(self) -> dict:
        a = self.alphabet_size
        return {
            "alphabet_size": a,
            "word_length": self.depth,
            "levels": [[format_word(w, a) for w in level] for level in self.levels],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TreeCertificate":
        a = int(data["alphabet_size"])
        levels = tuple(tuple(parse_word(s, a) for s in level) for level in data["levels"])
        return cls(a, levels)


def validate_certificate(cert: TreeCertificate, language: Language | None = None) -> None:
    """Raise :class:`CertificateError` unless ``cert`` is a full binary tree (with leaves in ``language``)."""
    levels = cert.levels
    if not levels or levels[0] != ((),):
        raise CertificateError("level 0 must consist of the empty word")
    for i, level in enumerate(levels):
        if len(set(level)) != len(level):
            raise CertificateError(f"level {i} contains duplicates")
        if len(level) != 2**i:
            raise CertificateError(f"level {i} has {len(level)} words, expected {2**i}")
        for w in level:
            if len(w) != i:
                raise CertificateError(f"word {w} on level {i} has wrong length")
            if any(s < 0 or s >= cert.alphabet_size for s in w):
                raise CertificateError(f"word {w} has symbols outside the alphabet")
    for i in range(len(levels) - 1):
        current = set(levels[i])
        ext: dict = {}
        for w in levels[i + 1]:
            if w[:-1] not in current:
                raise CertificateError(f"word {w} on level {i + 1} has no parent on level {i}")
            ext.setdefault(w[:-1], []).append(w)
        for w in levels[i]:
            kids = ext.get(w, [])
            if len(kids) != 2:
                raise CertificateError(f"node {w} on level {i} has {len(kids)} extensions, expected 2")
            if kids[0][-1] == kids[1][-1]:
                raise CertificateError(f"extensions of {w} share their last symbol")
    if language is not None:
        if language.word_length != cert.depth:
            raise CertificateError("certificate depth differs from the language word length")
        if language.alphabet.size != cert.alphabet_size:
            raise CertificateError("certificate alphabet differs from the language alphabet")
        for w in levels[-1]:
            if w not in language:
                raise CertificateError(f"leaf {w} is not in the language")


def is_valid_certificate(cert: TreeCertificate, language: Language | None = None) -> bool:
    try:
        validate_certificate(cert, language)
    except CertificateError:
        return False
    return True


def admits_full_binary_tree(language: Language) -> TreeCertificate | None:
    """Return a deterministic tree certificate for ``language``, or None.

    Where a node has more than two supportable children, the two with the
    smallest last symbols are kept.
    """
    m = language.word_length
    a = language.alphabet.size
    if m == 0:
        return TreeCertificate(a, (((),),)) if len(language) else None
    n = len(language)
    if n < 2**m:
        return None
    lcp = language.lcp
    sup, root_ok = kernels.support_dp(lcp, m)
    if not root_ok:
        return None
    rows = language.rows
    levels: list[tuple[Word, ...]] = [((),)]
    nodes = [(0, n)]
    for d in range(m):
        next_nodes = []
        for lo, hi in nodes:
            starts = np.flatnonzero(lcp[lo + 1 : hi] == d) + lo + 1
            picked = []
            if sup[lo, d]:
                picked.append(0)
            k = 0
            while len(picked) < 2:
                if sup[starts[k], d]:
                    picked.append(k + 1)
                k += 1
            bounds = np.concatenate(([lo], starts, [hi]))
            for p in picked:
                next_nodes.append((int(bounds[p]), int(bounds[p + 1])))
        nodes = next_nodes
        levels.append(tuple(tuple(rows[lo, : d + 1].tolist()) for lo, _ in nodes))
    return TreeCertificate(a, tuple(levels))


def extract_separated_pair(language: Language, cert: TreeCertificate, u: Sequence[int]) -> Word:
    """Return ``v`` in ``language`` with ``v[i] != u[i]`` for every ``i``.

    ``v`` is found by descending the certificate, at each level taking the
    child whose last symbol differs from ``u``'s (the smaller one if both do).
    """
    validate_certificate(cert, language)
    u = tuple(int(s) for s in u)
    if u not in language:
        raise ParameterError(f"word {u} is not in the language")
    node: Word = ()
    for i in range(cert.depth):
        node = min(c for c in cert.children(node) if c[-1] != u[i])
    return node


def brute_force_tree_oracle(language: Language) -> bool:
    """Exhaustive search over level-set chains (testing oracle).

    Enumerates every chain ``L_0 = {()}, L_1, ..., L_{m-1}`` in which each
    word has exactly two one-letter extensions on the next level, and accepts
    when every word of some ``L_{m-1}`` has at least two extensions in the
    language (two of which then form ``L_m``).
    """
    a = language.alphabet.size
    m = language.word_length
    if a**m > ORACLE_MAX_WORDS:
        raise SizeError(f"|A|^m = {a**m} exceeds the oracle guard {ORACLE_MAX_WORDS}")
    members = language.words
    if m == 0:
        return () in members
    if a < 2:
        return False
    pairs = list(itertools.combinations(range(a), 2))
    if m >= 2 and len(pairs) ** (2 ** (m - 1) - 1) > ORACLE_MAX_CHAINS:
        raise SizeError("too many level-set chains to enumerate")
    extensions: dict = {}
    for w in members:
        extensions[w[:-1]] = extensions.get(w[:-1], 0) + 1

    def chains(level: tuple, depth: int):
        if depth == m - 1:
            yield level
            return
        for choice in itertools.product(pairs, repeat=len(level)):
            nxt = tuple(sorted(w + (s,) for w, pair in zip(level, choice) for s in pair))
            yield from chains(nxt, depth + 1)

    for last in chains(((),), 0):
        if all(extensions.get(w, 0) >= 2 for w in last):
            return True
    return False


# ---------------------------------------------------------------------------
# file formats


def read_language(path, alphabet_size: int | None = None) -> Language:
    """Read a newline-delimited word file.

    Optional header lines ``# alphabet: k`` and ``# length: m`` fix the
    alphabet size and word length; the empty word is written as ``-``.
    """
    words = []
    length = None
    for line in Path(path).read_text().splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, _, value = s[1:].partition(":")
            key = key.strip()
            if key == "alphabet" and alphabet_size is None:
                alphabet_size = int(value)
            elif key == "length":
                length = int(value)
            continue
        words.append(() if s == "-" else s)
    parsed = [w if w == () else parse_word(w, alphabet_size) for w in words]
    if alphabet_size is None:
        alphabet_size = max(2, max((max(w) for w in parsed if w), default=0) + 1)
    lengths = {len(w) for w in parsed}
    if length is not None:
        lengths.add(length)
    if len(lengths) > 1:
        raise ValidationError(f"mixed word lengths {sorted(lengths)} in {Path(path).name}")
    m = lengths.pop() if lengths else 0
    return Language(alphabet_size, m, parsed)


def write_language(language: Language, path) -> None:
    lines = [f"# alphabet: {language.alphabet.size}", f"# length: {language.word_length}"]
    lines += [s or "-" for s in language.to_lines()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_certificate(cert: TreeCertificate, path) -> None:
    Path(path).write_text(json.dumps(cert.to_json(), indent=2) + "\n")


def read_certificate(path) -> TreeCertificate:
    return TreeCertificate.from_json(json.loads(Path(path).read_text()))
