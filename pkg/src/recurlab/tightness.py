"""Mean Hamming distance on finite windows and greedy Hamming-ball covers.

``d̄(x, y)`` is a limsup of window averages and cannot be computed from
finite data.  :func:`dbar_estimate` reports the full table of averages and
its *limsup proxy*, the maximum over radii ``>= n0``.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from recurlab import kernels
from recurlab.entropy import TypicalSet
from recurlab.errors import ParameterError, ValidationError
from recurlab.process import BlockDistribution, SamplePath
from recurlab.words import Language, format_word

WINDOWS = ("closed", "half_open")


@dataclass(frozen=True)
class DbarEstimate:
    radii: tuple[int, ...]
    averages: tuple[float, ...]
    n0: int
    window: str = "closed"

    @property
    def limsup_proxy(self) -> float:
        tail = [a for r, a in zip(self.radii, self.averages) if r >= self.n0]
        return max(tail) if tail else float("nan")

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "n0": self.n0,
            "limsup_proxy": self.limsup_proxy,
            "note": "max of window averages over radii >= n0; a finite-window stand-in for the limsup",
            "table": [{"radius": r, "average": a} for r, a in zip(self.radii, self.averages)],
        }

    def to_csv(self) -> str:
        return "radius,average\n" + "".join(f"{r},{a:.12g}\n" for r, a in zip(self.radii, self.averages))


def _disagreement(x, y, metric):
    if metric is None:
        return (x != y).astype(np.float64)
    d = np.asarray(metric(x, y), dtype=np.float64)
    if d.shape != x.shape or np.any(d < 0):
        raise ValidationError("metric must return one non-negative value per index")
    return d


def dbar_estimate(
    x: SamplePath,
    y: SamplePath,
    radii: Sequence[int],
    n0: int = 0,
    window: str = "closed",
    metric: Callable | None = None,
) -> DbarEstimate:
    """Window averages of ``d(x_i, y_i)`` for each radius ``r``.

    ``window="closed"`` averages over ``[-r, r]`` with weight ``1/(2r+1)``;
    ``window="half_open"`` averages over ``[-r, r)`` with weight ``1/(2r)``,
    which is the aligned choice for periodic patterns.  ``metric`` defaults
    to the 0/1 symbol metric.
    """
    if window not in WINDOWS:
        raise ParameterError(f"window must be one of {WINDOWS}")
    radii = [int(r) for r in radii]
    if not radii:
        raise ParameterError("need at least one radius")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ParameterError("radii must be strictly increasing")
    if radii[0] < (1 if window == "half_open" else 0):
        raise ParameterError("radii must be positive")
    if metric is None and x.alphabet_size != y.alphabet_size:
        raise ValidationError("paths use different alphabets")
    R = radii[-1]
    stop = R + 1 if window == "closed" else R
    for p in (x, y):
        if not p.covers(-R, stop):
            raise ParameterError(f"path on [{p.lo}, {p.hi}] does not cover the radius-{R} window")
    d = _disagreement(x.window(-R, stop), y.window(-R, stop), metric)
    csum = np.concatenate(([0.0], np.cumsum(d)))
    averages = []
    for r in radii:
        a, b = R - r, (R + r + 1 if window == "closed" else R + r)
        # sums of 0/1 values are exact in floating point
        averages.append(float((csum[b] - csum[a]) / (b - a)))
    return DbarEstimate(tuple(radii), tuple(averages), int(n0), window)


@dataclass(frozen=True)
class AsymptoticPair:
    i: int
    j: int
    estimate: DbarEstimate


def find_mean_asymptotic_pairs(
    paths: Sequence[SamplePath],
    threshold: float,
    radii: Sequence[int],
    n0: int = 0,
    window: str = "closed",
) -> list[AsymptoticPair]:
    """Distinct pairs whose limsup proxy is below ``threshold``, ascending by proxy."""
    if len(paths) < 2:
        raise ParameterError("need at least two paths")
    R = max(radii)
    stop = R + 1 if window == "closed" else R
    out = []
    for i, j in itertools.combinations(range(len(paths)), 2):
        x, y = paths[i], paths[j]
        if np.array_equal(x.window(-R, stop), y.window(-R, stop)):
            continue
        est = dbar_estimate(x, y, radii, n0, window)
        if est.limsup_proxy < threshold:
            out.append(AsymptoticPair(i, j, est))
    out.sort(key=lambda p: (p.estimate.limsup_proxy, p.i, p.j))
    return out


# ---------------------------------------------------------------------------
# Hamming-ball covers


@dataclass(frozen=True, eq=False)
class HammingCover:
    block_length: int
    alphabet_size: int
    radius: int
    centers: np.ndarray
    families: tuple[np.ndarray, ...]
    masses: tuple[float, ...]

    @property
    def family_count(self) -> int:
        return len(self.families)

    @property
    def log2_family_count(self) -> float:
        return math.log2(self.family_count) if self.family_count else float("-inf")

    @property
    def coverage(self) -> float:
        return math.fsum(self.masses)

    def to_json(self) -> dict:
        a = self.alphabet_size
        return {
            "block_length": self.block_length,
            "radius": self.radius,
            "family_count": self.family_count,
            "log2_family_count": self.log2_family_count,
            "coverage": self.coverage,
            "note": "greedy cover, illustrative rather than optimal",
            "families": [
                {"center": format_word(c.tolist(), a), "mass": m, "members": [format_word(w.tolist(), a) for w in fam]}
                for c, fam, m in zip(self.centers, self.families, self.masses)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("family,center,member,mass\n")
        a = self.alphabet_size
        for f, (c, fam) in enumerate(zip(self.centers, self.families)):
            cw = format_word(c.tolist(), a)
            for w in fam:
                buf.write(f"{f},{cw},{format_word(w.tolist(), a)},\n")
        return buf.getvalue()


def _weighted_words(words):
    if isinstance(words, (TypicalSet, BlockDistribution)):
        rows, probs, a = np.asarray(words.words), np.asarray(words.probs, dtype=np.float64), words.alphabet_size
    elif isinstance(words, Language):
        rows, a = words.rows, words.alphabet.size
        probs = np.full(len(words), 1.0 / max(len(words), 1))
    else:
        seqs = [tuple(int(s) for s in w) for w in words]
        if len({len(w) for w in seqs}) > 1:
            raise ValidationError("all words must have the same length")
        lang = Language(max((max(w) for w in seqs if w), default=0) + 1, len(seqs[0]) if seqs else 0, seqs)
        rows, a = lang.rows, lang.alphabet.size
        probs = np.full(len(lang), 1.0 / max(len(lang), 1))
    if rows.ndim != 2:
        raise ValidationError("all words must have the same length")
    return rows, probs, a


def hamming_ball_cover(words, radius: int) -> HammingCover:
    """Greedy partition into families of words within ``radius`` of a centre.

    The uncovered word of highest probability (lexicographically smallest
    among ties) becomes the next centre; its family is every still-uncovered
    word within ``radius`` disagreements.  Uniform weights are used for a
    plain language or word list.
    """
    rows, probs, a = _weighted_words(words)
    ell = rows.shape[1]
    if not 0 <= radius <= ell:
        raise ParameterError(f"radius must lie in [0, {ell}]")
    lex = np.lexsort(rows.T[::-1]) if ell else np.arange(rows.shape[0])
    order = lex[np.argsort(-probs[lex], kind="stable")]
    ranked = np.ascontiguousarray(rows[order])
    labels = kernels.greedy_cover(ranked, int(radius))
    centers = np.unique(labels)
    families, masses = [], []
    p_ranked = probs[order]
    for c in centers:
        members = np.flatnonzero(labels == c)
        families.append(ranked[members])
        masses.append(math.fsum(p_ranked[members].tolist()))
    return HammingCover(ell, a, int(radius), ranked[centers], tuple(families), tuple(masses))


def validate_cover(cover: HammingCover, words) -> bool:
    """Independent re-scan: members within radius of their centre and families partition the input."""
    rows, _, _ = _weighted_words(words)
    seen = []
    for c, fam in zip(cover.centers, cover.families):
        if fam.shape[0] and np.count_nonzero(fam != c, axis=1).max() > cover.radius:
            return False
        seen.extend(tuple(w) for w in fam.tolist())
    return len(seen) == len(set(seen)) and set(seen) == {tuple(w) for w in rows.tolist()}
