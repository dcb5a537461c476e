"""Construction of a pair that is not doubly recurrent, and its verifier.

Geometry.  An *n-interval* is ``[kn, (k+1)n)``, even or odd with ``k``.
Inside the window ``[-2Kn, 2Kn)``:

* ``E_minus`` is the union of even n-intervals with ``k <= -2``;
* ``E_plus``  is the union of odd n-intervals with ``k >= 1``;
* the centre ``[-n, n)`` is cut into ``intervals`` (default 8) aligned
  pieces ``I_1 .. I_8``.

A conditioning atom fixes the symbols on ``E_minus`` and ``E_plus``.  Given
the atom, the central blocks ``W_i = X|I_i`` are restricted to typical sets,
and a full binary tree in their joint support yields ``u, v`` that agree on
the atom and differ on every ``I_i``.  Any shift ``|k| > 2n`` moves some
``E``-interval over at least ``n/2`` central indices, hence over a whole
``I_i``, which rules out ``(T^k u, T^k v)`` being close to ``(u, v)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from recurlab import _rng
from recurlab.entropy import _h, block_codes, entropy_rate, pattern_constant, typical_set
from recurlab.errors import (
    EntropyError,
    ModelError,
    NoCertificateError,
    ParameterError,
    VerificationError,
)
from recurlab.process import (
    EmpiricalModel,
    ProcessModel,
    SamplePath,
    _boundary_messages,
    block_distribution,
    conditional_block_distribution,
    conditional_weights,
    sample_conditional,
    sample_path,
    support_mask,
)
from recurlab.words import Language, admits_full_binary_tree, extract_separated_pair, product_rows

MIN_RATE = 0.05
ENUMERATE_MAX = 2**23
CHUNK = 2**18
EXACT_CENTRE_MAX = 2**20


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class BlockScheme:
    n: int
    K: int
    intervals: int = 8

    def __post_init__(self):
        n, K, q = self.n, self.K, self.intervals
        if n < 4 or n % 4:
            raise ParameterError(f"n must be >= 4 and divisible by 4, got {n}")
        if K < 2:
            raise ParameterError(f"K must be >= 2, got {K}")
        if q < 8 or (2 * n) % q:
            raise ParameterError(f"interval count must be >= 8 and divide 2n = {2 * n}, got {q}")

    @property
    def window(self) -> tuple[int, int]:
        """Half-open window ``[-2Kn, 2Kn)``."""
        return -2 * self.K * self.n, 2 * self.K * self.n

    @property
    def piece_length(self) -> int:
        return 2 * self.n // self.intervals

    def interval(self, k: int) -> tuple[int, int]:
        return k * self.n, (k + 1) * self.n

    @property
    def interval_indices(self) -> range:
        return range(-2 * self.K, 2 * self.K)

    @property
    def minus_indices(self) -> list[int]:
        return [k for k in self.interval_indices if k <= -2 and k % 2 == 0]

    @property
    def plus_indices(self) -> list[int]:
        return [k for k in self.interval_indices if k >= 1 and k % 2 == 1]

    @property
    def e_minus(self) -> list[tuple[int, int]]:
        return [self.interval(k) for k in self.minus_indices]

    @property
    def e_plus(self) -> list[tuple[int, int]]:
        return [self.interval(k) for k in self.plus_indices]

    @property
    def pieces(self) -> list[tuple[int, int]]:
        """``I_1 .. I_q`` as half-open intervals."""
        ell = self.piece_length
        return [(-self.n + i * ell, -self.n + (i + 1) * ell) for i in range(self.intervals)]

    def e_index_array(self) -> np.ndarray:
        return np.concatenate([np.arange(a, b) for a, b in self.e_minus + self.e_plus])

    def in_e(self, j) -> np.ndarray:
        """Boolean mask: does index ``j`` lie in ``E_minus`` or ``E_plus``?"""
        j = np.asarray(j)
        k = np.floor_divide(j, self.n)
        lo, hi = self.window
        inside = (j >= lo) & (j < hi)
        return inside & (((k <= -2) & (k % 2 == 0)) | ((k >= 1) & (k % 2 == 1)))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "intervals": self.intervals,
            "window": list(self.window),
            "e_minus": [list(x) for x in self.e_minus],
            "e_plus": [list(x) for x in self.e_plus],
            "pieces": [list(x) for x in self.pieces],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BlockScheme":
        return cls(int(data["n"]), int(data["K"]), int(data.get("intervals", 8)))


def build_block_scheme(n: int, K: int, intervals: int = 8) -> BlockScheme:
    return BlockScheme(int(n), int(K), int(intervals))


def interval_cover_check(n: int, pieces: Sequence[tuple[int, int]] | None = None) -> bool:
    """Does every length-``n/2`` sub-interval of ``[-n, n)`` contain a whole piece?

    ``pieces`` defaults to the eight aligned ``n/4`` pieces; passing a
    broken family is how the negative control is run.
    """
    if n % 4:
        raise ParameterError(f"n must be divisible by 4, got {n}")
    if pieces is None:
        pieces = BlockScheme(max(n, 4), 2).pieces
    half = n // 2
    for start in range(-n, n - half + 1):
        stop = start + half
        if not any(start <= a and b <= stop and a < b for a, b in pieces):
            return False
    return True


def _runs(mask: np.ndarray, offset: int) -> list[tuple[int, int]]:
    """Maximal runs of True as half-open ``(start, stop)`` in shifted coordinates."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    d = np.diff(padded)
    starts = np.flatnonzero(d == 1)
    stops = np.flatnonzero(d == -1)
    return [(int(a) + offset, int(b) + offset) for a, b in zip(starts, stops)]


def shift_overlap(scheme: BlockScheme, k: int) -> tuple[tuple[int, int], list[int]]:
    """Longest run of ``j in [-n, n)`` with ``j + k`` in ``E``, and the pieces it contains."""
    n = scheme.n
    j = np.arange(-n, n)
    runs = _runs(scheme.in_e(j + k), -n)
    if not runs:
        return (0, 0), []
    best = max(runs, key=lambda r: (r[1] - r[0], -r[0]))
    inside = [i for i, (a, b) in enumerate(scheme.pieces) if best[0] <= a and b <= best[1]]
    return best, inside


def grid_overlap_scan(n: int) -> dict[int, int]:
    """Minimum aligned overlap per residue of ``k`` mod ``2n``.

    For each residue ``r`` the length-``2n`` window ``[-n, n) + k`` is laid
    over the periodic pattern of odd n-intervals (the shape of ``E_plus``);
    the value is the longest single aligned overlap.  The even pattern
    yields the same values by translation.
    """
    if n % 4:
        raise ParameterError(f"n must be divisible by 4, got {n}")
    out = {}
    for r in range(2 * n):
        j = np.arange(-n, n) + r
        odd = (np.floor_divide(j, n) % 2) == 1
        runs = _runs(odd, 0)
        out[r] = max((b - a for a, b in runs), default=0)
    return out


# ---------------------------------------------------------------------------
# report types


@dataclass(frozen=True)
class ConditioningAtom:
    """Symbols fixed on ``E_minus`` and ``E_plus``, one string per n-interval."""

    n: int
    minus: tuple[tuple[int, str], ...]
    plus: tuple[tuple[int, str], ...]
    alphabet_size: int

    @classmethod
    def from_path(cls, scheme: BlockScheme, path: SamplePath) -> "ConditioningAtom":
        from recurlab.words import format_word

        a = path.alphabet_size

        def blocks(idx):
            return tuple((k, format_word(path.window(*scheme.interval(k)).tolist(), a)) for k in idx)

        return cls(scheme.n, blocks(scheme.minus_indices), blocks(scheme.plus_indices), a)

    def conditioning(self) -> dict[int, int]:
        from recurlab.words import parse_word

        out = {}
        for k, text in self.minus + self.plus:
            for i, s in enumerate(parse_word(text, self.alphabet_size)):
                out[k * self.n + i] = s
        return out

    def to_json(self) -> dict:
        return {
            "minus": {str(k): w for k, w in self.minus},
            "plus": {str(k): w for k, w in self.plus},
        }


@dataclass
class ShiftCheck:
    k: int
    passed: bool
    witness: int | None
    overlap: tuple[int, int]
    overlap_length: int
    piece: int | None
    geometry_ok: bool

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "passed": self.passed,
            "witness": self.witness,
            "overlap": list(self.overlap),
            "overlap_length": self.overlap_length,
            "piece": None if self.piece is None else self.piece + 1,
            "geometry_ok": self.geometry_ok,
        }


@dataclass
class VerificationResult:
    shift_bound: int
    checks: list[ShiftCheck]

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failed_shifts(self) -> list[int]:
        return [c.k for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "shift_bound": self.shift_bound,
            "passed": self.passed,
            "failed_shifts": self.failed_shifts,
            "shifts": [c.to_json() for c in self.checks],
        }


@dataclass
class PairReport:
    u: SamplePath
    v: SamplePath
    scheme: BlockScheme
    atom: ConditioningAtom | None
    certificate_found: bool
    witnesses: list[int]
    parameters: dict
    attempts: list[dict] = field(default_factory=list)
    verification: VerificationResult | None = None

    def to_json(self) -> dict:
        return {
            "certificate_found": self.certificate_found,
            "scheme": self.scheme.to_json(),
            "parameters": self.parameters,
            "atom": None if self.atom is None else self.atom.to_json(),
            "u": self.u.to_json(),
            "v": self.v.to_json(),
            "witnesses": [{"piece": i + 1, "index": j} for i, j in enumerate(self.witnesses)],
            "attempts": self.attempts,
            "verification": None if self.verification is None else self.verification.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "PairReport":
        scheme = BlockScheme.from_json(data["scheme"])
        u = SamplePath.from_json(data["u"])
        v = SamplePath.from_json(data["v"])
        atom = None
        if data.get("atom") is not None:
            atom = ConditioningAtom(
                scheme.n,
                tuple(sorted((int(k), w) for k, w in data["atom"]["minus"].items())),
                tuple(sorted((int(k), w) for k, w in data["atom"]["plus"].items())),
                u.alphabet_size,
            )
        witnesses = [int(w["index"]) for w in sorted(data.get("witnesses", []), key=lambda w: w["piece"])]
        return cls(u, v, scheme, atom, bool(data["certificate_found"]), witnesses, dict(data.get("parameters", {})), list(data.get("attempts", [])))

    def summary(self) -> str:
        n, K = self.scheme.n, self.scheme.K
        lines = [
            f"certificate found: {self.certificate_found}",
            f"n={n} K={K} window=[{self.u.lo}, {self.u.hi + 1})",
            f"witnesses: {self.witnesses}",
        ]
        if self.verification is not None:
            ver = self.verification
            lines.append(f"shifts 2n < |k| <= {ver.shift_bound}: {'pass' if ver.passed else 'FAIL ' + str(ver.failed_shifts)}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# pipeline


def _check_entropy(model: ProcessModel, seed: int) -> float:
    try:
        rate = entropy_rate(model, "exact").bits
    except ParameterError:
        rate = entropy_rate(model, "ladder", seed=seed).bits
    if rate <= MIN_RATE:
        raise EntropyError(f"entropy rate {rate:.6g} bits/symbol is not above {MIN_RATE}; no pair can be built")
    return rate


def _centre_entropy(model, lo, hi, cond) -> tuple[float | None, str]:
    """Exact ``H(X_lo..X_hi | atom)`` when the model allows it."""
    length = hi - lo + 1
    a = model.alphabet.size
    if a**length <= EXACT_CENTRE_MAX:
        from recurlab.words import all_words

        w = conditional_weights(model, (lo, hi), cond, all_words(a, length))
        return _h(w), "exact"
    P, g, _, lam, rho = _boundary_messages(model, lo, hi, cond)
    if len(g) != a or sorted(g.tolist()) != list(range(a)):
        return None, "unavailable"
    # visible chain: the conditioned block is an inhomogeneous Markov bridge
    back = np.empty((length, P.shape[0]))
    back[-1] = rho
    for t in range(length - 2, -1, -1):
        b = P @ back[t + 1]
        back[t] = b / b.sum()
    mu = lam * back[0]
    mu = mu / mu.sum()
    parts = [_h(mu)]
    for t in range(1, length):
        Q = P * back[t][None, :]
        s = Q.sum(axis=1, keepdims=True)
        Q = np.divide(Q, s, out=np.zeros_like(Q), where=s > 0)
        parts.append(math.fsum(float(mu[i]) * _h(Q[i]) for i in range(len(mu)) if mu[i] > 0))
        mu = mu @ Q
    return math.fsum(parts), "exact"


def _decode(codes: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Block codes (N x q) -> symbols (N x q*ell) using a code-indexed word table."""
    return table[codes.astype(np.intp)].reshape(codes.shape[0], -1)


def _attempt(model, scheme, epsilon, seed, retry, samples):
    n, ell, q = scheme.n, scheme.piece_length, scheme.intervals
    a = model.alphabet.size
    lo, hi = scheme.window
    path = sample_path(model, (lo, hi - 1), _rng.derive_seed(seed, _rng.CONSTRUCT, n, retry))
    atom = ConditioningAtom.from_path(scheme, path)
    cond = atom.conditioning()

    law = block_distribution(model, ell)
    B = typical_set(law, epsilon)
    base = a**ell
    b_codes = np.sort(block_codes(B.words, a))
    from recurlab.words import all_words

    table = all_words(a, ell)

    masses = []
    for pa, pb in scheme.pieces:
        d = conditional_block_distribution(model, (pa, pb - 1), cond)
        inside = np.isin(block_codes(d.words, a), b_codes)
        masses.append(math.fsum(d.probs[inside].tolist()))
    H, h_method = _centre_entropy(model, -n, n - 1, cond)
    size_log = math.log2(len(B)) * q
    gap_bits = None if H is None else abs(H - size_log)
    gap = None if gap_bits is None else gap_bits / math.log2(base)

    product = len(B) ** q
    if product <= ENUMERATE_MAX:
        cand = product_rows([b_codes] * q, base)
        keep = np.zeros(cand.shape[0], dtype=bool)
        for start in range(0, cand.shape[0], CHUNK):
            block = cand[start : start + CHUNK]
            keep[start : start + CHUNK] = support_mask(model, (-n, n - 1), cond, _decode(block, table))
        support = cand[keep]
        support_method = "exact"
    else:
        rng = _rng.generator(seed, _rng.CONDITIONAL, n, retry)
        draws = sample_conditional(model, (-n, n - 1), cond, samples, rng)
        codes = np.stack([block_codes(draws[:, i * ell : (i + 1) * ell], a) for i in range(q)], axis=1)
        keep = np.isin(codes, b_codes).all(axis=1)
        support = codes[keep]
        support_method = "sampled"
    lang = Language.from_rows(support, base, assume_sorted=support_method == "exact")
    cert = admits_full_binary_tree(lang)
    diag = {
        "retry": retry,
        "n": n,
        "epsilon": epsilon,
        "typical_size": len(B),
        "typical_mass": B.mass,
        "block_masses": masses,
        "condition2_gap": max(1.0 - m for m in masses),
        "centre_entropy_bits": H,
        "centre_entropy_method": h_method,
        "condition3_gap": gap,
        "condition3_gap_bits": gap_bits,
        "support_size": len(lang),
        "support_method": support_method,
        "certificate_found": cert is not None,
    }
    return path, atom, lang, cert, diag


def construct_nonrecurrent_pair(
    model: ProcessModel,
    n: int,
    K: int = 8,
    seed: int = 0,
    retries: int = 100,
    epsilon: float = 0.1,
    escalations: int = 1,
    intervals: int = 8,
    samples: int = 200_000,
    verify: bool = True,
) -> PairReport:
    """Build ``(u, v)`` agreeing on ``E_minus`` and ``E_plus`` and differing on every central piece.

    Each retry draws a fresh atom.  When ``retries`` atoms fail, ``n`` is
    doubled and ``epsilon`` halved, up to ``escalations`` times.  Raises
    :class:`EntropyError` for models whose rate is at most 0.05 bits and
    :class:`NoCertificateError` (with per-attempt gaps) when every attempt
    fails.
    """
    if isinstance(model, EmpiricalModel):
        raise ModelError("the construction needs a generative (IID, Markov or function-of-Markov) model")
    if retries < 1:
        raise ParameterError("retries must be >= 1")
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    scheme = build_block_scheme(n, K, intervals)
    rate = _check_entropy(model, seed)
    a = model.alphabet.size
    c = pattern_constant(a)
    attempts = []
    eps = float(epsilon)
    for level in range(escalations + 1):
        for retry in range(retries):
            path, atom, lang, cert, diag = _attempt(model, scheme, eps, seed, retry, samples)
            attempts.append(diag)
            if cert is None:
                continue
            ell, q = scheme.piece_length, scheme.intervals
            n_ = scheme.n
            centre = path.window(-n_, n_).astype(np.int64)
            u_codes = tuple(block_codes(centre.reshape(q, ell), a).tolist())
            if u_codes not in lang:
                u_codes = cert.leaves[0]
            v_codes = extract_separated_pair(lang, cert, u_codes)
            from recurlab.words import all_words

            table = all_words(a, ell).astype(np.int64)
            u_centre = table[list(u_codes)].ravel()
            v_centre = table[list(v_codes)].ravel()
            u = path.replaced(-n_, u_centre)
            v = path.replaced(-n_, v_centre)
            witnesses = []
            for pa, pb in scheme.pieces:
                diff = np.flatnonzero(u.window(pa, pb) != v.window(pa, pb))
                witnesses.append(int(pa + diff[0]))
            params = {
                "n": n_,
                "K": scheme.K,
                "intervals": q,
                "seed": int(seed),
                "retries": int(retries),
                "epsilon": eps,
                "epsilon_achieved": max(x for x in (diag["condition2_gap"], diag["condition3_gap"]) if x is not None),
                "entropy_rate_bits": rate,
                "typical_set_size": diag["typical_size"],
                "typical_set_mass": diag["typical_mass"],
                "block_masses": diag["block_masses"],
                "condition3_gap": diag["condition3_gap"],
                "c": c,
                "eta": c / 2,
                "retry_used": diag["retry"],
            }
            report = PairReport(u, v, scheme, atom, True, witnesses, params, attempts)
            if verify:
                report.verification = verify_nonrecurrence(report)
            return report
        if level < escalations:
            scheme = build_block_scheme(scheme.n * 2, K, intervals)
            eps /= 2
    raise NoCertificateError(
        f"no full binary tree after {len(attempts)} attempts (final n={scheme.n}, epsilon={eps})",
        {"attempts": attempts},
    )


# ---------------------------------------------------------------------------
# verification


def check_shift(u: SamplePath, v: SamplePath, scheme: BlockScheme, k: int) -> ShiftCheck:
    """Find ``j in [-n, n)`` with ``u_j != v_j`` and ``u_{j+k} == v_{j+k}``.

    The witness is taken inside a central piece covered by the longest
    overlap of ``E - k`` with the centre when one exists, otherwise from a
    direct scan.
    """
    n = scheme.n
    (oa, ob), inside = shift_overlap(scheme, k)
    geometry_ok = ob - oa >= n // 2 and bool(inside)
    j = np.arange(-n, n)
    ok = (u.window(-n, n) != v.window(-n, n)) & (u.window(-n + k, n + k) == v.window(-n + k, n + k))
    witness, piece = None, None
    for i in inside:
        pa, pb = scheme.pieces[i]
        hits = np.flatnonzero(ok[pa + n : pb + n])
        if hits.size:
            witness, piece = int(pa + hits[0]), i
            break
    if witness is None:
        hits = np.flatnonzero(ok)
        if hits.size:
            witness = int(j[hits[0]])
    return ShiftCheck(int(k), witness is not None, witness, (oa, ob), ob - oa, piece, geometry_ok)


def verify_nonrecurrence(
    report: PairReport,
    shift_bound: int | None = None,
    shifts: Sequence[int] | None = None,
    raise_on_failure: bool = False,
) -> VerificationResult:
    """Check every shift ``2n < |k| <= shift_bound`` (default ``(2K-1)n``).

    ``shifts`` replaces the default range.  With ``raise_on_failure`` a
    :class:`VerificationError` naming the offending shifts is raised.
    """
    scheme = report.scheme
    n = scheme.n
    bound = (2 * scheme.K - 1) * n if shift_bound is None else int(shift_bound)
    u, v = report.u, report.v
    if not (u.covers(-bound - n, bound + n) and v.covers(-bound - n, bound + n)):
        raise ParameterError(f"paths must cover [{-bound - n}, {bound + n}) to test shifts up to {bound}")
    if shifts is None:
        shifts = [k for k in range(-bound, bound + 1) if abs(k) > 2 * n]
    result = VerificationResult(bound, [check_shift(u, v, scheme, int(k)) for k in shifts])
    if raise_on_failure and not result.passed:
        raise VerificationError(f"pair is recurrent-compatible at shifts {result.failed_shifts[:20]}")
    return result


def rescan_report(report: PairReport) -> dict:
    """Re-derive the report invariants and non-recurrence without its stored witnesses.

    Returns the agreement check on ``E``, the per-piece disagreement check,
    and for every tested shift the Hamming distance between the central
    disagreement pattern ``[u_j != v_j]`` and its ``k``-shift.
    """
    scheme = report.scheme
    n = scheme.n
    u, v = report.u, report.v
    lo, hi = scheme.window
    e = scheme.e_index_array()
    agree_e = bool(np.all(u.symbols[e - u.lo] == v.symbols[e - v.lo]))
    diff_pieces = [bool(np.any(u.window(a, b) != v.window(a, b))) for a, b in scheme.pieces]
    D = (u.symbols != v.symbols).astype(np.int8)
    bound = (2 * scheme.K - 1) * n
    centre = D[-n - u.lo : n - u.lo]
    distances = {}
    for k in range(-bound, bound + 1):
        if abs(k) <= 2 * n:
            continue
        shifted = D[-n + k - u.lo : n + k - u.lo]
        distances[k] = int(np.count_nonzero(centre != shifted))
    return {
        "agree_on_e": agree_e,
        "differs_on_every_piece": all(diff_pieces),
        "min_distance": min(distances.values()) if distances else None,
        "distances": distances,
    }
