"""String similarity metrics between original and edited hypothesis texts.

Implemented from scratch so scores are reproducible without external metric
packages. Conventions for degenerate inputs (empty sides) follow the
function docstrings; all functions are pure.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ModeMismatchError

BLEU_MAX_N = 4
CHRF_MAX_N = 6
CHRF_BETA = 2.0
TER_MAX_BLOCK = 10
TER_MAX_SHIFTS = 50


class TokenMode(str, Enum):
    WORD = "word"
    CHAR = "char"


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    mode: TokenMode


@dataclass(frozen=True)
class MetricVector:
    """All similarity signals for one (original, edited) pair."""

    bleu: float
    chrf: float
    ter: float
    word_edit_ratio: float
    char_edit_ratio: float
    identical: bool

    def value(self, name: str) -> float:
        return float(getattr(self, name))


METRIC_NAMES = ("bleu", "chrf", "ter", "word_edit_ratio", "char_edit_ratio")


def tokenize(text: str, mode: TokenMode = TokenMode.WORD) -> TokenSequence:
    """Word mode splits on Unicode whitespace (runs collapse); char mode keeps every scalar."""
    if mode is TokenMode.WORD:
        return TokenSequence(tuple(text.split()), mode)
    return TokenSequence(tuple(text), TokenMode.CHAR)


_VECTOR_THRESHOLD = 48


def _edit_distance_rows(a, b) -> int:
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, tb in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ta != tb))
        prev = cur
    return prev[-1]


def _edit_distance_vectorized(a, b) -> int:
    # The left-to-right dependency cur[j] = min(cur[j-1]+1, c[j]) collapses to
    # a prefix minimum: cur[j] = j + min_{k<=j}(c[k] - k).
    codes = {}
    enc_a = np.array([codes.setdefault(t, len(codes)) for t in a])
    enc_b = np.array([codes.setdefault(t, len(codes)) for t in b])
    offsets = np.arange(len(b) + 1)
    prev = offsets.copy()
    for i, token in enumerate(enc_a, start=1):
        candidate = np.empty(len(b) + 1, dtype=np.int64)
        candidate[0] = i
        candidate[1:] = np.minimum(prev[1:] + 1, prev[:-1] + (enc_b != token))
        prev = offsets + np.minimum.accumulate(candidate - offsets)
    return int(prev[-1])


def _edit_distance(a: tuple[str, ...] | list[str], b: tuple[str, ...] | list[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    if len(b) >= _VECTOR_THRESHOLD:
        return _edit_distance_vectorized(a, b)
    return _edit_distance_rows(a, b)


def _edit_distance_bounded(a, b, cutoff: int) -> int:
    """Exact distance when below cutoff, else any value >= cutoff.

    Runs the DP inside the |i - j| < cutoff diagonal band (cells outside it
    cost at least cutoff) and abandons once a whole row reaches the cutoff;
    the shift search uses this to discard candidate moves that cannot beat
    the best gain found so far.
    """
    m, n = len(a), len(b)
    if cutoff <= 0 or abs(m - n) >= cutoff:
        return max(cutoff, 0)
    if not b:
        return len(a)
    inf = cutoff
    band = cutoff - 1
    prev = [j if j < cutoff else inf for j in range(n + 1)]
    for i in range(1, m + 1):
        ta = a[i - 1]
        lo = i - band if i - band > 1 else 1
        hi = i + band if i + band < n else n
        cur = [inf] * (n + 1)
        row_min = inf
        if i < cutoff:
            cur[0] = i
            row_min = i
        for j in range(lo, hi + 1):
            value = prev[j - 1] + (ta != b[j - 1])
            up = prev[j] + 1
            if up < value:
                value = up
            left = cur[j - 1] + 1
            if left < value:
                value = left
            if value > inf:
                value = inf
            cur[j] = value
            if value < row_min:
                row_min = value
        if row_min >= cutoff:
            return cutoff
        prev = cur
    return prev[n] if prev[n] < cutoff else cutoff


def levenshtein(a: TokenSequence, b: TokenSequence) -> tuple[int, float]:
    """Minimal insert/delete/substitute count and its ratio over max(|a|, |b|, 1)."""
    if a.mode is not b.mode:
        raise ModeMismatchError(f"cannot compare {a.mode.value} tokens with {b.mode.value} tokens")
    distance = _edit_distance(a.tokens, b.tokens)
    return distance, distance / max(len(a.tokens), len(b.tokens), 1)


def _ngram_counts(tokens: tuple[str, ...] | list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(hyp: TokenSequence, ref: TokenSequence, max_n: int = BLEU_MAX_N) -> float:
    """Sentence BLEU: geometric mean of modified n-gram precisions times brevity penalty.

    Precisions for n >= 2 get add-one smoothing; the unigram precision is
    unsmoothed, so a hypothesis sharing no tokens with the reference scores 0.
    Empty hypothesis scores 0.
    """
    h, r = hyp.tokens, ref.tokens
    if not h:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        hyp_grams = _ngram_counts(h, n)
        ref_grams = _ngram_counts(r, n)
        matches = sum(min(count, ref_grams[g]) for g, count in hyp_grams.items())
        total = sum(hyp_grams.values())
        if n == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        else:
            precision = (matches + 1) / (total + 1)
        log_sum += math.log(precision)
    brevity = math.exp(min(0.0, 1.0 - len(r) / len(h)))
    return brevity * math.exp(log_sum / max_n)


def chrf(hyp: TokenSequence, ref: TokenSequence, max_n: int = CHRF_MAX_N,
         beta: float = CHRF_BETA) -> float:
    """Character n-gram F-score; whitespace is stripped before n-gram extraction.

    Precision/recall are averaged over the orders 1..max_n for which the
    hypothesis has at least one n-gram; 0 when either side is empty.
    """
    h = [c for c in hyp.tokens if not c.isspace()]
    r = [c for c in ref.tokens if not c.isspace()]
    if not h or not r:
        return 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, max_n + 1):
        hyp_grams = _ngram_counts(h, n)
        if not hyp_grams:
            continue
        ref_grams = _ngram_counts(r, n)
        matches = sum(min(count, ref_grams[g]) for g, count in hyp_grams.items())
        precisions.append(matches / sum(hyp_grams.values()))
        ref_total = sum(ref_grams.values())
        recalls.append(matches / ref_total if ref_total else 0.0)
    avg_p = sum(precisions) / len(precisions)
    avg_r = sum(recalls) / len(recalls)
    denom = beta * beta * avg_p + avg_r
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * avg_p * avg_r / denom


def _matching_block_shifts(cur: list[str], ref: tuple[str, ...] | list[str],
                           max_block: int):
    """Candidate block moves: runs of cur matching a ref run at another position."""
    for i in range(len(cur)):
        for j in range(len(ref)):
            if i == j or cur[i] != ref[j]:
                continue
            length = 1
            while (length < max_block and i + length < len(cur) and j + length < len(ref)
                   and cur[i + length] == ref[j + length]):
                length += 1
            for size in range(1, length + 1):
                moved = cur[:i] + cur[i + size:]
                moved[j:j] = cur[i:i + size]
                yield moved


def ter(hyp: TokenSequence, ref: TokenSequence) -> float:
    """Translation edit rate: (block shifts + word edits) / |ref|.

    Shifts are greedy best-improvement block moves (block length capped at
    TER_MAX_BLOCK, at most TER_MAX_SHIFTS applied), each costing 1 and only
    applied while they reduce the remaining edit distance. Empty reference:
    0 when the hypothesis is empty too, else |hyp|.
    """
    if not ref.tokens:
        return 0.0 if not hyp.tokens else float(len(hyp.tokens))
    # integer-encode once; the DP then compares ints instead of strings
    codes: dict[str, int] = {}
    cur = [codes.setdefault(t, len(codes)) for t in hyp.tokens]
    r = [codes.setdefault(t, len(codes)) for t in ref.tokens]
    shifts = 0
    distance = _edit_distance(cur, r)
    while distance > 0 and shifts < TER_MAX_SHIFTS:
        best_gain, best = 0, None
        seen = {tuple(cur)}
        for moved in _matching_block_shifts(cur, r, TER_MAX_BLOCK):
            key = tuple(moved)
            if key in seen:
                continue
            seen.add(key)
            # only distances strictly below (distance - best_gain) matter
            moved_distance = _edit_distance_bounded(moved, r, distance - best_gain)
            gain = distance - moved_distance
            if gain > best_gain:
                best_gain, best = gain, moved
                if best_gain == distance:
                    break  # nothing can beat a full repair
        if best is None:
            break
        cur = best
        distance -= best_gain
        shifts += 1
    return (shifts + distance) / len(r)


def metric_vector(original: str, edited: str) -> MetricVector:
    """Every metric for an (original, edited) pair; original plays the hypothesis role.

    Exact string equality short-circuits to the perfect-score vector, keeping
    the identity invariant even for empty texts.
    """
    if original == edited:
        return MetricVector(1.0, 1.0, 0.0, 0.0, 0.0, True)
    hyp_w, ref_w = tokenize(original, TokenMode.WORD), tokenize(edited, TokenMode.WORD)
    hyp_c, ref_c = tokenize(original, TokenMode.CHAR), tokenize(edited, TokenMode.CHAR)
    _, word_ratio = levenshtein(hyp_w, ref_w)
    _, char_ratio = levenshtein(hyp_c, ref_c)
    return MetricVector(
        bleu=bleu(hyp_w, ref_w),
        chrf=chrf(hyp_c, ref_c),
        ter=ter(hyp_w, ref_w),
        word_edit_ratio=word_ratio,
        char_edit_ratio=char_ratio,
        identical=False,
    )
