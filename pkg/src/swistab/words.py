"""Words over ``{1, ..., K}``, spectral radii of their products, and the
absolute-stability decision procedures for pairs in dimension 2 and 3.

Words are tuples of 1-based letters.  The product of ``w = (w_1, ..., w_n)``
is ``S_{w_n} ... S_{w_1}``: later letters act on the left, matching the order
in which a switching signal applies them.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import matcore
from ._workers import ordered_map
from .errors import BudgetExceeded, InvalidLetter, WrongAlphabet, WrongDimension
from .matcore import DEFAULT_TOL

#: Maximum number of words of a single length that may be materialized.
DEFAULT_WORD_CAP = 1 << 22

# Below this many matrices the eigenvalue batch is not worth splitting.
_PARALLEL_MIN = 1 << 14

#: Word lengths checked for pairs in dimension 3.  Length 7 is not needed.
D3_LENGTHS = (1, 2, 3, 4, 5, 6, 8)
D2_LENGTHS = (1, 2)


def shortlex_key(word):
    return (len(word), tuple(word))


def validate_word(word, K):
    word = tuple(int(a) for a in word)
    if not word:
        raise InvalidLetter("empty word")
    bad = [a for a in word if not 1 <= a <= K]
    if bad:
        raise InvalidLetter(f"letters {bad} outside 1..{K}")
    return word


def _check_budget(K, n, cap):
    if K ** n > cap:
        raise BudgetExceeded(f"{K}^{n} = {K ** n} words exceeds the cap of {cap}")


def necklaces(K, n):
    """Lexicographically smallest rotation of every cyclic class of length ``n``.

    Fredricksen-Kessler-Maiorana generation; output is in lexicographic order.
    """
    a = [0] * (n + 1)

    def gen(t, p):
        if t > n:
            if n % p == 0:
                yield tuple(x + 1 for x in a[1:])
            return
        a[t] = a[t - p]
        yield from gen(t + 1, p)
        for j in range(a[t - p] + 1, K):
            a[t] = j
            yield from gen(t + 1, t)

    yield from gen(1, 1)


def enumerate_words(K, n, dedup_cyclic=False, cap=DEFAULT_WORD_CAP):
    """Yield every word of length ``n``, or one per cyclic class with ``dedup_cyclic``.

    Cyclic shifts have the same product spectrum, so the deduplicated stream
    is enough for spectral-radius maxima.
    """
    if K < 1 or n < 1:
        raise ValueError("need K >= 1 and n >= 1")
    _check_budget(K, n, cap)
    if dedup_cyclic:
        yield from necklaces(K, n)
        return
    for idx in range(K ** n):
        yield word_from_index(idx, n, K)


def word_index(word, K):
    idx = 0
    for a in word:
        idx = idx * K + (a - 1)
    return idx


def word_from_index(idx, n, K):
    out = []
    for _ in range(n):
        idx, r = divmod(idx, K)
        out.append(r + 1)
    return tuple(reversed(out))


def _extended_product(sys, word):
    mats = sys.stack.astype(np.longdouble)
    M = mats[word[0] - 1]
    for a in word[1:]:
        M = mats[a - 1] @ M
    return M


def product_of_word(sys, word):
    """``S_{w_n} ... S_{w_1}``, accumulated in extended precision."""
    return _extended_product(sys, validate_word(word, sys.K)).astype(float)


def word_radius(sys, word):
    """``rho(S_{w_n} ... S_{w_1})`` without rounding the product to double first."""
    return matcore.spectral_radius(_extended_product(sys, validate_word(word, sys.K)))


def _level_products(sys, n_max, cap):
    """Yield ``(n, stack)`` where ``stack[word_index(w)]`` is the product of ``w``."""
    # extended precision: radii near a double eigenvalue are sqrt(eps)-sensitive
    mats = sys.stack.astype(np.longdouble)
    level = mats.copy()
    yield 1, level
    for n in range(2, n_max + 1):
        _check_budget(sys.K, n, cap)
        # index(w + (k,)) == index(w) * K + (k - 1)
        level = np.einsum("kij,wjl->wkil", mats, level).reshape(-1, sys.d, sys.d)
        yield n, level


def _radii(stack):
    if len(stack) < _PARALLEL_MIN:
        return matcore.spectral_radii(stack)
    chunks = np.array_split(stack, max(1, len(stack) // _PARALLEL_MIN))
    return np.concatenate(ordered_map(matcore.spectral_radii, chunks))


def averaged_radii(sys, n, stack=None, dedup=True, cap=DEFAULT_WORD_CAP):
    """Words of length ``n`` and their values ``rho(product)^(1/n)``."""
    words = list(enumerate_words(sys.K, n, dedup_cyclic=dedup, cap=cap))
    if stack is None:
        stack = next(s for m, s in _level_products(sys, n, cap) if m == n)
    idx = np.fromiter((word_index(w, sys.K) for w in words), dtype=np.int64, count=len(words))
    values = _radii(stack[idx]) ** (1.0 / n)
    return words, values


def _pick(words, values, threshold):
    """Shortlex-least word whose value is at least ``threshold``."""
    hits = np.nonzero(values >= threshold)[0]
    if hits.size == 0:
        return None
    return min((words[i] for i in hits), key=shortlex_key)


def _tie_floor(top, tol):
    return top - tol.eig_tol * max(1.0, top)


@dataclass(frozen=True)
class LengthMax:
    length: int
    value: float
    witness: tuple
    count: int


def _length_maxima(sys, lengths, dedup, cap, tol):
    """Per-length maxima, plus the raw (words, values) pairs for later queries."""
    wanted = set(lengths)
    table, raw = [], {}
    for n, stack in _level_products(sys, max(wanted), cap):
        if n not in wanted:
            continue
        words, values = averaged_radii(sys, n, stack=stack, dedup=dedup, cap=cap)
        top = float(values.max())
        table.append(LengthMax(n, top, _pick(words, values, _tie_floor(top, tol)), len(words)))
        raw[n] = (words, values)
    return table, raw


def _overall_max(table, tol):
    top = max(row.value for row in table)
    floor = _tie_floor(top, tol)
    return top, min((row.witness for row in table if row.value >= floor), key=shortlex_key)


@dataclass(frozen=True)
class GsrBound:
    """Lower bound on the generalized spectral radius from words up to ``n_max``."""

    value: float
    witness: tuple
    n_max: int
    per_length: tuple


def gsr_lower_bound(sys, n_max, dedup=True, tol=DEFAULT_TOL, cap=DEFAULT_WORD_CAP):
    """``max_{n <= n_max} max_{|w| = n} rho(product(w))^(1/n)`` with a witness.

    Values within ``eig_tol`` of the maximum are ties; the shortlex-least tied
    word is returned so the witness does not depend on evaluation order.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    table, _ = _length_maxima(sys, range(1, n_max + 1), dedup, cap, tol)
    top, witness = _overall_max(table, tol)
    return GsrBound(value=top, witness=witness, n_max=n_max, per_length=tuple(table))


class Status(str, Enum):
    ABSOLUTELY_STABLE = "ABSOLUTELY_STABLE"
    NOT_ABSOLUTELY_STABLE = "NOT_ABSOLUTELY_STABLE"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class StabilityVerdict:
    """Three-valued outcome of a finite word check.

    ``worst`` is the largest ``rho^(1/n)`` over the checked words and
    ``margin = 1 - worst``.  ``witness`` is set for a negative verdict: the
    shortlex-least word with ``rho^(1/n) >= 1 - eig_tol``.
    """

    status: Status
    worst: float
    worst_word: tuple
    margin: float
    witness: tuple = None
    witness_value: float = None
    lengths: tuple = ()
    per_length: tuple = ()
    decision_band: float = DEFAULT_TOL.decision_band
    eig_tol: float = DEFAULT_TOL.eig_tol


def _verdict(sys, lengths, tol, dedup=True, cap=DEFAULT_WORD_CAP):
    table, raw = _length_maxima(sys, lengths, dedup, cap, tol)
    worst, worst_word = _overall_max(table, tol)

    bad = []
    for words, values in raw.values():
        hit = _pick(words, values, 1 - tol.eig_tol)
        if hit is not None:
            bad.append(hit)
    witness = value = None
    if bad:
        witness = min(bad, key=shortlex_key)
        words, values = raw[len(witness)]
        value = float(values[words.index(witness)])
        status = Status.NOT_ABSOLUTELY_STABLE
    elif worst < 1 - tol.decision_band:
        status = Status.ABSOLUTELY_STABLE
    else:
        status = Status.UNDETERMINED
    return StabilityVerdict(
        status=status,
        worst=worst,
        worst_word=worst_word,
        margin=1.0 - worst,
        witness=witness,
        witness_value=value,
        lengths=tuple(sorted(set(lengths))),
        per_length=tuple(table),
        decision_band=tol.decision_band,
        eig_tol=tol.eig_tol,
    )


def _check_pair(sys, cert, d):
    if sys.d != d:
        raise WrongDimension(f"this procedure needs d = {d}, system has d = {sys.d}")
    if sys.K != 2:
        raise WrongAlphabet(f"this procedure needs K = 2, system has K = {sys.K}")
    if cert.P.shape[0] != sys.d:
        raise WrongDimension("certificate dimension does not match the system")
    cert.require_valid()


def decide_d2(sys, cert, tol=DEFAULT_TOL):
    """Absolute stability of a planar pair sharing a weak Lyapunov matrix.

    Stable iff ``rho(S_1)``, ``rho(S_2)`` and ``rho(S_1 S_2)`` are all below 1.
    """
    _check_pair(sys, cert, 2)
    return _verdict(sys, D2_LENGTHS, tol)


def decide_d3(sys, cert, tol=DEFAULT_TOL):
    """Absolute stability of a pair in dimension 3 sharing a weak Lyapunov matrix.

    Stable iff every product of length 1-6 or 8 has spectral radius below 1.
    """
    _check_pair(sys, cert, 3)
    return _verdict(sys, D3_LENGTHS, tol)


@dataclass(frozen=True)
class PeriodicProbe:
    passes: bool
    n_max: int
    worst: float
    worst_word: tuple
    per_length: tuple


def periodic_switched_stability(sys, n_max, tol=DEFAULT_TOL, dedup=True, cap=DEFAULT_WORD_CAP):
    """Check ``rho(product(w))^(1/|w|) < 1 - decision_band`` for all words up to ``n_max``.

    An empirical probe only: passing says nothing about non-periodic signals
    outside the dimensions where a finite set of lengths is known to suffice.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    v = _verdict(sys, range(1, n_max + 1), tol, dedup=dedup, cap=cap)
    return PeriodicProbe(
        passes=v.worst < 1 - tol.decision_band,
        n_max=n_max,
        worst=v.worst,
        worst_word=v.worst_word,
        per_length=v.per_length,
    )
