"""Switching signals: construction, seeded sampling and finite-prefix classification.

A :class:`SwitchingSignal` is an immutable description; ``prefix(n)`` always
regenerates from the seed, so equal descriptions give equal prefixes and a
shorter prefix is always an initial segment of a longer one.

Properties such as recurrence or the existence of arbitrarily long constant
runs concern the whole infinite sequence and cannot be read off a finite
prefix.  Constructors here guarantee them by design; :func:`classify_prefix`
only reports what the prefix shows.
"""

import json
from bisect import bisect_right
from dataclasses import dataclass, replace
from enum import Enum
from itertools import count

import numpy as np

from .errors import EmptyWord, InvalidDistribution, InvalidLetter, InvalidSchedule

#: Bit generator behind every seeded stream; echoed in reports.
GENERATOR_ID = "numpy.random.PCG64"

_DIST_TOL = 1e-12


def rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


class Kind(str, Enum):
    PERIODIC = "periodic"
    BERNOULLI = "bernoulli"
    MARKOV = "markov"
    EXPLICIT = "explicit"
    CONSTANT_RUN = "constantrun"


def _distribution(p, what):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or not np.all(np.isfinite(p)):
        raise InvalidDistribution(f"{what} must be a non-empty vector of finite numbers")
    if np.any(p < 0) or abs(p.sum() - 1.0) > _DIST_TOL:
        raise InvalidDistribution(f"{what} must be nonnegative and sum to 1, got {p.tolist()}")
    return p


def _draw(cum, u):
    """Map uniforms to 1-based letters through a cumulative distribution."""
    return np.searchsorted(cum, u, side="right") + 1


def _cumulative(p):
    cum = np.cumsum(p)
    cum[-1] = 1.0
    return cum


@dataclass(frozen=True, eq=False)
class SwitchingSignal:
    """An infinite (or, for EXPLICIT, finite) sequence over ``{1, ..., K}``.

    Use the ``make_*`` constructors rather than building this directly.
    """

    kind: Kind
    K: int
    word: tuple = None
    probs: tuple = None
    transition: tuple = None
    init: tuple = None
    letters: tuple = None
    letter: int = None
    schedule: tuple = None
    filler: "SwitchingSignal" = None
    filler_length: int = 0
    seed: int = 0

    @property
    def atomic(self):
        """True when every seed produces the same sequence (a point-mass measure)."""
        if self.kind in (Kind.PERIODIC, Kind.EXPLICIT):
            return True
        if self.kind is Kind.BERNOULLI:
            return max(self.probs) == 1.0
        if self.kind is Kind.MARKOV:
            rows = [self.init, *self.transition]
            return all(max(r) == 1.0 for r in rows)
        return self.filler_length == 0 or self.filler.atomic

    @property
    def period(self):
        return len(self.word) if self.kind is Kind.PERIODIC else None

    def with_seed(self, seed):
        filler = self.filler.with_seed(seed) if self.filler is not None else None
        return replace(self, seed=int(seed), filler=filler)

    def prefix(self, n):
        """The first ``n`` letters as an int array (1-based letters)."""
        n = int(n)
        if n < 0:
            raise ValueError("prefix length must be nonnegative")
        if self.kind is Kind.PERIODIC:
            return np.resize(np.asarray(self.word, dtype=np.int64), n)
        if self.kind is Kind.EXPLICIT:
            if n > len(self.letters):
                raise ValueError(f"explicit signal has only {len(self.letters)} letters, {n} requested")
            return np.asarray(self.letters[:n], dtype=np.int64)
        if self.kind is Kind.BERNOULLI:
            return _draw(_cumulative(np.asarray(self.probs)), rng(self.seed).random(n)).astype(np.int64)
        if self.kind is Kind.MARKOV:
            return self._markov_prefix(n)
        return self._constant_run_prefix(n)

    def _markov_prefix(self, n):
        out = np.empty(n, dtype=np.int64)
        if n == 0:
            return out
        u = rng(self.seed).random(n).tolist()
        rows = [_cumulative(np.asarray(r)).tolist() for r in self.transition]
        # same rule as _draw, on plain lists for speed
        state = bisect_right(_cumulative(np.asarray(self.init)).tolist(), u[0]) + 1
        seq = [state]
        for x in u[1:]:
            state = bisect_right(rows[state - 1], x) + 1
            seq.append(state)
        out[:] = seq
        return out

    def _constant_run_prefix(self, n):
        out = np.empty(n, dtype=np.int64)
        filler = self.filler.prefix(n) if self.filler_length else None
        pos = used = 0
        for run in _extend_schedule(self.schedule):
            if pos >= n:
                break
            take = min(self.filler_length, n - pos)
            if take:
                out[pos:pos + take] = filler[used:used + take]
                pos, used = pos + take, used + take
            take = min(run, n - pos)
            out[pos:pos + take] = self.letter
            pos += take
        return out

    def describe(self):
        """JSON-friendly description used in reports."""
        out = {"kind": self.kind.value, "K": self.K}
        if self.kind is Kind.PERIODIC:
            out["word"] = list(self.word)
        elif self.kind is Kind.BERNOULLI:
            out.update(probs=list(self.probs), seed=self.seed, generator=GENERATOR_ID)
        elif self.kind is Kind.MARKOV:
            out.update(transition=[list(r) for r in self.transition], init=list(self.init),
                       seed=self.seed, generator=GENERATOR_ID)
        elif self.kind is Kind.EXPLICIT:
            out["length"] = len(self.letters)
        else:
            out.update(letter=self.letter, schedule=list(self.schedule) if self.schedule else None,
                       filler_length=self.filler_length,
                       filler=self.filler.describe() if self.filler is not None else None)
        out["atomic"] = self.atomic
        return out


def _extend_schedule(schedule):
    """Run lengths: the given ones, then increasing by one forever."""
    last = 0
    for r in schedule or ():
        last = r
        yield r
    for r in count(last + 1):
        yield r


def _check_letters(letters, K):
    bad = [a for a in letters if not 1 <= a <= K]
    if bad:
        raise InvalidLetter(f"letters {bad} outside 1..{K}")


def make_periodic(word, K=None):
    """``w, w, w, ...``."""
    word = tuple(int(a) for a in word)
    if not word:
        raise EmptyWord("a periodic signal needs a non-empty word")
    K = max(word) if K is None else K
    _check_letters(word, K)
    return SwitchingSignal(Kind.PERIODIC, K, word=word)


def make_explicit(letters, K=None):
    letters = tuple(int(a) for a in letters)
    K = max(letters, default=1) if K is None else K
    _check_letters(letters, K)
    return SwitchingSignal(Kind.EXPLICIT, K, letters=letters)


def make_bernoulli(probs, seed=0):
    """i.i.d. letters with ``P(letter = k) = probs[k-1]``."""
    p = _distribution(probs, "probs")
    return SwitchingSignal(Kind.BERNOULLI, len(p), probs=tuple(p.tolist()), seed=int(seed))


def make_markov(transition, init, seed=0):
    T = np.asarray(transition, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InvalidDistribution("transition matrix must be square")
    rows = tuple(tuple(_distribution(r, f"transition row {i + 1}").tolist()) for i, r in enumerate(T))
    init = _distribution(init, "init")
    if init.size != T.shape[0]:
        raise InvalidDistribution("init length must match the transition matrix")
    return SwitchingSignal(Kind.MARKOV, T.shape[0], transition=rows, init=tuple(init.tolist()), seed=int(seed))


def make_constant_run(k, schedule=None, filler=None, seed=0, filler_length=2, K=2):
    """Filler blocks alternating with runs of letter ``k`` of strictly increasing length.

    ``schedule`` gives the first run lengths (default 1, 2, 3, ...); after it is
    exhausted the lengths keep growing by one, so runs of every length occur
    beyond any index.  ``filler`` defaults to uniform i.i.d. letters over
    ``1..K`` seeded by ``seed``; ``filler_length=0`` gives the constant signal.
    """
    schedule = tuple(int(r) for r in schedule) if schedule is not None else None
    if schedule is not None:
        if any(r < 1 for r in schedule) or any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise InvalidSchedule(f"run lengths must be positive and strictly increasing, got {schedule}")
    if filler_length < 0:
        raise InvalidSchedule("filler length must be nonnegative")
    if filler is None:
        filler = make_bernoulli(np.full(K, 1.0 / K), seed=seed)
    K = max(K, filler.K, int(k))
    _check_letters((int(k),), K)
    return SwitchingSignal(Kind.CONSTANT_RUN, K, letter=int(k), schedule=schedule,
                           filler=filler, filler_length=int(filler_length), seed=int(seed))


def sample_bernoulli(probs, seed, n):
    return make_bernoulli(probs, seed).prefix(n)


def sample_markov(transition, init, seed, n):
    return make_markov(transition, init, seed).prefix(n)


def smallest_period(x):
    """Smallest ``p >= 1`` with ``x[i] == x[i + p]`` wherever both exist (KMP failure function)."""
    x = list(x)
    n = len(x)
    if n == 0:
        return 0
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k and x[i] != x[k]:
            k = fail[k - 1]
        if x[i] == x[k]:
            k += 1
        fail[i] = k
    return n - fail[-1]


@dataclass(frozen=True)
class SignalClassification:
    """Evidence from a length-``n`` prefix.

    ``detected_period`` is the smallest period ``p`` of the prefix provided it
    repeats at least three times (``3 p <= n``).  ``matches_exception_word`` is
    the first listed word whose periodic extension equals the prefix.
    """

    n: int
    generic_so_far: bool
    constant_prefix: bool
    detected_period: int
    matches_exception_word: tuple
    letter_counts: tuple


def classify_prefix(sig, n, exceptions=()):
    if n < 1:
        raise ValueError("n must be >= 1")
    x = sig.prefix(n) if isinstance(sig, SwitchingSignal) else np.asarray(sig[:n], dtype=np.int64)
    K = sig.K if isinstance(sig, SwitchingSignal) else int(x.max())
    counts = np.bincount(x, minlength=K + 1)[1:]
    p = smallest_period(x.tolist())
    match = None
    for w in exceptions:
        w = tuple(w)
        if w and np.array_equal(np.resize(np.asarray(w, dtype=np.int64), n), x):
            match = w
            break
    return SignalClassification(
        n=int(n),
        generic_so_far=bool(np.all(counts > 0)),
        constant_prefix=bool(np.all(x == x[0])),
        detected_period=p if 3 * p <= n else None,
        matches_exception_word=match,
        letter_counts=tuple(int(c) for c in counts),
    )


def parse_word(text):
    letters = [s for s in text.replace(" ", ",").split(",") if s]
    try:
        return tuple(int(s) for s in letters)
    except ValueError as exc:
        raise InvalidLetter(f"cannot parse word {text!r}") from exc


def from_spec(text, K, seed=0):
    """Parse ``periodic:1,2`` | ``bernoulli:0.5,0.5`` | ``markov:<file>`` | ``constantrun:1``.

    The Markov file is JSON with keys ``transition`` and ``init`` (``init``
    defaults to uniform).
    """
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == Kind.PERIODIC.value:
        return make_periodic(parse_word(arg), K=K)
    if kind == Kind.BERNOULLI.value:
        try:
            probs = [float(s) for s in arg.split(",") if s.strip()]
        except ValueError as exc:
            raise InvalidDistribution(f"cannot parse probabilities {arg!r}") from exc
        if len(probs) != K:
            raise InvalidDistribution(f"expected {K} probabilities, got {len(probs)}")
        return make_bernoulli(probs, seed)
    if kind == Kind.MARKOV.value:
        with open(arg) as fh:
            doc = json.load(fh)
        T = doc["transition"]
        init = doc.get("init", [1.0 / len(T)] * len(T))
        sig = make_markov(T, init, seed)
        if sig.K != K:
            raise InvalidDistribution(f"Markov chain has {sig.K} states, system has K = {K}")
        return sig
    if kind == Kind.CONSTANT_RUN.value:
        return make_constant_run(int(arg), seed=seed, K=K)
    raise ValueError(f"unknown signal kind {kind!r}")
