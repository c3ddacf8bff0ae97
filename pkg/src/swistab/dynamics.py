"""Trajectories of a switched system along a signal, limit estimates and sampling experiments.

All products are accumulated in the coordinates where the certificate's
P-norm is Euclidean (``B_k = R S_k R^-1`` with ``R^T R = P``), so each P-norm
is a plain spectral norm.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import ksub, matcore
from ._workers import ordered_map, worker_count
from .errors import (
    HorizonZero,
    InconsistentWithDichotomy,
    InvalidCertificate,
    NotConverged,
    WrongDimension,
)
from .matcore import DEFAULT_TOL
from .signals import GENERATOR_ID, make_periodic


def _whitened(sys, cert):
    if not cert.valid:
        cert.require_valid()
    if cert.P.shape[0] != sys.d:
        raise InvalidCertificate("certificate dimension does not match the system")
    R, R_inv = matcore._factor_pair(cert.P, cert.tol)
    return R, R_inv, np.einsum("ij,kjl,lm->kim", R, sys.stack, R_inv)


def _products(B, letters):
    """Stack of running products ``B_{l_i} ... B_{l_1}`` for ``i = 1..n``."""
    n, d = len(letters), B.shape[1]
    out = np.empty((n, d, d))
    acc = np.eye(d)
    for i, a in enumerate(letters):
        acc = B[a - 1] @ acc
        out[i] = acc
    return out


def _spectral_norms(stack):
    return np.linalg.norm(stack, ord=2, axis=(1, 2))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Norm profile of ``S_{s_i} ... S_{s_1}`` for ``i = 1..n``.

    ``state_norms`` holds ``||x_i||_P`` when an initial state was given.
    ``step_diffs[i]`` is the Frobenius distance between consecutive products
    (in the original coordinates).
    """

    n: int
    letters: np.ndarray
    product_norms: np.ndarray
    final_product: np.ndarray
    state_norms: np.ndarray = None
    step_diffs: np.ndarray = None

    def max_increase(self):
        """Largest ``norm[i+1] - norm[i]`` (nonpositive up to rounding for a valid certificate)."""
        if self.n < 2:
            return 0.0
        return float(np.max(np.diff(self.product_norms)))


def iterate(sys, cert, sig, n, x0=None):
    if n < 1:
        raise HorizonZero("horizon must be at least 1")
    R, R_inv, B = _whitened(sys, cert)
    letters = sig.prefix(n)
    if letters.size and letters.max() > sys.K:
        raise WrongDimension(f"signal uses letter {letters.max()} but the system has K = {sys.K}")
    prods = _products(B, letters)
    originals = R_inv @ prods @ R
    state_norms = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float).reshape(sys.d)
        state_norms = np.linalg.norm(prods @ (R @ x0), axis=1)
    prev = np.concatenate([np.eye(sys.d)[None], originals[:-1]])
    return TrajectoryRecord(
        n=int(n),
        letters=letters,
        product_norms=_spectral_norms(prods),
        final_product=originals[-1],
        state_norms=state_norms,
        step_diffs=np.linalg.norm(originals - prev, axis=(1, 2)),
    )


@dataclass(frozen=True, eq=False)
class OmegaEstimate:
    """A limit point ``M`` of the products and the quantities derived from it.

    ``Q = sqrt(M^T P M)``, ``r_ext = ||M||_P``, ``r_int`` is the P-co-norm of
    ``M`` and ``stable`` is ``ker Q``: states whose trajectories tend to zero.
    ``m_converged`` is False when only ``M^T P M`` settled (rotation-type
    limits); ``Q`` and the radii remain valid then, ``M`` is just the last probe.
    """

    M: np.ndarray
    residual: float
    gram_residual: float
    Q: np.ndarray
    r_ext: float
    r_int: float
    stable: ksub.Subspace
    m_converged: bool
    probes: tuple


def _probe_indices(sig, n, count):
    """Probe times: multiples of the period for periodic signals, halvings of ``n`` otherwise."""
    step = sig.period or 1
    top = n // step
    if top < 2:
        raise NotConverged(float("inf"), f"horizon {n} holds fewer than two probe points")
    idx = []
    m = top
    while len(idx) < count and m >= 1:
        idx.append(m * step)
        m = m // 2 if sig.period is None else m - max(1, top // (2 * count))
    return tuple(sorted(set(idx)))


def omega_estimate(sys, cert, sig, n, probe_count=4, tol=None):
    tol = tol or cert.tol
    if n < 1:
        raise HorizonZero("horizon must be at least 1")
    R, R_inv, B = _whitened(sys, cert)
    probes = _probe_indices(sig, n, max(2, probe_count))
    letters = sig.prefix(probes[-1])
    prods = _products(B, letters)
    at = [R_inv @ prods[i - 1] @ R for i in probes]
    grams = [prods[i - 1].T @ prods[i - 1] for i in probes]
    residual = max(np.linalg.norm(a - b) for a, b in zip(at, at[1:]))
    gram_residual = max(np.linalg.norm(a - b) for a, b in zip(grams, grams[1:]))
    m_ok = residual < tol.conv_tol
    if not m_ok and gram_residual >= tol.conv_tol:
        raise NotConverged(residual, f"products and their Gram matrices still move after {probes[-1]} steps")
    M = at[-1]
    P = cert.P
    # M^T P M = R^T (B^T B) R, with B the whitened product
    G = R.T @ grams[-1] @ R
    G = 0.5 * (G + G.T)
    Q = matcore.sqrt_psd(G, tol)
    top, bottom = ksub._extremal_gains(P, G, tol)
    return OmegaEstimate(
        M=M,
        residual=float(residual),
        gram_residual=float(gram_residual),
        Q=Q,
        r_ext=float(np.sqrt(top)),
        r_int=float(np.sqrt(bottom)),
        stable=ksub.Subspace(matcore.kernel(Q, tol, scale=max(1.0, np.linalg.norm(Q, 2)))),
        m_converged=bool(m_ok),
        probes=probes,
    )


@dataclass(frozen=True, eq=False)
class Splitting:
    """``R^2 = co_part (+) norm_part`` for a limit ``M``.

    On ``co_part`` the limit scales P-norms by ``r_int``, on ``norm_part`` by
    ``r_ext``.  When the radii agree both parts are the whole plane.
    ``tail_error`` is the largest observed deviation from those scalings on
    the basis vectors.
    """

    co_part: ksub.Subspace
    norm_part: ksub.Subspace
    r_int: float
    r_ext: float
    tail_error: float


def split_from_limit(P, M, tol=DEFAULT_TOL):
    M = matcore.as_square(M, "M")
    if M.shape[0] != 2:
        raise WrongDimension(f"the splitting is for d = 2, got d = {M.shape[0]}")
    P, G = ksub._gram(P, M, tol)
    top, bottom = ksub._extremal_gains(P, G, tol)
    r_ext, r_int = float(np.sqrt(top)), float(np.sqrt(bottom))
    if r_ext - r_int <= tol.conv_tol:
        co = norm = ksub.Subspace.full(2)
    else:
        co = ksub.k_conorm_subspace_from_gram(P, G, tol)
        norm = ksub.k_subspace_from_gram(P, G, tol)
    err = 0.0
    for V, r in ((co, r_int), (norm, r_ext)):
        for x in V.basis.T:
            gain = matcore.p_norm_vec(P, M @ x, tol) - r * matcore.p_norm_vec(P, x, tol)
            err = max(err, abs(gain))
    return Splitting(co, norm, r_int, r_ext, err)


def split2(sys, cert, sig, n, tol=None):
    tol = tol or cert.tol
    if sys.d != 2:
        raise WrongDimension(f"the splitting is for d = 2, got d = {sys.d}")
    est = omega_estimate(sys, cert, sig, n, tol=tol)
    return split_from_limit(cert.P, est.M, tol)


class Dichotomy(str, Enum):
    EXPONENTIAL_DECAY = "EXPONENTIAL_DECAY"
    NORM_ONE = "NORM_ONE"


@dataclass(frozen=True)
class DichotomyReport:
    """``rate`` and ``constant`` satisfy ``||product_i||_P <= constant * rate^i`` on the horizon."""

    outcome: Dichotomy
    word: tuple
    n: int
    rate: float = None
    constant: float = None
    max_deviation_from_one: float = None


# Norms below this are treated as exact zeros in the rate fit.
_LOG_FLOOR = 1e-280


def _fit_rate(norms):
    i = np.arange(1, len(norms) + 1)
    half = slice(len(norms) // 2, None)
    keep = norms[half] > _LOG_FLOOR
    if keep.sum() < 2:
        return 0.0, float(norms.max())
    x, y = i[half][keep], np.log(norms[half][keep])
    slope, _ = np.polyfit(x, y, 1)
    rate = float(np.exp(slope))
    with np.errstate(divide="ignore", over="ignore"):
        constant = float(np.max(norms / rate ** i)) if rate > 0 else float(norms.max())
    return rate, constant


def dichotomy_check(sys, cert, word, n=200):
    """Classify a periodic signal as exponentially decaying or norm-preserving on every shift."""
    word = tuple(int(a) for a in word)
    if n < 1:
        raise HorizonZero("horizon must be at least 1")
    _, _, B = _whitened(sys, cert)
    band = 10 * cert.tol.psd_tol
    shifts = [word[i:] + word[:i] for i in range(len(word))]
    profiles = [_spectral_norms(_products(B, make_periodic(w, K=sys.K).prefix(n))) for w in shifts]
    deviation = max(float(np.max(np.abs(p - 1.0))) for p in profiles)
    if deviation <= band:
        return DichotomyReport(Dichotomy.NORM_ONE, word, n, max_deviation_from_one=deviation)
    rate, constant = _fit_rate(profiles[0])
    if rate < 1 - band and np.max(profiles[0]) <= 1 + band:
        return DichotomyReport(Dichotomy.EXPONENTIAL_DECAY, word, n, rate, constant, deviation)
    raise InconsistentWithDichotomy(
        f"word {word}: norms neither stay at 1 (deviation {deviation:.3e}) nor decay (fitted rate {rate:.6g})"
    )


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    """Outcome of sampling signals from a measure and iterating each to ``horizon``.

    ``decay_steps[j]`` is the first step at which trial ``j`` fell below
    ``decay_thresh`` (``-1`` if it never did); from that step on its product
    norm can only shrink, so the trial is not iterated further.
    """

    fraction: float
    decayed: int
    trials: int
    horizon: int
    decay_thresh: float
    seed: int
    trial_seeds: tuple
    final_norms: np.ndarray
    decay_steps: np.ndarray
    generator: str = GENERATOR_ID


def trial_seeds(seed, trials):
    """Independent per-trial seeds derived from one root seed."""
    children = np.random.SeedSequence(seed).spawn(trials)
    return tuple(int(c.generate_state(1, dtype=np.uint64)[0]) for c in children)


def _run_trials(B, signals, horizon, thresh):
    t, d = len(signals), B.shape[1]
    letters = np.stack([s.prefix(horizon) for s in signals]) - 1
    X = np.broadcast_to(np.eye(d), (t, d, d)).copy()
    alive = np.arange(t)
    steps = np.full(t, -1, dtype=np.int64)
    norms = np.empty(t)
    for i in range(horizon):
        X = B[letters[alive, i]] @ X
        # Frobenius bounds the spectral norm from above
        done = np.linalg.norm(X, axis=(1, 2)) < thresh
        if done.any():
            norms[alive[done]] = _spectral_norms(X[done])
            steps[alive[done]] = i + 1
            alive, X = alive[~done], X[~done]
            if alive.size == 0:
                break
    if alive.size:
        norms[alive] = _spectral_norms(X)
    return norms, steps


def monte_carlo_stability(sys, cert, measure, trials, horizon, decay_thresh=1e-6, seed=0):
    """Fraction of sampled signals whose product P-norm ends below ``decay_thresh``.

    Deterministic given ``seed``: trial ``j`` uses ``trial_seeds(seed, trials)[j]``
    and the reduction does not depend on thread scheduling.
    """
    if trials < 1 or horizon < 1:
        raise HorizonZero("trials and horizon must both be at least 1")
    _, _, B = _whitened(sys, cert)
    if measure.K > sys.K:
        raise WrongDimension(f"measure uses {measure.K} letters but the system has K = {sys.K}")
    seeds = trial_seeds(seed, trials)
    signals = [measure.with_seed(s) for s in seeds]
    n_chunks = max(1, min(worker_count(), trials // 64 or 1))
    chunks = [list(c) for c in np.array_split(np.array(signals, dtype=object), n_chunks)]
    results = ordered_map(lambda c: _run_trials(B, c, horizon, decay_thresh), chunks)
    final = np.concatenate([r[0] for r in results])
    steps = np.concatenate([r[1] for r in results])
    decayed = int(np.sum(final < decay_thresh))
    return MonteCarloReport(
        fraction=decayed / trials,
        decayed=decayed,
        trials=int(trials),
        horizon=int(horizon),
        decay_thresh=float(decay_thresh),
        seed=int(seed),
        trial_seeds=seeds,
        final_norms=final,
        decay_steps=steps,
    )

