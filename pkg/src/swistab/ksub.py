"""Norm-preserving and co-norm subspaces under a quadratic norm.

For ``A`` and SPD ``P``, the set of vectors on which ``A`` attains its
P-operator norm is the kernel of ``||A||_P^2 P - A^T P A`` and the set on which
it attains its co-norm is the kernel of ``A^T P A - ||A||_{P,co}^2 P``.  Both
matrices are PSD, so both sets are linear subspaces.
"""

from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import DimensionMismatch, WrongAlphabet
from .matcore import DEFAULT_TOL


@dataclass(frozen=True, eq=False)
class Subspace:
    """Column span of an orthonormal ``d x r`` basis."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise DimensionMismatch("subspace basis must be a d x r matrix")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def full(cls, d):
        return cls(np.eye(d))

    @classmethod
    def zero(cls, d):
        return cls(np.zeros((d, 0)))

    @classmethod
    def span(cls, vectors, tol=DEFAULT_TOL):
        """Orthonormalize the columns of ``vectors`` (rank-revealing)."""
        V = np.asarray(vectors, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[1] == 0:
            return cls.zero(V.shape[0])
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        r = int(np.sum(s > tol.rank_tol * max(s[0], 1.0)))
        return cls(U[:, :r])

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def projector(self):
        return self.basis @ self.basis.T

    def contains(self, x, tol=DEFAULT_TOL):
        x = np.asarray(x, dtype=float)
        residual = x - self.projector @ x
        return bool(np.linalg.norm(residual) <= 10 * tol.rank_tol * max(np.linalg.norm(x), 1e-300))

    def equals(self, other, tol=DEFAULT_TOL):
        if self.ambient_dim != other.ambient_dim or self.dim != other.dim:
            return False
        return bool(np.linalg.norm(self.projector - other.projector, 2) <= 10 * tol.rank_tol)


def _gram(P, A, tol):
    A = matcore.as_square(A, "A")
    P = matcore.as_symmetric(P, tol, "P")
    if P.shape != A.shape:
        raise DimensionMismatch(f"P has shape {P.shape}, A has shape {A.shape}")
    G = A.T @ P @ A
    return P, 0.5 * (G + G.T)


def _extremal_gains(P, G, tol):
    """Squared P-norm and squared P-co-norm of any ``A`` with ``A^T P A = G``."""
    R, R_inv = matcore._factor_pair(P, tol)
    H = R_inv.T @ G @ R_inv
    lam = np.linalg.eigvalsh(0.5 * (H + H.T))
    return max(float(lam[-1]), 0.0), max(float(lam[0]), 0.0)


def k_subspace_from_gram(P, G, tol=DEFAULT_TOL):
    top, _ = _extremal_gains(P, G, tol)
    scale = top * float(np.linalg.eigvalsh(P)[-1])
    return Subspace(matcore.kernel(top * P - G, tol, scale=scale))


def k_conorm_subspace_from_gram(P, G, tol=DEFAULT_TOL):
    top, bottom = _extremal_gains(P, G, tol)
    scale = top * float(np.linalg.eigvalsh(P)[-1])
    return Subspace(matcore.kernel(G - bottom * P, tol, scale=scale))


def k_subspace(P, A, tol=DEFAULT_TOL):
    """Vectors ``x`` with ``||A x||_P = ||A||_P ||x||_P``.

    Uses ``ker(||A||_P^2 P - A^T P A)``; the squared norm is what the defining
    equation gives after squaring both sides.
    """
    P, G = _gram(P, A, tol)
    return k_subspace_from_gram(P, G, tol)


def k_conorm_subspace(P, A, tol=DEFAULT_TOL):
    """Vectors ``x`` with ``||A x||_P = ||A||_{P,co} ||x||_P``; equals ``ker(A)`` for singular ``A``."""
    P, G = _gram(P, A, tol)
    return k_conorm_subspace_from_gram(P, G, tol)


def unit_gain_subspace(P, A, tol=DEFAULT_TOL):
    """Vectors whose P-norm ``A`` preserves exactly.

    Coincides with :func:`k_subspace` when ``||A||_P = 1`` and is ``{0}`` when
    ``A`` is a strict P-contraction.
    """
    P, G = _gram(P, A, tol)
    top, _ = _extremal_gains(P, G, tol)
    if np.sqrt(top) < 1 - tol.psd_tol:
        return Subspace.zero(A.shape[0])
    return k_subspace_from_gram(P, G, tol)


def is_invariant(A, V, tol=DEFAULT_TOL):
    """Whether ``A(V)`` is contained in ``V``."""
    A = matcore.as_square(A, "A")
    if A.shape[0] != V.ambient_dim:
        raise DimensionMismatch("matrix and subspace dimensions differ")
    if V.dim == 0:
        return True
    B = V.basis
    leak = (np.eye(V.ambient_dim) - B @ B.T) @ A @ B
    return bool(np.linalg.norm(leak, 2) <= tol.rank_tol * np.linalg.norm(A, 2))


def intersect(V, W, tol=DEFAULT_TOL):
    """``V`` intersected with ``W``: the common kernel of the two complementary projectors."""
    if V.ambient_dim != W.ambient_dim:
        raise DimensionMismatch("subspaces live in different ambient spaces")
    d = V.ambient_dim
    outside = (np.eye(d) - V.projector) + (np.eye(d) - W.projector)
    return Subspace(matcore.kernel(outside, tol, scale=1.0))


#: Periodic words that may fail to be stable under the disjointness condition.
EXCEPTION_WORDS = {
    2: ((1, 2),),
    3: ((1, 2), (2, 1), (1, 2, 2), (2, 1, 1)),
}


@dataclass(frozen=True, eq=False)
class DisjointnessReport:
    """Disjointness of the two unit-gain subspaces of a pair.

    ``holds`` is the condition ``K(S_1) & K(S_2) = {0}``.  When it holds and one
    of the subspaces is invariant under its own matrix (or one matrix is a
    strict contraction), every generic signal is stable
    (``generic_signals_stable``).  ``exception_words`` lists the periodic
    signals that the condition alone does not cover for ``d`` in {2, 3}; both
    orientations are reported.
    """

    subspaces: tuple
    dims: tuple
    p_norms: tuple
    intersection: Subspace
    holds: bool
    invariant: tuple
    generic_signals_stable: bool
    exception_words: tuple

    @property
    def intersection_dim(self):
        return self.intersection.dim


def check_iv1(sys, P=None, tol=DEFAULT_TOL):
    if sys.K != 2:
        raise WrongAlphabet(f"the disjointness check is for pairs, got K = {sys.K}")
    if P is None:
        P = np.eye(sys.d)
    subspaces = tuple(unit_gain_subspace(P, S, tol) for S in sys.matrices)
    norms = tuple(matcore.p_opnorm(P, S, tol) for S in sys.matrices)
    inter = intersect(*subspaces, tol=tol)
    invariant = tuple(is_invariant(S, V, tol) for S, V in zip(sys.matrices, subspaces))
    holds = inter.dim == 0
    contracting = any(n < 1 - tol.psd_tol for n in norms)
    return DisjointnessReport(
        subspaces=subspaces,
        dims=tuple(V.dim for V in subspaces),
        p_norms=norms,
        intersection=inter,
        holds=holds,
        invariant=invariant,
        generic_signals_stable=holds and (contracting or any(invariant)),
        exception_words=EXCEPTION_WORDS.get(sys.d, ()),
    )
