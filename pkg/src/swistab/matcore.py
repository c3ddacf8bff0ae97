"""Dense small-matrix numerics.

Everything here works on plain ``numpy`` arrays.  The P-weighted geometry is
handled through a factor ``R`` with ``R.T @ R == P``: the P-norm of a vector
``x`` is ``||R x||_2`` and the induced operator norm of ``A`` is the spectral
norm of ``R A R^{-1}``.
"""

from dataclasses import dataclass, asdict, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFinite,
    NonSquare,
    NotPositiveDefinite,
    NotPSD,
    NotSymmetric,
)


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds shared by all modules.

    eig_tol
        Slack on eigenvalue-level equalities.  A word whose averaged spectral
        radius is ``>= 1 - eig_tol`` counts as a witness of instability.
    rank_tol
        Relative threshold below which an eigenvalue counts as zero when
        extracting kernels.
    psd_tol
        Slack on semidefinite inequalities (Lyapunov margins, SPD checks).
    conv_tol
        Frobenius distance under which successive omega-limit probes are
        considered converged.
    decision_band
        Width of the band below 1 inside which strict inequalities are not
        decided (verdict UNDETERMINED).
    sym_tol
        Relative asymmetry tolerated in matrices that should be symmetric.
    """

    eig_tol: float = 1e-13
    rank_tol: float = 1e-9
    psd_tol: float = 1e-9
    conv_tol: float = 1e-8
    decision_band: float = 1e-9
    sym_tol: float = 1e-10

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"tolerance {name} must be a positive finite number, got {value!r}")

    def updated(self, **overrides):
        """Copy with the non-None overrides applied."""
        return replace(self, **{k: float(v) for k, v in overrides.items() if v is not None})

    def as_dict(self):
        return asdict(self)


DEFAULT_TOL = Tolerance()


def as_matrix(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite(f"{name} has non-finite entries")
    return A


def as_square(A, name="matrix"):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {A.shape}")
    return A


def as_symmetric(S, tol=DEFAULT_TOL, name="matrix"):
    """Validate symmetry within ``tol.sym_tol`` and return the symmetric part."""
    S = as_square(S, name)
    scale = np.max(np.abs(S)) if S.size else 0.0
    if np.max(np.abs(S - S.T), initial=0.0) > tol.sym_tol * scale:
        raise NotSymmetric(f"{name} is not symmetric")
    return 0.5 * (S + S.T)


def _radii_2x2(stack):
    """Closed-form radii of 2 x 2 matrices in extended precision.

    The discriminant is formed as ``(a - d)^2 + 4 b c`` rather than
    ``tr^2 - 4 det`` to avoid cancellation.  Near a double eigenvalue the
    radius is only ``sqrt(eps)``-conditioned, so the extra precision is what
    keeps radii of cyclically shifted products within ~1e-10 of each other.
    """
    M = np.asarray(stack, dtype=np.longdouble)
    a, b, c, d = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]
    disc = (a - d) ** 2 + 4 * b * c
    real = (np.abs(a + d) + np.sqrt(np.maximum(disc, 0))) / 2
    cplx = np.sqrt(np.abs(a * d - b * c))
    return np.where(disc >= 0, real, cplx).astype(float)


def spectral_radius(A):
    """Largest modulus over the (complex) eigenvalues of ``A``."""
    A = np.asarray(A)
    checked = as_square(A.astype(float) if A.dtype == np.longdouble else A)
    A = A if A.dtype == np.longdouble else checked
    if A.size == 0:
        return 0.0
    return float(spectral_radii(A[None])[0])


def spectral_radii(stack):
    """Spectral radii of a stack of square matrices, shape ``(m, d, d)``.

    ``float64`` and ``longdouble`` stacks are accepted; 2 x 2 matrices use
    the closed form at extended precision, larger ones LAPACK in double.
    """
    stack = np.asarray(stack)
    if stack.dtype != np.longdouble:
        stack = stack.astype(float)
    if stack.shape[0] == 0:
        return np.zeros(0)
    if stack.shape[1:] == (2, 2):
        return _radii_2x2(stack)
    return np.max(np.abs(np.linalg.eigvals(stack.astype(float))), axis=-1)


def p_factor(P, tol=DEFAULT_TOL):
    """Return upper-triangular ``R`` with ``R.T @ R == P``.

    Raises NotPositiveDefinite (carrying the minimum eigenvalue) unless the
    smallest eigenvalue of ``P`` exceeds ``tol.psd_tol``.
    """
    P = as_symmetric(P, tol, "P")
    min_eig = float(np.linalg.eigvalsh(P)[0])
    if min_eig <= tol.psd_tol:
        raise NotPositiveDefinite(min_eig)
    return np.linalg.cholesky(P).T


def _factor_pair(P, tol):
    R = p_factor(P, tol)
    return R, np.linalg.inv(R)


def _check_dims(P, A):
    if P.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"P is {P.shape[0]}x{P.shape[0]} but operand has dimension {A.shape[0]}")


def p_norm_vec(P, x, tol=DEFAULT_TOL):
    """``sqrt(x^T P x)``."""
    P = as_symmetric(P, tol, "P")
    x = np.asarray(x, dtype=float)
    if x.shape != (P.shape[0],):
        raise DimensionMismatch(f"vector of shape {x.shape} does not match P of dimension {P.shape[0]}")
    return float(np.sqrt(max(x @ P @ x, 0.0)))


def to_euclidean(P, A, tol=DEFAULT_TOL):
    """``R A R^{-1}``: the matrix of ``A`` in coordinates where the P-norm is Euclidean."""
    A = as_square(A)
    R, R_inv = _factor_pair(P, tol)
    _check_dims(R, A)
    return R @ A @ R_inv


def p_opnorm(P, A, tol=DEFAULT_TOL):
    """Operator norm of ``A`` induced by the P-norm."""
    B = to_euclidean(P, A, tol)
    if B.size == 0:
        return 0.0
    return float(np.linalg.svd(B, compute_uv=False)[0])


def p_conorm(P, A, tol=DEFAULT_TOL):
    """Co-norm (minimum gain) of ``A`` over the unit P-sphere."""
    B = to_euclidean(P, A, tol)
    if B.size == 0:
        return 0.0
    return float(np.linalg.svd(B, compute_uv=False)[-1])


def p_opnorms(R, R_inv, stack):
    """Batched P-operator norms given a precomputed factor pair."""
    stack = np.asarray(stack, dtype=float)
    if stack.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.norm(R @ stack @ R_inv, ord=2, axis=(-2, -1))


def kernel(S, tol=DEFAULT_TOL, scale=None):
    """Orthonormal basis (columns) of the numerical kernel of symmetric ``S``.

    An eigenvalue counts as zero when ``|lam| <= rank_tol * scale``.  By
    default ``scale`` is the largest eigenvalue of ``S``; callers that know the
    natural magnitude of ``S`` (e.g. a difference of two nearly equal Gram
    matrices) should pass it, since cancellation noise would otherwise set the
    scale.  A zero scale falls back to the absolute threshold ``rank_tol``.
    """
    S = as_symmetric(S, tol, "S")
    d = S.shape[0]
    if d == 0:
        return np.zeros((0, 0))
    lam, V = np.linalg.eigh(S)
    if scale is None:
        scale = max(float(lam[-1]), 0.0)
    thresh = tol.rank_tol * scale if scale > 0 else tol.rank_tol
    return V[:, np.abs(lam) <= thresh]


def sqrt_psd(S, tol=DEFAULT_TOL):
    """Symmetric PSD square root.

    Eigenvalues in ``[-psd_tol * lam_max, 0)`` are rounding noise and clamped
    to zero; anything more negative raises NotPSD.
    """
    S = as_symmetric(S, tol, "S")
    if S.size == 0:
        return S.copy()
    lam, V = np.linalg.eigh(S)
    lam_max = max(float(lam[-1]), 0.0)
    floor = -tol.psd_tol * lam_max if lam_max > 0 else -tol.psd_tol
    if lam[0] < floor:
        raise NotPSD(lam[0])
    root = V @ np.diag(np.sqrt(np.clip(lam, 0.0, None))) @ V.T
    return 0.5 * (root + root.T)
