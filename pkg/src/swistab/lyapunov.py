"""Common weak Lyapunov certificates and contraction indices."""

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import (
    DimensionMismatch,
    InvalidCertificate,
    NotContractiveWithinBudget,
    PreconditionFailed,
)
from .matcore import DEFAULT_TOL


@dataclass(frozen=True, eq=False)
class SwitchedSystem:
    """A finite set of square matrices ``S_1, ..., S_K`` of common dimension ``d``.

    Letters are 1-based everywhere in the public API; ``matrices[k - 1]`` is
    ``S_k``.
    """

    matrices: tuple

    def __init__(self, matrices):
        mats = [matcore.as_square(m, f"S_{i + 1}").copy() for i, m in enumerate(matrices)]
        if not mats:
            raise DimensionMismatch("a switched system needs at least one matrix")
        d = mats[0].shape[0]
        for i, m in enumerate(mats):
            if m.shape != (d, d):
                raise DimensionMismatch(f"S_{i + 1} has shape {m.shape}, expected ({d}, {d})")
            m.setflags(write=False)
        object.__setattr__(self, "matrices", tuple(mats))

    @property
    def d(self):
        return self.matrices[0].shape[0]

    @property
    def K(self):
        return len(self.matrices)

    @property
    def stack(self):
        return np.stack(self.matrices)

    def __getitem__(self, k):
        """``S_k`` for a 1-based letter ``k``."""
        return self.matrices[k - 1]

    def scaled(self, c):
        return SwitchedSystem([c * m for m in self.matrices])


@dataclass(frozen=True, eq=False)
class LyapunovCertificate:
    """Outcome of checking ``P - S_k^T P S_k >= 0`` for every ``k``.

    ``margins[k-1]`` is the minimum eigenvalue of ``P - S_k^T P S_k``;
    ``p_norms[k-1]`` is ``||S_k||_P``.  ``beta`` bounds the Euclidean norm of
    every finite product when the certificate is valid (condition number of
    the factor of ``P``).
    """

    P: np.ndarray
    margins: tuple
    strict: tuple
    p_norms: tuple
    valid: bool
    beta: float
    tol: matcore.Tolerance = field(default=DEFAULT_TOL, repr=False)

    @property
    def min_margin(self):
        return min(self.margins)

    def require_valid(self):
        if not self.valid:
            worst = int(np.argmin(self.margins)) + 1
            raise InvalidCertificate(
                f"P is not a weak Lyapunov matrix: margin of S_{worst} is {self.margins[worst - 1]:.3e}"
            )
        return self


def verify_weak_lyapunov(sys, P=None, tol=DEFAULT_TOL):
    """Check the non-strict common Lyapunov inequality for every matrix of ``sys``.

    ``P`` defaults to the identity.  Exact-zero margins are legitimate, so
    validity uses the relative band ``margin >= -psd_tol * ||P||``.
    """
    if P is None:
        P = np.eye(sys.d)
    P = matcore.as_symmetric(P, tol, "P")
    if P.shape[0] != sys.d:
        raise DimensionMismatch(f"P has dimension {P.shape[0]}, system has dimension {sys.d}")
    R, R_inv = matcore._factor_pair(P, tol)
    P_norm = float(np.linalg.eigvalsh(P)[-1])

    margins, norms = [], []
    for S in sys.matrices:
        gap = P - S.T @ P @ S
        margins.append(float(np.linalg.eigvalsh(0.5 * (gap + gap.T))[0]))
        norms.append(float(np.linalg.norm(R @ S @ R_inv, 2)))
    valid = min(margins) >= -tol.psd_tol * P_norm
    P = P.copy()
    P.setflags(write=False)
    return LyapunovCertificate(
        P=P,
        margins=tuple(margins),
        strict=tuple(m > tol.psd_tol for m in margins),
        p_norms=tuple(norms),
        valid=bool(valid),
        beta=float(np.linalg.cond(R)),
        tol=tol,
    )


def power_contraction_index(A, P=None, n_max=64, tol=DEFAULT_TOL):
    """Smallest ``N <= n_max`` with ``||A^N||_P < 1 - psd_tol``."""
    A = matcore.as_square(A, "A")
    if P is None:
        P = np.eye(A.shape[0])
    R, R_inv = matcore._factor_pair(P, tol)
    B = R @ A @ R_inv
    power = np.eye(A.shape[0])
    for N in range(1, n_max + 1):
        power = B @ power
        if np.linalg.norm(power, 2) < 1 - tol.psd_tol:
            return N
    raise NotContractiveWithinBudget(matcore.spectral_radius(A), n_max)


@dataclass(frozen=True)
class StrictificationReport:
    power: int
    min_eig: float
    passed: bool
    spectral_radius: float
    weak_margin: float


def strictification_check(A, D, tol=DEFAULT_TOL):
    """For stable ``A`` with weak Lyapunov matrix ``D``, check ``D - (A^d)^T D A^d > 0``.

    ``d`` is the dimension of ``A``.  The preconditions are verified first and
    reported through PreconditionFailed with the offending measurement.
    """
    A = matcore.as_square(A, "A")
    D = matcore.as_symmetric(D, tol, "D")
    if D.shape != A.shape:
        raise DimensionMismatch(f"D has shape {D.shape}, A has shape {A.shape}")
    rho = matcore.spectral_radius(A)
    if rho >= 1 - tol.eig_tol:
        raise PreconditionFailed("spectral radius < 1", rho)
    d_min = float(np.linalg.eigvalsh(D)[0])
    if d_min <= tol.psd_tol:
        raise PreconditionFailed("D positive definite", d_min)
    weak = D - A.T @ D @ A
    weak_margin = float(np.linalg.eigvalsh(0.5 * (weak + weak.T))[0])
    if weak_margin < -tol.psd_tol * float(np.linalg.eigvalsh(D)[-1]):
        raise PreconditionFailed("D - A^T D A >= 0", weak_margin)

    d = A.shape[0]
    Ad = np.linalg.matrix_power(A, d)
    strict = D - Ad.T @ D @ Ad
    min_eig = float(np.linalg.eigvalsh(0.5 * (strict + strict.T))[0])
    return StrictificationReport(
        power=d,
        min_eig=min_eig,
        passed=min_eig > tol.psd_tol,
        spectral_radius=rho,
        weak_margin=weak_margin,
    )

