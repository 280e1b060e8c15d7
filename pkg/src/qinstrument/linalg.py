"""Dense complex matrix foundation.

Conventions used throughout the package:

* operators are square ``numpy`` arrays of ``complex128``, dimensionless;
* states are either unit vectors (1-d arrays) or density operators
  (positive semidefinite, unit trace);
* ``vec`` stacks columns left to right (Fortran order).

All tolerances are absolute and default to ``DEFAULT_TOL``; double-precision
eigensolves at the dimensions this package targets (<= 16) keep residuals
far below it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotSelfAdjoint, ValidationError

DEFAULT_TOL = 1e-9
CLUSTER_TOL = 1e-8


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def frobenius(m: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(m))


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a square complex array with finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name}: expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValidationError(f"{name}: dimension must be >= 1")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValidationError(f"{name}: entries must be finite (no NaN/Inf)")
    return a


def require_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape} vs {b.shape}")


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return frobenius(m - dagger(m)) <= tol


def require_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL, name: str = "operator") -> None:
    res = frobenius(m - dagger(m))
    if res > tol:
        raise NotSelfAdjoint(f"{name}: ||M - M^dag||_F = {res:.3e} exceeds {tol:.1e}")


def is_positive_semidefinite(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff the minimum eigenvalue is >= -tol.

    The input must be self-adjoint within ``DEFAULT_TOL``; eigenvalues are
    taken from the Hermitian part.
    """
    m = as_matrix(m)
    require_hermitian(m, DEFAULT_TOL)
    w = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return bool(w[0] >= -tol)


def require_projection(p: np.ndarray, tol: float = DEFAULT_TOL, name: str = "projection") -> np.ndarray:
    p = as_matrix(p, name)
    require_hermitian(p, tol, name)
    res = frobenius(p @ p - p)
    if res > tol:
        raise ValidationError(f"{name}: ||P^2 - P||_F = {res:.3e} exceeds {tol:.1e}")
    return p


def require_density(rho: np.ndarray, tol: float = DEFAULT_TOL, name: str = "state") -> np.ndarray:
    """Validate a density operator: self-adjoint, eigenvalues >= -tol, trace 1."""
    rho = as_matrix(rho, name)
    require_hermitian(rho, tol, name)
    w = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
    if w[0] < -tol:
        raise ValidationError(f"{name}: eigenvalue {w[0]:.3e} below -{tol:.1e}")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"{name}: trace {tr!r} differs from 1 by more than {tol:.1e}")
    return rho


def require_state_vector(psi, tol: float = DEFAULT_TOL, name: str = "state vector") -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ValidationError(f"{name}: expected a 1-d amplitude vector, got shape {v.shape}")
    if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
        raise ValidationError(f"{name}: amplitudes must be finite")
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > tol:
        raise ValidationError(f"{name}: norm {n!r} differs from 1 by more than {tol:.1e}")
    return v


def pure_density(psi) -> np.ndarray:
    """Rank-one density operator |psi><psi|."""
    v = require_state_vector(psi)
    return np.outer(v, v.conj())


def basis_vector(dim: int, i: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[i] = 1.0
    return e


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """ab - ba."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    require_same_dim(a, b)
    return a @ b - b @ a


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct real outcomes with matching orthogonal, complete projections."""

    outcomes: tuple[float, ...]
    projections: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.outcomes) != len(self.projections):
            raise ValidationError("spectral decomposition: outcomes and projections differ in length")
        if len(self.outcomes) == 0:
            raise ValidationError("spectral decomposition: empty outcome set")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ValidationError("spectral decomposition: outcome values must be distinct")

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def projection_for(self, x: float) -> np.ndarray:
        for value, proj in zip(self.outcomes, self.projections):
            if value == x:
                return proj
        raise ValidationError(f"spectral decomposition: no outcome {x!r}")

    def observable(self) -> np.ndarray:
        """Reconstruct sum_j x_j E(x_j)."""
        return sum(x * e for x, e in zip(self.outcomes, self.projections))


def spectral_decompose(a: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> SpectralDecomposition:
    """Eigendecompose a self-adjoint operator into outcomes and eigenprojections.

    Eigenvalues within ``cluster_tol`` of each other are merged into a single
    outcome whose value is their arithmetic mean; the projection is onto the
    merged eigenspace.  Output projections are mutually orthogonal and sum to
    the identity.
    """
    a = as_matrix(a, "observable")
    require_hermitian(a, DEFAULT_TOL, "observable")
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    outcomes = []
    projections = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > cluster_tol:
            block = v[:, start:i]
            outcomes.append(float(np.mean(w[start:i])))
            projections.append(block @ dagger(block))
            start = i
    return SpectralDecomposition(tuple(outcomes), tuple(projections))


def projection_meet(p: np.ndarray, q: np.ndarray, rank_tol: float = DEFAULT_TOL) -> np.ndarray:
    """Projection onto range(p) ∩ range(q) (infimum in the projection lattice).

    Computed by orthonormalizing the union of the null spaces (columns of
    I - p and I - q, rank decisions at ``rank_tol``) and projecting onto the
    orthogonal complement.
    """
    p = require_projection(p, name="p")
    q = require_projection(q, name="q")
    require_same_dim(p, q)
    d = p.shape[0]
    eye = np.eye(d, dtype=complex)
    stacked = np.hstack([eye - p, eye - q])
    u, s, _ = np.linalg.svd(stacked)
    rank = int(np.sum(s > rank_tol))
    w = u[:, :rank]
    meet = eye - w @ dagger(w)
    return (meet + dagger(meet)) / 2


def meet_all(projections, rank_tol: float = DEFAULT_TOL) -> np.ndarray:
    """Iterated projection meet; associative on ranges, so order is irrelevant."""
    projections = list(projections)
    out = projections[0]
    for nxt in projections[1:]:
        out = projection_meet(out, nxt, rank_tol)
    return out


def expectation(a: np.ndarray, rho: np.ndarray) -> float:
    """Tr[rho a] for self-adjoint a."""
    require_same_dim(a, rho)
    return float(np.trace(rho @ a).real)


def std_dev(a: np.ndarray, rho: np.ndarray) -> float:
    """sqrt(Tr[rho a^2] - Tr[rho a]^2), clamped at zero for tiny negatives."""
    a = as_matrix(a, "observable")
    rho = as_matrix(rho, "state")
    require_same_dim(a, rho)
    mean = expectation(a, rho)
    second = expectation(a @ a, rho)
    return float(np.sqrt(max(0.0, second - mean * mean)))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization (columns left to right)."""
    return m.flatten(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return v.reshape((dim, dim), order="F")
