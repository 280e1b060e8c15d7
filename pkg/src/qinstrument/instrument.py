"""Quantum instruments in Kraus form.

An instrument assigns each outcome ``x`` a completely positive map
``rho -> sum_k K_{x,k} rho K_{x,k}^dag`` such that the total map over all
outcomes is trace-preserving.  It carries both the outcome statistics
(``Tr`` of the branch) and the conditional state update (the normalized
branch) in one object.

Superoperator matrices use the column-stacking convention: ``M vec(rho) =
vec(map(rho))`` with ``vec`` stacking columns left to right, so a single
Kraus operator ``K`` contributes ``kron(conj(K), K)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatch,
    InvalidInstrument,
    UnknownOutcome,
    ValidationError,
    ZeroProbabilityConditioning,
)
from .linalg import dagger, frobenius, vec

P_FLOOR = 1e-12


def _frozen(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Instrument:
    """Outcome-indexed Kraus families; immutable after construction.

    ``kraus[i]`` is the nonempty tuple of Kraus operators for ``outcomes[i]``.
    """

    dim: int
    outcomes: tuple[float, ...]
    kraus: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("instrument: dim must be >= 1")
        if len(self.outcomes) == 0:
            raise ValidationError("instrument: outcome set is empty")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ValidationError("instrument: outcome values must be distinct")
        if len(self.kraus) != len(self.outcomes):
            raise ValidationError("instrument: kraus families do not match outcomes")
        frozen = []
        for x, ops in zip(self.outcomes, self.kraus):
            if len(ops) == 0:
                raise ValidationError(f"instrument: outcome {x!r} has no Kraus operators")
            ops = tuple(_frozen(linalg.as_matrix(k, f"Kraus[{x!r}]")) for k in ops)
            for k in ops:
                if k.shape != (self.dim, self.dim):
                    raise ValidationError(
                        f"instrument: Kraus operator for outcome {x!r} has shape {k.shape}, expected ({self.dim}, {self.dim})"
                    )
            frozen.append(ops)
        object.__setattr__(self, "kraus", tuple(frozen))

    @classmethod
    def from_kraus(cls, kraus_by_outcome: dict) -> "Instrument":
        """Build from an outcome -> Kraus-list mapping (insertion order kept)."""
        outcomes = tuple(float(x) for x in kraus_by_outcome)
        families = tuple(tuple(np.asarray(k, dtype=complex) for k in ops) for ops in kraus_by_outcome.values())
        dim = families[0][0].shape[0]
        return cls(dim=dim, outcomes=outcomes, kraus=families)

    def index_of(self, x: float) -> int:
        for i, value in enumerate(self.outcomes):
            if value == x:
                return i
        raise UnknownOutcome(f"outcome {x!r} not in {self.outcomes}")

    def kraus_for(self, x: float) -> tuple[np.ndarray, ...]:
        return self.kraus[self.index_of(x)]

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)


@dataclass(frozen=True)
class Povm:
    """Effects of an instrument: positive operators summing to the identity."""

    outcomes: tuple[float, ...]
    effects: tuple[np.ndarray, ...]

    def effect_for(self, x: float) -> np.ndarray:
        for value, e in zip(self.outcomes, self.effects):
            if value == x:
                return e
        raise UnknownOutcome(f"outcome {x!r} not in {self.outcomes}")


@dataclass(frozen=True)
class InstrumentDiagnostics:
    """Result of :func:`validate`."""

    trace_residual: float
    choi_min_eigenvalue: dict = field(default_factory=dict)
    passes: bool = False


def _check_dims(inst: Instrument, rho: np.ndarray) -> None:
    if rho.shape != (inst.dim, inst.dim):
        raise DimensionMismatch(f"state shape {rho.shape} does not match instrument dim {inst.dim}")


def validate(inst: Instrument, tol: float = linalg.DEFAULT_TOL) -> InstrumentDiagnostics:
    """Diagnose trace preservation and complete positivity.

    Reports ``||sum K^dag K - I||_F`` and the minimum Choi eigenvalue per
    outcome; passes iff the residual is <= tol and every Choi matrix is
    PSD within tol.
    """
    total = np.zeros((inst.dim, inst.dim), dtype=complex)
    for ops in inst.kraus:
        for k in ops:
            total += dagger(k) @ k
    residual = frobenius(total - np.eye(inst.dim))
    choi_min = {}
    for x in inst.outcomes:
        j = choi_matrix(inst, x)
        choi_min[x] = float(np.linalg.eigvalsh((j + dagger(j)) / 2)[0])
    passes = residual <= tol and all(v >= -tol for v in choi_min.values())
    return InstrumentDiagnostics(trace_residual=float(residual), choi_min_eigenvalue=choi_min, passes=passes)


def require_valid(inst: Instrument, tol: float = linalg.DEFAULT_TOL) -> None:
    diag = validate(inst, tol)
    if not diag.passes:
        raise InvalidInstrument(
            f"instrument invalid: trace residual {diag.trace_residual:.3e}, "
            f"min Choi eigenvalue {min(diag.choi_min_eigenvalue.values()):.3e}"
        )


def povm(inst: Instrument) -> Povm:
    """Effects Pi(x) = sum_k K^dag K; they sum to the identity for a valid instrument."""
    effects = []
    for ops in inst.kraus:
        e = np.zeros((inst.dim, inst.dim), dtype=complex)
        for k in ops:
            e += dagger(k) @ k
        effects.append((e + dagger(e)) / 2)
    return Povm(outcomes=inst.outcomes, effects=tuple(effects))


def apply_outcome(inst: Instrument, x: float, rho: np.ndarray) -> np.ndarray:
    """Unnormalized branch sum_k K rho K^dag; its trace is the outcome probability."""
    rho = np.asarray(rho, dtype=complex)
    _check_dims(inst, rho)
    out = np.zeros_like(rho)
    for k in inst.kraus_for(x):
        out += k @ rho @ dagger(k)
    return out


def outcome_probability(inst: Instrument, x: float, rho: np.ndarray) -> float:
    """Born probability Tr[I(x) rho]."""
    return float(np.trace(apply_outcome(inst, x, rho)).real)


def total_map(inst: Instrument, rho: np.ndarray) -> np.ndarray:
    """Unconditioned update I(X) rho = sum_x I(x) rho."""
    rho = np.asarray(rho, dtype=complex)
    _check_dims(inst, rho)
    out = np.zeros_like(rho)
    for ops in inst.kraus:
        for k in ops:
            out += k @ rho @ dagger(k)
    return out


def state_update(inst: Instrument, x: float, rho: np.ndarray, p_floor: float = P_FLOOR) -> np.ndarray:
    """Conditional post-measurement state I(x) rho / Tr[I(x) rho]."""
    branch = apply_outcome(inst, x, rho)
    p = float(np.trace(branch).real)
    if p <= p_floor:
        raise ZeroProbabilityConditioning(f"outcome {x!r} has probability {p:.3e} <= {p_floor:.1e}")
    return branch / p


def sequential_joint(seq, rho: np.ndarray) -> float:
    """Joint probability of an outcome sequence, first measurement first.

    ``seq`` is a sequence of ``(instrument, outcome)`` pairs; returns
    ``Tr[I_n(x_n) ... I_1(x_1) rho]``.
    """
    current = np.asarray(rho, dtype=complex)
    for inst, x in seq:
        _check_dims(inst, current)
        current = apply_outcome(inst, x, current)
    return float(np.trace(current).real)


def conditional_probability(
    a: Instrument, x: float, b: Instrument, y: float, rho: np.ndarray, p_floor: float = P_FLOOR
) -> float:
    """P(B=y | A=x || rho) = Tr[I_B(y) I_A(x) rho] / Tr[I_A(x) rho]."""
    p_first = outcome_probability(a, x, rho)
    if p_first <= p_floor:
        raise ZeroProbabilityConditioning(f"conditioning outcome {x!r} has probability {p_first:.3e}")
    return sequential_joint([(a, x), (b, y)], rho) / p_first


def superoperator_matrix(inst: Instrument, x: float) -> np.ndarray:
    """d^2 x d^2 matrix M with M vec(rho) = vec(I(x) rho) (column stacking)."""
    d = inst.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    for k in inst.kraus_for(x):
        m += np.kron(k.conj(), k)
    return m


def total_superoperator(inst: Instrument) -> np.ndarray:
    """Superoperator matrix of the unconditioned map I(X)."""
    d = inst.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    for x in inst.outcomes:
        m += superoperator_matrix(inst, x)
    return m


def choi_matrix(inst: Instrument, x: float) -> np.ndarray:
    """Choi matrix sum_ij E_ij (x) map(E_ij); PSD iff the branch map is CP.

    With column-stacked ``vec`` this is ``sum_k vec(K_k) vec(K_k)^dag``.
    """
    d = inst.dim
    j = np.zeros((d * d, d * d), dtype=complex)
    for k in inst.kraus_for(x):
        w = vec(k)
        j += np.outer(w, w.conj())
    return j


def canonical_kraus(inst: Instrument, x: float, cutoff: float = 1e-12) -> tuple[np.ndarray, ...]:
    """Minimal Kraus family from the Choi eigendecomposition.

    Eigenvalues below ``cutoff`` are dropped; operators are ordered by
    decreasing eigenvalue.  Unique up to phases (and mixing within
    degenerate eigenvalues), which leaves the map itself unchanged.
    """
    d = inst.dim
    j = choi_matrix(inst, x)
    w, v = np.linalg.eigh((j + dagger(j)) / 2)
    ops = []
    for i in range(len(w) - 1, -1, -1):
        if w[i] < cutoff:
            break
        ops.append(np.sqrt(w[i]) * linalg.unvec(v[:, i], d))
    if not ops:
        raise InvalidInstrument(f"outcome {x!r}: branch map is numerically zero")
    return tuple(ops)


def canonicalize(inst: Instrument, cutoff: float = 1e-12) -> Instrument:
    """Same instrument with each branch in canonical minimal Kraus form."""
    return Instrument(
        dim=inst.dim,
        outcomes=inst.outcomes,
        kraus=tuple(canonical_kraus(inst, x, cutoff) for x in inst.outcomes),
    )
