"""Measurement taxonomy: sharp/unsharp, repeatable, projective, invasive.

Predicates compose several eigensolves, so the default tolerance here is
looser (1e-8) than the linear-algebra defaults.  All predicates are
evaluated at the given tolerance with no hysteresis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import instrument as qi
from . import linalg
from .errors import DimensionMismatch, ValidationError
from .linalg import dagger, frobenius

CLASSIFY_TOL = 1e-8

TAXON_PROJECTIVE = "P"
TAXON_SHARP_REPEATABLE_NONPROJECTIVE = "SRPbar"
TAXON_SHARP_NONREPEATABLE = "SRbar"
TAXON_UNSHARP = "Unsharp"


@dataclass(frozen=True)
class ClassLabel:
    sharp: bool
    repeatable: bool
    projective: bool
    invasive: bool
    taxon: str

    def __post_init__(self):
        if self.taxon == TAXON_PROJECTIVE and not (self.sharp and self.repeatable and self.projective):
            raise ValidationError("taxon P requires sharp, repeatable and projective")
        if self.taxon == TAXON_SHARP_REPEATABLE_NONPROJECTIVE and not (
            self.sharp and self.repeatable and not self.projective
        ):
            raise ValidationError("taxon SRPbar requires sharp, repeatable, non-projective")
        if self.projective and not (self.sharp and self.repeatable):
            raise ValidationError("projective implies sharp and repeatable")


@dataclass(frozen=True)
class InvasivenessReport:
    global_noninvasive: bool
    global_residual: float
    state_noninvasive: Optional[bool] = None
    state_residual: Optional[float] = None


def is_sharp(inst: qi.Instrument, tol: float = CLASSIFY_TOL) -> bool:
    """True iff every POVM effect is a projection and effects are mutually orthogonal."""
    qi.require_valid(inst)
    effects = qi.povm(inst).effects
    for e in effects:
        if frobenius(e - dagger(e)) > tol or frobenius(e @ e - e) > tol:
            return False
    for i in range(len(effects)):
        for j in range(i + 1, len(effects)):
            if frobenius(effects[i] @ effects[j]) > tol:
                return False
    return True


def is_repeatable(inst: qi.Instrument, tol: float = CLASSIFY_TOL) -> bool:
    """True iff re-measurement reproduces each outcome with probability one.

    Checked as the operator identity I(x)*[Pi(x)] = Pi(x) per outcome, where
    the dual acts on effects as sum_k K^dag E K; this is equivalent to
    P(A=x, A=x || rho) = P(A=x || rho) for every state.
    """
    qi.require_valid(inst)
    effects = qi.povm(inst)
    for x, ops in zip(inst.outcomes, inst.kraus):
        e = effects.effect_for(x)
        pulled = np.zeros_like(e)
        for k in ops:
            pulled += dagger(k) @ e @ k
        if frobenius(pulled - e) > tol:
            return False
    return True


def is_projective(inst: qi.Instrument, tol: float = CLASSIFY_TOL) -> bool:
    """True iff sharp and each branch update equals rho -> Pi(x) rho Pi(x)."""
    if not is_sharp(inst, tol):
        return False
    effects = qi.povm(inst)
    for x in inst.outcomes:
        e = effects.effect_for(x)
        target = np.kron(e.conj(), e)
        if frobenius(qi.superoperator_matrix(inst, x) - target) > tol:
            return False
    return True


def invasiveness(
    inst: qi.Instrument, rho: Optional[np.ndarray] = None, tol: float = CLASSIFY_TOL
) -> InvasivenessReport:
    """Whether the unconditioned map I(X) is the identity, globally and at rho."""
    qi.require_valid(inst)
    d = inst.dim
    global_residual = frobenius(qi.total_superoperator(inst) - np.eye(d * d))
    state_flag = None
    state_residual = None
    if rho is not None:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (d, d):
            raise DimensionMismatch(f"state shape {rho.shape} does not match instrument dim {d}")
        state_residual = frobenius(qi.total_map(inst, rho) - rho)
        state_flag = state_residual <= tol
    return InvasivenessReport(
        global_noninvasive=global_residual <= tol,
        global_residual=float(global_residual),
        state_noninvasive=state_flag,
        state_residual=None if state_residual is None else float(state_residual),
    )


def classify_label(inst: qi.Instrument, tol: float = CLASSIFY_TOL) -> ClassLabel:
    """Assemble the taxon from the three predicates.

    The taxon ignores invasiveness (reported separately as a flag): sharp
    splits into repeatable/non-repeatable, and sharp repeatable splits into
    projective (P) and non-projective (SRPbar).
    """
    sharp = is_sharp(inst, tol)
    repeatable = is_repeatable(inst, tol)
    projective = is_projective(inst, tol) if sharp else False
    invasive = not invasiveness(inst, tol=tol).global_noninvasive
    if not sharp:
        taxon = TAXON_UNSHARP
    elif not repeatable:
        taxon = TAXON_SHARP_NONREPEATABLE
    elif projective:
        taxon = TAXON_PROJECTIVE
    else:
        taxon = TAXON_SHARP_REPEATABLE_NONPROJECTIVE
    return ClassLabel(sharp=sharp, repeatable=repeatable, projective=projective, invasive=invasive, taxon=taxon)
