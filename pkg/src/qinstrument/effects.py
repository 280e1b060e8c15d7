"""Cognitive-effect diagnostics for pairs of instruments.

Covers the question order effect (order dependence of sequential joint
distributions), response replicability (A-A, A-B-A, B-A-B), the QQ-equality
for binary questions, violation of the formula of total probability,
noncommutativity of state-update maps versus observables, state-dependent
commutation, joint-distribution existence via projection meets, and the
Robertson standard-deviation bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import instrument as qi
from . import linalg
from .errors import DimensionMismatch, NotBinaryOutcomes
from .linalg import SpectralDecomposition, frobenius, unvec, vec

QOE_TOL = 1e-8


def _require_equal_dims(a: qi.Instrument, b: qi.Instrument) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"instrument dims differ: {a.dim} vs {b.dim}")


@dataclass(frozen=True)
class QoeReport:
    """Order dependence of the sequential joint distribution at one state.

    ``deviations[(x, y)]`` is p(A=x, B=y || rho) - p(B=y, A=x || rho);
    ``trace_commutators[(x, y)]`` is |Tr[[I_A(x), I_B(y)] rho]| computed
    through superoperator matrices.  The two channels agree in absolute
    value up to floating-point noise.
    """

    deviations: dict
    trace_commutators: dict
    max_abs_deviation: float
    shows_qoe: bool


def qoe_report(a: qi.Instrument, b: qi.Instrument, rho: np.ndarray, tol: float = QOE_TOL) -> QoeReport:
    _require_equal_dims(a, b)
    rho = np.asarray(rho, dtype=complex)
    d = a.dim
    supers_a = {x: qi.superoperator_matrix(a, x) for x in a.outcomes}
    supers_b = {y: qi.superoperator_matrix(b, y) for y in b.outcomes}
    v = vec(rho)
    deviations = {}
    trace_comms = {}
    for x in a.outcomes:
        for y in b.outcomes:
            p_ab = qi.sequential_joint([(a, x), (b, y)], rho)
            p_ba = qi.sequential_joint([(b, y), (a, x)], rho)
            deviations[(x, y)] = p_ab - p_ba
            comm = supers_a[x] @ supers_b[y] - supers_b[y] @ supers_a[x]
            trace_comms[(x, y)] = abs(complex(np.trace(unvec(comm @ v, d))))
    max_dev = max(abs(val) for val in deviations.values())
    return QoeReport(
        deviations=deviations,
        trace_commutators=trace_comms,
        max_abs_deviation=float(max_dev),
        shows_qoe=max_dev > tol,
    )


def u_commutator_norm(a: qi.Instrument, x: float, b: qi.Instrument, y: float) -> float:
    """Frobenius norm of the commutator of the two update superoperators.

    Zero iff the branch maps I_A(x) and I_B(y) commute as maps; a nonzero
    value is the update-noncommutativity sufficient for an order effect in
    some state.
    """
    _require_equal_dims(a, b)
    ma = qi.superoperator_matrix(a, x)
    mb = qi.superoperator_matrix(b, y)
    return frobenius(ma @ mb - mb @ ma)


def o_commutator_norm(obs_a: SpectralDecomposition, obs_b: SpectralDecomposition) -> float:
    """Frobenius norm of [A, B] for the reconstructed observables."""
    return frobenius(linalg.commutator(obs_a.observable(), obs_b.observable()))


@dataclass(frozen=True)
class RreReport:
    """Replicability residuals, maximized over outcome tuples."""

    aa_residual: float
    aba_residual: float
    bab_residual: float


def rre_report(a: qi.Instrument, b: qi.Instrument, rho: np.ndarray) -> RreReport:
    """Residuals of the A-A, A-B-A and B-A-B replicability equalities at rho.

    All comparisons are at the joint-probability level, so zero-probability
    branches hold trivially and no conditioning division occurs.
    """
    _require_equal_dims(a, b)
    rho = np.asarray(rho, dtype=complex)
    aa = max(
        abs(qi.sequential_joint([(a, x), (a, x)], rho) - qi.outcome_probability(a, x, rho))
        for x in a.outcomes
    )
    aba = max(
        abs(
            qi.sequential_joint([(a, x), (b, y), (a, x)], rho)
            - qi.sequential_joint([(a, x), (b, y)], rho)
        )
        for x in a.outcomes
        for y in b.outcomes
    )
    bab = max(
        abs(
            qi.sequential_joint([(b, y), (a, x), (b, y)], rho)
            - qi.sequential_joint([(b, y), (a, x)], rho)
        )
        for x in a.outcomes
        for y in b.outcomes
    )
    return RreReport(aa_residual=float(aa), aba_residual=float(aba), bab_residual=float(bab))


@dataclass(frozen=True)
class QqReport:
    """QQ-equality value for a binary pair.

    ``q`` is the diagonal combination p(ByAy) + p(BnAn) - p(AyBy) - p(AnBn);
    ``q_alt`` is the complementary off-diagonal combination, which is
    identically -q because each order's joints sum to one.  ``q_y`` and
    ``q_n`` split q per answer.
    """

    q: float
    q_alt: float
    q_y: float
    q_n: float


def qq_value(
    a: qi.Instrument,
    b: qi.Instrument,
    rho: np.ndarray,
    yes_a: Optional[float] = None,
    yes_b: Optional[float] = None,
) -> QqReport:
    """Evaluate the QQ combination; by default the larger outcome is "yes"."""
    _require_equal_dims(a, b)
    if a.n_outcomes != 2 or b.n_outcomes != 2:
        raise NotBinaryOutcomes(
            f"QQ-equality needs binary instruments, got {a.n_outcomes} and {b.n_outcomes} outcomes"
        )
    rho = np.asarray(rho, dtype=complex)
    ya = max(a.outcomes) if yes_a is None else yes_a
    yb = max(b.outcomes) if yes_b is None else yes_b
    na = [x for x in a.outcomes if x != ya][0]
    nb = [y for y in b.outcomes if y != yb][0]

    def p_ab(x, y):
        return qi.sequential_joint([(a, x), (b, y)], rho)

    def p_ba(y, x):
        return qi.sequential_joint([(b, y), (a, x)], rho)

    q_y = p_ba(yb, ya) - p_ab(ya, yb)
    q_n = p_ba(nb, na) - p_ab(na, nb)
    q = p_ba(yb, ya) + p_ba(nb, na) - (p_ab(ya, yb) + p_ab(na, nb))
    q_alt = p_ba(yb, na) + p_ba(nb, ya) - (p_ab(ya, nb) + p_ab(na, yb))
    return QqReport(q=float(q), q_alt=float(q_alt), q_y=float(q_y), q_n=float(q_n))


def ftp_residual(a: qi.Instrument, b: qi.Instrument, y: float, rho: np.ndarray) -> float:
    """Violation of the formula of total probability for B=y with A interposed.

    p(B=y || rho) - sum_x p(A=x || rho) p(B=y | A=x || rho).  Each term of the
    sum equals the sequential joint p(A=x, B=y || rho), which is used directly
    so that zero-probability branches contribute their joint without division.
    """
    _require_equal_dims(a, b)
    rho = np.asarray(rho, dtype=complex)
    direct = qi.outcome_probability(b, y, rho)
    through = sum(qi.sequential_joint([(a, x), (b, y)], rho) for x in a.outcomes)
    return float(direct - through)


@dataclass(frozen=True)
class JointExistenceReport:
    """Outcome of the ordered-product vs projection-meet comparison."""

    exists: bool
    joint: Optional[dict]
    max_disagreement: float


def joint_existence(
    observables: Sequence[SpectralDecomposition], psi: np.ndarray, tol: float = 1e-10
) -> JointExistenceReport:
    """Test whether a family of observables has a joint distribution in psi.

    For every outcome tuple, all n! ordered products ||E_1 ... E_n psi||^2
    are compared with the meet expression ||(E_1 /\\ ... /\\ E_n) psi||^2.
    The joint exists iff every tuple agrees within tol; the returned
    distribution is the meet-based one.
    """
    psi = linalg.require_state_vector(psi)
    dim = psi.shape[0]
    for obs in observables:
        if obs.dim != dim:
            raise DimensionMismatch(f"observable dim {obs.dim} does not match state dim {dim}")
    n = len(observables)
    joint = {}
    max_gap = 0.0
    exists = True
    for tup in itertools.product(*(obs.outcomes for obs in observables)):
        projs = [obs.projection_for(x) for obs, x in zip(observables, tup)]
        values = []
        for order in itertools.permutations(range(n)):
            v = psi
            for i in reversed(order):
                v = projs[i] @ v
            values.append(float(np.vdot(v, v).real))
        meet_value = float(np.linalg.norm(linalg.meet_all(projs) @ psi) ** 2)
        values.append(meet_value)
        gap = max(values) - min(values)
        max_gap = max(max_gap, gap)
        if gap > tol:
            exists = False
        joint[tup] = meet_value
    return JointExistenceReport(
        exists=exists, joint=joint if exists else None, max_disagreement=float(max_gap)
    )


@dataclass(frozen=True)
class StateCommutationReport:
    """State-dependent commutativity diagnostics.

    ``observable_term``: |<psi|[A1, A2]|psi>| (or |Tr[rho [A1, A2]]|);
    ``update_term``: max over (x, y) of ||[I_1(x), I_2(y)] rho||_F;
    ``projection_term``: max over (x, y) of ||[E_1(x), E_2(y)] psi||
    (Frobenius norm against rho when a density operator is supplied).
    """

    observable_term: float
    update_term: float
    projection_term: float


def state_dependent_commutation(
    a1: np.ndarray, a2: np.ndarray, i1: qi.Instrument, i2: qi.Instrument, state: np.ndarray
) -> StateCommutationReport:
    _require_equal_dims(i1, i2)
    a1 = linalg.as_matrix(a1, "a1")
    a2 = linalg.as_matrix(a2, "a2")
    linalg.require_same_dim(a1, a2)
    state = np.asarray(state, dtype=complex)
    is_vector = state.ndim == 1
    psi = linalg.require_state_vector(state) if is_vector else None
    rho = linalg.pure_density(psi) if is_vector else state
    if rho.shape != (i1.dim, i1.dim):
        raise DimensionMismatch(f"state shape {state.shape} does not match instrument dim {i1.dim}")

    comm_obs = linalg.commutator(a1, a2)
    if is_vector:
        observable_term = abs(complex(np.vdot(psi, comm_obs @ psi)))
    else:
        observable_term = abs(complex(np.trace(rho @ comm_obs)))

    d = i1.dim
    v = vec(rho)
    update_term = 0.0
    for x in i1.outcomes:
        m1 = qi.superoperator_matrix(i1, x)
        for y in i2.outcomes:
            m2 = qi.superoperator_matrix(i2, y)
            update_term = max(update_term, frobenius(unvec((m1 @ m2 - m2 @ m1) @ v, d)))

    spec1 = linalg.spectral_decompose(a1)
    spec2 = linalg.spectral_decompose(a2)
    projection_term = 0.0
    for e1 in spec1.projections:
        for e2 in spec2.projections:
            comm = e1 @ e2 - e2 @ e1
            if is_vector:
                projection_term = max(projection_term, float(np.linalg.norm(comm @ psi)))
            else:
                projection_term = max(projection_term, frobenius(comm @ rho))

    return StateCommutationReport(
        observable_term=float(observable_term),
        update_term=float(update_term),
        projection_term=float(projection_term),
    )


@dataclass(frozen=True)
class RobertsonReport:
    lhs: float
    rhs: float
    holds: bool


def robertson_check(a: np.ndarray, b: np.ndarray, rho: np.ndarray, slack: float = 1e-10) -> RobertsonReport:
    """Check sigma(A) sigma(B) >= |<[A, B]>|/2 in the given state (hbar = 1)."""
    a = linalg.as_matrix(a, "a")
    b = linalg.as_matrix(b, "b")
    rho = linalg.as_matrix(rho, "state")
    linalg.require_same_dim(a, b)
    linalg.require_same_dim(a, rho)
    lhs = linalg.std_dev(a, rho) * linalg.std_dev(b, rho)
    rhs = abs(complex(np.trace(rho @ (a @ b - b @ a)))) / 2
    return RobertsonReport(lhs=float(lhs), rhs=float(rhs), holds=bool(lhs >= rhs - slack))
