"""Constraint-driven search over instrument parameter manifolds.

A constraint set names effect diagnostics (order-effect deviation,
replicability residuals, |q|, FTP violation, commutator norms) with a
comparator and threshold.  The search minimizes the hinge penalty
``sum max(0, violation)^2`` over a family's parameter chart by random
restarts plus Nelder-Mead refinement, and reports the best point with its
diagnostics re-evaluated from scratch through the effects module, so the
``feasible`` flag never relies on optimizer bookkeeping.

Restart ``r`` draws its start from a generator seeded with ``seed + r``
(restart 0 starts at the chart origin), so runs are reproducible and
restarts could execute in parallel; the reported point is the one with the
minimal objective, ties broken by restart index.  Infeasibility is always a
budgeted claim: "no feasible point found within this budget", never a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from . import effects, models
from . import instrument as qi
from .charts import pure_state_from_params, unitary_from_params
from .errors import UnknownFamily
from .linalg import SpectralDecomposition, dagger, pure_density

__all__ = [
    "DIAGNOSTICS",
    "EffectConstraint",
    "EffectConstraintSet",
    "SearchBudget",
    "SearchResult",
    "evaluate_diagnostics",
    "family_names",
    "search_effects",
    "unitary_from_params",
]

DIAGNOSTICS = (
    "qoe_deviation",
    "aa_residual",
    "aba_residual",
    "bab_residual",
    "qq_abs",
    "ftp_abs",
    "u_comm_norm",
    "o_comm_norm",
)

_RESTART_SCALES = (0.25, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class EffectConstraint:
    diagnostic: str
    comparator: str  # "<=" or ">="
    threshold: float

    def __post_init__(self):
        if self.diagnostic not in DIAGNOSTICS:
            raise ValueError(f"unknown diagnostic {self.diagnostic!r}; choose from {DIAGNOSTICS}")
        if self.comparator not in ("<=", ">="):
            raise ValueError(f"comparator must be '<=' or '>=', got {self.comparator!r}")
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    def violation(self, value: float) -> float:
        if self.comparator == ">=":
            return self.threshold - value
        return value - self.threshold

    def satisfied(self, value: float) -> bool:
        return self.violation(value) <= 0.0


@dataclass(frozen=True)
class EffectConstraintSet:
    """Targets plus the state they are evaluated in (None = optimize over pure states)."""

    constraints: tuple[EffectConstraint, ...]
    state: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 100
    max_iters: int = 2000
    seed: int = 0


@dataclass(frozen=True)
class SearchResult:
    family: str
    params: np.ndarray
    state: np.ndarray
    diagnostics: dict
    feasible: bool
    objective: float
    iterations: int
    restarts_used: int
    seed: int


@dataclass(frozen=True)
class Family:
    """A parameterized pair of instruments (with optional observables).

    ``build`` returns validated instruments for reporting; ``build_raw``
    returns the same single-Kraus operators as bare arrays (yes branch
    first) for the optimizer's inner loop, skipping dataclass validation.
    """

    name: str
    dim: int
    n_params: int
    build: Callable = field(repr=False)
    build_raw: Callable = field(repr=False, default=None)


def _projective_pair_family(dim: int, projector_diag):
    base = np.diag(projector_diag).astype(complex)
    eye = np.eye(dim, dtype=complex)
    spec_a = SpectralDecomposition((1.0, 0.0), (base, eye - base))

    def build_raw(params):
        u = unitary_from_params(dim, params)
        pb = u @ base @ dagger(u)
        return [base, eye - base], [pb, eye - pb], (1.0, 0.0), (1.0, 0.0)

    def build(params):
        ka, kb, oa, ob = build_raw(params)
        spec_b = SpectralDecomposition(ob, (kb[0], kb[1]))
        return (
            models.projective_instrument(spec_a),
            models.projective_instrument(spec_b),
            spec_a,
            spec_b,
        )

    return build, build_raw


def _wb_build(params):
    theta = float(np.asarray(params, dtype=float)[0])
    a, b = models.wang_busemeyer_pair(theta)
    e0 = np.array([[1, 0], [0, 0]], dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    bp = np.array([c, s], dtype=complex)
    spec_a = SpectralDecomposition((1.0, -1.0), (e0, np.eye(2) - e0))
    pb = np.outer(bp, bp.conj())
    spec_b = SpectralDecomposition((1.0, -1.0), (pb, np.eye(2) - pb))
    return a, b, spec_a, spec_b


def _wb_build_raw(params):
    a, b, spec_a, spec_b = _wb_build(params)
    return list(spec_a.projections), list(spec_b.projections), spec_a.outcomes, spec_b.outcomes


def _ok4_build(params):
    return models.ok_commuting_pair(params)


def _ok4_build_raw(params):
    ka, kb = models.ok_kraus(params)
    return ka, kb, (1.0, 0.0), (1.0, 0.0)


_proj2_build, _proj2_raw = _projective_pair_family(2, [1, 0])
_proj4_build, _proj4_raw = _projective_pair_family(4, [1, 1, 0, 0])

FAMILIES = {
    "ok4": Family("ok4", dim=4, n_params=models.OK_N_PARAMS, build=_ok4_build, build_raw=_ok4_build_raw),
    "projective2": Family("projective2", dim=2, n_params=4, build=_proj2_build, build_raw=_proj2_raw),
    "projective4": Family("projective4", dim=4, n_params=16, build=_proj4_build, build_raw=_proj4_raw),
    "wb": Family("wb", dim=2, n_params=1, build=_wb_build, build_raw=_wb_build_raw),
}


def family_names() -> tuple[str, ...]:
    return tuple(sorted(FAMILIES))


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise UnknownFamily(f"unknown family {name!r}; known: {family_names()}") from None


def evaluate_diagnostics(
    inst_a: qi.Instrument,
    inst_b: qi.Instrument,
    obs_a: Optional[SpectralDecomposition],
    obs_b: Optional[SpectralDecomposition],
    rho: np.ndarray,
) -> dict:
    """Full effect battery for a pair at a state, via the effects module."""
    qoe = effects.qoe_report(inst_a, inst_b, rho)
    rre = effects.rre_report(inst_a, inst_b, rho)
    out = {
        "qoe_deviation": qoe.max_abs_deviation,
        "aa_residual": rre.aa_residual,
        "aba_residual": rre.aba_residual,
        "bab_residual": rre.bab_residual,
        "ftp_abs": max(abs(effects.ftp_residual(inst_a, inst_b, y, rho)) for y in inst_b.outcomes),
        "u_comm_norm": max(
            effects.u_commutator_norm(inst_a, x, inst_b, y)
            for x in inst_a.outcomes
            for y in inst_b.outcomes
        ),
    }
    if inst_a.n_outcomes == 2 and inst_b.n_outcomes == 2:
        out["qq_abs"] = abs(effects.qq_value(inst_a, inst_b, rho).q)
    if obs_a is not None and obs_b is not None:
        out["o_comm_norm"] = effects.o_commutator_norm(obs_a, obs_b)
    return out


def _penalty(values: dict, constraints) -> float:
    total = 0.0
    for c in constraints:
        v = c.violation(values[c.diagnostic])
        if v > 0.0:
            total += v * v
    return total


def _fast_diagnostics(ka, kb, outcomes_a, outcomes_b, psi, needed) -> dict:
    """Constrained diagnostics via pure-state chains over raw single-Kraus arrays."""
    a_psi = [k @ psi for k in ka]
    b_psi = [k @ psi for k in kb]
    ab = [[kb[j] @ a_psi[i] for j in range(len(kb))] for i in range(len(ka))]
    ba = [[ka[i] @ b_psi[j] for i in range(len(ka))] for j in range(len(kb))]

    def n2(v):
        return float(np.vdot(v, v).real)

    out = {}
    if "qoe_deviation" in needed or "qq_abs" in needed:
        p_ab = [[n2(v) for v in row] for row in ab]
        p_ba = [[n2(v) for v in row] for row in ba]
    if "qoe_deviation" in needed:
        out["qoe_deviation"] = max(
            abs(p_ab[i][j] - p_ba[j][i]) for i in range(len(ka)) for j in range(len(kb))
        )
    if "qq_abs" in needed:
        # outcome index of the larger ("yes") label per instrument
        iy = max(range(len(outcomes_a)), key=lambda i: outcomes_a[i])
        jy = max(range(len(outcomes_b)), key=lambda j: outcomes_b[j])
        ino, jno = 1 - iy, 1 - jy
        out["qq_abs"] = abs(
            p_ba[jy][iy] + p_ba[jno][ino] - (p_ab[iy][jy] + p_ab[ino][jno])
        )
    if "aa_residual" in needed:
        out["aa_residual"] = max(abs(n2(ka[i] @ a_psi[i]) - n2(a_psi[i])) for i in range(len(ka)))
    if "aba_residual" in needed:
        out["aba_residual"] = max(
            abs(n2(ka[i] @ ab[i][j]) - n2(ab[i][j])) for i in range(len(ka)) for j in range(len(kb))
        )
    if "bab_residual" in needed:
        out["bab_residual"] = max(
            abs(n2(kb[j] @ ba[j][i]) - n2(ba[j][i])) for i in range(len(ka)) for j in range(len(kb))
        )
    if "ftp_abs" in needed:
        out["ftp_abs"] = max(
            abs(n2(b_psi[j]) - sum(n2(ab[i][j]) for i in range(len(ka)))) for j in range(len(kb))
        )
    if "u_comm_norm" in needed:
        supers_a = [np.kron(k.conj(), k) for k in ka]
        supers_b = [np.kron(k.conj(), k) for k in kb]
        out["u_comm_norm"] = max(
            float(np.linalg.norm(ma @ mb - mb @ ma)) for ma in supers_a for mb in supers_b
        )
    if "o_comm_norm" in needed:
        # associated observables from the (projective) POVM: sum_x x K^dag K
        oa = sum(x * (dagger(k) @ k) for x, k in zip(outcomes_a, ka))
        ob = sum(y * (dagger(k) @ k) for y, k in zip(outcomes_b, kb))
        out["o_comm_norm"] = float(np.linalg.norm(oa @ ob - ob @ oa))
    return out


class _FeasiblePointFound(Exception):
    pass


def _refine(objective, x0, f0, max_iters):
    """Nelder-Mead rounds restarted from the incumbent; stops early at objective 0.

    Re-initializing the simplex at the best point lets the descent contract
    well past where a single Nelder-Mead run stagnates.
    """
    best = {"x": np.array(x0), "f": f0}

    def wrapped(x):
        f = objective(x)
        if f < best["f"]:
            best["x"] = np.array(x)
            best["f"] = f
        if f == 0.0:
            raise _FeasiblePointFound
        return f

    used = 0
    try:
        while used < max_iters and best["f"] > 0.0:
            f_before = best["f"]
            res = minimize(
                wrapped,
                best["x"],
                method="Nelder-Mead",
                options={
                    "maxiter": max_iters - used,
                    "xatol": 1e-12,
                    "fatol": 1e-24,
                    "adaptive": True,
                },
            )
            used += max(1, int(res.nit))
            if best["f"] >= f_before * (1 - 1e-9):
                break
    except _FeasiblePointFound:
        used += 1
    return best["x"], best["f"], used


def search_effects(family: str, constraints: EffectConstraintSet, budget: SearchBudget) -> SearchResult:
    """Minimize the constraint penalty over a family chart (plus a state chart).

    When ``constraints.state`` is None the state is searched as a pure state
    through the same unitary chart (first column applied to a basis vector)
    and the returned state is the corresponding density operator.
    """
    fam = get_family(family)
    optimize_state = constraints.state is None
    n_state = fam.dim * fam.dim if optimize_state else 0
    n_total = fam.n_params + n_state
    needed = {c.diagnostic for c in constraints.constraints}
    fixed_rho = None if optimize_state else np.asarray(constraints.state, dtype=complex)

    def split(x):
        return x[: fam.n_params], x[fam.n_params :]

    def objective(x):
        p, s = split(x)
        if optimize_state and fam.build_raw is not None:
            ka, kb, oa, ob = fam.build_raw(p)
            psi = pure_state_from_params(fam.dim, s)
            values = _fast_diagnostics(ka, kb, oa, ob, psi, needed)
        else:
            inst_a, inst_b, obs_a, obs_b = fam.build(p)
            rho = pure_density(pure_state_from_params(fam.dim, s)) if optimize_state else fixed_rho
            values = {
                k: v
                for k, v in evaluate_diagnostics(inst_a, inst_b, obs_a, obs_b, rho).items()
                if k in needed
            }
        return _penalty(values, constraints.constraints)

    best_x = np.zeros(n_total)
    best_f = np.inf
    best_restart = -1
    iterations = 0
    restarts_used = 0
    for r in range(budget.restarts):
        restarts_used = r + 1
        rng = np.random.default_rng(budget.seed + r)
        if r == 0:
            x0 = np.zeros(n_total)
        else:
            scale = _RESTART_SCALES[(r - 1) % len(_RESTART_SCALES)]
            x0 = rng.normal(0.0, scale, size=n_total)
        f0 = objective(x0)
        if budget.max_iters > 0 and f0 > 0.0:
            x1, f1, used = _refine(objective, x0, f0, budget.max_iters)
            iterations += used
        else:
            x1, f1 = x0, f0
        if f1 < best_f:
            best_x, best_f, best_restart = np.array(x1), f1, r
        if best_f == 0.0:
            break

    p, s = split(best_x)
    inst_a, inst_b, obs_a, obs_b = fam.build(p)
    rho = pure_density(pure_state_from_params(fam.dim, s)) if optimize_state else fixed_rho
    diagnostics = evaluate_diagnostics(inst_a, inst_b, obs_a, obs_b, rho)
    feasible = all(c.satisfied(diagnostics[c.diagnostic]) for c in constraints.constraints)
    return SearchResult(
        family=family,
        params=np.array(p),
        state=rho,
        diagnostics=diagnostics,
        feasible=feasible,
        objective=float(best_f),
        iterations=iterations,
        restarts_used=restarts_used,
        seed=budget.seed,
    )
