"""Synthetic respondents: sample instrument sequences and estimate statistics.

Randomness comes from ``numpy.random.Generator`` with the PCG64 bit
generator seeded explicitly, so every run is reproducible from its seed.
Outcomes are drawn by inverse CDF over the instrument's outcome order.
Trajectories are advanced in vectorized batches; the per-trajectory law is
exactly "draw x with probability Tr[I(x) rho], then replace rho by the
normalized branch".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import instrument as qi
from .errors import DegenerateVariance, DimensionMismatch, EmptyTable, NegativeCount


@dataclass(frozen=True)
class SequenceStats:
    """Empirical counts of outcome tuples from repeated sequential runs."""

    counts: dict
    n: int

    @property
    def frequencies(self) -> dict:
        return {k: v / self.n for k, v in self.counts.items()}


@dataclass(frozen=True)
class QqStats:
    """Plug-in QQ estimate from split-ballot (between-subjects) tables."""

    q_hat: float
    q_se: float
    z: float
    n_ab: int
    n_ba: int


def simulate_sequence(seq: Sequence[qi.Instrument], rho: np.ndarray, n: int, seed: int) -> SequenceStats:
    """Run ``n`` independent trajectories through the instrument sequence."""
    if n < 1:
        raise ValueError("need at least one trajectory")
    rho = np.asarray(rho, dtype=complex)
    for inst in seq:
        if rho.shape != (inst.dim, inst.dim):
            raise DimensionMismatch(f"state shape {rho.shape} does not match instrument dim {inst.dim}")
    rng = np.random.default_rng(seed)
    states = np.broadcast_to(rho, (n,) + rho.shape).copy()
    drawn = np.zeros((n, len(seq)), dtype=np.int64)
    for step, inst in enumerate(seq):
        probs = np.empty((n, inst.n_outcomes))
        for i, ops in enumerate(inst.kraus):
            p = np.zeros(n)
            for k in ops:
                p += np.einsum("ab,nbc,ac->n", k, states, k.conj(), optimize=True).real
            probs[:, i] = p
        totals = probs.sum(axis=1)
        cdf = np.cumsum(probs, axis=1) / totals[:, None]
        u = rng.random(n)
        idx = (u[:, None] > cdf[:, :-1]).sum(axis=1)
        drawn[:, step] = idx
        new_states = np.empty_like(states)
        for i, ops in enumerate(inst.kraus):
            mask = idx == i
            if not np.any(mask):
                continue
            branch = np.zeros((int(mask.sum()),) + rho.shape, dtype=complex)
            for k in ops:
                branch += np.einsum("ab,nbc,dc->nad", k, states[mask], k.conj(), optimize=True)
            # the drawn branch has strictly positive trace; the floor only
            # guards the measure-zero event u == 0.0 landing on a null branch
            new_states[mask] = branch / np.maximum(probs[mask, i], 1e-300)[:, None, None]
        states = new_states
    counts = {}
    tuples, tuple_counts = np.unique(drawn, axis=0, return_counts=True)
    for row, c in zip(tuples, tuple_counts):
        key = tuple(seq[step].outcomes[i] for step, i in enumerate(row))
        counts[key] = int(c)
    return SequenceStats(counts=counts, n=n)


def _check_table(t, name: str) -> np.ndarray:
    t = np.asarray(t)
    if t.shape != (2, 2):
        raise EmptyTable(f"{name}: expected a 2x2 count table, got shape {t.shape}")
    if np.any(t < 0):
        raise NegativeCount(f"{name}: counts must be nonnegative")
    if t.sum() <= 0:
        raise EmptyTable(f"{name}: total count is zero")
    return t.astype(float)


def empirical_qq(counts_ab, counts_ba) -> QqStats:
    """Estimate the QQ combination from two 2x2 tables indexed [a_answer, b_answer].

    Row/column index 0 means "yes".  ``counts_ab`` holds respondents asked A
    first, ``counts_ba`` those asked B first.  The standard error treats the
    two arms as independent multinomials (split-ballot design); the z value
    is the plug-in estimate divided by that standard error.
    """
    tab = _check_table(counts_ab, "counts_ab")
    tba = _check_table(counts_ba, "counts_ba")
    n_ab = tab.sum()
    n_ba = tba.sum()
    p_ab = (tab[0, 0] + tab[1, 1]) / n_ab
    p_ba = (tba[0, 0] + tba[1, 1]) / n_ba
    q_hat = p_ba - p_ab
    var = p_ba * (1 - p_ba) / n_ba + p_ab * (1 - p_ab) / n_ab
    q_se = float(np.sqrt(var))
    if q_se == 0.0:
        raise DegenerateVariance("standard error is zero; z statistic undefined")
    return QqStats(q_hat=float(q_hat), q_se=q_se, z=float(q_hat / q_se), n_ab=int(n_ab), n_ba=int(n_ba))
