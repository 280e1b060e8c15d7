"""Constructors for canonical instrument families.

All constructors build single-Kraus branches except :func:`random_unsharp`,
which is the only source of multi-Kraus instruments here.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .charts import unitary_from_params
from .errors import BadParameters, BadWeights, IncompatibleUnitaries
from .instrument import Instrument
from .linalg import SpectralDecomposition, dagger, frobenius


def projective_instrument(spec: SpectralDecomposition) -> Instrument:
    """Lueders instrument of an observable: branch x is rho -> E(x) rho E(x)."""
    return Instrument(
        dim=spec.dim,
        outcomes=spec.outcomes,
        kraus=tuple((e,) for e in spec.projections),
    )


def check_intra_eigenspace(spec: SpectralDecomposition, w: dict, tol: float = 1e-9) -> None:
    """Validate that each W_x is unitary and maps range E(x) into itself."""
    for x, wx in w.items():
        e = spec.projection_for(x)
        wx = np.asarray(wx, dtype=complex)
        if wx.shape != e.shape:
            raise IncompatibleUnitaries(f"W for outcome {x!r} has shape {wx.shape}, expected {e.shape}")
        if frobenius(dagger(wx) @ wx - np.eye(spec.dim)) > tol:
            raise IncompatibleUnitaries(f"W for outcome {x!r} is not unitary within {tol:.1e}")
        if frobenius(wx @ e - e @ wx @ e) > tol:
            raise IncompatibleUnitaries(f"W for outcome {x!r} does not preserve range E({x!r})")


def srp_instrument(spec: SpectralDecomposition, w: dict) -> Instrument:
    """Sharp repeatable instrument with Kraus W_x E(x).

    ``w`` maps outcomes to unitaries that leave the corresponding eigenspace
    invariant; missing outcomes default to the identity.  The POVM equals the
    spectral projections, so the instrument is sharp and repeatable; it is
    non-projective iff some W_x acts non-trivially (beyond a phase) on an
    eigenspace of dimension >= 2.
    """
    check_intra_eigenspace(spec, w)
    eye = np.eye(spec.dim, dtype=complex)
    kraus = []
    for x, e in zip(spec.outcomes, spec.projections):
        wx = np.asarray(w.get(x, eye), dtype=complex)
        kraus.append((wx @ e,))
    return Instrument(dim=spec.dim, outcomes=spec.outcomes, kraus=tuple(kraus))


def intra_unitary(spec: SpectralDecomposition, x: float, block: np.ndarray) -> np.ndarray:
    """Embed a small unitary acting on range E(x), identity on the complement."""
    e = spec.projection_for(x)
    w_eig, v = np.linalg.eigh(e)
    basis = v[:, w_eig > 0.5]
    r = basis.shape[1]
    block = np.asarray(block, dtype=complex)
    if block.shape != (r, r):
        raise BadParameters(f"block for outcome {x!r} must be {r}x{r}, got {block.shape}")
    return np.eye(spec.dim, dtype=complex) - basis @ dagger(basis) + basis @ block @ dagger(basis)


def trivial_noninvasive(dim: int, weights) -> Instrument:
    """Instrument with branches k_x * id: globally non-invasive, unsharp unless a weight is one."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise BadWeights("weights must be a nonempty 1-d vector")
    if np.any(w < 0):
        raise BadWeights(f"weights must be nonnegative, got {w.tolist()}")
    if abs(float(w.sum()) - 1.0) > 1e-9:
        raise BadWeights(f"weights sum to {float(w.sum())!r}, expected 1")
    eye = np.eye(dim, dtype=complex)
    return Instrument(
        dim=dim,
        outcomes=tuple(float(i) for i in range(w.size)),
        kraus=tuple((np.sqrt(k) * eye,) for k in w),
    )


def random_unsharp(dim: int, n_outcomes: int, seed: int, n_kraus: int = 2) -> Instrument:
    """Seeded random instrument with genuinely unsharp POVM.

    Kraus operators are complex Gaussian draws, right-normalized by the
    inverse square root of ``sum K^dag K``.  Draws where some effect is
    within 1e-6 of a projection (or the normalizer is near-singular) are
    rejected and re-sampled, so the result is never close to sharp.
    Deterministic per seed.
    """
    if dim < 2 or n_outcomes < 2:
        raise BadParameters("random_unsharp needs dim >= 2 and n_outcomes >= 2")
    rng = np.random.default_rng(seed)
    while True:
        raw = [
            [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(n_kraus)]
            for _ in range(n_outcomes)
        ]
        total = np.zeros((dim, dim), dtype=complex)
        for ops in raw:
            for k in ops:
                total += dagger(k) @ k
        w, v = np.linalg.eigh((total + dagger(total)) / 2)
        if w[0] < 1e-8:
            continue
        inv_sqrt = (v * (w ** -0.5)) @ dagger(v)
        kraus = tuple(tuple(k @ inv_sqrt for k in ops) for ops in raw)
        effects = []
        for ops in kraus:
            e = np.zeros((dim, dim), dtype=complex)
            for k in ops:
                e += dagger(k) @ k
            effects.append(e)
        if any(frobenius(e @ e - e) < 1e-6 for e in effects):
            continue
        return Instrument(
            dim=dim,
            outcomes=tuple(float(i) for i in range(n_outcomes)),
            kraus=kraus,
        )


def random_projective(dim: int, n_outcomes: int, seed: int) -> Instrument:
    """Seeded Lueders instrument of a random observable with ``n_outcomes`` levels.

    Eigenspace dimensions are a random composition of ``dim``; the
    eigenbasis is the Q factor of a complex Gaussian matrix.
    """
    if not 1 <= n_outcomes <= dim:
        raise BadParameters(f"n_outcomes must be in [1, {dim}]")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    cuts = sorted(rng.choice(np.arange(1, dim), size=n_outcomes - 1, replace=False).tolist())
    bounds = [0] + cuts + [dim]
    projections = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        block = q[:, lo:hi]
        projections.append(block @ dagger(block))
    spec = SpectralDecomposition(tuple(float(i) for i in range(n_outcomes)), tuple(projections))
    return projective_instrument(spec)


def wang_busemeyer_pair(theta: float) -> tuple[Instrument, Instrument]:
    """Two binary Lueders qubit instruments: Z basis, and the basis rotated by theta.

    Outcomes are +1 (yes) and -1 (no).  At theta = 0 the pair commutes; at
    theta = pi/4 the second question is measured in the X basis.
    """
    e0 = np.array([[1, 0], [0, 0]], dtype=complex)
    e1 = np.array([[0, 0], [0, 1]], dtype=complex)
    spec_a = SpectralDecomposition((1.0, -1.0), (e0, e1))
    c, s = np.cos(theta), np.sin(theta)
    b_plus = np.array([c, s], dtype=complex)
    b_minus = np.array([-s, c], dtype=complex)
    spec_b = SpectralDecomposition(
        (1.0, -1.0),
        (np.outer(b_plus, b_plus.conj()), np.outer(b_minus, b_minus.conj())),
    )
    return projective_instrument(spec_a), projective_instrument(spec_b)


OK_DIM = 4
OK_N_PARAMS = 16

# Index sets of the four rank-2 eigenspaces on C^4 = C^2 (x) C^2:
# A asks about the first factor, B about the second.
_OK_BLOCKS = (("a", 1.0, (0, 1)), ("a", 0.0, (2, 3)), ("b", 1.0, (0, 2)), ("b", 0.0, (1, 3)))


def ok_observable_specs() -> tuple[SpectralDecomposition, SpectralDecomposition]:
    """The fixed commuting binary observables diag(1,1,0,0) and diag(1,0,1,0)."""
    ea1 = np.diag([1, 1, 0, 0]).astype(complex)
    ea0 = np.diag([0, 0, 1, 1]).astype(complex)
    eb1 = np.diag([1, 0, 1, 0]).astype(complex)
    eb0 = np.diag([0, 1, 0, 1]).astype(complex)
    spec_a = SpectralDecomposition((1.0, 0.0), (ea1, ea0))
    spec_b = SpectralDecomposition((1.0, 0.0), (eb1, eb0))
    return spec_a, spec_b


def ok_intra_unitaries(params) -> dict:
    """The four eigenspace unitaries of the commuting family, keyed (question, outcome)."""
    p = np.asarray(params, dtype=float)
    if p.shape != (OK_N_PARAMS,):
        raise BadParameters(f"expected {OK_N_PARAMS} parameters, got shape {p.shape}")
    blocks = {}
    for (which, outcome, idx), chunk in zip(_OK_BLOCKS, p.reshape(4, 4)):
        u2 = unitary_from_params(2, chunk)
        w = np.eye(OK_DIM, dtype=complex)
        w[np.ix_(idx, idx)] = u2
        blocks[(which, outcome)] = w
    return blocks


def ok_kraus(params) -> tuple[list, list]:
    """Raw Kraus operators [W_x E(x)] for both questions, yes branch first.

    With W_x acting inside range E(x) and as the identity outside, the
    product W_x E(x) is just the 2x2 chart block placed on the eigenspace
    indices, zero elsewhere.
    """
    p = np.asarray(params, dtype=float)
    if p.shape != (OK_N_PARAMS,):
        raise BadParameters(f"expected {OK_N_PARAMS} parameters, got shape {p.shape}")
    by_question = {"a": [], "b": []}
    for (which, _outcome, idx), chunk in zip(_OK_BLOCKS, p.reshape(4, 4)):
        k = np.zeros((OK_DIM, OK_DIM), dtype=complex)
        k[np.ix_(idx, idx)] = unitary_from_params(2, chunk)
        by_question[which].append(k)
    return by_question["a"], by_question["b"]


def ok_commuting_pair(
    params,
) -> tuple[Instrument, Instrument, SpectralDecomposition, SpectralDecomposition]:
    """Sharp repeatable pair over exactly commuting dim-4 projections.

    The 16 parameters fill four U(2) charts (4 each), one per eigenspace,
    in the order A-yes, A-no, B-yes, B-no; each chart unitary acts inside
    its eigenspace and as the identity outside, so both instruments have
    Kraus W_x E(x).  At params = 0 both reduce to projective instruments.
    """
    blocks = ok_intra_unitaries(params)
    spec_a, spec_b = ok_observable_specs()
    inst_a = srp_instrument(spec_a, {x: blocks[("a", x)] for x in spec_a.outcomes})
    inst_b = srp_instrument(spec_b, {x: blocks[("b", x)] for x in spec_b.outcomes})
    return inst_a, inst_b, spec_a, spec_b
