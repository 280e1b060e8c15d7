"""Smooth parameterizations of unitaries and pure states.

A real vector of length ``dim**2`` is mapped to a skew-adjoint generator
``G`` and then to ``U = exp(G)``.  Layout: the first ``dim`` entries are the
imaginary diagonal (``G[i, i] = i * t``); the remaining ``dim * (dim - 1)``
entries come in (re, im) pairs, one per index pair ``i < j`` in row order,
with ``G[i, j] = re + i * im`` and ``G[j, i] = -conj(G[i, j])``.

The exponential is evaluated through the eigendecomposition of the
Hermitian matrix ``-i G``, so the chart is exactly unitary up to
floating-point roundoff.
"""

from __future__ import annotations

import numpy as np

from .errors import BadParameterLength


def skew_generator(dim: int, params) -> np.ndarray:
    p = np.asarray(params, dtype=float)
    if p.shape != (dim * dim,):
        raise BadParameterLength(f"expected {dim * dim} parameters for dim {dim}, got {p.shape}")
    g = np.zeros((dim, dim), dtype=complex)
    g[np.diag_indices(dim)] = 1j * p[:dim]
    k = dim
    for i in range(dim):
        for j in range(i + 1, dim):
            g[i, j] = p[k] + 1j * p[k + 1]
            g[j, i] = -p[k] + 1j * p[k + 1]
            k += 2
    return g


def unitary_from_params(dim: int, params) -> np.ndarray:
    """exp of the skew-adjoint generator assembled from ``params``."""
    if dim == 2:
        p = np.asarray(params, dtype=float)
        if p.shape != (4,):
            raise BadParameterLength(f"expected 4 parameters for dim 2, got {p.shape}")
        return _exp_skew_2x2(p[0], p[1], p[2], p[3])
    g = skew_generator(dim, params)
    w, v = np.linalg.eigh(-1j * g)
    return (v * np.exp(1j * w)) @ v.conj().T


def _exp_skew_2x2(p0: float, p1: float, re: float, im: float) -> np.ndarray:
    """Closed-form exp of [[i p0, re + i im], [-re + i im, i p1]].

    Writing the Hermitian part as c I + m . sigma gives
    exp = e^{ic} (cos|m| I + i sin|m| (m . sigma)/|m|).
    """
    c = 0.5 * (p0 + p1)
    mx, my, mz = im, re, 0.5 * (p0 - p1)
    norm = np.sqrt(mx * mx + my * my + mz * mz)
    phase = np.exp(1j * c)
    if norm == 0.0:
        return phase * np.eye(2, dtype=complex)
    f = 1j * np.sin(norm) / norm
    cosn = np.cos(norm)
    return phase * np.array(
        [
            [cosn + f * mz, f * (mx - 1j * my)],
            [f * (mx + 1j * my), cosn - f * mz],
        ],
        dtype=complex,
    )


def pure_state_from_params(dim: int, params) -> np.ndarray:
    """First column of the chart unitary: a pure state sweeping the sphere."""
    return unitary_from_params(dim, params)[:, 0]
