"""Small numerical kernels shared across modules."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def sum_over_product_max(
    f: Callable[[np.ndarray], np.ndarray],
    arrays: Sequence[np.ndarray],
    weights: Sequence[np.ndarray] | None = None,
) -> float:
    """``Σ_{i_1,…,i_k} w_1[i_1]⋯w_k[i_k] · f(max_a arrays[a][i_a])``.

    Evaluated without forming the product: with ``W_a(v)`` the weight of
    entries ``≤ v`` on axis ``a``, the weight of product cells whose maximum
    equals ``v`` is the jump of ``∏_a W_a`` at ``v``.  Cost is
    ``O(Σ n_a log Σ n_a)``.
    """
    arrays = [np.asarray(a, dtype=float).ravel() for a in arrays]
    if any(a.size == 0 for a in arrays):
        return 0.0
    if weights is None:
        weights = [np.ones(a.size) for a in arrays]
    vals = np.unique(np.concatenate(arrays))
    prod = np.ones(vals.size)
    for a, w in zip(arrays, weights):
        order = np.argsort(a, kind="stable")
        cw = np.concatenate([[0.0], np.cumsum(np.asarray(w, dtype=float).ravel()[order])])
        prod = prod * cw[np.searchsorted(a[order], vals, side="right")]
    jump = np.diff(prod, prepend=0.0)
    return float(np.dot(f(vals), jump))


def product_max(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Dense ``max_a arrays[a][i_a]`` over the full index product."""
    k = len(arrays)
    out = None
    for a, arr in enumerate(arrays):
        shape = [1] * k
        shape[a] = arr.size
        v = np.asarray(arr, dtype=float).reshape(shape)
        out = v if out is None else np.maximum(out, v)
    return out


def format_float(x: float) -> str:
    """17 significant digits, '.' decimal separator."""
    return format(float(x), ".17g")
