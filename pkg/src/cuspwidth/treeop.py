"""Weighted summation operators on rooted trees.

For a rooted tree with vertex weights ``g, v ≥ 0`` the operator is

    S f(ξ) = v(ξ) Σ_{ξ′ ≤ ξ} g(ξ′) f(ξ′),

the sum running over the path from the root to ``ξ``.  In matrix form
``S = D_v P D_g`` with ``P`` the (lower-triangular in BFS order) ancestor
matrix.  Its ``ℓ_p → ℓ_q`` norm is bounded by a constant times
``sup g·v`` when ``v`` decays geometrically along the tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParameterError, PreconditionError

EXHAUSTIVE_MAX_VERTICES = 14
DEFAULT_CEILING = 64.0


def _conj(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _lp(x: np.ndarray, p: float, axis=None) -> np.ndarray:
    x = np.abs(x)
    if math.isinf(p):
        return x.max(axis=axis)
    return (x**p).sum(axis=axis) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class WeightedTree:
    """A finite rooted tree with weights.

    Parameters
    ----------
    parents : sequence of int
        ``parents[i]`` is the parent of vertex ``i``; the root has ``-1``
        (``None`` is accepted too).
    g, v : sequence of float
        Non-negative vertex weights.
    p, q : float
        Exponents in ``[1, ∞]``.
    """

    parents: tuple
    g: np.ndarray
    v: np.ndarray
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        par = tuple(-1 if x is None else int(x) for x in self.parents)
        n = len(par)
        object.__setattr__(self, "parents", par)
        g = np.asarray(self.g, dtype=float).ravel()
        v = np.asarray(self.v, dtype=float).ravel()
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "v", v)
        if n == 0:
            raise ParameterError("tree must have at least one vertex")
        if g.size != n or v.size != n:
            raise ParameterError("g and v need one value per vertex")
        if np.any(~np.isfinite(g)) or np.any(~np.isfinite(v)) or np.any(g < 0) or np.any(v < 0):
            raise ParameterError("weights must be finite and non-negative")
        for name in ("p", "q"):
            x = float(getattr(self, name))
            if not x >= 1:
                raise ParameterError(f"{name} must lie in [1, inf]")
            object.__setattr__(self, name, x)
        roots = [i for i, x in enumerate(par) if x == -1]
        if len(roots) != 1:
            raise ParameterError("tree must have exactly one root")
        if any(not (-1 <= x < n) or x == i for i, x in enumerate(par)):
            raise ParameterError("parent index out of range")
        if len(self.order) != n:
            raise ParameterError("parent links contain a cycle or an unreachable vertex")

    @property
    def size(self) -> int:
        return len(self.parents)

    @cached_property
    def root(self) -> int:
        return self.parents.index(-1)

    @cached_property
    def children(self) -> list:
        ch = [[] for _ in range(len(self.parents))]
        for i, x in enumerate(self.parents):
            if x >= 0:
                ch[x].append(i)
        return ch

    @cached_property
    def order(self) -> list:
        """Vertices in breadth-first order from the root."""
        out = [self.parents.index(-1)]
        seen = {out[0]}
        head = 0
        while head < len(out):
            for c in self.children[out[head]]:
                if c in seen:
                    break
                seen.add(c)
                out.append(c)
            head += 1
        return out

    @cached_property
    def depth(self) -> np.ndarray:
        dep = np.zeros(self.size, dtype=int)
        for i in self.order[1:]:
            dep[i] = dep[self.parents[i]] + 1
        return dep

    @cached_property
    def ancestor_matrix(self) -> np.ndarray:
        """``P[ξ, ξ′] = 1`` iff ``ξ′`` lies on the root path of ``ξ``."""
        n = self.size
        P = np.zeros((n, n))
        for i in self.order:
            par = self.parents[i]
            if par >= 0:
                P[i] = P[par]
            P[i, i] = 1.0
        return P

    @property
    def matrix(self) -> np.ndarray:
        return self.v[:, None] * self.ancestor_matrix * self.g[None, :]

    def with_weights(self, g=None, v=None) -> "WeightedTree":
        return WeightedTree(self.parents, self.g if g is None else g,
                            self.v if v is None else v, self.p, self.q)

    def to_dict(self) -> dict:
        return {"parents": list(self.parents), "g": self.g.tolist(), "v": self.v.tolist()}

    @classmethod
    def from_dict(cls, data: dict, p: float = 2.0, q: float = 2.0) -> "WeightedTree":
        try:
            return cls(tuple(data["parents"]), data["g"], data["v"], p, q)
        except KeyError as exc:
            raise ParameterError(f"tree document lacks {exc.args[0]!r}") from None

    @classmethod
    def chain(cls, g, v, p: float = 2.0, q: float = 2.0) -> "WeightedTree":
        n = len(v)
        return cls(tuple(range(-1, n - 1)), g, v, p, q)


def apply(wt: WeightedTree, f) -> np.ndarray:
    """``S f`` by one prefix pass in breadth-first order.

    Examples
    --------
    >>> wt = WeightedTree.chain([1, 1, 1], [1, 1, 1])
    >>> apply(wt, [1, 1, 1]).tolist()
    [1.0, 2.0, 3.0]
    """
    f = np.asarray(f, dtype=float).ravel()
    if f.size != wt.size:
        raise ParameterError("f needs one value per vertex")
    gf = wt.g * f
    acc = np.zeros(wt.size)
    for i in wt.order:
        par = wt.parents[i]
        acc[i] = gf[i] + (acc[par] if par >= 0 else 0.0)
    return wt.v * acc


def decay_check(wt: WeightedTree, a: float, b: float, rtol: float = 1e-12) -> bool:
    """Exhaustive check of ``Σ_{η ∈ V_j(ξ)} v^q(η) ≤ b 2^{−aj} v^q(ξ)``.

    ``V_j(ξ)`` is the set of descendants of ``ξ`` exactly ``j`` generations
    below it; every vertex and every ``j ≥ 1`` present below it is checked.
    """
    if math.isinf(wt.q):
        raise ParameterError("decay_check needs q < inf")
    if not (a > 0 and b > 0):
        raise ParameterError("a and b must be positive")
    vq = wt.v**wt.q
    # level sums below each vertex: dict depth -> sum, built bottom-up
    below: list[dict] = [None] * wt.size
    for i in reversed(wt.order):
        sums: dict[int, float] = {}
        for c in wt.children[i]:
            sums[1] = sums.get(1, 0.0) + vq[c]
            for j, s in below[c].items():
                sums[j + 1] = sums.get(j + 1, 0.0) + s
        below[i] = sums
        for j, s in sums.items():
            if s > b * 2.0 ** (-a * j) * vq[i] * (1.0 + rtol):
                return False
    return True


@dataclass(frozen=True)
class NormEstimate:
    """``value`` is a certified lower bound; ``exact`` marks closed forms."""

    value: float
    method: str
    exact: bool
    heuristic: float | None = None


def _power_ascent(A: np.ndarray, p: float, q: float, starts: np.ndarray,
                  iters: int = 5000, tol: float = 1e-15) -> float:
    """Boyd's nonlinear power iteration for ``‖A‖_{p→q}``, ``A ≥ 0``."""
    pc = _conj(p)
    best = 0.0
    for x0 in starts:
        x = np.abs(x0) / _lp(x0, p)
        prev = 0.0
        for _ in range(iters):
            y = A @ x
            ny = _lp(y, q)
            if ny == 0:
                break
            ratio = ny / _lp(x, p)
            best = max(best, ratio)
            # dual step: z = A^T ψ_q(y), x ∝ ψ_{p′}(z)
            z = A.T @ (y / ny) ** (q - 1.0)
            nz = _lp(z, pc)
            if nz == 0:
                break
            x = (z / nz) ** (pc - 1.0) if not math.isinf(pc) else z / nz
            x = x / _lp(x, p)
            if abs(ratio - prev) <= tol * ratio:
                break
            prev = ratio
        y = A @ x
        best = max(best, _lp(y, q) / _lp(x, p))
    return float(best)


def operator_norm(wt: WeightedTree, method: str = "ascent", starts: int = 8,
                  seed: int = 0) -> NormEstimate:
    """``‖S‖_{ℓ_p → ℓ_q}``.

    ``spectral`` (``p = q = 2``): the largest singular value.  ``ascent``:
    the exact closed form when ``p = 1`` (largest column ``q``-norm),
    ``q = ∞`` (largest row ``p′``-norm) or ``p = ∞`` (``f ≡ 1``, optimal by
    non-negativity); otherwise the best ratio of a multi-start nonlinear
    power iteration, a lower bound.  ``exhaustive`` (at most 14 vertices):
    additionally tries every unit vector and many more random starts.

    Examples
    --------
    >>> operator_norm(WeightedTree((-1,), [1.0], [1.0])).value
    1.0
    """
    A = wt.matrix
    p, q = wt.p, wt.q
    if method == "spectral":
        if not (p == 2 and q == 2):
            raise ParameterError("spectral norm needs p = q = 2")
        return NormEstimate(float(np.linalg.norm(A, 2)), "spectral", True)
    if method not in ("ascent", "exhaustive"):
        raise ParameterError(f"unknown method {method!r}")
    if method == "exhaustive" and wt.size > EXHAUSTIVE_MAX_VERTICES:
        raise ParameterError(f"exhaustive search needs at most {EXHAUSTIVE_MAX_VERTICES} vertices")
    if p == 1:
        return NormEstimate(float(_lp(A, q, axis=0).max()), method, True)
    if math.isinf(q):
        return NormEstimate(float(_lp(A, _conj(p), axis=1).max()), method, True)
    if math.isinf(p):
        return NormEstimate(float(_lp(A @ np.ones(wt.size), q)), method, True)
    rng = np.random.default_rng(seed)
    n = wt.size
    count = starts if method == "ascent" else max(starts, 64)
    x0 = [np.ones(n)] + [rng.random(n) + 1e-3 for _ in range(count - 1)]
    if method == "exhaustive":
        x0 += [np.eye(n)[i] + 1e-9 for i in range(n)]
    val = _power_ascent(A, p, q, np.array(x0))
    if method == "exhaustive":
        val = max(val, float(_lp(A, q, axis=0).max()))
    return NormEstimate(val, method, p == 2 and q == 2, heuristic=val)


@dataclass(frozen=True)
class BoundReport:
    norm_lb: float
    bound: float
    ratio: float
    ceiling: float
    violated: bool
    method: str


def bound_check(wt: WeightedTree, a: float, b: float, ceiling: float = DEFAULT_CEILING,
                method: str | None = None, seed: int = 0) -> BoundReport:
    """Compare the norm (lower bound) with ``sup_ξ g(ξ)v(ξ)``.

    A violation is flagged only if the norm exceeds ``ceiling·sup g·v``.
    """
    if wt.p > wt.q:
        raise PreconditionError("the bound is stated for p <= q")
    if not decay_check(wt, a, b):
        raise PreconditionError("v does not satisfy the geometric decay condition")
    if method is None:
        if wt.p == 2 and wt.q == 2:
            method = "spectral"
        elif wt.size <= EXHAUSTIVE_MAX_VERTICES:
            method = "exhaustive"
        else:
            method = "ascent"
    est = operator_norm(wt, method, seed=seed)
    bound = float(np.max(wt.g * wt.v))
    ratio = est.value / bound if bound > 0 else (0.0 if est.value == 0 else math.inf)
    return BoundReport(est.value, bound, ratio, ceiling, ratio > ceiling, method)


def random_tree(n: int, rng: np.random.Generator, p: float = 2.0, q: float = 2.0,
                a: float = 1.0, b: float = 1.0) -> WeightedTree:
    """Random recursive tree with ``v = ρ^{depth}`` meeting the decay condition.

    With ``B`` the largest number of children, ``ρ^q = 2^{−a}/B`` gives
    ``Σ_{V_j(ξ)} v^q ≤ B^j ρ^{qj} v^q(ξ) = 2^{−aj} v^q(ξ) ≤ b 2^{−aj} v^q(ξ)``
    for ``b ≥ 1``.  ``g`` is uniform on ``(0, 1]``.
    """
    if n < 1:
        raise ParameterError("n must be positive")
    parents = [-1] + [int(rng.integers(0, i)) for i in range(1, n)]
    counts = np.bincount(np.array(parents[1:], dtype=int), minlength=n) if n > 1 else np.zeros(1)
    bmax = max(int(counts.max()), 1)
    rho = (2.0 ** (-a) / bmax) ** (1.0 / q) * min(1.0, b) ** (1.0 / q)
    wt = WeightedTree(tuple(parents), np.ones(n), np.ones(n), p, q)
    g = 1.0 - rng.random(n)
    v = rho ** wt.depth.astype(float)
    return wt.with_weights(g=g, v=v)
