"""Tree partitions of cusp domains.

Level ``k`` of the tree consists of the cells

    Δ_{k,j} = Δ′_{k,j} × (c⁻_{k,j}, c⁺_{k,j}),

where the bases ``Δ′_{k,j}`` are dyadic boxes with side ``2^{-n_{k,i}}`` along
axis ``i``, ``c⁺_{k,j} = inf_{Δ′_{k,j}} ψ − 2^{-k-1}`` and ``c⁻_{k,j}`` is the
``c⁺`` of the parent (equivalently ``inf`` of ``ψ`` over the parent base minus
``2^{-k}``).  The root is ``(o, o+1)^{d−1} × (0, c⁺_{0,1})``.

Storage
-------
Levels are kept in *product form*: a level is the Cartesian product of one
sorted integer index array per axis.  For separable ``ψ`` (constant and
h-set cusps) every per-cell quantity is a function of ``max_i`` of per-axis
values, so infima, suprema, sums and extrema over a level are computed from
the per-axis arrays alone.  This keeps levels with ``~10^13`` cells (the h-set
cusp at ``K = 8``) tractable.  The pruned h-set variant is a product too,
because the near-Γ test ``dist(Δ′, Γ) ≤ 2^{-n_k}`` separates over axes for
the l∞ distance.  Non-separable ``ψ`` (``explicit_sample``) is stored densely
with a size cap.

Levels are built lazily on first access, so a tree can be declared with a
large ``K`` and consumed only up to the depth actually needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ._numerics import product_max, sum_over_product_max
from .domain import BoundaryModulus, DomainSpec
from .errors import InvalidDomainError, ParameterError, SizeError

DENSE_CAP = 1 << 22
MATERIALIZE_CAP = 1 << 22
CHAIN_CHECK_CAP = 1 << 18
AXIS_CAP = 1 << 22


def level_resolutions(moduli: Sequence[BoundaryModulus], k: int, rule: str = "standard") -> tuple:
    """Per-axis resolutions ``n_{k,i}``.

    ``rule="standard"`` solves ``2^{-n} ≤ φ_i(2^{-k-3}) < 2^{-n+1}``;
    ``rule="hset"`` solves the shifted ``2^{-n+1} ≤ φ_i(2^{-k-4}) < 2^{-n+2}``.
    Both are read off the binary exponent of ``φ_i`` exactly.

    Examples
    --------
    >>> level_resolutions([BoundaryModulus("power", 2.0)], 0)
    (6,)
    >>> level_resolutions([BoundaryModulus("power", 2.0, 0.3)], 0)
    (8,)
    """
    if k < 0:
        raise ParameterError("level must be non-negative")
    if rule == "standard":
        t, shift = 2.0 ** (-k - 3), 1
    elif rule == "hset":
        t, shift = 2.0 ** (-k - 4), 2
    else:
        raise ParameterError(f"unknown resolution rule {rule!r}")
    out = []
    for m in moduli:
        phi = float(m(t))
        if not phi > 0.0:
            raise InvalidDomainError("boundary modulus vanished")
        # phi = mant * 2**e with mant in [1/2, 1)  =>  2**(e-1) <= phi < 2**e
        _, e = math.frexp(phi)
        out.append(max(shift - e, 0))
    return tuple(out)


# ---------------------------------------------------------------------------
# cells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    """One cell ``Δ_{k,j}`` (plus its tail for far cells of a pruned tree)."""

    level: int
    index: int
    base_lo: np.ndarray
    base_hi: np.ndarray
    c_minus: float
    c_plus: float
    role: str = "interior"
    tail_top: float | None = None
    parent: int | None = None

    @property
    def dim(self) -> int:
        return self.base_lo.size + 1

    @property
    def lo(self) -> np.ndarray:
        return np.append(self.base_lo, self.c_minus)

    @property
    def hi(self) -> np.ndarray:
        return np.append(self.base_hi, self.c_plus)

    @property
    def volume(self) -> float:
        return float(np.prod(self.base_hi - self.base_lo) * (self.c_plus - self.c_minus))

    def normalize(self, x) -> np.ndarray:
        """The affine normaliser ``T_ξ``: maps the cell onto the unit cube."""
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def denormalize(self, y) -> np.ndarray:
        return self.lo + np.asarray(y, dtype=float) * (self.hi - self.lo)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo) & (x < self.hi), axis=-1)


# ---------------------------------------------------------------------------
# levels
# ---------------------------------------------------------------------------


@dataclass
class TreeLevel:
    """All cells of one level in product form.

    ``axis_index[i]`` is the sorted array of dyadic indices along axis ``i``
    (base interval ``[o + j·2^{-n_i}, o + (j+1)·2^{-n_i}]``); the level's
    cells are the Cartesian product, enumerated in C order (lexicographic in
    the lower corners).
    """

    k: int
    n: tuple
    delta_n: tuple
    axis_index: tuple
    # separable storage: per-axis exact extrema of the distance profile
    dmin: tuple | None = None
    dmax: tuple | None = None
    # dense storage (explicit ψ): inf/sup over each cell, shape = sizes
    inf_dense: np.ndarray | None = None
    sup_dense: np.ndarray | None = None
    near: tuple | None = None  # per-axis near-Γ masks (pruned trees)
    _psi_of: object = field(default=None, repr=False)

    @property
    def sizes(self) -> tuple:
        return tuple(a.size for a in self.axis_index)

    @property
    def count(self) -> int:
        return int(np.prod([a.size for a in self.axis_index], dtype=object))

    @property
    def near_count(self) -> int:
        if self.near is None:
            return self.count
        return int(np.prod([int(m.sum()) for m in self.near], dtype=object))

    @property
    def width(self) -> np.ndarray:
        return 2.0 ** -np.asarray(self.n, dtype=float)

    @property
    def base_measure(self) -> float:
        return float(np.prod(self.width))

    def offset(self) -> float:
        return 2.0 ** (-self.k - 1)

    # dense views -------------------------------------------------------
    def inf_grid(self) -> np.ndarray:
        if self.inf_dense is not None:
            return self.inf_dense
        self._check_materialize()
        return self._psi_of(product_max(self.dmax))

    def sup_grid(self) -> np.ndarray:
        if self.sup_dense is not None:
            return self.sup_dense
        self._check_materialize()
        return self._psi_of(product_max(self.dmin))

    def c_plus_grid(self) -> np.ndarray:
        return self.inf_grid() - self.offset()

    def near_grid(self) -> np.ndarray:
        if self.near is None:
            return np.ones(self.sizes, dtype=bool)
        self._check_materialize()
        out = None
        k = len(self.near)
        for a, m in enumerate(self.near):
            shape = [1] * k
            shape[a] = m.size
            v = m.reshape(shape)
            out = v if out is None else (out & v)
        return np.broadcast_to(out, self.sizes)

    def _check_materialize(self):
        if self.count > MATERIALIZE_CAP:
            raise SizeError(
                f"level {self.k} has {self.count} cells; refusing to materialise more than "
                f"{MATERIALIZE_CAP}"
            )

    # point lookup ------------------------------------------------------
    def locate(self, xprime: np.ndarray, origin: float) -> tuple[tuple, np.ndarray]:
        """Per-axis positions of the cells containing ``xprime`` and a validity mask."""
        pos, ok = [], np.ones(xprime.shape[0], dtype=bool)
        for i, idx in enumerate(self.axis_index):
            j = np.floor((xprime[:, i] - origin) * 2.0 ** self.n[i]).astype(np.int64)
            j = np.clip(j, 0, 2 ** self.n[i] - 1)
            p = np.clip(np.searchsorted(idx, j), 0, idx.size - 1)
            ok &= idx[p] == j
            pos.append(p)
        return tuple(pos), ok

    def inf_at(self, pos: tuple) -> np.ndarray:
        if self.inf_dense is not None:
            return self.inf_dense[pos]
        D = self.dmax[0][pos[0]]
        for a in range(1, len(pos)):
            D = np.maximum(D, self.dmax[a][pos[a]])
        return self._psi_of(D)

    def sup_at(self, pos: tuple) -> np.ndarray:
        if self.sup_dense is not None:
            return self.sup_dense[pos]
        D = self.dmin[0][pos[0]]
        for a in range(1, len(pos)):
            D = np.maximum(D, self.dmin[a][pos[a]])
        return self._psi_of(D)

    def near_at(self, pos: tuple) -> np.ndarray:
        if self.near is None:
            return np.ones(pos[0].shape, dtype=bool)
        out = self.near[0][pos[0]]
        for a in range(1, len(pos)):
            out = out & self.near[a][pos[a]]
        return out


# ---------------------------------------------------------------------------
# the tree
# ---------------------------------------------------------------------------


class PartitionTree:
    """The rooted tree of cells ``Δ_{k,j}``, ``0 ≤ k ≤ K``.

    Parameters
    ----------
    domain : DomainSpec
    max_level : int
        Deepest level ``K``.
    variant : {"full", "hset_pruned"}
        ``hset_pruned`` keeps only children of near-Γ cells and uses the
        shifted resolution rule with ``φ₀(t) = t^σ``.
    """

    def __init__(self, domain: DomainSpec, max_level: int, variant: str = "full"):
        if max_level < 1:
            raise ParameterError("the tree needs at least one level below the root (K >= 1)")
        if variant not in ("full", "hset_pruned"):
            raise ParameterError(f"unknown variant {variant!r}")
        if variant == "hset_pruned" and domain.psi_kind != "hset_cusp":
            raise ParameterError("the pruned variant requires an hset_cusp domain")
        self.domain = domain
        self.max_level = int(max_level)
        self.variant = variant
        if variant == "hset_pruned":
            self.rule_moduli = tuple(
                BoundaryModulus("power", domain.sigma, 1.0) for _ in range(domain.dim - 1)
            )
            self.rule = "hset"
        else:
            self.rule_moduli = tuple(domain.moduli)
            self.rule = "standard"
        self._levels: dict[int, TreeLevel] = {}
        self._axis_cache: dict = {}
        root = self.level(0)
        lo_inf = float(root.inf_at(tuple(np.zeros(1, dtype=np.int64) for _ in root.n))[0])
        hi_sup = float(root.sup_at(tuple(np.zeros(1, dtype=np.int64) for _ in root.n))[0])
        if lo_inf < 1.0 - 1e-12 or hi_sup > 2.0 + 1e-12:
            raise InvalidDomainError(
                f"psi ranges over [{lo_inf}, {hi_sup}], outside the admissible [1, 2]"
            )

    # -- resolutions ----------------------------------------------------
    @property
    def pruned(self) -> bool:
        return self.variant == "hset_pruned"

    @property
    def dim(self) -> int:
        return self.domain.dim

    def resolution(self, k: int) -> tuple:
        """Tiling resolution of level ``k`` (the root is the whole cube)."""
        if k == 0:
            return tuple(0 for _ in range(self.dim - 1))
        return level_resolutions(self.rule_moduli, k, self.rule)

    def rule_resolution(self, k: int) -> tuple:
        """``n_{k,i}`` from the defining rule, including ``k = 0``."""
        return level_resolutions(self.rule_moduli, k, self.rule)

    @property
    def resolutions(self) -> list:
        return [self.rule_resolution(k) for k in range(self.max_level + 1)]

    # -- level construction ---------------------------------------------
    def level(self, k: int) -> TreeLevel:
        if not 0 <= k <= self.max_level:
            raise ParameterError(f"level {k} outside 0..{self.max_level}")
        if k not in self._levels:
            for j in range(k + 1):
                if j not in self._levels:
                    self._levels[j] = self._build_level(j)
        return self._levels[k]

    def levels(self) -> Iterator[TreeLevel]:
        for k in range(self.max_level + 1):
            yield self.level(k)

    def _build_level(self, k: int) -> TreeLevel:
        dom = self.domain
        kdim = dom.dim - 1
        n = self.resolution(k)
        if k == 0:
            delta = n
            axis_index = tuple(np.zeros(1, dtype=np.int64) for _ in range(kdim))
        else:
            prev = self._levels[k - 1]
            delta = tuple(a - b for a, b in zip(n, prev.n))
            if min(delta) < 0:
                raise InvalidDomainError("resolutions must be non-decreasing in k")
            axis_index = []
            for i in range(kdim):
                par = prev.axis_index[i]
                if prev.near is not None:
                    par = par[prev.near[i]]
                step = 1 << delta[i]
                if par.size * step > AXIS_CAP:
                    raise SizeError(
                        f"level {k} needs {par.size * step} indices along axis {i} "
                        f"(cap {AXIS_CAP}); query single cells with cell() instead"
                    )
                axis_index.append(
                    (par[:, None] * step + np.arange(step, dtype=np.int64)[None, :]).ravel()
                )
            axis_index = tuple(axis_index)
        lev = TreeLevel(k, n, delta, axis_index, _psi_of=dom.psi_from_dist)
        if dom.separable:
            dmin, dmax = [], []
            for i in range(kdim):
                lo_d, hi_d = self._axis_extrema(i, n[i], axis_index[i])
                dmin.append(lo_d)
                dmax.append(hi_d)
            lev.dmin, lev.dmax = tuple(dmin), tuple(dmax)
        else:
            if lev.count > DENSE_CAP:
                raise SizeError(
                    f"explicit_sample level {k} would hold {lev.count} cells (cap {DENSE_CAP})"
                )
            grids = np.meshgrid(*axis_index, indexing="ij")
            w = 2.0 ** -np.asarray(n, dtype=float)
            lo = np.stack([dom.origin + g * w[i] for i, g in enumerate(grids)], axis=-1)
            hi = lo + w
            lev.inf_dense = dom.box_inf(lo, hi)
            lev.sup_dense = dom.box_sup(lo, hi)
        if self.pruned:
            thr = 2.0 ** -np.asarray(self.rule_resolution(k), dtype=float)
            near = []
            for i in range(kdim):
                w = 2.0 ** -n[i]
                a = dom.origin + axis_index[i] * w
                dist = np.asarray(dom.axis_sets[i].interval_min(a, a + w))
                near.append(dist <= thr[i])
            lev.near = tuple(near)
        return lev

    def _axis_extrema(self, i: int, n: int, index: np.ndarray):
        ax = self.domain.axis_sets[i]
        key = (id(ax), n, index.size, int(index[0]), int(index[-1]))
        hit = self._axis_cache.get(key)
        if hit is not None and np.array_equal(hit[0], index):
            return hit[1], hit[2]
        w = 2.0**-n
        full = index.size == (1 << n)
        if full and hasattr(ax, "grid_extrema"):
            edges = self.domain.origin + np.arange((1 << n) + 1) * w
            dmin, dmax = ax.grid_extrema(edges)
        else:
            a = self.domain.origin + index * w
            b = a + w
            dmin = np.asarray(ax.interval_min(a, b), dtype=float)
            dmax = np.asarray(ax.interval_max(a, b), dtype=float)
        self._axis_cache[key] = (index, dmin, dmax)
        return dmin, dmax

    # -- per-cell access -------------------------------------------------
    def _positions(self, k: int, j: int) -> tuple:
        lev = self.level(k)
        if not 0 <= j < lev.count:
            raise ParameterError(f"cell index {j} outside level {k}")
        return tuple(np.array([p]) for p in np.unravel_index(j, lev.sizes))

    def _too_large(self, k: int) -> bool:
        if k in self._levels:
            return False
        return any(n > 0 and (1 << n) > AXIS_CAP for n in self.resolution(k))

    def _lazy_cell(self, k: int, j: int) -> Cell:
        # Full separable trees index every dyadic interval, so a single cell
        # and its parent follow from the exact interval extrema alone.
        dom = self.domain
        n = self.resolution(k)
        sizes = [1 << ni for ni in n]
        total = math.prod(sizes)
        if not 0 <= j < total:
            raise ParameterError(f"cell index {j} outside level {k}")
        idx, rest = [], int(j)
        for size in reversed(sizes):
            idx.append(rest % size)
            rest //= size
        idx = idx[::-1]

        def inf_psi(res, ids):
            D = max(float(dom.axis_sets[a].interval_max(
                dom.origin + ids[a] * 2.0 ** -res[a], dom.origin + (ids[a] + 1) * 2.0 ** -res[a]))
                for a in range(len(res)))
            return float(dom.psi_from_dist(D))

        w = 2.0 ** -np.asarray(n, dtype=float)
        lo = dom.origin + np.asarray(idx, dtype=float) * w
        c_plus = inf_psi(n, idx) - 2.0 ** (-k - 1)
        pn = self.resolution(k - 1)
        pidx = [i >> (a - b) for i, a, b in zip(idx, n, pn)]
        c_minus = inf_psi(pn, pidx) - 2.0**-k
        parent = 0
        for i, b in zip(pidx, pn):
            parent = parent * (1 << b) + i
        return Cell(k, int(j), lo, lo + w, c_minus, c_plus, "interior", None, parent)

    def cell(self, k: int, j: int) -> Cell:
        """The ``j``-th cell (C-order / lexicographic) of level ``k``.

        Levels of full separable trees that are too large to build are
        served cell by cell.
        """
        if not 0 <= k <= self.max_level:
            raise ParameterError(f"level {k} outside 0..{self.max_level}")
        if k > 0 and not self.pruned and self.domain.separable and self._too_large(k):
            return self._lazy_cell(k, j)
        lev = self.level(k)
        pos = self._positions(k, j)
        idx = np.array([lev.axis_index[a][pos[a][0]] for a in range(len(pos))])
        w = lev.width
        lo = self.domain.origin + idx * w
        c_plus = float(lev.inf_at(pos)[0]) - lev.offset()
        parent = None
        if k == 0:
            c_minus = 0.0
        else:
            prev = self.level(k - 1)
            pidx = idx >> np.asarray(lev.delta_n)
            ppos = tuple(
                np.searchsorted(prev.axis_index[a], [pidx[a]]) for a in range(len(pos))
            )
            c_minus = float(prev.inf_at(ppos)[0]) - 2.0**-k
            parent = int(np.ravel_multi_index(tuple(p[0] for p in ppos), prev.sizes))
        near = bool(lev.near_at(pos)[0])
        role = "interior" if not self.pruned else ("near_gamma" if near else "far_gamma")
        tail = float(lev.sup_at(pos)[0]) if role == "far_gamma" else None
        return Cell(k, int(j), lo, lo + w, c_minus, c_plus, role, tail, parent)

    def level_table(self, k: int) -> dict:
        """Dense per-cell arrays for level ``k`` (size-capped).

        Keys: ``index``, ``parent_index``, ``role``, ``base_lo``, ``base_hi``,
        ``c_minus``, ``c_plus``, ``tail_top`` (NaN unless far).
        """
        lev = self.level(k)
        lev._check_materialize()
        kdim = self.dim - 1
        grids = np.meshgrid(*lev.axis_index, indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=-1)
        w = lev.width
        lo = self.domain.origin + idx * w
        c_plus = lev.c_plus_grid().ravel()
        if k == 0:
            c_minus = np.zeros(1)
            parent = np.full(1, -1)
        else:
            prev = self.level(k - 1)
            pidx = idx >> np.asarray(lev.delta_n)[None, :]
            ppos = tuple(np.searchsorted(prev.axis_index[a], pidx[:, a]) for a in range(kdim))
            c_minus = prev.inf_at(ppos) - 2.0**-k
            parent = np.ravel_multi_index(ppos, prev.sizes)
        near = lev.near_grid().ravel()
        if self.pruned:
            role = np.where(near, "near_gamma", "far_gamma")
            tail = np.where(near, np.nan, lev.sup_grid().ravel())
        else:
            role = np.full(idx.shape[0], "interior")
            tail = np.full(idx.shape[0], np.nan)
        return {
            "index": np.arange(idx.shape[0]),
            "parent_index": parent,
            "role": role,
            "base_lo": lo,
            "base_hi": lo + w,
            "c_minus": c_minus,
            "c_plus": c_plus,
            "tail_top": tail,
        }

    def iter_cells(self, max_level: int | None = None) -> Iterator[Cell]:
        top = self.max_level if max_level is None else max_level
        for k in range(top + 1):
            t = self.level_table(k)
            for j in range(t["index"].size):
                yield Cell(
                    k,
                    int(j),
                    t["base_lo"][j],
                    t["base_hi"][j],
                    float(t["c_minus"][j]),
                    float(t["c_plus"][j]),
                    str(t["role"][j]),
                    None if np.isnan(t["tail_top"][j]) else float(t["tail_top"][j]),
                    None if k == 0 else int(t["parent_index"][j]),
                )

    # -- level sums ------------------------------------------------------
    def _sum_psi_inf(self, lev: TreeLevel, near_only: bool = False) -> float:
        """``Σ inf ψ`` over the cells of a level (optionally only near cells)."""
        if lev.inf_dense is not None:
            vals = lev.inf_dense
            if near_only and lev.near is not None:
                vals = vals[lev.near_grid()]
            return float(np.sum(vals))
        arrs = lev.dmax
        if near_only and lev.near is not None:
            arrs = tuple(a[m] for a, m in zip(arrs, lev.near))
        return sum_over_product_max(lev._psi_of, arrs)

    def _sum_psi_sup(self, lev: TreeLevel) -> float:
        if lev.sup_dense is not None:
            return float(np.sum(lev.sup_dense))
        return sum_over_product_max(lev._psi_of, lev.dmin)

    def level_measure(self, k: int) -> float:
        """Total measure ``Σ_j |Δ_{k,j}|`` of level ``k`` (without tails)."""
        lev = self.level(k)
        w = lev.base_measure
        n_cells = lev.count
        s_plus = self._sum_psi_inf(lev) - n_cells * lev.offset()
        if k == 0:
            return w * s_plus
        prev = self.level(k - 1)
        children = int(np.prod([1 << d for d in lev.delta_n]))
        s_minus = children * (self._sum_psi_inf(prev, near_only=True) - prev.near_count * 2.0**-k)
        return w * (s_plus - s_minus)

    def covered_measure(self) -> float:
        """Measure of the union of all cells (tails excluded)."""
        return float(sum(self.level_measure(k) for k in range(self.max_level + 1)))

    # -- Monte-Carlo helpers --------------------------------------------
    def covered_indicator(self, x: np.ndarray) -> np.ndarray:
        """Whether points lie in the union of cells (and tails, if pruned).

        In a full tree the column over ``x′`` is covered up to ``c⁺_K(x′)``.
        In a pruned tree a column ending in a far cell is covered up to
        ``ψ(x′)`` (ancestors below, the far cell and its tail above), and a
        column reaching level ``K`` through near cells up to ``c⁺_K(x′)``.
        """
        dom = self.domain
        xp, xd = x[:, :-1], x[:, -1]
        top = np.zeros(x.shape[0])
        undecided = np.ones(x.shape[0], dtype=bool)
        for k in range(self.max_level + 1):
            lev = self.level(k)
            pos, ok = lev.locate(xp, dom.origin)
            ok &= undecided
            if self.pruned:
                far = ok & ~lev.near_at(pos)
                if far.any():
                    top[far] = dom.psi(xp[far])
                    undecided[far] = False
                    ok &= ~far
            if k == self.max_level:
                top[ok] = lev.inf_at(tuple(p[ok] for p in pos)) - lev.offset()
                undecided[ok] = False
        return (xd > 0.0) & (xd < top)

    def fringe_top(self, xprime: np.ndarray) -> np.ndarray:
        """``c⁺`` of the deepest cell above each base point (full trees)."""
        lev = self.level(self.max_level)
        pos, _ = lev.locate(xprime, self.domain.origin)
        return lev.inf_at(pos) - lev.offset()


def build_tree(dom: DomainSpec, K: int) -> PartitionTree:
    """The full tree of levels ``0..K``."""
    return PartitionTree(dom, K, "full")


def build_hset_tree(dom: DomainSpec, K: int) -> PartitionTree:
    """The pruned tree: only children of near-Γ cells are refined."""
    if dom.psi_kind != "hset_cusp":
        raise ParameterError("build_hset_tree requires an hset_cusp domain")
    return PartitionTree(dom, K, "hset_pruned")


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------


@dataclass
class LevelAudit:
    k: int
    n: tuple
    cells: int
    near_cells: int
    height_min: float
    height_max: float
    heights_exact: bool
    branching: int
    volume_ratio_min: float
    volume_ratio_max: float
    tiling_exact: bool
    chaining_exact: bool
    hset_constant: float | None = None


@dataclass
class AuditReport:
    variant: str
    max_level: int
    levels: list
    max_branching: int
    root_branching: int
    branching_bound: int
    disjoint: bool
    tiling_exact: bool
    chaining_exact: bool
    overlap_measure: float
    base_area: float
    covered_measure: float | None
    covering_defect_bound: float | None
    fringe_measure: float
    notes: list = field(default_factory=list)

    @property
    def heights_ok(self) -> bool:
        return all(0.25 <= lv.height_min and lv.height_max <= 0.75 for lv in self.levels[1:])


def _height_extrema(tree: PartitionTree, k: int) -> tuple[float, float, bool]:
    """min/max of ``(c⁺ − c⁻)·2^k`` over level ``k``.

    Exact when the level can be materialised; otherwise certified bounds:
    with ``P_a``/``M_a`` the parent/own per-axis maxima of the distance
    profile and ``f(D) = D^{1/σ}``, the scaled height is
    ``1/2 + 2^k (f(max P) − f(max M))`` with ``0 ≤ f(max P) − f(max M) ≤
    max_a (f(P_a) − f(M_a))``.
    """
    lev = tree.level(k)
    prev = tree.level(k - 1)
    if lev.count <= MATERIALIZE_CAP:
        ppos = [
            np.searchsorted(prev.axis_index[a], lev.axis_index[a] >> lev.delta_n[a])
            for a in range(len(lev.n))
        ]
        if lev.inf_dense is not None:
            par_inf = prev.inf_dense[np.ix_(*ppos)]
        else:
            par_inf = lev._psi_of(product_max([prev.dmax[a][p] for a, p in enumerate(ppos)]))
        h = ((lev.inf_grid() - lev.offset()) - (par_inf - 2.0**-k)) * 2.0**k
        return float(h.min()), float(h.max()), True
    dom = tree.domain
    f = lambda D: dom.top - dom.psi_from_dist(D)  # noqa: E731
    up = 0.0
    lo_gap = np.inf
    for a in range(dom.dim - 1):
        par = lev.axis_index[a] >> lev.delta_n[a]
        ppos = np.searchsorted(prev.axis_index[a], par)
        diff = f(prev.dmax[a][ppos]) - f(lev.dmax[a])
        up = max(up, float(diff.max()))
        lo_gap = min(lo_gap, float(diff.min()))
    # lower bound: the difference of maxima is at least 0 mathematically; a
    # sampled minimum gives an attained (inner) value.
    return 0.5 + min(0.0, lo_gap) * 2.0**k, 0.5 + up * 2.0**k, False


def partition_audit(tree: PartitionTree) -> AuditReport:
    """Structural audit of a built tree (see :class:`AuditReport`)."""
    dom = tree.domain
    kdim = dom.dim - 1
    levels = []
    tiling_all = True
    chaining_all = True
    max_branch = 1
    root_branch = 1
    a_star = max(m.a_star for m in tree.rule_moduli)
    per_axis = 1 + int(math.ceil(math.log2(a_star)))
    branching_bound = 1 << (per_axis * kdim)
    notes = []
    for k in range(tree.max_level + 1):
        lev = tree.level(k)
        tiling = True
        for a in range(kdim):
            idx = lev.axis_index[a]
            if idx.size and np.any(np.diff(idx) <= 0):
                tiling = False
            if k == 0:
                continue
            prev = tree.level(k - 1)
            pidx = prev.axis_index[a] if prev.near is None else prev.axis_index[a][prev.near[a]]
            par = idx >> lev.delta_n[a]
            uniq, counts = np.unique(par, return_counts=True)
            if not (np.array_equal(uniq, pidx) and np.all(counts == (1 << lev.delta_n[a]))):
                tiling = False
        tiling_all &= tiling
        branching = int(np.prod([1 << d for d in lev.delta_n])) if k > 0 else 1
        if k >= 2:
            max_branch = max(max_branch, branching)
        elif k == 1:
            root_branch = branching
        w = lev.base_measure
        denom = 2.0**-k * float(np.prod([m(2.0**-k) for m in dom.moduli]))
        if k == 0:
            c_plus = float(lev.inf_at(tuple(np.zeros(1, np.int64) for _ in range(kdim)))[0]) - 0.5
            hmin = hmax = c_plus
            exact = True
            chain = True
        else:
            hmin, hmax, exact = _height_extrema(tree, k)
            chain = True
            if lev.count <= CHAIN_CHECK_CAP:
                t = tree.level_table(k)
                prev_t = tree.level_table(k - 1)
                chain = bool(np.all(t["c_minus"] == prev_t["c_plus"][t["parent_index"]]))
        chaining_all &= chain
        hc = None
        if tree.pruned:
            nk = tree.rule_resolution(k)[0]
            hc = lev.near_count * 2.0 ** (-nk * dom.hset.theta)
        levels.append(
            LevelAudit(
                k=k,
                n=tree.rule_resolution(k) if k == 0 else lev.n,
                cells=lev.count,
                near_cells=lev.near_count,
                height_min=hmin,
                height_max=hmax,
                heights_exact=exact,
                branching=branching,
                volume_ratio_min=w * hmin * 2.0**-k / denom if k else w * hmin / denom,
                volume_ratio_max=w * hmax * 2.0**-k / denom if k else w * hmax / denom,
                tiling_exact=tiling,
                chaining_exact=chain,
                hset_constant=hc,
            )
        )
    K = tree.max_level
    covered = bound = None
    if not tree.pruned:
        covered = tree.covered_measure()
        lastlev = tree.level(K)
        bound = lastlev.base_measure * (
            tree._sum_psi_sup(lastlev) - tree._sum_psi_inf(lastlev)
        )
    else:
        notes.append("pruned tree: covered measure includes tails and is estimated by sampling")
    return AuditReport(
        variant=tree.variant,
        max_level=K,
        levels=levels,
        max_branching=max_branch,
        root_branching=root_branch,
        branching_bound=branching_bound,
        disjoint=tiling_all and chaining_all and all(lv.height_min > 0 for lv in levels),
        tiling_exact=tiling_all,
        chaining_exact=chaining_all,
        overlap_measure=0.0 if tiling_all and chaining_all else float("nan"),
        base_area=dom.base_area,
        covered_measure=covered,
        covering_defect_bound=bound,
        fringe_measure=2.0 ** (-K - 1) * dom.base_area,
        notes=notes,
    )


@dataclass
class VolumeCheck:
    samples: int
    omega_mc: float
    omega_se: float
    covered_mc: float
    covered_se: float
    covered_exact: float | None
    defect_mc: float
    defect_se: float

    @property
    def z_score(self) -> float:
        if self.covered_exact is None or self.covered_se == 0:
            return 0.0
        return abs(self.covered_exact - self.covered_mc) / self.covered_se


def monte_carlo_volume(tree: PartitionTree, samples: int = 1_000_000, seed: int = 0,
                       chunk: int = 250_000) -> VolumeCheck:
    """Monte-Carlo estimates of ``|Ω|``, the covered measure and the defect.

    Points are uniform in ``base × (0, 2)``.  The *covering defect* is the
    uncovered measure below the nominal fringe, ``∫ (ψ − 2^{-K-1} − c⁺_K)``;
    it is estimated from the same base points.
    """
    dom = tree.domain
    rng = np.random.default_rng(seed)
    kdim = dom.dim - 1
    box = 2.0 * dom.base_area
    hits_o = hits_c = 0
    dsum = dsq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = np.empty((m, kdim + 1))
        x[:, :kdim] = dom.origin + rng.random((m, kdim))
        x[:, kdim] = 2.0 * rng.random(m)
        psi = dom.psi(x[:, :kdim])
        hits_o += int(np.count_nonzero(x[:, kdim] < psi))
        cov = tree.covered_indicator(x)
        hits_c += int(np.count_nonzero(cov))
        if not tree.pruned:
            gap = psi - 2.0 ** (-tree.max_level - 1) - tree.fringe_top(x[:, :kdim])
            dsum += float(gap.sum())
            dsq += float((gap * gap).sum())
        done += m
    po, pc = hits_o / samples, hits_c / samples
    mean = dsum / samples
    var = max(dsq / samples - mean * mean, 0.0)
    return VolumeCheck(
        samples=samples,
        omega_mc=box * po,
        omega_se=box * math.sqrt(po * (1 - po) / samples),
        covered_mc=box * pc,
        covered_se=box * math.sqrt(pc * (1 - pc) / samples),
        covered_exact=None if tree.pruned else tree.covered_measure(),
        defect_mc=mean * dom.base_area,
        defect_se=math.sqrt(var / samples) * dom.base_area,
    )
