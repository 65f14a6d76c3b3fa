"""Local polynomial projections and budgeted adaptive approximation.

Polynomials live in the tensor space ``Q_{r−1}`` (degree ``≤ r−1`` in each
coordinate) spanned by products of shifted Legendre polynomials, which are
orthonormal in the mean-square inner product on the unit cube.  A region is
mapped onto the unit cube by its affine normaliser (axis-aligned bounding
box), so coefficients are independent of the region's size.

Two region shapes are used by the adaptive scheme:

* :class:`Box` — an axis-aligned box lying inside the domain;
* :class:`Column` — ``{x′ ∈ B, bottom < x_d < ψ(x′)}``, the part of the domain
  above a box, whose curved top follows the cusp exactly.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre

from .domain import DomainSpec
from .errors import EvaluationError, ParameterError

DEFAULT_GRID = 33
COLUMN_RTOL = 1.0 / 64.0
COLUMN_MAX_DEPTH = 24


# ---------------------------------------------------------------------------
# basis and quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes/weights on ``[0, 1]`` (weights sum to 1)."""
    x, w = legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def tensor_rule(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on ``[0,1]^dim``: points ``(N, dim)``, weights ``(N,)``."""
    x, w = gauss_rule(order)
    pts = np.stack(np.meshgrid(*([x] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    wts = np.ones(1)
    for _ in range(dim):
        wts = np.multiply.outer(wts, w).ravel()
    return pts, wts


@dataclass(frozen=True)
class PolyBasis:
    """Tensor shifted-Legendre basis of ``Q_{r−1}`` on ``[0,1]^d``.

    Multi-indices are enumerated in lexicographic order; index 0 is the
    constant ``1``.
    """

    r: int
    dim: int

    def __post_init__(self):
        if self.r < 1 or self.dim < 1:
            raise ParameterError("need r >= 1 and dim >= 1")

    @property
    def size(self) -> int:
        return self.r**self.dim

    @property
    def multi_indices(self) -> np.ndarray:
        return np.array(list(itertools.product(range(self.r), repeat=self.dim)), dtype=int)

    def evaluate(self, y) -> np.ndarray:
        """Basis values at normalised points ``y`` of shape ``(N, d)`` → ``(N, size)``."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        scale = np.sqrt(2.0 * np.arange(self.r) + 1.0)
        # per-axis values (N, r) for each coordinate
        per_axis = [legendre.legvander(2.0 * y[:, i] - 1.0, self.r - 1) * scale
                    for i in range(self.dim)]
        out = per_axis[0]
        for i in range(1, self.dim):
            out = (out[:, :, None] * per_axis[i][:, None, :]).reshape(y.shape[0], -1)
        return out

    def gram(self, order: int | None = None) -> np.ndarray:
        order = order or max(self.r, 1)
        pts, wts = tensor_rule(order, self.dim)
        V = self.evaluate(pts)
        return V.T @ (V * wts[:, None])


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldOracle:
    """A deterministic scalar field on ``R^d``.

    Parameters
    ----------
    fn : callable
        Maps points ``(N, d)`` to values ``(N,)``.
    derivatives : callable, optional
        Maps points ``(N, d)`` to all order-``r`` partial derivatives
        ``(N, n_α)``; needed for Sobolev seminorms.
    r, p : declared smoothness.
    seminorm : float, optional
        Certified ``‖∇^r f‖_{L_p(Ω)}`` when known analytically.
    poly_degree : int, optional
        Coordinate degree if ``f`` is a polynomial (quadrature is then exact).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    derivatives: Callable[[np.ndarray], np.ndarray] | None = None
    r: int | None = None
    p: float | None = None
    seminorm: float | None = None
    poly_degree: int | None = None
    name: str = "field"

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = np.asarray(self.fn(x), dtype=float)
        v = np.broadcast_to(v, x.shape[:1]) if v.ndim == 0 else v.reshape(x.shape[0])
        if not np.all(np.isfinite(v)):
            raise EvaluationError(f"non-finite values of {self.name}")
        return v

    def scaled(self, c: float) -> "FieldOracle":
        der = self.derivatives
        return FieldOracle(
            lambda x: c * self.fn(x),
            None if der is None else (lambda x: c * der(x)),
            self.r, self.p,
            None if self.seminorm is None else abs(c) * self.seminorm,
            self.poly_degree, f"{c}*{self.name}",
        )

    @classmethod
    def constant(cls, c: float) -> "FieldOracle":
        return cls(lambda x: np.full(x.shape[0], float(c)), poly_degree=0, name=f"const({c})")


class NormValue(float):
    """A float carrying quadrature provenance.

    ``estimated`` is ``False`` only when the rule integrates the integrand
    exactly (a polynomial field with ``q = 2`` inside a box).
    """

    estimated: bool
    rule: str

    def __new__(cls, value: float, estimated: bool, rule: str):
        obj = super().__new__(cls, value)
        obj.estimated = estimated
        obj.rule = rule
        return obj


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo, hi]`` in ``R^d``."""

    lo: np.ndarray
    hi: np.ndarray
    level: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if not np.all(self.hi > self.lo):
            raise ParameterError("box must have positive volume")

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lo, self.hi

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def denormalize(self, y) -> np.ndarray:
        return self.lo + np.asarray(y, dtype=float) * (self.hi - self.lo)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo) & (x < self.hi), axis=-1)

    def quadrature(self, order: int) -> tuple[np.ndarray, np.ndarray]:
        y, w = tensor_rule(order, self.dim)
        return self.denormalize(y), w * self.volume

    def grid(self, n: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n)
        y = np.stack(np.meshgrid(*([t] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        return self.denormalize(y)

    def split(self) -> list["Box"]:
        """Halve the longest side (ties → lowest axis)."""
        axis = int(np.argmax(self.hi - self.lo))
        mid = 0.5 * (self.lo[axis] + self.hi[axis])
        a_hi = self.hi.copy()
        a_hi[axis] = mid
        b_lo = self.lo.copy()
        b_lo[axis] = mid
        return [Box(self.lo, a_hi, self.level), Box(b_lo, self.hi, self.level)]


@dataclass(frozen=True)
class Column:
    """``{x′ ∈ [base_lo, base_hi], bottom < x_d < ψ(x′)}``.

    ``level`` is the tree level whose vertical spacing ``2^{−level−1}``
    governs the next horizontal cut.
    """

    domain: DomainSpec = field(repr=False)
    base_lo: np.ndarray
    base_hi: np.ndarray
    bottom: float
    level: int = 0
    seed: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "base_lo", np.asarray(self.base_lo, dtype=float))
        object.__setattr__(self, "base_hi", np.asarray(self.base_hi, dtype=float))
        if not np.all(self.base_hi > self.base_lo):
            raise ParameterError("column base must have positive measure")

    @property
    def dim(self) -> int:
        return self.base_lo.size + 1

    @cached_property
    def psi_inf(self) -> float:
        return float(self.domain.box_inf(self.base_lo, self.base_hi))

    @cached_property
    def psi_sup(self) -> float:
        return float(self.domain.box_sup(self.base_lo, self.base_hi))

    @cached_property
    def base_pieces(self) -> tuple[np.ndarray, np.ndarray]:
        """Dyadic sub-boxes of the base on which ``ψ`` oscillates little.

        Sub-boxes are halved in every direction until the exact oscillation
        of ``ψ`` is at most ``COLUMN_RTOL`` times the column height or the
        sub-box width reaches ``2^{−COLUMN_MAX_DEPTH}`` of the base.
        Refinement starts from ``seed`` (sub-boxes inherited from a parent
        column) when given.
        """
        tol = COLUMN_RTOL * (self.psi_sup - self.bottom)
        k = self.base_lo.size
        if self.seed is not None and self.seed[0].shape[0] > 0:
            lo, hi = self.seed
        else:
            lo = self.base_lo[None, :]
            hi = self.base_hi[None, :]
        done_lo, done_hi = [], []
        for depth in range(COLUMN_MAX_DEPTH + 1):
            inf_, sup_ = self.domain.box_extrema(lo, hi)
            osc = sup_ - inf_
            ok = (osc <= tol) | (depth == COLUMN_MAX_DEPTH)
            done_lo.append(lo[ok])
            done_hi.append(hi[ok])
            lo, hi = lo[~ok], hi[~ok]
            if lo.shape[0] == 0:
                break
            mid = 0.5 * (lo + hi)
            nlo, nhi = [], []
            for corner in itertools.product((0, 1), repeat=k):
                c = np.array(corner, dtype=bool)
                nlo.append(np.where(c, mid, lo))
                nhi.append(np.where(c, hi, mid))
            lo, hi = np.concatenate(nlo), np.concatenate(nhi)
        return np.concatenate(done_lo), np.concatenate(done_hi)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.append(self.base_lo, self.bottom), np.append(self.base_hi, self.psi_sup))

    def normalize(self, x) -> np.ndarray:
        lo, hi = self.bbox
        return (np.asarray(x, dtype=float) - lo) / (hi - lo)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xp = x[:, :-1]
        inb = np.all((xp >= self.base_lo) & (xp < self.base_hi), axis=-1)
        out = inb & (x[:, -1] >= self.bottom)
        if np.any(out):
            out &= x[:, -1] < self.domain.psi(xp)
        return out

    def quadrature(self, order: int) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss in ``x′`` times Gauss on ``(bottom, ψ(x′))``.

        The base rule is a tensor Gauss rule on each of :attr:`base_pieces`
        (order ``order`` for a single piece, ``⌈order/2⌉`` otherwise).
        """
        k = self.dim - 1
        plo, phi = self.base_pieces
        ob = order if plo.shape[0] == 1 else max(2, (order + 1) // 2)
        yb, wb = tensor_rule(ob, k)
        xb = (plo[:, None, :] + yb[None, :, :] * (phi - plo)[:, None, :]).reshape(-1, k)
        wb = (wb[None, :] * np.prod(phi - plo, axis=1)[:, None]).ravel()
        top = self.domain.psi(xb)
        h = np.maximum(top - self.bottom, 0.0)
        t, wt = gauss_rule(order)
        xd = self.bottom + np.outer(h, t)
        pts = np.concatenate(
            [np.repeat(xb, order, axis=0), xd.reshape(-1, 1)], axis=1)
        wts = (wb[:, None] * h[:, None] * wt[None, :]).ravel()
        return pts, wts

    def grid(self, n: int) -> np.ndarray:
        k = self.dim - 1
        t = np.linspace(0.0, 1.0, n)
        yb = np.stack(np.meshgrid(*([t] * k), indexing="ij"), axis=-1).reshape(-1, k)
        xb = self.base_lo + yb * (self.base_hi - self.base_lo)
        top = self.domain.psi(xb)
        xd = self.bottom + np.outer(np.maximum(top - self.bottom, 0.0), t)
        return np.concatenate([np.repeat(xb, n, axis=0), xd.reshape(-1, 1)], axis=1)

    @property
    def volume(self) -> float:
        _, w = self.quadrature(16)
        return float(w.sum())


def _order(r: int, order: int | None) -> int:
    return max(2 * r, 8) if order is None else int(order)


# ---------------------------------------------------------------------------
# projection and norms
# ---------------------------------------------------------------------------


def project_cell(f: FieldOracle, cell, r: int, order: int | None = None) -> np.ndarray:
    """Mean-square projection of ``f`` onto ``Q_{r−1}`` on ``cell``.

    Coefficients refer to the basis pulled back by the cell's normaliser, so
    ``f ≡ c`` gives ``(c, 0, …, 0)``.  Boxes (including tree cells) use the
    tensor Gauss rule; columns use weighted least squares on their
    composite rule.

    Examples
    --------
    >>> b = Box([0.0, 0.0], [1.0, 1.0])
    >>> c = project_cell(FieldOracle(lambda x: x[:, 1]), b, 1)
    >>> float(c[0])
    0.5
    """
    order = _order(r, order)
    if order < r:
        raise ParameterError("quadrature order must be at least r")
    basis = PolyBasis(r, len(np.atleast_1d(cell.lo if hasattr(cell, "lo") else cell.base_lo))
                      + (0 if hasattr(cell, "lo") else 1))
    pts, wts = _rule(cell, order)
    vals = f(pts)
    V = basis.evaluate(cell.normalize(pts))
    if isinstance(cell, Column):
        sw = np.sqrt(wts)
        coef, *_ = np.linalg.lstsq(V * sw[:, None], vals * sw, rcond=None)
        return coef
    return V.T @ (vals * wts) / wts.sum()


def _rule(cell, order: int):
    if isinstance(cell, (Box, Column)):
        return cell.quadrature(order)
    box = Box(cell.lo, cell.hi)
    return box.quadrature(order)


def _grid(cell, n: int) -> np.ndarray:
    if isinstance(cell, (Box, Column)):
        return cell.grid(n)
    return Box(cell.lo, cell.hi).grid(n)


def evaluate_poly(coeffs: np.ndarray, cell, x, r: int) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    basis = PolyBasis(r, x.shape[1])
    return basis.evaluate(cell.normalize(x)) @ coeffs


def _basis_r(coeffs, dim: int) -> int:
    r = round(len(coeffs) ** (1.0 / dim))
    if r**dim != len(coeffs):
        raise ParameterError("coefficient vector does not match a tensor basis")
    return r


def _check_q(q) -> float:
    q = float(q)
    if not q >= 1:
        raise ParameterError("q must be >= 1")
    return q


def _integrand_norm(vals: np.ndarray, wts: np.ndarray, q: float) -> float:
    a = np.abs(vals)
    if q == 1:
        return float(np.dot(wts, a))
    m = a.max(initial=0.0)
    if m == 0:
        return 0.0
    return float(m * np.dot(wts, (a / m) ** q) ** (1.0 / q))


def cell_error(f: FieldOracle, coeffs, cell, q, order: int | None = None,
               grid: int = DEFAULT_GRID) -> NormValue:
    """``‖f − poly‖_{L_q(cell)}`` for the polynomial with ``coeffs``.

    Finite ``q`` uses the cell's Gauss rule, ``q = ∞`` the maximum over a
    ``grid``-point tensor grid (endpoints included).
    """
    q = _check_q(q)
    dim = cell.dim if hasattr(cell, "dim") else np.asarray(cell.lo).size
    r = _basis_r(coeffs, dim)
    coeffs = np.asarray(coeffs, dtype=float)
    if math.isinf(q):
        x = _grid(cell, grid)
        res = f(x) - evaluate_poly(coeffs, cell, x, r)
        return NormValue(float(np.abs(res).max(initial=0.0)),
                         f.poly_degree is None or f.poly_degree > r - 1, f"grid{grid}")
    order = _order(r, order)
    pts, wts = _rule(cell, order)
    res = f(pts) - evaluate_poly(coeffs, cell, pts, r)
    exact = (f.poly_degree is not None and q == 2 and not isinstance(cell, Column)
             and 2 * max(f.poly_degree, r - 1) <= 2 * order - 1)
    return NormValue(_integrand_norm(res, wts, q), not exact, f"gauss{order}")


def lq_norm(f: FieldOracle, region, q, order: int = 8, grid: int = DEFAULT_GRID) -> NormValue:
    """``‖f‖_{L_q}`` over a disjoint list of cells (or a single cell).

    Examples
    --------
    >>> float(lq_norm(FieldOracle.constant(1.0), [Box([0, 0], [1, 0.5])], 2)) ** 2
    0.5
    """
    q = _check_q(q)
    cells = region if isinstance(region, (list, tuple)) else [region]
    if math.isinf(q):
        v = max((float(np.abs(f(_grid(c, grid))).max(initial=0.0)) for c in cells), default=0.0)
        return NormValue(v, True, f"grid{grid}")
    parts = []
    for c in cells:
        pts, wts = _rule(c, order)
        parts.append(_integrand_norm(f(pts), wts, q) ** q)
    return NormValue(math.fsum(parts) ** (1.0 / q), True, f"gauss{order}")


def seminorm(f: FieldOracle, region, p, order: int = 8) -> float:
    """``max_{|α|=r} ‖∂_α f‖_{L_p(region)}`` from ``f.derivatives``."""
    if f.derivatives is None:
        raise ParameterError(f"{f.name} has no derivative evaluator")
    p = _check_q(p)
    cells = region if isinstance(region, (list, tuple)) else [region]
    acc = None
    for c in cells:
        pts, wts = _rule(c, order)
        D = np.atleast_2d(np.asarray(f.derivatives(pts), dtype=float).reshape(pts.shape[0], -1))
        if math.isinf(p):
            part = np.abs(D).max(axis=0)
            acc = part if acc is None else np.maximum(acc, part)
        else:
            part = wts @ np.abs(D) ** p
            acc = part if acc is None else acc + part
    if math.isinf(p):
        return float(acc.max())
    return float((acc ** (1.0 / p)).max())


# ---------------------------------------------------------------------------
# piecewise polynomials and the greedy scheme
# ---------------------------------------------------------------------------


@dataclass
class PiecewisePoly:
    """Pieces ``(region, coefficients)`` over disjoint regions."""

    r: int
    dim: int
    pieces: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pieces)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0])
        hit = np.zeros(x.shape[0], dtype=bool)
        for region, coef in self.pieces:
            m = region.contains(x) & ~hit
            if np.any(m):
                out[m] = evaluate_poly(coef, region, x[m], self.r)
                hit |= m
        return out


@dataclass
class ApproxResult:
    poly: PiecewisePoly
    error: float
    fringe_defect: float
    history: list  # (pieces, error) after every accepted step
    frozen: int

    def error_at(self, budget: int) -> float:
        """Error of the greedy approximation with at most ``budget`` pieces."""
        best = None
        for n, e in self.history:
            if n <= budget:
                best = e
        if best is None:
            raise ParameterError("budget below the first recorded piece count")
        return best


@dataclass(eq=False)
class _Piece:
    region: object
    coef: np.ndarray
    err: float


def _candidates(region, K: int) -> list[list]:
    """Admissible refinements of a piece (each a list of child regions)."""
    if isinstance(region, Box):
        return [region.split()]
    col: Column = region
    out = []
    cut = col.psi_inf - 2.0 ** (-col.level - 1)
    if col.level < K and cut > col.bottom:
        lo = np.append(col.base_lo, col.bottom)
        hi = np.append(col.base_hi, cut)
        out.append([Box(lo, hi, col.level),
                    Column(col.domain, col.base_lo, col.base_hi, cut, col.level + 1,
                           seed=col.base_pieces)])
    mid = 0.5 * (col.base_lo + col.base_hi)
    plo, phi = col.base_pieces
    halves = []
    for corner in itertools.product((0, 1), repeat=col.base_lo.size):
        c = np.array(corner, dtype=bool)
        lo = np.where(c, mid, col.base_lo)
        hi = np.where(c, col.base_hi, mid)
        inside = np.all((plo >= lo) & (phi <= hi), axis=1)
        halves.append(Column(col.domain, lo, hi, col.bottom, col.level,
                             seed=(plo[inside], phi[inside])))
    out.append(halves)
    return out


def adaptive_approximate(f: FieldOracle, tree, budget: int, r: int, p=2, q=2,
                         order: int | None = None, min_width: float = 1e-9) -> ApproxResult:
    """Greedy piecewise-polynomial approximation with at most ``budget`` pieces.

    Starts from the whole domain as one column and repeatedly refines the
    piece with the largest error.  A column at level ``k < K`` may be cut
    horizontally at ``inf ψ − 2^{−k−1}`` (the tree's level spacing) into a
    box and a level-``k+1`` column, or have its base halved; the candidate
    with the larger error reduction is taken.  Boxes are halved along their
    longest side.  A refinement is accepted only if it lowers the summed
    error, otherwise the piece is frozen, so the error is non-increasing in
    the budget.

    Parameters
    ----------
    tree : PartitionTree
        Supplies the domain and the maximal level ``K``.
    p : float
        Declared smoothness exponent (recorded; the scheme itself is
        independent of ``p``).

    Returns
    -------
    ApproxResult
        ``error`` is the ``ℓ_q`` sum (``max`` for ``q = ∞``) of the piece
        errors; ``fringe_defect`` is the part carried by columns that
        reached level ``K`` (already included in ``error``).
    """
    if int(budget) != budget or budget < 1:
        raise ParameterError("budget must be a positive integer")
    q = _check_q(q)
    dom: DomainSpec = tree.domain
    K = int(tree.max_level)

    def make(region) -> _Piece:
        c = project_cell(f, region, r, order)
        return _Piece(region, c, float(cell_error(f, c, region, q, order)))

    def key(e):
        return e if math.isinf(q) else e**q

    root = make(Column(dom, dom.base_lo, dom.base_hi, 0.0, 0))
    heap = [(-key(root.err), 0, root)]
    counter = itertools.count(1)
    frozen: list[_Piece] = []
    total = key(root.err)
    history = [(1, root.err)]
    n = 1
    while heap:
        negk, _, piece = heap[0]
        if -negk <= 0.0:
            break
        lo, hi = piece.region.bbox
        if np.min(hi - lo) < min_width:
            heapq.heappop(heap)
            frozen.append(piece)
            continue
        options = [c for c in _candidates(piece.region, K) if n + len(c) - 1 <= budget]
        if not options:
            break
        heapq.heappop(heap)
        best, gain = None, -math.inf
        for kids in options:
            made = [make(k) for k in kids]
            if math.isinf(q):
                g = piece.err - max(m.err for m in made)
            else:
                g = key(piece.err) - math.fsum(key(m.err) for m in made)
            if g > gain:
                best, gain = made, g
        made = best
        improves = gain > 0.0 if math.isinf(q) else gain > 1e-13 * total
        if not improves:
            frozen.append(piece)
            continue
        for m in made:
            heapq.heappush(heap, (-key(m.err), next(counter), m))
        n += len(made) - 1
        if math.isinf(q):
            cur = max([-heap[0][0]] + [fp.err for fp in frozen])
            history.append((n, cur))
        else:
            total -= gain
            history.append((n, max(total, 0.0) ** (1.0 / q)))
    pieces = [e[2] for e in heap] + frozen
    pieces.sort(key=lambda pc: tuple(pc.region.bbox[0]))
    errs = [pc.err for pc in pieces]
    fringe = [pc.err for pc in pieces if isinstance(pc.region, Column) and pc.region.level >= K]
    if math.isinf(q):
        err = max(errs)
        fd = max(fringe, default=0.0)
    else:
        err = math.fsum(e**q for e in errs) ** (1.0 / q)
        fd = math.fsum(e**q for e in fringe) ** (1.0 / q)
    poly = PiecewisePoly(r, dom.dim, [(pc.region, pc.coef) for pc in pieces])
    return ApproxResult(poly, err, fd, history, len(frozen))


# ---------------------------------------------------------------------------
# subtree projections
# ---------------------------------------------------------------------------


def subtree_region(tree, k: int, j: int) -> Column:
    """The union of cell ``(k, j)`` and all its descendants, as a column."""
    c = tree.cell(k, j)
    return Column(tree.domain, c.base_lo, c.base_hi, c.c_minus, k)


def subtree_ratio(f: FieldOracle, tree, k: int, j: int, r: int, p, q,
                  order: int | None = None) -> float:
    """``‖f − Q f‖_q`` on a subtree region over its predicted scale.

    The scale is ``2^{−k(r+1/q−1/p)} (∏φ_i(2^{−k}))^{1/q−1/p} ‖∇^r f‖_p``
    with the seminorm taken over the same region.
    """
    reg = subtree_region(tree, k, j)
    coef = project_cell(f, reg, r, order)
    err = float(cell_error(f, coef, reg, q, order))
    semi = seminorm(f, reg, p, order or 8)
    ip = 0.0 if math.isinf(float(p)) else 1.0 / float(p)
    iq = 0.0 if math.isinf(float(q)) else 1.0 / float(q)
    t = 2.0**-k
    prod_phi = float(np.prod([m(t) for m in tree.domain.moduli]))
    scale = t ** (r + iq - ip) * prod_phi ** (iq - ip) * semi
    if scale == 0:
        return 0.0 if err == 0 else math.inf
    return err / scale


# ---------------------------------------------------------------------------
# test fields
# ---------------------------------------------------------------------------


def cosine_field(dom: DomainSpec, r: int, p=2, amplitudes=None, freqs=None,
                 phases=None, normalize: bool = True, order: int = 16) -> FieldOracle:
    """Separable test field ``Σ_i a_i cos(ω_i x_i + φ_i)``.

    The only non-zero order-``r`` partials are the pure ones
    ``a_i ω_i^r cos(ω_i x_i + φ_i + rπ/2)``.  With ``normalize`` the field is
    scaled to unit seminorm ``‖∇^r f‖_{L_p(Ω)}`` (computed by composite
    quadrature over the whole domain); the certified value is stored in
    ``seminorm``.  The default puts most of the variation in ``x_d`` so that
    the field is felt throughout the cusp.
    """
    d = dom.dim
    a = np.ones(d) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    w = np.full(d, math.pi) if freqs is None else np.asarray(freqs, dtype=float)
    if amplitudes is None:
        a[:-1] = 0.25
    if freqs is None:
        w[-1] = 2.0 * math.pi
    ph = np.zeros(d) if phases is None else np.asarray(phases, dtype=float)

    def fn(x):
        return np.cos(x * w + ph) @ a

    def der(x):
        return a * w**r * np.cos(x * w + ph + r * math.pi / 2.0)

    f = FieldOracle(fn, der, r=r, p=float(p), name="cosine")
    root = Column(dom, dom.base_lo, dom.base_hi, 0.0, 0)
    semi = seminorm(f, root, p, order)
    if not normalize:
        return FieldOracle(fn, der, r, float(p), semi, None, "cosine")
    g = f.scaled(1.0 / semi)
    return FieldOracle(g.fn, g.derivatives, r, float(p), 1.0, None, "cosine")
