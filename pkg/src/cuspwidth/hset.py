"""Self-similar Cantor h-sets and coordinate-plane h-sets.

An h-set here is a compact set ``Γ ⊂ [o, o+1]^k`` (``k = d - 1``, ``o`` the
cube origin) carrying a measure with ``μ(B_t(x)) ≍ t^θ``.  Two kinds are
supported:

``cantor``
    The constant-ratio construction: the unit cube is split into ``m^k``
    congruent subcubes with centres ``v_j`` and each is replaced by a copy of
    the whole scaled by ``λ = m^{-k/θ}``.  Because the subcube centres form a
    tensor grid, the limit set is the Cartesian product of ``k`` identical
    one-dimensional Cantor sets and the natural measure is the product of the
    one-dimensional natural measures.  With the l∞ norm every distance
    query therefore separates over the axes, which is what makes exact
    distances (to the limit set, not only to an approximant) cheap.

``plane``
    ``Γ = {x : x_{θ+1} = … = x_k = o + 1/2}`` with ``θ``-dimensional Lebesgue
    measure.  Also separable.

Each axis is described by an object implementing ``dist``, ``interval_min``
and ``interval_max``; consumers (the domain and the partition tree) work
exclusively through these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ParameterError

_GAP_TABLE_CAP = 1 << 22


# ---------------------------------------------------------------------------
# one-dimensional factors
# ---------------------------------------------------------------------------


class CantorAxis:
    """Limit set of the 1-D IFS ``u ↦ λu + v_j`` on ``[c - 1/2, c + 1/2]``.

    Parameters
    ----------
    lam : float
        Contraction ratio, ``0 < lam < 1/m``.
    m : int
        Number of maps.
    center : float
        Centre of the unit interval the set lives in.
    """

    def __init__(self, lam: float, m: int, center: float = 0.5):
        self.lam = float(lam)
        self.m = int(m)
        self.center = float(center)
        self.v = -0.5 + (np.arange(self.m) + 0.5) / self.m
        # hull [-h, h] of the limit set: fixed point of the right-most map
        self.h = float(self.v[-1] / (1.0 - self.lam))
        self._gaps: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- nearest points -------------------------------------------------
    def nearest(self, u) -> tuple[np.ndarray, np.ndarray]:
        """Nearest points of the set to the left and right of ``u``.

        Returns ``(L, R)`` with ``L ≤ u ≤ R``; ``L = R = u`` (to rounding)
        when ``u`` lies on the set, ``±inf`` when there is no such point.
        """
        u = np.asarray(u, dtype=float)
        shape = u.shape
        w = u.reshape(-1) - self.center
        lam, m, h, v = self.lam, self.m, self.h, self.v
        L = np.full(w.shape, -np.inf)
        R = np.full(w.shape, np.inf)
        below = w < -h
        above = w > h
        R[below] = -h
        L[above] = h
        act = np.flatnonzero(~(below | above))
        loc = w[act]
        off = np.zeros_like(loc)
        s = 1.0
        while act.size:
            if s < 1e-17:
                p = off + s * loc
                L[act] = p
                R[act] = p
                break
            j = np.clip(np.floor((loc + 0.5) * m).astype(np.int64), 0, m - 1)
            vj = v[j]
            lo_c = vj - lam * h
            hi_c = vj + lam * h
            gl = loc < lo_c
            gr = loc > hi_c
            # left gap (j >= 1) / right gap (j <= m-2); at the hull ends the
            # comparison can only trip through rounding, treat as on-set.
            jl = np.maximum(j - 1, 0)
            jr = np.minimum(j + 1, m - 1)
            Ll = np.where(j > 0, v[jl] + lam * h, lo_c)
            Rr = np.where(j < m - 1, v[jr] - lam * h, hi_c)
            done = gl | gr
            if done.any():
                ia = act[gl]
                L[ia] = off[gl] + s * Ll[gl]
                R[ia] = off[gl] + s * lo_c[gl]
                ia = act[gr]
                L[ia] = off[gr] + s * hi_c[gr]
                R[ia] = off[gr] + s * Rr[gr]
                keep = ~done
                act, loc, off, vj = act[keep], loc[keep], off[keep], vj[keep]
            off = off + s * vj
            loc = (loc - vj) / lam
            s *= lam
        return (L + self.center).reshape(shape), (R + self.center).reshape(shape)

    def dist(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        L, R = self.nearest(u)
        return np.minimum(u - L, R - u)

    def interval_min(self, a, b) -> np.ndarray:
        """Exact ``min_{a ≤ u ≤ b} dist(u)`` (distance from ``[a, b]`` to the set)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        L, R = self.nearest(a)
        return np.where(R <= b, 0.0, np.minimum(a - L, R - b))

    # -- gap table used by interval_max ---------------------------------
    def half_gap(self, g: int) -> float:
        """Half length of the gaps created at construction depth ``g ≥ 1``."""
        return self.lam ** (g - 1) * (1.0 / self.m - 2.0 * self.lam * self.h) / 2.0

    def _gap_table(self, depth: int) -> tuple[np.ndarray, np.ndarray]:
        if depth not in self._gaps:
            mids, halves = [], []
            centers = np.zeros(1)
            for g in range(1, depth + 1):
                s = self.lam ** (g - 1)
                pair_mid = (self.v[:-1] + self.v[1:]) / 2.0
                mids.append((centers[:, None] + s * pair_mid[None, :]).ravel())
                halves.append(np.full(mids[-1].size, self.half_gap(g)))
                centers = (centers[:, None] + s * self.v[None, :]).ravel()
            mid = np.concatenate(mids) + self.center
            hal = np.concatenate(halves)
            order = np.argsort(mid, kind="stable")
            # half-gaps padded with -inf so reduceat can address the end
            self._gaps[depth] = (mid[order], np.append(hal[order], -np.inf))
        return self._gaps[depth]

    def grid_extrema(self, edges, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Exact min and max of ``dist`` over consecutive intervals of a grid.

        Equivalent to ``interval_min``/``interval_max`` on
        ``(edges[:-1], edges[1:])`` but locates every edge only once.
        """
        edges = np.asarray(edges, dtype=float)
        L, R = self.nearest(edges)
        d = np.minimum(edges - L, R - edges)
        a, b = edges[:-1], edges[1:]
        dmin = np.where(R[:-1] <= b, 0.0, np.minimum(a - L[:-1], R[:-1] - b))
        dmax = self._gap_peaks(a, b, np.maximum(d[:-1], d[1:]), tol)
        return dmin, dmax

    def _gap_peaks(self, a, b, out, tol):
        if out.size == 0:
            return out
        if tol is None:
            w = float(np.min(b - a))
            tol = 1e-6 * w if w > 0 else 1e-12
        tol = max(tol, 1e-300)
        depth = 0
        while self.half_gap(depth + 1) >= tol and self.m ** (depth + 1) < _GAP_TABLE_CAP:
            depth += 1
        if depth == 0:
            return out
        mid, padded = self._gap_table(depth)
        i0 = np.searchsorted(mid, a, side="left")
        i1 = np.searchsorted(mid, b, side="right")
        nonempty = i1 > i0
        if nonempty.any():
            idx = np.empty(2 * int(nonempty.sum()), dtype=np.int64)
            idx[0::2] = i0[nonempty]
            idx[1::2] = i1[nonempty]
            peaks = np.maximum.reduceat(padded, idx)[0::2]
            out[nonempty] = np.maximum(out[nonempty], peaks)
        return out

    def interval_max(self, a, b, tol: float | None = None) -> np.ndarray:
        """``max_{a ≤ u ≤ b} dist(u)``.

        The maximum is attained at an endpoint or at the midpoint of a gap
        lying inside ``[a, b]``; gaps with half-length below ``tol`` (default
        ``1e-6·min(b − a)``) are ignored, so the result is exact up to
        ``tol``.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        shape = np.broadcast(a, b).shape
        a = np.broadcast_to(a, shape).ravel()
        b = np.broadcast_to(b, shape).ravel()
        out = self._gap_peaks(a, b, np.maximum(self.dist(a), self.dist(b)), tol)
        return out.reshape(shape)

    def interval_extrema(self, a, b, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``(interval_min, interval_max)`` with one nearest-point pass."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        shape = np.broadcast(a, b).shape
        a = np.broadcast_to(a, shape).ravel()
        b = np.broadcast_to(b, shape).ravel()
        L, R = self.nearest(np.concatenate([a, b]))
        n = a.size
        u = np.concatenate([a, b])
        d = np.minimum(u - L, R - u)
        dmin = np.where(R[:n] <= b, 0.0, np.minimum(a - L[:n], R[:n] - b))
        dmax = self._gap_peaks(a, b, np.maximum(d[:n], d[n:]), tol)
        return dmin.reshape(shape), dmax.reshape(shape)

    # -- construction cells ---------------------------------------------
    def level_centers(self, level: int) -> np.ndarray:
        """Sorted centres of the ``m^level`` construction intervals."""
        c = np.zeros(1)
        for g in range(level):
            c = (c[:, None] + self.lam**g * self.v[None, :]).ravel()
        return np.sort(c) + self.center

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Points of the limit set drawn from the natural measure."""
        depth = max(1, int(math.ceil(math.log(1e-17) / math.log(self.lam))))
        digits = rng.integers(0, self.m, size=(size, depth))
        scales = self.lam ** np.arange(depth)
        return self.center + (self.v[digits] * scales).sum(axis=1)


class PointAxis:
    """The single point ``{c}``."""

    def __init__(self, c: float):
        self.c = float(c)

    def dist(self, u):
        return np.abs(np.asarray(u, dtype=float) - self.c)

    def interval_min(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return np.maximum(np.maximum(a - self.c, self.c - b), 0.0)

    def interval_max(self, a, b, tol=None):
        return np.maximum(self.dist(a), self.dist(b))


class SegmentAxis:
    """The closed segment ``[lo, hi]``."""

    def __init__(self, lo: float, hi: float):
        self.lo = float(lo)
        self.hi = float(hi)

    def dist(self, u):
        u = np.asarray(u, dtype=float)
        return np.maximum(np.maximum(self.lo - u, u - self.hi), 0.0)

    def interval_min(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return np.maximum(np.maximum(self.lo - b, a - self.hi), 0.0)

    def interval_max(self, a, b, tol=None):
        return np.maximum(self.dist(a), self.dist(b))


class UnionAxis:
    """Finite union of equal closed intervals ``[c_i - w, c_i + w]``."""

    def __init__(self, centers: np.ndarray, halfwidth: float):
        self.centers = np.sort(np.asarray(centers, dtype=float))
        self.w = float(halfwidth)

    def dist(self, u):
        u = np.asarray(u, dtype=float)
        i = np.searchsorted(self.centers, u)
        lo = self.centers[np.clip(i - 1, 0, self.centers.size - 1)]
        hi = self.centers[np.clip(i, 0, self.centers.size - 1)]
        d = np.minimum(np.abs(u - lo), np.abs(u - hi)) - self.w
        return np.maximum(d, 0.0)


# ---------------------------------------------------------------------------
# the h-set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HSet:
    """A θ-regular set in ``[origin, origin + 1]^{ambient_dim}``.

    Use :func:`build` rather than the constructor.
    """

    kind: str
    ambient_dim: int
    theta: float
    depth: int
    m: int = 2
    lam: float = 0.0
    origin: float = 0.0
    c_star: float = 8.0

    # -- geometry -------------------------------------------------------
    @cached_property
    def axes(self) -> tuple:
        """Per-axis factor sets (the limit set is their product)."""
        c = self.origin + 0.5
        if self.kind == "cantor":
            ax = CantorAxis(self.lam, self.m, c)
            return tuple(ax for _ in range(self.ambient_dim))
        th = int(self.theta)
        free = [SegmentAxis(self.origin, self.origin + 1.0)] * th
        fixed = [PointAxis(c)] * (self.ambient_dim - th)
        return tuple(free + fixed)

    @cached_property
    def approximant_axes(self) -> tuple:
        """Per-axis factors of the depth-K cell approximant ``E_K``."""
        if self.kind != "cantor":
            return self.axes
        ax = self.axes[0]
        ua = UnionAxis(ax.level_centers(self.depth), self.halfwidth(self.depth))
        return tuple(ua for _ in range(self.ambient_dim))

    @property
    def approximation_radius(self) -> float:
        """Bound on ``|dist(x, E_K) − dist(x, Γ)|``."""
        return self.halfwidth(self.depth) if self.kind == "cantor" else 0.0

    def halfwidth(self, level: int) -> float:
        return 0.5 * self.lam**level

    def mass(self, level: int) -> float:
        return float(self.m) ** (-self.ambient_dim * level)

    def cell_count(self, level: int) -> int:
        return self.m ** (self.ambient_dim * level)

    def h(self, t):
        """The regularity function ``h(t) = t^θ``."""
        return np.asarray(t, dtype=float) ** self.theta

    def _as_points(self, xprime) -> np.ndarray:
        x = np.asarray(xprime, dtype=float)
        if x.shape[-1] != self.ambient_dim:
            raise ParameterError(
                f"expected points with {self.ambient_dim} coordinates, got shape {x.shape}"
            )
        return x

    def distance(self, xprime, exact: bool = False) -> np.ndarray:
        """l∞ distance to ``Γ``.

        By default the distance to the depth-K approximant ``E_K`` is
        returned (it differs from the limit-set distance by at most
        :attr:`approximation_radius`); ``exact=True`` returns the distance
        to the limit set itself.
        """
        x = self._as_points(xprime)
        axes = self.axes if exact else self.approximant_axes
        out = axes[0].dist(x[..., 0])
        for i in range(1, self.ambient_dim):
            out = np.maximum(out, axes[i].dist(x[..., i]))
        return out

    def box_distance(self, lo, hi) -> np.ndarray:
        """Exact l∞ distance between the box ``[lo, hi]`` and the limit set."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = self.axes[0].interval_min(lo[..., 0], hi[..., 0])
        for i in range(1, self.ambient_dim):
            out = np.maximum(out, self.axes[i].interval_min(lo[..., i], hi[..., i]))
        return out

    # -- construction cells ---------------------------------------------
    def level_centers_1d(self, level: int) -> np.ndarray:
        if self.kind != "cantor":
            raise ParameterError("construction cells exist only for cantor h-sets")
        return self.axes[0].level_centers(level)

    def cells(self, level: int) -> tuple[np.ndarray, float, float]:
        """Level-``level`` construction cubes.

        Returns
        -------
        centers : ndarray, shape (m^{k·level}, k)
            Lexicographically ordered cube centres.
        halfwidth : float
        mass : float
            Natural-measure mass of each cube.
        """
        if not 0 <= level <= self.depth:
            raise ParameterError(f"level {level} outside 0..{self.depth}")
        c1 = self.level_centers_1d(level)
        grids = np.meshgrid(*([c1] * self.ambient_dim), indexing="ij")
        centers = np.stack([g.ravel() for g in grids], axis=-1)
        return centers, self.halfwidth(level), self.mass(level)

    # -- regularity -----------------------------------------------------
    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Points of ``Γ`` drawn from its natural measure."""
        if self.kind == "cantor":
            ax = self.axes[0]
            return np.stack([ax.sample(size, rng) for _ in range(self.ambient_dim)], axis=-1)
        th = int(self.theta)
        x = np.full((size, self.ambient_dim), self.origin + 0.5)
        x[:, :th] = self.origin + rng.random((size, th))
        return x

    def ball_mass(self, x, t) -> np.ndarray:
        """``μ(B_t(x))`` for points ``x`` and radii ``t`` (broadcast).

        For cantor sets the mass of every depth-K cell whose portion of the
        hull of ``Γ`` meets the closed ball is counted, so the value is an
        upper approximation that becomes exact as K grows.
        """
        x = self._as_points(x)
        t = np.asarray(t, dtype=float)
        if self.kind == "cantor":
            ax = self.axes[0]
            c1 = ax.level_centers(self.depth)
            r = self.lam**self.depth * ax.h
            lo, hi = c1 - r, c1 + r
            n = None
            for i in range(self.ambient_dim):
                xi = x[..., i]
                cnt = np.searchsorted(lo, xi + t, side="right") - np.searchsorted(
                    hi, xi - t, side="left"
                )
                n = cnt if n is None else n * cnt
            return n * self.mass(self.depth)
        th = int(self.theta)
        out = np.ones(np.broadcast(x[..., 0], t).shape)
        for i in range(th):
            xi = x[..., i]
            seg = np.minimum(xi + t, self.origin + 1.0) - np.maximum(xi - t, self.origin)
            out = out * np.clip(seg, 0.0, None)
        for i in range(th, self.ambient_dim):
            out = out * (np.abs(x[..., i] - (self.origin + 0.5)) <= t)
        return out

    def regularity_check(
        self, samples: int, t_grid: Sequence[float], seed: int = 0
    ) -> "RegularityReport":
        """Sampled two-sided regularity ratios ``μ(B_t(x)) / h(t)``."""
        t = np.asarray(list(t_grid), dtype=float)
        if t.size == 0 or np.any(~(t > 0)) or np.any(t > 1):
            raise ParameterError("every radius must lie in (0, 1]")
        if samples < 1:
            raise ParameterError("samples must be positive")
        rng = np.random.default_rng(seed)
        x = self.sample(samples, rng)
        mass = self.ball_mass(x[:, None, :], t[None, :])
        ratio = mass / self.h(t)[None, :]
        rmax, rmin = float(ratio.max()), float(ratio.min())
        return RegularityReport(
            ratio_max=rmax,
            ratio_min=rmin,
            c_star=self.c_star,
            passed=bool(rmax <= self.c_star and rmin >= 1.0 / self.c_star),
            samples=samples,
            t_grid=tuple(float(v) for v in t),
        )

    # -- serialisation --------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ambient_dim": self.ambient_dim,
            "theta": self.theta,
            "depth": self.depth,
            "m": self.m,
            "lambda": self.lam,
            "origin": self.origin,
            "c_star": self.c_star,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HSet":
        try:
            kind = data["kind"]
            k = int(data["ambient_dim"]) if "ambient_dim" in data else int(data["dim"]) - 1
            theta = float(data["theta"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed h-set description: {exc}") from None
        return build(
            theta,
            k + 1,
            int(data.get("depth", 8)),
            kind,
            origin=float(data.get("origin", 0.0)),
            c_star=float(data.get("c_star", 8.0)),
        )

    def cell_rows(self, levels: Sequence[int] | None = None):
        """Rows ``(level, center_1.., halfwidth, mass)`` for a CSV dump."""
        levels = range(self.depth + 1) if levels is None else levels
        for lev in levels:
            centers, hw, mass = self.cells(lev)
            for c in centers:
                yield (lev, *c.tolist(), hw, mass)


@dataclass(frozen=True)
class RegularityReport:
    ratio_max: float
    ratio_min: float
    c_star: float
    passed: bool
    samples: int
    t_grid: tuple


def build(
    theta: float,
    d: int,
    depth: int,
    kind: str = "cantor",
    *,
    origin: float = 0.0,
    c_star: float = 8.0,
) -> HSet:
    """Construct a θ-regular h-set in ``[origin, origin+1]^{d-1}``.

    Parameters
    ----------
    theta : float
        Regularity exponent; ``0 < θ < d − 1`` for ``cantor``, an integer in
        ``1..d−2`` for ``plane``.
    d : int
        Ambient dimension of the *domain*; the set lives in dimension ``d − 1``.
    depth : int
        Number of construction levels retained (``≥ 1``).
    kind : {"cantor", "plane"}
    origin : float
        Lower corner of the unit cube (``0`` or ``-1/2`` for the centred cube).

    Examples
    --------
    >>> g = build(1.0, 3, 3)
    >>> g.m, g.lam, g.cell_count(3)
    (2, 0.25, 64)
    """
    d = int(d)
    depth = int(depth)
    if d < 2:
        raise ParameterError("d must be at least 2")
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    k = d - 1
    theta = float(theta)
    if kind == "cantor":
        if not 0.0 < theta < k:
            raise ParameterError(f"cantor h-set needs 0 < theta < d-1 = {k}, got {theta}")
        m = 2
        while not m ** (-k / theta) < 1.0 / m:
            m += 1
        lam = float(m) ** (-k / theta)
        return HSet("cantor", k, theta, depth, m, lam, float(origin), float(c_star))
    if kind == "plane":
        if theta != int(theta) or not 1 <= int(theta) <= d - 2:
            raise ParameterError(f"plane h-set needs integer theta in 1..{d - 2}, got {theta}")
        return HSet("plane", k, float(int(theta)), depth, 1, 0.0, float(origin), float(c_star))
    raise ParameterError(f"unknown h-set kind {kind!r}")
