"""Cusp domains ``Ω = {x : x′ ∈ (o, o+1)^{d−1}, 0 < x_d < ψ(x′)}``.

Three kinds of upper boundary ``ψ`` are supported:

``constant``
    ``ψ ≡ c`` with ``c ∈ [1, 2]``.
``hset_cusp``
    ``ψ(x′) = 2 − dist(x′, Γ)^{1/σ}`` for an h-set ``Γ`` (l∞ distance to
    the limit set).
``explicit_sample``
    ``ψ`` given by samples on a uniform grid over the closed base cube,
    multilinearly interpolated.

The first two are *separable*: ``ψ(x′) = top − (max_i δ_i(x_i))^{1/σ}`` with
one-dimensional distance profiles ``δ_i``.  Separable domains expose exact
box infima/suprema through per-axis interval extrema, which the partition
tree exploits to stay in product form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, InvalidDomainError, ParameterError
from .hset import HSet, SegmentAxis

_LOG_GRID = 2.0 ** -np.arange(0, 40.125, 0.125)


@dataclass(frozen=True)
class BoundaryModulus:
    """Boundary modulus ``φ(t) = scale · t^σ · ln(e/t)^β``.

    ``kind="power"`` forces ``β = 0``.  ``a_star`` defaults to the smallest
    constant satisfying ``φ(t) ≤ a_* t`` and ``φ(2t) ≤ a_* φ(t)`` (closed form
    for pure powers, a fine logarithmic grid otherwise).
    """

    kind: str = "power"
    sigma: float = 1.0
    scale: float = 1.0
    beta: float = 0.0
    a_star: float | None = None

    def __post_init__(self):
        if self.kind not in ("power", "power_log"):
            raise ParameterError(f"unknown modulus kind {self.kind!r}")
        if not self.sigma >= 1.0:
            raise ParameterError("modulus exponent sigma must be >= 1")
        if not 0.0 < self.scale <= 1.0:
            raise ParameterError("modulus scale must lie in (0, 1]")
        if self.kind == "power" and self.beta != 0.0:
            raise ParameterError("beta is only meaningful for power_log moduli")
        if self.kind == "power_log" and self.beta > self.sigma:
            raise ParameterError("power_log modulus needs beta <= sigma to be monotone")
        if self.a_star is None:
            object.__setattr__(self, "a_star", self._default_a_star())
        elif self.a_star < 1.0:
            raise ParameterError("a_star must be >= 1")

    def _default_a_star(self) -> float:
        if self.kind == "power":
            return max(1.0, self.scale, 2.0**self.sigma)
        t = _LOG_GRID
        lin = np.max(self(t) / t)
        dbl = np.max(self(t[1:] * 2.0) / self(t[1:]))
        return float(max(1.0, lin, dbl)) * (1.0 + 1e-12)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.scale * t**self.sigma
        if self.beta:
            out = out * np.log(math.e / t) ** self.beta
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "sigma": self.sigma, "scale": self.scale}
        if self.kind == "power_log":
            d["beta"] = self.beta
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "BoundaryModulus":
        return cls(
            kind=data.get("kind", "power"),
            sigma=float(data.get("sigma", 1.0)),
            scale=float(data.get("scale", 1.0)),
            beta=float(data.get("beta", 0.0)),
            a_star=data.get("a_star"),
        )


def modulus_eval(m: BoundaryModulus, t) -> float | np.ndarray:
    """Evaluate ``φ(t)`` for ``0 < t ≤ 1``.

    Examples
    --------
    >>> modulus_eval(BoundaryModulus("power", 2.0, 0.3), 0.125)
    0.0046875
    """
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise DomainError("modulus argument must lie in (0, 1]")
    out = m(arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DomainSpec:
    """A cusp domain below the graph ``x_d = ψ(x′)``.

    Build instances with :meth:`constant`, :meth:`hset_cusp` or
    :meth:`explicit`.
    """

    dim: int
    moduli: tuple
    psi_kind: str
    sigma: float = 1.0
    value: float = 2.0
    hset: HSet | None = None
    grid: np.ndarray | None = field(default=None, repr=False, compare=False)
    origin: float = 0.0

    # -- construction ---------------------------------------------------
    def __post_init__(self):
        if self.dim < 2:
            raise ParameterError("dim must be at least 2")
        if len(self.moduli) != self.dim - 1:
            raise ParameterError(f"need {self.dim - 1} boundary moduli, got {len(self.moduli)}")
        if self.psi_kind == "constant":
            if not 1.0 <= self.value <= 2.0:
                raise InvalidDomainError("constant psi must lie in [1, 2]")
        elif self.psi_kind == "hset_cusp":
            if self.hset is None:
                raise ConfigurationError("hset_cusp domain requires an h-set")
            if self.hset.ambient_dim != self.dim - 1:
                raise ConfigurationError("h-set dimension does not match the domain")
            if self.hset.origin != self.origin:
                raise ConfigurationError("h-set and domain use different cube origins")
            if not self.sigma >= 1.0:
                raise ParameterError("sigma must be >= 1")
        elif self.psi_kind == "explicit_sample":
            g = self.grid
            if g is None or g.ndim != self.dim - 1 or min(g.shape) < 2:
                raise ConfigurationError("explicit_sample needs a (d-1)-dimensional grid")
            if not np.all(np.isfinite(g)):
                raise InvalidDomainError("psi samples must be finite")
            if g.min() < 1.0 - 1e-12 or g.max() > 2.0 + 1e-12:
                raise InvalidDomainError("psi samples must lie in [1, 2]")
        else:
            raise ParameterError(f"unknown psi kind {self.psi_kind!r}")

    @classmethod
    def constant(cls, dim: int, moduli=None, value: float = 2.0, origin: float = 0.0):
        moduli = _moduli(dim, moduli, 1.0)
        return cls(dim, moduli, "constant", value=float(value), origin=float(origin))

    @classmethod
    def hset_cusp(cls, hset: HSet, sigma: float, moduli=None, scale: float | None = None):
        """The domain ``ψ(x′) = 2 − dist(x′, Γ)^{1/σ}``.

        Unless moduli are given explicitly, ``φ_i(t) = a·t^σ`` with ``a`` the
        largest power of two ``≤ 1`` passing the sampled Hölder check
        (``a = 1`` always passes, see :meth:`holder_check`).
        """
        dim = hset.ambient_dim + 1
        if moduli is None and scale is None:
            dom = None
            for a in 2.0 ** -np.arange(0, 8):
                dom = cls(dim, _moduli(dim, None, sigma, a), "hset_cusp", float(sigma),
                          hset=hset, origin=hset.origin)
                if dom.holder_check(4096, seed=0):
                    return dom
            return dom
        moduli = _moduli(dim, moduli, sigma, 1.0 if scale is None else scale)
        return cls(dim, moduli, "hset_cusp", float(sigma), hset=hset, origin=hset.origin)

    @classmethod
    def explicit(cls, grid, moduli, origin: float = 0.0):
        grid = np.asarray(grid, dtype=float)
        dim = grid.ndim + 1
        return cls(dim, _moduli(dim, moduli, 1.0), "explicit_sample", grid=grid,
                   origin=float(origin))

    # -- separable structure --------------------------------------------
    @property
    def separable(self) -> bool:
        return self.psi_kind in ("constant", "hset_cusp")

    @property
    def top(self) -> float:
        return self.value if self.psi_kind == "constant" else 2.0

    @property
    def axis_sets(self) -> tuple:
        """Per-axis 1-D sets whose distance profiles make up ``ψ``."""
        if self.psi_kind == "hset_cusp":
            return self.hset.axes
        if self.psi_kind == "constant":
            seg = SegmentAxis(self.origin - 1.0, self.origin + 2.0)
            return tuple(seg for _ in range(self.dim - 1))
        raise ConfigurationError("explicit_sample domains are not separable")

    def psi_from_dist(self, D):
        """``top − D^{1/σ}`` (``D`` the combined l∞ distance)."""
        D = np.asarray(D, dtype=float)
        if self.psi_kind == "constant":
            return np.full(D.shape, self.value)
        return 2.0 - D ** (1.0 / self.sigma)

    # -- evaluation -----------------------------------------------------
    @property
    def base_lo(self) -> np.ndarray:
        return np.full(self.dim - 1, self.origin)

    @property
    def base_hi(self) -> np.ndarray:
        return np.full(self.dim - 1, self.origin + 1.0)

    @property
    def base_area(self) -> float:
        return 1.0

    def psi(self, xprime) -> np.ndarray:
        """Evaluate ``ψ`` at points of shape ``(..., d−1)``."""
        x = np.asarray(xprime, dtype=float)
        if x.shape[-1] != self.dim - 1:
            raise ParameterError(f"expected {self.dim - 1} base coordinates")
        if self.psi_kind == "constant":
            return np.full(x.shape[:-1], self.value)
        if self.psi_kind == "hset_cusp":
            return self.psi_from_dist(self.hset.distance(x, exact=True))
        return self._interp(x)

    def _interp(self, x: np.ndarray) -> np.ndarray:
        g = self.grid
        k = self.dim - 1
        flat = x.reshape(-1, k)
        idx, frac = [], []
        for i in range(k):
            n = g.shape[i] - 1
            s = np.clip((flat[:, i] - self.origin) * n, 0.0, n)
            j = np.minimum(np.floor(s).astype(np.int64), n - 1)
            idx.append(j)
            frac.append(s - j)
        out = np.zeros(flat.shape[0])
        for corner in itertools.product((0, 1), repeat=k):
            w = np.ones(flat.shape[0])
            ii = []
            for i, c in enumerate(corner):
                w = w * (frac[i] if c else 1.0 - frac[i])
                ii.append(idx[i] + c)
            out += w * g[tuple(ii)]
        return out.reshape(x.shape[:-1])

    def contains(self, x) -> np.ndarray | bool:
        """Membership ``x′ ∈ open base cube and 0 < x_d < ψ(x′)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ParameterError(f"expected points with {self.dim} coordinates")
        xp = x[..., :-1]
        inside = np.all((xp > self.origin) & (xp < self.origin + 1.0), axis=-1)
        xd = x[..., -1]
        res = inside & (xd > 0.0)
        if np.any(res):
            psi = self.psi(np.clip(xp, self.origin, self.origin + 1.0))
            res = res & (xd < psi)
        return bool(res) if res.ndim == 0 else res

    # -- box extrema ----------------------------------------------------
    def box_inf(self, lo, hi) -> np.ndarray:
        """Exact ``inf`` of ``ψ`` over boxes ``[lo, hi]`` (arrays ``(..., d−1)``)."""
        return self._box_extreme(lo, hi, lower=True)

    def box_sup(self, lo, hi) -> np.ndarray:
        """Exact ``sup`` of ``ψ`` over boxes ``[lo, hi]``."""
        return self._box_extreme(lo, hi, lower=False)

    def box_extrema(self, lo, hi) -> tuple[np.ndarray, np.ndarray]:
        """``(inf, sup)`` of ``ψ`` over boxes, sharing the per-axis work."""
        if self.psi_kind != "hset_cusp":
            return self.box_inf(lo, hi), self.box_sup(lo, hi)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        Dmin = Dmax = None
        for i, ax in enumerate(self.axis_sets):
            if hasattr(ax, "interval_extrema"):
                a, b = ax.interval_extrema(lo[..., i], hi[..., i])
            else:
                a, b = ax.interval_min(lo[..., i], hi[..., i]), ax.interval_max(lo[..., i], hi[..., i])
            Dmin = a if Dmin is None else np.maximum(Dmin, a)
            Dmax = b if Dmax is None else np.maximum(Dmax, b)
        return self.psi_from_dist(Dmax), self.psi_from_dist(Dmin)

    def _box_extreme(self, lo, hi, lower: bool) -> np.ndarray:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if self.psi_kind == "constant":
            return np.full(np.broadcast(lo[..., 0], hi[..., 0]).shape, self.value)
        if self.psi_kind == "hset_cusp":
            axes = self.axis_sets
            f = (lambda ax, a, b: ax.interval_max(a, b)) if lower else (
                lambda ax, a, b: ax.interval_min(a, b))
            D = f(axes[0], lo[..., 0], hi[..., 0])
            for i in range(1, self.dim - 1):
                D = np.maximum(D, f(axes[i], lo[..., i], hi[..., i]))
            return self.psi_from_dist(D)
        return self._grid_box_extreme(lo, hi, lower)

    def _grid_box_extreme(self, lo, hi, lower: bool) -> np.ndarray:
        # A multilinear interpolant attains its extrema over a box at a
        # vertex of the box clipped to the grid cells it meets.
        shape = np.broadcast(lo[..., 0], hi[..., 0]).shape
        k = self.dim - 1
        lo = np.broadcast_to(lo, shape + (k,)).reshape(-1, k)
        hi = np.broadcast_to(hi, shape + (k,)).reshape(-1, k)
        red = np.minimum if lower else np.maximum
        out = self.psi(lo)
        for corner in itertools.product((0, 1), repeat=k):
            out = red(out, self.psi(np.where(np.array(corner, bool), hi, lo)))
        # grid nodes strictly inside some boxes: per-box enumeration
        n = np.array(self.grid.shape) - 1
        first = np.floor((lo - self.origin) * n).astype(np.int64) + 1
        last = np.ceil((hi - self.origin) * n).astype(np.int64) - 1
        interior = np.flatnonzero(np.any(last >= first, axis=1))
        for b in interior:
            coords = []
            for i in range(k):
                pts = [lo[b, i], hi[b, i]]
                if last[b, i] >= first[b, i]:
                    pts.extend(self.origin + np.arange(first[b, i], last[b, i] + 1) / n[i])
                coords.append(np.asarray(pts))
            mesh = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1).reshape(-1, k)
            vals = self.psi(mesh)
            out[b] = vals.min() if lower else vals.max()
        return out.reshape(shape)

    # -- checks ---------------------------------------------------------
    def holder_check(self, pairs: int = 10_000, seed: int = 0) -> bool:
        """Sampled Hölder compatibility of ``ψ`` with the moduli.

        Draws ``x′``, a scale ``t`` and ``y′`` with ``|x_i − y_i| ≤ φ_i(t)``
        and verifies ``|ψ(x′) − ψ(y′)| ≤ t``.
        """
        rng = np.random.default_rng(seed)
        k = self.dim - 1
        x = self.origin + rng.random((pairs, k))
        if self.psi_kind == "hset_cusp":
            # half of the anchors on Γ, where the cusp is sharpest
            x[: pairs // 2] = self.hset.sample(pairs // 2, rng)
        t = 2.0 ** rng.uniform(-30.0, 0.0, pairs)
        step = np.stack([self.moduli[i](t) for i in range(k)], axis=-1)
        y = np.clip(x + step * rng.uniform(-1.0, 1.0, (pairs, k)), self.origin, self.origin + 1.0)
        gap = np.abs(self.psi(x) - self.psi(y))
        # distances carry ~1e-16 absolute rounding, which the 1/σ root inflates
        floor = (8 * np.finfo(float).eps) ** (1.0 / self.sigma) if self.psi_kind == "hset_cusp" else 1e-15
        return bool(np.all(gap <= t * (1.0 + 1e-9) + floor))

    def psi_range(self, samples: int = 4096, seed: int = 0) -> tuple[float, float]:
        rng = np.random.default_rng(seed)
        vals = self.psi(self.origin + rng.random((samples, self.dim - 1)))
        return float(vals.min()), float(vals.max())

    # -- serialisation --------------------------------------------------
    def to_dict(self) -> dict:
        psi: dict = {"kind": self.psi_kind}
        if self.psi_kind == "constant":
            psi["value"] = self.value
        elif self.psi_kind == "hset_cusp":
            psi["sigma"] = self.sigma
            psi["hset"] = self.hset.to_dict()
        else:
            psi["grid"] = self.grid.tolist()
        return {
            "dim": self.dim,
            "moduli": [m.to_dict() for m in self.moduli],
            "psi": psi,
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DomainSpec":
        from .hset import HSet as _H

        try:
            dim = int(data["dim"])
            psi = data["psi"]
            kind = psi["kind"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed domain description: missing {exc}") from None
        moduli = data.get("moduli")
        if moduli is not None:
            moduli = tuple(BoundaryModulus.from_dict(m) for m in moduli)
        origin = float(data.get("origin", 0.0))
        if kind == "constant":
            return cls.constant(dim, moduli, float(psi.get("value", 2.0)), origin)
        if kind == "hset_cusp":
            if "hset" not in psi:
                raise ConfigurationError("hset_cusp domain requires an h-set")
            hd = dict(psi["hset"])
            hd.setdefault("ambient_dim", dim - 1)
            hd.setdefault("origin", origin)
            hs = _H.from_dict(hd)
            return cls.hset_cusp(hs, float(psi.get("sigma", 1.0)), moduli=moduli)
        if kind == "explicit_sample":
            return cls.explicit(np.asarray(psi["grid"], dtype=float), moduli, origin)
        raise ParameterError(f"unknown psi kind {kind!r}")


def _moduli(dim: int, moduli, sigma: float, scale: float = 1.0) -> tuple:
    if moduli is None:
        return tuple(BoundaryModulus("power", float(sigma), float(scale)) for _ in range(dim - 1))
    if isinstance(moduli, BoundaryModulus):
        return tuple(moduli for _ in range(dim - 1))
    return tuple(moduli)


def psi_eval(dom: DomainSpec, xprime) -> float | np.ndarray:
    """``ψ(x′)`` for a point or an array of points."""
    out = dom.psi(xprime)
    return float(out) if np.ndim(out) == 0 else out


def contains(dom: DomainSpec, x) -> bool | np.ndarray:
    return dom.contains(x)


def box_corners(lo: Sequence[float], hi: Sequence[float]) -> np.ndarray:
    """All ``2^k`` vertices of a box."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    pts = [np.where(np.array(c, bool), hi, lo) for c in itertools.product((0, 1), repeat=lo.size)]
    return np.array(pts)
