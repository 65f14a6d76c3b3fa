"""Desk-scale empirical checks: bump families, widths and rate fits.

Bumps
    For a cusp over a Cantor-type h-set, each level-``k`` construction cube
    ``Q_{k,j}`` carries the function ``φ_{k,j}(x′, x_d) = ρ_k(x_d)`` for
    ``x′ ∈ Q_{k,j}`` (zero elsewhere), with ``ρ_k`` a smoothstep switching
    on above a threshold ``b_k``.  Since ``ψ < b_k`` on ``∂Q_{k,j}``, the
    restriction to the domain is smooth and the supports are disjoint.

Widths
    For ``p = q = 2`` the unit ball of a finite-dimensional discretisation
    of ``W^1_2`` is an ellipsoid in ``L_2``; its Kolmogorov widths are the
    generalised eigenvalue square roots, ``d_n = sqrt(λ_{n+1})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg, sparse

from ._numerics import sum_over_product_max
from .domain import DomainSpec
from .errors import DataError, ParameterError, SizeError

MAX_WIDTH_SIZE = 4096


# ---------------------------------------------------------------------------
# smoothstep profile
# ---------------------------------------------------------------------------


def smoothstep_coeffs(N: int) -> np.ndarray:
    """Power-basis coefficients of the order-``N`` smoothstep on ``[0, 1]``.

    ``S_N`` has degree ``2N+1``, ``S_N(0) = 0``, ``S_N(1) = 1`` and its first
    ``N`` derivatives vanish at both ends.
    """
    if N < 0:
        raise ParameterError("smoothstep order must be non-negative")
    c = np.zeros(2 * N + 2)
    for i in range(N + 1):
        c[N + 1 + i] = (-1) ** i * math.comb(N + i, i) * math.comb(2 * N + 1, N - i)
    return c


def smoothstep(t, N: int, deriv: int = 0) -> np.ndarray:
    """``S_N^{(deriv)}(t)``, extended by 0 for ``t ≤ 0`` and 1 for ``t ≥ 1``."""
    t = np.asarray(t, dtype=float)
    c = P.polyder(smoothstep_coeffs(N), deriv) if deriv else smoothstep_coeffs(N)
    out = P.polyval(np.clip(t, 0.0, 1.0), c)
    out = np.where(t <= 0.0, 0.0, out)
    out = np.where(t >= 1.0, 1.0 if deriv == 0 else 0.0, out)
    return out


# ---------------------------------------------------------------------------
# bump families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BumpFamily:
    """The level-``k`` bumps ``φ_{k,j}``.

    Attributes
    ----------
    centers : ndarray, shape (m^{(d−1)k}, d−1)
        Centres of the cubes ``Q_{k,j}``.
    halfwidth : float
        Half side of each cube.
    b_k : float
        Threshold below which every bump vanishes.
    smooth_order : int
        Order ``N`` of the smoothstep profile (``C^N`` with bounded
        ``(N+1)``-st derivative).
    """

    domain: DomainSpec = field(repr=False)
    k: int
    centers: np.ndarray = field(repr=False)
    halfwidth: float
    b_k: float
    boundary_distance: float
    smooth_order: int

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    @property
    def height(self) -> float:
        """``H = (2 − b_k)/2``: ``ρ_k`` rises from 0 to 1 over ``[b_k, b_k + H]``."""
        return 0.5 * (2.0 - self.b_k)

    def profile(self, xd, deriv: int = 0) -> np.ndarray:
        """``ρ_k^{(deriv)}(x_d)``."""
        H = self.height
        return smoothstep((np.asarray(xd, dtype=float) - self.b_k) / H,
                          self.smooth_order, deriv) * H ** (-deriv)

    def cube(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        return self.centers[j] - self.halfwidth, self.centers[j] + self.halfwidth

    def __call__(self, x, j: int, deriv: int = 0) -> np.ndarray:
        """``∂_d^{deriv} φ_{k,j}`` at points ``x`` (zero outside ``Ω``)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo, hi = self.cube(j)
        inq = np.all((x[:, :-1] >= lo) & (x[:, :-1] <= hi), axis=1)
        inside = inq & self.domain.contains(x)
        return np.where(inside, self.profile(x[:, -1], deriv), 0.0)

    def boundary_check(self, samples: int = 4096, seed: int = 0) -> float:
        """``max ψ − b_k`` over sampled points of ``∂Q_{k,j}`` (all ``j``); < 0 expected."""
        rng = np.random.default_rng(seed)
        kdim = self.centers.shape[1]
        worst = -math.inf
        per = max(1, samples // self.count)
        for j in range(self.count):
            lo, hi = self.cube(j)
            pts = lo + rng.random((per, kdim)) * (hi - lo)
            face = rng.integers(0, kdim, per)
            side = rng.integers(0, 2, per).astype(bool)
            pts[np.arange(per), face] = np.where(side, hi[face], lo[face])
            worst = max(worst, float(self.domain.psi(pts).max() - self.b_k))
        return worst


def bump_family(dom: DomainSpec, k: int, r: int = 1) -> BumpFamily:
    """Level-``k`` bumps over a Cantor h-set cusp.

    ``b_k`` is the midpoint between 2 and the bound ``2 − D_k^{1/σ}`` on
    ``ψ`` along the cube boundaries, where ``D_k = λ^k(1/m − λ)/2`` bounds
    the distance from ``∂Q_{k,j}`` to the set from below.  Hence
    ``2 − b_k = D_k^{1/σ}/2`` and consecutive levels scale exactly by
    ``λ^{1/σ} = m^{−(d−1)/(θσ)}``.

    Examples
    --------
    >>> from cuspwidth.hset import build
    >>> dom = DomainSpec.hset_cusp(build(1.0, 3, 6, origin=-0.5), 2.0)
    >>> bump_family(dom, 3).count
    64
    """
    if dom.psi_kind != "hset_cusp" or dom.hset is None or dom.hset.kind != "cantor":
        raise ParameterError("bump families need a cusp over a Cantor h-set")
    hs = dom.hset
    if not 0 <= k <= hs.depth - 1:
        raise ParameterError(f"k must lie in 0..{hs.depth - 1}")
    if r < 0:
        raise ParameterError("r must be non-negative")
    centers, hw, _ = hs.cells(k)
    D = hs.lam**k * (1.0 / hs.m - hs.lam) / 2.0
    b = 2.0 - 0.5 * D ** (1.0 / dom.sigma)
    return BumpFamily(dom, k, centers, hw, b, D, r + 1)


@dataclass(frozen=True)
class BumpNorms:
    k: int
    count: int
    lq: float
    lp: float
    grad_lp: float

    @property
    def separation(self) -> float:
        """``‖e_j‖_q`` for ``e_j = φ_{k,j}/(‖∇^r φ_{k,j}‖_p + ‖φ_{k,j}‖_p)``."""
        return self.lq / (self.grad_lp + self.lp)


def _profile_integral(fam: BumpFamily, tau: np.ndarray, power: float, deriv: int,
                      nodes: int = 48) -> np.ndarray:
    """``∫_0^{τ} |S^{(deriv)}(t)|^power dt`` for each ``τ`` (clipped to ``[0, ∞)``)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    tau = np.maximum(np.asarray(tau, dtype=float), 0.0)
    t1 = np.minimum(tau, 1.0)
    vals = np.abs(smoothstep(t1[:, None] * x[None, :], fam.smooth_order, deriv)) ** power
    out = t1 * (vals @ w)
    if deriv == 0:
        out = out + np.maximum(tau - 1.0, 0.0)
    return out


def bump_norms(fam: BumpFamily, p: float, q: float, r: int, j: int = 0,
               samples: int = 4096) -> BumpNorms:
    """``‖φ‖_q``, ``‖φ‖_p`` and ``‖∂_d^r φ‖_p`` for one bump.

    The only non-zero order-``r`` partial of a bump is ``∂_d^r``.  With
    ``τ(x′) = (ψ(x′) − b_k)/H`` the norms reduce to
    ``H^{1−sβ} ∫_{Q} F(τ(x′)) dx′`` with a one-dimensional profile integral
    ``F``; since ``ψ`` depends on ``x′`` only through ``max_i δ_i(x_i)``
    the base integral is a sum over the product of per-axis midpoint
    samples, evaluated exactly in that product by
    :func:`~cuspwidth._numerics.sum_over_product_max`.
    """
    if r > fam.smooth_order:
        raise ParameterError("r exceeds the smoothness of the profile")
    for s in (p, q):
        if not (1 <= s < math.inf):
            raise ParameterError("p and q must be finite and >= 1")
    dom = fam.domain
    lo, hi = fam.cube(j)
    arrays, weights = [], []
    for i, ax in enumerate(dom.axis_sets):
        edges = np.linspace(lo[i], hi[i], samples + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        arrays.append(ax.dist(mid))
        weights.append(np.diff(edges))
    H = fam.height

    def norm(power: float, deriv: int) -> float:
        def F(D):
            tau = (dom.psi_from_dist(D) - fam.b_k) / H
            return _profile_integral(fam, tau, power, deriv)
        val = sum_over_product_max(F, arrays, weights)
        return (H ** (1.0 - deriv * power) * val) ** (1.0 / power)

    return BumpNorms(fam.k, fam.count, norm(q, 0), norm(p, 0), norm(p, r))


@dataclass(frozen=True)
class ScalingReport:
    ks: list
    norms: list
    measured: dict
    predicted: dict

    def relative_errors(self) -> dict:
        return {key: abs(self.measured[key] - self.predicted[key]) / abs(self.predicted[key])
                for key in self.predicted if self.predicted[key] != 0}


def predicted_bump_slopes(theta: float, sigma: float, d: int, p: float, q: float,
                          r: int) -> dict:
    """Per-level base-``m`` log slopes of the bump norms.

    ``L_q``: ``−(d−1)(σ(d−1)+1)/(θσq)``; ``∇^r`` in ``L_p``:
    ``(d−1)(r − (σ(d−1)+1)/p)/(θσ)``; separation (their difference):
    ``−(d−1)·M`` with ``M = (r + (1/q−1/p)(σ(d−1)+1))/(σθ)``, i.e. slope
    ``−M`` against ``log_m`` of the family size ``m^{(d−1)k}``.
    """
    g = sigma * (d - 1) + 1.0
    lq = -(d - 1) * g / (theta * sigma * q)
    grad = (d - 1) * (r - g / p) / (theta * sigma)
    M = (r + (1.0 / q - 1.0 / p) * g) / (sigma * theta)
    return {"lq": lq, "grad": grad, "separation": lq - grad, "exponent": -M}


def norm_scaling(dom: DomainSpec, k_range, p: float, q: float, r: int,
                 samples: int = 4096) -> ScalingReport:
    """Fit ``log_m`` of bump norms against ``k`` and compare with predictions.

    The separation entry uses the normalisation by the full Sobolev norm
    ``‖∇^r φ‖_p + ‖φ‖_p``; ``exponent`` is the separation slope divided by
    ``d−1`` (slope against ``log_m`` of the family size).
    """
    ks = sorted(int(k) for k in k_range)
    if len(ks) < 2:
        raise ParameterError("need at least two levels")
    hs = dom.hset
    norms = []
    for k in ks:
        fam = bump_family(dom, k, r)
        first = bump_norms(fam, p, q, r, 0, samples)
        last = bump_norms(fam, p, q, r, fam.count - 1, samples)
        # every bump is a translate up to the far part of the set: keep the smaller one
        norms.append(first if first.separation <= last.separation else last)
    logm = math.log(hs.m)
    kk = np.array(ks, dtype=float)

    def slope(vals):
        return float(np.polyfit(kk, np.log(vals) / logm, 1)[0])

    measured = {
        "lq": slope([n.lq for n in norms]),
        "grad": slope([n.grad_lp for n in norms]),
        "separation": slope([n.separation for n in norms]),
    }
    measured["exponent"] = measured["separation"] / (dom.dim - 1)
    predicted = predicted_bump_slopes(hs.theta, dom.sigma, dom.dim, p, q, r)
    return ScalingReport(ks, norms, measured, predicted)


# ---------------------------------------------------------------------------
# widths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WidthEstimate:
    n: int
    value: float
    method: str = "svd"
    provenance: dict = field(default_factory=dict)


def linear_widths(A, n_range=None) -> list:
    """Widths ``d_n = s_{n+1}`` of the image of the unit ball under ``A``.

    Examples
    --------
    >>> [w.value for w in linear_widths(np.diag([1.0, 0.5, 0.25]), [1, 2])]
    [0.5, 0.25]
    """
    s = linalg.svdvals(np.atleast_2d(np.asarray(A, dtype=float)))
    return _widths_from_values(s, n_range, {"source": "matrix"})


def ellipsoid_widths(S, M, n_range=None) -> list:
    """Widths of ``{x : xᵀSx ≤ 1}`` measured in the norm ``xᵀMx``.

    ``d_n = sqrt(λ_{n+1})`` with ``λ`` the eigenvalues of ``M x = λ S x``
    in decreasing order.
    """
    S = _dense(S)
    M = _dense(M)
    if S.shape[0] > MAX_WIDTH_SIZE:
        raise SizeError(f"discretisation of size {S.shape[0]} exceeds {MAX_WIDTH_SIZE}")
    lam = linalg.eigh(M, S, eigvals_only=True)
    s = np.sqrt(np.clip(lam[::-1], 0.0, None))
    return _widths_from_values(s, n_range, {"source": "ellipsoid", "size": S.shape[0]})


def _dense(A) -> np.ndarray:
    return A.toarray() if sparse.issparse(A) else np.asarray(A, dtype=float)


def _widths_from_values(s: np.ndarray, n_range, prov: dict) -> list:
    s = np.sort(np.asarray(s, dtype=float))[::-1]
    if n_range is None:
        n_range = range(s.size + 1)
    out = []
    for n in n_range:
        if n < 0:
            raise ParameterError("n must be non-negative")
        out.append(WidthEstimate(int(n), float(s[n]) if n < s.size else 0.0, "svd", dict(prov)))
    return out


def interval_fem(N: int) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """P1 finite elements on ``[0,1]`` with ``N`` cells: (stiffness + mass, mass)."""
    if N < 1:
        raise ParameterError("need at least one cell")
    h = 1.0 / N
    main = np.full(N + 1, 2.0)
    main[[0, -1]] = 1.0
    K = sparse.diags([main / h, -np.ones(N) / h, -np.ones(N) / h], [0, -1, 1])
    Mm = sparse.diags([main * h / 3.0, np.full(N, h / 6.0), np.full(N, h / 6.0)], [0, -1, 1])
    return (K + Mm).tocsr(), Mm.tocsr()


def domain_fem(dom: DomainSpec, grid: int) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Q1 elements on the grid cells (side ``1/grid``) whose centres lie in ``Ω``."""
    d = dom.dim
    shape = [grid] * (d - 1) + [2 * grid]
    h = 1.0 / grid
    idx = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), -1).reshape(-1, d)
    centers = (idx + 0.5) * h
    centers[:, :-1] += dom.origin
    keep = idx[dom.contains(centers)]
    if keep.shape[0] == 0:
        raise ParameterError("grid too coarse: no cell inside the domain")
    # element matrices on the reference cube, scaled by h
    k1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    m1 = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    Ke = np.zeros((1, 1))
    Me = np.ones((1, 1))
    for axis in range(d):
        Knew = np.zeros((Ke.shape[0] * 2, Ke.shape[0] * 2))
        Knew = np.kron(Ke, m1) + np.kron(Me, k1) if axis else k1.copy()
        Me = np.kron(Me, m1) if axis else m1.copy()
        Ke = Knew
    Ke = Ke * h ** (d - 2)
    Me = Me * h**d
    corners = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T
    node_shape = np.array(shape) + 1
    nodes = np.ravel_multi_index((keep[:, None, :] + corners[None, :, :]).transpose(2, 0, 1),
                                 node_shape)
    used, local = np.unique(nodes, return_inverse=True)
    local = local.reshape(nodes.shape)
    n = used.size
    if n > MAX_WIDTH_SIZE:
        raise SizeError(f"discretisation with {n} nodes exceeds {MAX_WIDTH_SIZE}")
    rows = np.repeat(local, local.shape[1], axis=1).ravel()
    cols = np.tile(local, (1, local.shape[1])).ravel()
    K = sparse.coo_matrix((np.tile(Ke.ravel(), keep.shape[0]), (rows, cols)), shape=(n, n))
    M = sparse.coo_matrix((np.tile(Me.ravel(), keep.shape[0]), (rows, cols)), shape=(n, n))
    return (K + M).tocsr(), M.tocsr()


def svd_widths(tree_or_domain, r: int, grid: int, n_range) -> list:
    """Kolmogorov widths of the discrete ``W^r_2`` unit ball in ``L_2``.

    ``tree_or_domain`` may be a :class:`~cuspwidth.partition.PartitionTree`
    (its domain is used), a :class:`DomainSpec`, or the string
    ``"interval"`` for the one-dimensional anchor on ``[0, 1]``.  Only
    ``r = 1`` is discretised (piecewise-linear / multilinear elements).
    """
    if r != 1:
        raise ParameterError("only r = 1 discretisations are implemented")
    if grid < 1:
        raise ParameterError("grid must be positive")
    if isinstance(tree_or_domain, str):
        if tree_or_domain != "interval":
            raise ParameterError(f"unknown width domain {tree_or_domain!r}")
        if grid + 1 > MAX_WIDTH_SIZE:
            raise SizeError("interval discretisation too large")
        S, M = interval_fem(grid)
    else:
        dom = getattr(tree_or_domain, "domain", tree_or_domain)
        S, M = domain_fem(dom, grid)
    est = ellipsoid_widths(S, M, n_range)
    return [WidthEstimate(w.n, w.value, "svd", {**w.provenance, "grid": grid, "r": r})
            for w in est]


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    max_residual: float


def fit_rate(points) -> RateFit:
    """Least-squares slope of ``log e`` against ``log n``.

    Examples
    --------
    >>> round(fit_rate([(n, n ** -0.5) for n in (1, 2, 4, 8)]).slope, 12)
    -0.5
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DataError("points must be (n, e) pairs")
    if pts.shape[0] < 4:
        raise DataError("need at least 4 points")
    n, e = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise DataError("points must be finite")
    if np.any(e <= 0) or np.any(n <= 0):
        raise DataError("n and e must be positive")
    if np.any(np.diff(n) <= 0):
        raise DataError("n must be strictly increasing")
    x, y = np.log(n), np.log(e)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return RateFit(float(slope), float(intercept), float(np.abs(res).max()))
