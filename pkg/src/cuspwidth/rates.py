"""Rate exponents for entropy numbers and widths of Sobolev classes on cusp domains.

All exponent arithmetic is exact (:class:`fractions.Fraction`); ``p`` and
``q`` may be ``math.inf`` with ``1/∞ = 0``.  Notation:

* ``α₁ = r/d`` (interior regime) and ``α₂ = M + 1/p − 1/q`` (boundary regime),
  where the *magnitude* ``M = (r + (1/q − 1/p)(σ(d−1)+1)) / (σ(d−1))``;
* ``δ* = r/d + 1/q − 1/p`` so that ``α₁ = δ* + 1/p − 1/q``;
* for h-sets ``M`` is replaced by ``(r + (1/q−1/p)(σ(d−1)+1))/(σθ)``
  (general) or ``(r + (1/q−1/p)(σ(d−θ−1)+θ+1))/θ`` (coordinate plane).

A prediction reports the final power of ``n`` as ``exponent`` (negative for
decaying quantities), so the rate is ``n^{exponent}·τ(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

from .errors import DegenerateError, InfeasibleError, OutOfRangeError, ParameterError

WIDTH_KINDS = ("entropy", "kolmogorov", "linear", "gelfand")


def as_fraction(x) -> Fraction | float:
    """Exact rational from int/str/Fraction/float; ``inf`` passes through."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float) and math.isinf(x):
        if x < 0:
            raise ParameterError("negative infinity is not an admissible exponent")
        return math.inf
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def inv(x) -> Fraction:
    """``1/x`` with ``1/∞ = 0``."""
    return Fraction(0) if x == math.inf else 1 / Fraction(x)


@dataclass(frozen=True)
class SlowVariation:
    """Slowly varying factor ``Λ`` in ``∏φ_i(t) = t^{σ(d−1)} Λ(t)``.

    ``kind="constant"``: ``Λ ≡ value``; ``kind="log_power"``:
    ``Λ(t) = ln(e/t)^β``.
    """

    kind: str = "constant"
    beta: float = 0.0
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "log_power"):
            raise ParameterError(f"unknown slow-variation kind {self.kind!r}")
        if self.kind == "constant" and not self.value > 0:
            raise ParameterError("constant slow variation must be positive")

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        return math.log(math.e / t) ** self.beta

    def log_derivative(self, t: float) -> float:
        """``t·Λ′(t)/Λ(t)``; tends to 0 as ``t → 0``."""
        if self.kind == "constant":
            return 0.0
        return -self.beta / math.log(math.e / t)

    def psi(self, t: float) -> float:
        """``ψ_Λ(t) = 1/Λ(1/t)`` for ``t ≥ 1``."""
        if self.kind == "constant":
            return 1.0 / self.value
        return math.log(math.e * t) ** (-self.beta)

    @classmethod
    def parse(cls, text: str) -> "SlowVariation":
        """``"const"`` or ``"logpow:B"``."""
        text = text.strip()
        if text in ("const", "constant", "1"):
            return cls()
        if text.startswith("logpow:"):
            try:
                return cls("log_power", float(text.split(":", 1)[1]))
            except ValueError:
                raise ParameterError(f"bad log-power exponent in {text!r}") from None
        raise ParameterError(f"unknown slow variation {text!r}; use const or logpow:B")


@dataclass(frozen=True)
class ParamSet:
    """The parameter tuple ``(p, q, r, d, σ)`` plus width kind and optional θ."""

    p: object
    q: object
    r: int
    d: int
    sigma: object
    width_kind: str = "entropy"
    theta: object = None
    lambda_fn: SlowVariation = field(default_factory=SlowVariation)

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        object.__setattr__(self, "q", as_fraction(self.q))
        object.__setattr__(self, "sigma", as_fraction(self.sigma))
        if self.theta is not None:
            object.__setattr__(self, "theta", as_fraction(self.theta))
        if self.width_kind not in WIDTH_KINDS:
            raise ParameterError(f"width_kind must be one of {WIDTH_KINDS}")
        if int(self.r) != self.r or self.r < 1:
            raise ParameterError("r must be a positive integer")
        if int(self.d) != self.d or self.d < 2:
            raise ParameterError("d must be an integer >= 2")
        for name in ("p", "q"):
            v = getattr(self, name)
            if v != math.inf and v < 1:
                raise ParameterError(f"{name} must lie in [1, inf]")
        if self.sigma == math.inf or self.sigma < 1:
            raise ParameterError("sigma must be a finite real >= 1")
        if inv(self.p) < inv(self.q):
            raise InfeasibleError("the theory requires p <= q")

    @property
    def gamma(self) -> Fraction:
        """``γ = σ(d−1)``."""
        return self.sigma * (self.d - 1)

    @property
    def gap(self) -> Fraction:
        """``1/q − 1/p`` (non-positive)."""
        return inv(self.q) - inv(self.p)

    @property
    def p_conjugate(self):
        if self.p == math.inf:
            return Fraction(1)
        if self.p == 1:
            return math.inf
        return self.p / (self.p - 1)


@dataclass(frozen=True)
class RatePrediction:
    alpha1: Fraction
    alpha2: Fraction
    j_star: int
    exponent: Fraction
    tau_kind: str
    width_kind: str
    magnitude: Fraction
    thetas: tuple | None = None
    q_hat: object = None
    notes: tuple = ()
    feasible: bool = True
    generic: "RatePrediction | None" = None


def embedding_ok(ps: ParamSet) -> bool:
    """``r + (σ(d−1)+1)(1/q − 1/p) > 0``."""
    return ps.r + (ps.gamma + 1) * ps.gap > 0


def q_hat(ps: ParamSet):
    """The effective exponent: ``q``, ``min(q, p′)`` or ``p′``."""
    if ps.width_kind == "kolmogorov":
        return ps.q
    if ps.width_kind == "linear":
        pc = ps.p_conjugate
        return ps.q if inv(ps.q) >= inv(pc) else pc
    if ps.width_kind == "gelfand":
        return ps.p_conjugate
    return None


def _generic_magnitude(ps: ParamSet) -> Fraction:
    return (ps.r + ps.gap * (ps.gamma + 1)) / ps.gamma


def _strict_argmin(values: list, label: str) -> int:
    best = min(values)
    winners = [i for i, v in enumerate(values) if v == best]
    if len(winners) != 1:
        names = " == ".join(f"{label}{i + 1}" for i in winners)
        raise DegenerateError(f"degenerate: {names}")
    return winners[0] + 1


def _predict(ps: ParamSet, magnitude: Fraction, notes: tuple = ()) -> RatePrediction:
    if not embedding_ok(ps):
        raise InfeasibleError("embedding condition r + (sigma(d-1)+1)(1/q-1/p) > 0 fails")
    shift = inv(ps.p) - inv(ps.q)  # 1/p − 1/q ≥ 0
    alpha1 = Fraction(ps.r, ps.d)
    alpha2 = magnitude + shift
    if alpha1 == alpha2:
        raise DegenerateError("degenerate: alpha1 == alpha2")
    j = 1 if alpha1 < alpha2 else 2
    alpha = alpha1 if j == 1 else alpha2
    tau = "tau1" if j == 1 else "tau2"
    if ps.width_kind == "entropy":
        return RatePrediction(alpha1, alpha2, j, -alpha, tau, "entropy", magnitude, notes=notes)
    # widths: Theorem-2 hypotheses
    if not (ps.p != math.inf and ps.q != math.inf and 1 < ps.p):
        raise InfeasibleError("width estimates need 1 < p <= q < inf")
    qh = q_hat(ps)
    if qh <= 2 or ps.p == ps.q:
        return RatePrediction(
            alpha1, alpha2, j, -alpha + shift, tau, ps.width_kind, magnitude,
            q_hat=qh, notes=notes + ("case 1",),
        )
    delta = alpha1 - shift  # r/d + 1/q − 1/p
    extra = min(shift, Fraction(1, 2) - inv(qh))
    thetas = (
        delta + extra,
        qh * delta / 2,
        magnitude + extra,
        qh * magnitude / 2,
    )
    js = _strict_argmin(list(thetas), "theta")
    tau = {1: "tau1", 2: "tau1", 3: "tau2", 4: "tau2_hatq"}[js]
    return RatePrediction(
        alpha1, alpha2, js, -thetas[js - 1], tau, ps.width_kind, magnitude,
        thetas=thetas, q_hat=qh, notes=notes + ("case 2",),
    )


def entropy_exponents(ps: ParamSet) -> RatePrediction:
    """Entropy-number exponents ``α₁ = r/d``, ``α₂`` and the regime ``j*``.

    Examples
    --------
    >>> pr = entropy_exponents(ParamSet(2, 2, 1, 2, 3))
    >>> pr.alpha1, pr.alpha2, pr.j_star, pr.exponent
    (Fraction(1, 2), Fraction(1, 3), 2, Fraction(-1, 3))
    """
    return _predict(replace(ps, width_kind="entropy"), _generic_magnitude(ps))


def width_exponents(ps: ParamSet) -> RatePrediction:
    """Kolmogorov/linear/Gelfand width exponents (both cases of the theorem)."""
    if ps.width_kind == "entropy":
        raise ParameterError("width_exponents needs kolmogorov, linear or gelfand")
    return _predict(ps, _generic_magnitude(ps))


def predict(ps: ParamSet) -> RatePrediction:
    if ps.width_kind == "entropy":
        return entropy_exponents(ps)
    return width_exponents(ps)


def hset_magnitude(ps: ParamSet, variant: str = "general") -> Fraction:
    th = ps.theta
    if th is None:
        raise ParameterError("h-set exponents need theta")
    if variant == "general":
        if not 0 < th < ps.d:
            raise ParameterError("theta must lie in (0, d)")
        return (ps.r + ps.gap * (ps.gamma + 1)) / (ps.sigma * th)
    if variant == "plane":
        if th.denominator != 1 or not 1 <= th <= ps.d - 2:
            raise ParameterError("plane variant needs integer theta in 1..d-2")
        return (ps.r + ps.gap * (ps.sigma * (ps.d - th - 1) + th + 1)) / th
    raise ParameterError(f"unknown h-set variant {variant!r}")


def hset_exponents(ps: ParamSet, variant: str = "general") -> RatePrediction:
    """Exponents with the boundary magnitude replaced for an h-set cusp.

    Returns the h-set prediction with the generic prediction attached as
    ``.generic`` (``None`` when the generic one is degenerate).

    Examples
    --------
    >>> hset_exponents(ParamSet(2, 2, 2, 3, 2, theta=1)).magnitude
    Fraction(1, 1)
    """
    mag = hset_magnitude(ps, variant)
    pred = _predict(ps, mag, notes=(f"hset:{variant}",))
    try:
        gen = predict(ps)
    except DegenerateError:
        gen = None
    return replace(pred, generic=gen)


# ---------------------------------------------------------------------------
# implicit scale and τ factors
# ---------------------------------------------------------------------------


def solve_scale(gamma: float, u: Callable[[float], float], s: float,
                rtol: float = 1e-10) -> float:
    """Solve ``t^γ u(t) = s`` for ``t ≥ 1`` by bracketed bisection.

    Examples
    --------
    >>> round(solve_scale(2.0, lambda t: 1.0, 16.0), 9)
    4.0
    """
    gamma = float(gamma)
    s = float(s)
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    if not s > 0 or not math.isfinite(s):
        raise ParameterError("s must be positive and finite")
    g = lambda t: t**gamma * u(t)  # noqa: E731
    lo, hi = 1.0, 2.0
    if g(lo) > s:
        raise OutOfRangeError(f"s = {s} is below t^gamma u(t) at t = 1")
    while g(hi) < s:
        lo, hi = hi, hi * 2.0
        if hi > 2.0**64:
            raise OutOfRangeError("no bracket for the scale equation within [1, 2^64]")
    t = hi
    for _ in range(400):
        t = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        val = g(t)
        if abs(val - s) <= rtol * s:
            break
        if val < s:
            lo = t
        else:
            hi = t
    if abs(g(t) - s) > rtol * s:
        raise OutOfRangeError("bisection did not reach the requested tolerance")
    if not g(t * (1.0 + 1e-6)) > g(t):
        raise OutOfRangeError("t^gamma u(t) is not increasing at the solution")
    return t


def tau_factor(ps: ParamSet, n: float, which: str = "tau2") -> float:
    """Logarithmic correction ``τ₂(n)`` (or ``τ₂(n^{q̂/2})``)."""
    if n < 2:
        raise ParameterError("n must be at least 2")
    if which == "tau1":
        return 1.0
    lam = ps.lambda_fn
    gamma = float(ps.gamma)
    if which == "tau2":
        arg = float(n)
    elif which == "tau2_hatq":
        qh = q_hat(ps)
        if qh is None:
            raise ParameterError("tau2_hatq needs a width kind")
        arg = float(n) ** (float(qh) / 2.0)
    else:
        raise ParameterError(f"unknown tau selector {which!r}")
    if lam.kind == "constant":
        # t^γ/c = s has the closed-form root (c·s)^{1/γ}
        t = (lam.value * arg) ** (1.0 / gamma)
    else:
        t = solve_scale(gamma, lam.psi, arg)
    phi = t / arg ** (1.0 / gamma)
    e1 = -ps.r - (ps.gamma + 1) * ps.gap
    e2 = -ps.gap
    return phi ** float(e1) * lam.psi(t) ** float(e2)


def fraction_str(x) -> str | None:
    """``"p/q"`` (or ``"p"``) for a Fraction; ``"inf"`` for infinity."""
    if x is None:
        return None
    if x == math.inf:
        return "inf"
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
