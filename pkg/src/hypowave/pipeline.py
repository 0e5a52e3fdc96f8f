"""The abstract constants chain: observability cost to decay envelope.

Starting from an exponential observability cost G(mu) = C exp(kappa mu^k),
the chain produces in order

    Gfrak(lam) = (K (1 + C_rhs) / alpha) (lam + sqrt2 + alpha) G(lam + sqrt2 + alpha),
                 K = sqrt(T) + 1/c0,
    M(lam)     = <lam> Gfrak(lam)^2            (wave)
                 Gfrak(sqrt(lam))^2            (schrodinger)
                 lam Gfrak(sqrt(lam))^2        (plate),
    Mlog(s)    = M(s) (log(1 + M(s)) + log(1 + s)),
    envelope(t) = C_j / Mlog^{-1}(t / (c j))^j.

All bound functions are evaluated in log space: for k >= 2 the squared chain
exceeds the double range almost immediately, so values are carried as
log-values and only exponentiated on demand (inf on overflow).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

LOG_MAX = math.log(np.finfo(float).max)  # ~709.78
DEFAULT_ALPHA = 2.0 - math.sqrt(2.0)


@dataclass(frozen=True)
class CostFunction:
    """Observability cost G(mu) = C exp(kappa mu^k), valid for mu >= mu0."""

    C: float
    kappa: float
    k: float
    floor_c0: float = 0.0
    mu0: float = 0.0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("cost prefactor C must be positive")
        if self.kappa < 0:
            raise ValueError("cost exponent kappa must be nonnegative")
        if self.k < 1:
            raise ValueError("cost power k must be >= 1")
        if self.floor_c0 < 0 or self.mu0 < 0:
            raise ValueError("floor and threshold must be nonnegative")

    def log_value(self, mu: float) -> float:
        return math.log(self.C) + self.kappa * mu**self.k

    def __call__(self, mu: float) -> float:
        lv = self.log_value(mu)
        return math.inf if lv > LOG_MAX else math.exp(lv)


@dataclass(frozen=True)
class PipelineParams:
    """Constants feeding the bound chain.

    ``c0`` is the normalization constant in the hypothesis G(mu) >= c0/mu
    entering K; ``C_rhs`` is the right-hand-side constant of the
    inhomogeneous observability estimate (exposed as an input, not
    reconstructed).
    """

    T: float
    c0: float
    alpha: float = DEFAULT_ALPHA
    mu0: float = 1.0
    lambda0: float = 1.0
    norm_b: float = 1.0
    C_rhs: float = 0.0

    def __post_init__(self):
        if min(self.T, self.c0, self.mu0, self.norm_b) <= 0 or self.lambda0 < 1:
            raise ValueError("pipeline constants must be positive with lambda0 >= 1")
        if self.alpha <= 0:
            raise ValueError("absorption parameter alpha must be positive")
        if self.C_rhs < 0:
            raise ValueError("C_rhs must be nonnegative")

    @property
    def K(self) -> float:
        return math.sqrt(self.T) + 1.0 / self.c0


class BoundFunction:
    """Nondecreasing positive function on [s_min, s_max], carried in log space.

    Evaluation below s_min is rejected; evaluation above s_max is allowed (the
    closed-form chains extend naturally), and the inversion routine widens the
    bracket by doubling s_max until the target is enclosed.
    """

    def __init__(self, log_fn, domain=(1.0, 1e6), label: str = ""):
        self._log_fn = log_fn
        self.domain = (float(domain[0]), float(domain[1]))
        self.label = label

    def log_value(self, s: float) -> float:
        if s < self.domain[0] - 1e-12:
            raise ValueError(
                f"{self.label or 'bound function'} evaluated at {s} below its domain "
                f"floor {self.domain[0]}"
            )
        return float(self._log_fn(float(s)))

    def value(self, s: float) -> float:
        lv = self.log_value(s)
        return math.inf if lv > LOG_MAX else math.exp(lv)

    __call__ = value

    @classmethod
    def constant(cls, c: float, domain=(1.0, 1e6)) -> "BoundFunction":
        if c <= 0:
            raise ValueError("constant bound must be positive")
        logc = math.log(c)
        return cls(lambda s: logc, domain=domain, label=f"const {c}")

    @classmethod
    def from_callable(cls, fn, domain=(1.0, 1e6), label: str = "") -> "BoundFunction":
        return cls(lambda s: math.log(fn(s)), domain=domain, label=label)


def free_resolvent_bound(G: CostFunction, p: PipelineParams) -> BoundFunction:
    """Gfrak(lam) = (K (1+C_rhs)/alpha) (lam + sqrt2 + alpha) G(lam + sqrt2 + alpha),
    defined for lam >= lambda0."""
    if p.alpha <= 0:
        raise ValueError("alpha must be positive")
    shift = math.sqrt(2.0) + p.alpha
    log_pref = math.log(p.K * (1.0 + p.C_rhs) / p.alpha)

    def log_fn(lam: float) -> float:
        mu = lam + shift
        return log_pref + math.log(mu) + G.log_value(mu)

    return BoundFunction(log_fn, domain=(p.lambda0, 1e6), label="Gfrak")


def damped_resolvent_bound(G1: float, G2: float, normB: float, lam: float) -> float:
    """(G1 lam^{-1/2} + G2 sqrt2 |B|)^2 + 2 sqrt2 G2: the factor turning a free
    estimate with an observation term into a damped-pencil bound."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if G1 < 0 or G2 < 0:
        raise ValueError("G1 and G2 must be nonnegative")
    root2 = math.sqrt(2.0)
    return (G1 / math.sqrt(lam) + G2 * root2 * normB) ** 2 + 2.0 * root2 * G2


def wave_M(gfrak: BoundFunction) -> BoundFunction:
    """M(lam) = <lam> Gfrak(lam)^2 with <lam> = sqrt(1 + lam^2)."""

    def log_fn(lam: float) -> float:
        return 0.5 * math.log1p(lam * lam) + 2.0 * gfrak.log_value(lam)

    return BoundFunction(log_fn, domain=gfrak.domain, label="M_wave")


def schrodinger_M(gfrak: BoundFunction) -> BoundFunction:
    """M(lam) = Gfrak(sqrt(lam))^2."""
    lo = max(1.0, gfrak.domain[0] ** 2)

    def log_fn(lam: float) -> float:
        return 2.0 * gfrak.log_value(math.sqrt(lam))

    return BoundFunction(log_fn, domain=(lo, max(gfrak.domain[1], lo * 10)), label="M_schrodinger")


def plate_M(gfrak: BoundFunction) -> BoundFunction:
    """M(lam) = lam Gfrak(sqrt(lam))^2."""
    lo = max(1.0, gfrak.domain[0] ** 2)

    def log_fn(lam: float) -> float:
        return math.log(lam) + 2.0 * gfrak.log_value(math.sqrt(lam))

    return BoundFunction(log_fn, domain=(lo, max(gfrak.domain[1], lo * 10)), label="M_plate")


def m_log(M: BoundFunction) -> BoundFunction:
    """Mlog(s) = M(s) (log(1 + M(s)) + log(1 + s)), strictly increasing
    wherever M is nondecreasing."""

    def log_fn(s: float) -> float:
        lm = M.log_value(s)
        # log(1 + M) = logaddexp(0, log M), exact in floating point
        return lm + math.log(np.logaddexp(0.0, lm) + math.log1p(s))

    return BoundFunction(log_fn, domain=M.domain, label=f"Mlog[{M.label}]")


@dataclass
class InversionInfo:
    clamped_low: bool = False
    clamped_high: bool = False

    @property
    def clamped(self) -> bool:
        return self.clamped_low or self.clamped_high


def m_log_inverse(
    ML: BoundFunction,
    t: float | None = None,
    *,
    log_t: float | None = None,
    rtol: float = 1e-12,
    max_doublings: int = 60,
    full_output: bool = False,
):
    """Solve ML(s) = t by monotone bisection, working on log values.

    Targets may be passed directly (``t``) or in log scale (``log_t``) when
    the linear value would overflow.  Out-of-range targets are clamped to the
    nearest domain endpoint and flagged in the returned info.
    """
    if (t is None) == (log_t is None):
        raise ValueError("pass exactly one of t or log_t")
    if log_t is None:
        if not (t > 0) or math.isinf(t):
            raise ValueError("target must be a positive finite number (use log_t for huge targets)")
        log_t = math.log(t)

    info = InversionInfo()
    lo, hi = ML.domain
    f_lo = ML.log_value(lo) - log_t
    if f_lo > 0:
        info.clamped_low = True
        return (lo, info) if full_output else lo
    doublings = 0
    while ML.log_value(hi) - log_t < 0:
        hi *= 2.0
        doublings += 1
        if doublings > max_doublings:
            info.clamped_high = True
            return (hi, info) if full_output else hi
    if f_lo == 0:
        return (lo, info) if full_output else lo
    root = brentq(lambda s: ML.log_value(s) - log_t, lo, hi, rtol=rtol)
    return (float(root), info) if full_output else float(root)


class DecayEnvelope:
    """t -> C_j / Mlog^{-1}(t / (c j))^j, nonincreasing and tending to 0.

    ``log_correction=False`` inverts M itself instead of Mlog; that sharper
    envelope is only justified when M is polynomially bounded at infinity,
    and is exposed as an option without further theory behind it.
    """

    def __init__(self, M: BoundFunction, j: int, c: float, C_j: float,
                 log_correction: bool = True):
        if j < 1:
            raise ValueError("derivative count j must be >= 1")
        if c <= 0 or C_j <= 0:
            raise ValueError("c and C_j must be positive")
        self.M = M
        self.mlog = m_log(M) if log_correction else M
        self.log_correction = log_correction
        self.j = j
        self.c = c
        self.C_j = C_j

    def inverse_scale(self, t: float | None = None, *, log_t: float | None = None) -> float:
        if log_t is not None:
            return m_log_inverse(self.mlog, log_t=log_t - math.log(self.c * self.j))
        return m_log_inverse(self.mlog, t / (self.c * self.j))

    def log_value(self, t: float | None = None, *, log_t: float | None = None) -> float:
        """log of the envelope; pass log_t for times beyond the double range,
        where the asymptotic log(t)^(-j/k) regime is actually reached."""
        return math.log(self.C_j) - self.j * math.log(self.inverse_scale(t, log_t=log_t))

    def __call__(self, t: float) -> float:
        return math.exp(self.log_value(t))


def decay_envelope(
    M: BoundFunction, j: int, c: float, C_j: float, log_correction: bool = True
) -> DecayEnvelope:
    return DecayEnvelope(M, j, c, C_j, log_correction=log_correction)


def gap_curve(eps: float, kappa: float, k: float):
    """Boundary curve y -> -eps exp(-kappa |y|^k) of a spectrum-free region."""
    if eps <= 0 or kappa <= 0:
        raise ValueError("eps and kappa must be positive")

    def curve(y: float) -> float:
        return -eps * math.exp(-kappa * abs(y) ** k)

    return curve


@dataclass(eq=False)
class DecayCertificate:
    """Envelope constants paired with measured decay samples."""

    kind: str
    j: int
    c: float
    C_j: float
    envelope: DecayEnvelope
    measured: list[tuple[float, float]] = field(default_factory=list)
    violations: list[tuple[float, float]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def certificate_from_measurements(
    M: BoundFunction,
    j: int,
    measured,
    c: float = 1.0,
    C_j: float | None = None,
    kind: str = "wave",
) -> DecayCertificate:
    """Minimal C_j (for the given Batty-Duyckaerts constant c) making the
    envelope dominate all measurements; explicit C_j instead flags violators."""
    measured = [(float(t), float(r)) for t, r in measured]
    mlog = m_log(M)
    scales = [m_log_inverse(mlog, t / (c * j)) for t, _ in measured]
    if C_j is None:
        required = [r * s**j for (_, r), s in zip(measured, scales)]
        C_j = max(required) if required else 1.0
        if C_j <= 0:
            C_j = 1.0
    env = DecayEnvelope(M, j, c, C_j)
    violations = [
        (t, r)
        for (t, r), s in zip(measured, scales)
        if r > (1.0 + 1e-9) * C_j / s**j
    ]
    return DecayCertificate(
        kind=kind, j=j, c=c, C_j=float(C_j), envelope=env, measured=measured, violations=violations
    )
