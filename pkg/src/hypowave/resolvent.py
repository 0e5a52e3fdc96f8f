"""Energy-metric resolvent norms, growth fits, quasimodes and gap regions.

The central quantity is |(is - G)^{-1}| measured in the generator's energy
metric W: the norm is computed as 1/sigma_min of the Cholesky similarity
F (is - G) F^{-1} with W = F^H F, which turns the weighted operator norm into
a plain smallest-singular-value problem.

Grushin quasimodes are the ground states of the per-mode Sturm-Liouville
blocks.  When the damping is supported away from x1 = 0 their mass on the
damping support decays exponentially in the mode eigenvalue, which forces
exponential growth of the resolvent along the imaginary axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .generators import DampedGenerator, EigensolverError, SpectrumReport
from .operators import DampingProfile, Grid1D, HermitianOperator, assemble_grushin_mode
from .pipeline import gap_curve


@dataclass(eq=False)
class FitResult:
    kappa_hat: float
    c_hat: float
    r2: float
    k: float


@dataclass(eq=False)
class ResolventSweep:
    """Resolvent norms along the imaginary axis, with an optional growth fit."""

    s_values: np.ndarray
    norms: np.ndarray
    kind: str
    metric: str = "norm"
    fit: FitResult | None = None

    def to_csv(self, path) -> None:
        lines = ["s,norm"]
        for s, v in zip(self.s_values, self.norms):
            lines.append(f"{float(s)!r},{float(v)!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _energy_factor(gen: DampedGenerator, metric: str) -> np.ndarray:
    if metric not in ("norm", "seminorm"):
        raise ValueError(f"unknown metric {metric!r}")
    try:
        return gen.energy_factor(metric)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            f"energy Gram form is not positive definite in metric {metric!r}"
        ) from exc


def _similarity_transformed(gen: DampedGenerator, metric: str) -> np.ndarray:
    """F G F^{-1} with W = F^H F: the generator seen in the energy metric,
    computed once so that each axis point costs a single SVD."""

    def build():
        F = _energy_factor(gen, metric)
        T = F @ gen.matrix
        return scipy.linalg.solve_triangular(F.conj().T, T.conj().T, lower=True).conj().T

    return gen.memo(("similarity", metric), build)


def resolvent_norm(gen: DampedGenerator, s: float, metric: str = "norm") -> float:
    """|(is - G)^{-1}| in the energy metric; +inf when is hits the spectrum."""
    H = _similarity_transformed(gen, metric)
    S = (-H).astype(complex)
    S[np.diag_indices_from(S)] += 1j * s
    sv = scipy.linalg.svdvals(S)
    smin, smax = sv[-1], sv[0]
    if smin <= 1e-14 * smax:
        return math.inf  # is lies on (or numerically on) the spectrum
    return 1.0 / smin


def resolvent_sweep(
    gen: DampedGenerator,
    s_grid,
    metric: str = "norm",
    threads: int | None = None,
) -> ResolventSweep:
    """Pointwise resolvent norms over the grid; points are independent and are
    evaluated concurrently, aggregated in grid order."""
    s_grid = np.asarray(s_grid, dtype=float)
    if threads is not None and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            norms = list(pool.map(lambda s: resolvent_norm(gen, s, metric), s_grid))
        norms = np.array(norms)
    else:
        norms = np.array([resolvent_norm(gen, s, metric) for s in s_grid])
    return ResolventSweep(s_values=s_grid, norms=norms, kind=gen.kind, metric=metric)


def fit_log_linear(x: np.ndarray, log_y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope/intercept of log_y against x, with R^2."""
    x = np.asarray(x, dtype=float)
    log_y = np.asarray(log_y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(log_y))):
        raise ValueError("non-finite values in fit data")
    if len(x) < 2 or np.ptp(x) == 0:
        raise ValueError("degenerate design matrix for the fit")
    slope, intercept = np.polyfit(x, log_y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((log_y - pred) ** 2))
    ss_tot = float(np.sum((log_y - log_y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def fit_exponent(sweep: ResolventSweep, k: float) -> FitResult:
    """Fit log(norm) = kappa * s^k + c over the finite points of a sweep."""
    mask = np.isfinite(sweep.norms) & (sweep.norms > 0)
    if mask.sum() < 3:
        raise ValueError("need at least 3 finite sample points to fit the exponent")
    s = sweep.s_values[mask]
    kappa, c, r2 = fit_log_linear(s**k, np.log(sweep.norms[mask]))
    fit = FitResult(kappa_hat=kappa, c_hat=c, r2=r2, k=k)
    sweep.fit = fit
    return fit


@dataclass(eq=False)
class Quasimode:
    """Ground eigenpair of one Grushin mode block, unit-normalized in the
    weighted inner product, with its damping defect norms."""

    n: int
    k: float
    eigenvalue: float
    vector: np.ndarray
    operator: HermitianOperator
    grid: Grid1D
    eig_residual: float
    bnorm: float | None = None
    pencil_defect: float | None = None
    tunneling_mass: float | None = None


def quasimode(n: int, k: float, grid: Grid1D, profile: DampingProfile | None = None) -> Quasimode:
    """Ground state of the mode-n Grushin block; defect norms are filled when a
    damping profile is supplied."""
    if n < 1:
        raise ValueError("quasimodes are indexed by modes n >= 1")
    op = assemble_grushin_mode(n, k, grid)
    try:
        w, V = np.linalg.eigh(op.matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolverError(op.dimension, str(exc)) from exc
    lam = float(w[0])
    phi = V[:, 0] / op.norm(V[:, 0])
    res = op.norm(op.matrix @ phi - lam * phi)
    q = Quasimode(
        n=n, k=k, eigenvalue=lam, vector=phi, operator=op, grid=grid, eig_residual=res
    )
    if profile is not None:
        q.bnorm, q.pencil_defect = quasimode_defect(q, profile)
        q.tunneling_mass = _support_mass(q, profile)
    return q


def _x1_damping_values(q: Quasimode, profile: DampingProfile) -> np.ndarray:
    if profile.variant == "constant":
        return np.full(q.grid.n_interior, profile.beta)
    if profile.variant == "separable_x1":
        v = np.asarray(profile.x1_values, dtype=float)
        if len(v) != q.grid.n_interior:
            raise ValueError("damping samples do not match the quasimode grid")
        return v
    raise ValueError("quasimode defects require damping separable in x1 (or constant)")


def _support_mass(q: Quasimode, profile: DampingProfile) -> float:
    v = _x1_damping_values(q, profile)
    mask = v > 0
    return math.sqrt(q.operator.quad_weight) * np.linalg.norm(q.vector[mask])


def quasimode_defect(q: Quasimode, profile: DampingProfile) -> tuple[float, float]:
    """(|b phi_n|, |P(i sqrt(lambda_n)) phi_n|) in the weighted norm.

    P(i sqrt(lam)) phi = (L - lam) phi + i sqrt(lam) b phi, so the pencil
    defect equals sqrt(lam) |b phi| up to the eigen-residual.
    """
    v = _x1_damping_values(q, profile)
    bphi = v * q.vector
    bnorm = q.operator.norm(bphi)
    s = math.sqrt(q.eigenvalue)
    pencil_vec = (q.operator.matrix @ q.vector - q.eigenvalue * q.vector) + 1j * s * bphi
    return float(bnorm), float(q.operator.norm(pencil_vec))


@dataclass(frozen=True)
class GapRegion:
    """Gamma(eps, kappa, k) = { z : Re z >= -eps * exp(-kappa |Im z|^k) }."""

    epsilon: float
    kappa: float
    k: float

    def __post_init__(self):
        if self.epsilon <= 0 or self.kappa <= 0:
            raise ValueError("epsilon and kappa must be positive")

    def boundary(self, y: float) -> float:
        return gap_curve(self.epsilon, self.kappa, self.k)(y)

    def contains(self, z: complex) -> bool:
        return z.real >= self.boundary(z.imag)


@dataclass(eq=False)
class GapCheckResult:
    passed: bool
    violations: list[complex]


def spectral_gap_check(
    report: SpectrumReport, region: GapRegion, zero_tol: float = 1e-8
) -> GapCheckResult:
    """Eigenvalues (other than a tolerated 0) falling inside the gap region."""
    violations = [
        complex(z)
        for z in report.eigenvalues
        if abs(z) > zero_tol and region.contains(complex(z))
    ]
    return GapCheckResult(passed=not violations, violations=violations)


def _axis_frontier(eigs: np.ndarray, im_tol: float) -> np.ndarray:
    """Eigenvalues nearest the imaginary axis: the Pareto envelope of the
    upper-half nonreal spectrum, keeping each point not dominated by one that
    is both closer to the axis and of lower frequency."""
    upper = eigs[(eigs.imag > im_tol) & (eigs.real < -1e-300)]
    if len(upper) == 0:
        return upper
    order = np.argsort(upper.imag)
    kept = []
    best = -np.inf
    for z in upper[order]:
        if z.real > best:
            kept.append(z)
            best = z.real
    return np.array(kept)


def fit_gap_region(
    report: SpectrumReport, k: float, zero_tol: float = 1e-8, im_tol: float = 1e-8
) -> GapRegion:
    """Largest empirical gap region consistent with a computed spectrum.

    kappa comes from the least-squares fit of log|Re z| against |Im z|^k on
    the eigenvalues nearest the axis; epsilon is then maximized subject to the
    gap check passing.
    """
    eigs = report.eigenvalues
    nonreal = eigs[np.abs(eigs.imag) > im_tol]
    if len(nonreal) < 3:
        raise ValueError("need at least 3 nonreal eigenvalues to fit a gap region")
    frontier = _axis_frontier(eigs, im_tol)
    if len(frontier) < 3:
        frontier = nonreal[(nonreal.imag > 0) & (nonreal.real < -1e-300)]
    if len(frontier) < 3:
        frontier = nonreal[np.abs(nonreal.real) > 1e-300]
    if len(frontier) < 3:
        raise ValueError("not enough strictly damped nonreal eigenvalues to fit a gap region")
    slope, _, _ = fit_log_linear(np.abs(frontier.imag) ** k, np.log(np.abs(frontier.real)))
    if slope >= 0:
        raise ValueError("no exponential thinning toward the axis detected")
    kappa = -slope
    offaxis = eigs[np.abs(eigs) > zero_tol]
    if np.any(offaxis.real >= 0):
        raise ValueError("spectrum contains eigenvalues with nonnegative real part")
    log_eps = float(
        np.min(np.log(np.abs(offaxis.real)) + kappa * np.abs(offaxis.imag) ** k)
    )
    eps = math.exp(min(log_eps, 690.0)) * (1.0 - 1e-9)
    return GapRegion(epsilon=eps, kappa=kappa, k=k)
