"""Time evolution, dissipation accounting, decay measurement and the
observability-cost probe.

Two evolution backends are provided.  The implicit midpoint rule conserves
the quadratic energy exactly in the undamped case and satisfies a discrete
dissipation identity up to the O(dt^2) quadrature error of the trapezoidal
damping integral.  The spectral backend diagonalizes the generator once and
propagates each eigencomponent by exp(z_j t); it is preferred whenever the
eigenvector matrix is well conditioned, and is the natural choice for
geometric time schedules.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .generators import DampedGenerator
from .operators import FourierModeSet, Grid1D, assemble_grushin_mode


@dataclass(eq=False)
class State:
    """Phase-space state: (u, v) for wave/plate, u alone for schrodinger."""

    u: np.ndarray
    v: np.ndarray | None = None
    t: float = 0.0

    def vector(self) -> np.ndarray:
        if self.v is None:
            return np.asarray(self.u)
        return np.concatenate([np.asarray(self.u), np.asarray(self.v)])

    @classmethod
    def from_vector(cls, vec: np.ndarray, kind: str, t: float = 0.0) -> "State":
        if kind == "schrodinger":
            return cls(u=vec, v=None, t=t)
        n = len(vec) // 2
        return cls(u=vec[:n], v=vec[n:], t=t)


@dataclass(eq=False)
class Trajectory:
    """Sampled evolution: times, energies, cumulative damping integral."""

    times: np.ndarray
    energies: np.ndarray
    damping_integral: np.ndarray | None
    final_state: State
    method: str
    states: list[State] | None = None

    def to_csv(self, path) -> None:
        lines = ["t,energy,damping_integral"]
        D = self.damping_integral
        for i, (t, e) in enumerate(zip(self.times, self.energies)):
            d = float(D[i]) if D is not None else float("nan")
            lines.append(f"{float(t)!r},{float(e)!r},{d!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _as_vector(gen: DampedGenerator, U0) -> np.ndarray:
    vec = U0.vector() if isinstance(U0, State) else np.asarray(U0)
    if len(vec) != gen.dim:
        raise ValueError(f"initial data dimension {len(vec)} does not match generator {gen.dim}")
    if not np.all(np.isfinite(vec.real)) or not np.all(np.isfinite(vec.imag)):
        raise ValueError("initial data contains non-finite entries")
    return vec


def energy_norm(gen: DampedGenerator, vec: np.ndarray, which: str = "norm") -> float:
    W = gen.gram_norm if which == "norm" else gen.gram_semi
    val = gen.quad_weight * np.real(np.vdot(vec, W @ vec))
    return math.sqrt(max(val, 0.0))


def energy(gen: DampedGenerator, state) -> float:
    """E = (1/2) |U|^2 in the energy seminorm: (<A u, u> + |v|^2)/2 for waves,
    (|A u|^2 + |v|^2)/2 for plates, |u|^2/2 for schrodinger."""
    vec = _as_vector(gen, state)
    return 0.5 * energy_norm(gen, vec, which="semi") ** 2


def _damping_quadratic(gen: DampedGenerator, vec: np.ndarray) -> float:
    bmat = gen.damping.matrix
    if gen.kind == "schrodinger":
        w = vec
    else:
        w = vec[gen.state_dim :]
    return float(gen.quad_weight * np.real(np.vdot(w, bmat @ w)))


def _spectral_data(gen: DampedGenerator):
    eigs, V = scipy.linalg.eig(gen.matrix)
    cond = np.linalg.cond(V)
    return eigs, V, cond


def evolve(
    gen: DampedGenerator,
    U0,
    schedule,
    method: str = "auto",
    dt: float = 1e-2,
    residual_tol: float | None = None,
    max_refinements: int = 12,
    cond_cap: float = 1e8,
    store_states: bool = False,
) -> Trajectory:
    """Evolve dU/dt = G U sampling at the schedule times.

    method "midpoint" uses the implicit midpoint rule with micro-steps of size
    at most dt between samples; when ``residual_tol`` is set, dt is halved
    until the dissipation residual meets the tolerance.  method "spectral"
    diagonalizes the generator once (requires eigenvector condition number
    below ``cond_cap``, otherwise falls back to stepping with a warning).
    "auto" prefers spectral and falls back likewise.
    """
    schedule = np.asarray(schedule, dtype=float)
    if len(schedule) == 0 or np.any(np.diff(schedule) <= 0) or schedule[0] < 0:
        raise ValueError("schedule must be increasing and start at a nonnegative time")
    vec0 = _as_vector(gen, U0)

    if method in ("auto", "spectral"):
        eigs, V, cond = _spectral_data(gen)
        if cond < cond_cap:
            return _evolve_spectral(gen, vec0, schedule, eigs, V, store_states)
        if method == "spectral":
            warnings.warn(
                f"eigenvector condition number {cond:.2e} exceeds {cond_cap:.0e}; "
                "falling back to implicit midpoint stepping"
            )
    if residual_tol is None:
        return _evolve_midpoint(gen, vec0, schedule, dt, store_states)
    traj = _evolve_midpoint(gen, vec0, schedule, dt, store_states)
    for _ in range(max_refinements):
        if dissipation_residual(traj, gen) <= residual_tol:
            break
        dt *= 0.5
        traj = _evolve_midpoint(gen, vec0, schedule, dt, store_states)
    return traj


def _evolve_spectral(gen, vec0, schedule, eigs, V, store_states, damping_refine=8) -> Trajectory:
    coeffs = np.linalg.solve(V, vec0.astype(complex))
    real_case = not np.iscomplexobj(gen.matrix) and not np.iscomplexobj(vec0)

    def state_at(t):
        vec = V @ (np.exp(eigs * t) * coeffs)
        return vec.real if real_case else vec

    energies = np.empty(len(schedule))
    damping = np.empty(len(schedule))
    states = [] if store_states else None
    final = None
    damp_acc = 0.0
    t_prev = 0.0
    q_prev = _damping_quadratic(gen, vec0)
    for i, t in enumerate(schedule):
        if t > t_prev + 1e-14:
            # refined trapezoid for the damping integral between samples
            sub = np.linspace(t_prev, t, damping_refine + 1)[1:]
            for ts in sub:
                q = _damping_quadratic(gen, state_at(ts))
                damp_acc += 0.5 * (ts - t_prev) * (q_prev + q)
                q_prev, t_prev = q, ts
        vec = state_at(t)
        energies[i] = 0.5 * energy_norm(gen, vec, which="semi") ** 2
        damping[i] = damp_acc
        st = State.from_vector(vec, gen.kind, t=float(t))
        if store_states:
            states.append(st)
        final = st
    return Trajectory(
        times=schedule,
        energies=energies,
        damping_integral=damping,
        final_state=final,
        method="spectral",
        states=states,
    )


def _evolve_midpoint(gen, vec0, schedule, dt, store_states) -> Trajectory:
    G = gen.matrix
    dim = gen.dim
    eye = np.eye(dim)
    factor_cache: dict[float, tuple] = {}

    def factor(h):
        key = round(h, 15)
        if key not in factor_cache:
            lu = scipy.linalg.lu_factor(eye - 0.5 * h * G)
            fwd = eye + 0.5 * h * G
            factor_cache[key] = (lu, fwd)
        return factor_cache[key]

    vec = vec0.astype(complex) if np.iscomplexobj(G) or np.iscomplexobj(vec0) else vec0.astype(float)
    t_cur = 0.0
    damp_acc = 0.0
    q_cur = _damping_quadratic(gen, vec)

    energies = np.empty(len(schedule))
    damping = np.empty(len(schedule))
    states = [] if store_states else None
    final = None

    for i, t_target in enumerate(schedule):
        gap = t_target - t_cur
        if gap > 1e-14:
            n_sub = max(1, int(math.ceil(gap / dt - 1e-12)))
            h = gap / n_sub
            lu, fwd = factor(h)
            for _ in range(n_sub):
                vec = scipy.linalg.lu_solve(lu, fwd @ vec)
                q_next = _damping_quadratic(gen, vec)
                damp_acc += 0.5 * h * (q_cur + q_next)
                q_cur = q_next
            t_cur = t_target
        energies[i] = 0.5 * energy_norm(gen, vec, which="semi") ** 2
        damping[i] = damp_acc
        st = State.from_vector(vec, gen.kind, t=float(t_target))
        if store_states:
            states.append(st)
        final = st
    return Trajectory(
        times=schedule,
        energies=energies,
        damping_integral=damping,
        final_state=final,
        method="midpoint",
        states=states,
    )


def dissipation_residual(trajectory: Trajectory, gen: DampedGenerator) -> float:
    """|E(T) - E(t0) + integral over (t0, T) of b |du/dt|^2| normalized by E(t0),
    balanced over the trajectory's own sample window."""
    if trajectory.damping_integral is None:
        raise ValueError("trajectory does not carry a damping integral")
    e0 = trajectory.energies[0]
    if e0 <= 0:
        raise ValueError("initial energy must be positive")
    drift = (
        trajectory.energies[-1]
        - e0
        + trajectory.damping_integral[-1]
        - trajectory.damping_integral[0]
    )
    return abs(drift) / e0


def apply_generator_power(gen: DampedGenerator, vec: np.ndarray, j: int) -> np.ndarray:
    out = vec
    for _ in range(j):
        out = gen.matrix @ out
    return out


@dataclass(eq=False)
class DecayMeasurement:
    """Normalized decay products sqrt(E(t)) log(t+2)^{j/k} / |G^j U0|.

    ``window_end`` marks the takeover time after which the slowest retained
    mode dominates and the truncated system decays exponentially; the
    logarithmic law is only meaningful before it.
    """

    times: np.ndarray
    products: np.ndarray
    energies: np.ndarray
    norm_generator_power: float
    spectral_abscissa: float
    window_end: float

    def sup_product(self, t_min: float = 0.0, within_window: bool = True) -> float:
        mask = self.times >= t_min
        if within_window:
            mask &= self.times <= self.window_end
        if not np.any(mask):
            raise ValueError("no samples in the requested window")
        return float(self.products[mask].max())


def measure_decay(
    gen: DampedGenerator,
    U0,
    j: int,
    k: float,
    schedule,
    method: str = "spectral",
    rate_match_rtol: float = 0.05,
) -> DecayMeasurement:
    """Sample E(t)^{1/2} log(t+2)^{j/k} normalized by the energy norm of G^j U0;
    boundedness of the product is the testable decay claim."""
    vec0 = _as_vector(gen, U0)
    if j < 1:
        raise ValueError("j must be >= 1")
    gu = gen.matrix @ vec0
    if np.linalg.norm(gu) <= 1e-14 * np.linalg.norm(vec0):
        raise ValueError("initial data lies in the generator kernel; decay is trivial")
    aj = apply_generator_power(gen, vec0, j)
    norm_aj = energy_norm(gen, aj, which="norm")
    if norm_aj <= 0:
        raise ValueError("generator power annihilates the initial data")

    traj = evolve(gen, vec0, schedule, method=method)
    times = traj.times
    energies = traj.energies
    products = np.sqrt(np.maximum(energies, 0.0)) * np.log(times + 2.0) ** (j / k) / norm_aj

    eigs = scipy.linalg.eigvals(gen.matrix)
    abscissa = float(eigs.real.max())
    window_end = float(times[-1])
    target = 2.0 * abscissa
    for i in range(len(times) - 1):
        e1, e2 = energies[i], energies[i + 1]
        if e1 <= 0 or e2 <= 0:
            continue
        rate = (math.log(e2) - math.log(e1)) / (times[i + 1] - times[i])
        if abs(rate - target) <= rate_match_rtol * abs(target):
            window_end = float(times[i])
            break
    return DecayMeasurement(
        times=times,
        products=products,
        energies=energies,
        norm_generator_power=norm_aj,
        spectral_abscissa=abscissa,
        window_end=window_end,
    )


def superposition_initial_data(
    k: float, grid: Grid1D, modes: FourierModeSet, gen: DampedGenerator | None = None
) -> State:
    """Equal-weight superposition of the per-mode ground states, normalized in
    the generator's energy norm when one is supplied.

    Wave/plate generators get (u0, 0) phase-space data; schrodinger
    generators get the scalar state u0.
    """
    pieces = []
    for n in modes.frequencies:
        op = assemble_grushin_mode(int(n), k, grid)
        _, V = np.linalg.eigh(op.matrix)
        phi = V[:, 0]
        phi = phi / op.norm(phi)
        if phi[np.argmax(np.abs(phi))] < 0:
            phi = -phi
        pieces.append(phi)
    u0 = np.concatenate(pieces)
    if gen is not None and gen.kind == "schrodinger":
        scale = math.sqrt(gen.quad_weight) * np.linalg.norm(u0)
        return State(u=u0 / scale, v=None, t=0.0)
    v0 = np.zeros_like(u0)
    if gen is not None:
        vec = np.concatenate([u0, v0])
        scale = energy_norm(gen, vec, which="norm")
        u0 = u0 / scale
    return State(u=u0, v=v0, t=0.0)


@dataclass(eq=False)
class ObservabilityProbe:
    """Empirical observability cost: minimal admissible G per relaxation mu,
    with the exponential fit G(mu) ~ C exp(kappa mu^k)."""

    mu_values: np.ndarray
    g_needed: np.ndarray
    C_hat: float
    kappa_hat: float
    r2: float
    k: float
    excluded: list[int]

    def to_csv(self, path) -> None:
        lines = ["mu,g_needed"]
        for m, g in zip(self.mu_values, self.g_needed):
            lines.append(f"{float(m)!r},{float(g)!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def observability_cost_probe(
    A,
    b_region,
    T: float,
    ensemble,
    mu_grid=None,
    k: float | None = None,
    n_time: int = 513,
    seed: int = 0,
    ensemble_kind: str = "eigenmodes",
    damping_matrix: np.ndarray | None = None,
) -> ObservabilityProbe:
    """Probe the approximate-observability inequality on the free wave flow.

    For each ensemble member (u0, u1) the free (undamped) wave is evolved via
    the eigendecomposition of A, and for each mu the minimal admissible cost

        G_needed(mu) = max over members of
            (|(u0,u1)|_{H x H^-1} - mu^{-1} |(u0,u1)|_{H1 x H})_+ / |B* u|_{L2(0,T)}

    is recorded; log G_needed is then fitted against mu^k.  A member only
    starts contributing once mu exceeds its H1-to-H norm ratio, so the lowest
    ``ensemble`` eigenvectors of A (the default ensemble) sample the cost
    mode by mode as mu grows.  Members the observation does not see (zero
    |B* u|) are excluded and reported.
    """
    if T <= 0:
        raise ValueError("observation time must be positive")
    lam, V = np.linalg.eigh(A.matrix)
    lam = np.maximum(lam, 0.0)
    qw = A.quad_weight
    dim = A.dimension

    if damping_matrix is not None:
        bmat = damping_matrix
    elif b_region.variant == "constant":
        bmat = b_region.beta * np.eye(dim)
    elif b_region.variant == "separable_x1":
        v = np.asarray(b_region.x1_values, dtype=float)
        if len(v) != dim:
            raise ValueError("damping samples do not match the operator dimension")
        bmat = np.diag(v)
    else:
        raise ValueError("pass damping_matrix explicitly for mode-coupled damping")
    if float(np.abs(bmat).max(initial=0.0)) == 0.0:
        raise ValueError("observation region is identically zero")

    if isinstance(ensemble, int):
        count = min(ensemble, dim)
        if ensemble_kind == "eigenmodes":
            # coefficient vectors e_i: the i-th eigenvector of A with zero velocity
            members = [(np.eye(dim)[i], np.zeros(dim)) for i in range(count)]
        elif ensemble_kind == "random":
            rng = np.random.default_rng(seed)
            members = []
            for _ in range(count):
                a0 = rng.standard_normal(dim) / (1.0 + lam)
                b0 = rng.standard_normal(dim) / (1.0 + lam)
                members.append((a0 / np.linalg.norm(a0), b0 / np.linalg.norm(b0)))
        else:
            raise ValueError("ensemble_kind must be 'eigenmodes' or 'random'")
    else:
        members = [(V.T @ np.asarray(u0), V.T @ np.asarray(u1)) for u0, u1 in ensemble]

    if mu_grid is None:
        mu_grid = np.linspace(1.0, 10.0, 10)
    mu_grid = np.asarray(mu_grid, dtype=float)
    if k is None:
        k = A.k if A.k is not None else 1.0

    ts = np.linspace(0.0, T, n_time)
    sq = np.sqrt(lam)
    cos_t = np.cos(sq[:, None] * ts[None, :])
    sin_over = ts[None, :] * np.sinc(sq[:, None] * ts[None, :] / np.pi)

    lhs_list, h1_list, obs_list = [], [], []
    excluded = []
    for idx, (a0, b0) in enumerate(members):
        lhs = math.sqrt(qw * (np.sum(np.abs(a0) ** 2) + np.sum(np.abs(b0) ** 2 / (1.0 + lam))))
        h1 = math.sqrt(qw * (np.sum((1.0 + lam) * np.abs(a0) ** 2) + np.sum(np.abs(b0) ** 2)))
        coefs = a0[:, None] * cos_t + b0[:, None] * sin_over
        U = V @ coefs
        quad = qw * np.real(np.einsum("it,it->t", np.conj(U), bmat @ U))
        obs = math.sqrt(max(np.trapezoid(quad, ts), 0.0))
        if obs <= 1e-14 * max(lhs, 1e-300):
            excluded.append(idx)
            continue
        lhs_list.append(lhs)
        h1_list.append(h1)
        obs_list.append(obs)
    if not lhs_list:
        raise ValueError("every ensemble member was invisible to the observation")

    lhs_arr = np.array(lhs_list)
    h1_arr = np.array(h1_list)
    obs_arr = np.array(obs_list)
    g_needed = np.array(
        [np.max(np.maximum(lhs_arr - h1_arr / mu, 0.0) / obs_arr) for mu in mu_grid]
    )

    positive = g_needed > 0
    if positive.sum() < 2:
        raise ValueError("not enough positive cost samples to fit the exponential law")
    x = mu_grid[positive] ** k
    y = np.log(g_needed[positive])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot
    return ObservabilityProbe(
        mu_values=mu_grid,
        g_needed=g_needed,
        C_hat=float(np.exp(intercept)),
        kappa_hat=float(slope),
        r2=r2,
        k=float(k),
        excluded=excluded,
    )
