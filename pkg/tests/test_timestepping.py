"""Evolution backends, dissipation accounting, decay products, observability."""

import math
import warnings

import numpy as np
import pytest
import scipy.linalg

import hypowave as hw
from conftest import build_mode_family, geometric_schedule


def scalar_op(value):
    return hw.HermitianOperator(matrix=np.array([[float(value)]]), quad_weight=1.0)


def scalar_wave(a, beta):
    return hw.damped_wave_generator(scalar_op(a), scalar_op(beta))


def test_conserved_energy_without_damping():
    g = hw.Grid1D.make(40)
    A = hw.assemble_grushin_mode(1, 2.0, g)
    B = hw.HermitianOperator(matrix=np.zeros((40, 40)), quad_weight=g.spacing)
    gen = hw.damped_wave_generator(A, B)
    U0 = hw.superposition_initial_data(2.0, g, hw.FourierModeSet(0), gen=gen)
    sched = np.linspace(0.0, 100.0, 21)
    for method, dt in (("midpoint", 0.05), ("spectral", None)):
        traj = hw.evolve(gen, U0, sched, method=method, dt=dt or 1e-2)
        drift = np.abs(traj.energies - traj.energies[0]).max()
        assert drift <= 1e-10 * traj.energies[0]


def test_scalar_wave_closed_form_solution():
    # a=1, beta=2 is the critically damped case: u(t) = (1+t) e^{-t}
    gen = scalar_wave(1.0, 2.0)
    sched = np.linspace(0.0, 8.0, 17)
    traj = hw.evolve(gen, hw.State(u=np.array([1.0]), v=np.array([0.0])), sched,
                     method="midpoint", dt=1e-4)
    for t, e in zip(sched, traj.energies):
        u = (1 + t) * math.exp(-t)
        du = -t * math.exp(-t)
        assert e == pytest.approx(0.5 * (u * u + du * du), abs=1e-8)
    assert hw.dissipation_residual(traj, gen) <= 1e-8


def test_schedule_validation():
    gen = scalar_wave(1.0, 0.0)
    with pytest.raises(ValueError):
        hw.evolve(gen, np.array([1.0, 0.0]), np.array([2.0, 1.0]))
    with pytest.raises(ValueError, match="dimension"):
        hw.evolve(gen, np.array([1.0]), np.array([1.0]))


def test_energy_quadratic_forms():
    g = hw.Grid1D.make(30)
    A = hw.assemble_grushin_mode(0, 2.0, g)
    B = hw.HermitianOperator(matrix=np.zeros((30, 30)), quad_weight=g.spacing)
    gen = hw.damped_wave_generator(A, B)
    lam, V = np.linalg.eigh(A.matrix)
    # u = 0: kinetic energy only
    v = V[:, 3] / A.norm(V[:, 3])
    assert hw.energy(gen, hw.State(u=np.zeros(30), v=v)) == pytest.approx(0.5)
    # v = 0, u a unit eigenvector: E = lambda / 2
    u = V[:, 3] / A.norm(V[:, 3])
    assert hw.energy(gen, hw.State(u=u, v=np.zeros(30))) == pytest.approx(lam[3] / 2, rel=1e-12)
    # schrodinger: E = |u|^2 / 2
    gens = hw.schrodinger_generator(A, B)
    assert hw.energy(gens, hw.State(u=u)) == pytest.approx(0.5)


def test_dissipation_residual_zero_without_damping():
    gen = scalar_wave(4.0, 0.0)
    traj = hw.evolve(gen, np.array([1.0, 0.0]), np.linspace(0, 5, 6), method="midpoint", dt=1e-3)
    assert hw.dissipation_residual(traj, gen) <= 1e-12


def test_dissipation_residual_second_order():
    fam = build_mode_family(60, 0)
    gen = fam.gens[0]
    U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0))
    sched = np.linspace(0.0, 10.0, 11)
    residuals = []
    for dt in (0.02, 0.01, 0.005):
        traj = hw.evolve(gen, U0, sched, method="midpoint", dt=dt)
        residuals.append(hw.dissipation_residual(traj, gen))
    orders = [math.log2(residuals[i] / residuals[i + 1]) for i in range(2)]
    assert all(1.8 <= o <= 2.2 for o in orders)


def test_dissipation_refinement_to_tolerance():
    fam = build_mode_family(60, 0)
    gen = fam.gens[0]
    U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0))
    sched = np.linspace(0.0, 10.0, 11)
    traj = hw.evolve(gen, U0, sched, method="midpoint", dt=0.02, residual_tol=1e-6)
    assert hw.dissipation_residual(traj, gen) <= 1e-6


def test_schrodinger_dissipation_identity():
    # (1/2)|u(T)|^2 - (1/2)|u0|^2 = -int b |u|^2: same bookkeeping, state norm
    fam = build_mode_family(50, 1, kind="schrodinger")
    gen = fam.gens[1]
    U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0), gen=gen)
    assert U0.v is None
    sched = np.linspace(0.0, 5.0, 6)
    residuals = []
    for dt in (0.01, 0.005):
        traj = hw.evolve(gen, U0, sched, method="midpoint", dt=dt)
        residuals.append(hw.dissipation_residual(traj, gen))
        assert np.all(np.diff(traj.energies) <= 1e-12)
    assert 1.8 <= math.log2(residuals[0] / residuals[1]) <= 2.2
    refined = hw.evolve(gen, U0, sched, method="midpoint", dt=0.01, residual_tol=1e-5)
    assert hw.dissipation_residual(refined, gen) <= 1e-5


def test_spectral_and_midpoint_agree():
    fam = build_mode_family(60, 0)
    gen = fam.gens[0]
    U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0))
    ts = hw.evolve(gen, U0, np.array([10.0]), method="spectral")
    tm = hw.evolve(gen, U0, np.array([10.0]), method="midpoint", dt=1.25e-4)
    num = np.linalg.norm(ts.final_state.vector() - tm.final_state.vector())
    assert num / np.linalg.norm(ts.final_state.vector()) <= 1e-6
    assert ts.method == "spectral" and tm.method == "midpoint"


def test_spectral_damping_integral_consistent():
    fam = build_mode_family(50, 0)
    gen = fam.gens[0]
    U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0))
    sched = np.linspace(0.0, 5.0, 51)
    traj = hw.evolve(gen, U0, sched, method="spectral")
    assert hw.dissipation_residual(traj, gen) <= 1e-3


def test_defective_generator_falls_back_with_warning():
    gen = scalar_wave(1.0, 2.0)  # double eigenvalue -1: defective eigenbasis
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = hw.evolve(gen, np.array([1.0, 0.0]), np.linspace(0, 1, 3), method="spectral")
    assert traj.method == "midpoint"
    assert any("condition" in str(w.message) for w in caught)


def test_energy_monotone_for_damped_runs():
    fam = build_mode_family(50, 1)
    for gen in fam.gens.values():
        U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0))
        traj = hw.evolve(gen, U0, np.linspace(0.0, 20.0, 40), method="midpoint", dt=5e-3)
        e = traj.energies
        assert np.all(e[1:] <= e[:-1] + 1e-10 * e[0])


def test_semigroup_decomposition_on_torus():
    # kernel-carrying instance: the flow converges to the kernel projection in
    # the seminorm while the projection itself is stationary
    modes = hw.FourierModeSet(2)
    A = hw.assemble_flat_laplacian(modes)
    B = hw.assemble_damping(hw.DampingProfile.constant(0.7), modes=modes)
    gen = hw.damped_wave_generator(A, B)
    proj = hw.kernel_projector(gen).projector
    rng = np.random.default_rng(3)
    U0 = rng.standard_normal(gen.dim)
    kernel_part = proj @ U0
    sched = np.array([0.0, 5.0, 20.0, 60.0])
    traj = hw.evolve(gen, U0, sched, method="midpoint", dt=1e-2, store_states=True)
    semi = [
        hw.energy_norm(gen, st.vector() - kernel_part, which="semi") for st in traj.states
    ]
    assert semi[-1] < 1e-8 * semi[0]
    # the projection is invariant under the flow
    trajp = hw.evolve(gen, kernel_part, np.array([0.0, 10.0]), method="midpoint", dt=1e-2)
    assert np.abs(trajp.final_state.vector() - kernel_part).max() < 1e-10


def test_terminal_rate_matches_spectral_abscissa():
    fam = build_mode_family(30, 0)
    gen = fam.gens[0]
    U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0))
    abscissa = float(scipy.linalg.eigvals(gen.matrix).real.max())
    # late enough that the least-damped eigencomponent dominates the energy
    t_late = np.linspace(2000.0, 2100.0, 21)
    traj = hw.evolve(gen, U0, t_late, method="spectral")
    assert np.all(traj.energies > 0)
    slope, _, _ = hw.fit_log_linear(t_late, np.log(traj.energies))
    assert slope == pytest.approx(2.0 * abscissa, rel=0.05)


def test_measure_decay_rejects_kernel_data():
    modes = hw.FourierModeSet(1)
    A = hw.assemble_flat_laplacian(modes)
    B = hw.assemble_damping(hw.DampingProfile.constant(0.5), modes=modes)
    gen = hw.damped_wave_generator(A, B)
    U0 = np.zeros(gen.dim)
    U0[modes.frequencies.tolist().index(0)] = 1.0  # constant function, zero velocity
    with pytest.raises(ValueError, match="kernel"):
        hw.measure_decay(gen, U0, 1, 2.0, np.linspace(1, 10, 5))


def test_measure_decay_scalar_bounded():
    gen = scalar_wave(2.0, 1.0)
    meas = hw.measure_decay(gen, np.array([1.0, 0.0]), 1, 2.0, geometric_schedule(1, 1e3, 30),
                            method="midpoint")
    assert np.isfinite(meas.products).all()
    assert meas.products.max() < 10.0


def test_measure_decay_undamped_grows():
    # without damping the normalized product grows like log(t)^(j/k)
    gen = scalar_wave(2.0, 0.0)
    sched = geometric_schedule(1, 1e3, 20)
    meas = hw.measure_decay(gen, np.array([1.0, 0.0]), 1, 2.0, sched, method="midpoint")
    peaks = np.maximum.accumulate(meas.products)
    assert peaks[-1] > 1.5 * peaks[4]


def test_measure_decay_window_and_products():
    fam = build_mode_family(60, 0)
    gen = fam.gens[0]
    U0 = hw.superposition_initial_data(2.0, fam.grid, hw.FourierModeSet(0))
    meas = hw.measure_decay(gen, U0.vector(), 1, 2.0, geometric_schedule(1.0, 200.0, 40))
    assert meas.norm_generator_power > 0
    assert meas.spectral_abscissa < 0
    assert np.isfinite(meas.sup_product(t_min=10.0))


def test_superposition_data_normalized():
    g = hw.Grid1D.make(40)
    modes = hw.FourierModeSet(2)
    A = hw.assemble_grushin_full(2.0, g, modes)
    B = hw.assemble_damping(hw.DampingProfile.constant(0.2), grid=g, modes=modes)
    gen = hw.damped_wave_generator(A, B)
    U0 = hw.superposition_initial_data(2.0, g, modes, gen=gen)
    assert hw.energy_norm(gen, U0.vector(), which="norm") == pytest.approx(1.0, rel=1e-12)


def test_observability_full_circle_bounded():
    # torus with full observation: the needed cost is bounded and stabilizes
    # at max(lhs/obs) as mu grows
    modes = hw.FourierModeSet(2)
    A = hw.assemble_flat_laplacian(modes)
    prof = hw.DampingProfile.constant(1.0)
    probe = hw.observability_cost_probe(
        A, prof, T=2.0, ensemble=5, mu_grid=np.linspace(2.0, 2000.0, 12)
    )
    assert np.isfinite(probe.g_needed).all()
    assert probe.g_needed.max() < 10.0
    # saturation: the last two values nearly agree
    assert probe.g_needed[-1] == pytest.approx(probe.g_needed[-2], rel=1e-2)


def test_observability_grushin_cost_grows_with_mode():
    # ground-state data of higher modes is exponentially harder to observe
    g = hw.Grid1D.make(80)
    prof = hw.DampingProfile.x1_indicator(g, 0.5)
    costs = []
    for n in (2, 4, 6):
        A = hw.assemble_grushin_mode(n, 2.0, g)
        _, V = np.linalg.eigh(A.matrix)
        phi = V[:, 0] / A.norm(V[:, 0])
        probe = hw.observability_cost_probe(
            A, prof, T=2.0, ensemble=[(phi, np.zeros(80))],
            mu_grid=np.array([1e4, 1e5, 1e6]),
        )
        costs.append(probe.g_needed[-1])
    assert costs[0] < costs[1] < costs[2]
    assert costs[2] > 20 * costs[0]


def test_observability_invisible_member_excluded():
    A = hw.HermitianOperator(matrix=np.diag([1.0, 2.0, 3.0]), quad_weight=1.0)
    prof = hw.DampingProfile.from_x1_samples([0.0, 1.0, 1.0])
    e0 = np.array([1.0, 0.0, 0.0])
    e1 = np.array([0.0, 1.0, 0.0])
    probe = hw.observability_cost_probe(
        A, prof, T=3.0, ensemble=[(e0, np.zeros(3)), (e1, np.zeros(3))],
        mu_grid=np.linspace(2.0, 40.0, 6),
    )
    assert probe.excluded == [0]


def test_observability_eigenmode_ensemble_fit():
    g = hw.Grid1D.make(60)
    modes = hw.FourierModeSet(3)
    A = hw.assemble_grushin_full(2.0, g, modes)
    prof = hw.DampingProfile.x1_indicator(g, 0.5)
    B = hw.assemble_damping(prof, grid=g, modes=modes)
    probe = hw.observability_cost_probe(
        A, prof, T=4.0, ensemble=12, mu_grid=np.linspace(1.5, 8.0, 12),
        damping_matrix=B.matrix,
    )
    assert probe.kappa_hat > 0
    assert probe.excluded == []
    positive = probe.g_needed[probe.g_needed > 0]
    assert np.all(np.diff(positive) > 0)
