# Resolvent growth along the imaginary axis.
#
# The energy-metric resolvent norm |(is - G)^{-1}| peaks near the imaginary
# parts of eigenvalues.  At the quasimode frequencies s_n = sqrt(lambda_n)
# the peaks grow like exp(kappa s_n^2): the quantitative signature of the
# k = 2 hypoelliptic degeneracy (an elliptic problem would give exp(kappa s)).

import math

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import hypowave as hw

N, k = 80, 2.0
grid = hw.Grid1D.make(N)
profile = hw.DampingProfile.x1_indicator(grid, 0.5)
bmat = hw.HermitianOperator(matrix=np.diag(profile.x1_values), quad_weight=grid.spacing)

gens, lam0 = {}, {}
for n in range(0, 9):
    A = hw.assemble_grushin_mode(n, k, grid)
    gens[n] = hw.damped_wave_generator(A, bmat)
    lam0[n] = float(np.linalg.eigvalsh(A.matrix)[0])


def full_norm(s):
    # block-diagonal over modes: the norm is the max over the blocks
    return max(hw.resolvent_norm(g, s) for g in gens.values())


# a modest sweep shows the local maxima near the branch frequencies
s_grid = np.linspace(2.0, 6.7, 48)
sweep_norms = np.array([full_norm(s) for s in s_grid])

# the peaks at s_n = sqrt(lambda_n) and their exponential fit
ns = np.arange(2, 9)
s_peaks = np.array([math.sqrt(lam0[n]) for n in ns])
peak_norms = np.array([full_norm(s) for s in s_peaks])
kappa, c, r2 = hw.fit_log_linear(s_peaks**2, np.log(peak_norms))
print("peak resolvent norms at s_n = sqrt(lambda_n):")
for n, s, v in zip(ns, s_peaks, peak_norms):
    print(f"  n={n:2d}  s={s:6.3f}  |(is-G)^-1| = {v:.3e}")
print(f"\nfit log|R| = kappa s^2 + c: kappa = {kappa:.4f}, R^2 = {r2:.4f}")

fig, ax = plt.subplots(figsize=(7, 4.5))
ax.semilogy(s_grid, sweep_norms, "-", lw=1, label="sweep")
ax.semilogy(s_peaks, peak_norms, "ro", ms=5, label="quasimode peaks")
ax.semilogy(s_peaks, np.exp(kappa * s_peaks**2 + c), "k--", lw=1,
            label=f"$e^{{{kappa:.2f}\\, s^2}}$ fit")
ax.set(xlabel="s", ylabel=r"$\|(is-\mathcal{G})^{-1}\|$",
       title="Exponential resolvent growth (k=2)")
ax.legend()
fig.tight_layout()
fig.savefig("resolvent_growth.png", dpi=130)
print("wrote resolvent_growth.png")
