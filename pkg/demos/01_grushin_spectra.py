# Spectra of damped wave generators on the Grushin strip [-1,1] x (R/Z).
#
# The operator -(d_x1^2 + |x1|^(2(k-1)) d_x2^2) degenerates on the line
# x1 = 0.  When the damping b = 1_{|x1| >= 1/2} vanishes near that line,
# eigenfunctions can hide from it, and the spectrum of the damped wave
# generator creeps exponentially close to the imaginary axis.

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import hypowave as hw

N, M, k = 100, 8, 2.0
grid = hw.Grid1D.make(N)
profile = hw.DampingProfile.x1_indicator(grid, threshold=0.5)
bmat = hw.HermitianOperator(matrix=np.diag(profile.x1_values), quad_weight=grid.spacing)

# The damping depends on x1 only, so the generator splits into one block per
# Fourier mode n; each block is a small dense non-Hermitian matrix.
eigs = []
for n in range(0, M + 1):
    A = hw.assemble_grushin_mode(n, k, grid)
    report = hw.spectrum(hw.damped_wave_generator(A, bmat))
    eigs.append(report.eigenvalues)
    outside = report.flags.count("outside")
    print(f"mode {n:2d}: {len(report.eigenvalues)} eigenvalues, {outside} outside the strip")
z = np.concatenate(eigs)

print(f"\nmax Re = {z.real.max():.3e}  (must be < 0: no undamped states survive)")
print(f"min Re = {z.real.min():.3f}   (bounded by -|b|_inf = -1)")
nonreal = z[np.abs(z.imag) > 1e-8]
print(f"nonreal branch floor = {nonreal.real.min():.3f}  (bounded by -|b|_inf/2)")

# Fit the empirical spectrum-free region Gamma(eps, kappa):
# Re z >= -eps exp(-kappa Im z^2) holds for no eigenvalue except 0.
union = np.concatenate([z, np.conj(z)])
report = hw.generators.SpectrumReport(
    kind="wave", eigenvalues=union[np.lexsort((union.real, union.imag))],
    residuals=np.zeros(len(union)), flags=["inside"] * len(union),
    pairing=np.full(len(union), -1), clusters=[], damping_norm=1.0,
)
region = hw.fit_gap_region(report, k)
print(f"\nfitted gap region: eps = {region.epsilon:.3e}, kappa = {region.kappa:.3f}")
print("gap check:", "pass" if hw.spectral_gap_check(report, region).passed else "FAIL")

fig, ax = plt.subplots(figsize=(7, 5))
ax.scatter(z.real, z.imag, s=8, c="tab:blue", label="eigenvalues")
ys = np.linspace(0, z.imag.max(), 400)
ax.plot([region.boundary(y) for y in ys], ys, "r-", lw=1, label="fitted gap boundary")
ax.set(xlabel="Re z", ylabel="Im z", xlim=(-0.6, 0.02), ylim=(0, 40),
       title=f"Damped Grushin wave spectrum (k={k:g}, N={N}, modes 0..{M})")
ax.axvline(-0.5, color="gray", ls=":", lw=1, label="-|b|/2")
ax.legend()
fig.tight_layout()
fig.savefig("grushin_spectrum.png", dpi=130)
print("\nwrote grushin_spectrum.png")
