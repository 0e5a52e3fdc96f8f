# Tunneling quasimodes: ground states of the per-mode Grushin blocks.
#
# For k = 2 the mode-n block is -d^2/dx^2 + (2 pi n)^2 x^2, whose ground
# state is a Gaussian of width ~ n^{-1/2}.  Its mass on |x1| >= 1/2 (where
# the damping lives) decays like exp(-c n), so |b phi_n| shrinks
# geometrically: these are the states the damping cannot see.

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import hypowave as hw

grid = hw.Grid1D.make(300)
profile = hw.DampingProfile.x1_indicator(grid, threshold=0.5)

ns = np.arange(1, 13)
modes = [hw.quasimode(int(n), 2.0, grid, profile=profile) for n in ns]

print(" n   lambda_n    |b phi_n|    |P(i sqrt(lam)) phi_n|")
for q in modes:
    print(f"{q.n:2d}  {q.eigenvalue:9.3f}  {q.bnorm:.4e}   {q.pencil_defect:.4e}")

bnorms = np.array([q.bnorm for q in modes])
slope, intercept, r2 = hw.fit_log_linear(ns.astype(float), np.log(bnorms))
print(f"\nlog|b phi_n| vs n: slope = {slope:.4f} (R^2 = {r2:.5f})")
print("each extra mode hides another factor", f"{np.exp(slope):.3f}", "from the damping")

# The pencil defect |P(i sqrt(lam)) phi| = sqrt(lam) |b phi| (up to the eig
# residual) forces the resolvent lower bound |(is - G)^{-1}| >~ 1/|b phi|.
fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
axes[0].semilogy(ns, bnorms, "o-", label=r"$\|b\varphi_n\|$")
axes[0].semilogy(ns, np.exp(intercept + slope * ns), "k--", lw=1,
                 label=f"fit slope {slope:.2f}")
axes[0].set(xlabel="mode n", title="Mass on the damping region")
axes[0].legend()

for q in modes[1:9:3]:
    axes[1].plot(grid.nodes, q.vector, lw=1.2, label=f"n={q.n}")
axes[1].axvspan(-1, -0.5, color="0.9")
axes[1].axvspan(0.5, 1, color="0.9", label="supp(b)")
axes[1].set(xlabel="$x_1$", title="Ground states concentrate at $x_1=0$")
axes[1].legend(fontsize=8)
fig.tight_layout()
fig.savefig("tunneling_quasimodes.png", dpi=130)
print("wrote tunneling_quasimodes.png")
