# The abstract constants chain, from observability cost to decay envelope.
#
#   G(mu) = C e^{kappa mu^k}                  observability cost
#   Gfrak(lam)                                free resolvent bound with
#                                             an observation term
#   M(lam) = <lam> Gfrak(lam)^2               damped resolvent bound (wave)
#   Mlog(s) = M(s)(log(1+M(s)) + log(1+s))
#   envelope(t) = C_j / Mlog^{-1}(t/(c j))^j  energy decay rate
#
# For k = 2 the chain lands on the log(t)^{-1/2} envelope; the Schrodinger
# variant (M = Gfrak(sqrt(lam))^2) gives log(t)^{-1}.  Everything is carried
# in log space: M exceeds the double range already for lam ~ 20.

import math

import numpy as np

import hypowave as hw

G = hw.CostFunction(C=1.0, kappa=1.0, k=2.0)
params = hw.PipelineParams(T=4.0, c0=1.0)  # K = sqrt(T) + 1/c0 = 3
gfrak = hw.free_resolvent_bound(G, params)
M_wave = hw.wave_M(gfrak)
M_schro = hw.schrodinger_M(gfrak)
mlog = hw.m_log(M_wave)

print("lambda        G           Gfrak              M (log)        Mlog (log)")
for lam in (1.0, 2.0, 3.0, 5.0, 10.0, 20.0):
    print(
        f"{lam:6.1f}  {G(lam):.4e}  {gfrak.value(lam):.6e}   "
        f"{M_wave.log_value(lam):12.2f}   {mlog.log_value(lam):12.2f}"
    )

# the damped-pencil multiplier from a free bound with an observation term
print("\ndamped_resolvent_bound(1,1,1,1) =", hw.damped_resolvent_bound(1, 1, 1, 1),
      "(= 3 + 4 sqrt2)")

# invert Mlog and look at the decay envelopes
env_w = hw.decay_envelope(M_wave, j=1, c=1.0, C_j=1.0)
env_s = hw.decay_envelope(M_schro, j=1, c=1.0, C_j=1.0)
print("\n   t         wave envelope    schrodinger envelope")
for t in (1e4, 1e6, 1e9, 1e12):
    print(f"{t:8.0e}   {env_w(t):12.6f}     {env_s(t):12.6f}")

# the asymptotic log-exponents, fitted far out via log-time queries
lts = np.exp(np.linspace(math.log(5e4), math.log(5e5), 40))
for name, env in (("wave", env_w), ("schrodinger", env_s)):
    vals = np.array([env.log_value(log_t=lt) for lt in lts])
    slope, _, _ = hw.fit_log_linear(np.log(lts), vals)
    print(f"{name:12s} envelope ~ log(t)^{slope:+.4f}")
print("the ratio of the exponents is 2: the Schrodinger decay is twice as")
print("fast in the log scale, at the price of a stronger norm on the data")
