"""Packet timing as a side channel: a queue versus batching."""
# %%
import math

from maxleak.timing import TimingScheme, accumulate_dump_report, pooled_wait, queue_leakage_rate, simulate_scheme

lam = 1.0

# %%
# an M/M/1 queue forwards every arrival pattern, so leakage rate is mu
for mu in (1.5, 2.0, 4.0):
    r = queue_leakage_rate(lam, mu)
    print(f"mu={mu}: {r.leakage_rate} nats/s, mean wait {r.mean_wait:.3f}")

# %% [markdown]
# Accumulate-and-dump releases at most m packets every tau seconds. Only
# the count per interval leaks, and the overflow tail has a Chernoff bound.

# %%
tau = 2 / lam
m = math.exp(3) * lam * tau / 2 - 1
rep = accumulate_dump_report(lam, tau, m)
print(f"dump: {rep.leakage_rate:.4f} nats/s, overflow <= {rep.overflow_bound:.2e} (exact {rep.overflow_exact:.2e})")

# %%
runs = [simulate_scheme(TimingScheme("dump", lam, tau=tau, m=m), seed=i) for i in range(10)]
mean, se = pooled_wait(runs)
print(f"simulated wait {mean:.4f} +- {se:.4f}  (tau/2 = {tau / 2})")
