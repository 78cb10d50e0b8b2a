"""Maximal leakage on small channels, next to mutual information."""
# %%
import math

import numpy as np

from maxleak.channels import bec, binary_joint, bsc, deterministic_channel
from maxleak.dist import Channel, Pmf, compose, mutual_information, transpose
from maxleak.metrics import (capacity, cost_leakage, local_dp, maximal_correlation,
                             maximal_leakage, metric_report, realizable_leakage)

# %% [markdown]
# Maximal leakage is log sum_y max_x W(y|x) over the support of P_X.
# For a BSC with crossover 1/4 that is log(3/4 + 3/4) = log 1.5.

# %%
j = binary_joint(0.5, bsc(0.25))
print("BSC(0.25)   L =", maximal_leakage(j).bits, "bits")
print("            I =", mutual_information(j) / math.log(2), "bits")

# %%
# erasures: the direction matters
e = binary_joint(0.5, bec(0.5))
print("BEC(0.5)    L(X->Y) =", maximal_leakage(e).nats, " L(Y->X) =", maximal_leakage(transpose(e)).nats)
print("            local DP =", local_dp(bec(0.5)).nats)  # an erasure-free output is only reachable from one x

# %%
# the full ordering on one joint
for name, v in metric_report(j).values.items():
    print(f"{name:>22s}  {v.bits:.6f} bits")
print("maximal correlation", maximal_correlation(j))

# %% [markdown]
# A guessing attacker and a Shannon-style observer can disagree sharply.
# Over 16 uniform bits, revealing x whenever x = 0 mod 8 leaks ~13 bits of
# guessing advantage but less mutual information than the top 3 bits.

# %%
xs = range(1 << 16)
px = Pmf.uniform(xs)
y = compose(px, deterministic_channel(xs, lambda x: ("x", x) if x % 8 == 0 else ("one",)))
z = compose(px, deterministic_channel(xs, lambda x: x >> 13))
for name, jj in (("reveal 1/8", y), ("top 3 bits", z)):
    print(f"{name:>11s}  L = {maximal_leakage(jj).bits:7.4f} bits   I = {mutual_information(jj) / math.log(2):.4f} bits")

# %%
# capacity never exceeds maximal leakage with a full-support input
rng = np.random.default_rng(0)
w = rng.dirichlet(np.ones(4), size=3)
ch = Channel(range(3), range(4), w)
print("C =", capacity(ch).nats, "<= L =", maximal_leakage(compose(Pmf.uniform(range(3)), ch)).nats)
print("realizable", realizable_leakage(compose(Pmf.uniform(range(3)), ch)).nats,
      "cost", cost_leakage(compose(Pmf.uniform(range(3)), ch)).nats)
