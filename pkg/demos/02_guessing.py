"""Guessing attackers: every function U of X leaks at most L, and one leaks exactly L."""
# %%
import numpy as np

from maxleak.channels import binary_joint, bsc, random_channel, random_pmf
from maxleak.dist import Pmf, compose
from maxleak.metrics import maximal_leakage
from maxleak.oracle import (expand_for_k, k_guess_leakage_of_U, leakage_of_U, random_aux,
                            shattering_channel)

# %%
rng = np.random.default_rng(7)
px = random_pmf(rng, 5)
j = compose(px, random_channel(rng, 5, 4))
lm = maximal_leakage(j).nats
print(f"L = {lm:.6f} nats")

# %%
# random randomized functions U of X
vals = [leakage_of_U(random_aux(rng, int(rng.integers(1, 10)), j.x_labels), j).nats for _ in range(200)]
print(f"200 random U: max {max(vals):.6f}, mean {np.mean(vals):.6f}")

# %% [markdown]
# The shattering construction splits each x into equiprobable atoms so the
# attacker's best guess of U is forced to track every column maximum.

# %%
sh = shattering_channel(px)
print("shattering U:", leakage_of_U(sh, j).nats, " atoms:", len(sh.u_labels))

# %%
# an attacker allowed k guesses: the shattering U expanded k-fold still tops out at L
jb = binary_joint(0.5, bsc(0.1))
shb = shattering_channel(Pmf(jb.x_labels, jb.px))
print("L =", maximal_leakage(jb).bits, "bits")
for k in (1, 2, 3):
    print(f"k={k}  {k_guess_leakage_of_U(expand_for_k(shb, k), jb, k).bits:.4f} bits")
