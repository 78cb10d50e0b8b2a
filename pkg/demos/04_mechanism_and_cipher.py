"""Least-leaking mechanisms under a distortion budget, and a keyed cipher."""
# %%
import math

import numpy as np

from maxleak.cipher import build_scheme, convergence_slack_bits, exact_scheme_leakage, single_letter_limit
from maxleak.dist import Pmf
from maxleak.mechanism import DistortionSpec, memoryless_gap_report, min_leakage_general

# %%
# binary source, Hamming distortion: the LP recovers log2(2 - D/p)
p = 0.3
for D in (0.0, 0.1, 0.2, 0.3):
    sol = min_leakage_general(Pmf((0, 1), [1 - p, p]), DistortionSpec.hamming(2, D))
    print(f"D={D:.1f}  {sol.leakage.bits:.6f} bits  (closed form {math.log2(2 - D / p):.6f})")
    print(np.round(sol.channel.dense(), 4))

# %%
# per-letter mechanisms pay more than coding over blocks
print(memoryless_gap_report(0.5, 0.25))

# %% [markdown]
# A shared key of rate r lets the sender hide which codeword in a bin was
# used. Leakage per symbol stays above a single-letter value and within a
# polynomial slack of it, which shrinks with n.

# %%
ber, ham = Pmf((0, 1), [0.5, 0.5]), DistortionSpec.hamming(2, 0.0)
D, r, alpha = 0.1, 0.2, 0.05
print("limit", single_letter_limit(ber, ham, D, r, alpha).bits, "bits/symbol")
for n in (8, 12, 16):
    s = build_scheme(n, ber, ham, D, r, alpha, seed=0)
    print(f"n={n:2d}  key bits {s.key_bits:2d}  L/n = {exact_scheme_leakage(s).bits / n:.4f}"
          f"  slack {convergence_slack_bits(n):.3f}")
