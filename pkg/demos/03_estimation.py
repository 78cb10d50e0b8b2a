"""Estimating maximal leakage from samples."""
# %%
import numpy as np

from maxleak.channels import bsc, binary_joint
from maxleak.dist import Pmf
from maxleak.estimation import (EstimatorConfig, error_rate_report, estimate_ml_plugin, hard_instance,
                                hard_instance_value, sample_complexity_lower_scaling,
                                sample_complexity_upper, sample_fixed)
from maxleak.metrics import maximal_leakage

# %%
j = binary_joint(0.5, bsc(0.25))
n = sample_complexity_upper(2, 2, 0.5, 0.1, 0.1)
print(f"upper-bound sample size for BSC(0.25), theta=0.5: {n:.1f}")

rep = error_rate_report(j, EstimatorConfig(0.5, 0.1, 0.1), n, trials=50, seed=1)
print("true L", maximal_leakage(j).nats, " mean estimate", rep.estimates.mean(), " failure rate", rep.failure_rate)

# %% [markdown]
# The hard family hides a rare secret row of mass theta. Its leakage
# depends on p_Y only through log sum_y max(1/k, p_y).

# %%
k = 64
for s in (1, 4, 16, 64):
    p_y = Pmf(range(k), [1 / s] * s + [0.0] * (k - s))
    print(f"p_Y uniform on {s:2d}: h = {hard_instance_value(p_y):.4f}")

# %%
# more samples, fewer failures
p_y = Pmf(range(k), [1 / 16] * 16 + [0.0] * 48)
jh = hard_instance(k, p_y, 0.05)
cfg = EstimatorConfig(0.05, 0.1, 0.1)
for n in (500, 2000, 8000):
    print(n, error_rate_report(jh, cfg, n, 60, seed=2).failure_rate)

# %%
# the plug-in estimator on the same instance drifts upward, not down
est = np.array([estimate_ml_plugin(sample_fixed(jh, 1000, seed=t)).nats for t in range(50)])
print("h =", hard_instance_value(p_y), " plug-in mean =", est.mean())
print("lower-bound scaling, |Y| = 64 vs 256:",
      sample_complexity_lower_scaling(64, 0.05, 0.1), sample_complexity_lower_scaling(256, 0.05, 0.1))
