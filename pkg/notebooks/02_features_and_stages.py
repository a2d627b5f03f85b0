# %% [markdown]
# # Prefix encoding and stage labels
#
# Each prefix becomes a `num_nodes x 4` matrix. Row `a` describes the most
# recent occurrence of activity `a`: time since the previous event, time since
# case start, time since midnight and weekday. Activities not yet seen stay zero.

# %%
import numpy as np

from ppmgcn import build_samples, encode_prefix, fit_feature_scaling
from ppmgcn.features import stack_samples
from ppmgcn.synthetic import log_from_traces

np.set_printoptions(precision=4, suppress=True)

log = log_from_traces([[0, 1, 0, 2, 3]], gaps=[[60, 600, 3600, 86400]])
case = log.cases[0]
for k in range(len(case)):
    print(f"prefix length {k + 1}")
    print(encode_prefix(case, k, log.num_nodes))

# %% [markdown]
# Training uses scaled features: the two elapsed-time columns are divided by
# their means over the training cases.

# %%
scaling = fit_feature_scaling(log)
print(scaling)
samples = build_samples(log, scaling)

# %% [markdown]
# Every sample carries two stage labels. The quartile splits a case's events
# into four position buckets. The quarter splits its duration into four
# equal time intervals, so long tails push early events into quarter 1.

# %%
arr = stack_samples(samples, log.num_nodes)
print("next activity:", arr.event_targets, "(", log.num_nodes, "= end of case )")
print("seconds to next:", arr.time_targets)
print("quartiles:", arr.quartiles)
print("quarters: ", arr.quarters)
