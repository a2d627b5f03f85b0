# %% [markdown]
# # Event logs and the directly-follows graph
#
# A log is a CSV with one row per completed event. We generate a small one,
# look at its statistics, mine the directly-follows graph (DFG) and compare
# the four propagation matrices a graph-convolution layer can use.

# %%
import numpy as np

from ppmgcn import log_statistics, mine_dfg, propagation_matrix
from ppmgcn.dfg import PropagationKind, adjacency, export_dot
from ppmgcn.synthetic import stochastic_process_log

np.set_printoptions(precision=3, suppress=True)

log = stochastic_process_log(200, seed=0)
print(log_statistics(log).to_text("synthetic"))

# %% [markdown]
# Activities get integer ids in order of first appearance in the file.

# %%
print(dict(enumerate(log.alphabet)))
case = log.cases[0]
print(case.case_id, [log.alphabet[e.activity_id] for e in case.events])

# %% [markdown]
# `edge_counts[i, j]` counts how often activity j directly follows i within a case.

# %%
dfg = mine_dfg(log)
print(dfg.edge_counts)
print("start:", sorted(log.alphabet[i] for i in dfg.start_activities))
print("end:  ", sorted(log.alphabet[i] for i in dfg.end_activities))

# %% [markdown]
# Nodes without successors get a unit self-loop so every degree is positive.
# The plain kinds are symmetric-normalized adjacencies; the Laplacian kinds
# normalize `D - A` instead, whose rows sum to zero before normalization.

# %%
print(adjacency(dfg, binary=True))
for kind in PropagationKind:
    print(kind.value)
    print(propagation_matrix(dfg, kind).matrix)

# %%
print(export_dot(dfg, "synthetic")[:400])
