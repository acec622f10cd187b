# %% [markdown]
# # Rate graphs, min cuts and schedules
#
# A static allocation is a matrix: entry (i, j) is the rate peer i sends to
# peer j, the diagonal is what the source sends each peer. The information
# rate a peer can decode is the min cut from the source to that peer.

# %%
import numpy as np

from p2pwsdt import Network, RateAllocation, flow_rates_of_allocation, staggered_schedule, verify_static_schedule, wsdt

net = Network.from_arrays(2.0, [1.0, 1.0, 1.0])

r = np.zeros((3, 3))
r[0, 0], r[1, 1], r[2, 2] = 1.0, 0.5, 0.5  # source -> peers
r[0, 1] = 1.0                               # peer 1 feeds peer 2
r[1, 0] = r[2, 0] = 0.5                     # peers 2 and 3 feed peer 1
lopsided = RateAllocation(r)

flows = flow_rates_of_allocation(net, lopsided)
print(flows, wsdt(flows, net.weights))  # (2, 1.5, 0.5), 19/6

# %% [markdown]
# Stretching the graph over epochs turns rates into volumes. Each peer must
# hold the whole file by the end of its epoch.

# %%
order, dt = staggered_schedule(flows)
print(order, dt)  # epochs 1/2, 1/6, 4/3
verdict = verify_static_schedule(net, lopsided, order, dt)
print(verdict.flows, verdict.all_feasible)

# shrink the first epoch and peer 1 can no longer finish on time
short = verify_static_schedule(net, lopsided, order, [0.25, dt[1], dt[2]])
print(short.flows, short.feasible)

# %% [markdown]
# The symmetric allocation: 2/3 from the source, 1/2 from each neighbour.

# %%
r = np.full((3, 3), 0.5)
np.fill_diagonal(r, 2 / 3)
symmetric = RateAllocation(r)
flows = flow_rates_of_allocation(net, symmetric)
print(flows, wsdt(flows, net.weights))  # 5/3 each, 1.8
print(verify_static_schedule(net, symmetric, [0, 1, 2], [0.6, 0, 0]).all_feasible)
