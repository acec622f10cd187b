# %% [markdown]
# # Mutualcast and Extended Mutualcast
#
# Mutualcast delivers one rate R to everybody. Each peer takes a slice of R
# from the source and relays it to every other peer; whatever the peer
# uplinks cannot carry the source sends directly.

# %%
import numpy as np

from p2pwsdt import Network, extended_mutualcast, flow_rates_of_allocation, max_common_rate, mutualcast, wsdt, wsdt_lower_bound

weak_source = Network.from_arrays(1.0, np.ones(10))
alloc = mutualcast(weak_source, 1.0)
print(alloc.source_rates)       # 1/9 for nine peers, nothing for the tenth
print(alloc.relay_rates[0])     # peer 1 relays 1/9 to everyone else

# %%
strong_source = Network.from_arrays(10.0, np.ones(10))
alloc = mutualcast(strong_source, max_common_rate(strong_source))
print(alloc.source_depth2[:3], alloc.source_depth1[:3])  # 1/9 relayed, 8/9 direct
print(flow_rates_of_allocation(strong_source, alloc)[:3])

# %% [markdown]
# With finite downlinks one common rate wastes capacity. Extended Mutualcast
# stacks Mutualcast runs on nested groups of peers sorted by downlink, and
# reaches the unweighted lower bound exactly.

# %%
net = Network.from_arrays(3.0, [1.0, 0.5, 2.0, 1.0], [1.0, 2.0, 4.0, np.inf])
alloc, flows = extended_mutualcast(net)
print(flows, flow_rates_of_allocation(net, alloc))
print(wsdt(flows, np.ones(net.n)), wsdt_lower_bound(net).value)
