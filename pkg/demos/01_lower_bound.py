# %% [markdown]
# # The uplink-sum lower bound
#
# Three peers with uplink 1, a source with uplink 2, a file of size 1.
# No scheme can push more than 5 units of rate into the swarm per unit time,
# and no peer can receive faster than the source sends. Dropping every other
# constraint leaves a water-filling problem whose solution bounds the weighted
# sum of download times from below.

# %%
import numpy as np

from p2pwsdt import Network, waterfill, wsdt_lower_bound

net = Network.from_arrays(2.0, [1.0, 1.0, 1.0])
lb = wsdt_lower_bound(net)
print("rates", lb.rates, "bound", lb.value)  # 5/3 each, 1.8

# %% [markdown]
# Weights tilt the water level: rate is proportional to sqrt(W) until a cap binds.

# %%
weighted = net.with_weights([4.0, 1.0, 1.0])
lb = wsdt_lower_bound(weighted)
print("rates", lb.rates, "bound", lb.value)  # (2, 1.5, 1.5), 10/3

# %%
# the primitive itself, with per-peer caps and a budget
sol = waterfill(weights=[1, 4, 9], caps=[3, 1, 10], budget=6)
print(sol.level, sol.rates, sol.capped)

# %% [markdown]
# With ten peers and a weak source the source itself is the bottleneck:
# every peer is capped at U_s.

# %%
net = Network.from_arrays(1.0, np.ones(10))
print(wsdt_lower_bound(net).value)  # 10
