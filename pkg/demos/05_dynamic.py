# %% [markdown]
# # Re-allocating at every finish
#
# A static allocation fixes rates once. The dynamic scheme re-plans whenever a
# peer finishes: it ranks the remaining peers by weight over residual demand,
# fully supports the shortest prefix that can absorb the whole uplink, and
# runs the static allocator on that residual instance.

# %%
import numpy as np

from p2pwsdt import Join, Network, PeerSpec, generate_case, simulate_dynamic, wsdt_lower_bound

net = Network.from_arrays(2.0, [1.0, 1.0, 1.0])
trace = simulate_dynamic(net)
print(trace.wsdt, [e.supported for e in trace.epochs])

# %% [markdown]
# When downlinks are unbounded, serving peers a few at a time and letting the
# finished ones act as extra sources roughly halves the static optimum.

# %%
for us in (10.0, 100.0, 1000.0):
    net = generate_case("I", 100, us)
    lb = wsdt_lower_bound(net).value
    retain = simulate_dynamic(net, "retain")
    leave = simulate_dynamic(net, "leave")
    print(f"U_s={us:6g}  retain {retain.wsdt / lb:.3f}  leave {leave.wsdt / lb:.3f}  epochs {len(retain.epochs)}")

# %% [markdown]
# Peers can also arrive mid-transfer; their download time counts from arrival.

# %%
net = Network.from_arrays(2.0, [1.0, 1.0])
trace = simulate_dynamic(net, "retain", [Join(0.3, PeerSpec(1.0, np.inf, 2.0))])
for e in trace.epochs:
    print(f"{e.start:.3f} +{e.duration:.3f} {e.event:6s} supported={e.supported} rates={np.round(e.rates, 3)}")
print(trace.download_times)
