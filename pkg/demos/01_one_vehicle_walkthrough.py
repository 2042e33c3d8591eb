"""
One vehicle, two customers on a line
====================================

Four nodes 1 km apart, one minute per edge.  A customer asks for a ride
n0 -> n2, a second one n2 -> n3 shortly after.  The vehicle drops the first
customer at n2 and picks up the second during the same 30 s stop.
"""

from odrp import InsertionPolicy, Params, Simulation, line_network, make_request

net = line_network(4)
params = Params()

a = make_request(0, 0, 2, 0.0, net, params)
b = make_request(1, 2, 3, 100.0, net, params)
print(f"a: window [{a.t_ep:.0f}, {a.t_lp:.0f}] s, direct {a.t_direct:.0f} s")
print(f"b: window [{b.t_ep:.0f}, {b.t_lp:.0f}] s, direct {b.t_direct:.0f} s")

sim = Simulation(net, [a, b], 1, InsertionPolicy(), params, horizon=900, initial_nodes=[0])
sim.run()

###############################################################################
# The event log is the whole story of the run.

for t, kind, veh, rid, node in sim.events:
    who = "" if rid is None else f"request {rid}"
    print(f"{t:7.1f}  {kind:8s} vehicle {veh}  {who:11s} node {node}")

###############################################################################
# The direct trips add up to 3 km and the vehicle drove 3 km: no empty
# kilometre, so the relative saved distance is exactly zero.

print("odometer", sim.vehicles[0].odometer, "m")
print("a rode", a.dropoff_time - a.pickup_time, "s;  b waited", b.pickup_time - b.t_r, "s")
