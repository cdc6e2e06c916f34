"""Simulate a few small dynamics and ask whether they settle within k steps."""

from fsdcert.fsd import Graph, converges_within, orbit, structured_dynamics

tri = Graph([1, 2, 3], [(1, 2), (2, 3), (1, 3)])

# every node keeps its state: fixed from the start
ident = structured_dynamics(tri, 3, "identity")
print("identity orbit:", orbit(ident, (2, 0, 1), 10))
print("identity converges in 0 steps:", converges_within(ident, 0).holds)

# every node takes the OR of its neighbours: a lone 1 spreads, then everything is 1
ors = structured_dynamics(tri, 2, "or")
o = orbit(ors, (1, 0, 0), 10)
print("OR orbit from 100:", o.configurations, o.kind, "period", o.period)

# two nodes copying each other swap forever
swap = structured_dynamics(Graph([1, 2], [(1, 2)]), 2, "copy", port=0)
v = converges_within(swap, 5)
print("swap converges within 5?", v.holds, "counterexample", v.counterexample)
