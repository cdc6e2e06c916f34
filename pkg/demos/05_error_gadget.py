"""The ternary Error instance on two decoders, a selector and a collector."""

import numpy as np

from fsdcert.fsd import orbit
from fsdcert.gadgets import ERROR, build_thm3_instance, check_thm3_reduction, thm3_layout, thm3_witness

for A, B in (([1], [2]), ([1, 2], [2])):
    r = check_thm3_reduction(1, A, B, mode="exhaustive")
    print(f"t=1 A={A} B={B}: disjoint={r.disjoint} converges_within_6={r.converges} "
          f"worst time {r.max_time} over {r.checked} starts")

d = build_thm3_instance(2, [3], [3])
print("t=2 witness:", orbit(d, thm3_witness(2, [3], [3], 3), 20).kind)

# one Error planted at the root of an otherwise consistent start spreads, never retreats
w = np.array([thm3_witness(2, [3], [3], 3)])
root = d.graph.nodes.index(thm3_layout(2).root)
w[0, root] = ERROR
print("diameter", d.graph.diameter())
for step in range(12):
    print(step, int((w == ERROR).sum()), "of", d.n)
    w = d.step_batch(w)
