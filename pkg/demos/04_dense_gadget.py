"""The 4-state mark/clock instance built from two pair sets.

Intersecting inputs give a period-2 orbit; disjoint inputs mostly settle
within two steps, though some starts need three.
"""

from fsdcert.fsd import orbit
from fsdcert.gadgets import build_thm2_graph, check_thm2_reduction, thm2_witness

for A, B in (([], []), ([(1, 2)], []), ([(1, 2)], [(1, 2)])):
    r = check_thm2_reduction(2, A, B, mode="exhaustive")
    print(f"n=2 A={A} B={B}: disjoint={r.disjoint} converges_within_2={r.converges}")

A = B = [(1, 3)]
d = build_thm2_graph(4, A, B)
o = orbit(d, thm2_witness(4, A, B, (1, 3)), 10)
print("n=4 witness:", o.kind, "period", o.period)

# a disjoint instance with a start that needs three steps
A, B = [(1, 3), (1, 4), (3, 4)], [(2, 3), (2, 4)]
x = (1, 2, 3, 3, 2, 3, 2, 3, 0, 2, 2, 2, 0, 2, 2, 2)
print("slow start on disjoint input: transient", orbit(build_thm2_graph(4, A, B), x, 10).transient)
