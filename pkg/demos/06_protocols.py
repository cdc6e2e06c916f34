"""Alice and Bob decide disjointness by exchanging certificates across the cut."""

from fsdcert.protocol import (
    lower_bound_report,
    measure_honest,
    report_csv,
    simulate_thm2_protocol,
    simulate_thm3_protocol,
)

for A, B in (([(1, 2)], []), ([(1, 2)], [(1, 2)])):
    tr = simulate_thm2_protocol(2, A, B)
    print(f"dense n=2 A={A} B={B}: {tr.to_dict()['verdict']} after {tr.total_bits} bits")

for A, B in (([1], [2]), ([2], [2])):
    tr = simulate_thm3_protocol(1, A, B)
    print(f"Error t=1 A={A} B={B}: {tr.to_dict()['verdict']} after {tr.total_bits} bits, "
          f"{len(tr.messages[0].certificates)} certificates")

rows = lower_bound_report([measure_honest("thm2", n) for n in (2, 3)] + [measure_honest("thm3", 1, [1], [2])])
print(report_csv(rows))
