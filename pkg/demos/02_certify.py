"""Honest ball certificates, the one-round verifier, and what a cheat looks like."""

import numpy as np

from fsdcert.convergence_pls import bound_report, honest_prover, make_verifier
from fsdcert.fsd import Graph, converges_within, random_table_dynamics, structured_dynamics
from fsdcert.pls import Certificate, run_verifier

k = 1
rng = np.random.default_rng(3)
while True:
    dyn = random_table_dynamics(5, 2, rng, bias=0.9)
    if converges_within(dyn, k):
        break

certs = honest_prover(dyn, k)
verifier = make_verifier(k, dyn.id_max)
print("yes-instance, honest certificates accepted:", run_verifier(dyn, certs, verifier).accepted)
print("sizes:", bound_report(dyn, k, certs).to_dict())

# flip the last bit of one certificate: a neighbour notices
v = dyn.graph.nodes[0]
bits = list(certs[v].bits())
bits[-1] ^= 1
certs[v] = Certificate.from_bits(bits)
out = run_verifier(dyn, certs, verifier)
print("after tampering:", {u: d.tag for u, d in out.decisions.items() if not d.accept})

# a no-instance: the honest certificates are rejected by the simulation check
swap = structured_dynamics(Graph([1, 2], [(1, 2)]), 2, "copy", port=0)
out = run_verifier(swap, honest_prover(swap, 1), make_verifier(1, 2))
print("swap, k=1:", {u: (d.tag, d.detail) for u, d in out.decisions.items()})
