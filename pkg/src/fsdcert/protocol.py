"""Two-party nondeterministic protocols for Disjointness built on the gadget graphs.

Alice knows A, Bob knows B.  Both guess (here: receive) a certificate
assignment for the whole gadget instance; Alice checks her side, sends a
verdict bit and the certificates on the cut, and Bob checks his side against
them.  Bit counts ignore the framing needed to split the concatenated
certificates, as in the usual accounting.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

from .convergence_pls import honest_prover, make_verifier, theorem3_lower_bound
from .fsd import Dynamics, clog2
from .gadgets import build_thm2_graph, build_thm3_instance, index_set, pair_set, thm2_layout, thm3_layout
from .pls import run_verifier


@dataclass
class Message:
    sender: str
    flag: int
    certificates: list = field(default_factory=list)  # (node id, Certificate)

    @property
    def bits(self):
        return 1 + sum(c.bit_length for _, c in self.certificates)


@dataclass
class Transcript:
    messages: list
    verdict: bool
    alice_accepts: bool
    bob_accepts: bool
    shared_match: bool

    @property
    def total_bits(self):
        return sum(m.bits for m in self.messages)

    def to_dict(self):
        return {
            "verdict": "accept" if self.verdict else "reject",
            "total_bits": self.total_bits,
            "alice_accepts": self.alice_accepts,
            "bob_accepts": self.bob_accepts,
            "shared_match": self.shared_match,
            "messages": [
                {"sender": m.sender, "flag": m.flag, "bits": m.bits,
                 "certificates": {str(v): c.bit_length for v, c in m.certificates}}
                for m in self.messages
            ],
        }


@dataclass
class CutSpec:
    alice: frozenset
    bob: frozenset
    shared: frozenset

    def check(self, dyn: Dynamics):
        """The sets cover the graph and no evaluated node sees past its owner's knowledge."""
        g = dyn.graph
        if self.alice | self.bob | self.shared != set(g.nodes):
            raise ValueError("cut does not cover every node")
        for side, own in (("alice", self.alice), ("bob", self.bob)):
            known = own | self.shared
            for v in own:
                if not set(g.neighbors(v)) <= known:
                    raise ValueError(f"{side}'s node {v} has a neighbour outside her view")


def thm2_cut(n) -> CutSpec:
    L = thm2_layout(n)
    return CutSpec(frozenset(L.va + L.da), frozenset(L.vb + L.db), frozenset(L.da + L.db))


def thm3_cut(t, decoder_base="compact") -> CutSpec:
    L = thm3_layout(t, decoder_base)
    a_side = frozenset(L.gate_node("A", gid) for gid in L.decoder.gates)
    b_side = frozenset(L.gate_node("B", gid) for gid in L.decoder.gates)
    inputs_a = frozenset(L.gate_node("A", gid) for gid in L.decoder.inputs)
    bob = b_side | frozenset(L.selector) | frozenset(L.collector)
    return CutSpec(a_side, bob, frozenset(L.selector) | inputs_a)


def _run(dyn, cut, alice_certs, bob_certs, verifier, send_on_reject):
    cut.check(dyn)
    alice_ok = run_verifier(dyn, alice_certs, verifier, nodes=sorted(cut.alice)).accepted
    shared = sorted(cut.shared)
    if alice_ok or send_on_reject:
        msg = Message("alice", int(alice_ok), [(v, alice_certs[v]) for v in shared])
    else:
        msg = Message("alice", 0)
    match = bool(msg.certificates) and all(bob_certs[v] == c for v, c in msg.certificates)
    bob_ok = run_verifier(dyn, bob_certs, verifier, nodes=sorted(cut.bob)).accepted
    return Transcript([msg], alice_ok and bob_ok and match, alice_ok, bob_ok, match)


def simulate_thm2_protocol(n, A, B, prover: Optional[Callable] = None,
                           verifier: Optional[Callable] = None, k: int = 2,
                           bob_prover: Optional[Callable] = None) -> Transcript:
    """Alice sends a verdict bit and the certificates of the bit gadget.

    ``prover(dyn)`` supplies Alice's guess; ``bob_prover`` defaults to the same
    guess, which is the honest run.
    """
    dyn = build_thm2_graph(n, pair_set(A), pair_set(B))
    prover = prover or (lambda d: honest_prover(d, k))
    verifier = verifier or make_verifier(k, dyn.id_max)
    alice = prover(dyn)
    bob = bob_prover(dyn) if bob_prover else alice
    return _run(dyn, thm2_cut(n), alice, bob, verifier, send_on_reject=True)


def simulate_thm3_protocol(t, A, B, prover: Optional[Callable] = None,
                           verifier: Optional[Callable] = None, k: Optional[int] = None,
                           bob_prover: Optional[Callable] = None,
                           decoder_base: str = "compact") -> Transcript:
    """Alice sends 2t certificates (selector and her decoder inputs) or one rejection bit."""
    k = 6 * t if k is None else k
    dyn = build_thm3_instance(t, index_set(A, t), index_set(B, t), decoder_base)
    prover = prover or (lambda d: honest_prover(d, k))
    verifier = verifier or make_verifier(k, dyn.id_max)
    alice = prover(dyn)
    bob = bob_prover(dyn) if bob_prover else alice
    return _run(dyn, thm3_cut(t, decoder_base), alice, bob, verifier, send_on_reject=False)


# --------------------------------------------------------------------------
# reporting


@dataclass
class Measurement:
    family: str  # "thm2" or "thm3"
    param: int  # n or t
    nodes: int
    max_bits: int


def measure_honest(family, param, A=(), B=(), k=None) -> Measurement:
    if family == "thm2":
        dyn = build_thm2_graph(param, A, B)
        k = 2 if k is None else k
    else:
        dyn = build_thm3_instance(param, A, B)
        k = 6 * param if k is None else k
    return Measurement(family, param, dyn.n, honest_prover(dyn, k).max_bits())


def lower_bound_report(measurements) -> list:
    """Rows comparing measured certificate sizes with the implied lower-bound curves.

    For the dense family the curve is n^2 / ceil(log2 n); the node count is given
    both as constructed (2n + 4 ceil(log2 n)) and in the shorter form
    2n + 2 ceil(log2 n).  For the bounded-degree family k = 6t and the curve is
    2^(k/6) * 6 / k.
    """
    rows = []
    for m in measurements:
        if m.family == "thm2":
            lg = clog2(m.param)
            rows.append({
                "family": "thm2", "param": m.param, "k": 2, "nodes": m.nodes,
                "nodes_short_form": 2 * m.param + 2 * lg, "measured_bits": m.max_bits,
                "lower_curve": round(m.param ** 2 / max(lg, 1), 4),
                "cut_bits": 1 + 4 * lg * m.max_bits,
            })
        else:
            k = 6 * m.param
            rows.append({
                "family": "thm3", "param": m.param, "k": k, "nodes": m.nodes,
                "nodes_short_form": m.nodes, "measured_bits": m.max_bits,
                "lower_curve": round(theorem3_lower_bound(k), 4),
                "cut_bits": 1 + 2 * m.param * m.max_bits,
            })
    return rows


REPORT_FIELDS = ("family", "param", "k", "nodes", "nodes_short_form", "measured_bits",
                 "lower_curve", "cut_bits")


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
