"""One-round proof-labeling schemes: certificates, node views and test harnesses.

Certificates are opaque bit strings here; a scheme decides what they mean.
A verifier is any callable ``verifier(view) -> Decision`` (or a bare bool).
"""

from __future__ import annotations

import base64
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bits import BitReader, BitWriter
from .fsd import BudgetExceeded, Dynamics, LocalFunction, StateAlphabet

EXHAUSTIVE_GUARD = 2**24


@dataclass(frozen=True)
class Certificate:
    data: bytes = b""
    bit_length: int = 0

    def __post_init__(self):
        if self.bit_length < 0 or len(self.data) != (self.bit_length + 7) // 8:
            raise ValueError(f"{len(self.data)} bytes cannot hold exactly {self.bit_length} bits")

    @classmethod
    def from_writer(cls, w: BitWriter):
        data, nbits = w.to_bytes()
        return cls(data, nbits)

    @classmethod
    def from_bits(cls, bits):
        w = BitWriter()
        w.write_bits(bits)
        return cls.from_writer(w)

    def bits(self):
        return BitReader(self.data, self.bit_length).read_bits(self.bit_length)

    def reader(self):
        return BitReader(self.data, self.bit_length)

    def __len__(self):
        return self.bit_length

    def to_json(self):
        return {"data": base64.b64encode(self.data).decode("ascii"), "bit_length": self.bit_length}

    @classmethod
    def from_json(cls, obj):
        return cls(base64.b64decode(obj["data"]), int(obj["bit_length"]))


EMPTY = Certificate()


class CertificateAssignment(dict):
    """Node id -> Certificate."""

    def max_bits(self):
        return max((c.bit_length for c in self.values()), default=0)

    def total_bits(self):
        return sum(c.bit_length for c in self.values())

    def check_domain(self, nodes):
        if set(self) != set(nodes):
            missing = sorted(set(nodes) - set(self))
            extra = sorted(set(self) - set(nodes))
            raise ValueError(f"assignment domain mismatch: missing {missing}, extra {extra}")

    def to_json(self):
        return json.dumps({"certificates": {str(v): self[v].to_json() for v in sorted(self)}},
                          sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        obj = obj.get("certificates", obj)
        return cls({int(v): Certificate.from_json(c) for v, c in obj.items()})

    @classmethod
    def empty(cls, nodes):
        return cls({v: EMPTY for v in nodes})


@dataclass
class NodeView:
    """Everything a node sees in one round."""

    id: int
    degree: int
    ports: tuple
    local_function: LocalFunction
    alphabet: StateAlphabet
    own_certificate: Certificate
    neighbor_certificates: tuple


@dataclass(frozen=True)
class Decision:
    accept: bool
    tag: Optional[str] = None
    detail: str = ""

    def __bool__(self):
        return self.accept


ACCEPT = Decision(True)


def _as_decision(d):
    return d if isinstance(d, Decision) else Decision(bool(d), None if d else "reject")


@dataclass
class SchemeOutcome:
    decisions: dict
    max_bits: int

    @property
    def accepted(self):
        return all(d.accept for d in self.decisions.values())

    def rejecting(self):
        return [v for v in sorted(self.decisions) if not self.decisions[v].accept]

    def to_dict(self):
        return {
            "accepted": self.accepted,
            "max_certificate_bits": self.max_bits,
            "decisions": {str(v): {"accept": d.accept, "tag": d.tag, "detail": d.detail}
                          for v, d in sorted(self.decisions.items())},
        }


def node_view(dyn: Dynamics, assignment, v) -> NodeView:
    ports = dyn.graph.neighbors(v)
    return NodeView(v, len(ports), ports, dyn.functions[v], dyn.alphabet, assignment[v],
                    tuple(assignment[u] for u in ports))


def run_verifier(dyn: Dynamics, assignment, verifier: Callable, nodes=None,
                 workers: int = 1) -> SchemeOutcome:
    """Evaluate ``verifier`` at every node (or at ``nodes``) on its own view."""
    CertificateAssignment.check_domain(assignment, dyn.graph.nodes)
    nodes = list(dyn.graph.nodes if nodes is None else nodes)

    def decide(v):
        return _as_decision(verifier(node_view(dyn, assignment, v)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(decide, nodes))
    else:
        results = [decide(v) for v in nodes]
    return SchemeOutcome(dict(zip(nodes, results)),
                         max((assignment[v].bit_length for v in dyn.graph.nodes), default=0))


@dataclass
class CompletenessFailure:
    index: int
    name: Optional[str]
    outcome: SchemeOutcome


def check_completeness(instances, prover: Callable, verifier: Callable) -> list:
    """Run prover then verifier on each yes-instance; return the failures."""
    failures = []
    for i, dyn in enumerate(instances):
        outcome = run_verifier(dyn, prover(dyn), verifier)
        if not outcome.accepted:
            failures.append(CompletenessFailure(i, dyn.graph.name, outcome))
    return failures


# --------------------------------------------------------------------------
# soundness search


@dataclass
class SoundnessBudget:
    exhaustive_bits: int = 0
    random_trials: int = 1000
    mutation_trials: int = 1000
    seed: int = 0
    guard: int = EXHAUSTIVE_GUARD


@dataclass
class SoundnessReport:
    forged: bool
    evidence: Optional[CertificateAssignment] = None
    method: Optional[str] = None
    coverage: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "forged-assignment" if self.forged else "no-accepting-assignment-found"


def all_bit_strings(max_bits):
    for length in range(max_bits + 1):
        for value in range(1 << length):
            w = BitWriter()
            w.write(value, length)
            yield Certificate.from_writer(w)


def _backtrack(dyn, verifier, candidates, guard):
    """Depth-first search over per-node candidate lists.

    A node is verified as soon as its closed neighbourhood is assigned.
    Returns (assignment or None, visited count).
    """
    g = dyn.graph
    order = list(g.nodes)
    pos = {v: i for i, v in enumerate(order)}
    # node v becomes checkable once the last node of N[v] (in order) is set
    ready = {i: [] for i in range(len(order))}
    for v in order:
        last = max(pos[u] for u in (v, *g.neighbors(v)))
        ready[last].append(v)
    current = {}
    visited = 0

    def rec(i):
        nonlocal visited
        if i == len(order):
            return True
        v = order[i]
        for cert in candidates[v]:
            visited += 1
            if visited > guard:
                raise BudgetExceeded(visited, guard, "visited assignments")
            current[v] = cert
            if all(_as_decision(verifier(node_view(dyn, current, w))).accept for w in ready[i]):
                if rec(i + 1):
                    return True
            del current[v]
        return False

    found = rec(0)
    return (CertificateAssignment(current) if found else None), visited


def search_soundness(dyn: Dynamics, verifier: Callable, budget: SoundnessBudget = None,
                     honest: Optional[CertificateAssignment] = None,
                     candidates: Optional[Callable] = None,
                     mutate: Optional[Callable] = None) -> SoundnessReport:
    """Look for an all-accept certificate assignment on a no-instance.

    (i) exhaustive: ``candidates(v, max_bits)`` yields every certificate a node
        could accept with (scheme specific, lossless), or all raw bit strings
        up to ``exhaustive_bits`` when no generator is given;
    (ii) ``mutation_trials`` mutations of ``honest`` via ``mutate(assignment, rng)``;
    (iii) ``random_trials`` uniformly random strings of the honest lengths.
    """
    budget = budget or SoundnessBudget()
    g = dyn.graph
    coverage = {}

    if budget.exhaustive_bits >= 0:
        try:
            if candidates is None:
                per_node = (1 << (budget.exhaustive_bits + 1)) - 1
                total = per_node ** g.n
                if total > budget.guard:
                    raise BudgetExceeded(total, budget.guard, "assignments")
                pool = list(all_bit_strings(budget.exhaustive_bits))
                cand = {v: pool for v in g.nodes}
            else:
                cand = {v: list(candidates(v, budget.exhaustive_bits)) for v in g.nodes}
            found, visited = _backtrack(dyn, verifier, cand, budget.guard)
            coverage["exhaustive"] = {"visited": visited, "bit_limit": budget.exhaustive_bits,
                                      "candidates": {str(v): len(c) for v, c in cand.items()}}
            if found is not None:
                return SoundnessReport(True, found, "exhaustive", coverage)
        except BudgetExceeded as exc:
            coverage["exhaustive"] = {"skipped": str(exc)}

    rng = np.random.default_rng(budget.seed)
    if honest is not None and mutate is not None and budget.mutation_trials:
        for _ in range(budget.mutation_trials):
            forged = mutate(honest, rng)
            if run_verifier(dyn, forged, verifier).accepted:
                return SoundnessReport(True, forged, "mutation", coverage)
        coverage["mutation"] = budget.mutation_trials

    if budget.random_trials:
        lengths = {v: (honest[v].bit_length if honest is not None else budget.exhaustive_bits)
                   for v in g.nodes}
        for _ in range(budget.random_trials):
            forged = CertificateAssignment(
                {v: Certificate.from_bits(rng.integers(0, 2, lengths[v]).tolist()) for v in g.nodes})
            if run_verifier(dyn, forged, verifier).accepted:
                return SoundnessReport(True, forged, "random", coverage)
        coverage["random"] = budget.random_trials

    return SoundnessReport(False, None, None, coverage)


# --------------------------------------------------------------------------
# locality


def _scramble(cert: Certificate, rng):
    length = int(rng.integers(0, max(2 * cert.bit_length, 8) + 1))
    return Certificate.from_bits(rng.integers(0, 2, length).tolist())


def locality_audit(dyn: Dynamics, assignment, verifier: Callable, trials: int = 100,
                   seed: int = 0) -> bool:
    """Check that far-away certificates never change a node's decision.

    Certificates of nodes at distance >= 2 from a random probe are replaced in
    place (and restored afterwards), so a verifier that peeks at the shared
    assignment object is caught.
    """
    g = dyn.graph
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        v = g.nodes[int(rng.integers(0, g.n))]
        dist = g.distances(v)
        far = [u for u in g.nodes if dist.get(u, 2) >= 2]
        if not far:
            continue
        before = _as_decision(verifier(node_view(dyn, assignment, v)))
        saved = {u: assignment[u] for u in far}
        try:
            for u in far:
                assignment[u] = _scramble(saved[u], rng)
            after = _as_decision(verifier(node_view(dyn, assignment, v)))
        finally:
            assignment.update(saved)
        if after.accept != before.accept or after.tag != before.tag:
            return False
    return True


__all__ = [
    "Certificate", "CertificateAssignment", "NodeView", "Decision", "ACCEPT", "SchemeOutcome",
    "run_verifier", "check_completeness", "search_soundness", "SoundnessBudget",
    "SoundnessReport", "locality_audit", "all_bit_strings", "node_view",
]
