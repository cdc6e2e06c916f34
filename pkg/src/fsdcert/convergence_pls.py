"""Ball certificates for Convergence(k, q) and their one-round verifier.

Wire format (MSB first, w = max(1, ceil(log2 id_max)) bits per identifier)::

    empty ball                      -> 0 bits
    gamma(m)                        number of claimed edges, m >= 1
    m x [u-1 : w][v-1 : w]          edges with u < v, strictly increasing
    per endpoint, ascending id:
        [id-1 : w] [form : 1]
        form 0 (table):      gamma(arity+1), q^(arity+1) entries of ceil(log2 q) bits
        form 1 (structured): gamma(nbytes), canonical JSON bytes

Decoding is strict: anything that is not the unique encoding of some ball
(unsorted or duplicate edges, out-of-range ids, wrong entry ids, non-canonical
JSON, trailing bits) is malformed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np

from .bits import BitWriter
from .fsd import (
    CHUNK,
    RULES,
    BudgetExceeded,
    Dynamics,
    Graph,
    LocalFunction,
    StructuredFunction,
    TableFunction,
    adjacency_from_edges,
    b_max,
    ball_edges,
    ball_edges_of,
    bfs_distances,
    clog2,
    enumerate_configurations,
)
from .pls import ACCEPT, Certificate, CertificateAssignment, Decision, NodeView

SIM_CAP = 2**26


class Malformed(ValueError):
    pass


def id_width(id_max):
    return max(1, clog2(id_max))


# --------------------------------------------------------------------------
# function entries


def write_function(w: BitWriter, f: LocalFunction, q: int):
    if isinstance(f, StructuredFunction):
        data = f.serialize()
        w.write(1, 1)
        w.write_gamma(len(data))
        for byte in data:
            w.write(byte, 8)
    else:
        table = f.to_table(q) if not isinstance(f, TableFunction) else f
        w.write(0, 1)
        w.write_gamma(table.arity + 1)
        b = clog2(q)
        for s in table.table:
            w.write(int(s), b)


def function_bits(f: LocalFunction, q: int) -> tuple:
    """Canonical encoding of one function entry (without its id)."""
    w = BitWriter()
    write_function(w, f, q)
    return w.bits()


def _read_function(r, q):
    if r.read(1) == 0:
        width = r.read_gamma()
        b = clog2(q)
        if width > 64 or q ** width * b > r.remaining():
            raise Malformed("table longer than the certificate")
        entries = [r.read(b) for _ in range(q ** width)]
        if entries and max(entries) >= q:
            raise Malformed("table entry outside the alphabet")
        return TableFunction(width - 1, entries)
    size = r.read_gamma()
    if 8 * size > r.remaining():
        raise Malformed("structured payload longer than the certificate")
    data = bytes(r.read(8) for _ in range(size))
    try:
        f = StructuredFunction.deserialize(data)
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise Malformed(f"bad structured payload: {exc}") from None
    if f.serialize() != data:
        raise Malformed("structured payload is not canonical")
    return f


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class BallCertificate:
    edges: tuple = ()
    functions: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = tuple(sorted((min(e), max(e)) for e in self.edges))
        object.__setattr__(self, "edges", edges)
        if len(set(edges)) != len(edges) or any(u == v for u, v in edges):
            raise ValueError("claimed edges must be distinct pairs of distinct nodes")
        if set(self.functions) != set(self.endpoints()):
            raise ValueError("claimed functions must cover exactly the edge endpoints")

    def endpoints(self):
        return sorted({x for e in self.edges for x in e})

    def adjacency(self):
        return adjacency_from_edges(self.edges)

    def encode(self, q: int, id_max: int) -> Certificate:
        w = BitWriter()
        if not self.edges:
            return Certificate()
        width = id_width(id_max)
        w.write_gamma(len(self.edges))
        for u, v in self.edges:
            if not 1 <= u < v <= id_max:
                raise ValueError(f"edge {(u, v)} outside [1, {id_max}]")
            w.write(u - 1, width)
            w.write(v - 1, width)
        for x in self.endpoints():
            w.write(x - 1, width)
            write_function(w, self.functions[x], q)
        return Certificate.from_writer(w)

    @staticmethod
    def decode(cert: Certificate, q: int, id_max: int) -> "BallCertificate":
        return _decode(cert.data, cert.bit_length, q, id_max)


@lru_cache(maxsize=1 << 16)
def _decode(data, bit_length, q, id_max):
    if bit_length == 0:
        return BallCertificate()
    r = Certificate(data, bit_length).reader()
    width = id_width(id_max)
    try:
        m = r.read_gamma()
        if 2 * m * width > r.remaining():
            raise Malformed("edge list longer than the certificate")
        edges = []
        for _ in range(m):
            u, v = r.read(width) + 1, r.read(width) + 1
            if not 1 <= u < v <= id_max:
                raise Malformed(f"bad edge {(u, v)}")
            if edges and (u, v) <= edges[-1]:
                raise Malformed("edges not strictly increasing")
            edges.append((u, v))
        functions = {}
        for x in sorted({x for e in edges for x in e}):
            if r.read(width) + 1 != x:
                raise Malformed("function entries out of order")
            functions[x] = _read_function(r, q)
    except (EOFError, ValueError) as exc:
        if isinstance(exc, Malformed):
            raise
        raise Malformed(str(exc)) from None
    if r.remaining():
        raise Malformed("trailing bits")
    return BallCertificate(tuple(edges), functions)


def honest_certificate(dyn: Dynamics, v: int, k: int) -> BallCertificate:
    edges = ball_edges(dyn.graph, v, k + 1)
    ends = {x for e in edges for x in e}
    return BallCertificate(tuple(edges), {x: dyn.functions[x] for x in ends})


def honest_prover(dyn: Dynamics, k: int) -> CertificateAssignment:
    """The ball of radius k+1 around each node plus every local function it spans."""
    return CertificateAssignment(
        {v: honest_certificate(dyn, v, k).encode(dyn.q, dyn.id_max) for v in dyn.graph.nodes})


# --------------------------------------------------------------------------
# verification


def cone_nodes(adj, v, k):
    """Nodes at claimed distance <= k+1 from v, with their distances."""
    dist = bfs_distances(adj, v)
    return {u: d for u, d in dist.items() if d <= k + 1}


def simulate_cone(v, f_v, ball: BallCertificate, q, k, cap=SIM_CAP):
    """Condition (c): every assignment of the cone gives x^(k+1)_v == x^k_v.

    Node w at claimed distance j is advanced up to step k+1-j, which needs its
    claimed neighbours at step k-j.  A node whose claimed function does not
    match its claimed degree cannot be advanced, and v must reach step k+1.
    Returns None on success, otherwise a short reason.
    """
    adj = ball.adjacency()
    dist = cone_nodes(adj, v, k)
    nodes = sorted(dist)
    col = {u: i for i, u in enumerate(nodes)}
    funcs = {}
    for u in nodes:
        if dist[u] > k:
            continue
        f = f_v if u == v else ball.functions[u]
        if f.arity != len(adj.get(u, ())):
            return f"node {u} has arity {f.arity} but {len(adj.get(u, ()))} claimed neighbours"
        funcs[u] = (f, np.array([col[u]] + [col[x] for x in adj.get(u, ())], dtype=np.intp))
    total = q ** len(nodes)
    if total * (k + 1) > cap:
        raise BudgetExceeded(total * (k + 1), cap, "cone simulation steps")
    layers = [[u for u in nodes if dist[u] <= k + 1 - t] for t in range(k + 2)]
    for start in range(0, total, CHUNK):
        X = enumerate_configurations(len(nodes), q, start, min(total, start + CHUNK))
        prev_v = X[:, col[v]]
        for t in range(1, k + 2):
            Y = X.copy()
            for u in layers[t]:
                f, cols = funcs[u]
                Y[:, col[u]] = f.evaluate_batch(X[:, cols], q)
            prev_v = X[:, col[v]]
            X = Y
        bad = np.flatnonzero(X[:, col[v]] != prev_v)
        if bad.size:
            code = start + int(bad[0])
            row = enumerate_configurations(len(nodes), q, code, code + 1)[0]
            witness = {u: int(row[col[u]]) for u in nodes}
            return f"cone assignment {witness} moves node {v} at step {k + 1}"
    return None


@lru_cache(maxsize=1 << 16)
def _cone_check(v, f_v, data, bit_length, q, k, id_max, cap):
    ball = _decode(data, bit_length, q, id_max)
    return simulate_cone(v, f_v, ball, q, k, cap)


def verify_node(view: NodeView, k: int, id_max: int, cap: int = SIM_CAP) -> Decision:
    """Checks (a), (b), (c) in order; the tag names the first one that fails."""
    q = view.alphabet.q
    v = view.id
    try:
        own = BallCertificate.decode(view.own_certificate, q, id_max)
        nbrs = [BallCertificate.decode(c, q, id_max) for c in view.neighbor_certificates]
    except Malformed as exc:
        return Decision(False, "malformed", str(exc))

    # (a) the claimed ball agrees with v's ports and contains each neighbour's radius-k ball
    mine = set(own.edges)
    incident = {e for e in own.edges if v in e}
    if incident != {(min(v, u), max(v, u)) for u in view.ports}:
        return Decision(False, "a", f"claimed edges at {v} differ from its ports")
    covered = set(incident)
    for u, ball in zip(view.ports, nbrs):
        inner = set(ball_edges_of(ball.adjacency(), u, k))
        if not inner <= mine:
            return Decision(False, "a", f"ball of {u} not contained in the ball of {v}")
        covered |= inner
    # honestly B_v(k+1) is exactly v's edges plus the neighbours' radius-k balls
    if mine != covered:
        return Decision(False, "a", f"ball of {v} claims edges no neighbour's ball contains")

    # (b) bit-identical function claims, and claims about v match f_v
    enc = {}

    def bits(f):
        key = id(f)
        if key not in enc:
            enc[key] = function_bits(f, q)
        return enc[key]

    truth = function_bits(view.local_function, q)
    for src, ball in [(v, own), *zip(view.ports, nbrs)]:
        if v in ball.functions and bits(ball.functions[v]) != truth:
            return Decision(False, "b", f"certificate of {src} misstates the function of {v}")
    for u, ball in zip(view.ports, nbrs):
        for x in set(own.functions) & set(ball.functions):
            if bits(own.functions[x]) != bits(ball.functions[x]):
                return Decision(False, "b", f"{v} and {u} disagree on the function of {x}")

    # (c) the cone simulation
    c = view.own_certificate
    reason = _cone_check(v, view.local_function, c.data, c.bit_length, q, k, id_max, cap)
    if reason is not None:
        return Decision(False, "c", reason)
    return ACCEPT


def make_verifier(k: int, id_max: int, cap: int = SIM_CAP):
    def verifier(view):
        return verify_node(view, k, id_max, cap)
    verifier.k = k
    verifier.id_max = id_max
    return verifier


# --------------------------------------------------------------------------
# size accounting


def table_size_bits(d, q):
    return q ** (d + 1) * clog2(q) + (d + 1) * clog2(d + 1)


def f_max(g: Graph, q: int) -> int:
    return max(table_size_bits(g.degree(v), q) for v in g.nodes)


def theorem1_bound(g: Graph, k: int, q: int, id_max: int) -> int:
    if g.n == 1:
        return 0
    return b_max(g, k + 1) * clog2(id_max) * f_max(g, q)


def corollary1_bound(delta: int, k: int, q: int, id_max: int) -> int:
    return delta * ((delta - 1) ** (k + 1) - 1) * q ** (delta + 1) * clog2(q) * clog2(id_max)


def theorem3_lower_bound(k: int) -> float:
    if k < 6:
        raise ValueError("k must be at least 6")
    return 2 ** (k / 6) * 6 / k


@dataclass
class BoundReport:
    measured_max_bits: int
    theorem1_bound_bits: int
    corollary1_bound_bits: Optional[int]
    max_degree: int
    k: int

    @property
    def within_theorem1(self):
        return self.measured_max_bits <= self.theorem1_bound_bits

    @property
    def within_corollary1(self):
        if self.corollary1_bound_bits is None:
            return None
        return self.measured_max_bits <= self.corollary1_bound_bits

    def to_dict(self):
        return {
            "k": self.k,
            "max_degree": self.max_degree,
            "measured_max_bits": self.measured_max_bits,
            "theorem1_bound_bits": self.theorem1_bound_bits,
            "corollary1_bound_bits": self.corollary1_bound_bits,
            "within_theorem1": self.within_theorem1,
            "within_corollary1": self.within_corollary1,
        }


def bound_report(dyn: Dynamics, k: int, assignment=None) -> BoundReport:
    """Measured honest size next to both closed-form bounds.

    The degree-based bound degenerates for maximum degree below 3 and is
    reported only from degree 3 on.
    """
    if assignment is None:
        assignment = honest_prover(dyn, k)
    g = dyn.graph
    delta = g.max_degree()
    cor = corollary1_bound(delta, k, dyn.q, dyn.id_max) if delta >= 3 else None
    return BoundReport(assignment.max_bits(), theorem1_bound(g, k, dyn.q, dyn.id_max), cor,
                       delta, k)


# --------------------------------------------------------------------------
# soundness search support


def _min_structured_bits():
    shortest = min(len(json.dumps([name, {}], separators=(",", ":"))) for name in RULES)
    w = BitWriter()
    w.write_gamma(shortest)
    return 1 + len(w) + 8 * shortest


def _tables(arity, q):
    count = q ** (q ** (arity + 1))
    inputs = q ** (arity + 1)
    for code in range(count):
        entries = []
        for _ in range(inputs):
            entries.append(code % q)
            code //= q
        yield TableFunction(arity, entries[::-1])


def _free_options(q, budget):
    """(bits, function) pairs for a free claim costing at most ``budget`` bits."""
    out = []
    arity = 0
    while True:
        bits = len(function_bits(TableFunction(arity, [0] * q ** (arity + 1)), q))
        if bits > budget:
            break
        out.extend((bits, f) for f in _tables(arity, q))
        arity += 1
        if q == 1 and arity > budget:
            break
    if _min_structured_bits() <= budget:
        raise BudgetExceeded(_min_structured_bits(), budget, "structured claims fit the bit limit")
    return out


def candidate_certificates(dyn: Dynamics, k: int):
    """Lossless generator of the certificates a node could accept with.

    In any all-accept assignment the certificate of v lists exactly v's own
    edges, every true edge at a neighbour of v, and the true function of every
    claimed node within distance 2 of v (each is pinned by a chain of (b)
    checks ending at that node).  Everything else is enumerated, and only
    candidates that pass v's own cone simulation are kept.
    """
    g = dyn.graph
    q, id_max = dyn.q, dyn.id_max
    width = id_width(id_max)
    pairs = list(combinations(range(1, id_max + 1), 2))

    def generate(v, max_bits):
        dist = g.distances(v)
        near = {u for u, d in dist.items() if d <= 2}
        own = {(min(v, u), max(v, u)) for u in g.neighbors(v)}
        forced = set(own)
        for u in g.neighbors(v):
            forced |= {(min(u, x), max(u, x)) for x in g.neighbors(u)}
        optional = [e for e in pairs if v not in e and e not in forced]
        if len(optional) > 20:
            raise BudgetExceeded(2 ** len(optional), 2**20, "edge subsets")
        out = []
        for r in range(len(optional) + 1):
            for extra in combinations(optional, r):
                edges = tuple(sorted(forced | set(extra)))
                if not edges:
                    out.append(Certificate())
                    continue
                ends = sorted({x for e in edges for x in e})
                gw = BitWriter()
                gw.write_gamma(len(edges))
                base = len(gw) + 2 * width * len(edges) + width * len(ends)
                fixed = {x: dyn.functions[x] for x in ends if x in near}
                base += sum(len(function_bits(f, q)) for f in fixed.values())
                free = [x for x in ends if x not in near]
                if base > max_bits:
                    continue
                options = _free_options(q, max_bits - base) if free else []
                _fill(out, v, edges, fixed, free, options, max_bits - base, dyn, k)
        return out

    return generate


def _fill(out, v, edges, fixed, free, options, budget, dyn, k):
    def rec(i, funcs, spent):
        if i == len(free):
            cert = BallCertificate(edges, dict(funcs)).encode(dyn.q, dyn.id_max)
            if _cone_check(v, dyn.functions[v], cert.data, cert.bit_length, dyn.q, k,
                           dyn.id_max, SIM_CAP) is None:
                out.append(cert)
            return
        for bits, f in options:
            if spent + bits <= budget:
                funcs[free[i]] = f
                rec(i + 1, funcs, spent + bits)
        funcs.pop(free[i], None)

    rec(0, dict(fixed), 0)


def mutate_assignment(assignment, rng, dyn: Dynamics, k: int):
    """One random perturbation of an honest assignment.

    The classes aim at each condition: edge-list edits (a), single-entry table
    edits (b), a consistent rewrite of one node's function everywhere (c),
    plus swapped certificates and raw bit flips.
    """
    q, id_max = dyn.q, dyn.id_max
    nodes = list(dyn.graph.nodes)
    out = CertificateAssignment(assignment)
    kind = int(rng.integers(0, 6))
    v = nodes[int(rng.integers(0, len(nodes)))]
    if kind == 4:
        u = nodes[int(rng.integers(0, len(nodes)))]
        out[v], out[u] = out[u], out[v]
        return out
    if kind == 5:
        bits = list(out[v].bits())
        if bits:
            bits[int(rng.integers(0, len(bits)))] ^= 1
        else:
            bits = [int(rng.integers(0, 2))]
        out[v] = Certificate.from_bits(bits)
        return out
    ball = BallCertificate.decode(out[v], q, id_max)
    edges = set(ball.edges)
    funcs = dict(ball.functions)
    if kind == 0 and edges:
        edges.discard(sorted(edges)[int(rng.integers(0, len(edges)))])
    elif kind == 1:
        a, b = sorted(rng.choice(np.arange(1, id_max + 1), size=2, replace=False).tolist())
        edges.add((a, b))
    elif kind in (2, 3) and funcs:
        x = sorted(funcs)[int(rng.integers(0, len(funcs)))]
        table = funcs[x].to_table(q)
        entries = table.table.copy()
        i = int(rng.integers(0, entries.size))
        entries[i] = (int(entries[i]) + 1 + int(rng.integers(0, max(q - 1, 1)))) % q
        new = TableFunction(table.arity, entries)
        if kind == 3:
            for u in nodes:
                other = BallCertificate.decode(out[u], q, id_max)
                if x in other.functions:
                    f2 = dict(other.functions)
                    f2[x] = new
                    out[u] = BallCertificate(other.edges, f2).encode(q, id_max)
            return out
        funcs[x] = new
    ends = {x for e in edges for x in e}
    adj = adjacency_from_edges(edges)
    for x in ends - set(funcs):
        d = len(adj[x])
        funcs[x] = TableFunction(d, rng.integers(0, q, q ** (d + 1)))
    funcs = {x: f for x, f in funcs.items() if x in ends}
    out[v] = BallCertificate(tuple(edges), funcs).encode(q, id_max)
    return out
