"""Finite-state dynamics on graphs.

A dynamics is a connected simple graph, a state alphabet ``{0..q-1}`` and one
local function per node.  Node ``v`` updates synchronously from the states of
its closed neighbourhood, read as ``(x_v, x_{p_1}, ..., x_{p_d})`` where the
ports ``p_1 < ... < p_d`` are the neighbour ids in ascending order.

Configurations are stored as rows of a ``uint8`` array indexed by node
position (position ``i`` is the ``i``-th smallest id).  Batched evaluation is
the workhorse for every exhaustive check in the package.
"""

from __future__ import annotations

import json
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

DEFAULT_CAP = 2**32
CHUNK = 1 << 16


class MalformedConfiguration(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    """Raised when an exhaustive computation would exceed its budget."""

    def __init__(self, required, cap, what="configurations"):
        self.required = required
        self.cap = cap
        super().__init__(f"{what}: {required} exceeds budget {cap}")


def clog2(x):
    """Ceiling of log2 for positive integers (clog2(1) == 0)."""
    if x < 1:
        raise ValueError("clog2 needs x >= 1")
    return (x - 1).bit_length()


# --------------------------------------------------------------------------
# graphs


class Graph:
    """Simple undirected graph over positive integer ids."""

    def __init__(self, nodes: Iterable[int], edges: Iterable[tuple[int, int]],
                 name: Optional[str] = None, require_connected: bool = True):
        self.nodes = tuple(sorted(set(int(v) for v in nodes)))
        if not self.nodes:
            raise ValueError("graph needs at least one node")
        if self.nodes[0] < 1:
            raise ValueError("node ids must be positive")
        adj = {v: set() for v in self.nodes}
        for u, w in edges:
            u, w = int(u), int(w)
            if u == w:
                raise ValueError(f"self-loop at {u}")
            if u not in adj or w not in adj:
                raise ValueError(f"edge {{{u},{w}}} uses an unknown node")
            if w in adj[u]:
                raise ValueError(f"duplicate edge {{{u},{w}}}")
            adj[u].add(w)
            adj[w].add(u)
        self.adj = {v: tuple(sorted(ns)) for v, ns in adj.items()}
        self.name = name
        self.index = {v: i for i, v in enumerate(self.nodes)}
        if require_connected and not self.is_connected():
            raise ValueError("graph is not connected")

    @property
    def n(self):
        return len(self.nodes)

    def neighbors(self, v):
        """Neighbours of v in port order."""
        return self.adj[v]

    def degree(self, v):
        return len(self.adj[v])

    def max_degree(self):
        return max(len(ns) for ns in self.adj.values())

    def edges(self):
        return sorted((u, w) for u in self.nodes for w in self.adj[u] if u < w)

    def num_edges(self):
        return sum(len(ns) for ns in self.adj.values()) // 2

    def distances(self, source):
        return bfs_distances(self.adj, source)

    def is_connected(self):
        return len(self.distances(self.nodes[0])) == self.n

    def eccentricity(self, v):
        return max(self.distances(v).values())

    def diameter(self):
        return max(self.eccentricity(v) for v in self.nodes)

    def __eq__(self, other):
        return isinstance(other, Graph) and self.nodes == other.nodes and self.adj == other.adj

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges()}, name={self.name!r})"


def bfs_distances(adj, source):
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj.get(u, ()):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def adjacency_from_edges(edges):
    adj = {}
    for u, w in edges:
        adj.setdefault(u, set()).add(w)
        adj.setdefault(w, set()).add(u)
    return {v: tuple(sorted(ns)) for v, ns in adj.items()}


def ball_edges_of(adj, v, p):
    """Edges with an endpoint at distance <= p from v in the graph ``adj``."""
    dist = bfs_distances(adj, v)
    out = set()
    for u, d in dist.items():
        if d <= p:
            for w in adj.get(u, ()):
                out.add((min(u, w), max(u, w)))
    return sorted(out)


def ball_edges(g: Graph, v: int, p: int) -> list[tuple[int, int]]:
    """B_v(p) as a sorted list of ``(min id, max id)`` pairs."""
    if v not in g.index:
        raise KeyError(v)
    if p < 0:
        raise ValueError("radius must be non-negative")
    return ball_edges_of(g.adj, v, p)


def b_max(g: Graph, p: int) -> int:
    return max(len(ball_edges(g, v, p)) for v in g.nodes)


# --------------------------------------------------------------------------
# local functions


@dataclass(frozen=True)
class StateAlphabet:
    q: int
    names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("alphabet needs q >= 1")
        if self.names is not None and len(self.names) != self.q:
            raise ValueError("one display name per state")

    def name(self, s):
        return self.names[s] if self.names else str(s)


def input_index(X, q):
    """Row-major table index of closed-neighbourhood inputs (self most significant)."""
    idx = np.zeros(X.shape[0], dtype=np.int64)
    for j in range(X.shape[1]):
        idx = idx * q + X[:, j]
    return idx


def all_inputs(q, d):
    """Every closed-neighbourhood input for arity d, in table order."""
    width = d + 1
    total = q ** width
    codes = np.arange(total, dtype=np.int64)
    X = np.empty((total, width), dtype=np.uint8)
    for j in range(width - 1, -1, -1):
        X[:, j] = codes % q
        codes //= q
    return X


class LocalFunction:
    """Common interface; ``evaluate_batch`` receives an ``(B, d+1)`` array."""

    form: str
    arity: int

    def evaluate_batch(self, X, q):
        raise NotImplementedError

    def evaluate(self, self_state, neighbor_states, q):
        X = np.array([[self_state, *neighbor_states]], dtype=np.uint8)
        return int(self.evaluate_batch(X, q)[0])

    def to_table(self, q):
        return TableFunction(self.arity, self.evaluate_batch(all_inputs(q, self.arity), q))

    def to_json(self):
        raise NotImplementedError


class TableFunction(LocalFunction):
    form = "table"

    def __init__(self, arity, table):
        self.arity = int(arity)
        self.table = np.asarray(table, dtype=np.uint8).ravel()

    def check(self, q):
        if self.table.size != q ** (self.arity + 1):
            raise ValueError(f"table of arity {self.arity} needs {q ** (self.arity + 1)} entries, "
                             f"got {self.table.size}")
        if self.table.size and int(self.table.max()) >= q:
            raise ValueError("table entry outside the alphabet")

    def evaluate_batch(self, X, q):
        return self.table[input_index(X, q)]

    def to_json(self):
        return {"form": "table", "table": [int(s) for s in self.table]}

    def __eq__(self, other):
        return (isinstance(other, TableFunction) and self.arity == other.arity
                and np.array_equal(self.table, other.table))

    def __hash__(self):
        return hash((self.arity, self.table.tobytes()))

    def __repr__(self):
        return f"TableFunction(arity={self.arity}, size={self.table.size})"


@dataclass(frozen=True)
class Rule:
    name: str
    arity: Callable[[dict], int]
    evaluate: Callable[[dict, np.ndarray, int], np.ndarray]


RULES: dict[str, Rule] = {}


def register_rule(name, arity):
    def deco(fn):
        RULES[name] = Rule(name, arity, fn)
        return fn
    return deco


def _ports_arity(params):
    return len(params["ports"])


def _d_arity(params):
    return int(params["d"])


class StructuredFunction(LocalFunction):
    """A named rule with JSON-serialisable parameters."""

    form = "structured"

    def __init__(self, rule, params=None):
        if rule not in RULES:
            raise KeyError(f"unknown rule {rule!r}")
        self.rule = rule
        self.params = json.loads(json.dumps(params or {}, sort_keys=True))
        self.arity = RULES[rule].arity(self.params)

    def evaluate_batch(self, X, q):
        out = RULES[self.rule].evaluate(self.params, np.asarray(X), q)
        return np.asarray(out, dtype=np.uint8)

    def serialize(self):
        return json.dumps([self.rule, self.params], sort_keys=True,
                          separators=(",", ":")).encode()

    @classmethod
    def deserialize(cls, data):
        rule, params = json.loads(data.decode())
        if not isinstance(rule, str) or not isinstance(params, dict):
            raise ValueError("structured payload must be [rule, params]")
        return cls(rule, params)

    def to_json(self):
        return {"form": "structured", "rule": self.rule, "params": self.params}

    def __eq__(self, other):
        return isinstance(other, StructuredFunction) and self.serialize() == other.serialize()

    def __hash__(self):
        return hash(self.serialize())

    def __repr__(self):
        return f"StructuredFunction({self.rule!r}, {self.params!r})"


def function_from_json(obj, arity=None):
    form = obj.get("form")
    if form == "table":
        table = obj["table"]
        if arity is None:
            raise ValueError("table functions need the node degree")
        return TableFunction(arity, table)
    if form == "structured":
        return StructuredFunction(obj["rule"], obj.get("params", {}))
    raise ValueError(f"unknown function form {form!r}")


# Generic rules used by tests, demos and the CLI.

@register_rule("identity", _d_arity)
def _identity(params, X, q):
    return X[:, 0]


@register_rule("constant", _d_arity)
def _constant(params, X, q):
    return np.full(X.shape[0], int(params["value"]), dtype=np.uint8)


@register_rule("negate", _d_arity)
def _negate(params, X, q):
    return (q - 1 - X[:, 0].astype(np.int64)).astype(np.uint8)


@register_rule("or", _d_arity)
def _or(params, X, q):
    if X.shape[1] == 1:
        return np.zeros(X.shape[0], dtype=np.uint8)
    return X[:, 1:].max(axis=1)


@register_rule("copy", _d_arity)
def _copy(params, X, q):
    return X[:, 1 + int(params["port"])]


def encoded_size_bits(f: LocalFunction, q: int, include_ports: bool = True) -> int:
    """Description length of a local function.

    Tables cost ``q^(d+1) * ceil(log2 q)`` bits plus, when ``include_ports``,
    ``(d+1) * ceil(log2(d+1))`` bits of port identification.  Structured rules
    cost eight bits per byte of their canonical serialisation.
    """
    if isinstance(f, StructuredFunction):
        return 8 * len(f.serialize())
    d = f.arity
    bits = q ** (d + 1) * clog2(q)
    if include_ports:
        bits += (d + 1) * clog2(d + 1)
    return bits


# --------------------------------------------------------------------------
# dynamics


@dataclass
class Dynamics:
    graph: Graph
    alphabet: StateAlphabet
    functions: dict
    id_max: Optional[int] = None
    roles: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = self.graph
        if set(self.functions) != set(g.nodes):
            raise ValueError("need exactly one local function per node")
        for v in g.nodes:
            f = self.functions[v]
            if f.arity != g.degree(v):
                raise ValueError(f"function at node {v} has arity {f.arity}, degree is {g.degree(v)}")
            if isinstance(f, TableFunction):
                f.check(self.alphabet.q)
        if self.id_max is None:
            self.id_max = g.nodes[-1]
        if self.id_max < g.nodes[-1] or self.id_max < g.n:
            raise ValueError("id_max must cover every identifier")
        self._plan = [
            (g.index[v], np.array([g.index[v]] + [g.index[u] for u in g.neighbors(v)], dtype=np.intp),
             self.functions[v])
            for v in g.nodes
        ]

    @property
    def q(self):
        return self.alphabet.q

    @property
    def n(self):
        return self.graph.n

    def space_size(self):
        return self.q ** self.n

    def step_batch(self, X):
        Y = np.empty_like(X)
        for i, cols, f in self._plan:
            Y[:, i] = f.evaluate_batch(X[:, cols], self.q)
        return Y

    def iterate_batch(self, X, steps):
        for _ in range(steps):
            X = self.step_batch(X)
        return X


def _as_rows(dyn, x):
    X = np.asarray(x, dtype=np.int64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != dyn.n:
        raise MalformedConfiguration(f"configuration has {X.shape[1]} entries, graph has {dyn.n} nodes")
    if X.size and (X.min() < 0 or X.max() >= dyn.q):
        raise MalformedConfiguration("state outside the alphabet")
    return X.astype(np.uint8)


def apply_global(dyn: Dynamics, x) -> tuple:
    """One synchronous step; reads all of x before writing the result."""
    return tuple(int(s) for s in dyn.step_batch(_as_rows(dyn, x))[0])


def apply_global_batch(dyn: Dynamics, X) -> np.ndarray:
    return dyn.step_batch(_as_rows(dyn, X))


def is_fixed_point(dyn: Dynamics, x) -> bool:
    return apply_global(dyn, x) == tuple(int(s) for s in _as_rows(dyn, x)[0])


@dataclass
class Orbit:
    configurations: list
    kind: str  # "fixed", "cycle" or "truncated"
    transient: Optional[int] = None
    period: Optional[int] = None

    @property
    def steps(self):
        return len(self.configurations) - 1


def orbit(dyn: Dynamics, x0, max_steps: int) -> Orbit:
    """x^0..x^T, stopping at the first repeated configuration or at max_steps.

    ``transient`` is the first time whose configuration lies on the limit
    cycle and ``period`` its length (1 for a fixed point).
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    x = tuple(int(s) for s in _as_rows(dyn, x0)[0])
    seen = {x: 0}
    configs = [x]
    for t in range(1, max_steps + 2):
        y = apply_global(dyn, x)
        if y in seen:
            start = seen[y]
            period = t - start
            if period == 1:
                return Orbit(configs, "fixed", start, 1)
            return Orbit(configs, "cycle", start, period)
        if t > max_steps:
            break
        seen[y] = t
        configs.append(y)
        x = y
    return Orbit(configs, "truncated")


def enumerate_configurations(n, q, start, stop):
    """Configurations numbered start..stop-1; node position 0 is the least significant digit."""
    codes = np.arange(start, stop, dtype=np.int64)
    X = np.empty((codes.size, n), dtype=np.uint8)
    for i in range(n):
        X[:, i] = codes % q
        codes //= q
    return X


def configuration_code(x, q):
    code = 0
    for s in reversed(list(x)):
        code = code * q + int(s)
    return code


@dataclass
class Verdict:
    """Outcome of a convergence check; truthy when no violation was found."""

    holds: bool
    counterexample: Optional[tuple] = None
    checked: int = 0
    max_time: Optional[int] = None

    def __bool__(self):
        return self.holds


def _first_violation(dyn, X, k):
    Y = dyn.iterate_batch(X, k)
    bad = np.flatnonzero((dyn.step_batch(Y) != Y).any(axis=1))
    return int(bad[0]) if bad.size else None


def converges_within(dyn: Dynamics, k: int, cap: int = DEFAULT_CAP, workers: int = 1,
                     chunk: int = CHUNK) -> Verdict:
    """Exhaustive check that F^(k+1)(x) == F^k(x) for every configuration.

    The configuration space is split into chunks that may be checked by a
    thread pool; the reported counterexample is always the lexicographically
    smallest one, independent of ``workers``.
    """
    total = dyn.space_size()
    if total > cap:
        raise BudgetExceeded(total, cap)
    starts = list(range(0, total, chunk))

    def run(start):
        X = enumerate_configurations(dyn.n, dyn.q, start, min(total, start + chunk))
        i = _first_violation(dyn, X, k)
        return None if i is None else tuple(int(s) for s in X[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = []
        for s in starts:
            results.append(run(s))
            if results[-1] is not None:
                break
    for r in results:
        if r is not None:
            return Verdict(False, r, total)
    return Verdict(True, None, total)


def convergence_times(dyn: Dynamics, X, max_steps: int) -> np.ndarray:
    """Per row, the first t <= max_steps with x^t a fixed point, else -1."""
    X = _as_rows(dyn, X)
    times = np.full(X.shape[0], -1, dtype=np.int64)
    for t in range(max_steps + 1):
        Y = dyn.step_batch(X)
        fixed = (Y == X).all(axis=1) & (times < 0)
        times[fixed] = t
        if (times >= 0).all():
            break
        X = Y
    return times


def random_configurations(n, q, count, rng):
    return rng.integers(0, q, size=(count, n), dtype=np.uint8)


def converges_within_sampled(dyn: Dynamics, k: int, samples: int, seed: int,
                             targeted: Iterable = (), chunk: int = CHUNK) -> Verdict:
    """Seeded random search for a violation; targeted configurations go first."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    targeted = [tuple(int(s) for s in _as_rows(dyn, x)[0]) for x in targeted]
    if targeted:
        X = _as_rows(dyn, targeted)
        i = _first_violation(dyn, X, k)
        if i is not None:
            return Verdict(False, targeted[i], i + 1)
    rng = np.random.default_rng(seed)
    checked = len(targeted)
    max_time = 0
    for start in range(0, samples, chunk):
        X = random_configurations(dyn.n, dyn.q, min(chunk, samples - start), rng)
        times = convergence_times(dyn, X, k)
        bad = np.flatnonzero(times < 0)
        if bad.size:
            return Verdict(False, tuple(int(s) for s in X[bad[0]]), checked + int(bad[0]) + 1)
        max_time = max(max_time, int(times.max()))
        checked += X.shape[0]
    return Verdict(True, None, checked, max_time)


# --------------------------------------------------------------------------
# instance files


def dynamics_to_dict(dyn: Dynamics) -> dict:
    g = dyn.graph
    out = {
        "q": dyn.q,
        "nodes": list(g.nodes),
        "edges": [list(e) for e in g.edges()],
        "functions": {str(v): dyn.functions[v].to_json() for v in g.nodes},
    }
    if dyn.id_max != g.nodes[-1]:
        out["id_max"] = dyn.id_max
    if g.name:
        out["name"] = g.name
    if dyn.alphabet.names:
        out["state_names"] = list(dyn.alphabet.names)
    if dyn.roles:
        out["roles"] = {str(v): dyn.roles[v] for v in sorted(dyn.roles)}
    if dyn.meta:
        out["meta"] = dyn.meta
    return out


def dumps_instance(dyn: Dynamics) -> str:
    """Canonical JSON: equal instances produce identical text."""
    return json.dumps(dynamics_to_dict(dyn), sort_keys=True, separators=(",", ":"))


def dynamics_from_dict(obj: dict) -> Dynamics:
    g = Graph(obj["nodes"], obj["edges"], name=obj.get("name"))
    funcs = {}
    for key, spec in obj["functions"].items():
        v = int(key)
        funcs[v] = function_from_json(spec, arity=g.degree(v))
    names = obj.get("state_names")
    roles = {int(k): v for k, v in obj.get("roles", {}).items()}
    return Dynamics(g, StateAlphabet(int(obj["q"]), tuple(names) if names else None), funcs,
                    id_max=obj.get("id_max"), roles=roles, meta=obj.get("meta", {}))


def loads_instance(text: str) -> Dynamics:
    return dynamics_from_dict(json.loads(text))


def to_dot(g: Graph, roles: Optional[dict] = None, colors: Optional[dict] = None) -> str:
    """DOT text; role tags become node attributes, optionally coloured by role group."""
    roles = roles or {}
    lines = [f'graph "{g.name or "G"}" {{']
    for v in g.nodes:
        attrs = [f'label="{v}"']
        role = roles.get(v)
        if role is not None:
            attrs.append(f'role="{role}"')
            group = role.split(":")[0]
            if colors and group in colors:
                attrs.append(f'style=filled fillcolor="{colors[group]}"')
        lines.append(f"  {v} [{' '.join(attrs)}];")
    for u, w in g.edges():
        lines.append(f"  {u} -- {w};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def table_dynamics(g: Graph, q: int, tables: dict, **kw) -> Dynamics:
    funcs = {v: TableFunction(g.degree(v), tables[v]) for v in g.nodes}
    return Dynamics(g, StateAlphabet(q), funcs, **kw)


def structured_dynamics(g: Graph, q: int, rule: str, **params) -> Dynamics:
    """Same named rule at every node; ``d`` is filled in per node."""
    funcs = {v: StructuredFunction(rule, {"d": g.degree(v), **params}) for v in g.nodes}
    return Dynamics(g, StateAlphabet(q), funcs)


def random_connected_graph(n, rng, p=0.5):
    """Random spanning tree plus independent extra edges with probability p."""
    nodes = list(range(1, n + 1))
    order = rng.permutation(nodes).tolist()
    edges = set()
    for i in range(1, n):
        u = order[i]
        w = order[int(rng.integers(0, i))]
        edges.add((min(u, w), max(u, w)))
    for u in nodes:
        for w in nodes:
            if u < w and (u, w) not in edges and rng.random() < p:
                edges.add((u, w))
    return Graph(nodes, sorted(edges))


def random_table_dynamics(n, q, rng, p=0.5, bias=None):
    """Random connected graph with uniformly random tables.

    ``bias`` in [0, 1] is the probability that a table entry keeps the node's
    own state, which skews the corpus toward quickly converging dynamics.
    """
    g = random_connected_graph(n, rng, p)
    tables = {}
    for v in g.nodes:
        d = g.degree(v)
        t = rng.integers(0, q, size=q ** (d + 1))
        if bias is not None:
            own = all_inputs(q, d)[:, 0]
            keep = rng.random(t.size) < bias
            t = np.where(keep, own, t)
        tables[v] = t
    return table_dynamics(g, q, tables)
