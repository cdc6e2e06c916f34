"""Lower-bound instances reducing set disjointness to bounded-time convergence.

Two families:

* ``build_thm2_graph`` -- the dense graph G(A, B) on ``2n + 4*ceil(log2 n)``
  nodes with 4-state mark/clock dynamics (q = 4, convergence time 2).
* ``build_thm3_instance`` -- two binary decoders glued to a selector and a
  collector tree, with 3-state dynamics in which Error is contagious and
  absorbing (q = 3, maximum degree 3, convergence time 6t).

Node roles are stored on ``Dynamics.roles`` as ``"<group>:<detail>"`` strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .decoder import build_decoder, evaluate_all
from .fsd import (
    DEFAULT_CAP,
    Dynamics,
    Graph,
    StateAlphabet,
    StructuredFunction,
    clog2,
    convergence_times,
    converges_within,
    converges_within_sampled,
    enumerate_configurations,
    register_rule,
)

# --------------------------------------------------------------------------
# pair sets


def pair_set(pairs) -> frozenset:
    """Normalise an iterable of 2-element collections to sorted tuples."""
    out = set()
    for p in pairs:
        i, j = sorted(int(x) for x in p)
        if i == j:
            raise ValueError(f"pair {{{i},{j}}} needs two distinct elements")
        out.add((i, j))
    return frozenset(out)


def parse_pairs(text: str) -> frozenset:
    """``"1,3;3,4"`` -> {(1,3), (3,4)}; the empty string is the empty set."""
    text = text.strip()
    if not text:
        return frozenset()
    return pair_set(tuple(chunk.split(",")) for chunk in text.split(";") if chunk.strip())


def parse_index_set(text: str) -> frozenset:
    text = text.strip()
    return frozenset(int(x) for x in text.split(",") if x.strip()) if text else frozenset()


def _check_pairs(n, pairs):
    for i, j in pairs:
        if not (1 <= i < j <= n):
            raise ValueError(f"pair {{{i},{j}}} outside [{n}]")


# --------------------------------------------------------------------------
# mark/clock dynamics

MARK_CLOCK_NAMES = ("m0c0", "m0c1", "m1c0", "m1c1")


def mc_state(mark, clock):
    return 2 * int(mark) + int(clock)


def mc_split(state):
    return state >> 1, state & 1


def _bit_rule_arity(params):
    return len(params["ports"])


@register_rule("mc.bit", _bit_rule_arity)
def _mc_bit(params, X, q):
    # bit-gadget node: flip the clock iff d1, d2 and d3 all hold; marks are frozen
    labels = [params["self"]] + list(params["ports"])
    marks = X >> 1
    clocks = X & 1
    dcols = [c for c, lab in enumerate(labels) if lab != "v"]
    vcols = [c for c, lab in enumerate(labels) if lab == "v"]
    dclk = clocks[:, dcols]
    d1 = (dclk == dclk[:, :1]).all(axis=1)
    d2 = marks[:, vcols].sum(axis=1) == 2 if vcols else np.zeros(X.shape[0], dtype=bool)
    where = {lab: c for c, lab in enumerate(labels) if lab != "v"}
    d3 = np.ones(X.shape[0], dtype=bool)
    for s in range(1, int(params["ell"]) + 1):
        a, b = where.get(f"A{s}"), where.get(f"B{s}")
        if a is None or b is None:
            d3[:] = False
            break
        d3 &= marks[:, a] == marks[:, b]
    ok = d1 & d2 & d3
    return np.where(ok, X[:, 0] ^ 1, X[:, 0])


def _set_rule_arity(params):
    return len(params["ports"])


@register_rule("mc.set", _set_rule_arity)
def _mc_set(params, X, q):
    # set-gadget node v_i: mark <- v1 and v2 and v3; the clock never changes
    ports = params["ports"]
    half = int(params["half"])
    target = int(params["i"]) - 1
    marks = X >> 1
    vcols = [1 + c for c, lab in enumerate(ports) if lab == "v"]
    dcol = {int(lab[1:]): 1 + c for c, lab in enumerate(ports) if lab != "v"}
    v1 = marks[:, 0] == 1
    v2 = marks[:, vcols].sum(axis=1) == 1 if vcols else np.zeros(X.shape[0], dtype=bool)
    v3 = np.zeros(X.shape[0], dtype=bool)
    for offset in (0, half):
        match = np.ones(X.shape[0], dtype=bool)
        for s in range(half):
            col = dcol.get(offset + s + 1)
            if col is None:
                match[:] = False
                break
            match &= marks[:, col] == ((target >> s) & 1)
        v3 |= match
    ok = v1 & v2 & v3
    return (2 * ok.astype(np.uint8) + (X[:, 0] & 1)).astype(np.uint8)


@dataclass
class Thm2Layout:
    n: int
    ell: int
    va: list
    vb: list
    da: list
    db: list

    @property
    def half(self):
        return self.ell // 2


def thm2_layout(n):
    if n < 2:
        raise ValueError("n must be at least 2")
    ell = 2 * clog2(n)
    base = 0
    va = list(range(base + 1, base + n + 1))
    vb = list(range(n + 1, 2 * n + 1))
    da = list(range(2 * n + 1, 2 * n + ell + 1))
    db = list(range(2 * n + ell + 1, 2 * n + 2 * ell + 1))
    return Thm2Layout(n, ell, va, vb, da, db)


def build_thm2_graph(n: int, A, B) -> Dynamics:
    """G(A, B) with the mark/clock local functions attached."""
    A, B = pair_set(A), pair_set(B)
    _check_pairs(n, A)
    _check_pairs(n, B)
    L = thm2_layout(n)
    edges = []
    for vs, ds, pairs in ((L.va, L.da, A), (L.vb, L.db, B)):
        edges += [(v, d) for v in vs for d in ds]
        edges += [(vs[i - 1], vs[j - 1]) for i, j in sorted(pairs)]
    dall = L.da + L.db
    edges += [(u, w) for a, u in enumerate(dall) for w in dall[a + 1:]]
    g = Graph(range(1, 2 * n + 2 * L.ell + 1), edges, name=f"thm2_n{n}")

    label = {}
    roles = {}
    for side, vs, ds in (("A", L.va, L.da), ("B", L.vb, L.db)):
        for i, v in enumerate(vs, 1):
            roles[v] = f"V{side}:{i}"
        for s, d in enumerate(ds, 1):
            roles[d] = f"D{side}:{s}"
            label[d] = f"{side}{s}"
    funcs = {}
    for v in g.nodes:
        if v in label:
            ports = [label.get(u, "v") for u in g.neighbors(v)]
            funcs[v] = StructuredFunction("mc.bit", {"self": label[v], "ports": ports, "ell": L.ell})
        else:
            side_d = L.da if v in L.va else L.db
            pos = {d: s for s, d in enumerate(side_d, 1)}
            ports = ["v" if u not in pos else f"d{pos[u]}" for u in g.neighbors(v)]
            i = (L.va.index(v) if v in L.va else L.vb.index(v)) + 1
            funcs[v] = StructuredFunction("mc.set", {"i": i, "half": L.half, "ports": ports})
    meta = {"family": "thm2", "n": n, "A": sorted(map(list, A)), "B": sorted(map(list, B))}
    return Dynamics(g, StateAlphabet(4, MARK_CLOCK_NAMES), funcs, roles=roles, meta=meta)


def thm2_witness(n: int, A, B, pair) -> tuple:
    """Period-2 configuration for a pair in A and B."""
    A, B = pair_set(A), pair_set(B)
    i, j = sorted(pair)
    if (i, j) not in A or (i, j) not in B:
        raise ValueError(f"pair {{{i},{j}}} is not in both A and B")
    L = thm2_layout(n)
    x = [0] * (2 * n + 2 * L.ell)
    for vs in (L.va, L.vb):
        x[vs[i - 1] - 1] = mc_state(1, 0)
        x[vs[j - 1] - 1] = mc_state(1, 0)
    for ds in (L.da, L.db):
        for s in range(L.half):
            x[ds[s] - 1] = mc_state(((i - 1) >> s) & 1, 0)
            x[ds[L.half + s] - 1] = mc_state(((j - 1) >> s) & 1, 0)
    return tuple(x)


@dataclass
class ReductionReport:
    disjoint: bool
    converges: bool
    mode: str
    checked: int
    counterexample: Optional[tuple] = None
    max_time: Optional[int] = None

    @property
    def agrees(self):
        return self.disjoint == self.converges


def check_thm2_reduction(n, A, B, mode="auto", samples=10**6, seed=0, cap=DEFAULT_CAP,
                         workers=1) -> ReductionReport:
    """Compare convergence within 2 steps against disjointness of A and B."""
    A, B = pair_set(A), pair_set(B)
    dyn = build_thm2_graph(n, A, B)
    common = sorted(A & B)
    if mode == "auto":
        mode = "exhaustive" if dyn.space_size() <= cap else "sampled"
    if mode == "exhaustive":
        v = converges_within(dyn, 2, cap=cap, workers=workers)
    else:
        targeted = [thm2_witness(n, A, B, common[0])] if common else []
        v = converges_within_sampled(dyn, 2, samples, seed, targeted)
    return ReductionReport(not common, v.holds, mode, v.checked, v.counterexample, v.max_time)


# --------------------------------------------------------------------------
# Error dynamics

FALSE, TRUE, ERROR = 0, 1, 2
TERNARY_NAMES = ("False", "True", "Error")


def _err_mask(X):
    return (X == ERROR).any(axis=1)


@register_rule("err.hold", lambda p: int(p["d"]))
def _err_hold(params, X, q):
    return np.where(_err_mask(X), ERROR, X[:, 0])


@register_rule("err.negate", lambda p: int(p["d"]))
def _err_negate(params, X, q):
    return np.where(_err_mask(X), ERROR, 1 - X[:, 0].astype(np.int64))


@register_rule("err.input", lambda p: len(p["ports"]))
def _err_input(params, X, q):
    scol = 1 + params["ports"].index("s")
    bad = _err_mask(X) | (X[:, 0] != X[:, scol])
    return np.where(bad, ERROR, X[:, 0])


@register_rule("err.gate", lambda p: len(p["ports"]))
def _err_gate(params, X, q):
    incols = [1 + c for c, lab in enumerate(params["ports"]) if lab == "i"]
    ins = X[:, incols]
    op = params["op"]
    if op == "not":
        expect = 1 - ins[:, 0].astype(np.int64)
    elif op == "and":
        expect = ins.min(axis=1)
    else:
        expect = ins.max(axis=1)
    bad = _err_mask(X) | (X[:, 0] != expect)
    if params.get("forbid_true"):
        bad |= X[:, 0] == TRUE
    return np.where(bad, ERROR, X[:, 0])


def index_set(values, t):
    out = frozenset(int(v) for v in values)
    for v in out:
        if not 1 <= v <= 2 ** t:
            raise ValueError(f"index {v} outside [2^{t}]")
    return out


@dataclass
class Thm3Layout:
    t: int
    gates: int
    decoder: object
    selector: list
    collector: list  # non-leaf collector nodes, root first

    def gate_node(self, side, gid):
        return gid if side == "A" else self.gates + gid

    @property
    def root(self):
        return self.collector[0]


def thm3_layout(t, decoder_base="compact"):
    c = build_decoder(t, base=decoder_base)
    m = len(c)
    selector = list(range(2 * m + 1, 2 * m + t + 1))
    inner = 1 if t == 1 else t - 1
    collector = list(range(2 * m + t + 1, 2 * m + t + inner + 1))
    return Thm3Layout(t, m, c, selector, collector)


def _collector_edges(selector, collector):
    t = len(selector)
    if t == 1:
        return [(collector[0], selector[0])]
    # heap layout over 2t-1 positions: 0..t-2 internal (0 = root), t-1..2t-2 leaves
    node = collector + selector
    return [(node[(i - 1) // 2], node[i]) for i in range(1, 2 * t - 1)]


def build_thm3_instance(t: int, A, B, decoder_base: str = "compact", max_t: int = 12) -> Dynamics:
    """Selector, collector tree and two decoders with Error-first local rules.

    ``decoder_base="compact"`` is the default because only that base keeps
    every orbit within 6t steps when A and B are disjoint (see
    ``fsdcert.decoder`` for the two bases).
    """
    if not 1 <= t <= max_t:
        raise ValueError(f"t must be in [1, {max_t}]")
    A, B = index_set(A, t), index_set(B, t)
    L = thm3_layout(t, decoder_base)
    c = L.decoder
    edges = []
    for side in "AB":
        edges += [(L.gate_node(side, a), L.gate_node(side, b)) for a, b in c.edges()]
        edges += [(L.gate_node(side, d), s) for d, s in zip(c.inputs, L.selector)]
    edges += _collector_edges(L.selector, L.collector)
    nodes = range(1, L.collector[-1] + 1)
    g = Graph(nodes, edges, name=f"thm3_t{t}")

    roles, funcs = {}, {}
    out_index = {o: j + 1 for j, o in enumerate(c.outputs)}
    in_index = {d: j + 1 for j, d in enumerate(c.inputs)}
    for side, allowed in (("A", A), ("B", B)):
        for gid, gate in c.gates.items():
            v = L.gate_node(side, gid)
            ins = {L.gate_node(side, i) for i in gate.inputs}
            if gate.kind == "input":
                sel = L.selector[in_index[gid] - 1]
                ports = ["s" if u == sel else "o" for u in g.neighbors(v)]
                funcs[v] = StructuredFunction("err.input", {"ports": ports})
                roles[v] = f"D{side}:input:d{in_index[gid]}"
                continue
            ports = ["i" if u in ins else "o" for u in g.neighbors(v)]
            params = {"op": gate.kind, "ports": ports}
            if gid in out_index:
                i = out_index[gid]
                if i not in allowed:
                    params["forbid_true"] = True
                roles[v] = f"D{side}:output:v{i}"
            else:
                roles[v] = f"D{side}:gate:{gate.kind}"
            funcs[v] = StructuredFunction("err.gate", params)
    for i, s in enumerate(L.selector, 1):
        funcs[s] = StructuredFunction("err.hold", {"d": g.degree(s)})
        roles[s] = f"S:{i}"
    for v in L.collector:
        if v == L.root:
            funcs[v] = StructuredFunction("err.negate", {"d": g.degree(v)})
            roles[v] = "C:root"
        else:
            funcs[v] = StructuredFunction("err.hold", {"d": g.degree(v)})
            roles[v] = "C:internal"
    meta = {"family": "thm3", "t": t, "A": sorted(A), "B": sorted(B), "decoder_base": decoder_base}
    return Dynamics(g, StateAlphabet(3, TERNARY_NAMES), funcs, roles=roles, meta=meta)


def thm3_witness(t: int, A, B, i: int, decoder_base: str = "compact") -> tuple:
    """Error-free configuration whose root oscillates forever when i is in A and B."""
    A, B = index_set(A, t), index_set(B, t)
    if i not in A or i not in B:
        raise ValueError(f"{i} is not in both A and B")
    L = thm3_layout(t, decoder_base)
    bits = [((i - 1) >> j) & 1 for j in range(t)]
    values = evaluate_all(L.decoder, bits)
    x = [FALSE] * L.collector[-1]
    for side in "AB":
        for gid, val in values.items():
            x[L.gate_node(side, gid) - 1] = TRUE if val else FALSE
    for s, b in zip(L.selector, bits):
        x[s - 1] = b
    return tuple(x)


def all_error(dyn: Dynamics) -> tuple:
    return (ERROR,) * dyn.n


def check_thm3_reduction(t, A, B, mode="auto", samples=10**5, seed=0, cap=DEFAULT_CAP,
                         workers=1, decoder_base="compact") -> ReductionReport:
    """Compare convergence within 6t steps against disjointness of A and B.

    Exhaustive mode also records the largest convergence time over the whole
    configuration space (or over the samples in sampled mode).
    """
    A, B = index_set(A, t), index_set(B, t)
    dyn = build_thm3_instance(t, A, B, decoder_base=decoder_base)
    common = sorted(A & B)
    k = 6 * t
    if mode == "auto":
        mode = "exhaustive" if dyn.space_size() <= cap else "sampled"
    if mode == "exhaustive":
        v = converges_within(dyn, k, cap=cap, workers=workers)
        max_time = None
        if v.holds:
            max_time = max_convergence_time(dyn, k)
        return ReductionReport(not common, v.holds, mode, v.checked, v.counterexample, max_time)
    targeted = [thm3_witness(t, A, B, common[0], decoder_base)] if common else []
    v = converges_within_sampled(dyn, k, samples, seed, targeted)
    return ReductionReport(not common, v.holds, mode, v.checked, v.counterexample, v.max_time)


def max_convergence_time(dyn: Dynamics, max_steps: int, chunk: int = 1 << 16) -> int:
    """Largest convergence time over all configurations (-1 if some exceed max_steps)."""
    total = dyn.space_size()
    worst = 0
    for start in range(0, total, chunk):
        X = enumerate_configurations(dyn.n, dyn.q, start, min(total, start + chunk))
        times = convergence_times(dyn, X, max_steps)
        if (times < 0).any():
            return -1
        worst = max(worst, int(times.max()))
    return worst


ROLE_COLORS = {
    "VA": "#f4a6a6", "VB": "#a6c8f4", "DA": "#f7d9a8", "DB": "#b9e4c9",
    "S": "#e6e6e6", "C": "#d9c2f0",
}
