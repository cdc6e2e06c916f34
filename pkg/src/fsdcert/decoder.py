"""Bounded-degree binary decoders built from duplicators and expanders.

Gates are numbered by a construction-order counter, so building the same
circuit twice yields identical ids.  Replication gates are one-input ``or``
gates and negations are ``not`` gates.

Two base cases are supported for the recursion:

``"standard"``
    C_1 is an input gate wired to a separate expander input gate, which feeds
    the negation and the replication output (4 gates).  Gate counts then match
    ``(8t - 3) 2^(t-1) - t`` exactly and the depth is ``3t - 1``.
``"compact"``
    The expander reads the input gate directly (3 gates).  Every level above
    the base is identical, so the count is ``2^(t-1)`` lower and the depth is
    ``3t - 2``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

MAX_T = 12
BASES = ("standard", "compact")


@dataclass
class Gate:
    id: int
    kind: str  # "input", "and", "or", "not"
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    role: str = "internal"
    label: str = ""


class Circuit:
    def __init__(self):
        self.gates: dict[int, Gate] = {}
        self.inputs: list[int] = []
        self.outputs: list[int] = []
        self._next = 1

    def add(self, kind, inputs=(), label=""):
        g = Gate(self._next, kind, list(inputs), label=label)
        self._next += 1
        arity = len(g.inputs)
        if kind == "input" and arity:
            raise ValueError("input gates have no inputs")
        if kind == "not" and arity != 1:
            raise ValueError("not gates have exactly one input")
        if kind in ("and", "or") and arity not in (1, 2):
            raise ValueError(f"{kind} gates have one or two inputs")
        for i in g.inputs:
            self.gates[i].outputs.append(g.id)
        self.gates[g.id] = g
        return g.id

    def __len__(self):
        return len(self.gates)

    @property
    def t(self):
        return len(self.inputs)

    def edges(self):
        return [(i, g.id) for g in self.gates.values() for i in g.inputs]

    def topological_order(self):
        indeg = {gid: len(g.inputs) for gid, g in self.gates.items()}
        queue = deque(sorted(gid for gid, d in indeg.items() if d == 0))
        order = []
        while queue:
            gid = queue.popleft()
            order.append(gid)
            for o in self.gates[gid].outputs:
                indeg[o] -= 1
                if indeg[o] == 0:
                    queue.append(o)
        if len(order) != len(self.gates):
            raise ValueError("circuit has a cycle")
        return order

    def to_dict(self):
        return {
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "gates": [
                {"id": g.id, "kind": g.kind, "inputs": list(g.inputs), "role": g.role,
                 "label": g.label}
                for g in sorted(self.gates.values(), key=lambda g: g.id)
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_dot(self):
        shape = {"input": "box", "and": "invtriangle", "or": "ellipse", "not": "diamond"}
        lines = ["digraph C {"]
        for g in sorted(self.gates.values(), key=lambda g: g.id):
            label = g.label or f"{g.kind}{g.id}"
            lines.append(f'  {g.id} [label="{label}" kind="{g.kind}" role="{g.role}" '
                         f'shape={shape[g.kind]}];')
        for a, b in self.edges():
            lines.append(f"  {a} -> {b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _replicate(c, root, width):
    """Hang a binary tree of 2-duplicators under ``root``; returns the leaves in order."""
    level = [root]
    while len(level) < width:
        nxt = []
        for g in level:
            nxt.append(c.add("or", [g]))
            nxt.append(c.add("or", [g]))
        level = nxt
    return level


def build_duplicator(width: int) -> Circuit:
    """One input and ``width`` replicated outputs (``2 * width - 1`` gates)."""
    if width < 1 or width & (width - 1):
        raise ValueError("duplicator width must be a power of two")
    c = Circuit()
    root = c.add("input", label="in")
    c.inputs = [root]
    c.outputs = _replicate(c, root, width)
    c.gates[root].role = "input"
    for o in c.outputs:
        c.gates[o].role = "output"
    return c


def build_expander() -> Circuit:
    c = Circuit()
    root = c.add("input", label="in")
    c.inputs = [root]
    c.outputs = [c.add("not", [root]), c.add("or", [root])]
    c.gates[root].role = "input"
    for o in c.outputs:
        c.gates[o].role = "output"
    return c


def _decoder(c, t, ins, base):
    # ins[i] plays the role of in_t(d_{i+1}); returns the 2^t output gates.
    if t == 1:
        src = c.add("or", [ins[0]]) if base == "standard" else ins[0]
        return [c.add("not", [src]), c.add("or", [src])]
    first = [c.add("or", [ins[i]]) for i in range(t - 1)]
    second = [c.add("or", [ins[i]]) for i in range(t - 1)]
    out1 = _decoder(c, t - 1, first, base)
    out2 = _decoder(c, t - 1, second, base)
    neg = c.add("not", [ins[t - 1]])
    pos = c.add("or", [ins[t - 1]])
    half = 1 << (t - 1)
    u1 = _replicate(c, neg, half)
    u2 = _replicate(c, pos, half)
    outs = []
    for left, right in ((out1, u1), (out2, u2)):
        for a, b in zip(left, right):
            conj = c.add("and", [a, b])
            outs.append(c.add("or", [conj]))
    return outs


def build_decoder(t: int, base: str = "standard", max_t: int = MAX_T) -> Circuit:
    """The binary decoder C_t; input d_1 is the least significant bit."""
    if not 1 <= t <= max_t:
        raise ValueError(f"t must be in [1, {max_t}]")
    if base not in BASES:
        raise ValueError(f"base must be one of {BASES}")
    c = Circuit()
    c.inputs = [c.add("input", label=f"d{i + 1}") for i in range(t)]
    c.outputs = _decoder(c, t, c.inputs, base)
    for i in c.inputs:
        c.gates[i].role = "input"
    for j, o in enumerate(c.outputs):
        c.gates[o].role = "output"
        c.gates[o].label = f"v{j + 1}"
    return c


def evaluate(c: Circuit, inputs) -> list:
    """Values of the output gates for an assignment of the input gates."""
    values = evaluate_all(c, inputs)
    return [values[o] for o in c.outputs]


def evaluate_all(c: Circuit, inputs) -> dict:
    """Value of every gate, keyed by gate id."""
    if len(inputs) != len(c.inputs):
        raise ValueError(f"expected {len(c.inputs)} inputs")
    values = dict(zip(c.inputs, (bool(b) for b in inputs)))
    for gid in c.topological_order():
        g = c.gates[gid]
        if g.kind == "input":
            continue
        args = [values[i] for i in g.inputs]
        if g.kind == "not":
            values[gid] = not args[0]
        elif g.kind == "and":
            values[gid] = all(args)
        else:
            values[gid] = any(args)
    return values


def one_hot_reference(bits) -> list:
    """Direct definition: output i (1-based) is hot iff the bits encode i - 1."""
    value = sum(1 << j for j, b in enumerate(bits) if b)
    return [i == value for i in range(1 << len(bits))]


def formula_gate_count(t):
    return (8 * t - 3) * 2 ** (t - 1) - t


def recursion_gate_count(t, base="standard"):
    count = 4 if base == "standard" else 3
    for s in range(1, t):
        # two copies, s+1 inputs, two 2^s-duplicators rooted at the expander
        # outputs, 2^(s+1) conjunctions and their duplicates
        count = 2 * count + (s + 1) + 2 * (2 ** (s + 1) - 1) + 2 * 2 ** (s + 1)
    return count


def depth(c: Circuit) -> int:
    longest = {}
    for gid in c.topological_order():
        g = c.gates[gid]
        longest[gid] = 0 if not g.inputs else 1 + max(longest[i] for i in g.inputs)
    return max(longest[o] for o in c.outputs)


def audit_structure(c: Circuit, base: str = "standard") -> dict:
    """Measured structure next to the closed-form gate count and depth bound."""
    t = c.t
    total = {gid: len(g.inputs) + len(g.outputs) for gid, g in c.gates.items()}
    report = {
        "t": t,
        "base": base,
        "gate_count": len(c),
        "formula_gate_count": formula_gate_count(t),
        "gate_count_delta": len(c) - formula_gate_count(t),
        "max_total_degree": max(total.values()),
        "max_input_out_degree": max(len(c.gates[i].outputs) for i in c.inputs),
        "max_output_in_degree": max(len(c.gates[o].inputs) for o in c.outputs),
        "max_output_out_degree": max(len(c.gates[o].outputs) for o in c.outputs),
        "depth": depth(c),
        "depth_bound": 3 * t,
    }
    report["condition_1"] = report["max_total_degree"] <= 3
    report["condition_2"] = report["max_input_out_degree"] <= 2
    report["condition_3"] = report["max_output_in_degree"] <= 2
    report["depth_ok"] = report["depth"] <= 3 * t
    report["count_matches_formula"] = report["gate_count_delta"] == 0
    return report
