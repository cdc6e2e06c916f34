"""The bounded-degree binary decoder: build, evaluate, audit."""

from fsdcert.decoder import audit_structure, build_decoder, evaluate

c = build_decoder(3)
for value in range(8):
    bits = [bool(value >> j & 1) for j in range(3)]
    print(value, "->", "".join("1" if b else "." for b in evaluate(c, bits)))

for base in ("standard", "compact"):
    a = audit_structure(build_decoder(4, base=base), base)
    print(base, {key: a[key] for key in ("gate_count", "formula_gate_count", "depth", "max_total_degree")})
