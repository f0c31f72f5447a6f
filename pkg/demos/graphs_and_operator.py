"""Build graphs, validate them, and apply the formal Laplacian."""

from lapbc import SampledFunction, apply_formal, boundedness_report, build_family, validate
from lapbc.graph import Exhaustion, WeightedGraph

g = WeightedGraph.checked([("a", 1.0, 0.0), ("b", 2.0, 0.5), ("c", 1.0, 0.0)],
                          [("a", "b", 1.0), ("b", "c", 3.0)])
print("validation ok:", validate(g).ok)
u = SampledFunction({"a": 1.0, "b": -1.0, "c": 2.0})
for x in g.ids:
    print(f"  (L u)({x}) = {apply_formal(g.generator(), u, x):+.4f}")

for desc in ("line-Z", "regular-tree:k=3", "example4:rho=0.5,A=0.3333333333333333"):
    gen = build_family(desc)
    rep = boundedness_report(gen, Exhaustion.up_to(gen, 6), 6)
    print(f"{desc:<40} sup weighted degree {rep.sup:.4g}  -> {rep.verdict}")
