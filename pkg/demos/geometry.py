"""Path metric, rays, boundary values, Cheeger constants and the finite-measure tree."""

from lapbc import (SampledFunction, appendixA_demo, boundary_value, cheeger_bruteforce,
                   lipschitz_check, line_z, path_metric, ray_completeness_probe)
from lapbc.geometry import canonical_ray
from lapbc.graph import cycle_graph, path_graph, weighted_half_line

z = line_z()
print("d(0, 7) on Z:", path_metric(z, 0, 7).value)
steep = weighted_half_line(lambda n: 16.0 ** n, name="steep")
ray = canonical_ray(steep)
probe = ray_completeness_probe(ray, 40)
print(f"half-line with b = 16^n: ray length {probe.lengths[-1]:.15f} -> {probe.verdict}")
u = SampledFunction.from_callable(lambda n: sum(4.0 ** -k for k in range(n + 1)))
print(f"boundary value of sum 4^-k along it: {boundary_value(steep, u, ray).value:.15f}")
u = SampledFunction.from_callable(lambda x: float(min(abs(x), 5)))
print("Lipschitz ratio for min(|x|, 5), pair (0, 10):", f"{lipschitz_check(z, u, [(0, 10)]).max_ratio:.4f}")
for name, g in (("path 6", path_graph(6)), ("cycle 8", cycle_graph(8))):
    r = cheeger_bruteforce(g)
    print(f"Cheeger {name}: alpha = {r.alpha:.6f}, minimizer {r.minimizer}")
rep = appendixA_demo()
print(f"finite-measure tree: m(V) = {rep.mass_partial[-1]:.12f}, Q(1) = {rep.q_of_one}, "
      f"heat mass {rep.heat_mass_verdict}, Neumann mass {rep.neumann_mass_value:.9f}")
