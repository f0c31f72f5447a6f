"""Heat mass on exhaustions, the radial-tree series test and the explicit example on Z."""

from lapbc import example4_verify, heat_mass, neumann_mass, radial_tree, radial_tree_criterion

for d in ("3", "n+2", "2^n", "2^(n+2)"):
    rep = heat_mass(radial_tree(d), 1.0, levels=list(range(20, 41)))
    crit = radial_tree_criterion(d)
    print(f"d_n = {d:<8} M_1 -> {rep.limit:.6f} ({rep.verdict}, delta {rep.delta:.2e}); "
          f"series test: {crit.verdict}")

g = radial_tree("2^(n+2)")
print("Neumann mass on the same tree (heuristic):", f"{neumann_mass(g, 1.0, levels=[40]).values[-1]:.9f}")

rep = example4_verify()
print(f"example on Z: lambda = {rep.lam:.10f}, all checks pass: {rep.passed}")
