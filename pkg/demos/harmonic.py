"""Boundary value problems, radial solutions of (L + 1)u = 0 and the resolvent gap."""

from lapbc import (bvp_solve, classify_solution, combinatorial_ball, fm_tree, line_z,
                   radial_reduce, radial_solve, radial_tree, resolvent_gap)

z = line_z()
K, halo = combinatorial_ball(z, 0, 5)
u = bvp_solve(z, K, halo, {-6: 1.0, 6: 2.0})
print("BVP on [-5, 5] with u(-6)=1, u(6)=2:", [round(u(x), 4) for x in sorted(K)])

for desc, gen in (("regular 3-tree", radial_tree("3")), ("tree d_n = 2^(n+2)", radial_tree("2^(n+2)"))):
    prof = radial_reduce(gen, depth=40)
    cls = classify_solution(radial_solve(prof), prof)
    print(f"{desc:<20} radial solution: bounded {cls.bounded_evidence}, verdict {cls.verdict}")

gap = resolvent_gap(fm_tree(3, 0.5), levels=30)
print("finite-measure tree: Dirichlet/Neumann resolvent gap sup norms",
      [round(s, 6) for s in gap.sup_norms[-3:]], "evidence", gap.evidence)
