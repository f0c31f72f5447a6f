"""Dirichlet, mixed and Neumann truncations of a ball, and the ordering of their forms."""

import numpy as np

from lapbc import combinatorial_ball, ordering_check, regular_tree, truncate
from lapbc.truncation import DIRICHLET, NEUMANN, BoundaryCondition, inner_boundary

gen = regular_tree(3)
K, halo = combinatorial_ball(gen, None, 2)
TD = truncate(gen, K, halo, DIRICHLET)
TN = truncate(gen, K, halo, NEUMANN)
A = inner_boundary(TD)[:3]
TM = truncate(gen, K, halo, BoundaryCondition.mixed(A))
u = np.random.default_rng(0).standard_normal(TD.n)
print(f"|K| = {TD.n}, boundary vertices = {len(inner_boundary(TD))}")
print(f"q_N(u) = {TN.quadratic_form(u):.6f} <= q_mixed(u) = {TM.quadratic_form(u):.6f}"
      f" <= q_D(u) = {TD.quadratic_form(u):.6f}")
rep = ordering_check(gen, K, halo, samples=200)
print("ordering over 200 samples:", rep.ok, "max violation", rep.max_violation)
