"""Semigroup, resolvent, bottom of the spectrum and the large-time heat kernel."""

import numpy as np

from lapbc import (bottom_of_spectrum, combinatorial_ball, heat_kernel, li_asymptotics, line_z,
                   resolvent_apply, semigroup_apply, truncate)

z = line_z()
K, halo = combinatorial_ball(z, 0, 10)
T = truncate(z, K, halo)
ones = np.ones(T.n)
i0 = T.index[0]
print(f"(e^(-tL) 1)(0) on [-10, 10]: t=1 {semigroup_apply(T, 1.0, ones)[i0]:.6f}, "
      f"t=50 {semigroup_apply(T, 50.0, ones)[i0]:.6f}")
print(f"(G_1 1)(0) = {resolvent_apply(T, 1.0, ones)[i0]:.6f}")
b = bottom_of_spectrum(T)
print(f"E0 = {b.energy:.10f}  (closed form {2 - 2 * np.cos(np.pi / 22):.10f})")
hk = heat_kernel(T, 5.0, 0, 3)
print(f"p_5(0, 3) = {hk.value:.6e} via {hk.method}")
li = li_asymptotics(T, 0, 0, [10.0, 50.0, 200.0])
for t, r, n in zip(li.times, li.log_rate, li.normalized):
    print(f"  t={t:>5g}: log p/t = {r:+.6f} (-E0 = {-li.energy:+.6f}), e^(tE0) p = {n:.8f}")
print(f"  Phi(0)^2 = {li.limit:.8f}")
