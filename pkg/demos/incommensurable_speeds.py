"""
Irrational speed ratios
=======================

For c = (1, sqrt 2, sqrt 3) there is no eigenvalue on the imaginary axis,
yet the margin eta dips ever closer to zero as omega grows. The network is
stable but not exponentially stable.
"""

import math

from phstab import StringNetworkParams, build_string_network, classify_constant_strings
from phstab.spectral import search_imaginary_axis
from phstab.strings import min_eta_window

params = StringNetworkParams(rho=(1, 2, 3), T=(1, 1, 1), independence_asserted=True)
exact = classify_constant_strings(params.speeds(), params.length)
print("exact:", exact.asymptotic_status, "/", exact.exponential_status)

search = search_imaginary_axis(build_string_network(params), 50.0, 50_001)
print(f"scan on [-50, 50]: {len(search.hits)} eigenvalues, "
      f"smallest sigma_min {min(s for _, s in search.refined):.2e}")

# grid-limited evidence that the infimum of eta is zero
speeds = tuple(float(c) for c in params.speeds())
for omega_max in (1e1, 1e2, 1e3, 1e4, 1e5):
    value, where = min_eta_window(speeds, omega_max)
    print(f"min eta on [0, {omega_max:>8.0f}] = {value:.3e} at omega = {where:.4f}")
