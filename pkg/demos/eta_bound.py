"""
A uniform margin for c = (1, 1, 2)
==================================

With sin and cos of omega and 2*omega, the squared margin reduces to the
polynomial 3u^2 - 3u + 1 in u = sin(omega)^2, whose minimum is 1/4.
"""

import math

import numpy as np

from phstab.strings import eta, min_eta

speeds = (1, 1, 2)
w = np.linspace(0, 2 * math.pi, 9)
print("omega / pi   eta^2")
for om, value in zip(w, eta(speeds, w, squared=True)):
    print(f"{om / math.pi:8.3f}   {value:.6f}")

res = min_eta(speeds, 1.0, (0.0, 2 * math.pi), squared=True)
print(f"\ngrid minimum    {res.grid_min:.12f}")
print(f"refined minimum {res.refined_min:.15f} at omega = {res.refined_argmin:.10f}")
print(f"pi/4            {math.pi / 4:.10f}")
