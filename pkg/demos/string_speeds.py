"""
Which string networks are stable?
=================================

Three strings joined at one end with a damper. Stability depends only on
the ratios of the inverse wave speeds c_k = sqrt(rho_k / T_k).
"""

import math

from phstab import StringNetworkParams, build_string_network, classify_constant_strings
from phstab.spectral import find_imaginary_eigenvalues

# three networks: equal speeds, a doubled first string, a doubled third string
cases = {"(1, 1, 1)": (1, 1, 1), "(2, 1, 1)": (4, 1, 1), "(1, 1, 2)": (1, 1, 4)}

for label, rho in cases.items():
    params = StringNetworkParams(rho=rho, T=(1, 1, 1), beta=1.0)
    exact = classify_constant_strings(params.speeds(), params.length)
    print(f"c = {label}: ratios {exact.ratio_classes}")
    print(f"    asymptotic: {exact.asymptotic_status}, exponential: {exact.exponential_status}")

    # the numerical scan sees the same thing on a finite window
    hits = find_imaginary_eigenvalues(build_string_network(params), 8.0, 4001)
    print("    eigenvalues i*omega on [-8, 8]:",
          [f"{h.omega / math.pi:+.3f} pi" for h in hits] or "none")
    for fam in exact.families:
        print(f"    family from {fam.pair}: odd multiples of {fam.base_omega / math.pi} pi")
