"""
A hand-written system file
==========================

Two coupled transport equations with a reflecting, partially absorbing
boundary, written as a JSON system file and run through the batch CLI.
"""

import json
import os
import tempfile

import numpy as np

from phstab import cli
from phstab.system import HamiltonianDensity, SystemSpec, system_to_dict

# dx/dt = P1 d/dzeta (H x) with P1 = diag(1, -1): one wave moving each way
P0 = np.zeros((2, 2))
P1 = np.diag([1.0, -1.0])
H = HamiltonianDensity([0.0, 0.4, 1.0], [np.diag([1.0, 2.0]), np.diag([3.0, 1.0])])

# at b: (Hx)_1 = 0.5 (Hx)_2, a partial reflection; at a: (Hx)_2 = 0
W_B = np.array([[1.0, -0.5, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0]])
spec = SystemSpec((P0, P1), H, W_B)

workdir = tempfile.mkdtemp()
path = os.path.join(workdir, "transport.json")
with open(path, "w") as fh:
    json.dump(system_to_dict(spec), fh)

report_path = os.path.join(workdir, "report.json")
code = cli.main(["classify", path, "--omega-max", "40", "--grid-points", "8001",
                 "--out-report", report_path, "--out-csv", os.path.join(workdir, "scan.csv")])
with open(report_path) as fh:
    report = json.load(fh)

print("exit status", code)
print("generates:", report["generation"]["generates"],
      " witness:", report["generation"]["witness"])
print("asymptotic:", report["stability"]["asymptotic"]["status"])
print("exponential:", report["stability"]["exponential"]["status"],
      " inf sigma_min:", report["stability"]["exponential"]["inf_sigma_min"])
print("files in", workdir)
