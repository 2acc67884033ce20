"""
Problem files and the command line
==================================

Problems are JSON with expression strings in t and s. This script writes
one, then drives the ``pwvolterra`` command through ``cli.run`` exactly as
the shell would.
"""
import json
import pathlib
import tempfile

from pwvolterra.cli import run
from pwvolterra.grid import read_csv

work = pathlib.Path(tempfile.mkdtemp())

# %%
# A scalar problem with a kernel depending on t and s. f is chosen so that
# x(t) = 1 solves it: int_0^{t/2} (1 + s) ds + int_{t/2}^t 2 ds.
problem = {
    "name": "file-demo", "m": 1, "n": 2, "T": 1.0,
    "kernels": [[["1 + s"]], [["2"]]],
    "alphas": ["0.5*t"],
    "f": ["1.5*t + 0.125*t^2"],
}
path = work / "problem.json"
path.write_text(json.dumps(problem, indent=2))

# %%
# ``analyze`` checks the hypotheses and classifies j = 0..N.
run(["analyze", "--input", str(path), "--N", "2"])

# %%
# ``solve --method auto`` picks the method of steps when |D(0)| < 1.
out = work / "x.csv"
code = run(["solve", "--input", str(path), "--mesh", "512", "-o", str(out),
            "--report", str(work / "run.json")])
print("exit code", code)
g = read_csv(out)
print("max |x - 1| on the mesh:", abs(g.values - 1).max())
print("report:", json.loads((work / "run.json").read_text())["solver"]["method"])
