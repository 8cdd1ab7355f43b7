"""
The command line pipeline
=========================

The ``eptrack`` command chains crossing detection, cluster resolution,
propagation, oracle validation and plotting, and writes everything to one
directory.  Here it is driven from Python through ``main``.
"""

import json
import tempfile
from pathlib import Path

from eptrack.cli import main

out = Path(tempfile.mkdtemp()) / "n7_odd"

main(["crossings", "--n", "7", "--parity", "odd", "--out", str(out)])
code = main(["run", "--n", "7", "--parity", "odd", "--grid", "20000", "--out", str(out)])
print("exit status:", code)

for p in sorted(out.rglob("*")):
    if p.is_file():
        print("  ", p.relative_to(out))

val = json.loads((out / "validation.json").read_text())
worst = max(c["discrepancy"] for v in val["clusters"] for c in v["checkpoints"])
print("largest oracle discrepancy:", worst)

main(["report", str(out)])
