import json
import sys
import time
from pathlib import Path

from semiflex.cli import main
from semiflex.data import Table

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/figures")
print(f"{out = }")

runs = {
    "fig1": ["trajectories", "--preset", "fig1", "--paths", "1"],
    "fig2": ["trajectories", "--preset", "fig2", "--paths", "1"],
    "super": ["phase-scan", "--N", "64..1024", "--kappa-rule", "N^3"],
    "critical": ["phase-scan", "--N", "64..1024", "--kappa-rule", "2*N^2"],
    "sub": ["phase-scan", "--N", "64..1024", "--kappa-rule", "N^0.5"],
}

summary = {}
for name, argv in runs.items():
    print(f"{name}: {' '.join(argv)}...")
    tic = time.time()
    code = main(argv + ["--out", str(out / name)])
    toc = time.time()
    print(f"took {toc - tic:.2f} s.")
    if code != 0:
        sys.exit(code)

    for path in sorted((out / name).glob("*.csv")):
        table = Table.load(path)
        if argv[0] == "trajectories":
            meta = table.metadata
            print(f"  kappa = {meta['kappa']:.4g}, regime = {meta['regime']}, sd = {meta['terminal_sd']:.4g}")
        else:
            summary[name] = table.df["ratio"].round(4).tolist()

print(f"ratio to the limit = {json.dumps(summary, indent=2)}")
