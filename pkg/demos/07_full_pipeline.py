"""End-to-end run of every stage from the shipped demo config.

Equivalent to ``fpentropy pipeline --config demos/demo_config.json --out <dir>``.
"""

import json
import sys
import tempfile
from pathlib import Path

from fpentropy.cli import run_pipeline

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="fpentropy-demo-"))
manifest = run_pipeline(str(Path(__file__).with_name("demo_config.json")), str(out))
for stage in manifest["stages"]:
    print(f"{stage['name']:<13} {stage['status']:<7} {', '.join(stage['outputs'])}")

plan = json.loads((out / "plan.json").read_text())
print(f"\nphase-3 plan: {len(plan['rounds'])} rounds, {plan['total_clients']} clients")
print((out / "verdicts_ordered.csv").read_text())
print("artifacts in", out)
