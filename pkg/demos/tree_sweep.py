"""How many trees does RF-SOM need? A quick sweep on Sonar.

Runs 10-fold cross-validation for a few forest sizes with one seed (the
acceptance suite uses three) and plots RF and RF-SOM accuracy against T.

    python3 demos/tree_sweep.py [out_dir]
"""

import sys
from dataclasses import replace
from pathlib import Path

from forestmap.cli import build_parser, config_from_options, merged_options
from forestmap.experiment import run_tree_sweep, sweep_text

ROOT = Path(__file__).resolve().parents[1]
out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")

args = build_parser().parse_args(["sweep", "--config", str(ROOT / "configs" / "sonar.json")])
config = replace(config_from_options(merged_options(args)), seeds=(0,), out=str(out))
sweep = run_tree_sweep(config, [10, 50, 200])
print(sweep_text(sweep), end="")
print("wrote", out / "sonar_sweep.svg")
