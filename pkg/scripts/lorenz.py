"""Sample the Lorenz contraction region and poke the classic attractor.

At the sampling parameters the symmetric part of the Jacobian is checked
against the region inequalities; at the classic chaotic parameters the
orbit finder is expected to come back empty-handed.
"""

import argparse
import json

from condux.config import config_from_dict
from condux.experiments import run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out")
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = config_from_dict({
        "experiment": "lorenz",
        "params": {"samples": args.samples},
        "seed": args.seed,
    })
    report = run_experiment(cfg, args.out)
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
