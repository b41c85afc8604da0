"""Adaptive observer on the pulsed neuron: estimate two conductances.

Runs the contraction check on the extended system, the exact-embedding
control, and the mismatched-estimate run whose CSV traces show the
parameter error decaying. Corner runs over the parameter box are off by
default because they multiply the runtime.
"""

import argparse
import json

from condux.config import config_from_dict
from condux.experiments import run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out")
    ap.add_argument("--horizon", type=float, default=200.0)
    ap.add_argument("--corners", action="store_true")
    args = ap.parse_args()

    cfg = config_from_dict({
        "experiment": "observer",
        "params": {"horizon": args.horizon, "run_corners": args.corners},
    })
    report = run_experiment(cfg, args.out)
    keys = ("contraction_verdict", "contraction_margin", "embedding_deviation",
            "converged_at", "final_theta_error", "tolerance")
    print(json.dumps({k: report[k] for k in keys}, indent=2))
    if args.corners:
        print("corners:", json.dumps(report["corners"], indent=2))


if __name__ == "__main__":
    main()
