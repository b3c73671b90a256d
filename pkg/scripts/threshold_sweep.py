#!/usr/bin/env python3
"""Threshold sweep on a synthetic preset: PDE vs identity metrics.

Produces the same table `seltrack sweep` emits, after materializing the
chosen preset, so the extraction-savings/accuracy trade can be inspected
without any real data.
"""

import argparse
import tempfile
from pathlib import Path

from seltrack import cli
from seltrack.synth import PRESETS, generate_to_dir, preset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", default="parade", choices=sorted(PRESETS))
    parser.add_argument("--grid", default="0.0,0.1,0.2,0.3,0.4,0.5")
    parser.add_argument("--out", help="directory for the generated files (default: temp)")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()

    out_dir = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="sweep_"))
    scenario = preset(args.preset, seed=args.seed)
    det_path, feat_path, gt_path = generate_to_dir(scenario, out_dir)
    print(f"scene: {out_dir} ({args.preset})")
    raise SystemExit(
        cli.main(
            [
                "sweep",
                "--det", str(det_path),
                "--features", str(feat_path),
                "--gt", str(gt_path),
                "--iou-th-grid", args.grid,
            ]
        )
    )


if __name__ == "__main__":
    main()
