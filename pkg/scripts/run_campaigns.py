"""Run every campaign file under campaigns/ for a few seeds and tabulate coverage.

    python3 scripts/run_campaigns.py --seeds 0 1 2 3 --out runs/
"""

import argparse
import json
from pathlib import Path

from lawfuzz.cli import run_campaign_file

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", type=Path, help="campaign files (default: all of campaigns/)")
    ap.add_argument("--seeds", nargs="+", type=int, default=[0])
    ap.add_argument("--out", type=Path, default=ROOT / "runs")
    args = ap.parse_args()

    configs = args.configs or sorted((ROOT / "campaigns").glob("*.json"))
    rows = []
    for cfg in configs:
        for seed in args.seeds:
            out = args.out / f"{cfg.stem}-seed{seed}"
            r = run_campaign_file(cfg, out, argparse.Namespace(seed=seed))
            rows.append((cfg.stem, seed, r["covered_count"], r["theta_size"], len(r["red_light_crossings"]), r["wall_clock_secs"]))
            print(f"{cfg.stem:<20} seed {seed}: {r['covered_count']}/{r['theta_size']} covered in {r['wall_clock_secs']:.0f}s")

    summary = [dict(zip(("campaign", "seed", "covered", "theta", "red_traces", "secs"), row)) for row in rows]
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")


if __name__ == "__main__":
    main()
