"""Paired comparison of the genetic engine against pure random sampling.

Both engines get the same simulation budget and the same seed. Prints final
coverage per seed and the coverage curves, generation by generation.

    python3 scripts/ga_vs_random.py --seeds 0 1 2 3
"""

import argparse
from dataclasses import replace
from pathlib import Path

from lawfuzz.cli import load_campaign
from lawfuzz.fuzz import fuzz

ROOT = Path(__file__).resolve().parent.parent


def run(camp, engine, seed):
    cfg = replace(camp["fuzz"], engine=engine, rng_seed=seed)
    return fuzz(camp["spec"].formula, camp["driver"], cfg, camp["sim"], camp["template"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=ROOT / "campaigns" / "law38_aggressive.json")
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3])
    args = ap.parse_args()

    camp = load_campaign(args.config)
    ga_total = rnd_total = wins = 0
    for seed in args.seeds:
        ga, rnd = run(camp, "ga", seed), run(camp, "random", seed)
        g, r = len(ga.covered), len(rnd.covered)
        ga_total, rnd_total, wins = ga_total + g, rnd_total + r, wins + (g > r)
        print(f"seed {seed}: ga {g}  random {r}")
        print("  ga     " + " ".join(str(c["covered"]) for c in ga.curve))
        print("  random " + " ".join(str(c["covered"]) for c in rnd.curve))
    n = len(args.seeds)
    print(f"mean ga {ga_total / n:.2f}  mean random {rnd_total / n:.2f}  strict wins {wins}/{n}")


if __name__ == "__main__":
    main()
