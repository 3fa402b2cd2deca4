"""Write the bundled synthetic corpus (2000 sessions, attack fraction 0.683, seed 0)."""

import argparse
from pathlib import Path

from websift.synth import write_trace_file

DEFAULT = Path(__file__).resolve().parents[1] / "data" / "synthetic_2000.csv"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sessions", type=int, default=2000)
    ap.add_argument("--attack-fraction", type=float, default=0.683)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=DEFAULT)
    args = ap.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    rows = write_trace_file(args.out, args.sessions, args.attack_fraction, args.seed)
    print(f"{args.out}: {args.sessions} sessions, {rows} requests")


if __name__ == "__main__":
    main()
