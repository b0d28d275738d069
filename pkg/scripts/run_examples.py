"""Run every builtin scenario and print a one-line summary of each."""

import argparse
from pathlib import Path

from polyrep.scenario import BUILTINS, load_scenario, run_scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("runs"))
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    for name in BUILTINS:
        result = run_scenario(load_scenario(f"builtin:{name}"), args.out_dir / name, seed=args.seed)
        verdicts = result.report["results"]["verdicts"]
        failed = [k for k, ok in verdicts.items() if not ok] or ["-"]
        print(f"{name:16s} status={result.status}  failed: {', '.join(failed)}")


if __name__ == "__main__":
    main()
